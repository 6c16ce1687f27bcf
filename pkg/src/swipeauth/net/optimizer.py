"""Adam with bias correction; learning rate stays constant across steps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError


@dataclass
class AdamState:
    """First/second moment estimates per tensor plus the step counter."""

    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(state: AdamState, params, grads: dict[str, np.ndarray], config):
    """One in-place update of every named tensor.

    params is a list of (name, array) pairs (arrays updated in place);
    grads maps the same names to gradients. config supplies learning_rate,
    beta1, beta2, epsilon. A non-finite gradient aborts the step before any
    tensor is touched.
    """
    for name, _ in params:
        if not np.all(np.isfinite(grads[name])):
            raise NumericError(f"non-finite gradient for {name}", stage=name)

    state.t += 1
    b1, b2 = config.beta1, config.beta2
    bc1 = 1.0 - b1 ** state.t
    bc2 = 1.0 - b2 ** state.t
    for name, arr in params:
        g = grads[name]
        m = state.m.setdefault(name, np.zeros_like(arr))
        v = state.v.setdefault(name, np.zeros_like(arr))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        arr -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
    return state, params
