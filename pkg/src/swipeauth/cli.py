"""Command-line entry points for the full pipeline.

Commands: synth, extract, train, enroll, verify, eval, baseline, serve.
Every command is deterministic given its config and seed; reports and
dumps are byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baseline import DEFAULT_C, DEFAULT_GAMMA, SvmBaselineScorer
from .dataio import export_dataset, load_dataset, split_users, synth_generate
from .errors import ConfigError, SwipeAuthError
from .net.params import load_checkpoint, save_checkpoint
from .net.train import TrainConfig
from .net.train import train as train_model
from .serving import (
    GalleryStore,
    embed_payload,
    read_default_threshold,
    write_sidecar,
)
from .touchcore import build_feature_matrix, normalize_sequence
from .verify import EmbeddingScorer, evaluate_protocol, verify as verify_probe, write_score_dump

REPORT_HEADER = "G,eer,genuine_count,impostor_count"


@dataclass
class RunConfig:
    """Parsed command invocation; validated per command."""

    command: str
    manifest: Path | None = None
    checkpoint: Path | None = None
    out_dir: Path | None = None
    gallery_dir: Path | None = None
    payloads: list[Path] = field(default_factory=list)
    gallery_sizes: list[int] = field(default_factory=list)
    users: int = 60
    swipes_per_user: int = 10
    train_fraction: float = 0.7
    seed: int = 7
    deterministic: bool = True
    threshold: float | None = None
    svm_c: float = DEFAULT_C
    svm_gamma: float = DEFAULT_GAMMA
    grid: bool = False
    port: int = 8000
    host: str = "127.0.0.1"
    train_overrides: dict = field(default_factory=dict)

    def require(self, *names) -> None:
        for name in names:
            if getattr(self, name) in (None, []):
                raise ConfigError(f"{self.command}: --{name.replace('_', '-')} is required")
        if any(g < 1 for g in self.gallery_sizes):
            raise ConfigError("gallery sizes must be >= 1")


def _train_config(cfg: RunConfig) -> TrainConfig:
    tc = TrainConfig(seed=cfg.seed, **cfg.train_overrides)
    tc.validate()
    return tc


def cmd_synth(cfg: RunConfig) -> int:
    cfg.require("out_dir")
    ds = synth_generate(cfg.users, cfg.swipes_per_user, seed=cfg.seed)
    manifest = export_dataset(ds, cfg.out_dir)
    print(f"wrote {ds.n_swipes()} swipes for {len(ds.user_ids())} users "
          f"to {manifest}")
    return 0


def cmd_extract(cfg: RunConfig) -> int:
    cfg.require("manifest", "out_dir")
    ds, report = load_dataset(cfg.manifest)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    mats, lines = [], ["row,user_id,probe_id,valid_length"]
    row = 0
    for uid in ds.user_ids():
        for pid, seq in ds.user_swipes(uid):
            fm = build_feature_matrix(normalize_sequence(seq))
            mats.append(fm.values)
            lines.append(f"{row},{uid},{pid},{fm.valid_length}")
            row += 1
    np.save(out / "features.npy", np.stack(mats))
    (out / "index.csv").write_text("\n".join(lines) + "\n")
    print(f"extracted {row} feature matrices "
          f"({report.dropped} swipes dropped on import)")
    return 0


def cmd_train(cfg: RunConfig) -> int:
    cfg.require("manifest", "checkpoint")
    ds, report = load_dataset(cfg.manifest)
    if report.dropped:
        print(f"import dropped {report.dropped} swipes: {report.reasons}",
              file=sys.stderr)
    train_ds, test_ds = split_users(ds, cfg.train_fraction, seed=cfg.seed)
    tc = _train_config(cfg)
    result = train_model(train_ds, tc)
    means = result.epoch_mean_losses()
    for i, m in enumerate(means):
        print(f"epoch {i + 1}/{tc.epochs}: mean batch loss {m:.6f}")
    meta = {
        "train_user_ids": train_ds.user_ids(),
        "test_user_ids": test_ds.user_ids(),
        "split_seed": cfg.seed,
        "train_fraction": cfg.train_fraction,
        "dataset_provenance": {"source": ds.provenance.source,
                               "seed": ds.provenance.seed},
    }
    save_checkpoint(cfg.checkpoint, result.params, config=tc, meta=meta)
    print(f"saved checkpoint to {cfg.checkpoint}")
    return 0


def _load_eval_inputs(cfg: RunConfig):
    ds, _ = load_dataset(cfg.manifest)
    model, config, meta = load_checkpoint(cfg.checkpoint)
    train_ids = set(meta.get("train_user_ids", []))
    test_ids = [u for u in ds.user_ids() if u not in train_ids]
    if not test_ids:
        raise ConfigError(
            "open-set violation: every manifest user appears in the "
            "checkpoint's training split")
    return ds, model, config, meta, ds.subset(test_ids), train_ids


def _write_report(out_dir: Path, prefix: str, result) -> Path:
    lines = [REPORT_HEADER]
    for g in sorted(result.eer_by_g):
        s = result.scores_by_g[g]
        lines.append(f"{g},{repr(result.eer_by_g[g])},"
                     f"{len(s.genuine)},{len(s.impostor)}")
    path = out_dir / f"{prefix}report.csv"
    path.write_text("\n".join(lines) + "\n")
    return path


def cmd_eval(cfg: RunConfig) -> int:
    cfg.require("manifest", "checkpoint", "out_dir", "gallery_sizes")
    _, model, _, _, test_ds, _ = _load_eval_inputs(cfg)
    result = evaluate_protocol(test_ds, EmbeddingScorer(model), cfg.gallery_sizes)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = _write_report(out, "", result)
    write_score_dump(out / "scores.csv", result.rows)
    write_sidecar(cfg.checkpoint, result.eer_by_g, result.threshold_by_g)
    for g in sorted(result.eer_by_g):
        print(f"G={g}: EER={result.eer_by_g[g]:.4f} "
              f"threshold={result.threshold_by_g[g]:.6f}")
    print(f"report: {report}")
    return 0


def cmd_baseline(cfg: RunConfig) -> int:
    cfg.require("manifest", "out_dir", "gallery_sizes")
    if cfg.checkpoint is not None:
        ds, _, _, _, test_ds, train_ids = _load_eval_inputs(cfg)
        train_ds = ds.subset(sorted(train_ids & set(ds.user_ids())))
        if not train_ds.users:
            raise ConfigError("no training-split users present for the "
                              "impostor pool")
    else:
        ds, _ = load_dataset(cfg.manifest)
        train_ds, test_ds = split_users(ds, cfg.train_fraction, seed=cfg.seed)

    c, gamma = cfg.svm_c, cfg.svm_gamma
    if cfg.grid:
        c, gamma = _grid_search(train_ds, cfg)
        print(f"grid search picked C={c} gamma={gamma:.6f}")
    scorer = SvmBaselineScorer(train_ds, C=c, gamma=gamma)
    result = evaluate_protocol(test_ds, scorer, cfg.gallery_sizes)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = _write_report(out, "baseline_", result)
    write_score_dump(out / "baseline_scores.csv", result.rows)
    for g in sorted(result.eer_by_g):
        print(f"G={g}: EER={result.eer_by_g[g]:.4f}")
    print(f"report: {report}")
    return 0


def _grid_search(train_ds, cfg: RunConfig) -> tuple[float, float]:
    """Pick (C, gamma) by EER on the training split at a small gallery size."""
    g_probe = min(3, min(len(train_ds.user_swipes(u))
                         for u in train_ds.user_ids()) - 1)
    best = None
    for c in (1.0, 10.0, 100.0):
        for gamma in (DEFAULT_GAMMA / 2, DEFAULT_GAMMA, DEFAULT_GAMMA * 2):
            scorer = SvmBaselineScorer(train_ds, C=c, gamma=gamma)
            eer = evaluate_protocol(train_ds, scorer, [g_probe]).eer_by_g[g_probe]
            if best is None or eer < best[0]:
                best = (eer, c, gamma)
    return best[1], best[2]


def _read_payload(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc


def cmd_enroll(cfg: RunConfig) -> int:
    cfg.require("checkpoint", "gallery_dir", "payloads")
    model, _, _ = load_checkpoint(cfg.checkpoint)
    store = GalleryStore(cfg.gallery_dir)
    size, user_id = 0, None
    for path in cfg.payloads:
        payload = _read_payload(path)
        embedding = embed_payload(model, payload)
        user_id = payload["user_id"]
        size = store.append(user_id, embedding, model.version)
    print(json.dumps({"user_id": user_id, "gallery_size": size}))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    cfg.require("checkpoint", "gallery_dir", "payloads")
    model, config, _ = load_checkpoint(cfg.checkpoint)
    store = GalleryStore(cfg.gallery_dir)
    payload = _read_payload(cfg.payloads[0])
    embedding = embed_payload(model, payload)
    gallery = store.load(payload["user_id"])
    if gallery is None:
        print(f"user {payload['user_id']} not enrolled", file=sys.stderr)
        return 3
    margin = float(config["margin"]) if config and "margin" in config else 1.5
    threshold = (cfg.threshold if cfg.threshold is not None
                 else read_default_threshold(cfg.checkpoint, margin))
    decision = verify_probe(gallery, embedding, threshold)
    print(json.dumps({"user_id": payload["user_id"], "score": decision.score,
                      "accept": decision.accept,
                      "threshold": decision.threshold}))
    return 0


def cmd_serve(cfg: RunConfig) -> int:
    cfg.require("checkpoint", "gallery_dir")
    import uvicorn

    from .service import create_app
    app = create_app(cfg.checkpoint, cfg.gallery_dir,
                     threshold_override=cfg.threshold)
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "train": cmd_train,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "enroll": cmd_enroll,
    "verify": cmd_verify,
    "serve": cmd_serve,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swipeauth",
                                description="Touch-swipe authentication pipeline")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *, manifest=False, checkpoint=False, out=False,
               gallery=False, payloads=False, gsizes=False):
        if manifest:
            sp.add_argument("--manifest", type=Path)
        if checkpoint:
            sp.add_argument("--checkpoint", type=Path)
        if out:
            sp.add_argument("--out-dir", type=Path)
        if gallery:
            sp.add_argument("--gallery-dir", type=Path)
        if payloads:
            sp.add_argument("--payload", type=Path, action="append",
                            dest="payloads", default=[])
        if gsizes:
            sp.add_argument("--gallery-sizes", type=str, default="1,2,3,4,5,6")
        sp.add_argument("--seed", type=int, default=7)
        sp.add_argument("--deterministic", action="store_true", default=True)

    sp = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    sp.add_argument("--users", type=int, default=60)
    sp.add_argument("--swipes-per-user", type=int, default=10)
    common(sp, out=True)

    sp = sub.add_parser("extract", help="featurize a dataset to .npy + index")
    common(sp, manifest=True, out=True)

    sp = sub.add_parser("train", help="train the embedding network")
    common(sp, manifest=True, checkpoint=True)
    sp.add_argument("--train-fraction", type=float, default=0.7)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--batches-per-epoch", type=int)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--learning-rate", type=float)
    sp.add_argument("--margin", type=float)
    sp.add_argument("--dropout", type=float)
    sp.add_argument("--recurrent-dropout", type=float)

    sp = sub.add_parser("eval", help="open-set EER evaluation per gallery size")
    common(sp, manifest=True, checkpoint=True, out=True, gsizes=True)

    sp = sub.add_parser("baseline", help="global-feature SVM baseline evaluation")
    common(sp, manifest=True, checkpoint=True, out=True, gsizes=True)
    sp.add_argument("--train-fraction", type=float, default=0.7)
    sp.add_argument("--svm-c", type=float, default=DEFAULT_C)
    sp.add_argument("--svm-gamma", type=float, default=DEFAULT_GAMMA)
    sp.add_argument("--grid", action="store_true")

    sp = sub.add_parser("enroll", help="add swipe payloads to a user's gallery")
    common(sp, checkpoint=True, gallery=True, payloads=True)

    sp = sub.add_parser("verify", help="score one payload against a gallery")
    common(sp, checkpoint=True, gallery=True, payloads=True)
    sp.add_argument("--threshold", type=float)

    sp = sub.add_parser("serve", help="run the enroll/verify HTTP service")
    common(sp, checkpoint=True, gallery=True)
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--host", type=str, default="127.0.0.1")
    sp.add_argument("--threshold", type=float)
    return p


def parse_run_config(argv) -> RunConfig:
    ns = vars(_parser().parse_args(argv))
    command = ns.pop("command")
    overrides = {}
    for src, dst in (("epochs", "epochs"),
                     ("batches_per_epoch", "batches_per_epoch"),
                     ("batch_size", "batch_size"),
                     ("learning_rate", "learning_rate"),
                     ("margin", "margin"),
                     ("dropout", "dropout"),
                     ("recurrent_dropout", "recurrent_dropout")):
        if ns.get(src) is not None:
            overrides[dst] = ns[src]
        ns.pop(src, None)
    gsizes = ns.pop("gallery_sizes", None)
    cfg = RunConfig(command=command, train_overrides=overrides)
    if gsizes:
        try:
            cfg.gallery_sizes = [int(v) for v in gsizes.split(",") if v]
        except ValueError as exc:
            raise ConfigError(f"bad --gallery-sizes {gsizes!r}") from exc
    for key, value in ns.items():
        if value is not None and hasattr(cfg, key):
            setattr(cfg, key, value)
    return cfg


def main(argv=None) -> int:
    try:
        cfg = parse_run_config(argv if argv is not None else sys.argv[1:])
        return _COMMANDS[cfg.command](cfg)
    except SwipeAuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
