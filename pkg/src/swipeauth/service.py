"""HTTP service exposing live enroll/verify over a frozen checkpoint.

JSON endpoints:
    POST /enroll  {user_id, samples, screen_width, screen_height[, device_id]}
                  -> {gallery_size}
    POST /verify  same payload [+ threshold] -> {score, accept, threshold}
    GET  /health  -> {status, model_version}

Swipes are validated and featurized exactly like the offline path, so
scores are reproducible from logged payloads.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .errors import (
    InvalidMetadataError,
    MalformedSequenceError,
    NumericError,
    SwipeAuthError,
)
from .net.params import load_checkpoint
from .serving import (
    GalleryStore,
    embed_payload,
    read_default_threshold,
)
from .verify import verify as verify_probe


class SwipeIn(BaseModel):
    user_id: str
    samples: list[list[float]] = Field(min_length=1)
    screen_width: float
    screen_height: float
    device_id: str = "unknown"
    threshold: float | None = None  # verify only; overrides the default


def create_app(checkpoint_path, gallery_dir,
               threshold_override: float | None = None) -> FastAPI:
    model, config, _meta = load_checkpoint(checkpoint_path)
    margin = float(config["margin"]) if config and "margin" in config else 1.5
    default_threshold = (threshold_override if threshold_override is not None
                         else read_default_threshold(checkpoint_path, margin))
    store = GalleryStore(gallery_dir)

    app = FastAPI(title="swipeauth", version=model.version)

    @app.exception_handler(RequestValidationError)
    async def bad_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"reason": f"malformed body: {exc.errors()}"})

    @app.exception_handler(SwipeAuthError)
    async def domain_error(request: Request, exc: SwipeAuthError):
        if isinstance(exc, (MalformedSequenceError, InvalidMetadataError)):
            return JSONResponse(status_code=400, content={"reason": str(exc)})
        if isinstance(exc, NumericError):
            return JSONResponse(status_code=500, content={"reason": str(exc)})
        return JSONResponse(status_code=400, content={"reason": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "model_version": model.version}

    @app.post("/enroll")
    def enroll(swipe: SwipeIn):
        embedding = embed_payload(model, swipe.model_dump())
        size = store.append(swipe.user_id, embedding, model.version)
        return {"gallery_size": size}

    @app.post("/verify")
    def verify(swipe: SwipeIn):
        embedding = embed_payload(model, swipe.model_dump())
        gallery = store.load(swipe.user_id)
        if gallery is None:
            return JSONResponse(status_code=404,
                                content={"reason": f"user {swipe.user_id} not enrolled"})
        threshold = (swipe.threshold if swipe.threshold is not None
                     else default_threshold)
        decision = verify_probe(gallery, embedding, threshold)
        return {"score": decision.score, "accept": decision.accept,
                "threshold": decision.threshold}

    return app
