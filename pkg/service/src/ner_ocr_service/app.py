"""FastAPI application: POST /detect, POST /ocr, GET /health."""

from __future__ import annotations

import base64
import binascii
import io
import os

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError
from pydantic import BaseModel, Field

from . import detect as detect_mod
from . import ocr as ocr_mod


class DetectRequest(BaseModel):
    text: str


class EntityModel(BaseModel):
    start: int = Field(ge=0)
    end: int
    label: str
    score: float = Field(ge=0.0, le=1.0)


class DetectResponse(BaseModel):
    entities: list[EntityModel]


class OcrRequest(BaseModel):
    image: str  # base64 PNG
    frame_id: str = ""


class BoxModel(BaseModel):
    x0: int
    y0: int
    x1: int
    y1: int
    text: str
    score: float = Field(ge=0.0, le=1.0)


class OcrResponse(BaseModel):
    boxes: list[BoxModel]


def create_app() -> FastAPI:
    app = FastAPI(title="ner-ocr-service", version="0.1.0")
    app.state.detect_engine = detect_mod.build_engine()
    app.state.ocr_engine = ocr_mod.build_engine()

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "model": app.state.detect_engine.identifier,
            "ocr": app.state.ocr_engine.identifier,
        }

    @app.post("/detect", response_model=DetectResponse)
    def detect(req: DetectRequest):
        engine = app.state.detect_engine
        if engine is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        entities = engine.detect(req.text)
        # spans must stay inside the request text
        entities = [e for e in entities if 0 <= e["start"] < e["end"] <= len(req.text)]
        return {"entities": entities}

    @app.post("/ocr", response_model=OcrResponse)
    def ocr(req: OcrRequest):
        try:
            payload = base64.b64decode(req.image, validate=True)
            image = Image.open(io.BytesIO(payload))
            image.load()
        except (binascii.Error, UnidentifiedImageError, OSError, ValueError):
            return JSONResponse(status_code=400, content={"detail": "undecodable image"})
        boxes = app.state.ocr_engine.recognize(image)
        boxes = [b for b in boxes
                 if 0 <= b["x0"] < b["x1"] <= image.width
                 and 0 <= b["y0"] < b["y1"] <= image.height]
        return {"boxes": boxes}

    return app


def serve() -> None:
    import uvicorn

    uvicorn.run(create_app(), host=os.environ.get("NER_OCR_HOST", "0.0.0.0"),
                port=int(os.environ.get("NER_OCR_PORT", "8061")))


app = None  # created on demand; `uvicorn ner_ocr_service.app:create_app --factory`
