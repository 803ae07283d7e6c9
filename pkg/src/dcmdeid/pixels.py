"""Burned-in text removal from pixel data.

Text boxes come from an OCR source (remote service or a recorded
detections file); each box's text runs through the PHI detector, and boxes
with surviving entities are filled from a neighboring pixel: left of the
box, else just right of it, else above, else zero when the box spans the
whole frame.
"""

from __future__ import annotations

import base64
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .codec import DataElement, DataSet, TransferSyntax
from .datadict import tag_by_keyword
from .errors import (
    CompressedPixelData,
    InconsistentDimensions,
    MissingDetections,
    RemoteUnavailable,
)
from .phi import Whitelist, detect_filtered
from .tags import PIXEL_DATA, Tag

DEFAULT_OCR_CONFIDENCE = 0.3


@dataclass
class Frame:
    rows: int
    cols: int
    bits_allocated: int
    samples_per_pixel: int
    pixels: np.ndarray  # (rows, cols), uint8 or uint16

    def copy(self) -> "Frame":
        return Frame(self.rows, self.cols, self.bits_allocated,
                     self.samples_per_pixel, self.pixels.copy())


@dataclass(frozen=True)
class TextBox:
    x0: int
    y0: int
    x1: int
    y1: int
    text: str
    confidence: float

    def validate(self, rows: int, cols: int) -> None:
        if not (0 <= self.x0 < self.x1 <= cols and 0 <= self.y0 < self.y1 <= rows):
            raise ValueError(f"box ({self.x0},{self.y0})-({self.x1},{self.y1}) outside {cols}x{rows} frame")


def extract_frames(ds: DataSet) -> list[Frame]:
    """Decode PixelData into per-frame arrays."""
    meta_ts = ds.get_meta(Tag(0x0002, 0x0010))
    ts = meta_ts.text_value() if meta_ts is not None else ds.transfer_syntax
    if ts and ts not in TransferSyntax.SUPPORTED:
        raise CompressedPixelData(ts)
    el = ds.get(PIXEL_DATA)
    if el is None:
        return []
    if el.is_sequence:
        raise CompressedPixelData(ts or "<encapsulated>")

    rows = ds.int_value(tag_by_keyword("Rows"))
    cols = ds.int_value(tag_by_keyword("Columns"))
    bits = ds.int_value(tag_by_keyword("BitsAllocated"), 8)
    samples = ds.int_value(tag_by_keyword("SamplesPerPixel"), 1)
    n_frames = ds.int_value(tag_by_keyword("NumberOfFrames"), 1) or 1
    if rows <= 0 or cols <= 0 or bits not in (8, 16) or samples != 1:
        raise InconsistentDimensions(
            f"rows={rows} cols={cols} bits={bits} samples={samples}")

    frame_bytes = rows * cols * (bits // 8) * samples
    expected = frame_bytes * n_frames
    raw = el.raw
    if len(raw) not in (expected, expected + 1):  # trailing pad byte allowed
        raise InconsistentDimensions(
            f"pixel data length {len(raw)} != {expected} for {n_frames} frame(s)")

    dtype = np.uint8 if bits == 8 else np.dtype("<u2")
    frames = []
    for i in range(n_frames):
        chunk = raw[i * frame_bytes : (i + 1) * frame_bytes]
        arr = np.frombuffer(chunk, dtype=dtype).reshape(rows, cols).copy()
        frames.append(Frame(rows, cols, bits, samples, arr))
    return frames


def write_frames(ds: DataSet, frames: list[Frame]) -> None:
    """Store frames back into PixelData (little-endian, even-padded)."""
    raw = b"".join(f.pixels.astype(f.pixels.dtype, copy=False).tobytes() for f in frames)
    el = ds.get(PIXEL_DATA)
    if el is None:
        el = DataElement(PIXEL_DATA, "OW")
        ds.set(el)
    el.set_bytes(raw)


def redact_boxes(frame: Frame, boxes: list[TextBox]) -> Frame:
    """Fill each box with the neighbor-sampled value; pure (returns a copy)."""
    out = frame.copy()
    px = out.pixels
    for box in boxes:
        box.validate(frame.rows, frame.cols)
        if box.x0 > 0:
            fill = px[box.y0, box.x0 - 1]
        elif box.x1 < frame.cols:
            fill = px[box.y0, box.x1]
        elif box.y0 > 0:
            fill = px[box.y0 - 1, box.x0]
        else:
            fill = 0
        px[box.y0 : box.y1, box.x0 : box.x1] = fill
    return out


# ---------------------------------------------------------------------------
# Box sources


class DetectionsFile:
    """Text boxes recorded per (relative file path, frame index).

    JSON shape: {"files": {"rel/path.dcm": {"0": [{"x0":..,"y0":..,"x1":..,
    "y1":..,"text":..,"score":..}, ...]}}}
    """

    name = "detections-file"

    def __init__(self, path, strict: bool = True):
        with open(path) as fh:
            payload = json.load(fh)
        self.files: dict[str, dict[str, list[dict]]] = payload.get("files", {})
        self.strict = strict

    def detect_text(self, frame: Frame, rel_path: str, frame_index: int) -> list[TextBox]:
        entry = self.files.get(rel_path)
        if entry is None:
            if self.strict:
                raise MissingDetections(rel_path)
            return []
        raw_boxes = entry.get(str(frame_index))
        if raw_boxes is None:
            if self.strict:
                raise MissingDetections(rel_path, frame_index)
            return []
        boxes = []
        for b in raw_boxes:
            box = TextBox(int(b["x0"]), int(b["y0"]), int(b["x1"]), int(b["y1"]),
                          str(b.get("text", "")), float(b.get("score", 1.0)))
            box.validate(frame.rows, frame.cols)
            boxes.append(box)
        return boxes


class RemoteOCR:
    """Client for the OCR service protocol (POST /ocr, base64 PNG in)."""

    name = "remote-ocr"

    def __init__(self, url: str, timeout: float = 60.0):
        import requests

        self.url = url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()

    def detect_text(self, frame: Frame, rel_path: str, frame_index: int) -> list[TextBox]:
        import requests
        from PIL import Image

        if frame.bits_allocated == 8:
            img = Image.fromarray(frame.pixels, mode="L")
        else:
            img = Image.fromarray(frame.pixels.astype(np.int32), mode="I")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        payload = {
            "image": base64.b64encode(buf.getvalue()).decode("ascii"),
            "frame_id": f"{rel_path}#{frame_index}",
        }
        try:
            resp = self._session.post(f"{self.url}/ocr", json=payload, timeout=self.timeout)
        except requests.RequestException as e:
            raise RemoteUnavailable(str(e)) from e
        if resp.status_code != 200:
            raise RemoteUnavailable(f"ocr returned HTTP {resp.status_code}")
        try:
            raw_boxes = resp.json()["boxes"]
        except (ValueError, KeyError) as e:
            raise RemoteUnavailable(f"malformed ocr response: {e}") from e
        boxes = []
        for b in raw_boxes:
            box = TextBox(int(b["x0"]), int(b["y0"]), int(b["x1"]), int(b["y1"]),
                          str(b.get("text", "")), float(b.get("score", 1.0)))
            box.validate(frame.rows, frame.cols)
            boxes.append(box)
        return boxes


# ---------------------------------------------------------------------------
# Image de-identification


@dataclass
class BoxReport:
    frame: int
    box: tuple[int, int, int, int]
    text_hash: str
    redacted: bool
    reason: str = ""


@dataclass
class PixelReport:
    boxes: list[BoxReport] = field(default_factory=list)
    frames: int = 0
    note: str = ""

    @property
    def redacted_count(self) -> int:
        return sum(1 for b in self.boxes if b.redacted)


def deidentify_image(ds: DataSet, source, detector, whitelist: Whitelist | None,
                     rel_path: str = "", fail_safe_all: bool = False,
                     min_confidence: float = DEFAULT_OCR_CONFIDENCE) -> tuple[DataSet, PixelReport]:
    """Redact boxes whose text still shows PHI after whitelist filtering.

    Boxes below the OCR confidence threshold are redacted unconditionally
    (their text cannot be trusted to clear them); with fail_safe_all, every
    detected box is redacted without consulting the detector.
    """
    import hashlib

    report = PixelReport()
    if ds.get(PIXEL_DATA) is None:
        report.note = "no pixel data"
        return ds, report

    frames = extract_frames(ds)
    report.frames = len(frames)
    changed = False
    out_frames = []
    for idx, frame in enumerate(frames):
        boxes = source.detect_text(frame, rel_path, idx)
        to_redact = []
        for box in boxes:
            text_hash = hashlib.sha256(box.text.encode()).hexdigest()[:12]
            if fail_safe_all:
                to_redact.append(box)
                report.boxes.append(BoxReport(idx, (box.x0, box.y0, box.x1, box.y1),
                                              text_hash, True, "fail-safe"))
                continue
            if box.confidence < min_confidence:
                to_redact.append(box)
                report.boxes.append(BoxReport(idx, (box.x0, box.y0, box.x1, box.y1),
                                              text_hash, True, "low confidence"))
                continue
            spans = detect_filtered(detector, whitelist, box.text)
            if spans:
                to_redact.append(box)
                report.boxes.append(BoxReport(idx, (box.x0, box.y0, box.x1, box.y1),
                                              text_hash, True, "phi"))
            else:
                report.boxes.append(BoxReport(idx, (box.x0, box.y0, box.x1, box.y1),
                                              text_hash, False))
        if to_redact:
            frame = redact_boxes(frame, to_redact)
            changed = True
        out_frames.append(frame)

    if changed:
        write_frames(ds, out_frames)
    return ds, report
