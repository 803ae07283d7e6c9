"""Burned-in text OCR engines.

`PaddleEngine` wraps the full OCR stack when it is installed.
`BuiltinEngine` is a fixture-grade recognizer for text rendered in the
PIL default bitmap font (fixed 6-px advance, 2-px space): it binarizes
the image, splits line bands into ink groups, classifies each group
against pre-rendered glyph templates, and reconstructs spaces from the
advance grid. Engine choice: NER_OCR_OCR_ENGINE = auto | paddle | builtin.
"""

from __future__ import annotations

import logging
import os

import numpy as np
from PIL import Image, ImageDraw, ImageFont

log = logging.getLogger(__name__)

GLYPH_CHARSET = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
_ADVANCE = 6
_SPACE_ADVANCE = 2


class Box(dict):
    @classmethod
    def make(cls, x0, y0, x1, y1, text, score) -> "Box":
        return cls(x0=int(x0), y0=int(y0), x1=int(x1), y1=int(y1),
                   text=str(text), score=float(score))


def _render_glyph(ch: str, font) -> tuple[np.ndarray, int]:
    img = Image.new("L", (16, 16), 0)
    ImageDraw.Draw(img).text((0, 0), ch, fill=255, font=font)
    arr = np.array(img) > 128
    ys, xs = np.where(arr)
    if len(xs) == 0:
        return np.zeros((1, 1), dtype=bool), 0
    return arr[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1], int(xs.min())


class _Glyph:
    __slots__ = ("char", "ink", "bearing")

    def __init__(self, char: str, ink: np.ndarray, bearing: int):
        self.char = char
        self.ink = ink
        self.bearing = bearing


class BuiltinEngine:
    identifier = "builtin:default-font-glyphs"

    def __init__(self):
        font = ImageFont.load_default()
        self._glyphs = []
        for ch in GLYPH_CHARSET:
            ink, bearing = _render_glyph(ch, font)
            self._glyphs.append(_Glyph(ch, ink, bearing))

    def recognize(self, image: Image.Image) -> list[Box]:
        arr = np.asarray(image.convert("L"), dtype=np.uint8)
        if arr.size == 0 or arr.min() == arr.max():
            return []
        fg = arr > (int(arr.min()) + int(arr.max())) // 2
        if fg.mean() > 0.5:
            fg = ~fg
        if not fg.any():
            return []

        boxes = []
        for y0, y1 in _bands(fg.any(axis=1)):
            line = fg[y0:y1]
            groups = _bands(line.any(axis=0))
            if not groups:
                continue
            text, score = self._decode(line, groups)
            if text.strip():
                boxes.append(Box.make(groups[0][0], y0, groups[-1][1], y1, text, score))
        return boxes

    def _decode(self, line: np.ndarray, groups: list[tuple[int, int]]) -> tuple[str, float]:
        cells: list[tuple[int, int]] = []
        for x0, x1 in groups:
            # fixed-pitch split for ink groups spanning more than one glyph box
            while x1 - x0 > _ADVANCE:
                cells.append((x0, x0 + _ADVANCE - 1))
                x0 += _ADVANCE
            cells.append((x0, x1))

        out = []
        exact = 0
        cursor = None
        for x0, x1 in cells:
            cell = line[:, x0:x1]
            ys = np.where(cell.any(axis=1))[0]
            ink = cell[ys.min() : ys.max() + 1] if len(ys) else cell
            glyph, is_exact = self._classify(ink)
            bearing = glyph.bearing if glyph else 1
            box_start = x0 - bearing
            if cursor is not None and box_start - cursor >= _SPACE_ADVANCE:
                out.append(" ")
            out.append(glyph.char if glyph else "?")
            exact += 1 if is_exact else 0
            cursor = box_start + _ADVANCE
        text = "".join(out)
        n_glyphs = max(len(cells), 1)
        return text, exact / n_glyphs

    def _classify(self, ink: np.ndarray):
        best = None
        best_ratio = 1.0
        for glyph in self._glyphs:
            t = glyph.ink
            if t.shape == ink.shape and bool((t == ink).all()):
                return glyph, True
            h = max(t.shape[0], ink.shape[0])
            w = max(t.shape[1], ink.shape[1])
            a = np.zeros((h, w), dtype=bool)
            b = np.zeros((h, w), dtype=bool)
            a[: t.shape[0], : t.shape[1]] = t
            b[: ink.shape[0], : ink.shape[1]] = ink
            ratio = float((a != b).mean())
            if ratio < best_ratio:
                best_ratio, best = ratio, glyph
        if best is not None and best_ratio <= 0.3:
            return best, False
        return None, False


def _bands(profile: np.ndarray) -> list[tuple[int, int]]:
    bands = []
    start = None
    for i, v in enumerate(profile):
        if v and start is None:
            start = i
        elif not v and start is not None:
            bands.append((start, i))
            start = None
    if start is not None:
        bands.append((start, len(profile)))
    return bands


class PaddleEngine:
    identifier = "paddle:PaddleOCR"

    def __init__(self):
        from paddleocr import PaddleOCR  # optional dependency

        self._ocr = PaddleOCR(use_angle_cls=False, lang="en", show_log=False)

    def recognize(self, image: Image.Image) -> list[Box]:
        arr = np.asarray(image.convert("RGB"))
        result = self._ocr.ocr(arr, cls=False)
        boxes = []
        for page in result or []:
            for polygon, (text, score) in page or []:
                xs = [p[0] for p in polygon]
                ys = [p[1] for p in polygon]
                x0, y0 = max(min(xs), 0), max(min(ys), 0)
                x1 = min(max(xs), image.width)
                y1 = min(max(ys), image.height)
                if x1 > x0 and y1 > y0:
                    boxes.append(Box.make(x0, y0, x1, y1, text, score))
        return boxes


def build_engine():
    mode = os.environ.get("NER_OCR_OCR_ENGINE", "auto").lower()
    if mode == "builtin":
        return BuiltinEngine()
    try:
        return PaddleEngine()
    except Exception as e:
        if mode == "paddle":
            raise
        log.warning("OCR stack unavailable (%s); using builtin glyph engine", e)
        return BuiltinEngine()
