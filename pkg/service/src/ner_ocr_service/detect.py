"""PHI entity detection engines.

`TransformersEngine` wraps a token-classification checkpoint (default:
obi/deid_roberta_i2b2). `BuiltinEngine` is a dependency-free pattern
engine covering names, dates, phone numbers, and identifier digit runs,
used when the checkpoint is unavailable (offline environments, tests).
Engine choice: NER_OCR_DETECT_ENGINE = auto | transformers | builtin.
"""

from __future__ import annotations

import logging
import os
import re

log = logging.getLogger(__name__)

DEFAULT_MODEL = "obi/deid_roberta_i2b2"


class Entity(dict):
    """Wire-shaped entity: start, end, label, score."""

    @classmethod
    def make(cls, start: int, end: int, label: str, score: float) -> "Entity":
        return cls(start=int(start), end=int(end), label=str(label), score=float(score))


class TransformersEngine:
    def __init__(self, model_name: str):
        from transformers import pipeline  # deferred: heavy import

        self.model_name = model_name
        self._pipe = pipeline("token-classification", model=model_name,
                              aggregation_strategy="simple")

    @property
    def identifier(self) -> str:
        return f"transformers:{self.model_name}"

    def detect(self, text: str) -> list[Entity]:
        out = []
        for ent in self._pipe(text):
            start, end = int(ent["start"]), int(ent["end"])
            if not (0 <= start < end <= len(text)):
                continue
            out.append(Entity.make(start, end, ent.get("entity_group", "OTHER"),
                                   ent.get("score", 0.0)))
        out.sort(key=lambda e: e["start"])
        return out


_SURNAMES = [
    "Smith", "Johnson", "Williams", "Jones", "Garcia", "Miller", "Davis",
    "Wilson", "Anderson", "Taylor", "Thomas", "Moore", "Martin", "Lee",
    "Walker", "Harris", "Clark", "Lewis", "Robinson", "Young",
]
_SURNAME_ALT = "|".join(f"{s}|{s.upper()}" for s in _SURNAMES)

_RULES = [
    ("DATE", 0.95, re.compile(r"\b\d{1,2}[/-]\d{1,2}[/-](?:\d{4}|\d{2})\b")),
    ("DATE", 0.95, re.compile(r"\b(?:19|20)\d{2}[/-]\d{1,2}[/-]\d{1,2}\b")),
    ("DATE", 0.9, re.compile(r"\b(?:19|20)\d{6}\b")),
    ("PHONE", 0.9, re.compile(r"\(\d{3}\)[ ]?\d{3}[-.]\d{4}|\b\d{3}[-.]\d{3}[-.]\d{4}\b")),
    ("MEDICALRECORD", 0.9, re.compile(r"\bMRN[ \t]*[:#]?[ \t]*\d+\b")),
    ("IDNUM", 0.75, re.compile(r"\b\d{6,}\b")),
    ("PATIENT", 0.9, re.compile(r"\b[A-Za-z'-]+\^[A-Za-z'^-]+")),
    ("PATIENT", 0.85, re.compile(rf"\b(?:[A-Z][a-z]+|[A-Z]{{2,}})[ \t]+(?:{_SURNAME_ALT})\b")),
    ("DOCTOR", 0.85, re.compile(rf"\b(?:Dr|DR|Mr|MR|Mrs|MRS|Prof|PROF|Miss|MISS)\.?[ \t]+(?:{_SURNAME_ALT})\b")),
    ("PATIENT", 0.7, re.compile(rf"\b(?:{_SURNAME_ALT})\b")),
]


class BuiltinEngine:
    """Regex engine; overlapping matches collapse to the strongest span."""

    identifier = "builtin:pattern-rules"

    def detect(self, text: str) -> list[Entity]:
        raw: list[Entity] = []
        for label, score, pattern in _RULES:
            for m in pattern.finditer(text):
                raw.append(Entity.make(m.start(), m.end(), label, score))
        raw.sort(key=lambda e: (e["start"], -e["end"]))
        merged: list[Entity] = []
        for ent in raw:
            if merged and ent["start"] < merged[-1]["end"]:
                prev = merged[-1]
                if ent["score"] > prev["score"]:
                    prev["label"], prev["score"] = ent["label"], ent["score"]
                prev["end"] = max(prev["end"], ent["end"])
            else:
                merged.append(ent)
        return merged


def build_engine():
    """Engine per NER_OCR_DETECT_ENGINE; 'auto' tries the checkpoint first."""
    mode = os.environ.get("NER_OCR_DETECT_ENGINE", "auto").lower()
    model_name = os.environ.get("NER_OCR_MODEL", DEFAULT_MODEL)
    if mode == "builtin":
        return BuiltinEngine()
    try:
        return TransformersEngine(model_name)
    except Exception as e:
        if mode == "transformers":
            raise
        log.warning("checkpoint %s unavailable (%s); using builtin engine",
                    model_name, e)
        return BuiltinEngine()
