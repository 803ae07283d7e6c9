"""PHI entity detection over free text.

Two interchangeable detectors:

* ``PatternDetector`` — pure, offline. Its rule families are the contract
  the synthetic corpus generator draws from, so it doubles as an exact
  oracle in tests:

  - numeric dates (``01/02/2023``, ``2023-04-05``) and bare 8-digit
    DICOM-style dates (``19870612``)
  - phone numbers (``(555) 123-4567``, ``555-123-4567``)
  - digit-run identifiers (6+ digits) and ``MRN``-prefixed numbers
  - honorific-triggered names: a dotted honorific (``Dr.``) marks the
    following capitalized token(s); an undotted one (``MR``, ``Dr``) is
    itself part of the span
  - caret-structured person names (``DOE^JOHN``)
  - first-name + surname pairs and standalone surnames from a bundled list

* ``RemoteDetector`` — client for the detection service protocol
  (``POST /detect`` with ``{"text": ...}``), with i2b2-style label mapping
  and a confidence threshold.

Whitelist filtering drops spans that consist entirely of known imaging
terms, token by token, case-insensitively.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources

from .errors import EmptyWhitelist, RemoteUnavailable


class Category(str, Enum):
    NAME = "NAME"
    DATE = "DATE"
    ID = "ID"
    LOCATION = "LOCATION"
    CONTACT = "CONTACT"
    AGE = "AGE"
    OTHER = "OTHER"


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    category: Category
    confidence: float
    text: str

    def validate(self, document: str) -> None:
        if not (0 <= self.start < self.end <= len(document)):
            raise ValueError(f"span [{self.start},{self.end}) outside document")
        if document[self.start : self.end] != self.text:
            raise ValueError("span text does not match document slice")


# i2b2-style service labels -> categories.
LABEL_MAP = {
    "PATIENT": Category.NAME,
    "DOCTOR": Category.NAME,
    "STAFF": Category.NAME,
    "NAME": Category.NAME,
    "USERNAME": Category.NAME,
    "DATE": Category.DATE,
    "ID": Category.ID,
    "IDNUM": Category.ID,
    "MEDICALRECORD": Category.ID,
    "DEVICE": Category.ID,
    "HOSP": Category.LOCATION,
    "HOSPITAL": Category.LOCATION,
    "LOC": Category.LOCATION,
    "LOCATION": Category.LOCATION,
    "CITY": Category.LOCATION,
    "STATE": Category.LOCATION,
    "STREET": Category.LOCATION,
    "ZIP": Category.LOCATION,
    "COUNTRY": Category.LOCATION,
    "ORGANIZATION": Category.LOCATION,
    "PHONE": Category.CONTACT,
    "FAX": Category.CONTACT,
    "EMAIL": Category.CONTACT,
    "URL": Category.CONTACT,
    "CONTACT": Category.CONTACT,
    "AGE": Category.AGE,
}


def map_label(label: str) -> Category:
    return LABEL_MAP.get(label.upper(), Category.OTHER)


# Surnames recognized by the pattern detector; the corpus generator draws
# names from this list so detection is exact on generated text.
SURNAMES = [
    "Smith", "Johnson", "Williams", "Jones", "Garcia", "Miller", "Davis",
    "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson",
    "Anderson", "Thomas", "Taylor", "Jackson", "Martin", "Lee", "Thompson",
    "Harris", "Clark", "Lewis", "Robinson", "Walker", "Wright", "Scott",
    "Baker", "Adams", "Nelson", "Carter", "Mitchell", "Turner", "Campbell",
    "Parker", "Evans", "Edwards", "Collins", "Stewart", "Morris",
]

_SURNAME_ALT = "|".join(f"{s}|{s.upper()}" for s in SURNAMES)

# "MS" is deliberately not an honorific: it collides with common clinical
# shorthand (multiple sclerosis).
_HONORIFIC_ALT = "|".join(
    f"{h}|{h.upper()}" for h in ("Dr", "Mr", "Mrs", "Prof", "Miss")
)

_DATE_RES = [
    re.compile(r"\b\d{1,2}[/-]\d{1,2}[/-](?:\d{4}|\d{2})\b"),
    re.compile(r"\b(?:19|20)\d{2}[/-]\d{1,2}[/-]\d{1,2}\b"),
    re.compile(r"\b(?:19|20)\d{6}\b"),
]
_PHONE_RE = re.compile(r"\(\d{3}\)[ ]?\d{3}[-.]\d{4}|\b\d{3}[-.]\d{3}[-.]\d{4}\b")
_MRN_RE = re.compile(r"\bMRN[ \t]*[:#]?[ \t]*\d+\b")
_DIGIT_RUN_RE = re.compile(r"\b\d{6,}\b")
_CARET_NAME_RE = re.compile(r"\b[A-Za-z'-]+\^[A-Za-z'^-]+")
_HONORIFIC_RE = re.compile(
    rf"\b({_HONORIFIC_ALT})(\.?)[ \t]+([A-Z][A-Za-z'-]*(?:[ \t]+[A-Z][A-Za-z'-]*)?)"
)
_FULL_NAME_RE = re.compile(rf"\b(?:[A-Z][a-z]+|[A-Z]{{2,}})[ \t]+(?:{_SURNAME_ALT})\b")
_SURNAME_RE = re.compile(rf"\b(?:{_SURNAME_ALT})\b")


class PatternDetector:
    """Offline rule-family detector; pure and deterministic."""

    name = "pattern"

    def detect_entities(self, text: str) -> list[EntitySpan]:
        if not text:
            return []
        spans: list[EntitySpan] = []

        def add(start: int, end: int, category: Category, confidence: float) -> None:
            spans.append(EntitySpan(start, end, category, confidence, text[start:end]))

        for pattern in _DATE_RES:
            for m in pattern.finditer(text):
                add(m.start(), m.end(), Category.DATE, 0.95)
        for m in _PHONE_RE.finditer(text):
            add(m.start(), m.end(), Category.CONTACT, 0.9)
        for m in _MRN_RE.finditer(text):
            add(m.start(), m.end(), Category.ID, 0.9)
        for m in _DIGIT_RUN_RE.finditer(text):
            add(m.start(), m.end(), Category.ID, 0.8)
        for m in _CARET_NAME_RE.finditer(text):
            add(m.start(), m.end(), Category.NAME, 0.95)
        for m in _HONORIFIC_RE.finditer(text):
            start = m.start(3) if m.group(2) else m.start(1)
            add(start, m.end(3), Category.NAME, 0.9)
        for m in _FULL_NAME_RE.finditer(text):
            add(m.start(), m.end(), Category.NAME, 0.85)
        for m in _SURNAME_RE.finditer(text):
            add(m.start(), m.end(), Category.NAME, 0.7)

        return merge_spans(spans, text)


class RemoteDetector:
    """Client for the remote detection protocol."""

    name = "remote"

    def __init__(self, url: str, threshold: float = 0.5, timeout: float = 30.0,
                 max_connections: int = 8):
        import requests
        from requests.adapters import HTTPAdapter

        self.url = url.rstrip("/")
        self.threshold = threshold
        self.timeout = timeout
        self._session = requests.Session()
        adapter = HTTPAdapter(pool_connections=max_connections, pool_maxsize=max_connections)
        self._session.mount("http://", adapter)
        self._session.mount("https://", adapter)

    def detect_entities(self, text: str) -> list[EntitySpan]:
        if not text:
            return []
        import requests

        try:
            resp = self._session.post(
                f"{self.url}/detect", json={"text": text}, timeout=self.timeout
            )
        except requests.RequestException as e:
            raise RemoteUnavailable(str(e)) from e
        if resp.status_code != 200:
            raise RemoteUnavailable(f"detect returned HTTP {resp.status_code}")
        try:
            entities = resp.json()["entities"]
        except (ValueError, KeyError) as e:
            raise RemoteUnavailable(f"malformed detect response: {e}") from e

        spans = []
        for ent in entities:
            start, end = int(ent["start"]), int(ent["end"])
            score = float(ent.get("score", 1.0))
            if score < self.threshold:
                continue
            if not (0 <= start < end <= len(text)):
                continue
            spans.append(EntitySpan(start, end, map_label(str(ent.get("label", ""))), score, text[start:end]))
        return merge_spans(spans, text)


def merge_spans(spans: list[EntitySpan], document: str) -> list[EntitySpan]:
    """Sort by start and coalesce overlaps; merged spans keep the category
    of their most confident constituent and the max confidence."""
    if not spans:
        return []
    spans = sorted(spans, key=lambda s: (s.start, -s.end))
    merged: list[EntitySpan] = []
    cur_start, cur_end = spans[0].start, spans[0].end
    cur_conf, cur_cat = spans[0].confidence, spans[0].category
    for span in spans[1:]:
        if span.start < cur_end:
            cur_end = max(cur_end, span.end)
            if span.confidence > cur_conf:
                cur_conf, cur_cat = span.confidence, span.category
        else:
            merged.append(EntitySpan(cur_start, cur_end, cur_cat, cur_conf, document[cur_start:cur_end]))
            cur_start, cur_end, cur_conf, cur_cat = span.start, span.end, span.confidence, span.category
    merged.append(EntitySpan(cur_start, cur_end, cur_cat, cur_conf, document[cur_start:cur_end]))
    return merged


# ---------------------------------------------------------------------------
# Whitelist


_TOKEN_RE = re.compile(r"[A-Za-z0-9']+")


class Whitelist:
    def __init__(self, terms: set[str], source: str = "<memory>"):
        if not terms:
            raise EmptyWhitelist(f"whitelist from {source} has no terms")
        self.terms = {t.casefold() for t in terms}
        self.source = source

    def __contains__(self, token: str) -> bool:
        return token.casefold() in self.terms

    def __len__(self) -> int:
        return len(self.terms)


def load_whitelist(path) -> Whitelist:
    terms = set()
    with open(path) as fh:
        for line in fh:
            term = line.split("#", 1)[0].strip()
            if term:
                terms.add(term)
    return Whitelist(terms, str(path))


def bundled_whitelist() -> Whitelist:
    text = resources.files("dcmdeid.data").joinpath("whitelist.txt").read_text()
    terms = {
        line.split("#", 1)[0].strip()
        for line in text.splitlines()
    }
    terms.discard("")
    return Whitelist(terms, "bundled")


def filter_whitelist(entities: list[EntitySpan], whitelist: Whitelist | None,
                     document: str) -> list[EntitySpan]:
    """Drop spans whose covered text is made up entirely of whitelist terms.

    Spans containing any non-whitelisted token are kept, so partial overlaps
    with imaging vocabulary still get removed.
    """
    if whitelist is None:
        return list(entities)
    kept = []
    for span in entities:
        tokens = _TOKEN_RE.findall(document[span.start : span.end])
        if tokens and all(tok in whitelist for tok in tokens):
            continue
        kept.append(span)
    return kept


def remove_spans(text: str, spans: list[EntitySpan]) -> str:
    """Delete span characters, preserving everything else in order."""
    if not spans:
        return text
    out = []
    pos = 0
    for span in sorted(spans, key=lambda s: s.start):
        if span.start > pos:
            out.append(text[pos : span.start])
        pos = max(pos, span.end)
    out.append(text[pos:])
    return "".join(out)


def detect_filtered(detector, whitelist: Whitelist | None, text: str) -> list[EntitySpan]:
    """Detection results after whitelist suppression."""
    spans = detector.detect_entities(text)
    return filter_whitelist(spans, whitelist, text)


def deidentified_element_val(detector, whitelist: Whitelist | None, element_text: str) -> str:
    """Element value with detected, non-whitelisted PHI deleted."""
    return remove_spans(element_text, detect_filtered(detector, whitelist, element_text))
