"""Deterministic pseudonymization: UID remapping, patient-ID pseudonyms,
calendar date shifting, and mapping export.

Replacements are derived with a keyed hash of (salt, original), so any
number of workers computes identical mappings with no coordination; the
in-memory maps are just a cache of derivations plus the export record.
"""

from __future__ import annotations

import csv
import hashlib
import hmac
import os
import re
import threading
from datetime import date, timedelta

from .errors import EmptyID, InvalidUID, UnparseableDate

DEFAULT_DATE_OFFSET_DAYS = 120

_UID_RE = re.compile(r"[0-9]+(\.[0-9]+)*")
UID_ROOT = "2.25."
PSEUDONYM_PREFIX = "PSN-"


class IdentityStore:
    """Keyed-hash pseudonym map for UIDs and patient IDs."""

    def __init__(self, salt: bytes | None = None,
                 date_offset_days: int = DEFAULT_DATE_OFFSET_DAYS):
        self.salt = os.urandom(16) if salt is None else bytes(salt)
        self.date_offset_days = date_offset_days
        self.uid_map: dict[str, str] = {}
        self.id_map: dict[str, str] = {}
        self._uid_outputs: set[str] = set()
        self._id_outputs: set[str] = set()
        self._lock = threading.Lock()

    # -- UIDs ---------------------------------------------------------------

    def remap_uid(self, uid: str) -> str:
        uid = uid.strip()
        if not _UID_RE.fullmatch(uid):
            raise InvalidUID(uid)
        with self._lock:
            hit = self.uid_map.get(uid)
            if hit is not None:
                return hit
            if uid in self._uid_outputs:
                return uid
        replacement = self._derive_uid(uid)
        with self._lock:
            self.uid_map.setdefault(uid, replacement)
            self._uid_outputs.add(replacement)
        return replacement

    def _derive_uid(self, uid: str) -> str:
        digest = hmac.new(self.salt, b"uid:" + uid.encode(), hashlib.sha256).digest()
        number = int.from_bytes(digest[:16], "big")
        return (UID_ROOT + str(number))[:64]

    # -- patient IDs ----------------------------------------------------------

    def remap_patient_id(self, patient_id: str) -> str:
        if not patient_id:
            raise EmptyID("patient ID is empty")
        with self._lock:
            hit = self.id_map.get(patient_id)
            if hit is not None:
                return hit
            if patient_id in self._id_outputs:
                return patient_id
        digest = hmac.new(self.salt, b"pid:" + patient_id.encode(), hashlib.sha256).hexdigest()
        replacement = PSEUDONYM_PREFIX + digest[:12]
        with self._lock:
            self.id_map.setdefault(patient_id, replacement)
            self._id_outputs.add(replacement)
        return replacement

    # -- export / import ------------------------------------------------------

    def export_mappings(self, path) -> None:
        rows = [("uid", k, v) for k, v in self.uid_map.items()]
        rows += [("id", k, v) for k, v in self.id_map.items()]
        rows.sort()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["kind", "original", "replacement"])
            writer.writerows(rows)

    def load_mappings(self, path) -> None:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for row in reader:
                if row["kind"] == "uid":
                    self.uid_map[row["original"]] = row["replacement"]
                    self._uid_outputs.add(row["replacement"])
                elif row["kind"] == "id":
                    self.id_map[row["original"]] = row["replacement"]
                    self._id_outputs.add(row["replacement"])


# ---------------------------------------------------------------------------
# Date shifting

_DA_RE = re.compile(r"(\d{4})(\d{2})?(\d{2})?")


def shift_date(value: str, offset_days: int, vr: str = "DA") -> str:
    """Calendar-correct day shift of a DA or DT value; TM passes through.

    Truncated dates are padded to the first month/day, shifted, then cut
    back to their original precision. DT keeps its time-of-day and zone
    suffix untouched.
    """
    if vr == "TM":
        return value
    value = value.rstrip(" \x00")
    if not value:
        return value
    if vr == "DT":
        m = re.match(r"\d{4,8}", value)
        if m is None or len(m.group(0)) % 2 != 0:
            raise UnparseableDate(value)
        head = m.group(0)[: min(len(m.group(0)), 8)]
        # keep at most YYYYMMDD as the date part; the rest is time/zone
        date_part = head if len(head) in (4, 6, 8) else head[:8]
        rest = value[len(date_part):]
        return _shift_da(date_part, offset_days) + rest
    if vr == "DA":
        if len(value) not in (4, 6, 8) or not value.isdigit():
            raise UnparseableDate(value)
        return _shift_da(value, offset_days)
    raise UnparseableDate(value)


def _shift_da(value: str, offset_days: int) -> str:
    precision = len(value)
    padded = value + "0101"[precision - 4 :] if precision < 8 else value
    try:
        d = date(int(padded[0:4]), int(padded[4:6]), int(padded[6:8]))
    except ValueError:
        raise UnparseableDate(value) from None
    shifted = d + timedelta(days=offset_days)
    return f"{shifted.year:04d}{shifted.month:02d}{shifted.day:02d}"[:precision]
