"""Synthetic corpus generation and output scoring.

The generator writes seeded DICOM files laced with PHI drawn from the
pattern detector's documented families, plus an answer key describing the
expected de-identified output under the bundled reference configuration
(tcia profile + custom overlay + private dictionary + validator + bundled
whitelist, date offset 120). The scorer replays the key against a
pipeline's output tree: per-tag similarity, failure categories, a bucketed
score histogram, and pixel redaction checks.

The key is produced purely by generator bookkeeping (string surgery on its
own templates), never by calling the rule engine or detector, so it stays
an independent oracle for the pipeline.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .codec import (
    DataElement,
    DataSet,
    SequenceItem,
    TransferSyntax,
    new_file,
    parse_file,
    serialize_file,
)
from . import datadict
from .errors import MissingOutputFile, SpecError
from .identity import DEFAULT_DATE_OFFSET_DAYS
from .phi import SURNAMES
from .tags import PIXEL_DATA, Tag, TagPath

# ---------------------------------------------------------------------------
# Answer key model


@dataclass
class KeyEntry:
    path: str
    keyword: str
    kind: str        # value | absent | uid | pid
    expected: str | None
    original: str
    category: str    # phi | private | custom | validation


@dataclass
class FileKey:
    tags: list[KeyEntry] = field(default_factory=list)
    insertions: list[dict] = field(default_factory=list)   # {keyword, path, category}
    pixels: list[dict] = field(default_factory=list)       # {frame, box, phi}


@dataclass
class AnswerKey:
    seed: int
    date_offset_days: int
    source_dir: str
    files: dict[str, FileKey] = field(default_factory=dict)

    def save(self, path) -> None:
        payload = {
            "version": 1,
            "seed": self.seed,
            "date_offset_days": self.date_offset_days,
            "source_dir": self.source_dir,
            "files": {
                rel: {
                    "tags": [vars(e) for e in fk.tags],
                    "insertions": fk.insertions,
                    "pixels": fk.pixels,
                }
                for rel, fk in self.files.items()
            },
        }
        Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True))

    @classmethod
    def load(cls, path) -> "AnswerKey":
        payload = json.loads(Path(path).read_text())
        key = cls(payload["seed"], payload["date_offset_days"], payload["source_dir"])
        for rel, fk in payload["files"].items():
            key.files[rel] = FileKey(
                [KeyEntry(**e) for e in fk["tags"]],
                fk["insertions"],
                fk["pixels"],
            )
        return key


@dataclass
class CorpusSpec:
    n_files: int
    seed: int = 0
    phi_mix: dict[str, float] | None = None  # weights for name/date/id/contact
    pixel_text_rate: float = 0.25

    def allowed_kinds(self) -> set[str]:
        mix = self.phi_mix or {"name": 1.0, "date": 1.0, "id": 1.0, "contact": 1.0}
        allowed = {k for k, w in mix.items() if w > 0}
        bad = allowed - {"name", "date", "id", "contact"}
        if bad:
            raise SpecError(f"unknown phi_mix kinds: {sorted(bad)}")
        return allowed


# ---------------------------------------------------------------------------
# PHI piece vocabulary (drawn from the pattern detector's families)

_FIRST_NAMES = ["John", "Mary", "Robert", "Linda", "Michael", "Susan",
                "David", "Karen", "James", "Nancy", "William", "Laura"]
_SAFE_TERMS = ["axial", "coronal", "sagittal", "routine", "followup", "portable",
               "thin slice", "bone window", "arterial phase", "delayed phase",
               "low dose", "screening", "with contrast", "without contrast",
               "helical", "noncontrast"]
_DECOYS = ["MR BREAST", "MR ABDOMEN CONTRAST", "MR ANGIO BRAIN", "DR CHEST PA"]


@dataclass
class _Piece:
    text: str
    phi_ranges: list[tuple[int, int]] = field(default_factory=list)


def _piece_name(rng: random.Random) -> _Piece:
    surname = rng.choice(SURNAMES)
    form = rng.randrange(4)
    if form == 0:
        text = f"{rng.choice(_FIRST_NAMES)} {surname}"
        return _Piece(text, [(0, len(text))])
    if form == 1:
        text = f"Dr. {surname}"
        return _Piece(text, [(4, len(text))])
    if form == 2:
        text = f"DR {surname.upper()}"
        return _Piece(text, [(0, len(text))])
    text = f"{surname.upper()}^{rng.choice(_FIRST_NAMES).upper()}"
    return _Piece(text, [(0, len(text))])


def _piece_date(rng: random.Random) -> _Piece:
    y = rng.randrange(1950, 2024)
    mo = rng.randrange(1, 13)
    d = rng.randrange(1, 29)
    form = rng.randrange(3)
    if form == 0:
        text = f"{mo:02d}/{d:02d}/{y}"
    elif form == 1:
        text = f"{y}-{mo:02d}-{d:02d}"
    else:
        text = f"{y}{mo:02d}{d:02d}"
    return _Piece(text, [(0, len(text))])


def _piece_id(rng: random.Random) -> _Piece:
    digits = "".join(rng.choice("0123456789") for _ in range(rng.randrange(6, 10)))
    if rng.random() < 0.5:
        text = f"MRN: {digits}"
    else:
        text = digits
    return _Piece(text, [(0, len(text))])


def _piece_contact(rng: random.Random) -> _Piece:
    a = rng.randrange(200, 999)
    b = rng.randrange(200, 999)
    c = rng.randrange(1000, 9999)
    text = f"({a}) {b}-{c}" if rng.random() < 0.5 else f"{a}-{b}-{c}"
    return _Piece(text, [(0, len(text))])


_PIECE_MAKERS = {
    "name": _piece_name,
    "date": _piece_date,
    "id": _piece_id,
    "contact": _piece_contact,
}


def _compose(rng: random.Random, template: list) -> tuple[str, str]:
    """Render a template of literal strings and PHI kind tokens into
    (text, expected text with PHI spans deleted)."""
    text_parts: list[str] = []
    expected_parts: list[str] = []
    for part in template:
        if isinstance(part, str):
            text_parts.append(part)
            expected_parts.append(part)
        else:
            piece = _PIECE_MAKERS[part.kind](rng)
            text_parts.append(piece.text)
            kept = piece.text
            for lo, hi in sorted(piece.phi_ranges, reverse=True):
                kept = kept[:lo] + kept[hi:]
            expected_parts.append(kept)
    return "".join(text_parts), "".join(expected_parts)


@dataclass(frozen=True)
class _Phi:
    kind: str


def _free_text(rng: random.Random, templates: list[list], allowed: set[str]) -> tuple[str, str]:
    usable = [t for t in templates
              if all(p.kind in allowed for p in t if isinstance(p, _Phi))]
    if not usable:
        usable = [t for t in templates if all(isinstance(p, str) for p in t)]
    if not usable:
        usable = [["routine exam"]]
    return _compose(rng, rng.choice(usable))


def _safe(rng: random.Random) -> str:
    return rng.choice(_SAFE_TERMS)


# Templates per free-text field; _Phi tokens mark injected PHI.
def _templates(rng: random.Random) -> dict[str, list[list]]:
    s1, s2 = _safe(rng), _safe(rng)
    return {
        "ProtocolName": [
            [f"{s1} protocol"],
            [f"{s1} protocol ", _Phi("date")],
            [rng.choice(_DECOYS)],
        ],
        "SeriesDescription": [
            [rng.choice(_DECOYS)],
            [f"{s1} {s2}"],
            [f"{s1} for ", _Phi("name")],
        ],
        "StudyDescription": [
            [f"CT {s1} study ", _Phi("date")],
            [f"{s1} {s2} study"],
        ],
        "MedicalAlerts": [
            [f"allergy review ", _Phi("date")],
            ["contact ", _Phi("contact")],
            ["none known"],
        ],
        "AdditionalPatientHistory": [
            ["seen by ", _Phi("name"), " on ", _Phi("date")],
            [f"hx {s1} since ", _Phi("date")],
            [f"chronic {s1}"],
        ],
        "DerivationDescription": [
            ["multiplanar reformat"],
            [f"derived {s1} acq ", _Phi("id")],
        ],
        "RequestedProcedureDescription": [
            [f"{s1} requested by ", _Phi("name")],
            [f"{s1} {s2} requested"],
        ],
        "ScheduledProcedureStepDescription": [
            [f"{s1} step ", _Phi("date")],
            [f"{s1} step"],
        ],
        "StudyComments": [
            ["patient ", _Phi("name"), " ", _Phi("id")],
            ["called ", _Phi("contact")],
        ],
        "ImageComments": [
            [_Phi("name"), " reviewed ", _Phi("date")],
        ],
        "PatientComments": [
            ["call ", _Phi("contact")],
        ],
    }


# ---------------------------------------------------------------------------
# Corpus generation


def _shift_da_expected(value: str, offset: int) -> str:
    d = date(int(value[:4]), int(value[4:6]), int(value[6:8])) + timedelta(days=offset)
    return f"{d.year:04d}{d.month:02d}{d.day:02d}"


def generate_corpus(spec: CorpusSpec, dest) -> tuple[list[str], AnswerKey]:
    """Write `spec.n_files` DICOM files under dest/files plus detections.json
    and key.json. Returns (relative paths, answer key)."""
    if spec.n_files < 0:
        raise SpecError("n_files must be >= 0")
    dest = Path(dest)
    files_dir = dest / "files"
    files_dir.mkdir(parents=True, exist_ok=True)
    allowed = spec.allowed_kinds()
    offset = DEFAULT_DATE_OFFSET_DAYS

    key = AnswerKey(spec.seed, offset, str(files_dir))
    detections: dict[str, dict[str, list[dict]]] = {}
    rel_paths: list[str] = []

    studies = _plan_studies(spec)
    for plan in studies:
        for file_plan in plan["files"]:
            rel, ds, fk, dets = _build_file(spec, plan, file_plan, allowed, offset)
            key.files[rel] = fk
            if dets is not None:
                detections[rel] = dets
            out_path = files_dir / rel
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_bytes(serialize_file(ds))
            rel_paths.append(rel)

    (dest / "detections.json").write_text(json.dumps({"version": 1, "files": detections}, indent=1, sort_keys=True))
    key.save(dest / "key.json")
    return rel_paths, key


def _plan_studies(spec: CorpusSpec) -> list[dict]:
    """Group files into studies sharing patient identity and study UIDs."""
    rng = random.Random(f"corpus:{spec.seed}")
    studies = []
    remaining = spec.n_files
    study_idx = 0
    while remaining > 0:
        size = min(remaining, rng.randrange(2, 5))
        remaining -= size
        study_idx += 1
        uid_base = f"1.2.826.0.1.9990.{spec.seed & 0xFFFF}.{study_idx}"
        patient = {
            "name": f"{rng.choice(SURNAMES).upper()}^{rng.choice(_FIRST_NAMES).upper()}",
            "pid": "".join(rng.choice("0123456789") for _ in range(8)),
            "birth": f"{rng.randrange(1935, 2000)}{rng.randrange(1, 13):02d}{rng.randrange(1, 29):02d}",
            "sex": rng.choice(["M", "F", "O"]),
        }
        modality = rng.choice(["CT", "MR", "CR"])
        files = []
        prev_sop = None
        for j in range(size):
            series_no = 1 + j // 2
            sop_uid = f"{uid_base}.{series_no}.{j + 1}"
            files.append({
                "index": j,
                "series_no": series_no,
                "series_uid": f"{uid_base}.{series_no}",
                "sop_uid": sop_uid,
                "ref_sop_uid": prev_sop,
                "instance": j + 1,
            })
            prev_sop = sop_uid
        studies.append({
            "idx": study_idx,
            "uid": uid_base + ".0",
            "frame_uid": uid_base + ".900",
            "patient": patient,
            "modality": modality,
            "study_date": f"{rng.randrange(2015, 2024)}{rng.randrange(1, 13):02d}{rng.randrange(1, 29):02d}",
            "study_time": f"{rng.randrange(0, 24):02d}{rng.randrange(0, 60):02d}{rng.randrange(0, 60):02d}",
            "accession": "".join(rng.choice("0123456789") for _ in range(7)),
            "files": files,
        })
    return studies


_MODALITY_SOP = {
    "CT": datadict.UID_CT_IMAGE_STORAGE,
    "MR": datadict.UID_MR_IMAGE_STORAGE,
    "CR": datadict.UID_CR_IMAGE_STORAGE,
}


def _build_file(spec: CorpusSpec, study: dict, fp: dict, allowed: set[str],
                offset: int) -> tuple[str, DataSet, FileKey, dict | None]:
    rng = random.Random(f"file:{spec.seed}:{study['idx']}:{fp['index']}")
    fk = FileKey()
    modality = study["modality"]
    sop_class = _MODALITY_SOP[modality]
    explicit = rng.random() < 0.7
    ts = TransferSyntax.EXPLICIT_VR_LE if explicit else TransferSyntax.IMPLICIT_VR_LE
    ds = new_file(ts, sop_class, fp["sop_uid"])
    rel = f"study{study['idx']:03d}/series{fp['series_no']}/img{fp['instance']:03d}.dcm"

    def kw(name: str) -> Tag:
        return datadict.tag_by_keyword(name)

    def add(keyword: str, value, kind: str = "value", expected=None,
            category: str = "phi", vr: str | None = None) -> None:
        tag = kw(keyword)
        vr = vr or datadict.vr_of(tag)
        el = DataElement.text(tag, vr, value)
        ds.set(el)
        original = el.text_value()
        if kind == "value" and expected is None:
            expected = original
        fk.tags.append(KeyEntry(f"{tag}", keyword, kind, expected, original, category))

    def add_binary(keyword_or_tag, vr: str, raw: bytes, kind: str = "value",
                   expected=None, category: str = "phi") -> None:
        tag = keyword_or_tag if isinstance(keyword_or_tag, Tag) else kw(keyword_or_tag)
        el = DataElement.binary(tag, vr, raw)
        ds.set(el)
        original = "hex:" + el.raw.hex()
        if kind == "value" and expected is None:
            expected = original
        keyword = keyword_or_tag if isinstance(keyword_or_tag, str) else (datadict.keyword_of(tag) or "")
        fk.tags.append(KeyEntry(f"{tag}", keyword, kind, expected, original, category))

    templates = _templates(rng)

    def add_text_field(keyword: str, category: str = "phi", kind: str = "value") -> None:
        text, expected = _free_text(rng, templates[keyword], allowed)
        if kind == "absent":
            add(keyword, text, "absent", None, category)
        else:
            add(keyword, text, "value", expected, category)

    # Key entry for the meta SOP instance UID (same class as the body one).
    fk.tags.append(KeyEntry(f"{Tag(0x0002, 0x0003)}", "MediaStorageSOPInstanceUID",
                            "uid", None, fp["sop_uid"], "phi"))

    # -- identification ----------------------------------------------------
    add("SpecificCharacterSet", "ISO_IR 100")
    add("ImageType", ["ORIGINAL", "PRIMARY", "AXIAL"])
    add("SOPClassUID", sop_class)
    add("SOPInstanceUID", fp["sop_uid"], "uid", None)
    add("StudyDate", study["study_date"], "value",
        _shift_da_expected(study["study_date"], offset))
    if rng.random() < 0.6:
        add("SeriesDate", study["study_date"], "value",
            _shift_da_expected(study["study_date"], offset))
    if rng.random() < 0.4:
        dt = study["study_date"] + study["study_time"]
        add("AcquisitionDateTime", dt, "value",
            _shift_da_expected(study["study_date"], offset) + study["study_time"])
    strip_study_time = rng.random() < 0.4
    if not strip_study_time:
        add("StudyTime", study["study_time"])
    else:
        fk.insertions.append({"keyword": "StudyTime", "path": f"{kw('StudyTime')}",
                              "category": "validation"})
    add("AccessionNumber", study["accession"], "value", "")
    add("Modality", modality)
    if modality == "CR":
        add("PresentationIntentType", "FOR PRESENTATION")
    add("Manufacturer", rng.choice(["ACME Imaging", "Zenith Medical", "Orion Systems"]))
    add("InstitutionName", rng.choice(["Mercy General Hospital", "Lakeside Clinic",
                                       "Summit Medical Center"]), "value", "")
    add("ReferringPhysicianName",
        f"{rng.choice(SURNAMES).upper()}^{rng.choice(_FIRST_NAMES).upper()}", "value", "")
    add("StationName", f"STATION{rng.randrange(1, 20)}", "value", None, "custom")
    add_text_field("StudyDescription")
    add_text_field("SeriesDescription")
    add("ManufacturerModelName", rng.choice(["Apex 3000", "Quasar 9", "Pulse 640"]))
    if rng.random() < 0.5:
        add("OperatorsName", f"{rng.choice(SURNAMES).upper()}^{rng.choice(_FIRST_NAMES)[:1]}",
            "value", "")

    # Referenced image sequence linking to the previous instance in the series.
    if fp["ref_sop_uid"] is not None:
        item = SequenceItem()
        item.elements[kw("ReferencedSOPClassUID")] = DataElement.text(
            kw("ReferencedSOPClassUID"), "UI", sop_class)
        item.elements[kw("ReferencedSOPInstanceUID")] = DataElement.text(
            kw("ReferencedSOPInstanceUID"), "UI", fp["ref_sop_uid"])
        seq = DataElement.sequence(kw("ReferencedImageSequence"), [item],
                                   undefined=rng.random() < 0.5)
        ds.set(seq)
        base = TagPath.top(kw("ReferencedImageSequence"))
        fk.tags.append(KeyEntry(str(base), "ReferencedImageSequence", "value",
                                "sq[1]", "sq[1]", "phi"))
        fk.tags.append(KeyEntry(str(base.child(0, kw("ReferencedSOPClassUID"))),
                                "ReferencedSOPClassUID", "value", sop_class, sop_class, "phi"))
        fk.tags.append(KeyEntry(str(base.child(0, kw("ReferencedSOPInstanceUID"))),
                                "ReferencedSOPInstanceUID", "uid", None,
                                fp["ref_sop_uid"], "phi"))

    if rng.random() < 0.3:
        add_text_field("DerivationDescription")

    # -- patient -----------------------------------------------------------
    add("PatientName", study["patient"]["name"], "value", "")
    add("PatientID", study["patient"]["pid"], "pid", None)
    add("PatientBirthDate", study["patient"]["birth"], "value", "")
    add("PatientSex", study["patient"]["sex"])
    if rng.random() < 0.5:
        add("PatientAge", f"{rng.randrange(20, 89):03d}Y")
    if rng.random() < 0.4:
        add("PatientAddress", f"{rng.randrange(10, 999)} Main Street", "absent", None)
    if rng.random() < 0.5:
        add_text_field("MedicalAlerts")
    if rng.random() < 0.6:
        add("Allergies", rng.choice(["penicillin", "iodine", "latex"]),
            "absent", None, "custom")
    if rng.random() < 0.4:
        add("Occupation", rng.choice(["farmer", "teacher", "engineer"]),
            "absent", None, "custom")
    if rng.random() < 0.5:
        add_text_field("AdditionalPatientHistory")
    if rng.random() < 0.3:
        add_text_field("PatientComments", "custom", "absent")

    # -- clinical trial / acquisition ---------------------------------------
    if rng.random() < 0.3:
        add("ClinicalTrialSubjectID", f"SUBJ{rng.randrange(100, 999)}", "value", "")
    if modality == "CT" and rng.random() < 0.5:
        add("ContrastBolusAgent", "iodinated agent")
    if modality == "MR" and rng.random() < 0.5:
        add("ContrastBolusAgent", "gadolinium agent")
    add("DeviceSerialNumber", f"SN-{rng.randrange(1000, 9999)}", "value", None, "custom")
    device_uid = f"1.2.826.0.1.556677.3.{rng.randrange(1, 5000)}"
    add("DeviceUID", device_uid, "value", device_uid, "custom")
    if modality == "CR":
        add("PlateID", f"PLT-{rng.randrange(10, 99)}", "value", None, "custom")
    add("SoftwareVersions", f"v{rng.randrange(1, 9)}.{rng.randrange(0, 9)}")
    add_text_field("ProtocolName")

    # -- relationship -------------------------------------------------------
    add("StudyInstanceUID", study["uid"], "uid", None)
    add("SeriesInstanceUID", fp["series_uid"], "uid", None)
    add("StudyID", f"S{rng.randrange(1000, 9999)}", "value", "")
    strip_series_number = rng.random() < 0.3
    if not strip_series_number:
        add("SeriesNumber", str(fp["series_no"]))
    else:
        fk.insertions.append({"keyword": "SeriesNumber", "path": f"{kw('SeriesNumber')}",
                              "category": "validation"})
    add("InstanceNumber", str(fp["instance"]))
    if modality in ("CT", "MR"):
        add("FrameOfReferenceUID", study["frame_uid"], "uid", None)
    if rng.random() < 0.4:
        add_text_field("ImageComments", "custom", "absent")
    if rng.random() < 0.3:
        add_text_field("StudyComments", "custom", "absent")
    if rng.random() < 0.3:
        add("PatientState", rng.choice(["stable outpatient", "inpatient recovery"]),
            "absent", None, "custom")
    if rng.random() < 0.4:
        add_text_field("RequestedProcedureDescription")
    if rng.random() < 0.3:
        item = SequenceItem()
        text, expected = _free_text(rng, templates["ScheduledProcedureStepDescription"], allowed)
        el = DataElement.text(kw("ScheduledProcedureStepDescription"), "LO", text)
        item.elements[el.tag] = el
        seq = DataElement.sequence(kw("RequestAttributesSequence"), [item])
        ds.set(seq)
        base = TagPath.top(kw("RequestAttributesSequence"))
        fk.tags.append(KeyEntry(str(base), "RequestAttributesSequence", "value",
                                "sq[1]", "sq[1]", "phi"))
        fk.tags.append(KeyEntry(str(base.child(0, el.tag)),
                                "ScheduledProcedureStepDescription", "value",
                                expected, el.text_value(), "phi"))
    if rng.random() < 0.4:
        add("PresentationLUTShape", "IDENTITY")

    # -- private blocks (explicit files only: keys need a real VR) ----------
    if explicit and rng.random() < 0.75:
        _add_private_blocks(ds, fk, rng)

    # -- pixels --------------------------------------------------------------
    dets = None
    if rng.random() < spec.pixel_text_rate:
        dets = _add_pixels(ds, fk, rng)

    return rel, ds, fk, dets


def _add_private_blocks(ds: DataSet, fk: FileKey, rng: random.Random) -> None:
    def entry(tag: Tag, kind: str, expected, original, note_kw: str = "") -> None:
        fk.tags.append(KeyEntry(f"{tag}", note_kw, kind, expected, original, "private"))

    creator = DataElement.text(Tag(0x0009, 0x0010), "LO", "gems_petd_01")
    ds.set(creator)
    entry(Tag(0x0009, 0x0010), "value", "gems_petd_01", "gems_petd_01", "PrivateCreator")

    kept = DataElement.text(Tag(0x0009, 0x1001), "LO", f"PET{rng.randrange(10, 99)}A")
    ds.set(kept)
    entry(Tag(0x0009, 0x1001), "value", kept.text_value(), kept.text_value())

    dropped = DataElement.text(Tag(0x0009, 0x1002), "LO", f"tech {rng.choice(SURNAMES)}")
    ds.set(dropped)
    entry(Tag(0x0009, 0x1002), "absent", None, dropped.text_value())

    counter = DataElement.sl(Tag(0x0009, 0x102B), rng.randrange(0, 1 << 30))
    ds.set(counter)
    entry(Tag(0x0009, 0x102B), "value", "hex:" + counter.raw.hex(), "hex:" + counter.raw.hex())

    if rng.random() < 0.5:
        ds.set(DataElement.text(Tag(0x0011, 0x0010), "LO", "ACME_SCANNER_01"))
        entry(Tag(0x0011, 0x0010), "value", "ACME_SCANNER_01", "ACME_SCANNER_01", "PrivateCreator")
        keep2 = DataElement.text(Tag(0x0011, 0x1001), "LO", f"coil {rng.randrange(1, 9)}")
        ds.set(keep2)
        entry(Tag(0x0011, 0x1001), "value", keep2.text_value(), keep2.text_value())
        emptied = DataElement.text(Tag(0x0011, 0x1003), "LO", f"site {rng.choice(SURNAMES)}")
        ds.set(emptied)
        entry(Tag(0x0011, 0x1003), "value", "", emptied.text_value())
        orphan = DataElement.text(Tag(0x0011, 0x1E01), "LO", "orphan block value")
        ds.set(orphan)
        entry(Tag(0x0011, 0x1E01), "absent", None, orphan.text_value())

    if rng.random() < 0.3:
        ds.set(DataElement.text(Tag(0x0013, 0x0010), "LO", "TEMP_VENDOR"))
        entry(Tag(0x0013, 0x0010), "absent", None, "TEMP_VENDOR", "PrivateCreator")
        doomed = DataElement.text(Tag(0x0013, 0x1001), "LO", f"op {rng.choice(SURNAMES)}")
        ds.set(doomed)
        entry(Tag(0x0013, 0x1001), "absent", None, doomed.text_value())


_PIXEL_PHI_TEXTS = [
    "John Smith 01/02/1960",
    "MRN: 4482913",
    "DOE^JANE 19781122",
    "Robert Walker 555-201-3344",
]
_PIXEL_SAFE_TEXTS = ["R", "L", "CT AXIAL", "PA"]


def _add_pixels(ds: DataSet, fk: FileKey, rng: random.Random) -> dict[str, list[dict]]:
    rows = cols = rng.choice([48, 64, 80])
    bits = 8 if rng.random() < 0.7 else 16
    n_frames = 2 if rng.random() < 0.2 else 1
    dtype = np.uint8 if bits == 8 else np.dtype("<u2")
    burn = 250 if bits == 8 else 60000

    yy, xx = np.mgrid[0:rows, 0:cols]
    background = ((yy * 3 + xx * 7) % 180 + 10).astype(dtype)

    ds.set(DataElement.us(datadict.tag_by_keyword("SamplesPerPixel"), 1))
    ds.set(DataElement.text(datadict.tag_by_keyword("PhotometricInterpretation"), "CS", "MONOCHROME2"))
    if n_frames > 1:
        ds.set(DataElement.text(datadict.tag_by_keyword("NumberOfFrames"), "IS", str(n_frames)))
    ds.set(DataElement.us(datadict.tag_by_keyword("Rows"), rows))
    ds.set(DataElement.us(datadict.tag_by_keyword("Columns"), cols))
    ds.set(DataElement.us(datadict.tag_by_keyword("BitsAllocated"), bits))
    ds.set(DataElement.us(datadict.tag_by_keyword("BitsStored"), bits))
    ds.set(DataElement.us(datadict.tag_by_keyword("HighBit"), bits - 1))
    ds.set(DataElement.us(datadict.tag_by_keyword("PixelRepresentation"), 0))

    frames = []
    dets: dict[str, list[dict]] = {}
    for fi in range(n_frames):
        frame = background.copy()
        boxes = []
        if fi == 0:
            n_boxes = rng.randrange(1, 3)
            y = 4
            for _ in range(n_boxes):
                w = rng.randrange(14, min(26, cols - 6))
                h = rng.randrange(5, 9)
                x0 = rng.randrange(2, cols - w - 2)
                box = (x0, y, x0 + w, y + h)
                y += h + 3
                phi = rng.random() < 0.7
                text = rng.choice(_PIXEL_PHI_TEXTS if phi else _PIXEL_SAFE_TEXTS)
                frame[box[1]:box[3], box[0]:box[2]] = burn
                boxes.append({"x0": box[0], "y0": box[1], "x1": box[2], "y1": box[3],
                              "text": text, "score": 0.95})
                fk.pixels.append({"frame": fi, "box": list(box), "phi": phi})
        frames.append(frame)
        dets[str(fi)] = boxes

    raw = b"".join(f.tobytes() for f in frames)
    el = DataElement(PIXEL_DATA, "OW")
    el.set_bytes(raw)
    ds.set(el)
    return dets


# ---------------------------------------------------------------------------
# Scoring


def check_score(expected: str, produced: str) -> float:
    """Similarity in [0,1]: 1.0 on equality after trailing-padding
    normalization, else 1 - editdistance/max(len)."""
    e = expected.rstrip(" \x00")
    p = produced.rstrip(" \x00")
    if e == p:
        return 1.0
    m = max(len(e), len(p))
    return 1.0 - _edit_distance(e, p) / m


def _edit_distance(a: str, b: str) -> int:
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


HISTOGRAM_BUCKETS = ["0.0", "(0.0,0.25)", "[0.25,0.4)", "[0.4,0.5)",
                     "[0.5,0.7)", "[0.7,0.8)", "[0.8,0.99]", "(0.99,1.0)"]


def bucket_of(score: float) -> str:
    if score == 0.0:
        return "0.0"
    if score < 0.25:
        return "(0.0,0.25)"
    if score < 0.4:
        return "[0.25,0.4)"
    if score < 0.5:
        return "[0.4,0.5)"
    if score < 0.7:
        return "[0.5,0.7)"
    if score < 0.8:
        return "[0.7,0.8)"
    if score <= 0.99:
        return "[0.8,0.99]"
    return "(0.99,1.0)"


@dataclass
class Mismatch:
    file: str
    path: str
    keyword: str
    expected: str | None
    produced: str | None
    score: float
    category: str


@dataclass
class ScoreReport:
    total: int = 0
    matched: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)
    per_tag_failures: dict[str, int] = field(default_factory=dict)
    histogram: dict[str, int] = field(default_factory=lambda: {b: 0 for b in HISTOGRAM_BUCKETS})
    categories: dict[str, int] = field(default_factory=dict)
    pixel_boxes_total: int = 0
    pixel_boxes_failed: int = 0
    pixel_outside_violations: int = 0
    files_scored: int = 0

    @property
    def accuracy(self) -> float:
        return self.matched / self.total if self.total else 1.0

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "matched": self.matched,
            "accuracy": self.accuracy,
            "per_tag_failures": dict(sorted(self.per_tag_failures.items(),
                                            key=lambda kv: -kv[1])),
            "histogram": self.histogram,
            "categories": self.categories,
            "pixel_boxes_total": self.pixel_boxes_total,
            "pixel_boxes_failed": self.pixel_boxes_failed,
            "pixel_outside_violations": self.pixel_outside_violations,
            "files_scored": self.files_scored,
            "mismatches": [vars(m) for m in self.mismatches[:200]],
        }

    def human_table(self) -> str:
        lines = [
            f"files scored      {self.files_scored}",
            f"tag instances     {self.total}",
            f"matched           {self.matched}",
            f"accuracy          {self.accuracy * 100:.2f}%",
            "",
            "failures by tag name:",
        ]
        for kw, n in sorted(self.per_tag_failures.items(), key=lambda kv: -kv[1]):
            lines.append(f"  {kw or '<private>':42s} {n}")
        lines.append("")
        lines.append("failures by category:")
        for cat, n in sorted(self.categories.items(), key=lambda kv: -kv[1]):
            lines.append(f"  {cat:12s} {n}")
        lines.append("")
        lines.append("check_score histogram (mismatches only):")
        for b in HISTOGRAM_BUCKETS:
            lines.append(f"  {b:12s} {self.histogram[b]}")
        if self.pixel_boxes_total:
            lines.append("")
            lines.append(f"pixel boxes       {self.pixel_boxes_total}"
                         f" (failed {self.pixel_boxes_failed},"
                         f" outside violations {self.pixel_outside_violations})")
        return "\n".join(lines)


def _produced_value(ds: DataSet, path_str: str) -> str | None:
    """Comparable string for the element at a path: text for string VRs,
    'hex:...' for binary, 'sq[n]' for sequences, None when absent."""
    if path_str == "(0002,0003)":
        el = ds.get_meta(Tag(0x0002, 0x0003))
    else:
        el = ds.get_path(TagPath.parse(path_str))
    if el is None:
        return None
    return _comparable(el)


def _comparable(el: DataElement) -> str:
    from .codec import STRING_VRS

    if el.is_sequence:
        return f"sq[{len(el.items)}]"
    if el.vr in STRING_VRS:
        return el.text_value()
    return "hex:" + el.raw.hex()


_UID_OK = re.compile(r"[0-9]+(\.[0-9]+)*")


def score_run(key: AnswerKey, output_dir, input_dir=None) -> ScoreReport:
    """Compare a pipeline's output tree against the answer key."""
    output_dir = Path(output_dir)
    input_dir = Path(input_dir) if input_dir is not None else Path(key.source_dir)
    report = ScoreReport()

    # (kind, original) -> list of (mismatch stub, produced)
    groups: dict[tuple[str, str], list[tuple[Mismatch, str | None]]] = {}

    for rel, fk in sorted(key.files.items()):
        out_path = output_dir / rel
        if not out_path.exists():
            raise MissingOutputFile(str(out_path))
        out_ds = parse_file(out_path.read_bytes())
        report.files_scored += 1

        for entry in fk.tags:
            produced = _produced_value(out_ds, entry.path)
            stub = Mismatch(rel, entry.path, entry.keyword, entry.expected,
                            produced, 0.0, entry.category)
            report.total += 1
            if entry.kind == "value":
                # absence never matches a value expectation, even an empty one
                score = 0.0 if produced is None else check_score(entry.expected or "", produced)
                _tally(report, stub, score)
            elif entry.kind == "absent":
                _tally(report, stub, 1.0 if produced is None else 0.0)
            elif entry.kind in ("uid", "pid"):
                groups.setdefault((entry.kind, entry.original), []).append((stub, produced))
            else:
                raise SpecError(f"unknown key entry kind {entry.kind!r}")

        for ins in fk.insertions:
            produced = _produced_value(out_ds, ins["path"])
            stub = Mismatch(rel, ins["path"], ins["keyword"], "", produced, 0.0,
                            ins["category"])
            report.total += 1
            _tally(report, stub, 1.0 if produced == "" else 0.0)

        if fk.pixels:
            _score_pixels(report, rel, fk, input_dir / rel, out_path)

    for (kind, original), members in groups.items():
        produced_values = {p for _, p in members}
        ok = len(produced_values) == 1
        value = next(iter(produced_values))
        if value is None or value == original or len(value) > 64:
            ok = False
        elif kind == "uid" and not _UID_OK.fullmatch(value):
            ok = False
        for stub, _ in members:
            _tally(report, stub, 1.0 if ok else 0.0)

    return report


def _tally(report: ScoreReport, stub: Mismatch, score: float) -> None:
    if score >= 1.0:
        report.matched += 1
        return
    stub.score = score
    report.mismatches.append(stub)
    report.per_tag_failures[stub.keyword] = report.per_tag_failures.get(stub.keyword, 0) + 1
    report.histogram[bucket_of(score)] += 1
    report.categories[stub.category] = report.categories.get(stub.category, 0) + 1


def _score_pixels(report: ScoreReport, rel: str, fk: FileKey, src_path: Path,
                  out_path: Path) -> None:
    from .pixels import extract_frames

    src_frames = extract_frames(parse_file(src_path.read_bytes()))
    out_frames = extract_frames(parse_file(out_path.read_bytes()))
    if len(src_frames) != len(out_frames):
        report.pixel_outside_violations += 1
        return

    phi_boxes_by_frame: dict[int, list[list[int]]] = {}
    for px in fk.pixels:
        report.pixel_boxes_total += 1
        if px["phi"]:
            phi_boxes_by_frame.setdefault(px["frame"], []).append(px["box"])

    for fi, (src, out) in enumerate(zip(src_frames, out_frames)):
        changed = src.pixels != out.pixels
        allowed = np.zeros_like(changed)
        for x0, y0, x1, y1 in phi_boxes_by_frame.get(fi, []):
            allowed[y0:y1, x0:x1] = True
        if bool((changed & ~allowed).any()):
            report.pixel_outside_violations += 1

    for px in fk.pixels:
        fi = px["frame"]
        x0, y0, x1, y1 = px["box"]
        src, out = src_frames[fi], out_frames[fi]
        region_changed = (src.pixels[y0:y1, x0:x1] != out.pixels[y0:y1, x0:x1])
        frac = float(region_changed.mean()) if region_changed.size else 0.0
        if px["phi"]:
            if frac < 0.95:
                report.pixel_boxes_failed += 1
        else:
            if frac > 0.0:
                report.pixel_boxes_failed += 1
