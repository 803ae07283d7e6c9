"""End-to-end de-identification over directory trees.

Per file: header de-identification (rule engine + private dictionary) →
burned-in text removal (per OCR mode) → validation repair → export to the
mirrored output path. Patient-ID/UID mappings accumulate in a shared
store and land in a CSV at the end; per-file failures are recorded and do
not stop the run.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .codec import parse_file, serialize_file
from .errors import DeidError
from .identity import DEFAULT_DATE_OFFSET_DAYS, IdentityStore
from .phi import PatternDetector, RemoteDetector, Whitelist, bundled_whitelist, load_whitelist
from .pixels import DetectionsFile, RemoteOCR, deidentify_image
from .private import PrivateDict, bundled_private_dict, load_private_dict
from .rules import (
    CustomRuleSet,
    DeidContext,
    RuleTable,
    builtin_custom_rules,
    builtin_profile,
    deidentify_dataset,
    load_rule_table,
)
from . import validate as validate_mod

log = logging.getLogger(__name__)

BUILTIN = "builtin"


@dataclass
class RunConfig:
    input_dir: Union[str, Path]
    output_dir: Union[str, Path]
    profile: str = "tcia"
    custom_rules: Optional[Union[str, Path]] = BUILTIN   # None disables the overlay
    private_dict: Optional[Union[str, Path]] = BUILTIN   # None disables the private stage
    whitelist: Optional[Union[str, Path]] = BUILTIN      # None disables suppression
    date_offset_days: int = DEFAULT_DATE_OFFSET_DAYS
    detector: str = "pattern"                            # "pattern" or a service URL
    detector_threshold: float = 0.5
    ocr: Optional[Union[str, Path]] = None               # None | detections file | service URL
    ocr_strict: bool = True
    ocr_confidence: float = 0.3
    fail_safe_all_boxes: bool = False
    validate: bool = True
    required_profile: Optional[Union[str, Path]] = None
    ignore_list: Optional[Union[str, Path]] = None
    workers: int = 1
    salt: Optional[bytes] = None
    mapping_csv: Optional[Union[str, Path]] = None
    report_path: Optional[Union[str, Path]] = None

    def check(self) -> None:
        inp = Path(self.input_dir)
        if not inp.is_dir():
            raise DeidError(f"input directory {inp} does not exist")
        if Path(self.output_dir).resolve() == inp.resolve():
            raise DeidError("output_dir must differ from input_dir")


@dataclass
class FileRecord:
    path: str
    status: str                  # ok | failed
    actions: dict[str, int] = field(default_factory=dict)
    entities: int = 0
    redactions: int = 0
    repairs: list[str] = field(default_factory=list)
    degraded: int = 0
    error: str = ""


@dataclass
class RunReport:
    records: list[FileRecord] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    wall_seconds: float = 0.0
    timings_ms: dict[str, dict[str, float]] = field(default_factory=dict)

    @property
    def failed(self) -> int:
        return sum(1 for r in self.records if r.status != "ok")

    def totals(self) -> dict:
        actions: dict[str, int] = {}
        redactions = repairs = degraded = 0
        for rec in self.records:
            for k, v in rec.actions.items():
                actions[k] = actions.get(k, 0) + v
            redactions += rec.redactions
            repairs += len(rec.repairs)
            degraded += rec.degraded
        return {
            "files_total": len(self.records),
            "files_ok": len(self.records) - self.failed,
            "files_failed": self.failed,
            "files_skipped": len(self.skipped),
            "actions": actions,
            "pixel_redactions": redactions,
            "validation_repairs": repairs,
            "degraded_elements": degraded,
        }

    def to_json(self) -> dict:
        return {
            "summary": self.totals(),
            "files": [
                {
                    "path": r.path,
                    "status": r.status,
                    "actions": r.actions,
                    "entities": r.entities,
                    "redactions": r.redactions,
                    "repairs": r.repairs,
                    "degraded": r.degraded,
                    "error": r.error,
                }
                for r in self.records
            ],
            "skipped": self.skipped,
            "timings": {
                "wall_seconds": self.wall_seconds,
                "per_file_ms": self.timings_ms,
            },
        }


def discover_files(input_dir) -> tuple[list[str], list[str]]:
    """DICOM files under the tree as sorted relative POSIX paths, plus the
    skipped non-DICOM paths. `.dcm` is trusted; extensionless files are
    sniffed for the DICM marker."""
    input_dir = Path(input_dir)
    found: list[str] = []
    skipped: list[str] = []
    for path in sorted(input_dir.rglob("*")):
        if not path.is_file():
            continue
        rel = path.relative_to(input_dir).as_posix()
        if path.suffix.lower() == ".dcm":
            found.append(rel)
        elif path.suffix == "":
            try:
                with open(path, "rb") as fh:
                    fh.seek(128)
                    magic = fh.read(4)
            except OSError:
                magic = b""
            if magic == b"DICM":
                found.append(rel)
            else:
                skipped.append(rel)
        else:
            skipped.append(rel)
    return found, skipped


def _build_rules(config: RunConfig) -> tuple[RuleTable, CustomRuleSet]:
    if config.custom_rules is None:
        return builtin_profile(config.profile), CustomRuleSet()
    if config.custom_rules == BUILTIN:
        if config.profile == "tcia":
            return builtin_custom_rules()
        return builtin_profile(config.profile), CustomRuleSet()
    return load_rule_table(config.custom_rules)


def _build_private(config: RunConfig) -> Optional[PrivateDict]:
    if config.private_dict is None:
        return None
    if config.private_dict == BUILTIN:
        return bundled_private_dict()
    return load_private_dict(config.private_dict)


def _build_whitelist(config: RunConfig) -> Optional[Whitelist]:
    if config.whitelist is None:
        return None
    if config.whitelist == BUILTIN:
        return bundled_whitelist()
    return load_whitelist(config.whitelist)


def _build_detector(config: RunConfig):
    if config.detector == "pattern":
        return PatternDetector()
    return RemoteDetector(config.detector, threshold=config.detector_threshold)


def _build_ocr(config: RunConfig):
    if config.ocr is None:
        return None
    ocr = str(config.ocr)
    if ocr.startswith("http://") or ocr.startswith("https://"):
        return RemoteOCR(ocr)
    return DetectionsFile(ocr, strict=config.ocr_strict)


def run(config: RunConfig) -> RunReport:
    """Process every DICOM file under input_dir; returns the run report."""
    config.check()
    started = time.perf_counter()
    input_dir = Path(config.input_dir)
    output_dir = Path(config.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)

    table, custom = _build_rules(config)
    pdict = _build_private(config)
    whitelist = _build_whitelist(config)
    detector = _build_detector(config)
    ocr_source = _build_ocr(config)
    store = IdentityStore(config.salt, config.date_offset_days)
    if config.validate:
        if config.required_profile is not None:
            required = validate_mod.load_required_profile(config.required_profile)
        else:
            required = validate_mod.builtin_required_profile()
        if config.ignore_list is not None:
            ignore = validate_mod.load_ignore_list(config.ignore_list)
        else:
            ignore = validate_mod.IgnoreList()

    ctx = DeidContext(store, detector, whitelist, config.date_offset_days, pdict)
    report = RunReport()
    found, report.skipped = discover_files(input_dir)

    def process(rel: str) -> tuple[FileRecord, dict[str, float]]:
        record = FileRecord(rel, "ok")
        timings: dict[str, float] = {}
        try:
            t0 = time.perf_counter()
            ds = parse_file((input_dir / rel).read_bytes())
            timings["parse"] = (time.perf_counter() - t0) * 1000

            t0 = time.perf_counter()
            ds, deid_report = deidentify_dataset(ds, table, custom, ctx)
            record.actions = deid_report.action_counts
            record.entities = deid_report.entities_found
            record.degraded = sum(1 for r in deid_report.rows if r.degraded)
            timings["header"] = (time.perf_counter() - t0) * 1000

            if ocr_source is not None:
                t0 = time.perf_counter()
                ds, pixel_report = deidentify_image(
                    ds, ocr_source, detector, whitelist, rel,
                    fail_safe_all=config.fail_safe_all_boxes,
                    min_confidence=config.ocr_confidence)
                record.redactions = pixel_report.redacted_count
                timings["pixels"] = (time.perf_counter() - t0) * 1000

            if config.validate:
                t0 = time.perf_counter()
                issues = validate_mod.validate(ds, required)
                record.repairs = [i.keyword for i in issues if i.keyword not in ignore]
                validate_mod.repair(ds, issues, ignore)
                timings["validate"] = (time.perf_counter() - t0) * 1000

            t0 = time.perf_counter()
            out_path = output_dir / rel
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_bytes(serialize_file(ds))
            timings["export"] = (time.perf_counter() - t0) * 1000
        except Exception as e:  # per-file isolation by contract
            record.status = "failed"
            record.error = f"{type(e).__name__}: {e}"
            log.warning("failed to process %s: %s", rel, record.error)
        return record, timings

    if config.workers <= 1:
        results = [process(rel) for rel in found]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(process, found))

    for record, timings in results:
        report.records.append(record)
        report.timings_ms[record.path] = timings

    mapping_csv = Path(config.mapping_csv) if config.mapping_csv else output_dir / "mappings.csv"
    store.export_mappings(mapping_csv)

    report.wall_seconds = time.perf_counter() - started
    report_path = Path(config.report_path) if config.report_path else output_dir / "run_report.json"
    report_path.write_text(json.dumps(report.to_json(), indent=1, sort_keys=True))
    return report
