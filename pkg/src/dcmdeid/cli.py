"""Command-line interface.

Subcommands: `run` (de-identify a tree), `gen-corpus` (seeded synthetic
corpus + answer key), `score` (compare a run's output against a key).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .harness import AnswerKey, CorpusSpec, generate_corpus, score_run
from .pipeline import BUILTIN, RunConfig, run


def _none_or(value: str):
    return None if value in ("none", "off") else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dcmdeid",
                                     description="DICOM de-identification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="de-identify a directory tree")
    p_run.add_argument("-i", "--input", required=True, help="input directory")
    p_run.add_argument("-o", "--output", required=True, help="output directory")
    p_run.add_argument("--profile", default="tcia", choices=["tcia", "ps315"])
    p_run.add_argument("--custom-rules", default=BUILTIN,
                       help="rule config path, 'builtin', or 'none'")
    p_run.add_argument("--private-dict", default=BUILTIN,
                       help="private dictionary path, 'builtin', or 'none'")
    p_run.add_argument("--whitelist", default=BUILTIN,
                       help="whitelist path, 'builtin', or 'none'")
    p_run.add_argument("--date-offset", type=int, default=120)
    p_run.add_argument("--detector", default=None,
                       help="'pattern' or a detection service URL "
                            "(default: DCMDEID_DETECT_URL or 'pattern')")
    p_run.add_argument("--detector-threshold", type=float, default=0.5)
    p_run.add_argument("--ocr", default=None,
                       help="'off', a detections file, or an OCR service URL "
                            "(default: DCMDEID_OCR_URL or 'off')")
    p_run.add_argument("--ocr-confidence", type=float, default=0.3)
    p_run.add_argument("--ocr-lenient", action="store_true",
                       help="missing detections entries are treated as no boxes")
    p_run.add_argument("--redact-all-boxes", action="store_true",
                       help="redact every detected box without a PHI check")
    p_run.add_argument("--no-validate", action="store_true")
    p_run.add_argument("--required-profile", default=None)
    p_run.add_argument("--ignore-list", default=None)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--salt", default=None, help="hex salt for reproducible runs")
    p_run.add_argument("--mapping-csv", default=None)
    p_run.add_argument("--report", default=None)

    p_gen = sub.add_parser("gen-corpus", help="generate a synthetic corpus + answer key")
    p_gen.add_argument("-o", "--output", required=True, help="destination directory")
    p_gen.add_argument("--n-files", type=int, default=50)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--pixel-text-rate", type=float, default=0.25)
    p_gen.add_argument("--phi-mix", default=None,
                       help="comma list of kind=weight, e.g. 'name=1,date=2'")

    p_score = sub.add_parser("score", help="score a de-identified tree against a key")
    p_score.add_argument("--key", required=True)
    p_score.add_argument("--output", required=True, help="de-identified tree to score")
    p_score.add_argument("--input", default=None,
                         help="source corpus dir (defaults to the key's recorded dir)")
    p_score.add_argument("--report", default=None, help="write the JSON report here")

    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    detector = args.detector or os.environ.get("DCMDEID_DETECT_URL") or "pattern"
    ocr = args.ocr if args.ocr is not None else os.environ.get("DCMDEID_OCR_URL")
    config = RunConfig(
        input_dir=args.input,
        output_dir=args.output,
        profile=args.profile,
        custom_rules=_none_or(args.custom_rules),
        private_dict=_none_or(args.private_dict),
        whitelist=_none_or(args.whitelist),
        date_offset_days=args.date_offset,
        detector=detector,
        detector_threshold=args.detector_threshold,
        ocr=_none_or(ocr) if ocr is not None else None,
        ocr_strict=not args.ocr_lenient,
        ocr_confidence=args.ocr_confidence,
        fail_safe_all_boxes=args.redact_all_boxes,
        validate=not args.no_validate,
        required_profile=args.required_profile,
        ignore_list=args.ignore_list,
        workers=args.workers,
        salt=bytes.fromhex(args.salt) if args.salt else None,
        mapping_csv=args.mapping_csv,
        report_path=args.report,
    )
    report = run(config)
    totals = report.totals()
    print(f"processed {totals['files_ok']}/{totals['files_total']} file(s), "
          f"{totals['files_failed']} failed, {totals['files_skipped']} skipped")
    print(f"pixel redactions: {totals['pixel_redactions']}, "
          f"validation repairs: {totals['validation_repairs']}")
    return 1 if report.failed else 0


def _parse_mix(text: str | None) -> dict[str, float] | None:
    if not text:
        return None
    mix: dict[str, float] = {}
    for part in text.split(","):
        if "=" in part:
            k, v = part.split("=", 1)
            mix[k.strip()] = float(v)
        elif part.strip():
            mix[part.strip()] = 1.0
    return mix


def _cmd_gen(args: argparse.Namespace) -> int:
    spec = CorpusSpec(args.n_files, args.seed, _parse_mix(args.phi_mix),
                      args.pixel_text_rate)
    paths, key = generate_corpus(spec, args.output)
    dest = Path(args.output)
    print(f"wrote {len(paths)} file(s) under {dest / 'files'}")
    print(f"answer key: {dest / 'key.json'}")
    print(f"detections: {dest / 'detections.json'}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    key = AnswerKey.load(args.key)
    report = score_run(key, args.output, args.input)
    print(report.human_table())
    if args.report:
        Path(args.report).write_text(json.dumps(report.to_json(), indent=1, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "gen-corpus":
        return _cmd_gen(args)
    if args.command == "score":
        return _cmd_score(args)
    return 2


if __name__ == "__main__":
    sys.exit(main())
