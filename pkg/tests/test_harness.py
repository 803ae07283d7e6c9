"""Corpus generator and scorer: determinism, metric, categories, buckets."""

import hashlib
import json
from pathlib import Path

import pytest

from dcmdeid.codec import parse_file
from dcmdeid.errors import MissingOutputFile, SpecError
from dcmdeid.harness import (
    HISTOGRAM_BUCKETS,
    AnswerKey,
    CorpusSpec,
    bucket_of,
    check_score,
    generate_corpus,
    score_run,
)
from dcmdeid.phi import PatternDetector, bundled_whitelist, deidentified_element_val
from dcmdeid.pipeline import RunConfig, run


# ---------------------------------------------------------------------------
# check_score


def test_check_score_examples():
    assert check_score("abc", "abc") == 1.0
    assert check_score("abc", "xyz") == 0.0       # edit distance 3 / 3
    assert check_score("abcd", "abce") == 0.75    # edit distance 1 / 4
    assert check_score("", "") == 1.0
    assert check_score("abc ", "abc") == 1.0      # trailing padding normalized
    assert check_score("abc\x00", "abc") == 1.0


def test_check_score_self_is_one():
    for s in ("", "a", "some value", "20230101", "x" * 100):
        assert check_score(s, s) == 1.0


def test_check_score_bounds():
    import random

    rng = random.Random(0)
    alphabet = "abcdef "
    for _ in range(300):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 12)))
        s = check_score(a, b)
        assert 0.0 <= s <= 1.0


def test_bucket_edges():
    assert bucket_of(0.0) == "0.0"
    assert bucket_of(0.1) == "(0.0,0.25)"
    assert bucket_of(0.25) == "[0.25,0.4)"
    assert bucket_of(0.399) == "[0.25,0.4)"
    assert bucket_of(0.4) == "[0.4,0.5)"
    assert bucket_of(0.5) == "[0.5,0.7)"
    assert bucket_of(0.7) == "[0.7,0.8)"
    assert bucket_of(0.8) == "[0.8,0.99]"
    assert bucket_of(0.99) == "[0.8,0.99]"
    assert bucket_of(0.995) == "(0.99,1.0)"


# ---------------------------------------------------------------------------
# generator


def test_zero_files(tmp_path):
    paths, key = generate_corpus(CorpusSpec(0, seed=1), tmp_path)
    assert paths == [] and key.files == {}


def test_negative_files_rejected(tmp_path):
    with pytest.raises(SpecError):
        generate_corpus(CorpusSpec(-1), tmp_path)


def test_unknown_mix_rejected(tmp_path):
    with pytest.raises(SpecError):
        generate_corpus(CorpusSpec(2, phi_mix={"ssn": 1.0}), tmp_path)


def _tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_same_seed_byte_identical(tmp_path):
    generate_corpus(CorpusSpec(12, seed=5, pixel_text_rate=0.5), tmp_path / "a")
    generate_corpus(CorpusSpec(12, seed=5, pixel_text_rate=0.5), tmp_path / "b")
    assert _tree_hash(tmp_path / "a" / "files") == _tree_hash(tmp_path / "b" / "files")
    ka = json.loads((tmp_path / "a" / "key.json").read_text())
    kb = json.loads((tmp_path / "b" / "key.json").read_text())
    ka["source_dir"] = kb["source_dir"] = ""
    assert ka == kb


def test_different_seed_differs(tmp_path):
    generate_corpus(CorpusSpec(6, seed=1), tmp_path / "a")
    generate_corpus(CorpusSpec(6, seed=2), tmp_path / "b")
    assert _tree_hash(tmp_path / "a" / "files") != _tree_hash(tmp_path / "b" / "files")


FREE_TEXT_KEYWORDS = {
    "ProtocolName", "SeriesDescription", "StudyDescription", "MedicalAlerts",
    "AdditionalPatientHistory", "DerivationDescription",
    "RequestedProcedureDescription", "ScheduledProcedureStepDescription",
    "ContrastBolusAgent", "Manufacturer", "ManufacturerModelName",
    "SoftwareVersions",
}


def test_date_only_mix(tmp_path):
    paths, key = generate_corpus(CorpusSpec(10, seed=3, phi_mix={"date": 1.0}), tmp_path)
    det = PatternDetector()
    wl = bundled_whitelist()
    for fk in key.files.values():
        for entry in fk.tags:
            if entry.keyword not in FREE_TEXT_KEYWORDS or entry.kind != "value":
                continue
            from dcmdeid.phi import detect_filtered

            for span in detect_filtered(det, wl, entry.original):
                assert span.category.value == "DATE"


def test_key_roundtrips(tmp_path):
    _, key = generate_corpus(CorpusSpec(5, seed=9), tmp_path)
    loaded = AnswerKey.load(tmp_path / "key.json")
    assert loaded.files.keys() == key.files.keys()
    rel = next(iter(key.files))
    assert [vars(e) for e in loaded.files[rel].tags] == [vars(e) for e in key.files[rel].tags]


def test_generated_files_parse(tmp_path):
    paths, _ = generate_corpus(CorpusSpec(8, seed=4, pixel_text_rate=0.5), tmp_path)
    for rel in paths:
        parse_file((tmp_path / "files" / rel).read_bytes())


def test_cleantext_expectations_match_detector_oracle(tmp_path):
    """Every CleanText expectation in the key must equal what the detector
    family contract yields on the original value (whitelist applied)."""
    _, key = generate_corpus(CorpusSpec(30, seed=17, pixel_text_rate=0.0), tmp_path)
    det = PatternDetector()
    wl = bundled_whitelist()
    checked = 0
    for fk in key.files.values():
        for entry in fk.tags:
            if entry.kind != "value" or entry.keyword not in FREE_TEXT_KEYWORDS:
                continue
            got = deidentified_element_val(det, wl, entry.original)
            assert got == entry.expected, (entry.keyword, entry.original)
            checked += 1
    assert checked > 50


# ---------------------------------------------------------------------------
# score_run


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    td = tmp_path_factory.mktemp("run")
    spec = CorpusSpec(16, seed=21, pixel_text_rate=0.4)
    paths, key = generate_corpus(spec, td / "corpus")
    cfg = RunConfig(input_dir=td / "corpus" / "files", output_dir=td / "out",
                    ocr=td / "corpus" / "detections.json", salt=b"\x07" * 16)
    report = run(cfg)
    assert report.failed == 0
    return td, key


def test_full_config_scores_perfect(small_run):
    td, key = small_run
    sr = score_run(key, td / "out")
    assert sr.accuracy == 1.0
    assert sr.mismatches == []
    assert sr.pixel_boxes_failed == 0 and sr.pixel_outside_violations == 0


def test_missing_output_file(small_run, tmp_path):
    _, key = small_run
    with pytest.raises(MissingOutputFile):
        score_run(key, tmp_path / "empty")


def test_identity_transform_accuracy_exact(tmp_path):
    """Copying input to output scores exactly (total-K)/total."""
    import shutil

    spec = CorpusSpec(10, seed=33, pixel_text_rate=0.0)
    paths, key = generate_corpus(spec, tmp_path / "corpus")
    shutil.copytree(tmp_path / "corpus" / "files", tmp_path / "out")
    sr = score_run(key, tmp_path / "out")
    total = k = 0
    for fk in key.files.values():
        for entry in fk.tags:
            total += 1
            if entry.kind in ("uid", "pid", "absent") or entry.expected != entry.original:
                k += 1
        total += len(fk.insertions)
        k += len(fk.insertions)
    assert sr.total == total
    assert sr.matched == total - k
    assert sr.accuracy == (total - k) / total


def test_private_disabled_mismatches_land_in_private_category(tmp_path):
    spec = CorpusSpec(14, seed=8, pixel_text_rate=0.0)
    _, key = generate_corpus(spec, tmp_path / "corpus")
    cfg = RunConfig(input_dir=tmp_path / "corpus" / "files", output_dir=tmp_path / "out",
                    private_dict=None, salt=b"\x01" * 16)
    run(cfg)
    sr = score_run(key, tmp_path / "out")
    assert sr.mismatches, "corpus must contain private blocks"
    assert set(sr.categories) == {"private"}


def test_whitelist_disabled_yields_phi_category_failure(tmp_path):
    # find a seed whose corpus contains a whitelist decoy in a description
    spec = CorpusSpec(20, seed=2, pixel_text_rate=0.0)
    _, key = generate_corpus(spec, tmp_path / "corpus")
    decoys = [e for fk in key.files.values() for e in fk.tags
              if e.kind == "value" and e.original in
              ("MR BREAST", "MR ABDOMEN CONTRAST", "MR ANGIO BRAIN", "DR CHEST PA")]
    assert decoys, "corpus must contain decoy descriptions"
    cfg = RunConfig(input_dir=tmp_path / "corpus" / "files", output_dir=tmp_path / "out",
                    whitelist=None, salt=b"\x01" * 16)
    run(cfg)
    sr = score_run(key, tmp_path / "out")
    assert sr.categories.get("phi", 0) > 0
    assert any(m.expected == m.expected and m.keyword in
               ("SeriesDescription", "ProtocolName", "StudyDescription")
               for m in sr.mismatches)


def test_histogram_and_category_sums(tmp_path):
    spec = CorpusSpec(12, seed=13, pixel_text_rate=0.0)
    _, key = generate_corpus(spec, tmp_path / "corpus")
    cfg = RunConfig(input_dir=tmp_path / "corpus" / "files", output_dir=tmp_path / "out",
                    custom_rules=None, private_dict=None, validate=False,
                    whitelist=None, salt=b"\x01" * 16)
    run(cfg)
    sr = score_run(key, tmp_path / "out")
    assert sr.mismatches
    assert sum(sr.histogram.values()) == len(sr.mismatches)
    assert sum(sr.categories.values()) == len(sr.mismatches)
    assert sum(sr.per_tag_failures.values()) == len(sr.mismatches)
    assert set(sr.histogram) == set(HISTOGRAM_BUCKETS)
    assert sr.total == sr.matched + len(sr.mismatches)
