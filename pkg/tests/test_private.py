"""Private-key scheme and dictionary-driven private-tag handling."""

import struct

import pytest

from dcmdeid.codec import DataElement, DataSet, SequenceItem
from dcmdeid.errors import DuplicateKey, MissingCreator, NotPrivate, SchemaError
from dcmdeid.private import (
    PrivateDict,
    PrivateKey,
    build_private_key,
    bundled_private_dict,
    deidentify_private,
    load_private_dict,
)
from dcmdeid.rules import Action
from dcmdeid.tags import Tag


# ---------------------------------------------------------------------------
# build_private_key


def test_verbatim_sample_key():
    key = build_private_key(Tag(0x0009, 0x102B), "gems_petd_01", "SL")
    assert key.render() == "(0009,gems_petd_01,2b)_SL"


def test_simple_substitution():
    assert build_private_key(Tag(0x0009, 0x1001), "A", "LO").render() == "(0009,A,01)_LO"


def test_low_byte_extraction():
    key = build_private_key(Tag(0x0043, 0x109F), "GEMS_PARM_01", "OB")
    assert key.render() == "(0043,GEMS_PARM_01,9f)_OB"
    # oracle: low byte is element mod 256
    assert int(key.element_low, 16) == 0x109F % 256


def test_not_private():
    with pytest.raises(NotPrivate):
        build_private_key(Tag(0x0008, 0x1030), "x", "LO")


def test_missing_creator():
    with pytest.raises(MissingCreator):
        build_private_key(Tag(0x0009, 0x1001), "   ", "LO")


def test_render_parse_bijection():
    keys = [
        PrivateKey("0009", "gems_petd_01", "2b", "SL"),
        PrivateKey("0029", "SIEMENS CSA HEADER", "08", "CS"),
        PrivateKey("2001", "Philips Imaging DD 001", "0b", "FL"),
    ]
    for k in keys:
        assert PrivateKey.parse(k.render()) == k


# ---------------------------------------------------------------------------
# load_private_dict


def test_load_sample_line(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("(0009,gems_petd_01,2b)_SL keep\n")
    d = load_private_dict(p)
    assert d.entries["(0009,gems_petd_01,2b)_SL"] == Action.KEEP


def test_load_empty(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("# just a comment\n")
    assert load_private_dict(p).entries == {}


def test_load_duplicate(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("(0009,a,01)_LO keep\n(0009,a,01)_LO remove\n")
    with pytest.raises(DuplicateKey):
        load_private_dict(p)


def test_load_bad_key(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("oops keep\n")
    with pytest.raises(SchemaError):
        load_private_dict(p)


def test_bundled_dict_has_sample_key():
    d = bundled_private_dict()
    assert d.entries["(0009,gems_petd_01,2b)_SL"] == Action.KEEP


# ---------------------------------------------------------------------------
# deidentify_private


def _ds_with_block():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0009, 0x0010), "LO", "gems_petd_01"))
    ds.set(DataElement.text(Tag(0x0009, 0x1001), "LO", "PET77A"))
    ds.set(DataElement.text(Tag(0x0009, 0x1002), "LO", "tech Smith"))
    ds.set(DataElement.binary(Tag(0x0009, 0x102B), "SL", struct.pack("<i", 42)))
    ds.set(DataElement.text(Tag(0x0010, 0x0010), "PN", "DOE^JOHN"))  # even group
    return ds


def test_dict_hit_keeps_value():
    ds = _ds_with_block()
    out, _ = deidentify_private(ds, bundled_private_dict())
    assert out.get(Tag(0x0009, 0x102B)).raw == struct.pack("<i", 42)
    assert out.get(Tag(0x0009, 0x1001)).text_value() == "PET77A"


def test_miss_removed():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0009, 0x0010), "LO", "gems_petd_01"))
    ds.set(DataElement.text(Tag(0x0009, 0x10FE), "LO", "unlisted"))
    out, _ = deidentify_private(ds, bundled_private_dict())
    assert out.get(Tag(0x0009, 0x10FE)) is None


def test_missing_creator_removed():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0011, 0x1E01), "LO", "orphan"))
    out, _ = deidentify_private(ds, bundled_private_dict())
    assert out.get(Tag(0x0011, 0x1E01)) is None


def test_block_accounting_oracle():
    # Count survivors per block independently; creator presence must match.
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0009, 0x0010), "LO", "gems_petd_01"))
    ds.set(DataElement.text(Tag(0x0009, 0x1001), "LO", "kept"))      # dict keep
    ds.set(DataElement.text(Tag(0x0013, 0x0010), "LO", "TEMP_VENDOR"))
    ds.set(DataElement.text(Tag(0x0013, 0x1001), "LO", "doomed"))    # dict miss
    pdict = bundled_private_dict()
    out, report = deidentify_private(ds, pdict)
    assert out.get(Tag(0x0009, 0x0010)) is not None
    assert out.get(Tag(0x0013, 0x0010)) is None
    assert out.get(Tag(0x0013, 0x1001)) is None


def test_empty_action_counts_as_survivor():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0011, 0x0010), "LO", "ACME_SCANNER_01"))
    ds.set(DataElement.text(Tag(0x0011, 0x1003), "LO", "site Smith"))
    out, _ = deidentify_private(ds, bundled_private_dict())
    el = out.get(Tag(0x0011, 0x1003))
    assert el is not None and el.raw == b""
    assert out.get(Tag(0x0011, 0x0010)) is not None


def test_even_groups_never_modified():
    ds = _ds_with_block()
    before = ds.get(Tag(0x0010, 0x0010)).raw
    out, _ = deidentify_private(ds, bundled_private_dict())
    assert out.get(Tag(0x0010, 0x0010)).raw == before


def test_surviving_elements_have_creator():
    ds = _ds_with_block()
    out, _ = deidentify_private(ds, bundled_private_dict())
    for path, el in out.walk():
        if el.tag.is_private and not el.tag.is_private_creator:
            slot = el.tag.element >> 8
            assert out.get(Tag(el.tag.group, slot)) is not None


def test_no_detector_calls():
    class CountingDetector:
        calls = 0

        def detect_entities(self, text):
            CountingDetector.calls += 1
            return []

    # deidentify_private takes no detector at all; assert the seam stays shut
    # by running it on text-bearing private data with a counting stub around.
    det = CountingDetector()
    ds = _ds_with_block()
    deidentify_private(ds, bundled_private_dict())
    assert det.calls == 0


def test_nested_private_block():
    ds = DataSet()
    item = SequenceItem()
    item.elements[Tag(0x0009, 0x0010)] = DataElement.text(Tag(0x0009, 0x0010), "LO", "gems_petd_01")
    item.elements[Tag(0x0009, 0x1001)] = DataElement.text(Tag(0x0009, 0x1001), "LO", "kept")
    item.elements[Tag(0x0009, 0x1050)] = DataElement.text(Tag(0x0009, 0x1050), "LO", "zap")
    ds.set(DataElement.sequence(Tag(0x0008, 0x1140), [item]))
    out, _ = deidentify_private(ds, bundled_private_dict())
    inner = out.get(Tag(0x0008, 0x1140)).items[0].elements
    assert Tag(0x0009, 0x1001) in inner
    assert Tag(0x0009, 0x1050) not in inner
    assert Tag(0x0009, 0x0010) in inner
