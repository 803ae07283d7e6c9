"""Codec round trips, sequence parsing, element access, private creators."""

import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcmdeid.codec import (
    DataElement,
    DataSet,
    SequenceItem,
    TransferSyntax,
    new_file,
    parse_file,
    private_creator_for,
    serialize_file,
)
from dcmdeid.errors import MissingMagic, UnsupportedTransferSyntax
from dcmdeid.tags import Tag


def minimal_file(**kw) -> DataSet:
    return new_file(sop_class_uid="1.2.840.10008.5.1.4.1.1.2",
                    sop_instance_uid="1.2.3.4.5", **kw)


# ---------------------------------------------------------------------------
# Independent second reader: a flat walk over explicit-VR little-endian bytes
# that shares no code with the codec. Returns (tag, vr, length) triples.


def independent_walk(data: bytes) -> list[tuple[tuple[int, int], str, int]]:
    assert data[128:132] == b"DICM"
    pos = 132
    out = []
    while pos < len(data):
        group, element = struct.unpack_from("<HH", data, pos)
        pos += 4
        if (group, element) in ((0xFFFE, 0xE000), (0xFFFE, 0xE00D), (0xFFFE, 0xE0DD)):
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
            out.append(((group, element), "", length))
            continue
        vr = data[pos : pos + 2].decode("ascii")
        pos += 2
        if vr in ("OB", "OD", "OF", "OL", "OV", "OW", "SQ", "SV", "UC", "UN", "UR", "UT", "UV"):
            pos += 2
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
        else:
            (length,) = struct.unpack_from("<H", data, pos)
            pos += 2
        out.append(((group, element), vr, length))
        if vr != "SQ" and length != 0xFFFFFFFF:
            pos += length
    return out


# ---------------------------------------------------------------------------
# parse_file


def test_empty_dataset_roundtrip():
    ds = minimal_file()
    data = serialize_file(ds)
    parsed = parse_file(data)
    assert len(parsed.elements) == 0
    assert serialize_file(parsed) == data


def test_patient_name_survives_roundtrip():
    ds = minimal_file()
    ds.set(DataElement.text(Tag(0x0010, 0x0010), "PN", "DOE^JOHN"))
    parsed = parse_file(serialize_file(ds))
    assert parsed.get(Tag(0x0010, 0x0010)).value == ["DOE^JOHN"]


def test_missing_magic():
    with pytest.raises(MissingMagic):
        parse_file(b"\x00" * 200)


def test_lenient_bare_dataset():
    ds = minimal_file()
    ds.set(DataElement.text(Tag(0x0010, 0x0020), "LO", "12345 "))
    full = serialize_file(ds)
    bare = full[full.index(b"DICM") + 4 :]
    # strip the meta group by reparsing and re-serializing the body only
    parsed = parse_file(full)
    body = serialize_file(parsed)[len(full) - _body_len(parsed):]
    recovered = parse_file(body, lenient=True)
    assert recovered.get(Tag(0x0010, 0x0020)).text_value() == "12345"


def _body_len(ds: DataSet) -> int:
    from dcmdeid.codec import _encode_element

    return sum(len(_encode_element(el, explicit=True, canonical=False))
               for el in ds.elements.values())


def test_unsupported_transfer_syntax():
    ds = minimal_file()
    ds.file_meta[Tag(0x0002, 0x0010)].set_text("1.2.840.10008.1.2.4.50")  # JPEG
    with pytest.raises(UnsupportedTransferSyntax):
        parse_file(serialize_file(ds))


def test_undefined_length_sequence_hand_assembled():
    # One-item SQ of undefined length holding a single LO element,
    # assembled byte by byte per the encoding rules.
    lo_value = b"abd CT"
    inner = struct.pack("<HH", 0x0008, 0x103E) + b"LO" + struct.pack("<H", len(lo_value)) + lo_value
    item = struct.pack("<HHI", 0xFFFE, 0xE000, 0xFFFFFFFF) + inner + struct.pack("<HHI", 0xFFFE, 0xE00D, 0)
    seq = (struct.pack("<HH", 0x0008, 0x1140) + b"SQ\x00\x00" + struct.pack("<I", 0xFFFFFFFF)
           + item + struct.pack("<HHI", 0xFFFE, 0xE0DD, 0))

    shell = serialize_file(minimal_file())
    data = shell + seq
    ds = parse_file(data)
    el = ds.get(Tag(0x0008, 0x1140))
    assert el.is_sequence and el.undefined_length
    assert len(el.items) == 1
    assert len(el.items[0].elements) == 1
    nested = el.items[0].elements[Tag(0x0008, 0x103E)]
    assert nested.text_value() == "abd CT"
    # unmutated lossless re-serialization is byte-identical
    assert serialize_file(ds) == data
    # and the independent reader agrees on the layout
    triples = independent_walk(serialize_file(ds))
    assert ((0x0008, 0x1140), "SQ", 0xFFFFFFFF) in triples
    assert ((0xFFFE, 0xE000), "", 0xFFFFFFFF) in triples
    assert ((0xFFFE, 0xE0DD), "", 0) in triples


def test_canonical_mode_defines_lengths():
    item = SequenceItem(undefined_length=True)
    item.elements[Tag(0x0008, 0x103E)] = DataElement.text(Tag(0x0008, 0x103E), "LO", "x ")
    ds = minimal_file()
    ds.set(DataElement.sequence(Tag(0x0008, 0x1140), [item], undefined=True))
    canonical = serialize_file(ds, canonical=True)
    triples = independent_walk(canonical)
    sq = [t for t in triples if t[0] == (0x0008, 0x1140)]
    assert sq and sq[0][2] != 0xFFFFFFFF


def test_implicit_vr_roundtrip():
    ds = minimal_file(transfer_syntax=TransferSyntax.IMPLICIT_VR_LE)
    ds.set(DataElement.text(Tag(0x0010, 0x0010), "PN", "DOE^JANE"))
    item = SequenceItem()
    item.elements[Tag(0x0008, 0x1155)] = DataElement.text(Tag(0x0008, 0x1155), "UI", "1.2.3")
    ds.set(DataElement.sequence(Tag(0x0008, 0x1140), [item]))
    data = serialize_file(ds)
    parsed = parse_file(data)
    assert parsed.transfer_syntax == TransferSyntax.IMPLICIT_VR_LE
    assert parsed.get(Tag(0x0010, 0x0010)).value == ["DOE^JANE"]
    assert parsed.get(Tag(0x0008, 0x1140)).items[0].elements[Tag(0x0008, 0x1155)].text_value() == "1.2.3"
    assert serialize_file(parsed) == data


# ---------------------------------------------------------------------------
# serialize_file padding rules

PADDING_CASES = [
    # (vr, value, expected raw) — per-VR padding oracle
    ("LO", "12345", b"12345 "),
    ("SH", "abc", b"abc "),
    ("PN", "DOE^J", b"DOE^J "),
    ("UI", "1.2.3", b"1.2.3\x00"),
    ("LT", "note!", b"note! "),
    ("CS", "AB", b"AB"),
]


@pytest.mark.parametrize("vr,value,raw", PADDING_CASES)
def test_padding_rules(vr, value, raw):
    el = DataElement.text(Tag(0x0010, 0x0020), vr, value)
    assert el.raw == raw
    assert len(el.raw) % 2 == 0


def test_binary_padding_nul():
    el = DataElement.binary(Tag(0x7FE0, 0x0010), "OB", b"\x01\x02\x03")
    assert el.raw == b"\x01\x02\x03\x00"


# ---------------------------------------------------------------------------
# element access


def test_get_absent():
    ds = DataSet()
    assert ds.get(Tag(0x0010, 0x0010)) is None


def test_set_then_get_idempotent():
    ds = DataSet()
    el = DataElement.text(Tag(0x0010, 0x0010), "PN", "X^Y")
    ds.set(el)
    assert ds.get(Tag(0x0010, 0x0010)) is el
    ds.set(el)
    assert list(ds.elements) == [Tag(0x0010, 0x0010)]


def test_set_preserves_sort_order():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0020, 0x000D), "UI", "1.2"))
    ds.set(DataElement.text(Tag(0x0008, 0x0018), "UI", "1.3"))
    ds.set(DataElement.text(Tag(0x0010, 0x0010), "PN", "A^B"))
    assert list(ds.elements) == [Tag(0x0008, 0x0018), Tag(0x0010, 0x0010), Tag(0x0020, 0x000D)]


def test_walk_counts_nested():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0008, 0x0018), "UI", "1"))
    ds.set(DataElement.text(Tag(0x0010, 0x0010), "PN", "A"))
    item = SequenceItem()
    item.elements[Tag(0x0008, 0x1150)] = DataElement.text(Tag(0x0008, 0x1150), "UI", "2")
    item.elements[Tag(0x0008, 0x1155)] = DataElement.text(Tag(0x0008, 0x1155), "UI", "3")
    ds.set(DataElement.sequence(Tag(0x0008, 0x1140), [item]))
    visits = list(ds.walk())
    assert len(visits) == 5  # 3 top-level + 2 nested
    paths = [str(p) for p, _ in visits]
    assert "(0008,1140)[0].(0008,1150)" in paths


def test_walk_path_get_path_agree():
    ds = DataSet()
    item = SequenceItem()
    item.elements[Tag(0x0008, 0x1155)] = DataElement.text(Tag(0x0008, 0x1155), "UI", "9.8.7")
    ds.set(DataElement.sequence(Tag(0x0008, 0x1140), [item]))
    for path, el in ds.walk():
        assert ds.get_path(path) is el


# ---------------------------------------------------------------------------
# private creators


def test_private_creator_lookup():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0009, 0x0010), "LO", "gems_petd_01"))
    ds.set(DataElement.binary(Tag(0x0009, 0x102B), "SL", struct.pack("<i", 7)))
    assert private_creator_for(ds, Tag(0x0009, 0x102B)) == "gems_petd_01"


def test_private_creator_absent():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0009, 0x1001), "LO", "x "))
    assert private_creator_for(ds, Tag(0x0009, 0x1001)) is None


def test_private_creator_two_blocks():
    ds = DataSet()
    ds.set(DataElement.text(Tag(0x0009, 0x0010), "LO", "A "))
    ds.set(DataElement.text(Tag(0x0009, 0x0011), "LO", "B "))
    ds.set(DataElement.text(Tag(0x0009, 0x1101), "LO", "val "))
    assert private_creator_for(ds, Tag(0x0009, 0x1101)) == "B"


def test_is_private_exhaustive():
    for group in range(0x10000):
        assert Tag(group, 0).is_private == (group % 2 == 1)


# ---------------------------------------------------------------------------
# properties

_text_values = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=126,
                                              exclude_characters="\\"), max_size=24)


@st.composite
def datasets(draw):
    ds = minimal_file(transfer_syntax=draw(st.sampled_from(TransferSyntax.SUPPORTED)))
    n = draw(st.integers(0, 8))
    groups = draw(st.lists(st.sampled_from([0x0008, 0x0010, 0x0018, 0x0020]), min_size=n, max_size=n))
    for i, group in enumerate(groups):
        tag = Tag(group, 0x1000 + i)
        vr = draw(st.sampled_from(["LO", "SH", "PN", "UN"]))
        if vr == "UN":
            ds.set(DataElement.binary(tag, "UN", draw(st.binary(max_size=16))))
        else:
            ds.set(DataElement.text(tag, vr, draw(_text_values)))
    if draw(st.booleans()):
        item = SequenceItem(undefined_length=draw(st.booleans()))
        item.elements[Tag(0x0008, 0x1155)] = DataElement.text(Tag(0x0008, 0x1155), "UI", "1.2.3")
        ds.set(DataElement.sequence(Tag(0x0008, 0x1140), [item], undefined=draw(st.booleans())))
    return ds


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_serialize_parse_serialize_fixpoint(ds):
    once = serialize_file(ds)
    again = serialize_file(parse_file(once))
    assert once == again


@settings(max_examples=60, deadline=None)
@given(datasets())
def test_walk_count_equals_nesting_sum(ds):
    def count(elements):
        total = 0
        for el in elements.values():
            total += 1
            if el.is_sequence:
                for item in el.items:
                    total += count(item.elements)
        return total

    assert len(list(ds.walk())) == count(ds.elements)
