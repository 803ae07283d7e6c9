"""DICOM Part-10 reader/writer.

Supports Implicit and Explicit VR Little Endian with full element fidelity:
raw value bytes are kept verbatim, sequences (defined and undefined length)
parse recursively, and an unmutated dataset re-serializes byte-identically.
Values decode lazily; mutation goes through the element setters, which
re-encode and pad per VR.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from . import datadict
from .errors import (
    MissingMagic,
    OddLengthValue,
    TruncatedElement,
    UnsupportedTransferSyntax,
)
from .tags import ITEM_DELIM_TAG, ITEM_TAG, SEQ_DELIM_TAG, Tag, TagPath

UNDEFINED_LENGTH = 0xFFFFFFFF
MAGIC = b"DICM"
PREAMBLE_LEN = 128

# VRs whose explicit encoding uses the 12-byte header (2 reserved bytes +
# 32-bit length); everything else uses the 8-byte header with 16-bit length.
LONG_FORM_VRS = {"OB", "OD", "OF", "OL", "OV", "OW", "SQ", "SV", "UC", "UN", "UR", "UT", "UV"}

KNOWN_VRS = {
    "AE", "AS", "AT", "CS", "DA", "DS", "DT", "FD", "FL", "IS", "LO", "LT",
    "OB", "OD", "OF", "OL", "OV", "OW", "PN", "SH", "SL", "SQ", "SS", "ST",
    "SV", "TM", "UC", "UI", "UL", "UN", "UR", "US", "UT", "UV",
}

# String-valued VRs (decoded to text); LT/ST/UT never split on backslash.
STRING_VRS = {"AE", "AS", "CS", "DA", "DS", "DT", "IS", "LO", "LT", "PN", "SH", "ST", "TM", "UC", "UI", "UR", "UT"}
SINGLE_VALUE_TEXT_VRS = {"LT", "ST", "UT", "UR"}

# De-identification VR classes.
TEXT_VRS = {"LO", "LT", "SH", "PN", "CS", "ST", "UT"}
DATE_VRS = {"DA", "DT", "TM"}


def pad_byte_for(vr: str) -> bytes:
    if vr == "UI":
        return b"\x00"
    if vr in STRING_VRS:
        return b" "
    return b"\x00"


class TransferSyntax:
    IMPLICIT_VR_LE = datadict.UID_IMPLICIT_VR_LE
    EXPLICIT_VR_LE = datadict.UID_EXPLICIT_VR_LE

    SUPPORTED = (IMPLICIT_VR_LE, EXPLICIT_VR_LE)

    @staticmethod
    def is_explicit(uid: str) -> bool:
        return uid == TransferSyntax.EXPLICIT_VR_LE

    @staticmethod
    def check(uid: str) -> str:
        if uid not in TransferSyntax.SUPPORTED:
            raise UnsupportedTransferSyntax(uid)
        return uid


@dataclass
class SequenceItem:
    """One item of an SQ element: a nested element map."""

    elements: dict[Tag, "DataElement"] = field(default_factory=dict)
    undefined_length: bool = False

    def get(self, tag: Tag) -> Optional["DataElement"]:
        return self.elements.get(tag)

    def set(self, element: "DataElement") -> None:
        _sorted_insert(self.elements, element)

    def copy(self) -> "SequenceItem":
        return SequenceItem(
            {t: e.copy() for t, e in self.elements.items()}, self.undefined_length
        )


@dataclass
class DataElement:
    tag: Tag
    vr: str
    raw: bytes = b""
    items: Optional[list[SequenceItem]] = None
    undefined_length: bool = False

    # -- constructors ------------------------------------------------------

    @classmethod
    def text(cls, tag: Tag, vr: str, value: Union[str, list[str]]) -> "DataElement":
        el = cls(tag, vr)
        el.set_text(value)
        return el

    @classmethod
    def binary(cls, tag: Tag, vr: str, raw: bytes) -> "DataElement":
        el = cls(tag, vr)
        el.set_bytes(raw)
        return el

    @classmethod
    def us(cls, tag: Tag, value: int) -> "DataElement":
        return cls(tag, "US", struct.pack("<H", value))

    @classmethod
    def ul(cls, tag: Tag, value: int) -> "DataElement":
        return cls(tag, "UL", struct.pack("<I", value))

    @classmethod
    def sl(cls, tag: Tag, value: int) -> "DataElement":
        return cls(tag, "SL", struct.pack("<i", value))

    @classmethod
    def sequence(cls, tag: Tag, items: list[SequenceItem], undefined: bool = False) -> "DataElement":
        return cls(tag, "SQ", b"", items, undefined)

    @classmethod
    def empty(cls, tag: Tag, vr: str) -> "DataElement":
        if vr == "SQ":
            return cls.sequence(tag, [])
        return cls(tag, vr, b"")

    # -- value access ------------------------------------------------------

    @property
    def is_sequence(self) -> bool:
        return self.items is not None

    @property
    def value(self):
        """Decoded view: item list for SQ, string list for string VRs,
        raw bytes otherwise."""
        if self.is_sequence:
            return self.items
        if self.vr in STRING_VRS:
            text = self.text_value()
            if not text:
                return []
            if self.vr in SINGLE_VALUE_TEXT_VRS:
                return [text]
            return text.split("\\")
        return self.raw

    def text_value(self) -> str:
        """Full string form (components joined by backslash), trailing
        padding stripped."""
        if self.is_sequence:
            raise TypeError("sequence element has no text value")
        return self.raw.decode("utf-8", "replace").rstrip(" \x00")

    def int_value(self) -> int:
        if self.vr == "US":
            return struct.unpack("<H", self.raw[:2])[0]
        if self.vr == "UL":
            return struct.unpack("<I", self.raw[:4])[0]
        if self.vr == "SS":
            return struct.unpack("<h", self.raw[:2])[0]
        if self.vr == "SL":
            return struct.unpack("<i", self.raw[:4])[0]
        if self.vr == "IS":
            text = self.text_value()
            return int(text) if text else 0
        raise TypeError(f"no integer view for VR {self.vr}")

    # -- mutation ----------------------------------------------------------

    def set_text(self, value: Union[str, list[str]]) -> None:
        if self.is_sequence:
            raise TypeError("cannot set text on a sequence element")
        text = "\\".join(value) if isinstance(value, list) else value
        data = text.encode("utf-8")
        if len(data) % 2:
            data += pad_byte_for(self.vr)
        self.raw = data

    def set_bytes(self, raw: bytes) -> None:
        if self.is_sequence:
            raise TypeError("cannot set bytes on a sequence element")
        if len(raw) % 2:
            raw += pad_byte_for(self.vr)
        self.raw = raw

    def clear(self) -> None:
        if self.is_sequence:
            self.items = []
        else:
            self.raw = b""

    def copy(self) -> "DataElement":
        items = [it.copy() for it in self.items] if self.items is not None else None
        return DataElement(self.tag, self.vr, self.raw, items, self.undefined_length)


def _sorted_insert(elements: dict[Tag, DataElement], element: DataElement) -> None:
    """Replace in place, or insert keeping ascending tag order."""
    if element.tag in elements:
        elements[element.tag] = element
        return
    elements[element.tag] = element
    if len(elements) > 1:
        tags = list(elements)
        if tags != sorted(tags):
            ordered = sorted(elements.items())
            elements.clear()
            elements.update(ordered)


@dataclass
class DataSet:
    file_meta: dict[Tag, DataElement] = field(default_factory=dict)
    elements: dict[Tag, DataElement] = field(default_factory=dict)
    transfer_syntax: str = TransferSyntax.EXPLICIT_VR_LE
    preamble: bytes = b"\x00" * PREAMBLE_LEN

    def get(self, tag: Tag) -> Optional[DataElement]:
        return self.elements.get(tag)

    def set(self, element: DataElement) -> None:
        _sorted_insert(self.elements, element)

    def remove(self, tag: Tag) -> Optional[DataElement]:
        return self.elements.pop(tag, None)

    def get_meta(self, tag: Tag) -> Optional[DataElement]:
        return self.file_meta.get(tag)

    def set_meta(self, element: DataElement) -> None:
        _sorted_insert(self.file_meta, element)

    def get_path(self, path: TagPath) -> Optional[DataElement]:
        container = self.elements
        for seq_tag, index in path.steps:
            seq = container.get(seq_tag)
            if seq is None or not seq.is_sequence or index >= len(seq.items):
                return None
            container = seq.items[index].elements
        return container.get(path.tag)

    def text(self, tag: Tag, default: str = "") -> str:
        el = self.elements.get(tag)
        return el.text_value() if el is not None and not el.is_sequence else default

    def int_value(self, tag: Tag, default: int = 0) -> int:
        el = self.elements.get(tag)
        if el is None:
            return default
        try:
            return el.int_value()
        except (TypeError, ValueError):
            return default

    def walk(self) -> Iterator[tuple[TagPath, DataElement]]:
        """Depth-first over every body element, sequence descendants included."""
        yield from _walk(self.elements, ())

    def copy(self) -> "DataSet":
        return DataSet(
            {t: e.copy() for t, e in self.file_meta.items()},
            {t: e.copy() for t, e in self.elements.items()},
            self.transfer_syntax,
            self.preamble,
        )


def _walk(elements: dict[Tag, DataElement], steps: tuple) -> Iterator[tuple[TagPath, DataElement]]:
    for tag, el in elements.items():
        yield TagPath(steps, tag), el
        if el.is_sequence:
            for i, item in enumerate(el.items):
                yield from _walk(item.elements, steps + ((tag, i),))


# ---------------------------------------------------------------------------
# Parsing


class _Reader:
    __slots__ = ("data", "pos")

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def remaining(self) -> int:
        return len(self.data) - self.pos

    def read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise _ShortRead(self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def peek_tag(self) -> Tag:
        if self.pos + 4 > len(self.data):
            raise _ShortRead(self.pos)
        g, e = struct.unpack_from("<HH", self.data, self.pos)
        return Tag(g, e)

    def read_tag(self) -> Tag:
        tag = self.peek_tag()
        self.pos += 4
        return tag

    def u16(self) -> int:
        return struct.unpack("<H", self.read(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.read(4))[0]


class _ShortRead(Exception):
    def __init__(self, offset: int):
        self.offset = offset


def parse_file(data: bytes, lenient: bool = False) -> DataSet:
    """Parse Part-10 bytes (or, leniently, a bare dataset) into a DataSet."""
    ds = DataSet()
    r = _Reader(data)
    if len(data) >= PREAMBLE_LEN + 4 and data[PREAMBLE_LEN : PREAMBLE_LEN + 4] == MAGIC:
        ds.preamble = data[:PREAMBLE_LEN]
        r.pos = PREAMBLE_LEN + 4
    elif not lenient:
        raise MissingMagic("no DICM marker at offset 128")
    else:
        ds.preamble = b"\x00" * PREAMBLE_LEN

    # File meta group, always Explicit VR Little Endian.
    has_meta = False
    while r.remaining() >= 8 and r.peek_tag().group == 0x0002:
        has_meta = True
        el = _parse_element(r, explicit=True)
        ds.file_meta[el.tag] = el

    if has_meta:
        ts_el = ds.file_meta.get(Tag(0x0002, 0x0010))
        if ts_el is None:
            raise UnsupportedTransferSyntax("<missing (0002,0010)>")
        ds.transfer_syntax = TransferSyntax.check(ts_el.text_value())
    elif lenient:
        ds.transfer_syntax = _sniff_transfer_syntax(r)
    else:
        raise MissingMagic("no file meta group present")

    explicit = TransferSyntax.is_explicit(ds.transfer_syntax)
    while r.remaining() > 0:
        if r.remaining() < 8:
            raise TruncatedElement(None, r.pos, "trailing bytes shorter than an element header")
        el = _parse_element(r, explicit=explicit)
        ds.elements[el.tag] = el
    return ds


def _sniff_transfer_syntax(r: _Reader) -> str:
    # A bare dataset: explicit encoding shows an uppercase two-letter VR at
    # bytes 4..6 of the first element.
    if r.remaining() >= 6:
        vr = r.data[r.pos + 4 : r.pos + 6]
        if vr.isalpha() and vr.isupper():
            return TransferSyntax.EXPLICIT_VR_LE
    return TransferSyntax.IMPLICIT_VR_LE


def _parse_element(r: _Reader, explicit: bool) -> DataElement:
    start = r.pos
    tag = None
    try:
        tag = r.read_tag()
        if explicit:
            vr = r.read(2).decode("ascii", "replace")
            if not (vr.isalpha() and vr.isupper()):
                raise TruncatedElement(tag, start, f"bad VR code {vr!r}")
            if vr in LONG_FORM_VRS:
                r.read(2)  # reserved
                length = r.u32()
            else:
                length = r.u16()
        else:
            length = r.u32()
            vr = datadict.vr_of(tag) or "UN"

        if vr == "SQ":
            items, undefined = _parse_items(r, explicit, length)
            return DataElement(tag, vr, b"", items, undefined)
        if length == UNDEFINED_LENGTH:
            if vr == "UN":
                # Undefined-length UN content is implicit-VR encoded items.
                items, _ = _parse_items(r, False, length)
                return DataElement(tag, vr, b"", items, True)
            raise TruncatedElement(tag, start, f"undefined length on VR {vr}")
        raw = r.read(length)
        return DataElement(tag, vr, raw)
    except _ShortRead as e:
        raise TruncatedElement(tag, e.offset) from None


def _parse_items(r: _Reader, explicit: bool, length: int) -> tuple[list[SequenceItem], bool]:
    items: list[SequenceItem] = []
    if length == UNDEFINED_LENGTH:
        while True:
            tag = r.read_tag()
            if tag == SEQ_DELIM_TAG:
                r.u32()
                return items, True
            if tag != ITEM_TAG:
                raise TruncatedElement(tag, r.pos - 4, "expected sequence item")
            items.append(_parse_one_item(r, explicit))
    else:
        end = r.pos + length
        if end > len(r.data):
            raise _ShortRead(r.pos)
        while r.pos < end:
            tag = r.read_tag()
            if tag != ITEM_TAG:
                raise TruncatedElement(tag, r.pos - 4, "expected sequence item")
            items.append(_parse_one_item(r, explicit))
        return items, False


def _parse_one_item(r: _Reader, explicit: bool) -> SequenceItem:
    length = r.u32()
    item = SequenceItem()
    if length == UNDEFINED_LENGTH:
        item.undefined_length = True
        while True:
            if r.peek_tag() == ITEM_DELIM_TAG:
                r.read_tag()
                r.u32()
                return item
            el = _parse_element(r, explicit)
            item.elements[el.tag] = el
    else:
        end = r.pos + length
        if end > len(r.data):
            raise _ShortRead(r.pos)
        while r.pos < end:
            el = _parse_element(r, explicit)
            item.elements[el.tag] = el
        return item


# ---------------------------------------------------------------------------
# Serialization


def serialize_file(ds: DataSet, canonical: bool = False) -> bytes:
    """Encode a DataSet back to Part-10 bytes.

    Lossless mode (default) keeps each element's original encoding form;
    canonical=True rewrites undefined-length sequences as defined-length.
    """
    out = bytearray()
    out += ds.preamble or b"\x00" * PREAMBLE_LEN
    out += MAGIC

    meta = bytearray()
    for tag, el in ds.file_meta.items():
        if tag == Tag(0x0002, 0x0000):
            continue
        meta += _encode_element(el, explicit=True, canonical=canonical)
    group_len = DataElement.ul(Tag(0x0002, 0x0000), len(meta))
    out += _encode_element(group_len, explicit=True, canonical=canonical)
    out += meta

    explicit = TransferSyntax.is_explicit(ds.transfer_syntax)
    for el in ds.elements.values():
        out += _encode_element(el, explicit=explicit, canonical=canonical)
    return bytes(out)


def _encode_element(el: DataElement, explicit: bool, canonical: bool) -> bytes:
    out = bytearray()
    out += struct.pack("<HH", el.tag.group, el.tag.element)

    if el.is_sequence:
        # Undefined-length UN content stays implicit-VR encoded.
        content_explicit = explicit and el.vr != "UN"
        undefined = el.undefined_length and not canonical
        content = _encode_items(el.items, content_explicit, canonical, undefined)
        length = UNDEFINED_LENGTH if undefined else len(content)
        if explicit:
            out += el.vr.encode("ascii") + b"\x00\x00" + struct.pack("<I", length)
        else:
            out += struct.pack("<I", length)
        out += content
        if undefined:
            out += struct.pack("<HHI", SEQ_DELIM_TAG.group, SEQ_DELIM_TAG.element, 0)
        return bytes(out)

    raw = el.raw
    if len(raw) % 2:
        raise OddLengthValue(el.tag)
    if explicit:
        vr = el.vr if len(el.vr) == 2 else "UN"
        if vr in LONG_FORM_VRS:
            out += vr.encode("ascii") + b"\x00\x00" + struct.pack("<I", len(raw))
        else:
            if len(raw) > 0xFFFF:
                raise ValueError(f"{el.tag} value too long for a 16-bit explicit length")
            out += vr.encode("ascii") + struct.pack("<H", len(raw))
    else:
        out += struct.pack("<I", len(raw))
    out += raw
    return bytes(out)


def _encode_items(items: list[SequenceItem], explicit: bool, canonical: bool, parent_undefined: bool) -> bytes:
    out = bytearray()
    for item in items:
        body = bytearray()
        for el in item.elements.values():
            body += _encode_element(el, explicit=explicit, canonical=canonical)
        if item.undefined_length and not canonical:
            out += struct.pack("<HHI", ITEM_TAG.group, ITEM_TAG.element, UNDEFINED_LENGTH)
            out += body
            out += struct.pack("<HHI", ITEM_DELIM_TAG.group, ITEM_DELIM_TAG.element, 0)
        else:
            out += struct.pack("<HHI", ITEM_TAG.group, ITEM_TAG.element, len(body))
            out += body
    return bytes(out)


# ---------------------------------------------------------------------------
# Private blocks


def private_creator_for(container, tag: Tag) -> Optional[str]:
    """Creator string owning a private tag's block, if declared.

    The creator lives at (group, 0x00YY) where YY is the high byte of the
    element. Works on DataSet or SequenceItem.
    """
    if not tag.is_private:
        return None
    slot = tag.element >> 8
    if not (0x10 <= slot <= 0xFF):
        return None
    creator = container.get(Tag(tag.group, slot))
    if creator is None or creator.is_sequence:
        return None
    value = creator.text_value().strip()
    return value or None


def new_file(transfer_syntax: str = TransferSyntax.EXPLICIT_VR_LE,
             sop_class_uid: str = "",
             sop_instance_uid: str = "",
             implementation_uid: str = "1.2.826.0.1.3680043.9.7433.1.1") -> DataSet:
    """DataSet with a standard file meta group filled in."""
    ds = DataSet(transfer_syntax=TransferSyntax.check(transfer_syntax))
    ds.file_meta[Tag(0x0002, 0x0001)] = DataElement(Tag(0x0002, 0x0001), "OB", b"\x00\x01")
    if sop_class_uid:
        ds.file_meta[Tag(0x0002, 0x0002)] = DataElement.text(Tag(0x0002, 0x0002), "UI", sop_class_uid)
    if sop_instance_uid:
        ds.file_meta[Tag(0x0002, 0x0003)] = DataElement.text(Tag(0x0002, 0x0003), "UI", sop_instance_uid)
    ds.file_meta[Tag(0x0002, 0x0010)] = DataElement.text(Tag(0x0002, 0x0010), "UI", transfer_syntax)
    ds.file_meta[Tag(0x0002, 0x0012)] = DataElement.text(Tag(0x0002, 0x0012), "UI", implementation_uid)
    ds.file_meta[Tag(0x0002, 0x0013)] = DataElement.text(Tag(0x0002, 0x0013), "SH", "DCMDEID_01")
    return ds
