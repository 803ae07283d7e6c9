"""DICOM tags and element paths.

A tag is the (group, element) pair identifying an attribute; odd groups are
vendor-private. Paths address elements nested inside sequences, e.g.
``(0008,1140)[0].(0008,1155)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering


_TAG_RE = re.compile(r"\(?([0-9a-fA-F]{4})\s*,\s*([0-9a-fA-F]{4})\)?")


@total_ordering
@dataclass(frozen=True)
class Tag:
    group: int
    element: int

    def __post_init__(self) -> None:
        if not (0 <= self.group <= 0xFFFF and 0 <= self.element <= 0xFFFF):
            raise ValueError(f"tag components out of range: {self.group:#x},{self.element:#x}")

    @property
    def is_private(self) -> bool:
        return self.group % 2 == 1

    @property
    def is_private_creator(self) -> bool:
        return self.is_private and 0x0010 <= self.element <= 0x00FF

    @property
    def is_file_meta(self) -> bool:
        return self.group == 0x0002

    @classmethod
    def parse(cls, text: str) -> "Tag":
        m = _TAG_RE.fullmatch(text.strip())
        if m is None:
            raise ValueError(f"not a tag: {text!r}")
        return cls(int(m.group(1), 16), int(m.group(2), 16))

    def __str__(self) -> str:
        return f"({self.group:04x},{self.element:04x})"

    def __repr__(self) -> str:
        return f"Tag{self}"

    def __lt__(self, other: "Tag") -> bool:
        return (self.group, self.element) < (other.group, other.element)


# Delimiter pseudo-tags used by the sequence encoding.
ITEM_TAG = Tag(0xFFFE, 0xE000)
ITEM_DELIM_TAG = Tag(0xFFFE, 0xE00D)
SEQ_DELIM_TAG = Tag(0xFFFE, 0xE0DD)

PIXEL_DATA = Tag(0x7FE0, 0x0010)


@dataclass(frozen=True)
class TagPath:
    """Location of an element: zero or more (sequence tag, item index) steps
    followed by the element's own tag."""

    steps: tuple[tuple[Tag, int], ...]
    tag: Tag

    @classmethod
    def top(cls, tag: Tag) -> "TagPath":
        return cls((), tag)

    def child(self, index: int, tag: Tag) -> "TagPath":
        return TagPath(self.steps + ((self.tag, index),), tag)

    @property
    def depth(self) -> int:
        return len(self.steps)

    def __str__(self) -> str:
        parts = [f"{t}[{i}]" for t, i in self.steps]
        parts.append(str(self.tag))
        return ".".join(parts)

    @classmethod
    def parse(cls, text: str) -> "TagPath":
        parts = text.split(".")
        steps = []
        for part in parts[:-1]:
            m = re.fullmatch(r"(\([0-9a-fA-F]{4},[0-9a-fA-F]{4}\))\[(\d+)\]", part)
            if m is None:
                raise ValueError(f"bad path step: {part!r}")
            steps.append((Tag.parse(m.group(1)), int(m.group(2))))
        return cls(tuple(steps), Tag.parse(parts[-1]))
