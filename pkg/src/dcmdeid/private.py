"""Private-tag de-identification via a creator-keyed dictionary.

Every private data element is looked up under the key
``(gggg,creator,ee)_VR`` — group, owning private-creator string, low byte
of the element number, and VR. Dictionary hits apply their action; misses
are removed (fail-safe). Creator elements survive only while their block
still has surviving members. No PHI detector is ever consulted here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

from .codec import DataElement, DataSet, private_creator_for
from .errors import DuplicateKey, MissingCreator, NotPrivate, SchemaError
from .rules import Action, DeidReport, ReportRow, parse_action, _value_hash
from .tags import Tag, TagPath

_KEY_RE = re.compile(r"\(([0-9a-f]{4}),(.+),([0-9a-f]{2})\)_([A-Z]{2})")


@dataclass(frozen=True)
class PrivateKey:
    group: str       # 4 lowercase hex digits
    creator: str
    element_low: str  # 2 lowercase hex digits
    vr: str

    def render(self) -> str:
        return f"({self.group},{self.creator},{self.element_low})_{self.vr}"

    @classmethod
    def parse(cls, text: str) -> "PrivateKey":
        m = _KEY_RE.fullmatch(text)
        if m is None:
            raise ValueError(f"not a private key: {text!r}")
        return cls(m.group(1), m.group(2), m.group(3), m.group(4))

    def __str__(self) -> str:
        return self.render()


def build_private_key(tag: Tag, creator: str, vr: str) -> PrivateKey:
    if not tag.is_private:
        raise NotPrivate(tag)
    creator = creator.strip()
    if not creator:
        raise MissingCreator(f"no creator for {tag}")
    return PrivateKey(f"{tag.group:04x}", creator, f"{tag.element & 0xFF:02x}", vr)


@dataclass
class PrivateDict:
    entries: dict[str, Action] = field(default_factory=dict)
    source: str = "<memory>"

    def lookup(self, key: PrivateKey) -> Action | None:
        return self.entries.get(key.render())


def load_private_dict(path) -> PrivateDict:
    with open(path) as fh:
        return _parse_dict(fh.read(), str(path))


def bundled_private_dict() -> PrivateDict:
    text = resources.files("dcmdeid.data").joinpath("private_dict.txt").read_text()
    return _parse_dict(text, "bundled")


def _parse_dict(text: str, source: str) -> PrivateDict:
    entries: dict[str, Action] = {}
    for line_no, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        # Creators may contain spaces; the action is the last token.
        parts = line.rsplit(None, 1)
        if len(parts) != 2:
            raise SchemaError(line_no, f"expected '<key> <action>', got {line!r}")
        try:
            key = PrivateKey.parse(parts[0])
        except ValueError:
            raise SchemaError(line_no, f"bad private key {parts[0]!r}") from None
        rendered = key.render()
        if rendered in entries:
            raise DuplicateKey(rendered)
        entries[rendered] = parse_action(parts[1])
    return PrivateDict(entries, source)


def deidentify_private(ds: DataSet, pdict: PrivateDict) -> tuple[DataSet, DeidReport]:
    """Apply the dictionary to every private element of the dataset.

    Even-group elements are never touched. Creator elements are kept only
    if at least one element of their block survives.
    """
    report = DeidReport()
    # (container id, group, creator slot) -> survivor count; creators tracked
    # per container so nested blocks account independently.
    survivors: dict[tuple[int, int, int], int] = {}
    creators: list[tuple[TagPath, DataElement, tuple[int, int, int]]] = []
    to_remove: list[TagPath] = []

    for path, el in list(ds.walk()):
        if not el.tag.is_private:
            continue
        container = _container_of(ds, path)
        if el.tag.is_private_creator:
            creators.append((path, el, (id(container), el.tag.group, el.tag.element)))
            continue
        slot = el.tag.element >> 8
        block = (id(container), el.tag.group, slot)
        creator = private_creator_for(_Wrapper(container), el.tag)
        action = None
        if creator is not None:
            key = build_private_key(el.tag, creator, el.vr)
            action = pdict.lookup(key)
        before = _value_hash(el)
        if action is None:
            action = Action.REMOVE

        if action == Action.KEEP:
            survivors[block] = survivors.get(block, 0) + 1
            report.rows.append(ReportRow(str(path), el.tag, "", "keep", before, before, False))
        elif action == Action.EMPTY:
            el.clear()
            survivors[block] = survivors.get(block, 0) + 1
            report.rows.append(ReportRow(str(path), el.tag, "", "empty", before, _value_hash(el),
                                         _value_hash(el) != before))
        else:
            # Remove, and anything else the dictionary might say: a private
            # element never gets text cleaning or remapping here.
            to_remove.append(path)
            report.rows.append(ReportRow(str(path), el.tag, "", "remove", before, "", True))

    for path, el, block in creators:
        before = _value_hash(el)
        if survivors.get(block, 0) > 0:
            report.rows.append(ReportRow(str(path), el.tag, "", "keep", before, before, False,
                                         note="private creator"))
        else:
            to_remove.append(path)
            report.rows.append(ReportRow(str(path), el.tag, "", "remove", before, "", True,
                                         note="empty private block"))

    for path in sorted(to_remove, key=lambda p: (p.depth, str(p)), reverse=True):
        _remove_at(ds, path)
    return ds, report


class _Wrapper:
    """Adapts a raw element dict to the .get() shape private_creator_for wants."""

    __slots__ = ("elements",)

    def __init__(self, elements: dict):
        self.elements = elements

    def get(self, tag: Tag):
        return self.elements.get(tag)


def _container_of(ds: DataSet, path: TagPath) -> dict:
    container = ds.elements
    for seq_tag, index in path.steps:
        container = container[seq_tag].items[index].elements
    return container


def _remove_at(ds: DataSet, path: TagPath) -> None:
    container = ds.elements
    for seq_tag, index in path.steps:
        seq = container.get(seq_tag)
        if seq is None or not seq.is_sequence or index >= len(seq.items):
            return
        container = seq.items[index].elements
    container.pop(path.tag, None)
