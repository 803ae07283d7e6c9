"""Profile-driven de-identification of dataset headers.

Actions resolve per tag through a precedence chain (custom override >
explicit tag rule > VR-class default > profile default) against a rule
table loaded from a line-oriented config. Free-text elements are
consolidated into one note document, run through the PHI detector once,
and rewritten with detected spans deleted.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from typing import Optional

from .codec import DATE_VRS, TEXT_VRS, DataElement, DataSet
from .datadict import DICOM_STANDARD_UID_ROOT, keyword_of
from .errors import (
    DeidError,
    DuplicateTagRule,
    SchemaError,
    SpanOutOfBounds,
    UnknownActionKind,
)
from .identity import IdentityStore, shift_date
from .phi import EntitySpan, Whitelist, filter_whitelist
from .tags import Tag, TagPath


class Action(Enum):
    REMOVE = "remove"
    EMPTY = "empty"
    REPLACE_DUMMY = "replace-dummy"
    KEEP = "keep"
    REMAP_UID = "remap-uid"
    SHIFT_DATE = "shift-date"
    CLEAN_TEXT = "clean-text"


_ACTION_BY_NAME = {a.value: a for a in Action}

# Tags whose RemapUID resolution yields a keyed patient pseudonym instead of
# a UID (they are identifiers but not UI-valued).
PSEUDONYM_TAGS = {Tag(0x0010, 0x0020)}

VR_CLASS_NAMES = ("text", "date", "uid")

DUMMY_PN = "ANON^ANON"
DUMMY_TEXT = "REMOVED"

NOTE_SEPARATOR = "\n\n"


@dataclass
class RuleTable:
    profile_name: str
    explicit: dict[Tag, Action] = field(default_factory=dict)
    vr_defaults: dict[str, Action] = field(default_factory=dict)
    default: Action = Action.KEEP
    private_policy: str = "delegate"  # delegate | remove | keep

    def copy(self) -> "RuleTable":
        return RuleTable(self.profile_name, dict(self.explicit), dict(self.vr_defaults),
                         self.default, self.private_policy)


@dataclass
class CustomRuleSet:
    overrides: dict[Tag, Action] = field(default_factory=dict)
    version: str = ""


def parse_action(name: str) -> Action:
    action = _ACTION_BY_NAME.get(name.strip().lower())
    if action is None:
        raise UnknownActionKind(name)
    return action


@dataclass
class _ConfigDoc:
    profile: Optional[str] = None
    rules: dict[Tag, Action] = field(default_factory=dict)
    vr_defaults: dict[str, Action] = field(default_factory=dict)
    default: Optional[Action] = None
    private_policy: Optional[str] = None
    version: str = ""


def _parse_config(text: str, origin: str) -> _ConfigDoc:
    doc = _ConfigDoc()
    seen: set[Tag] = set()

    for line_no, raw_line in enumerate(text.splitlines(), 1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0].startswith("@"):
            directive = parts[0][1:]
            if directive == "profile":
                if len(parts) != 2:
                    raise SchemaError(line_no, "@profile takes one name")
                doc.profile = parts[1]
            elif directive == "vr-default":
                if len(parts) != 3:
                    raise SchemaError(line_no, "@vr-default takes <class-or-VR> <action>")
                key = parts[1]
                if key not in VR_CLASS_NAMES and not (len(key) == 2 and key.isalpha()):
                    raise SchemaError(line_no, f"unknown VR class {key!r}")
                doc.vr_defaults[key if key in VR_CLASS_NAMES else key.upper()] = parse_action(parts[2])
            elif directive == "default":
                if len(parts) != 2:
                    raise SchemaError(line_no, "@default takes one action")
                doc.default = parse_action(parts[1])
            elif directive == "private":
                if len(parts) != 2 or parts[1] not in ("delegate", "remove", "keep"):
                    raise SchemaError(line_no, "@private takes delegate|remove|keep")
                doc.private_policy = parts[1]
            elif directive == "version":
                if len(parts) != 2:
                    raise SchemaError(line_no, "@version takes one token")
                doc.version = parts[1]
            else:
                raise SchemaError(line_no, f"unknown directive @{directive}")
            continue

        if len(parts) != 2:
            raise SchemaError(line_no, f"expected 'GGGG,EEEE <action>', got {line!r}")
        try:
            tag = Tag.parse(parts[0])
        except ValueError:
            raise SchemaError(line_no, f"bad tag {parts[0]!r}") from None
        if tag in seen:
            raise DuplicateTagRule(tag)
        seen.add(tag)
        doc.rules[tag] = parse_action(parts[1])

    return doc


def builtin_profile(name: str) -> RuleTable:
    """Bundled base table for profile 'ps315' or 'tcia'."""
    try:
        text = resources.files("dcmdeid.data.profiles").joinpath(f"{name}.rules").read_text()
    except FileNotFoundError:
        raise DeidError(f"no bundled profile named {name!r}") from None
    doc = _parse_config(text, name)
    if doc.profile is not None:
        raise DeidError(f"bundled profile {name!r} must not include another profile")
    return RuleTable(name, doc.rules, doc.vr_defaults,
                     doc.default or Action.KEEP, doc.private_policy or "delegate")


def builtin_custom_rules() -> tuple[RuleTable, CustomRuleSet]:
    """Bundled tcia profile plus the custom-rule overlay."""
    text = resources.files("dcmdeid.data.profiles").joinpath("custom.rules").read_text()
    return _load_config_text(text, "custom.rules")


def load_rule_table(path) -> tuple[RuleTable, CustomRuleSet]:
    """Load a rule config file; `@profile ps315|tcia` pulls in a bundled
    base table, and the file's tag rules become the custom overlay."""
    with open(path) as fh:
        text = fh.read()
    return _load_config_text(text, str(path))


def _load_config_text(text: str, origin: str) -> tuple[RuleTable, CustomRuleSet]:
    doc = _parse_config(text, origin)
    if doc.profile is None:
        # Standalone table: tag rules are the explicit table, no overlay.
        table = RuleTable("custom", doc.rules, doc.vr_defaults,
                          doc.default or Action.KEEP, doc.private_policy or "delegate")
        return table, CustomRuleSet(version=doc.version)
    base = builtin_profile(doc.profile)
    base.vr_defaults.update(doc.vr_defaults)
    if doc.default is not None:
        base.default = doc.default
    if doc.private_policy is not None:
        base.private_policy = doc.private_policy
    return base, CustomRuleSet(dict(doc.rules), doc.version)


def resolve_action(table: RuleTable, custom: Optional[CustomRuleSet], tag: Tag, vr: str) -> Action:
    """Resolution precedence: custom override > explicit rule > VR default
    (exact VR code first, then class) > profile default."""
    if custom is not None:
        hit = custom.overrides.get(tag)
        if hit is not None:
            return hit
    hit = table.explicit.get(tag)
    if hit is not None:
        return hit
    hit = table.vr_defaults.get(vr)
    if hit is not None:
        return hit
    if vr in TEXT_VRS and "text" in table.vr_defaults:
        return table.vr_defaults["text"]
    if vr in DATE_VRS and "date" in table.vr_defaults:
        return table.vr_defaults["date"]
    if vr == "UI" and "uid" in table.vr_defaults:
        return table.vr_defaults["uid"]
    return table.default


# ---------------------------------------------------------------------------
# Free-text consolidation


@dataclass
class Segment:
    path: str
    text: str
    start: int
    end: int


@dataclass
class MedicalNote:
    segments: list[Segment]
    document: str
    separator: str = NOTE_SEPARATOR


def consolidate_free_text(ds: DataSet, table: RuleTable,
                          custom: Optional[CustomRuleSet]) -> MedicalNote:
    """Collect every text-class element headed for CleanText/Empty/
    ReplaceDummy into one document, separated so detector context cannot
    bleed across elements. Private elements never participate (they are
    the private-dictionary stage's business)."""
    segments: list[Segment] = []
    parts: list[str] = []
    pos = 0
    for path, el in ds.walk():
        if el.tag.is_private or el.is_sequence or el.vr not in TEXT_VRS:
            continue
        action = resolve_action(table, custom, el.tag, el.vr)
        if action not in (Action.CLEAN_TEXT, Action.EMPTY, Action.REPLACE_DUMMY):
            continue
        text = el.text_value()
        if not text:
            continue
        if parts:
            pos += len(NOTE_SEPARATOR)
        segments.append(Segment(str(path), text, pos, pos + len(text)))
        parts.append(text)
        pos += len(text)
    return MedicalNote(segments, NOTE_SEPARATOR.join(parts))


def apply_entity_removals(note: MedicalNote, entities: list[EntitySpan]) -> dict[str, str]:
    """New values for segments touched by entities; untouched segments are
    absent. Entities are clipped to each segment independently."""
    for e in entities:
        if not (0 <= e.start < e.end <= len(note.document)):
            raise SpanOutOfBounds(f"[{e.start},{e.end}) outside document of length {len(note.document)}")
    result: dict[str, str] = {}
    for seg in note.segments:
        mask = None
        for e in entities:
            lo = max(e.start, seg.start)
            hi = min(e.end, seg.end)
            if lo >= hi:
                continue
            if mask is None:
                mask = bytearray(len(seg.text))
            for i in range(lo - seg.start, hi - seg.start):
                mask[i] = 1
        if mask is not None:
            result[seg.path] = "".join(c for c, m in zip(seg.text, mask) if not m)
    return result


# ---------------------------------------------------------------------------
# Dataset de-identification


@dataclass
class DeidContext:
    store: IdentityStore
    detector: object
    whitelist: Optional[Whitelist] = None
    date_offset_days: Optional[int] = None
    private_dict: Optional[object] = None  # private.PrivateDict

    @property
    def offset(self) -> int:
        return self.store.date_offset_days if self.date_offset_days is None else self.date_offset_days


@dataclass
class ReportRow:
    path: str
    tag: Tag
    keyword: str
    action: str
    before: str
    after: str
    changed: bool
    degraded: bool = False
    note: str = ""


@dataclass
class DeidReport:
    rows: list[ReportRow] = field(default_factory=list)
    entities_found: int = 0
    detector_failed: bool = False

    @property
    def action_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for row in self.rows:
            counts[row.action] = counts.get(row.action, 0) + 1
        return counts


def _value_hash(el: DataElement) -> str:
    if el.is_sequence:
        return f"sq[{len(el.items)}]"
    return hashlib.sha256(el.raw).hexdigest()[:12]


def deidentify_dataset(ds: DataSet, table: RuleTable, custom: Optional[CustomRuleSet],
                       ctx: DeidContext) -> tuple[DataSet, DeidReport]:
    """Apply resolved actions to every element (nested included), returning
    the new dataset and a per-element report.

    One failing element never aborts the dataset: detector failures degrade
    the affected text elements to Empty and are flagged in the report.
    """
    from . import private as private_mod

    out = ds.copy()
    report = DeidReport()

    note = consolidate_free_text(out, table, custom)
    removals: dict[str, str] = {}
    if note.segments:
        try:
            entities = ctx.detector.detect_entities(note.document)
            entities = filter_whitelist(entities, ctx.whitelist, note.document)
            report.entities_found = len(entities)
            removals = apply_entity_removals(note, entities)
        except DeidError:
            report.detector_failed = True
    note_paths = {seg.path for seg in note.segments}

    to_remove: list[TagPath] = []
    delegate_private = table.private_policy == "delegate"

    for path, el in list(out.walk()):
        if el.tag.is_private:
            if table.private_policy == "remove":
                before = _value_hash(el)
                to_remove.append(path)
                report.rows.append(ReportRow(str(path), el.tag, keyword_of(el.tag) or "",
                                             "remove", before, "", True))
            elif table.private_policy == "keep":
                h = _value_hash(el)
                report.rows.append(ReportRow(str(path), el.tag, keyword_of(el.tag) or "",
                                             "keep", h, h, False))
            elif ctx.private_dict is None:
                h = _value_hash(el)
                report.rows.append(ReportRow(str(path), el.tag, keyword_of(el.tag) or "",
                                             "delegated", h, h, False))
            # else: the private stage below reports it
            continue

        action = resolve_action(table, custom, el.tag, el.vr)
        before = _value_hash(el)
        degraded = False
        note_text = ""

        if action == Action.KEEP:
            pass
        elif action == Action.REMOVE:
            to_remove.append(path)
        elif action == Action.EMPTY:
            el.clear()
        elif action == Action.REPLACE_DUMMY:
            degraded = _apply_dummy(el, ctx)
        elif action == Action.CLEAN_TEXT:
            if el.is_sequence or el.vr not in TEXT_VRS:
                el.clear()
                degraded = True
                note_text = "clean-text on non-text VR"
            elif report.detector_failed and str(path) in note_paths:
                el.clear()
                degraded = True
                note_text = "detector unavailable"
            elif str(path) in removals:
                el.set_text(removals[str(path)])
        elif action == Action.REMAP_UID:
            degraded, note_text = _apply_remap(el, ctx)
        elif action == Action.SHIFT_DATE:
            degraded, note_text = _apply_shift(el, ctx)

        after = "" if action == Action.REMOVE else _value_hash(el)
        report.rows.append(ReportRow(str(path), el.tag, keyword_of(el.tag) or "",
                                     action.value, before, after,
                                     action == Action.REMOVE or after != before,
                                     degraded, note_text))

    for path in sorted(to_remove, key=lambda p: (p.depth, str(p)), reverse=True):
        _remove_path(out, path)

    meta_uid = out.file_meta.get(Tag(0x0002, 0x0003))
    if meta_uid is not None:
        value = meta_uid.text_value()
        if value and not value.startswith(DICOM_STANDARD_UID_ROOT):
            meta_uid.set_text(ctx.store.remap_uid(value))

    if delegate_private and ctx.private_dict is not None:
        out, private_report = private_mod.deidentify_private(out, ctx.private_dict)
        report.rows.extend(private_report.rows)

    return out, report


def _apply_dummy(el: DataElement, ctx: DeidContext) -> bool:
    if el.is_sequence:
        el.clear()
        return True
    if el.vr == "PN":
        el.set_text(DUMMY_PN)
    elif el.vr in DATE_VRS:
        _apply_shift(el, ctx)
    elif el.vr == "UI":
        _apply_remap(el, ctx)
    elif el.vr in TEXT_VRS or el.vr in ("AE", "AS", "UC", "UR", "DS", "IS"):
        el.set_text(DUMMY_TEXT)
    else:
        el.clear()
        return True
    return False


def _apply_remap(el: DataElement, ctx: DeidContext) -> tuple[bool, str]:
    if el.is_sequence:
        el.clear()
        return True, "remap-uid on sequence"
    if el.vr == "UI":
        components = el.value
        out = []
        for uid in components:
            if not uid or uid.startswith(DICOM_STANDARD_UID_ROOT):
                out.append(uid)
            else:
                out.append(ctx.store.remap_uid(uid))
        if out:
            el.set_text(out)
        return False, ""
    if el.tag in PSEUDONYM_TAGS:
        text = el.text_value()
        if text:
            el.set_text(ctx.store.remap_patient_id(text))
        return False, ""
    el.clear()
    return True, "remap-uid on non-UID element"


def _apply_shift(el: DataElement, ctx: DeidContext) -> tuple[bool, str]:
    if el.is_sequence or el.vr not in DATE_VRS:
        el.clear()
        return True, "shift-date on non-date VR"
    try:
        shifted = [shift_date(v, ctx.offset, el.vr) for v in el.value]
    except DeidError:
        el.clear()
        return True, "unparseable date"
    if shifted:
        el.set_text(shifted)
    return False, ""


def _remove_path(ds: DataSet, path: TagPath) -> None:
    container = ds.elements
    for seq_tag, index in path.steps:
        seq = container.get(seq_tag)
        if seq is None or not seq.is_sequence or index >= len(seq.items):
            return
        container = seq.items[index].elements
    container.pop(path.tag, None)
