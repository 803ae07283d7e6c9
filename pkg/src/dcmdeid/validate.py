"""Post-de-identification integrity checks.

Finds required attributes that de-identification stripped and re-inserts
them with empty values, honoring an ignore list of attributes whose
absence is accepted. A parser for the line output of the usual external
DICOM validator is included so its findings can feed the same repair.
"""

from __future__ import annotations

import logging
import re
import subprocess
from dataclasses import dataclass, field
from importlib import resources

from .codec import DataElement, DataSet
from .datadict import keyword_of, tag_by_keyword, vr_of
from .tags import Tag

log = logging.getLogger(__name__)

DEFAULT_IGNORED = ("CodeValue", "Manufacturer", "ClinicalTrialSubjectID")


@dataclass
class ValidationIssue:
    kind: str  # currently always "MissingAttribute"
    tag: Tag | None
    keyword: str


@dataclass
class RequiredAttributeProfile:
    """Required tags (type-1/2 subset) per SOP class UID."""

    by_sop_class: dict[str, list[Tag]] = field(default_factory=dict)
    source: str = "<memory>"

    def required_for(self, sop_class_uid: str) -> list[Tag] | None:
        return self.by_sop_class.get(sop_class_uid)


@dataclass
class IgnoreList:
    keywords: set[str] = field(default_factory=lambda: set(DEFAULT_IGNORED))

    def __contains__(self, keyword: str) -> bool:
        return keyword in self.keywords


def load_required_profile(path) -> RequiredAttributeProfile:
    with open(path) as fh:
        return _parse_profile(fh.read(), str(path))


def builtin_required_profile() -> RequiredAttributeProfile:
    text = resources.files("dcmdeid.data.profiles").joinpath("required_attrs.cfg").read_text()
    return _parse_profile(text, "bundled")


def _parse_profile(text: str, source: str) -> RequiredAttributeProfile:
    profile = RequiredAttributeProfile(source=source)
    current: list[Tag] | None = None
    for raw_line in text.splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = profile.by_sop_class.setdefault(line[1:-1].strip(), [])
            continue
        if current is None:
            continue
        tag = tag_by_keyword(line)
        if tag is None:
            try:
                tag = Tag.parse(line)
            except ValueError:
                log.warning("unknown attribute %r in %s", line, source)
                continue
        if tag not in current:
            current.append(tag)
    return profile


def load_ignore_list(path) -> IgnoreList:
    keywords = set()
    with open(path) as fh:
        for line in fh:
            word = line.split("#", 1)[0].strip()
            if word:
                keywords.add(word)
    return IgnoreList(keywords)


def validate(ds: DataSet, profile: RequiredAttributeProfile) -> list[ValidationIssue]:
    """One issue per required attribute absent from the dataset."""
    sop_class = ds.text(Tag(0x0008, 0x0016))
    required = profile.required_for(sop_class)
    if required is None:
        log.warning("no required-attribute profile for SOP class %r", sop_class)
        return []
    issues = []
    for tag in required:
        if ds.get(tag) is None:
            issues.append(ValidationIssue("MissingAttribute", tag, keyword_of(tag) or str(tag)))
    return issues


def repair(ds: DataSet, issues: list[ValidationIssue], ignore: IgnoreList) -> DataSet:
    """Insert zero-length elements for the non-ignored missing attributes.

    Existing elements are never touched; ignored issues are skipped and
    logged.
    """
    for issue in issues:
        if issue.keyword in ignore:
            log.info("ignoring missing attribute %s", issue.keyword)
            continue
        tag = issue.tag or tag_by_keyword(issue.keyword)
        if tag is None:
            log.warning("cannot repair unknown attribute %r", issue.keyword)
            continue
        if ds.get(tag) is not None:
            continue
        vr = vr_of(tag) or "UN"
        ds.set(DataElement.empty(tag, vr))
    return ds


_EXTERNAL_LINE_RE = re.compile(
    r"Error\s*-\s*Missing attribute.*?<([A-Za-z0-9 ]+?)>\s*"
)


def parse_external_validator_output(text: str) -> list[ValidationIssue]:
    """Issues from external-validator stderr lines like
    ``Error - Missing attribute Type 2 Required Element=<PatientName> Module=<Patient>``.
    Only error lines about missing attributes qualify."""
    issues = []
    for line in text.splitlines():
        if "Missing attribute" not in line or "Error" not in line:
            continue
        m = _EXTERNAL_LINE_RE.search(line)
        if m is None:
            continue
        keyword = m.group(1).replace(" ", "")
        issues.append(ValidationIssue("MissingAttribute", tag_by_keyword(keyword), keyword))
    return issues


def run_external_validator(file_path, executable: str = "dciodvfy") -> list[ValidationIssue]:
    """Invoke the external validator on a file and parse its stderr."""
    proc = subprocess.run([executable, str(file_path)], capture_output=True, text=True)
    return parse_external_validator_output(proc.stderr)
