"""DICOM de-identification toolkit.

Parses Part-10 files, applies profile-driven per-tag rules with custom
overlays, removes PHI from free text and burned-in pixel text via a
pluggable detector, de-identifies private tags through a creator-keyed
dictionary, repairs post-de-identification validity, and scores its own
output against synthetic answer keys.
"""

from .codec import (
    DataElement,
    DataSet,
    SequenceItem,
    TransferSyntax,
    new_file,
    parse_file,
    private_creator_for,
    serialize_file,
)
from .errors import DeidError
from .harness import AnswerKey, CorpusSpec, check_score, generate_corpus, score_run
from .identity import IdentityStore, shift_date
from .phi import (
    Category,
    EntitySpan,
    PatternDetector,
    RemoteDetector,
    Whitelist,
    bundled_whitelist,
    deidentified_element_val,
    detect_filtered,
    filter_whitelist,
    load_whitelist,
)
from .pipeline import RunConfig, RunReport, discover_files, run
from .pixels import (
    DetectionsFile,
    Frame,
    RemoteOCR,
    TextBox,
    deidentify_image,
    extract_frames,
    redact_boxes,
)
from .private import (
    PrivateDict,
    PrivateKey,
    build_private_key,
    bundled_private_dict,
    deidentify_private,
    load_private_dict,
)
from .rules import (
    Action,
    CustomRuleSet,
    DeidContext,
    MedicalNote,
    RuleTable,
    apply_entity_removals,
    builtin_custom_rules,
    builtin_profile,
    consolidate_free_text,
    deidentify_dataset,
    load_rule_table,
    resolve_action,
)
from .tags import Tag, TagPath
from .validate import (
    IgnoreList,
    RequiredAttributeProfile,
    ValidationIssue,
    builtin_required_profile,
    parse_external_validator_output,
    repair,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AnswerKey",
    "Category",
    "CorpusSpec",
    "CustomRuleSet",
    "DataElement",
    "DataSet",
    "DeidContext",
    "DeidError",
    "DetectionsFile",
    "EntitySpan",
    "Frame",
    "IdentityStore",
    "IgnoreList",
    "MedicalNote",
    "PatternDetector",
    "PrivateDict",
    "PrivateKey",
    "RemoteDetector",
    "RemoteOCR",
    "RequiredAttributeProfile",
    "RuleTable",
    "RunConfig",
    "RunReport",
    "SequenceItem",
    "Tag",
    "TagPath",
    "TextBox",
    "TransferSyntax",
    "ValidationIssue",
    "Whitelist",
    "apply_entity_removals",
    "build_private_key",
    "builtin_custom_rules",
    "builtin_profile",
    "builtin_required_profile",
    "bundled_private_dict",
    "bundled_whitelist",
    "check_score",
    "consolidate_free_text",
    "deidentified_element_val",
    "deidentify_dataset",
    "deidentify_image",
    "deidentify_private",
    "detect_filtered",
    "discover_files",
    "extract_frames",
    "filter_whitelist",
    "generate_corpus",
    "load_private_dict",
    "load_rule_table",
    "load_whitelist",
    "new_file",
    "parse_external_validator_output",
    "parse_file",
    "private_creator_for",
    "redact_boxes",
    "repair",
    "resolve_action",
    "run",
    "score_run",
    "serialize_file",
    "shift_date",
    "validate",
]
