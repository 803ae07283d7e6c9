"""Missing-attribute detection and empty-value repair."""

import pytest

from dcmdeid.codec import DataElement, new_file
from dcmdeid.datadict import tag_by_keyword
from dcmdeid.tags import Tag
from dcmdeid.validate import (
    IgnoreList,
    builtin_required_profile,
    load_ignore_list,
    load_required_profile,
    parse_external_validator_output,
    repair,
    validate,
)

CT = "1.2.840.10008.5.1.4.1.1.2"


def _ct_ds(*keywords):
    ds = new_file(sop_class_uid=CT, sop_instance_uid="1.2.3")
    ds.set(DataElement.text(Tag(0x0008, 0x0016), "UI", CT))
    for kw in keywords:
        tag = tag_by_keyword(kw)
        ds.set(DataElement.empty(tag, "LO"))
    return ds


def _full_ct_ds():
    profile = builtin_required_profile()
    ds = new_file(sop_class_uid=CT, sop_instance_uid="1.2.3")
    for tag in profile.required_for(CT):
        from dcmdeid.datadict import vr_of

        ds.set(DataElement.empty(tag, vr_of(tag) or "UN"))
    ds.get(Tag(0x0008, 0x0016)).set_text(CT)
    return ds


def test_missing_patient_name_flagged():
    profile = builtin_required_profile()
    ds = _full_ct_ds()
    ds.remove(tag_by_keyword("PatientName"))
    issues = validate(ds, profile)
    assert [i.keyword for i in issues] == ["PatientName"]


def test_satisfied_profile_no_issues():
    assert validate(_full_ct_ds(), builtin_required_profile()) == []


def test_unknown_sop_class_empty_with_warning(caplog):
    import logging

    ds = new_file(sop_class_uid="1.2.3.999", sop_instance_uid="1.2.3")
    ds.set(DataElement.text(Tag(0x0008, 0x0016), "UI", "1.2.3.999"))
    with caplog.at_level(logging.WARNING):
        issues = validate(ds, builtin_required_profile())
    assert issues == []
    assert any("profile" in r.message for r in caplog.records)


def test_repair_inserts_correct_vr():
    profile = builtin_required_profile()
    ds = _full_ct_ds()
    ds.remove(tag_by_keyword("StudyDate"))
    issues = validate(ds, profile)
    repair(ds, issues, IgnoreList(set()))
    el = ds.get(tag_by_keyword("StudyDate"))
    assert el is not None and el.vr == "DA" and el.raw == b""


def test_repair_skips_ignored():
    profile = builtin_required_profile()
    ds = _full_ct_ds()
    ds.remove(tag_by_keyword("Manufacturer"))
    issues = validate(ds, profile)
    repair(ds, issues, IgnoreList())
    assert ds.get(tag_by_keyword("Manufacturer")) is None


def test_repair_zero_issues_unchanged():
    ds = _full_ct_ds()
    before = {t: e.raw for t, e in ds.elements.items()}
    repair(ds, [], IgnoreList())
    assert {t: e.raw for t, e in ds.elements.items()} == before


def test_repair_never_touches_existing_values():
    profile = builtin_required_profile()
    ds = _full_ct_ds()
    ds.get(tag_by_keyword("PatientSex")).set_text("F ")
    ds.remove(tag_by_keyword("StudyDate"))
    repair(ds, validate(ds, profile), IgnoreList())
    assert ds.get(tag_by_keyword("PatientSex")).text_value() == "F"


def test_repair_validate_fixpoint():
    profile = builtin_required_profile()
    ds = _full_ct_ds()
    for kw in ("PatientName", "StudyDate", "StudyTime", "Manufacturer", "SeriesNumber"):
        ds.remove(tag_by_keyword(kw))
    ignore = IgnoreList()
    repair(ds, validate(ds, profile), ignore)
    remaining = validate(ds, profile)
    assert {i.keyword for i in remaining} == {"Manufacturer"}
    assert all(i.keyword in ignore for i in remaining)


def test_default_ignore_list_contents():
    ignore = IgnoreList()
    for kw in ("CodeValue", "Manufacturer", "ClinicalTrialSubjectID"):
        assert kw in ignore


def test_load_ignore_list(tmp_path):
    p = tmp_path / "ign.txt"
    p.write_text("# comment\nManufacturer\nStationName\n")
    ignore = load_ignore_list(p)
    assert "StationName" in ignore and "Manufacturer" in ignore
    assert "CodeValue" not in ignore


def test_load_required_profile(tmp_path):
    p = tmp_path / "req.cfg"
    p.write_text("[1.2.3]\nPatientName\nStudyDate\n0008,0060\n")
    profile = load_required_profile(p)
    tags = profile.required_for("1.2.3")
    assert tag_by_keyword("PatientName") in tags
    assert Tag(0x0008, 0x0060) in tags


# ---------------------------------------------------------------------------
# external validator output


def test_parse_external_missing_attribute():
    text = (
        "Warning - Attribute is not present in standard DICOM IOD - (0x0009,0x1001)\n"
        'Error - Missing attribute Type 2 Required Element=<PatientName> Module=<Patient>\n'
        'Error - Missing attribute Type 1 Required Element=<StudyDate> Module=<GeneralStudy>\n'
    )
    issues = parse_external_validator_output(text)
    assert [i.keyword for i in issues] == ["PatientName", "StudyDate"]
    assert issues[0].tag == tag_by_keyword("PatientName")


def test_parse_external_empty():
    assert parse_external_validator_output("") == []


def test_parse_external_warnings_only():
    text = "Warning - Missing attribute would go here but it is a warning\n"
    assert parse_external_validator_output(text) == []
