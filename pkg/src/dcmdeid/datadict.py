"""Minimal DICOM data dictionary.

Covers the attributes this toolkit reads, writes, or repairs: identifying
attributes, dates/times, UIDs, free-text description and comment fields,
device attributes, the image pixel module, and the sequence tags used in
the bundled profiles. Implicit-VR parsing and validator repair look VRs up
here; tags outside the dictionary fall back to UN.
"""

from __future__ import annotations

from .tags import Tag


def _t(group: int, element: int) -> Tag:
    return Tag(group, element)


# Tag -> (keyword, VR)
TAG_INFO: dict[Tag, tuple[str, str]] = {
    # File meta (group 0002)
    _t(0x0002, 0x0000): ("FileMetaInformationGroupLength", "UL"),
    _t(0x0002, 0x0001): ("FileMetaInformationVersion", "OB"),
    _t(0x0002, 0x0002): ("MediaStorageSOPClassUID", "UI"),
    _t(0x0002, 0x0003): ("MediaStorageSOPInstanceUID", "UI"),
    _t(0x0002, 0x0010): ("TransferSyntaxUID", "UI"),
    _t(0x0002, 0x0012): ("ImplementationClassUID", "UI"),
    _t(0x0002, 0x0013): ("ImplementationVersionName", "SH"),
    # Identification (group 0008)
    _t(0x0004, 0x1500): ("ReferencedFileID", "CS"),
    _t(0x0008, 0x0005): ("SpecificCharacterSet", "CS"),
    _t(0x0008, 0x0008): ("ImageType", "CS"),
    _t(0x0008, 0x0012): ("InstanceCreationDate", "DA"),
    _t(0x0008, 0x0013): ("InstanceCreationTime", "TM"),
    _t(0x0008, 0x0014): ("InstanceCreatorUID", "UI"),
    _t(0x0008, 0x0016): ("SOPClassUID", "UI"),
    _t(0x0008, 0x0018): ("SOPInstanceUID", "UI"),
    _t(0x0008, 0x0020): ("StudyDate", "DA"),
    _t(0x0008, 0x0021): ("SeriesDate", "DA"),
    _t(0x0008, 0x0022): ("AcquisitionDate", "DA"),
    _t(0x0008, 0x0023): ("ContentDate", "DA"),
    _t(0x0008, 0x002A): ("AcquisitionDateTime", "DT"),
    _t(0x0008, 0x0030): ("StudyTime", "TM"),
    _t(0x0008, 0x0031): ("SeriesTime", "TM"),
    _t(0x0008, 0x0032): ("AcquisitionTime", "TM"),
    _t(0x0008, 0x0033): ("ContentTime", "TM"),
    _t(0x0008, 0x0050): ("AccessionNumber", "SH"),
    _t(0x0008, 0x0060): ("Modality", "CS"),
    _t(0x0008, 0x0068): ("PresentationIntentType", "CS"),
    _t(0x0008, 0x0070): ("Manufacturer", "LO"),
    _t(0x0008, 0x0080): ("InstitutionName", "LO"),
    _t(0x0008, 0x0081): ("InstitutionAddress", "ST"),
    _t(0x0008, 0x0090): ("ReferringPhysicianName", "PN"),
    _t(0x0008, 0x0094): ("ReferringPhysicianTelephoneNumbers", "SH"),
    _t(0x0008, 0x0100): ("CodeValue", "SH"),
    _t(0x0008, 0x0102): ("CodingSchemeDesignator", "SH"),
    _t(0x0008, 0x0104): ("CodeMeaning", "LO"),
    _t(0x0008, 0x1010): ("StationName", "SH"),
    _t(0x0008, 0x1030): ("StudyDescription", "LO"),
    _t(0x0008, 0x103E): ("SeriesDescription", "LO"),
    _t(0x0008, 0x1040): ("InstitutionalDepartmentName", "LO"),
    _t(0x0008, 0x1048): ("PhysiciansOfRecord", "PN"),
    _t(0x0008, 0x1050): ("PerformingPhysicianName", "PN"),
    _t(0x0008, 0x1060): ("NameOfPhysiciansReadingStudy", "PN"),
    _t(0x0008, 0x1070): ("OperatorsName", "PN"),
    _t(0x0008, 0x1080): ("AdmittingDiagnosesDescription", "LO"),
    _t(0x0008, 0x1090): ("ManufacturerModelName", "LO"),
    _t(0x0008, 0x1110): ("ReferencedStudySequence", "SQ"),
    _t(0x0008, 0x1111): ("ReferencedPerformedProcedureStepSequence", "SQ"),
    _t(0x0008, 0x1115): ("ReferencedSeriesSequence", "SQ"),
    _t(0x0008, 0x1140): ("ReferencedImageSequence", "SQ"),
    _t(0x0008, 0x1150): ("ReferencedSOPClassUID", "UI"),
    _t(0x0008, 0x1155): ("ReferencedSOPInstanceUID", "UI"),
    _t(0x0008, 0x2111): ("DerivationDescription", "ST"),
    _t(0x0008, 0x2112): ("SourceImageSequence", "SQ"),
    _t(0x0008, 0x3010): ("IrradiationEventUID", "UI"),
    # Patient (group 0010)
    _t(0x0010, 0x0010): ("PatientName", "PN"),
    _t(0x0010, 0x0020): ("PatientID", "LO"),
    _t(0x0010, 0x0021): ("IssuerOfPatientID", "LO"),
    _t(0x0010, 0x0030): ("PatientBirthDate", "DA"),
    _t(0x0010, 0x0032): ("PatientBirthTime", "TM"),
    _t(0x0010, 0x0040): ("PatientSex", "CS"),
    _t(0x0010, 0x1000): ("OtherPatientIDs", "LO"),
    _t(0x0010, 0x1001): ("OtherPatientNames", "PN"),
    _t(0x0010, 0x1010): ("PatientAge", "AS"),
    _t(0x0010, 0x1020): ("PatientSize", "DS"),
    _t(0x0010, 0x1030): ("PatientWeight", "DS"),
    _t(0x0010, 0x1040): ("PatientAddress", "LO"),
    _t(0x0010, 0x2000): ("MedicalAlerts", "LO"),
    _t(0x0010, 0x2110): ("Allergies", "LO"),
    _t(0x0010, 0x2150): ("CountryOfResidence", "LO"),
    _t(0x0010, 0x2154): ("PatientTelephoneNumbers", "SH"),
    _t(0x0010, 0x2160): ("EthnicGroup", "SH"),
    _t(0x0010, 0x2180): ("Occupation", "SH"),
    _t(0x0010, 0x21B0): ("AdditionalPatientHistory", "LT"),
    _t(0x0010, 0x21C0): ("PregnancyStatus", "US"),
    _t(0x0010, 0x4000): ("PatientComments", "LT"),
    # Clinical trial (group 0012)
    _t(0x0012, 0x0010): ("ClinicalTrialSponsorName", "LO"),
    _t(0x0012, 0x0020): ("ClinicalTrialProtocolID", "LO"),
    _t(0x0012, 0x0030): ("ClinicalTrialSiteID", "LO"),
    _t(0x0012, 0x0040): ("ClinicalTrialSubjectID", "LO"),
    # Acquisition (group 0018)
    _t(0x0018, 0x0010): ("ContrastBolusAgent", "LO"),
    _t(0x0018, 0x0015): ("BodyPartExamined", "CS"),
    _t(0x0018, 0x0020): ("ScanningSequence", "CS"),
    _t(0x0018, 0x0050): ("SliceThickness", "DS"),
    _t(0x0018, 0x0060): ("KVP", "DS"),
    _t(0x0018, 0x1000): ("DeviceSerialNumber", "LO"),
    _t(0x0018, 0x1002): ("DeviceUID", "UI"),
    _t(0x0018, 0x1004): ("PlateID", "LO"),
    _t(0x0018, 0x1020): ("SoftwareVersions", "LO"),
    _t(0x0018, 0x1030): ("ProtocolName", "LO"),
    _t(0x0018, 0x1151): ("XRayTubeCurrent", "IS"),
    _t(0x0018, 0x5100): ("PatientPosition", "CS"),
    # Relationship (group 0020)
    _t(0x0020, 0x000D): ("StudyInstanceUID", "UI"),
    _t(0x0020, 0x000E): ("SeriesInstanceUID", "UI"),
    _t(0x0020, 0x0010): ("StudyID", "SH"),
    _t(0x0020, 0x0011): ("SeriesNumber", "IS"),
    _t(0x0020, 0x0012): ("AcquisitionNumber", "IS"),
    _t(0x0020, 0x0013): ("InstanceNumber", "IS"),
    _t(0x0020, 0x0020): ("PatientOrientation", "CS"),
    _t(0x0020, 0x0032): ("ImagePositionPatient", "DS"),
    _t(0x0020, 0x0037): ("ImageOrientationPatient", "DS"),
    _t(0x0020, 0x0052): ("FrameOfReferenceUID", "UI"),
    _t(0x0020, 0x1040): ("PositionReferenceIndicator", "LO"),
    _t(0x0020, 0x4000): ("ImageComments", "LT"),
    # Image pixel (group 0028)
    _t(0x0028, 0x0002): ("SamplesPerPixel", "US"),
    _t(0x0028, 0x0004): ("PhotometricInterpretation", "CS"),
    _t(0x0028, 0x0008): ("NumberOfFrames", "IS"),
    _t(0x0028, 0x0010): ("Rows", "US"),
    _t(0x0028, 0x0011): ("Columns", "US"),
    _t(0x0028, 0x0030): ("PixelSpacing", "DS"),
    _t(0x0028, 0x0100): ("BitsAllocated", "US"),
    _t(0x0028, 0x0101): ("BitsStored", "US"),
    _t(0x0028, 0x0102): ("HighBit", "US"),
    _t(0x0028, 0x0103): ("PixelRepresentation", "US"),
    _t(0x0028, 0x1050): ("WindowCenter", "DS"),
    _t(0x0028, 0x1051): ("WindowWidth", "DS"),
    # Study scheduling (group 0032)
    _t(0x0032, 0x1032): ("RequestingPhysician", "PN"),
    _t(0x0032, 0x1060): ("RequestedProcedureDescription", "LO"),
    _t(0x0032, 0x4000): ("StudyComments", "LT"),
    # Visit (group 0038)
    _t(0x0038, 0x0500): ("PatientState", "LO"),
    # Procedure step (group 0040)
    _t(0x0040, 0x0007): ("ScheduledProcedureStepDescription", "LO"),
    _t(0x0040, 0x0254): ("PerformedProcedureStepDescription", "LO"),
    _t(0x0040, 0x0275): ("RequestAttributesSequence", "SQ"),
    _t(0x0040, 0x0280): ("CommentsOnThePerformedProcedureStep", "ST"),
    _t(0x0040, 0xA124): ("UID", "UI"),
    # Presentation (group 2050)
    _t(0x2050, 0x0020): ("PresentationLUTShape", "CS"),
    # Pixel data (group 7FE0)
    _t(0x7FE0, 0x0010): ("PixelData", "OW"),
}

KEYWORD_TO_TAG: dict[str, Tag] = {kw: tag for tag, (kw, _) in TAG_INFO.items()}

# Well-known SOP class and transfer syntax UIDs used by the toolkit.
UID_CT_IMAGE_STORAGE = "1.2.840.10008.5.1.4.1.1.2"
UID_MR_IMAGE_STORAGE = "1.2.840.10008.5.1.4.1.1.4"
UID_CR_IMAGE_STORAGE = "1.2.840.10008.5.1.4.1.1.1"
UID_IMPLICIT_VR_LE = "1.2.840.10008.1.2"
UID_EXPLICIT_VR_LE = "1.2.840.10008.1.2.1"

# Registered DICOM root: UIDs under it identify standard objects (transfer
# syntaxes, SOP classes), never patients, and must not be remapped.
DICOM_STANDARD_UID_ROOT = "1.2.840.10008."


def keyword_of(tag: Tag) -> str | None:
    info = TAG_INFO.get(tag)
    return info[0] if info else None


def vr_of(tag: Tag) -> str | None:
    info = TAG_INFO.get(tag)
    return info[1] if info else None


def tag_by_keyword(keyword: str) -> Tag | None:
    return KEYWORD_TO_TAG.get(keyword)
