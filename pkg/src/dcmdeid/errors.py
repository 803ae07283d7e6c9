"""Shared exception types for the toolkit."""


class DeidError(Exception):
    """Base class for all toolkit errors."""


class MissingMagic(DeidError):
    """Input does not start with a DICOM preamble + 'DICM' marker."""


class TruncatedElement(DeidError):
    def __init__(self, tag, offset: int, detail: str = ""):
        self.tag = tag
        self.offset = offset
        super().__init__(f"truncated element at {tag} (offset {offset}){': ' + detail if detail else ''}")


class UnsupportedTransferSyntax(DeidError):
    def __init__(self, uid: str):
        self.uid = uid
        super().__init__(f"unsupported transfer syntax {uid!r}")


class OddLengthValue(DeidError):
    def __init__(self, tag):
        self.tag = tag
        super().__init__(f"value for {tag} has odd length and no padding rule applies")


class SchemaError(DeidError):
    def __init__(self, line_no: int, detail: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {detail}")


class UnknownActionKind(DeidError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown action kind {name!r}")


class DuplicateTagRule(DeidError):
    def __init__(self, tag):
        self.tag = tag
        super().__init__(f"duplicate rule for tag {tag}")


class DuplicateKey(DeidError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"duplicate private dictionary key {key!r}")


class NotPrivate(DeidError):
    def __init__(self, tag):
        self.tag = tag
        super().__init__(f"{tag} is not a private tag")


class MissingCreator(DeidError):
    pass


class InvalidUID(DeidError):
    def __init__(self, uid: str):
        self.uid = uid
        super().__init__(f"not a valid UID: {uid!r}")


class EmptyID(DeidError):
    pass


class UnparseableDate(DeidError):
    def __init__(self, value: str):
        self.value = value
        super().__init__(f"unparseable date/time value {value!r}")


class RemoteUnavailable(DeidError):
    """A remote detection/OCR service could not be reached or answered badly."""


class EmptyWhitelist(DeidError):
    pass


class SpanOutOfBounds(DeidError):
    pass


class CompressedPixelData(DeidError):
    def __init__(self, uid: str):
        self.uid = uid
        super().__init__(f"pixel data uses a compressed transfer syntax ({uid})")


class InconsistentDimensions(DeidError):
    pass


class MissingDetections(DeidError):
    def __init__(self, path: str, frame: int | None = None):
        where = path if frame is None else f"{path} frame {frame}"
        super().__init__(f"no recorded detections for {where}")


class MissingOutputFile(DeidError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"expected output file missing: {path}")


class SpecError(DeidError):
    """Invalid corpus generation parameters."""
