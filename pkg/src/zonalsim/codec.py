"""Canonical TLV serialization: the signing, storage, and wire format.

Every encoded value is one TLV: a 1-byte type tag, a 4-byte big-endian
length, then the value bytes. Struct values are the concatenation of
field TLVs in non-decreasing field-tag order; repeated tags express list
elements in list order. Nested domain types appear as their own full
TLV inside the enclosing field. Strings are UTF-8, byte fields raw,
integers unsigned 64-bit big-endian, booleans one byte (0/1).

The full tag table with worked byte examples is in docs/wire-format.md.
Parsing is strict: unknown tags, out-of-order fields, bad lengths,
trailing bytes, and invariant-violating values all raise ``ParseError``
with the absolute byte offset of the problem.
"""

from __future__ import annotations

from datetime import date
from typing import Callable

from .crypto import Signature, SecureEnvelope
from .domain import (
    AadhaarNumber,
    AuthResponse,
    AuthStatus,
    BiometricData,
    DemographicData,
    EnrollmentRecord,
    InvariantError,
    PartialDemographics,
    PidBlock,
    SubmittedBiometrics,
    ZoneId,
)

TAG_AUTH_STATUS = 0x01
TAG_AADHAAR = 0x02
TAG_ZONE_ID = 0x03
TAG_DEMOGRAPHICS = 0x04
TAG_BIOMETRICS = 0x05
TAG_ENROLLMENT_RECORD = 0x06
TAG_PID_BLOCK = 0x07
TAG_AUTH_RESPONSE = 0x08
TAG_SIGNATURE = 0x09
TAG_SECURE_ENVELOPE = 0x0A
TAG_PARTIAL_DEMOGRAPHICS = 0x0B
TAG_SUBMITTED_BIOMETRICS = 0x0C

_HEADER_LEN = 5


class SerializeError(ValueError):
    """The value cannot be canonically encoded (unknown type, bad invariant)."""


class ParseError(ValueError):
    """Input bytes are not a canonical encoding; carries the failing offset."""

    def __init__(self, offset: int, reason: str) -> None:
        super().__init__(f"parse error at byte {offset}: {reason}")
        self.offset = offset


def tlv(tag: int, value: bytes) -> bytes:
    return bytes((tag,)) + len(value).to_bytes(4, "big") + value


def _u64(value: int) -> bytes:
    return value.to_bytes(8, "big")


def _bool(value: bool) -> bytes:
    return b"\x01" if value else b"\x00"


def _date(value: date) -> bytes:
    return value.isoformat().encode("utf-8")


# ---------------------------------------------------------------------------
# Encoders
# ---------------------------------------------------------------------------


def _enc_demographics_fields(d: DemographicData) -> bytes:
    return b"".join(
        (
            tlv(1, d.name.encode("utf-8")),
            tlv(2, d.address.encode("utf-8")),
            tlv(3, _date(d.date_of_birth)),
            tlv(4, d.phone.encode("utf-8")),
            tlv(5, d.email.encode("utf-8")),
        )
    )


def _enc_partial_demographics_fields(d: PartialDemographics) -> bytes:
    parts = []
    if d.name is not None:
        parts.append(tlv(1, d.name.encode("utf-8")))
    if d.address is not None:
        parts.append(tlv(2, d.address.encode("utf-8")))
    if d.date_of_birth is not None:
        parts.append(tlv(3, _date(d.date_of_birth)))
    if d.phone is not None:
        parts.append(tlv(4, d.phone.encode("utf-8")))
    if d.email is not None:
        parts.append(tlv(5, d.email.encode("utf-8")))
    return b"".join(parts)


def _enc_biometrics_fields(b: BiometricData) -> bytes:
    parts = [tlv(1, t) for t in b.fingerprint_templates]
    parts += [tlv(2, t) for t in b.iris_templates]
    parts.append(tlv(3, b.photo_digest))
    return b"".join(parts)


def _enc_submitted_biometrics_fields(b: SubmittedBiometrics) -> bytes:
    parts = [tlv(1, bytes((idx,)) + t) for idx, t in b.fingerprints]
    parts += [tlv(2, bytes((idx,)) + t) for idx, t in b.irises]
    if b.photo_digest is not None:
        parts.append(tlv(3, b.photo_digest))
    return b"".join(parts)


def _enc_pid_fields(p: PidBlock) -> bytes:
    parts = [tlv(1, serialize(p.aadhaar))]
    if p.submitted_demographics is not None:
        parts.append(tlv(2, serialize(p.submitted_demographics)))
    if p.submitted_biometrics is not None:
        parts.append(tlv(3, serialize(p.submitted_biometrics)))
    if p.otp is not None:
        parts.append(tlv(4, p.otp.encode("utf-8")))
    parts.append(tlv(5, _bool(p.liveness_attested)))
    parts.append(tlv(6, p.nonce))
    parts.append(tlv(7, _u64(p.timestamp)))
    return b"".join(parts)


def _enc_signature_fields(s: Signature) -> bytes:
    return tlv(1, s.signer_key_id.encode("utf-8")) + tlv(2, s.bytes)


def _enc_response_body_fields(status: AuthStatus, transaction_id: bytes, responder: str) -> bytes:
    return b"".join(
        (
            tlv(1, serialize(status)),
            tlv(2, transaction_id),
            tlv(3, responder.encode("utf-8")),
        )
    )


def _enc_envelope_base_fields(ciphertext: bytes, origin_portal: str) -> bytes:
    return tlv(1, ciphertext) + tlv(2, origin_portal.encode("utf-8"))


def auth_response_signing_bytes(status: AuthStatus, transaction_id: bytes, responder: str) -> bytes:
    """The exact bytes an AuthResponse signature covers."""
    return tlv(TAG_AUTH_RESPONSE, _enc_response_body_fields(status, transaction_id, responder))


def envelope_signing_base(ciphertext: bytes, origin_portal: str) -> bytes:
    """The bytes the portal signs; relay signatures chain over this plus
    the serialized signatures that precede them."""
    return tlv(TAG_SECURE_ENVELOPE, _enc_envelope_base_fields(ciphertext, origin_portal))


def serialize(value: object) -> bytes:
    """Canonical byte encoding of any domain value. Injective per type."""
    if isinstance(value, AuthStatus):
        return tlv(TAG_AUTH_STATUS, value.value.encode("utf-8"))
    if isinstance(value, AadhaarNumber):
        return tlv(TAG_AADHAAR, value.digits.encode("ascii"))
    if isinstance(value, ZoneId):
        return tlv(TAG_ZONE_ID, _u64(value.id))
    if isinstance(value, DemographicData):
        return tlv(TAG_DEMOGRAPHICS, _enc_demographics_fields(value))
    if isinstance(value, PartialDemographics):
        return tlv(TAG_PARTIAL_DEMOGRAPHICS, _enc_partial_demographics_fields(value))
    if isinstance(value, BiometricData):
        return tlv(TAG_BIOMETRICS, _enc_biometrics_fields(value))
    if isinstance(value, SubmittedBiometrics):
        return tlv(TAG_SUBMITTED_BIOMETRICS, _enc_submitted_biometrics_fields(value))
    if isinstance(value, EnrollmentRecord):
        body = b"".join(
            (
                tlv(1, serialize(value.aadhaar)),
                tlv(2, serialize(value.demographics)),
                tlv(3, serialize(value.biometrics)),
                tlv(4, serialize(value.home_zone)),
            )
        )
        return tlv(TAG_ENROLLMENT_RECORD, body)
    if isinstance(value, PidBlock):
        return tlv(TAG_PID_BLOCK, _enc_pid_fields(value))
    if isinstance(value, Signature):
        return tlv(TAG_SIGNATURE, _enc_signature_fields(value))
    if isinstance(value, AuthResponse):
        body = _enc_response_body_fields(value.status, value.transaction_id, value.responder)
        body += tlv(4, serialize(value.signature))
        return tlv(TAG_AUTH_RESPONSE, body)
    if isinstance(value, SecureEnvelope):
        body = _enc_envelope_base_fields(value.ciphertext, value.origin_portal)
        body += b"".join(tlv(3, serialize(s)) for s in value.signatures)
        return tlv(TAG_SECURE_ENVELOPE, body)
    raise SerializeError(f"no canonical encoding for {type(value).__name__}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def read_header(buf: bytes, offset: int) -> tuple[int, int, int]:
    """Read one TLV header; returns (tag, value_start, value_end)."""
    if offset + _HEADER_LEN > len(buf):
        raise ParseError(offset, "truncated TLV header")
    tag = buf[offset]
    length = int.from_bytes(buf[offset + 1 : offset + 5], "big")
    start = offset + _HEADER_LEN
    end = start + length
    if end > len(buf):
        raise ParseError(offset + 1, "declared length exceeds available bytes")
    return tag, start, end


def read_fields(
    buf: bytes, start: int, end: int, allowed: tuple[int, ...]
) -> list[tuple[int, int, int]]:
    """Walk the field TLVs of a struct body, enforcing tag order and bounds.

    Returns [(tag, value_start, value_end), ...] in input order.
    """
    fields = []
    pos = start
    last_tag = 0
    while pos < end:
        tag, vstart, vend = read_header(buf, pos)
        if tag not in allowed:
            raise ParseError(pos, f"unknown field tag 0x{tag:02x}")
        if tag < last_tag:
            raise ParseError(pos, f"field tag 0x{tag:02x} out of order")
        fields.append((tag, vstart, vend))
        last_tag = tag
        pos = vend
    return fields


class _Fields:
    """Accessors over a parsed field list with required/optional semantics."""

    def __init__(self, buf: bytes, fields: list[tuple[int, int, int]], struct_offset: int) -> None:
        self.buf = buf
        self.fields = fields
        self.struct_offset = struct_offset

    def spans(self, tag: int) -> list[tuple[int, int]]:
        return [(s, e) for t, s, e in self.fields if t == tag]

    def one(self, tag: int) -> tuple[int, int]:
        spans = self.spans(tag)
        if not spans:
            raise ParseError(self.struct_offset, f"missing required field 0x{tag:02x}")
        if len(spans) > 1:
            raise ParseError(spans[1][0], f"field 0x{tag:02x} repeated")
        return spans[0]

    def maybe(self, tag: int) -> tuple[int, int] | None:
        spans = self.spans(tag)
        if len(spans) > 1:
            raise ParseError(spans[1][0], f"field 0x{tag:02x} repeated")
        return spans[0] if spans else None


def _dec_str(buf: bytes, start: int, end: int) -> str:
    try:
        return buf[start:end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(start, f"invalid UTF-8: {exc.reason}") from None


def _dec_date(buf: bytes, start: int, end: int) -> date:
    text = _dec_str(buf, start, end)
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise ParseError(start, f"not an ISO-8601 date: {text!r}") from None


def _dec_u64(buf: bytes, start: int, end: int) -> int:
    if end - start != 8:
        raise ParseError(start, "integer field must be 8 bytes")
    return int.from_bytes(buf[start:end], "big")


def _dec_bool(buf: bytes, start: int, end: int) -> bool:
    if end - start != 1 or buf[start] > 1:
        raise ParseError(start, "boolean field must be a single 0/1 byte")
    return buf[start] == 1


def _dec_fixed(buf: bytes, start: int, end: int, n: int, what: str) -> bytes:
    if end - start != n:
        raise ParseError(start, f"{what} must be exactly {n} bytes")
    return buf[start:end]


def _checked(ctor: Callable, offset: int, *args, **kwargs):
    try:
        return ctor(*args, **kwargs)
    except InvariantError as exc:
        raise ParseError(offset, str(exc)) from None


def _parse_auth_status(buf: bytes, start: int, end: int) -> AuthStatus:
    text = _dec_str(buf, start, end)
    for status in AuthStatus:
        if status.value == text:
            return status
    raise ParseError(start, f"unknown status string {text!r}")


def _parse_demographics(buf: bytes, start: int, end: int) -> DemographicData:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3, 4, 5)), start)
    return _checked(
        DemographicData,
        start,
        name=_dec_str(buf, *f.one(1)),
        address=_dec_str(buf, *f.one(2)),
        date_of_birth=_dec_date(buf, *f.one(3)),
        phone=_dec_str(buf, *f.one(4)),
        email=_dec_str(buf, *f.one(5)),
    )


def _parse_partial_demographics(buf: bytes, start: int, end: int) -> PartialDemographics:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3, 4, 5)), start)
    name = f.maybe(1)
    address = f.maybe(2)
    dob = f.maybe(3)
    phone = f.maybe(4)
    email = f.maybe(5)
    return _checked(
        PartialDemographics,
        start,
        name=_dec_str(buf, *name) if name else None,
        address=_dec_str(buf, *address) if address else None,
        date_of_birth=_dec_date(buf, *dob) if dob else None,
        phone=_dec_str(buf, *phone) if phone else None,
        email=_dec_str(buf, *email) if email else None,
    )


def _parse_biometrics(buf: bytes, start: int, end: int) -> BiometricData:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3)), start)
    fingers = tuple(buf[s:e] for s, e in f.spans(1))
    irises = tuple(buf[s:e] for s, e in f.spans(2))
    photo_span = f.one(3)
    return _checked(
        BiometricData,
        start,
        fingerprint_templates=fingers,
        iris_templates=irises,
        photo_digest=buf[photo_span[0] : photo_span[1]],
    )


def _dec_indexed_item(buf: bytes, start: int, end: int, kind: str) -> tuple[int, bytes]:
    if end - start < 2:
        raise ParseError(start, f"{kind} item needs an index byte and a template")
    return buf[start], buf[start + 1 : end]


def _parse_submitted_biometrics(buf: bytes, start: int, end: int) -> SubmittedBiometrics:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3)), start)
    fingers = tuple(_dec_indexed_item(buf, s, e, "fingerprint") for s, e in f.spans(1))
    irises = tuple(_dec_indexed_item(buf, s, e, "iris") for s, e in f.spans(2))
    photo_span = f.maybe(3)
    return _checked(
        SubmittedBiometrics,
        start,
        fingerprints=fingers,
        irises=irises,
        photo_digest=buf[photo_span[0] : photo_span[1]] if photo_span else None,
    )


def _parse_nested(buf: bytes, start: int, end: int, expected_tag: int):
    tag, vstart, vend = read_header(buf, start)
    if tag != expected_tag:
        raise ParseError(start, f"expected nested tag 0x{expected_tag:02x}, got 0x{tag:02x}")
    if vend != end:
        raise ParseError(vend, "trailing bytes after nested value")
    return _parse_value(buf, tag, vstart, vend)


def _parse_enrollment_record(buf: bytes, start: int, end: int) -> EnrollmentRecord:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3, 4)), start)
    return _checked(
        EnrollmentRecord,
        start,
        aadhaar=_parse_nested(buf, *f.one(1), TAG_AADHAAR),
        demographics=_parse_nested(buf, *f.one(2), TAG_DEMOGRAPHICS),
        biometrics=_parse_nested(buf, *f.one(3), TAG_BIOMETRICS),
        home_zone=_parse_nested(buf, *f.one(4), TAG_ZONE_ID),
    )


def _parse_pid_block(buf: bytes, start: int, end: int) -> PidBlock:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3, 4, 5, 6, 7)), start)
    demo_span = f.maybe(2)
    bio_span = f.maybe(3)
    otp_span = f.maybe(4)
    return _checked(
        PidBlock,
        start,
        aadhaar=_parse_nested(buf, *f.one(1), TAG_AADHAAR),
        submitted_demographics=(
            _parse_nested(buf, *demo_span, TAG_PARTIAL_DEMOGRAPHICS) if demo_span else None
        ),
        submitted_biometrics=(
            _parse_nested(buf, *bio_span, TAG_SUBMITTED_BIOMETRICS) if bio_span else None
        ),
        otp=_dec_str(buf, *otp_span) if otp_span else None,
        liveness_attested=_dec_bool(buf, *f.one(5)),
        nonce=_dec_fixed(buf, *f.one(6), 16, "nonce"),
        timestamp=_dec_u64(buf, *f.one(7)),
    )


def _parse_signature(buf: bytes, start: int, end: int) -> Signature:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2)), start)
    sig_span = f.one(2)
    if sig_span[1] == sig_span[0]:
        raise ParseError(sig_span[0], "signature bytes must be non-empty")
    return Signature(
        signer_key_id=_dec_str(buf, *f.one(1)),
        bytes=buf[sig_span[0] : sig_span[1]],
    )


def _parse_auth_response(buf: bytes, start: int, end: int) -> AuthResponse:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3, 4)), start)
    return _checked(
        AuthResponse,
        start,
        status=_parse_nested(buf, *f.one(1), TAG_AUTH_STATUS),
        transaction_id=_dec_fixed(buf, *f.one(2), 16, "transaction id"),
        responder=_dec_str(buf, *f.one(3)),
        signature=_parse_nested(buf, *f.one(4), TAG_SIGNATURE),
    )


def _parse_secure_envelope(buf: bytes, start: int, end: int) -> SecureEnvelope:
    f = _Fields(buf, read_fields(buf, start, end, (1, 2, 3)), start)
    ct_span = f.one(1)
    sig_spans = f.spans(3)
    if not sig_spans:
        raise ParseError(start, "envelope must carry at least one signature")
    return SecureEnvelope(
        ciphertext=buf[ct_span[0] : ct_span[1]],
        origin_portal=_dec_str(buf, *f.one(2)),
        signatures=tuple(_parse_nested(buf, s, e, TAG_SIGNATURE) for s, e in sig_spans),
    )


def _parse_aadhaar(buf: bytes, start: int, end: int) -> AadhaarNumber:
    return _checked(AadhaarNumber, start, _dec_str(buf, start, end))


def _parse_zone_id(buf: bytes, start: int, end: int) -> ZoneId:
    return _checked(ZoneId, start, _dec_u64(buf, start, end))


_PARSERS: dict[int, Callable] = {
    TAG_AUTH_STATUS: _parse_auth_status,
    TAG_AADHAAR: _parse_aadhaar,
    TAG_ZONE_ID: _parse_zone_id,
    TAG_DEMOGRAPHICS: _parse_demographics,
    TAG_PARTIAL_DEMOGRAPHICS: _parse_partial_demographics,
    TAG_BIOMETRICS: _parse_biometrics,
    TAG_SUBMITTED_BIOMETRICS: _parse_submitted_biometrics,
    TAG_ENROLLMENT_RECORD: _parse_enrollment_record,
    TAG_PID_BLOCK: _parse_pid_block,
    TAG_SIGNATURE: _parse_signature,
    TAG_AUTH_RESPONSE: _parse_auth_response,
    TAG_SECURE_ENVELOPE: _parse_secure_envelope,
}

_TYPE_TAGS = {
    AuthStatus: TAG_AUTH_STATUS,
    AadhaarNumber: TAG_AADHAAR,
    ZoneId: TAG_ZONE_ID,
    DemographicData: TAG_DEMOGRAPHICS,
    PartialDemographics: TAG_PARTIAL_DEMOGRAPHICS,
    BiometricData: TAG_BIOMETRICS,
    SubmittedBiometrics: TAG_SUBMITTED_BIOMETRICS,
    EnrollmentRecord: TAG_ENROLLMENT_RECORD,
    PidBlock: TAG_PID_BLOCK,
    Signature: TAG_SIGNATURE,
    AuthResponse: TAG_AUTH_RESPONSE,
    SecureEnvelope: TAG_SECURE_ENVELOPE,
}


def _parse_value(buf: bytes, tag: int, start: int, end: int):
    parser = _PARSERS.get(tag)
    if parser is None:
        raise ParseError(start - _HEADER_LEN, f"unknown type tag 0x{tag:02x}")
    return parser(buf, start, end)


def parse(data: bytes, expected_type: type | None = None):
    """Inverse of :func:`serialize`. Rejects anything non-canonical."""
    if not data:
        raise ParseError(0, "empty input")
    tag, start, end = read_header(data, 0)
    if end != len(data):
        raise ParseError(end, "trailing bytes after value")
    if expected_type is not None:
        want = _TYPE_TAGS.get(expected_type)
        if want is None:
            raise SerializeError(f"{expected_type.__name__} has no canonical encoding")
        if tag != want:
            raise ParseError(0, f"expected tag 0x{want:02x}, got 0x{tag:02x}")
    return _parse_value(data, tag, start, end)
