"""Protocol messages exchanged between simulation parties.

Each message has its own TLV type tag in the 0x20 range and reuses the
primitive encodings from ``zonalsim.codec``. Signed messages (fetch
request/response) are signed over their canonical encoding with the
signature field omitted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from . import codec
from .codec import ParseError, read_fields, read_header, tlv
from .crypto import SecureEnvelope, Signature
from .domain import AadhaarNumber, AuthResponse, ZoneId

TAG_AUTH_REQUEST = 0x20
TAG_AUTH_RESULT = 0x21
TAG_FETCH_REQUEST = 0x22
TAG_FETCH_RESPONSE = 0x23
TAG_DUAL_WRITE = 0x24
TAG_DUAL_WRITE_ACK = 0x25
TAG_FETCH_TIMEOUT = 0x26
TAG_CACHE_SWEEP = 0x27


@dataclass(frozen=True)
class AuthRequest:
    """Envelope in flight: portal (or legacy client) -> ASA -> authenticator."""

    transaction_id: bytes
    session_id: bytes
    sp_id: str
    target: str
    envelope: SecureEnvelope


@dataclass(frozen=True)
class AuthResult:
    """Signed verdict on its way back: authenticator -> ASA -> service provider."""

    session_id: bytes
    sp_id: str
    response: AuthResponse


@dataclass(frozen=True)
class FetchRequest:
    """Zonal office asks the central registry for one record by number."""

    transaction_id: bytes
    requester_zone: ZoneId
    aadhaar: AadhaarNumber
    signature: Signature


@dataclass(frozen=True)
class FetchResponse:
    """Registry reply: the record encrypted to the requesting zone, or not-found."""

    transaction_id: bytes
    found: bool
    payload: bytes  # encrypted EnrollmentRecord TLV; empty when not found
    signature: Signature


@dataclass(frozen=True)
class DualWrite:
    """Enrollment copy pushed from the central registry to the home zone."""

    record_bytes: bytes  # canonical EnrollmentRecord TLV
    signature: Signature


@dataclass(frozen=True)
class DualWriteAck:
    aadhaar: AadhaarNumber
    zone: ZoneId
    accepted: bool


@dataclass(frozen=True)
class FetchTimeout:
    """Self-timer: give up on a pending registry fetch."""

    transaction_id: bytes


@dataclass(frozen=True)
class CacheSweep:
    """Self-timer: evict expired cache entries."""


Message = (
    AuthRequest
    | AuthResult
    | FetchRequest
    | FetchResponse
    | DualWrite
    | DualWriteAck
    | FetchTimeout
    | CacheSweep
)

_TYPE_NAMES = {
    AuthRequest: "auth_request",
    AuthResult: "auth_result",
    FetchRequest: "fetch_request",
    FetchResponse: "fetch_response",
    DualWrite: "dual_write",
    DualWriteAck: "dual_write_ack",
    FetchTimeout: "fetch_timeout",
    CacheSweep: "cache_sweep",
}


def type_name(msg: Message) -> str:
    return _TYPE_NAMES[type(msg)]


def transaction_id_of(msg: Message) -> bytes | None:
    if isinstance(msg, (AuthRequest, FetchRequest, FetchResponse, FetchTimeout)):
        return msg.transaction_id
    if isinstance(msg, AuthResult):
        return msg.response.transaction_id
    return None


def fetch_request_signing_bytes(transaction_id: bytes, requester_zone: ZoneId, aadhaar: AadhaarNumber) -> bytes:
    body = (
        tlv(1, transaction_id)
        + tlv(2, codec.serialize(requester_zone))
        + tlv(3, codec.serialize(aadhaar))
    )
    return tlv(TAG_FETCH_REQUEST, body)


def fetch_response_signing_bytes(transaction_id: bytes, found: bool, payload: bytes) -> bytes:
    body = tlv(1, transaction_id) + tlv(2, b"\x01" if found else b"\x00") + tlv(3, payload)
    return tlv(TAG_FETCH_RESPONSE, body)


def encode(msg: Message) -> bytes:
    if isinstance(msg, AuthRequest):
        body = (
            tlv(1, msg.transaction_id)
            + tlv(2, msg.session_id)
            + tlv(3, msg.sp_id.encode("utf-8"))
            + tlv(4, msg.target.encode("utf-8"))
            + tlv(5, codec.serialize(msg.envelope))
        )
        return tlv(TAG_AUTH_REQUEST, body)
    if isinstance(msg, AuthResult):
        body = (
            tlv(1, msg.session_id)
            + tlv(2, msg.sp_id.encode("utf-8"))
            + tlv(3, codec.serialize(msg.response))
        )
        return tlv(TAG_AUTH_RESULT, body)
    if isinstance(msg, FetchRequest):
        body = (
            tlv(1, msg.transaction_id)
            + tlv(2, codec.serialize(msg.requester_zone))
            + tlv(3, codec.serialize(msg.aadhaar))
            + tlv(4, codec.serialize(msg.signature))
        )
        return tlv(TAG_FETCH_REQUEST, body)
    if isinstance(msg, FetchResponse):
        body = (
            tlv(1, msg.transaction_id)
            + tlv(2, b"\x01" if msg.found else b"\x00")
            + tlv(3, msg.payload)
            + tlv(4, codec.serialize(msg.signature))
        )
        return tlv(TAG_FETCH_RESPONSE, body)
    if isinstance(msg, DualWrite):
        return tlv(TAG_DUAL_WRITE, tlv(1, msg.record_bytes) + tlv(2, codec.serialize(msg.signature)))
    if isinstance(msg, DualWriteAck):
        body = (
            tlv(1, codec.serialize(msg.aadhaar))
            + tlv(2, codec.serialize(msg.zone))
            + tlv(3, b"\x01" if msg.accepted else b"\x00")
        )
        return tlv(TAG_DUAL_WRITE_ACK, body)
    if isinstance(msg, FetchTimeout):
        return tlv(TAG_FETCH_TIMEOUT, tlv(1, msg.transaction_id))
    if isinstance(msg, CacheSweep):
        return tlv(TAG_CACHE_SWEEP, b"")
    raise codec.SerializeError(f"not a protocol message: {type(msg).__name__}")


def _fields(buf: bytes, start: int, end: int, allowed: tuple[int, ...]) -> codec._Fields:
    return codec._Fields(buf, read_fields(buf, start, end, allowed), start)


def _txid(buf: bytes, span: tuple[int, int]) -> bytes:
    if span[1] - span[0] != 16:
        raise ParseError(span[0], "transaction id must be exactly 16 bytes")
    return buf[span[0] : span[1]]


def _dec_bool(buf: bytes, span: tuple[int, int]) -> bool:
    if span[1] - span[0] != 1 or buf[span[0]] > 1:
        raise ParseError(span[0], "boolean field must be a single 0/1 byte")
    return buf[span[0]] == 1


def _nested(buf: bytes, span: tuple[int, int], expected_type: type):
    return codec.parse(buf[span[0] : span[1]], expected_type)


def _dec_auth_request(buf: bytes, start: int, end: int) -> AuthRequest:
    f = _fields(buf, start, end, (1, 2, 3, 4, 5))
    return AuthRequest(
        transaction_id=_txid(buf, f.one(1)),
        session_id=_txid(buf, f.one(2)),
        sp_id=codec._dec_str(buf, *f.one(3)),
        target=codec._dec_str(buf, *f.one(4)),
        envelope=_nested(buf, f.one(5), SecureEnvelope),
    )


def _dec_auth_result(buf: bytes, start: int, end: int) -> AuthResult:
    f = _fields(buf, start, end, (1, 2, 3))
    return AuthResult(
        session_id=_txid(buf, f.one(1)),
        sp_id=codec._dec_str(buf, *f.one(2)),
        response=_nested(buf, f.one(3), AuthResponse),
    )


def _dec_fetch_request(buf: bytes, start: int, end: int) -> FetchRequest:
    f = _fields(buf, start, end, (1, 2, 3, 4))
    return FetchRequest(
        transaction_id=_txid(buf, f.one(1)),
        requester_zone=_nested(buf, f.one(2), ZoneId),
        aadhaar=_nested(buf, f.one(3), AadhaarNumber),
        signature=_nested(buf, f.one(4), Signature),
    )


def _dec_fetch_response(buf: bytes, start: int, end: int) -> FetchResponse:
    f = _fields(buf, start, end, (1, 2, 3, 4))
    payload_span = f.one(3)
    return FetchResponse(
        transaction_id=_txid(buf, f.one(1)),
        found=_dec_bool(buf, f.one(2)),
        payload=buf[payload_span[0] : payload_span[1]],
        signature=_nested(buf, f.one(4), Signature),
    )


def _dec_dual_write(buf: bytes, start: int, end: int) -> DualWrite:
    f = _fields(buf, start, end, (1, 2))
    record_span = f.one(1)
    return DualWrite(
        record_bytes=buf[record_span[0] : record_span[1]],
        signature=_nested(buf, f.one(2), Signature),
    )


def _dec_dual_write_ack(buf: bytes, start: int, end: int) -> DualWriteAck:
    f = _fields(buf, start, end, (1, 2, 3))
    return DualWriteAck(
        aadhaar=_nested(buf, f.one(1), AadhaarNumber),
        zone=_nested(buf, f.one(2), ZoneId),
        accepted=_dec_bool(buf, f.one(3)),
    )


def _dec_fetch_timeout(buf: bytes, start: int, end: int) -> FetchTimeout:
    f = _fields(buf, start, end, (1,))
    return FetchTimeout(transaction_id=_txid(buf, f.one(1)))


def _dec_cache_sweep(buf: bytes, start: int, end: int) -> CacheSweep:
    if end != start:
        raise ParseError(start, "cache sweep carries no fields")
    return CacheSweep()


_DECODERS: dict[int, Callable] = {
    TAG_AUTH_REQUEST: _dec_auth_request,
    TAG_AUTH_RESULT: _dec_auth_result,
    TAG_FETCH_REQUEST: _dec_fetch_request,
    TAG_FETCH_RESPONSE: _dec_fetch_response,
    TAG_DUAL_WRITE: _dec_dual_write,
    TAG_DUAL_WRITE_ACK: _dec_dual_write_ack,
    TAG_FETCH_TIMEOUT: _dec_fetch_timeout,
    TAG_CACHE_SWEEP: _dec_cache_sweep,
}


def decode(data: bytes) -> Message:
    if not data:
        raise ParseError(0, "empty input")
    tag, start, end = read_header(data, 0)
    if end != len(data):
        raise ParseError(end, "trailing bytes after message")
    decoder = _DECODERS.get(tag)
    if decoder is None:
        raise ParseError(0, f"unknown message tag 0x{tag:02x}")
    return decoder(data, start, end)
