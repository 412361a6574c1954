"""The Central Information Data Repository node.

System of record for all enrollments, fallback record source for zonal
offices, and the sole authenticator in baseline mode. Never emits a
record except encrypted to a registered zone in a fetch response.
"""

from __future__ import annotations

import logging
from typing import Callable

from . import codec, crypto, messages, names
from .crypto import KeyPair
from .domain import (
    AadhaarNumber,
    AuthStatus,
    BiometricData,
    DemographicData,
    EnrollmentRecord,
    PidBlock,
    derive_home_zone,
)
from .netsim import NodeContext
from .zonal import build_auth_response, compare_pid, verify_envelope_chain

logger = logging.getLogger(__name__)

# Issuance masks stay below 2**32 so counter XOR mask always fits 11 digits.
ISSUANCE_MASK_LIMIT = 1 << 32


class DuplicateEnrollmentError(ValueError):
    """The submitted biometrics already belong to an issued number."""


class CidrRegistry:
    def __init__(
        self,
        keypair: KeyPair,
        zone_count: int,
        issuance_mask: int,
        directory: dict[str, bytes],
        otp_lookup: Callable[[bytes], str | None] = lambda _txid: None,
    ) -> None:
        if not 0 <= issuance_mask < ISSUANCE_MASK_LIMIT:
            raise ValueError("issuance mask must fit in 32 bits")
        self.name = names.CIDR
        self.keypair = keypair
        self.zone_count = zone_count
        self.issuance_mask = issuance_mask
        self.directory = directory
        self.otp_lookup = otp_lookup
        self.records: dict[AadhaarNumber, EnrollmentRecord] = {}
        self.fetch_log: list[tuple[int, AadhaarNumber, int]] = []  # (zone, number, ts)
        self.audit_log: list[str] = []
        self.seen_nonces: set[bytes] = set()
        self._photo_index: set[bytes] = set()
        self._counter = 0

    @property
    def issued_count(self) -> int:
        return len(self.records)

    def enroll(
        self, ctx: NodeContext, demographics: DemographicData, biometrics: BiometricData
    ) -> tuple[AadhaarNumber, EnrollmentRecord]:
        """Issue a fresh number, store the record, and push the dual-write."""
        if biometrics.photo_digest in self._photo_index:
            raise DuplicateEnrollmentError("biometrics already enrolled")
        if self._counter >= ISSUANCE_MASK_LIMIT:
            raise ValueError("issuance counter exhausted")
        body = str(self._counter ^ self.issuance_mask).zfill(11)
        aadhaar = AadhaarNumber.from_body(body)
        home_zone = derive_home_zone(demographics, self.zone_count)
        record = EnrollmentRecord(
            aadhaar=aadhaar, demographics=demographics, biometrics=biometrics, home_zone=home_zone
        )
        self.records[aadhaar] = record
        self._photo_index.add(biometrics.photo_digest)
        self._counter += 1
        record_bytes = codec.serialize(record)
        signature = crypto.sign(self.keypair, record_bytes)
        ctx.send(names.zone(home_zone.id), messages.DualWrite(record_bytes, signature))
        return aadhaar, record

    def receive(self, ctx: NodeContext, msg: messages.Message) -> None:
        if isinstance(msg, messages.FetchRequest):
            ctx.metrics.cidr_fetch_requests += 1
            self.handle_pid_fetch(ctx, msg)
        elif isinstance(msg, messages.AuthRequest):
            ctx.metrics.cidr_auth_requests += 1
            self.baseline_authenticate(ctx, msg)
        elif isinstance(msg, messages.DualWriteAck):
            if not msg.accepted:
                self.audit_log.append(
                    f"{ctx.now} dual-write rejected by zone {msg.zone.id} for {msg.aadhaar}"
                )
        else:
            self.audit_log.append(f"{ctx.now} unexpected message {messages.type_name(msg)}")

    def handle_pid_fetch(self, ctx: NodeContext, req: messages.FetchRequest) -> None:
        requester = names.zone(req.requester_zone.id)
        zone_key = self.directory.get(requester)
        signed = messages.fetch_request_signing_bytes(
            req.transaction_id, req.requester_zone, req.aadhaar
        )
        if (
            zone_key is None
            or req.signature.signer_key_id != requester
            or not crypto.verify(zone_key, signed, req.signature)
        ):
            # Rejected fetch: log and stay silent, never leak whether the
            # number exists.
            self.audit_log.append(
                f"{ctx.now} rejected fetch for txn {req.transaction_id.hex()}: bad signature"
            )
            return
        record = self.records.get(req.aadhaar)
        if record is not None:
            self.fetch_log.append((req.requester_zone.id, req.aadhaar, ctx.now))
            payload = crypto.encrypt(
                zone_key, codec.serialize(record), ctx.draw_bytes("fetch-nonce", 16)
            )
            found = True
        else:
            payload = b""
            found = False
        body = messages.fetch_response_signing_bytes(req.transaction_id, found, payload)
        response = messages.FetchResponse(
            transaction_id=req.transaction_id,
            found=found,
            payload=payload,
            signature=crypto.sign(self.keypair, body),
        )
        ctx.send(requester, response)

    def baseline_authenticate(self, ctx: NodeContext, req: messages.AuthRequest) -> None:
        """Centralized mode: the CIDR itself runs the match rule."""
        status = self._evaluate(ctx, req)
        response = build_auth_response(self.keypair, self.name, req.transaction_id, status)
        ctx.send(names.ASA, messages.AuthResult(req.session_id, req.sp_id, response))

    def _evaluate(self, ctx: NodeContext, req: messages.AuthRequest) -> AuthStatus:
        ok, code = verify_envelope_chain(req.envelope, self.directory)
        if not ok:
            self.audit_log.append(f"{ctx.now} txn {req.transaction_id.hex()}: {code}")
            return AuthStatus.FAILURE
        try:
            pid_bytes = crypto.decrypt(self.keypair, req.envelope.ciphertext)
        except crypto.DecryptAuthError:
            self.audit_log.append(f"{ctx.now} txn {req.transaction_id.hex()}: DECRYPT_FAIL")
            return AuthStatus.FAILURE
        try:
            pid = codec.parse(pid_bytes, PidBlock)
        except codec.ParseError:
            self.audit_log.append(f"{ctx.now} txn {req.transaction_id.hex()}: PARSE_FAIL")
            return AuthStatus.FAILURE
        if pid.nonce in self.seen_nonces:
            self.audit_log.append(f"{ctx.now} txn {req.transaction_id.hex()}: REPLAY")
            return AuthStatus.FAILURE
        self.seen_nonces.add(pid.nonce)
        if not pid.liveness_attested:
            self.audit_log.append(f"{ctx.now} txn {req.transaction_id.hex()}: LIVENESS")
            return AuthStatus.FAILURE
        record = self.records.get(pid.aadhaar)
        if record is None:
            return AuthStatus.INVALID
        if compare_pid(record, pid, self.otp_lookup(req.transaction_id)):
            return AuthStatus.SUCCESS
        return AuthStatus.FAILURE
