"""The zonal-office node: local store, TTL cache, and the authentication
algorithm with its exact branch structure.

Verdict rules, in evaluation order:

* bad signature chain, undecryptable envelope, malformed PID, replayed
  nonce, or missing liveness attestation -> "Authentication Unsuccessful"
  (the internal cause goes to the node log only, never to the service
  provider);
* record found in the persistent store or fresh in the cache -> compare,
  then "Authentication Successful" / "Authentication Unsuccessful";
* otherwise suspend the transaction and fetch from the central registry:
  record received -> cache it (cache only, never the store), compare,
  respond as above; registry says not found ->
  "Invalid Aadhaar Number. Please try Again...".

Authentication never writes the persistent store; only signed dual-write
deliveries from the central registry do.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

from . import codec, crypto, messages, names
from .crypto import KeyPair, SecureEnvelope
from .domain import AadhaarNumber, AuthResponse, AuthStatus, EnrollmentRecord, PidBlock, ZoneId
from .netsim import NodeContext

logger = logging.getLogger(__name__)

CODE_OK = "OK"
CODE_MATCH_FAIL = "MATCH_FAIL"
CODE_SIG_FAIL = "SIG_FAIL"
CODE_DECRYPT_FAIL = "DECRYPT_FAIL"
CODE_PARSE_FAIL = "PARSE_FAIL"
CODE_REPLAY = "REPLAY"
CODE_LIVENESS = "LIVENESS"
CODE_TIMEOUT = "TIMEOUT"
CODE_NOT_FOUND = "NOT_FOUND"


def compare_pid(
    record: EnrollmentRecord, pid: PidBlock, expected_otp: str | None = None
) -> bool:
    """True iff every submitted attribute byte-equals the stored one, the
    OTP (when submitted) equals the scenario-issued OTP for this
    transaction, and liveness is attested."""
    if record.aadhaar != pid.aadhaar:
        return False
    if not pid.liveness_attested:
        return False
    if pid.submitted_demographics is not None and not pid.submitted_demographics.matches(
        record.demographics
    ):
        return False
    if pid.submitted_biometrics is not None and not pid.submitted_biometrics.matches(
        record.biometrics
    ):
        return False
    if pid.otp is not None and pid.otp != expected_otp:
        return False
    return True


def verify_envelope_chain(
    envelope: SecureEnvelope, directory: dict[str, bytes]
) -> tuple[bool, str]:
    """Check the portal-then-relay signature chain over the envelope base.

    Each relay signature covers the base plus every signature before it.
    Requires exactly the two signatures of the relay path: origin portal
    (or legacy requesting entity) first, relay second.
    """
    if len(envelope.signatures) != 2:
        return False, CODE_SIG_FAIL
    base = codec.envelope_signing_base(envelope.ciphertext, envelope.origin_portal)
    covered = base
    for expected_signer, sig in zip(
        (envelope.origin_portal, names.ASA), envelope.signatures
    ):
        key = directory.get(sig.signer_key_id)
        if sig.signer_key_id != expected_signer or key is None:
            return False, CODE_SIG_FAIL
        if not crypto.verify(key, covered, sig):
            return False, CODE_SIG_FAIL
        covered = covered + codec.serialize(sig)
    return True, CODE_OK


def build_auth_response(
    keypair: KeyPair, responder: str, transaction_id: bytes, status: AuthStatus
) -> AuthResponse:
    signing_bytes = codec.auth_response_signing_bytes(status, transaction_id, responder)
    return AuthResponse(
        status=status,
        transaction_id=transaction_id,
        responder=responder,
        signature=crypto.sign(keypair, signing_bytes),
    )


@dataclass
class PendingAuth:
    """Authentication suspended on a registry fetch."""

    pid: PidBlock
    session_id: bytes
    sp_id: str
    issued_at: int


class ZonalOffice:
    def __init__(
        self,
        zone: ZoneId,
        keypair: KeyPair,
        directory: dict[str, bytes],
        cache_ttl_ms: int = 300_000,
        fetch_timeout_ms: int = 30_000,
        otp_lookup: Callable[[bytes], str | None] = lambda _txid: None,
    ) -> None:
        self.zone = zone
        self.name = names.zone(zone.id)
        self.keypair = keypair
        self.directory = directory
        self.cache_ttl_ms = cache_ttl_ms
        self.fetch_timeout_ms = fetch_timeout_ms
        self.otp_lookup = otp_lookup
        self.store: dict[AadhaarNumber, EnrollmentRecord] = {}
        self.cache: dict[AadhaarNumber, tuple[EnrollmentRecord, int]] = {}
        self.seen_nonces: set[bytes] = set()
        self.pending: dict[bytes, PendingAuth] = {}
        self.node_log: list[str] = []
        self._sweep_armed = False

    # ------------------------------------------------------------------
    # Message dispatch
    # ------------------------------------------------------------------

    def receive(self, ctx: NodeContext, msg: messages.Message) -> None:
        self.evict_cache(ctx.now)
        if isinstance(msg, messages.AuthRequest):
            self.handle_auth_package(ctx, msg)
        elif isinstance(msg, messages.FetchResponse):
            self._resume_from_fetch(ctx, msg)
        elif isinstance(msg, messages.DualWrite):
            self.accept_dual_write(ctx, msg)
        elif isinstance(msg, messages.FetchTimeout):
            self._expire_pending(ctx, msg.transaction_id)
        elif isinstance(msg, messages.CacheSweep):
            self._sweep(ctx)
        else:
            self._log(ctx.now, b"", "unexpected", messages.type_name(msg))

    def handle_auth_package(self, ctx: NodeContext, req: messages.AuthRequest) -> None:
        ok, code = verify_envelope_chain(req.envelope, self.directory)
        if not ok:
            self._respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                          AuthStatus.FAILURE, "precheck", code)
            return
        try:
            pid_bytes = crypto.decrypt(self.keypair, req.envelope.ciphertext)
        except crypto.DecryptAuthError:
            self._respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                          AuthStatus.FAILURE, "precheck", CODE_DECRYPT_FAIL)
            return
        try:
            pid = codec.parse(pid_bytes, PidBlock)
        except codec.ParseError:
            self._respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                          AuthStatus.FAILURE, "precheck", CODE_PARSE_FAIL)
            return
        if pid.nonce in self.seen_nonces:
            self._respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                          AuthStatus.FAILURE, "precheck", CODE_REPLAY)
            return
        self.seen_nonces.add(pid.nonce)
        if not pid.liveness_attested:
            self._respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                          AuthStatus.FAILURE, "precheck", CODE_LIVENESS)
            return

        record = self.store.get(pid.aadhaar)
        if record is not None:
            ctx.metrics.zonal_local_hits += 1
            self._compare_and_respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                                      record, pid, "store_hit")
            return
        cached = self.cache.get(pid.aadhaar)
        if cached is not None:
            ctx.metrics.zonal_cache_hits += 1
            self._compare_and_respond(ctx, req.transaction_id, req.session_id, req.sp_id,
                                      cached[0], pid, "cache_hit")
            return

        # Suspend and ask the central registry for the record.
        self.pending[req.transaction_id] = PendingAuth(
            pid=pid, session_id=req.session_id, sp_id=req.sp_id, issued_at=ctx.now
        )
        signed = messages.fetch_request_signing_bytes(req.transaction_id, self.zone, pid.aadhaar)
        ctx.send(
            names.CIDR,
            messages.FetchRequest(
                transaction_id=req.transaction_id,
                requester_zone=self.zone,
                aadhaar=pid.aadhaar,
                signature=crypto.sign(self.keypair, signed),
            ),
        )
        ctx.schedule_self(self.fetch_timeout_ms, messages.FetchTimeout(req.transaction_id))
        self._log(ctx.now, req.transaction_id, "fetch_issued", CODE_OK)

    def _resume_from_fetch(self, ctx: NodeContext, msg: messages.FetchResponse) -> None:
        pending = self.pending.pop(msg.transaction_id, None)
        if pending is None:
            self._log(ctx.now, msg.transaction_id, "stale_fetch_response", CODE_OK)
            return
        cidr_key = self.directory.get(names.CIDR)
        body = messages.fetch_response_signing_bytes(msg.transaction_id, msg.found, msg.payload)
        if (
            cidr_key is None
            or msg.signature.signer_key_id != names.CIDR
            or not crypto.verify(cidr_key, body, msg.signature)
        ):
            self._respond(ctx, msg.transaction_id, pending.session_id, pending.sp_id,
                          AuthStatus.FAILURE, "fetch_result", CODE_SIG_FAIL)
            return
        if not msg.found:
            self._respond(ctx, msg.transaction_id, pending.session_id, pending.sp_id,
                          AuthStatus.INVALID, "not_found", CODE_NOT_FOUND)
            return
        try:
            record_bytes = crypto.decrypt(self.keypair, msg.payload)
            record = codec.parse(record_bytes, EnrollmentRecord)
        except (crypto.DecryptAuthError, codec.ParseError):
            self._respond(ctx, msg.transaction_id, pending.session_id, pending.sp_id,
                          AuthStatus.FAILURE, "fetch_result", CODE_DECRYPT_FAIL)
            return
        if record.aadhaar != pending.pid.aadhaar:
            self._respond(ctx, msg.transaction_id, pending.session_id, pending.sp_id,
                          AuthStatus.FAILURE, "fetch_result", CODE_PARSE_FAIL)
            return
        # Cache only; the persistent store is reserved for this zone's
        # own residents delivered via dual-write.
        if record.aadhaar not in self.store:
            self.cache[record.aadhaar] = (record, ctx.now)
            self._arm_sweep(ctx)
        self._compare_and_respond(ctx, msg.transaction_id, pending.session_id, pending.sp_id,
                                  record, pending.pid, "fetch_hit")

    def _expire_pending(self, ctx: NodeContext, transaction_id: bytes) -> None:
        pending = self.pending.pop(transaction_id, None)
        if pending is None:
            return
        self._respond(ctx, transaction_id, pending.session_id, pending.sp_id,
                      AuthStatus.FAILURE, "timeout", CODE_TIMEOUT)

    def accept_dual_write(self, ctx: NodeContext, msg: messages.DualWrite) -> None:
        cidr_key = self.directory.get(names.CIDR)
        if (
            cidr_key is None
            or msg.signature.signer_key_id != names.CIDR
            or not crypto.verify(cidr_key, msg.record_bytes, msg.signature)
        ):
            self._log(ctx.now, b"", "dual_write_reject", CODE_SIG_FAIL)
            return
        try:
            record = codec.parse(msg.record_bytes, EnrollmentRecord)
        except codec.ParseError:
            self._log(ctx.now, b"", "dual_write_reject", CODE_PARSE_FAIL)
            return
        if record.home_zone != self.zone:
            # Routing bug: surface it loudly instead of silently storing.
            self._log(ctx.now, b"", "dual_write_reject", f"wrong_zone:{record.home_zone.id}")
            ctx.send(names.CIDR, messages.DualWriteAck(record.aadhaar, self.zone, accepted=False))
            return
        self.store.setdefault(record.aadhaar, record)
        self.cache.pop(record.aadhaar, None)  # store and cache stay disjoint
        ctx.send(names.CIDR, messages.DualWriteAck(record.aadhaar, self.zone, accepted=True))

    # ------------------------------------------------------------------
    # Cache maintenance
    # ------------------------------------------------------------------

    def evict_cache(self, now: int) -> int:
        """Drop every cache entry strictly older than the TTL."""
        stale = [k for k, (_, inserted_at) in self.cache.items()
                 if now - inserted_at > self.cache_ttl_ms]
        for key in stale:
            del self.cache[key]
        return len(stale)

    def _arm_sweep(self, ctx: NodeContext) -> None:
        if not self._sweep_armed and self.cache_ttl_ms > 0:
            ctx.schedule_self(self.cache_ttl_ms + 1, messages.CacheSweep())
            self._sweep_armed = True

    def _sweep(self, ctx: NodeContext) -> None:
        self._sweep_armed = False
        evicted = self.evict_cache(ctx.now)
        self._log(ctx.now, b"", "sweep", f"evicted:{evicted}")
        if self.cache:
            self._arm_sweep(ctx)

    # ------------------------------------------------------------------
    # Responses and logging
    # ------------------------------------------------------------------

    def _compare_and_respond(
        self,
        ctx: NodeContext,
        transaction_id: bytes,
        session_id: bytes,
        sp_id: str,
        record: EnrollmentRecord,
        pid: PidBlock,
        branch: str,
    ) -> None:
        if compare_pid(record, pid, self.otp_lookup(transaction_id)):
            self._respond(ctx, transaction_id, session_id, sp_id,
                          AuthStatus.SUCCESS, branch, CODE_OK)
        else:
            self._respond(ctx, transaction_id, session_id, sp_id,
                          AuthStatus.FAILURE, branch, CODE_MATCH_FAIL)

    def _respond(
        self,
        ctx: NodeContext,
        transaction_id: bytes,
        session_id: bytes,
        sp_id: str,
        status: AuthStatus,
        branch: str,
        code: str,
    ) -> None:
        response = build_auth_response(self.keypair, self.name, transaction_id, status)
        ctx.send(names.ASA, messages.AuthResult(session_id, sp_id, response))
        self._log(ctx.now, transaction_id, branch, code)

    def _log(self, now: int, transaction_id: bytes, branch: str, code: str) -> None:
        txid = transaction_id.hex() if transaction_id else "-"
        self.node_log.append(f"{now} {txid} {branch} {code}")
