"""The remaining protocol parties: portal gateway, relay, service provider.

The portal is operated by the zonal office; the service provider only
ever redirects the user to it and consumes the signed verdict. In
baseline (centralized) mode the service provider itself plays the legacy
requesting-entity role, which is exactly what lets colluding providers
profile users - the auditor demonstrates the contrast.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from . import codec, crypto, messages, names
from .crypto import KeyPair, SecureEnvelope
from .domain import AuthResponse, AuthStatus, PidBlock, ZoneId
from .netsim import NodeContext

logger = logging.getLogger(__name__)


class UnknownServiceProviderError(ValueError):
    """Session requested for a service provider the scenario never registered."""


@dataclass(frozen=True)
class PortalSession:
    """Binds exactly one authentication attempt."""

    session_id: bytes
    zone: ZoneId
    sp_id: str
    transaction_id: bytes


class PortalGateway:
    """Zone-operated gateway where the user submits identity data.

    The service provider hands the user off to this portal and never
    sees the PID block; encryption happens here, before any transmission.
    """

    def __init__(
        self,
        zone: ZoneId,
        keypair: KeyPair,
        directory: dict[str, bytes],
        registered_sps: set[str],
    ) -> None:
        self.zone = zone
        self.name = names.portal(zone.id)
        self.keypair = keypair
        self.directory = directory
        self.registered_sps = registered_sps
        self.sessions: dict[bytes, PortalSession] = {}

    def receive(self, ctx: NodeContext, msg: messages.Message) -> None:
        logger.debug("portal %s ignoring %s", self.name, messages.type_name(msg))

    def open_session(self, ctx: NodeContext, sp_id: str) -> PortalSession:
        if sp_id not in self.registered_sps:
            raise UnknownServiceProviderError(f"unknown service provider {sp_id!r}")
        session = PortalSession(
            session_id=ctx.draw_bytes("session-id", 16),
            zone=self.zone,
            sp_id=sp_id,
            transaction_id=ctx.draw_bytes("transaction-id", 16),
        )
        self.sessions[session.session_id] = session
        return session

    def submit(self, ctx: NodeContext, session: PortalSession, pid: PidBlock) -> None:
        """Package, encrypt, sign, and send the attempt toward the zone."""
        zone_key = self.directory[names.zone(self.zone.id)]
        ciphertext = crypto.encrypt(zone_key, codec.serialize(pid), pid.nonce)
        base = codec.envelope_signing_base(ciphertext, self.name)
        envelope = SecureEnvelope(
            ciphertext=ciphertext,
            origin_portal=self.name,
            signatures=(crypto.sign(self.keypair, base),),
        )
        ctx.send(
            names.ASA,
            messages.AuthRequest(
                transaction_id=session.transaction_id,
                session_id=session.session_id,
                sp_id=session.sp_id,
                target=names.zone(self.zone.id),
                envelope=envelope,
            ),
        )


class AsaRelay:
    """Countersigning relay between portals/providers and authenticators."""

    def __init__(self, keypair: KeyPair, directory: dict[str, bytes]) -> None:
        self.name = names.ASA
        self.keypair = keypair
        self.directory = directory
        self.forward_log: list[tuple[bytes, str]] = []
        self.drop_log: list[str] = []

    def receive(self, ctx: NodeContext, msg: messages.Message) -> None:
        if isinstance(msg, messages.AuthRequest):
            self.forward(ctx, msg)
        elif isinstance(msg, messages.AuthResult):
            ctx.send(msg.sp_id, msg)
        else:
            self.drop_log.append(f"{ctx.now} unexpected {messages.type_name(msg)}")

    def forward(self, ctx: NodeContext, req: messages.AuthRequest) -> None:
        envelope = req.envelope
        base = codec.envelope_signing_base(envelope.ciphertext, envelope.origin_portal)
        portal_sig = envelope.signatures[0]
        origin_key = self.directory.get(envelope.origin_portal)
        if (
            len(envelope.signatures) != 1
            or portal_sig.signer_key_id != envelope.origin_portal
            or origin_key is None
            or not crypto.verify(origin_key, base, portal_sig)
        ):
            self.drop_log.append(
                f"{ctx.now} dropped txn {req.transaction_id.hex()}: bad origin signature"
            )
            return
        countersigned = SecureEnvelope(
            ciphertext=envelope.ciphertext,
            origin_portal=envelope.origin_portal,
            signatures=(
                portal_sig,
                crypto.sign(self.keypair, base + codec.serialize(portal_sig)),
            ),
        )
        self.forward_log.append((req.transaction_id, req.target))
        ctx.send(
            req.target,
            messages.AuthRequest(
                transaction_id=req.transaction_id,
                session_id=req.session_id,
                sp_id=req.sp_id,
                target=req.target,
                envelope=countersigned,
            ),
        )


class ServiceProvider:
    """Verdict consumer. Its transcript is the privacy-audit surface."""

    def __init__(self, sp_id: str, keypair: KeyPair, directory: dict[str, bytes]) -> None:
        self.name = sp_id
        self.keypair = keypair
        self.directory = directory
        self.transcript: list[str] = []

    def receive(self, ctx: NodeContext, msg: messages.Message) -> None:
        if isinstance(msg, messages.AuthResult):
            self.deliver_response(ctx, msg.response, msg.session_id)
        else:
            self.transcript.append(f"- - {ctx.now} UNEXPECTED_MESSAGE")

    def note_session(self, now: int, session_id: bytes) -> None:
        """All the provider learns at hand-off time: an opaque session id."""
        self.transcript.append(f"- {session_id.hex()} {now} session-open")

    def deliver_response(self, ctx: NodeContext, response: AuthResponse, session_id: bytes) -> None:
        responder_key = self.directory.get(response.responder)
        signed = codec.auth_response_signing_bytes(
            response.status, response.transaction_id, response.responder
        )
        if responder_key is None or not crypto.verify(responder_key, signed, response.signature):
            self.transcript.append(f"- {session_id.hex()} {ctx.now} DELIVERY_FAILURE")
            return
        ctx.metrics.responses_by_status[response.status] += 1
        self.transcript.append(
            f"{response.transaction_id.hex()} {session_id.hex()} {ctx.now} {response.status.value}"
        )

    # ------------------------------------------------------------------
    # Baseline (legacy) flow: the provider is the requesting entity.
    # ------------------------------------------------------------------

    def open_legacy_session(self, ctx: NodeContext) -> tuple[bytes, bytes]:
        return ctx.draw_bytes("session-id", 16), ctx.draw_bytes("transaction-id", 16)

    def legacy_submit(
        self, ctx: NodeContext, session_id: bytes, transaction_id: bytes, pid: PidBlock
    ) -> None:
        """Legacy client application: the user hands the number to the
        provider, which records it before packaging the request."""
        self.transcript.append(
            f"{transaction_id.hex()} {session_id.hex()} {ctx.now} aadhaar={pid.aadhaar} submitted"
        )
        cidr_key = self.directory[names.CIDR]
        ciphertext = crypto.encrypt(cidr_key, codec.serialize(pid), pid.nonce)
        base = codec.envelope_signing_base(ciphertext, self.name)
        envelope = SecureEnvelope(
            ciphertext=ciphertext,
            origin_portal=self.name,
            signatures=(crypto.sign(self.keypair, base),),
        )
        ctx.send(
            names.ASA,
            messages.AuthRequest(
                transaction_id=transaction_id,
                session_id=session_id,
                sp_id=self.name,
                target=names.CIDR,
                envelope=envelope,
            ),
        )
