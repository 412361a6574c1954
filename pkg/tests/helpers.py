"""Shared test fixtures: deterministic records, envelopes, fake contexts."""

from __future__ import annotations

from datetime import date

from zonalsim import codec, crypto, names
from zonalsim.crypto import KeyPair, SecureEnvelope
from zonalsim.domain import (
    AadhaarNumber,
    BiometricData,
    DemographicData,
    EnrollmentRecord,
    PidBlock,
    SubmittedBiometrics,
    ZoneId,
)
from zonalsim.netsim import RngRegistry, RunMetrics


def make_keypair(name: str, salt: int = 0) -> KeyPair:
    seed = bytes([salt]) * 31 + bytes([len(name) % 256])
    return crypto.generate_keypair(seed, name)


def make_directory(*nodes: str) -> tuple[dict[str, bytes], dict[str, KeyPair]]:
    keypairs = {name: make_keypair(name, salt=i + 1) for i, name in enumerate(nodes)}
    return {name: kp.verification_key for name, kp in keypairs.items()}, keypairs


def make_demographics(i: int = 0, address: str | None = None) -> DemographicData:
    return DemographicData(
        name=f"Test Resident {i:04d}",
        address=address or f"H-{i}, Sector {i % 60 + 1}, District {i % 40:02d}",
        date_of_birth=date(1970, 1, 1),
        phone=f"{9_000_000_000 + i}",
        email=f"resident{i:04d}@mail.example",
    )


def make_biometrics(i: int = 0) -> BiometricData:
    return BiometricData(
        fingerprint_templates=tuple(bytes([i % 256, f]) * 16 for f in range(10)),
        iris_templates=tuple(bytes([i % 256, 100 + n]) * 32 for n in range(2)),
        photo_digest=bytes([i % 256, 200]) * 16,
    )


def make_record(i: int = 0, home_zone: int = 0) -> EnrollmentRecord:
    aadhaar = AadhaarNumber.from_body(f"{i:011d}")
    return EnrollmentRecord(
        aadhaar=aadhaar,
        demographics=make_demographics(i),
        biometrics=make_biometrics(i),
        home_zone=ZoneId(home_zone),
    )


def make_pid(
    record: EnrollmentRecord,
    nonce: bytes,
    liveness: bool = True,
    finger: int = 0,
    tamper_template: bool = False,
    otp: str | None = None,
    timestamp: int = 0,
) -> PidBlock:
    template = record.biometrics.fingerprint_templates[finger]
    if tamper_template:
        template = bytes([template[0] ^ 0x01]) + template[1:]
    return PidBlock(
        aadhaar=record.aadhaar,
        submitted_demographics=None,
        submitted_biometrics=SubmittedBiometrics(fingerprints=((finger, template),)),
        otp=otp,
        liveness_attested=liveness,
        nonce=nonce,
        timestamp=timestamp,
    )


def make_envelope(
    pid: PidBlock,
    recipient_vk: bytes,
    portal_kp: KeyPair,
    asa_kp: KeyPair | None,
    origin: str | None = None,
) -> SecureEnvelope:
    """Portal-signed (and optionally relay-countersigned) envelope."""
    origin = origin or portal_kp.key_id
    ciphertext = crypto.encrypt(recipient_vk, codec.serialize(pid), pid.nonce)
    base = codec.envelope_signing_base(ciphertext, origin)
    portal_sig = crypto.sign(portal_kp, base)
    signatures = (portal_sig,)
    if asa_kp is not None:
        signatures += (crypto.sign(asa_kp, base + codec.serialize(portal_sig)),)
    return SecureEnvelope(ciphertext=ciphertext, origin_portal=origin, signatures=signatures)


class FakeCtx:
    """Stands in for a NodeContext when driving a node directly."""

    def __init__(self, now: int = 0, seed: int = 0xFA11) -> None:
        self.now = now
        self.metrics = RunMetrics()
        self.sent: list[tuple[str, object]] = []
        self.timers: list[tuple[int, object]] = []
        self._rng = RngRegistry(seed)

    def send(self, destination: str, msg) -> None:
        self.sent.append((destination, msg))

    def schedule_self(self, delay_ms: int, msg) -> None:
        self.timers.append((delay_ms, msg))

    def rng(self, purpose: str):
        return self._rng.stream(purpose)

    def draw_bytes(self, purpose: str, n: int) -> bytes:
        return self._rng.draw_bytes(purpose, n)

    def last_sent(self):
        assert self.sent, "expected the node to send a message"
        return self.sent[-1]


def nonce(i: int) -> bytes:
    return i.to_bytes(16, "big")
