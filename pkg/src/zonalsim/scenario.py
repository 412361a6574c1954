"""Scenario orchestration: wiring, synthetic workload, run artifacts.

A run happens in two phases on one simulated clock: enrollments first
(drained so every dual-write lands before traffic starts), then the
authentication workload. Everything the run produces - metrics, trace,
end-of-run dumps - is assembled as an in-memory artifact map keyed by
relative path; the CLI writes it to disk verbatim.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from . import codec, names
from .agents import AsaRelay, PortalGateway, ServiceProvider
from .cidr import CidrRegistry
from .config import ScenarioConfig
from .crypto import generate_keypair
from .domain import (
    BiometricData,
    DemographicData,
    EnrollmentRecord,
    PartialDemographics,
    PidBlock,
    SubmittedBiometrics,
    ZoneId,
)
from .netsim import NodeContext, RunMetrics, Simulation
from .zonal import ZonalOffice

logger = logging.getLogger(__name__)

AUTH_PHASE_GAP_MS = 1000

# Honest attempts cycle through these submitted-attribute combinations.
ATTEMPT_KINDS = ("biometric", "biometric+otp", "demographic+otp", "otp", "biometric+demographic")


class OtpAuthority:
    """Out-of-band per-transaction OTP issuance shared with authenticators."""

    def __init__(self) -> None:
        self._expected: dict[bytes, str] = {}

    def issue(self, transaction_id: bytes, otp: str) -> None:
        self._expected[transaction_id] = otp

    def lookup(self, transaction_id: bytes) -> str | None:
        return self._expected.get(transaction_id)


@dataclass
class ScenarioParties:
    cidr: CidrRegistry
    zones: list[ZonalOffice]
    portals: list[PortalGateway]
    sps: list[ServiceProvider]
    asa: AsaRelay
    otp: OtpAuthority


@dataclass(frozen=True)
class WorkloadAttempt:
    index: int
    transaction_id: bytes
    sp_id: str
    aadhaar: str
    home_zone: int
    portal_zone: int  # -1 in baseline mode (request goes to the registry)
    kind: str

    def line(self) -> str:
        portal = names.CIDR if self.portal_zone < 0 else str(self.portal_zone)
        return (
            f"{self.index} {self.transaction_id.hex()} {self.sp_id} {self.aadhaar} "
            f"home={self.home_zone} portal={portal} kind={self.kind}"
        )


@dataclass
class RunResult:
    config: ScenarioConfig
    metrics: RunMetrics
    trace: list[str]
    artifacts: dict[str, bytes]
    parties: ScenarioParties
    attempts: list[WorkloadAttempt]

    def write(self, out_dir: Path) -> None:
        out = Path(out_dir)
        for relpath, data in self.artifacts.items():
            target = out / relpath
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_bytes(data)


def build_simulation(config: ScenarioConfig) -> tuple[Simulation, ScenarioParties]:
    sim = Simulation(config.seed, config.fault_plan())
    otp = OtpAuthority()

    node_names = [names.CIDR, names.ASA]
    node_names += [names.zone(i) for i in range(config.zone_count)]
    node_names += [names.portal(i) for i in range(config.zone_count)]
    node_names += [names.sp(i) for i in range(config.sp_count)]
    keypairs = {
        name: generate_keypair(sim.rng.draw_bytes(f"key|{name}", 32), name)
        for name in node_names
    }
    directory = {name: kp.verification_key for name, kp in keypairs.items()}

    issuance_mask = sim.rng.stream("issuance-mask").getrandbits(32)
    cidr = CidrRegistry(
        keypair=keypairs[names.CIDR],
        zone_count=config.zone_count,
        issuance_mask=issuance_mask,
        directory=directory,
        otp_lookup=otp.lookup,
    )
    asa = AsaRelay(keypair=keypairs[names.ASA], directory=directory)
    zones = [
        ZonalOffice(
            zone=ZoneId(i),
            keypair=keypairs[names.zone(i)],
            directory=directory,
            cache_ttl_ms=config.cache_ttl_ms,
            fetch_timeout_ms=config.fetch_timeout_ms,
            otp_lookup=otp.lookup,
        )
        for i in range(config.zone_count)
    ]
    registered_sps = {names.sp(i) for i in range(config.sp_count)}
    portals = [
        PortalGateway(
            zone=ZoneId(i),
            keypair=keypairs[names.portal(i)],
            directory=directory,
            registered_sps=registered_sps,
        )
        for i in range(config.zone_count)
    ]
    sps = [
        ServiceProvider(names.sp(i), keypairs[names.sp(i)], directory)
        for i in range(config.sp_count)
    ]

    sim.add_node(cidr)
    sim.add_node(asa)
    for node in (*zones, *portals):
        sim.add_node(node)
    for sp in sps:
        sim.add_node(sp, capture_surface=True)
    return sim, ScenarioParties(cidr=cidr, zones=zones, portals=portals, sps=sps, asa=asa, otp=otp)


def synthesize_user(sim: Simulation, index: int) -> tuple[DemographicData, BiometricData]:
    demo_rng = sim.rng.stream("driver|demographics")
    demographics = DemographicData(
        name=f"Resident {index:06d}",
        address=(
            f"H-{demo_rng.randrange(1, 1000)}, Sector {demo_rng.randrange(1, 60)}, "
            f"District {demo_rng.randrange(1, 40):02d}"
        ),
        date_of_birth=date(1950, 1, 1) + timedelta(days=demo_rng.randrange(0, 20000)),
        phone=f"{demo_rng.randrange(6_000_000_000, 10_000_000_000)}",
        email=f"resident{index:06d}@mail.example",
    )
    biometrics = BiometricData(
        fingerprint_templates=tuple(sim.rng.draw_bytes("driver|biometrics", 32) for _ in range(10)),
        iris_templates=tuple(sim.rng.draw_bytes("driver|biometrics", 64) for _ in range(2)),
        photo_digest=sim.rng.draw_bytes("driver|biometrics", 32),
    )
    return demographics, biometrics


def build_pid(
    sim: Simulation,
    otp_authority: OtpAuthority,
    record: EnrollmentRecord,
    transaction_id: bytes,
    kind: str,
    nonce: bytes,
    liveness_attested: bool = True,
) -> PidBlock:
    """Honest PID block for an enrolled user, per attempt kind."""
    submitted_bio = None
    submitted_demo = None
    otp = None
    if "biometric" in kind:
        bio_pick = sim.rng.stream("driver|attr-pick")
        finger = bio_pick.randrange(10)
        submitted_bio = SubmittedBiometrics(
            fingerprints=((finger, record.biometrics.fingerprint_templates[finger]),),
            irises=((0, record.biometrics.iris_templates[0]),),
        )
    if "demographic" in kind:
        submitted_demo = PartialDemographics(
            name=record.demographics.name, address=record.demographics.address
        )
    if "otp" in kind:
        otp = f"{sim.rng.stream('driver|otp').randrange(10**6):06d}"
        otp_authority.issue(transaction_id, otp)
    return PidBlock(
        aadhaar=record.aadhaar,
        submitted_demographics=submitted_demo,
        submitted_biometrics=submitted_bio,
        otp=otp,
        liveness_attested=liveness_attested,
        nonce=nonce,
        timestamp=sim.now,
    )


class _NonceSource:
    """Unique-per-run 16-byte nonces (uniqueness by construction)."""

    def __init__(self, sim: Simulation) -> None:
        self._sim = sim
        self._seen: set[bytes] = set()

    def draw(self) -> bytes:
        while True:
            nonce = self._sim.rng.draw_bytes("driver|nonce", 16)
            if nonce not in self._seen:
                self._seen.add(nonce)
                return nonce


def run_scenario(config: ScenarioConfig) -> RunResult:
    sim, parties = build_simulation(config)
    enrolled: list[EnrollmentRecord] = []

    def make_enroll(index: int):
        def enroll() -> None:
            demographics, biometrics = synthesize_user(sim, index)
            ctx = NodeContext(sim, names.CIDR)
            _, record = parties.cidr.enroll(ctx, demographics, biometrics)
            enrolled.append(record)

        return enroll

    for i in range(config.user_count):
        sim.call_at(i * config.enroll_interval_ms, make_enroll(i))
    sim.run()
    logger.info("enrolled %d users by t=%dms", len(enrolled), sim.now)

    attempts: list[WorkloadAttempt] = []
    nonces = _NonceSource(sim)
    if config.user_count > 0 and config.sp_count > 0 and config.auth_count > 0:
        start = sim.now + AUTH_PHASE_GAP_MS
        maker = _make_zonal_attempt if config.mode == "zonal" else _make_baseline_attempt
        for i in range(config.auth_count):
            sim.call_at(
                start + i * config.auth_interval_ms,
                maker(config, sim, parties, enrolled, attempts, nonces, i),
            )
        sim.run()
    logger.info("run complete at t=%dms: %s", sim.now, sim.metrics.to_lines()[:4])

    artifacts = _assemble_artifacts(config, sim, parties, enrolled, attempts)
    return RunResult(
        config=config,
        metrics=sim.metrics,
        trace=sim.trace,
        artifacts=artifacts,
        parties=parties,
        attempts=attempts,
    )


def _pick_portal_zone(config: ScenarioConfig, sim: Simulation, home_zone: int) -> int:
    if config.zone_count == 1:
        return home_zone
    if sim.rng.stream("driver|inzone").random() < config.in_zone_probability:
        return home_zone
    pick = sim.rng.stream("driver|zone-pick").randrange(config.zone_count - 1)
    return pick if pick < home_zone else pick + 1


def _pick_attempt_shape(sim: Simulation, enrolled: list[EnrollmentRecord], config: ScenarioConfig):
    record = enrolled[sim.rng.stream("driver|user").randrange(len(enrolled))]
    sp_index = sim.rng.stream("driver|sp").randrange(config.sp_count)
    kind = ATTEMPT_KINDS[sim.rng.stream("driver|kind").randrange(len(ATTEMPT_KINDS))]
    return record, sp_index, kind


def _make_zonal_attempt(config, sim, parties, enrolled, attempts, nonces, index: int):
    def attempt() -> None:
        record, sp_index, kind = _pick_attempt_shape(sim, enrolled, config)
        portal_zone = _pick_portal_zone(config, sim, record.home_zone.id)
        portal = parties.portals[portal_zone]
        sp = parties.sps[sp_index]
        portal_ctx = NodeContext(sim, portal.name)
        session = portal.open_session(portal_ctx, sp.name)
        sp.note_session(sim.now, session.session_id)
        pid = build_pid(sim, parties.otp, record, session.transaction_id, kind, nonces.draw())
        portal.submit(portal_ctx, session, pid)
        attempts.append(
            WorkloadAttempt(
                index=index,
                transaction_id=session.transaction_id,
                sp_id=sp.name,
                aadhaar=record.aadhaar.digits,
                home_zone=record.home_zone.id,
                portal_zone=portal_zone,
                kind=kind,
            )
        )

    return attempt


def _make_baseline_attempt(config, sim, parties, enrolled, attempts, nonces, index: int):
    def attempt() -> None:
        record, sp_index, kind = _pick_attempt_shape(sim, enrolled, config)
        sp = parties.sps[sp_index]
        sp_ctx = NodeContext(sim, sp.name)
        session_id, transaction_id = sp.open_legacy_session(sp_ctx)
        pid = build_pid(sim, parties.otp, record, transaction_id, kind, nonces.draw())
        sp.legacy_submit(sp_ctx, session_id, transaction_id, pid)
        attempts.append(
            WorkloadAttempt(
                index=index,
                transaction_id=transaction_id,
                sp_id=sp.name,
                aadhaar=record.aadhaar.digits,
                home_zone=record.home_zone.id,
                portal_zone=-1,
                kind=kind,
            )
        )

    return attempt


def _text(lines: list[str]) -> bytes:
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def _assemble_artifacts(
    config: ScenarioConfig,
    sim: Simulation,
    parties: ScenarioParties,
    enrolled: list[EnrollmentRecord],
    attempts: list[WorkloadAttempt],
) -> dict[str, bytes]:
    artifacts: dict[str, bytes] = {
        "config.json": config.dumps().encode("utf-8"),
        "metrics.txt": _text(sim.metrics.to_lines()),
        "trace.log": _text(sim.trace),
        "dumps/workload.txt": _text([a.line() for a in attempts]),
        "dumps/cidr_store.txt": _text(
            [codec.serialize(r).hex() for r in parties.cidr.records.values()]
        ),
    }
    for i, zone in enumerate(parties.zones):
        artifacts[f"dumps/zone_{i}_store.txt"] = _text(
            [codec.serialize(r).hex() for r in zone.store.values()]
        )
        artifacts[f"dumps/zone_{i}_cache.txt"] = _text(
            [f"{codec.serialize(r).hex()} {at}" for r, at in zone.cache.values()]
        )
        artifacts[f"dumps/zone_{i}_log.txt"] = _text(zone.node_log)
    for i, sp in enumerate(parties.sps):
        transcript = list(sp.transcript)
        if config.debug_plant_leak and i == 0 and enrolled:
            # Auditor-sensitivity hook: deliberately leak one number.
            transcript.append(f"debug-leak {enrolled[0].aadhaar}")
        artifacts[f"dumps/sp_{i}_transcript.txt"] = _text(transcript)
        artifacts[f"dumps/sp_{i}_inbox.bin"] = bytes(sim.sp_surfaces[sp.name])
    return artifacts
