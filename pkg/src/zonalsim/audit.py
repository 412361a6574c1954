"""Post-run privacy auditor over the service-provider-visible surface.

The adversary model is explicit and objective: the union of all bytes a
service provider ever sees (transcript dumps plus every message payload
delivered to an SP node), searched for exact secret substrings, plus
equality joins of identifier fields across providers. Statistical
inference (e.g. timing correlation) is out of scope of pass/fail.

Secret classes: ``aadhaar`` (the 12 digits as ASCII), ``demographic``
(name/address/date-of-birth/phone/email byte strings), ``biometric``
(template bytes and photo digests).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from . import codec
from .domain import EnrollmentRecord

_AADHAAR_FIELD = re.compile(r"aadhaar=(\d{12})")


class AuditError(ValueError):
    """The run directory is missing dumps the auditor needs."""


@dataclass(frozen=True)
class Violation:
    file: str
    offset: int
    secret_class: str

    def line(self) -> str:
        return f"{self.file} {self.offset} {self.secret_class}"


@dataclass(frozen=True)
class LinkageEntry:
    field: str
    value: str
    sp_pair: tuple[str, str]

    def line(self) -> str:
        return f"{self.field} {self.value} {self.sp_pair[0]} {self.sp_pair[1]}"


@dataclass(frozen=True)
class LinkageReport:
    entries: tuple[LinkageEntry, ...]
    max_join_cardinality: int
    fields_involved: tuple[str, ...]

    @property
    def empty(self) -> bool:
        return not self.entries


def collect_secrets(records: Iterable[EnrollmentRecord]) -> list[tuple[bytes, str]]:
    """Every byte string whose appearance on an SP surface is a breach."""
    secrets: list[tuple[bytes, str]] = []
    for record in records:
        secrets.append((record.aadhaar.digits.encode("ascii"), "aadhaar"))
        demo = record.demographics
        for text in (demo.name, demo.address, demo.date_of_birth.isoformat(), demo.phone, demo.email):
            secrets.append((text.encode("utf-8"), "demographic"))
        bio = record.biometrics
        for template in (*bio.fingerprint_templates, *bio.iris_templates, bio.photo_digest):
            secrets.append((template, "biometric"))
    return secrets


def scan_sp_surface(
    surfaces: dict[str, bytes], secrets: list[tuple[bytes, str]]
) -> list[Violation]:
    """Report every occurrence of any secret over the SP-visible bytes."""
    violations: list[Violation] = []
    for name in sorted(surfaces):
        data = surfaces[name]
        for secret, secret_class in secrets:
            offset = data.find(secret)
            while offset != -1:
                violations.append(Violation(file=name, offset=offset, secret_class=secret_class))
                offset = data.find(secret, offset + 1)
    return violations


def _identifier_values(lines: Iterable[str]) -> dict[str, set[str]]:
    """Identifier fields of one transcript: transaction and session ids
    (hex columns) plus any legacy-recorded numbers. Timestamps and verdict
    strings are not identifiers."""
    values: dict[str, set[str]] = {"transaction_id": set(), "session_id": set(), "aadhaar": set()}
    for line in lines:
        parts = line.split(" ", 3)
        if len(parts) < 3:
            continue
        txid, session = parts[0], parts[1]
        if txid != "-":
            values["transaction_id"].add(txid)
        if session != "-":
            values["session_id"].add(session)
        match = _AADHAAR_FIELD.search(line)
        if match:
            values["aadhaar"].add(match.group(1))
    return values


def collusion_linkage(transcripts: dict[str, list[str]]) -> LinkageReport:
    """Equality joins of identifier fields across every pair of providers."""
    parsed = {sp: _identifier_values(lines) for sp, lines in transcripts.items()}
    ordered = sorted(parsed)
    entries: list[LinkageEntry] = []
    max_cardinality = 0
    fields: set[str] = set()
    for i, sp_a in enumerate(ordered):
        for sp_b in ordered[i + 1 :]:
            for field_name in ("transaction_id", "session_id", "aadhaar"):
                shared = parsed[sp_a][field_name] & parsed[sp_b][field_name]
                if shared:
                    fields.add(field_name)
                    max_cardinality = max(max_cardinality, len(shared))
                    entries.extend(
                        LinkageEntry(field=field_name, value=v, sp_pair=(sp_a, sp_b))
                        for v in sorted(shared)
                    )
    return LinkageReport(
        entries=tuple(entries),
        max_join_cardinality=max_cardinality,
        fields_involved=tuple(sorted(fields)),
    )


# ---------------------------------------------------------------------------
# File-level entry points
# ---------------------------------------------------------------------------


def load_enrolled_records(run_dir: Path) -> list[EnrollmentRecord]:
    store_path = Path(run_dir) / "dumps" / "cidr_store.txt"
    if not store_path.is_file():
        raise AuditError(f"missing dump file: {store_path}")
    records = []
    for line in store_path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(codec.parse(bytes.fromhex(line.strip()), EnrollmentRecord))
    return records


def load_sp_surfaces(run_dir: Path) -> dict[str, bytes]:
    dumps = Path(run_dir) / "dumps"
    if not dumps.is_dir():
        raise AuditError(f"missing dump directory: {dumps}")
    surfaces: dict[str, bytes] = {}
    for path in sorted(dumps.glob("sp_*_transcript.txt")) + sorted(dumps.glob("sp_*_inbox.bin")):
        surfaces[f"dumps/{path.name}"] = path.read_bytes()
    return surfaces


def load_transcripts(run_dir: Path) -> dict[str, list[str]]:
    dumps = Path(run_dir) / "dumps"
    if not dumps.is_dir():
        raise AuditError(f"missing dump directory: {dumps}")
    return {
        path.stem.replace("_transcript", ""): path.read_text(encoding="utf-8").splitlines()
        for path in sorted(dumps.glob("sp_*_transcript.txt"))
    }


def audit_run_dir(run_dir: Path) -> tuple[list[Violation], LinkageReport]:
    secrets = collect_secrets(load_enrolled_records(run_dir))
    violations = scan_sp_surface(load_sp_surfaces(run_dir), secrets)
    linkage = collusion_linkage(load_transcripts(run_dir))
    return violations, linkage


def write_reports(
    run_dir: Path, violations: list[Violation], linkage: LinkageReport
) -> None:
    audit_dir = Path(run_dir) / "audit"
    audit_dir.mkdir(parents=True, exist_ok=True)
    violation_lines = [v.line() for v in violations]
    (audit_dir / "violations.txt").write_text(
        ("\n".join(violation_lines) + "\n") if violation_lines else "", encoding="utf-8"
    )
    linkage_lines = [e.line() for e in linkage.entries]
    header = (
        f"# max_join_cardinality = {linkage.max_join_cardinality}\n"
        f"# fields_involved = {','.join(linkage.fields_involved) or '-'}\n"
    )
    (audit_dir / "linkage.txt").write_text(
        header + (("\n".join(linkage_lines) + "\n") if linkage_lines else ""), encoding="utf-8"
    )
