"""Core identity domain types and their validation rules.

Everything here is immutable after construction; constructors raise
``InvariantError`` rather than ever holding a bad value. The canonical
byte encoding of these types lives in ``zonalsim.codec``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import date
from enum import Enum

from . import verhoeff
from .crypto import Signature

# The simulated "present": date-of-birth sanity is checked against this
# fixed calendar date so that validation never reads the wall clock.
EPOCH_DATE = date(2020, 1, 1)

FINGERPRINT_COUNT = 10
IRIS_COUNT = 2
PHOTO_DIGEST_LEN = 32
NONCE_LEN = 16
TRANSACTION_ID_LEN = 16


class InvariantError(ValueError):
    """A domain type invariant was violated at construction time."""


class ConfigurationError(ValueError):
    """Invalid scenario-level configuration (e.g. zero zones)."""


def validate_aadhaar(candidate: str) -> bool:
    """True iff ``candidate`` is 12 decimal digits with a valid Verhoeff check digit."""
    if not isinstance(candidate, str) or len(candidate) != 12:
        return False
    return verhoeff.validate(candidate)


def derive_home_zone(demographics: "DemographicData", zone_count: int) -> "ZoneId":
    """Deterministic zone assignment from the canonical address bytes.

    zone = (first 8 bytes of SHA-256(address), big-endian) mod zone_count.
    """
    if zone_count < 1:
        raise ConfigurationError("zone_count must be >= 1")
    digest = hashlib.sha256(demographics.address.encode("utf-8")).digest()
    return ZoneId(int.from_bytes(digest[:8], "big") % zone_count)


@dataclass(frozen=True)
class AadhaarNumber:
    digits: str

    def __post_init__(self) -> None:
        if not validate_aadhaar(self.digits):
            raise InvariantError(f"not a valid 12-digit identity number: {self.digits!r}")

    @classmethod
    def from_body(cls, body: str) -> "AadhaarNumber":
        """Append the check digit to an 11-digit body."""
        if len(body) != 11 or not body.isdigit():
            raise InvariantError("identity number body must be 11 decimal digits")
        return cls(body + verhoeff.check_digit(body))

    def __str__(self) -> str:
        return self.digits


@dataclass(frozen=True)
class ZoneId:
    id: int

    def __post_init__(self) -> None:
        if self.id < 0:
            raise InvariantError("zone id must be non-negative")

    def check_against(self, zone_count: int) -> None:
        if self.id >= zone_count:
            raise InvariantError(f"zone id {self.id} out of range for {zone_count} zones")


@dataclass(frozen=True)
class DemographicData:
    name: str
    address: str
    date_of_birth: date
    phone: str
    email: str

    def __post_init__(self) -> None:
        if not self.name:
            raise InvariantError("name must be non-empty")
        if not self.address:
            raise InvariantError("address must be non-empty")
        if self.date_of_birth > EPOCH_DATE:
            raise InvariantError("date of birth lies in the future")


@dataclass(frozen=True)
class BiometricData:
    fingerprint_templates: tuple[bytes, ...]
    iris_templates: tuple[bytes, ...]
    photo_digest: bytes

    def __post_init__(self) -> None:
        if len(self.fingerprint_templates) != FINGERPRINT_COUNT:
            raise InvariantError(f"exactly {FINGERPRINT_COUNT} fingerprint templates required")
        if len(self.iris_templates) != IRIS_COUNT:
            raise InvariantError(f"exactly {IRIS_COUNT} iris templates required")
        if any(not t for t in self.fingerprint_templates + self.iris_templates):
            raise InvariantError("biometric templates must be non-empty")
        if len(self.photo_digest) != PHOTO_DIGEST_LEN:
            raise InvariantError(f"photo digest must be {PHOTO_DIGEST_LEN} bytes")


@dataclass(frozen=True)
class EnrollmentRecord:
    aadhaar: AadhaarNumber
    demographics: DemographicData
    biometrics: BiometricData
    home_zone: ZoneId


@dataclass(frozen=True)
class PartialDemographics:
    """The demographic subset a user chooses to submit for one attempt."""

    name: str | None = None
    address: str | None = None
    date_of_birth: date | None = None
    phone: str | None = None
    email: str | None = None

    def __post_init__(self) -> None:
        if all(
            v is None
            for v in (self.name, self.address, self.date_of_birth, self.phone, self.email)
        ):
            raise InvariantError("submitted demographics must contain at least one field")

    def matches(self, full: DemographicData) -> bool:
        for attr in ("name", "address", "date_of_birth", "phone", "email"):
            submitted = getattr(self, attr)
            if submitted is not None and submitted != getattr(full, attr):
                return False
        return True


@dataclass(frozen=True)
class SubmittedBiometrics:
    """Indexed subset of captured biometrics: (finger index, template) pairs."""

    fingerprints: tuple[tuple[int, bytes], ...] = ()
    irises: tuple[tuple[int, bytes], ...] = ()
    photo_digest: bytes | None = None

    def __post_init__(self) -> None:
        if not self.fingerprints and not self.irises and self.photo_digest is None:
            raise InvariantError("submitted biometrics must contain at least one element")
        self._check_indexed(self.fingerprints, FINGERPRINT_COUNT, "fingerprint")
        self._check_indexed(self.irises, IRIS_COUNT, "iris")
        if self.photo_digest is not None and len(self.photo_digest) != PHOTO_DIGEST_LEN:
            raise InvariantError(f"photo digest must be {PHOTO_DIGEST_LEN} bytes")

    @staticmethod
    def _check_indexed(items: tuple[tuple[int, bytes], ...], limit: int, kind: str) -> None:
        last = -1
        for idx, template in items:
            if not 0 <= idx < limit:
                raise InvariantError(f"{kind} index {idx} out of range")
            if idx <= last:
                raise InvariantError(f"{kind} indexes must be strictly increasing")
            if not template:
                raise InvariantError(f"{kind} template must be non-empty")
            last = idx

    def matches(self, full: BiometricData) -> bool:
        for idx, template in self.fingerprints:
            if full.fingerprint_templates[idx] != template:
                return False
        for idx, template in self.irises:
            if full.iris_templates[idx] != template:
                return False
        if self.photo_digest is not None and self.photo_digest != full.photo_digest:
            return False
        return True


@dataclass(frozen=True)
class PidBlock:
    aadhaar: AadhaarNumber
    submitted_demographics: PartialDemographics | None
    submitted_biometrics: SubmittedBiometrics | None
    otp: str | None
    liveness_attested: bool
    nonce: bytes
    timestamp: int

    def __post_init__(self) -> None:
        if (
            self.submitted_demographics is None
            and self.submitted_biometrics is None
            and self.otp is None
        ):
            raise InvariantError("a PID block must submit at least one attribute")
        if self.otp is not None and (len(self.otp) != 6 or not self.otp.isdigit()):
            raise InvariantError("OTP must be exactly 6 decimal digits")
        if len(self.nonce) != NONCE_LEN:
            raise InvariantError(f"nonce must be {NONCE_LEN} bytes")
        if self.timestamp < 0:
            raise InvariantError("timestamp must be non-negative")


class AuthStatus(str, Enum):
    """The only three verdicts the authentication algorithm ever emits."""

    SUCCESS = "Authentication Successful"
    FAILURE = "Authentication Unsuccessful"
    INVALID = "Invalid Aadhaar Number. Please try Again..."


@dataclass(frozen=True)
class AuthResponse:
    status: AuthStatus
    transaction_id: bytes
    responder: str
    signature: Signature

    def __post_init__(self) -> None:
        if len(self.transaction_id) != TRANSACTION_ID_LEN:
            raise InvariantError(f"transaction id must be {TRANSACTION_ID_LEN} bytes")
        if not self.responder:
            raise InvariantError("responder identity must be non-empty")
