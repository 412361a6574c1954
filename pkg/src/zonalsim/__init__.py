"""Deterministic simulator and protocol library for zonally decentralized
identity authentication, with a centralized baseline mode and a privacy
auditor over service-provider-visible transcripts."""

from .domain import (
    AadhaarNumber,
    AuthResponse,
    AuthStatus,
    BiometricData,
    DemographicData,
    EnrollmentRecord,
    PartialDemographics,
    PidBlock,
    SubmittedBiometrics,
    ZoneId,
    derive_home_zone,
    validate_aadhaar,
)
from .crypto import KeyPair, SecureEnvelope, Signature

__version__ = "0.1.0"

__all__ = [
    "AadhaarNumber",
    "AuthResponse",
    "AuthStatus",
    "BiometricData",
    "DemographicData",
    "EnrollmentRecord",
    "KeyPair",
    "PartialDemographics",
    "PidBlock",
    "SecureEnvelope",
    "Signature",
    "SubmittedBiometrics",
    "ZoneId",
    "derive_home_zone",
    "validate_aadhaar",
    "__version__",
]
