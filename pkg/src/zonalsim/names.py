"""Canonical node names used for routing, key directories, and traces."""

CIDR = "cidr"
ASA = "asa"


def zone(index: int) -> str:
    return f"zone:{index}"


def portal(index: int) -> str:
    return f"portal:{index}"


def sp(index: int) -> str:
    return f"sp:{index}"
