"""Pluggable signing and encryption, with a deterministic reference construct.

The reference scheme is intentionally dependency-free and byte-stable
across platforms:

* signature  = BLAKE2b-256 MAC keyed with the verification key
* encryption = BLAKE2b keystream XOR, authenticated with a 32-byte tag
  (tag checked before any decryption)

It is a stand-in with real integrity properties inside the simulation,
not production public-key cryptography: anyone holding a verification
key could also forge with it. A production scheme slots in behind
``SignatureScheme`` without touching protocol code.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from typing import Iterable

SEED_LEN = 32
KEY_LEN = 32
SIG_LEN = 32
TAG_LEN = 32
ENC_NONCE_LEN = 16
# ciphertext = nonce || body || tag
ENC_OVERHEAD = ENC_NONCE_LEN + TAG_LEN


class CryptoUsageError(ValueError):
    """The caller violated an operation precondition (empty message, bad seed...)."""


class DecryptAuthError(ValueError):
    """Ciphertext failed authentication: wrong key or tampered bytes."""


def _h(*parts: bytes) -> bytes:
    h = hashlib.blake2b(digest_size=KEY_LEN)
    for part in parts:
        h.update(len(part).to_bytes(4, "big"))
        h.update(part)
    return h.digest()


@dataclass(frozen=True)
class KeyPair:
    key_id: str
    signing_key: bytes
    verification_key: bytes


@dataclass(frozen=True)
class Signature:
    signer_key_id: str
    bytes: bytes


@dataclass(frozen=True)
class SecureEnvelope:
    """Encrypted PID block plus the relay-ordered signature chain."""

    ciphertext: bytes
    origin_portal: str
    signatures: tuple[Signature, ...]

    def __post_init__(self) -> None:
        if not self.signatures:
            raise ValueError("an envelope must carry at least one signature")


class SignatureScheme:
    """Capability interface; the default instance is the reference construct."""

    name = "blake2b-mac-v1"

    def generate_keypair(self, seed: bytes, key_id: str) -> KeyPair:
        if len(seed) != SEED_LEN:
            raise CryptoUsageError(f"seed must be {SEED_LEN} bytes")
        signing_key = _h(b"signing-key", seed, key_id.encode("utf-8"))
        verification_key = _h(b"verification-key", signing_key)
        return KeyPair(key_id=key_id, signing_key=signing_key, verification_key=verification_key)

    def sign(self, key: KeyPair, message: bytes) -> Signature:
        if not message:
            raise CryptoUsageError("refusing to sign an empty message")
        mac = hashlib.blake2b(message, digest_size=SIG_LEN, key=key.verification_key)
        return Signature(signer_key_id=key.key_id, bytes=mac.digest())

    def verify(self, verification_key: bytes, message: bytes, sig: Signature) -> bool:
        if not message or len(sig.bytes) != SIG_LEN:
            return False
        expected = hashlib.blake2b(message, digest_size=SIG_LEN, key=verification_key).digest()
        return hmac.compare_digest(expected, sig.bytes)

    def _enc_key(self, recipient: "KeyPair | bytes") -> bytes:
        vk = recipient.verification_key if isinstance(recipient, KeyPair) else recipient
        if len(vk) != KEY_LEN:
            raise CryptoUsageError(f"recipient key must be {KEY_LEN} bytes")
        return _h(b"encryption-key", vk)

    def _keystream(self, key: bytes, nonce: bytes, length: int) -> bytes:
        out = bytearray()
        counter = 0
        while len(out) < length:
            out.extend(_h(b"keystream", key, nonce, counter.to_bytes(8, "big")))
            counter += 1
        return bytes(out[:length])

    def encrypt(self, recipient_key: "KeyPair | bytes", plaintext: bytes, nonce: bytes) -> bytes:
        """Encrypt to a recipient; the public verification key suffices."""
        if len(nonce) != ENC_NONCE_LEN:
            raise CryptoUsageError(f"encryption nonce must be {ENC_NONCE_LEN} bytes")
        key = self._enc_key(recipient_key)
        body = bytes(a ^ b for a, b in zip(plaintext, self._keystream(key, nonce, len(plaintext))))
        tag = hashlib.blake2b(nonce + body, digest_size=TAG_LEN, key=_h(b"tag-key", key)).digest()
        return nonce + body + tag

    def decrypt(self, recipient_key: KeyPair, ciphertext: bytes) -> bytes:
        if len(ciphertext) < ENC_OVERHEAD:
            raise DecryptAuthError("ciphertext shorter than the fixed overhead")
        key = self._enc_key(recipient_key)
        nonce, body, tag = (
            ciphertext[:ENC_NONCE_LEN],
            ciphertext[ENC_NONCE_LEN:-TAG_LEN],
            ciphertext[-TAG_LEN:],
        )
        expected = hashlib.blake2b(nonce + body, digest_size=TAG_LEN, key=_h(b"tag-key", key)).digest()
        if not hmac.compare_digest(expected, tag):
            raise DecryptAuthError("ciphertext failed authentication")
        return bytes(a ^ b for a, b in zip(body, self._keystream(key, nonce, len(body))))


DEFAULT_SCHEME = SignatureScheme()


def generate_keypair(seed: bytes, key_id: str) -> KeyPair:
    return DEFAULT_SCHEME.generate_keypair(seed, key_id)


def sign(key: KeyPair, message: bytes) -> Signature:
    return DEFAULT_SCHEME.sign(key, message)


def verify(verification_key: bytes, message: bytes, sig: Signature) -> bool:
    return DEFAULT_SCHEME.verify(verification_key, message, sig)


def encrypt(recipient_key: "KeyPair | bytes", plaintext: bytes, nonce: bytes) -> bytes:
    return DEFAULT_SCHEME.encrypt(recipient_key, plaintext, nonce)


def decrypt(recipient_key: KeyPair, ciphertext: bytes) -> bytes:
    return DEFAULT_SCHEME.decrypt(recipient_key, ciphertext)


def dump_test_vectors(records: Iterable[tuple[str, bytes, bytes, Signature]]) -> str:
    """Render signing vectors: one record per line, hex fields, single spaces."""
    lines = []
    for key_id, seed, message, sig in records:
        lines.append(
            " ".join((key_id, seed.hex(), message.hex(), sig.bytes.hex()))
        )
    return "\n".join(lines) + "\n"


def load_test_vectors(text: str) -> list[tuple[str, bytes, bytes, Signature]]:
    records = []
    for line in text.splitlines():
        if not line.strip():
            continue
        key_id, seed_hex, msg_hex, sig_hex = line.split(" ")
        records.append(
            (
                key_id,
                bytes.fromhex(seed_hex),
                bytes.fromhex(msg_hex),
                Signature(signer_key_id=key_id, bytes=bytes.fromhex(sig_hex)),
            )
        )
    return records
