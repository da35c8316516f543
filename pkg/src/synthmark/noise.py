"""Sticky (keyed, deterministic) noise and noisy suppression thresholds."""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from statistics import NormalDist
from typing import Sequence

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class AnonParams:
    avg_suppress_threshold: float = 5.0
    abs_suppress_threshold: int = 3
    noise_sd: float = 1.4
    salt: bytes = b""
    # None derives (avg - abs) / 2, so that the clamp at abs sits two SDs below the mean.
    suppress_sd: float | None = None

    def __post_init__(self):
        if self.abs_suppress_threshold < 1:
            raise ValueError("abs_suppress_threshold must be >= 1")
        if self.avg_suppress_threshold < self.abs_suppress_threshold:
            raise ValueError("avg_suppress_threshold must be >= abs_suppress_threshold")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")
        if self.suppress_sd is not None and self.suppress_sd < 0:
            raise ValueError("suppress_sd must be >= 0")

    @property
    def threshold_sd(self) -> float:
        if self.suppress_sd is not None:
            return self.suppress_sd
        return (self.avg_suppress_threshold - self.abs_suppress_threshold) / 2.0

    def fingerprint(self) -> str:
        """Hash of every parameter except the salt."""
        text = repr((self.avg_suppress_threshold, self.abs_suppress_threshold,
                     self.noise_sd, self.threshold_sd))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def salt_fingerprint(self) -> str:
        return hashlib.sha256(b"salt:" + self.salt).hexdigest()[:16]


NodeKey = Sequence[tuple[str, "object"]]


def canonical_key(node_key: NodeKey) -> bytes:
    """Byte encoding of a node key, independent of the order it was given in."""
    parts = []
    for col, iv in sorted(node_key, key=lambda kv: kv[0]):
        parts.append(f"{col}\x1f{iv.offset!r}\x1f{iv.size!r}")
    return "\x1e".join(parts).encode("utf-8")


def _uniform(salt: bytes, label: bytes, key: bytes) -> float:
    digest = hmac.new(salt, label + b"\x00" + key, hashlib.sha256).digest()
    # 53 random bits, shifted half a step so the value is strictly inside (0, 1).
    bits = int.from_bytes(digest[:8], "big") >> 11
    return (bits + 0.5) / 2.0**53


def standard_normal(salt: bytes, label: str, node_key: NodeKey) -> float:
    """Pseudo-random N(0, 1) draw that is a pure function of its arguments."""
    u = _uniform(salt, label.encode(), canonical_key(node_key))
    return _STD_NORMAL.inv_cdf(u)


def sticky_noise(salt: bytes, node_key: NodeKey, sd: float) -> float:
    return sd * standard_normal(salt, "count", node_key)


def suppression_threshold(salt: bytes, node_key: NodeKey, params: AnonParams) -> float:
    t = params.avg_suppress_threshold + params.threshold_sd * standard_normal(salt, "threshold", node_key)
    return max(float(params.abs_suppress_threshold), t)
