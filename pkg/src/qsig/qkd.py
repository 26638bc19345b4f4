"""Simulated BB84 key distribution.

Prepare-and-measure flow: the sender encodes random bits in random bases, an
optional intercept-resend eavesdropper measures each photon in a random basis
and forwards the collapsed state, the receiver measures in random bases, the
two sides sift on matching bases and sacrifice a random sample of the sifted
key to estimate the QBER. No error correction or privacy amplification.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

from .errors import ProvisioningError, UnderflowError
from .keys import BitString, ka_length, kb_length
from .qubit import Basis, apply_x, apply_z, measure, prepare
from .rng import RandomStream

log = logging.getLogger(__name__)

QBER_THRESHOLD = 0.11


class Eve(str, Enum):
    NONE = "none"
    INTERCEPT_RESEND = "intercept-resend"


@dataclass(frozen=True)
class QkdSessionConfig:
    raw_len: int
    eve: Eve = Eve.NONE
    noise_p: float = 0.0
    sample_fraction: float = 0.5

    def __post_init__(self):
        if self.raw_len < 8:
            raise ValueError(f"raw_len must be >= 8, got {self.raw_len}")
        if not 0.0 <= self.noise_p <= 1.0:
            raise ValueError(f"noise_p must lie in [0, 1], got {self.noise_p}")
        if not 0.0 < self.sample_fraction < 1.0:
            raise ValueError(f"sample_fraction must lie in (0, 1), got {self.sample_fraction}")
        object.__setattr__(self, "eve", Eve(self.eve))


@dataclass(frozen=True)
class QkdOutcome:
    """Result of one BB84 session.

    The per-position record (``sender_*``, ``receiver_*``, ``sifted``,
    ``sampled``) is kept so that sifting and QBER can be recomputed
    independently from the transcript.
    """

    key_sender: BitString
    key_receiver: BitString
    sifted_len: int
    sampled_len: int
    qber: float
    aborted: bool
    sender_bits: BitString
    sender_bases: BitString
    receiver_bases: BitString
    receiver_bits: BitString
    sifted: tuple[int, ...]
    sampled: tuple[int, ...]

    def stats(self, cfg: QkdSessionConfig, seed: int | None = None) -> dict:
        return {
            "raw_len": cfg.raw_len,
            "sifted_len": self.sifted_len,
            "qber": self.qber,
            "aborted": self.aborted,
            "eve": cfg.eve.value,
            "noise_p": cfg.noise_p,
            "seed": seed,
        }


def _sample_size(sifted_len: int, fraction: float) -> int:
    return max(1, round(fraction * sifted_len))


def run_bb84(cfg: QkdSessionConfig, rng: RandomStream) -> QkdOutcome:
    """Run one BB84 session.

    Channel noise is a ``Y`` (= ``XZ`` up to phase) error with probability
    ``noise_p``, which flips the encoded bit in either basis, so it adds
    exactly ``noise_p`` to the QBER.

    Raises
    ------
    UnderflowError
        If no key bits remain once the QBER sample is removed.
    """
    s_bits, s_bases, r_bases, r_bits = [], [], [], []
    for _ in range(cfg.raw_len):
        bit, basis = rng.bit(), rng.bit()
        q = prepare(bit, Basis(basis))
        if cfg.eve is Eve.INTERCEPT_RESEND:
            measure(q, Basis(rng.bit()), rng)
        if cfg.noise_p > 0.0 and rng.uniform() < cfg.noise_p:
            q = apply_x(apply_z(q))
        r_basis = rng.bit()
        r_bits.append(measure(q, Basis(r_basis), rng))
        s_bits.append(bit)
        s_bases.append(basis)
        r_bases.append(r_basis)

    sifted = tuple(i for i in range(cfg.raw_len) if s_bases[i] == r_bases[i])
    k = _sample_size(len(sifted), cfg.sample_fraction)
    if len(sifted) - k < 1:
        raise UnderflowError(
            f"{len(sifted)} sifted bits from raw_len={cfg.raw_len}: nothing left after sampling")
    picked = set(rng.sample(len(sifted), k))
    sampled = tuple(sifted[j] for j in sorted(picked))
    errors = sum(s_bits[i] != r_bits[i] for i in sampled)
    qber = errors / k
    kept = [sifted[j] for j in range(len(sifted)) if j not in picked]
    return QkdOutcome(
        key_sender=tuple(s_bits[i] for i in kept),
        key_receiver=tuple(r_bits[i] for i in kept),
        sifted_len=len(sifted),
        sampled_len=k,
        qber=qber,
        aborted=qber > QBER_THRESHOLD,
        sender_bits=tuple(s_bits),
        sender_bases=tuple(s_bases),
        receiver_bases=tuple(r_bases),
        receiver_bits=tuple(r_bits),
        sifted=sifted,
        sampled=sampled,
    )


def provision_keys(n: int, rng: RandomStream, eve: Eve = Eve.NONE,
                   max_aborts: int = 8) -> tuple[BitString, BitString, BitString, BitString]:
    """Distribute ``(K_a, K_b, A, B)`` for an ``n``-bit message over BB84.

    Each string comes from its own sessions, which run until enough bits
    have been collected. Only sessions with zero estimated QBER are kept.
    Returned strings have exactly the lengths ``derive_schedule`` needs.

    Raises
    ------
    ProvisioningError
        After ``max_aborts`` rejected sessions.
    """
    needs = (ka_length(n), kb_length(n), n, n)
    out = []
    rejected = 0
    for need in needs:
        acc: list[int] = []
        while len(acc) < need:
            cfg = QkdSessionConfig(raw_len=max(64, 8 * (need - len(acc))), eve=eve)
            res = run_bb84(cfg, rng)
            if res.aborted or res.qber > 0.0:
                rejected += 1
                log.info("QKD session rejected (qber=%.3f), %d so far", res.qber, rejected)
                if rejected >= max_aborts:
                    raise ProvisioningError(
                        f"gave up after {rejected} rejected QKD sessions (last qber={res.qber:.3f})")
                continue
            acc.extend(res.key_receiver)
        out.append(tuple(acc[:need]))
    return tuple(out)
