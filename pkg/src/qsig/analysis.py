"""Forgery experiments, ciphertext mixing battery and efficiency accounting.

Two independent routes to the forgery success rate:

* :func:`run_attack` drives the real protocol code with random key guesses
  (Monte Carlo).
* :func:`exact_pass_probability` re-derives the same quantity with its own
  2x2 linear algebra, enumerating every key guess and every measurement
  branch with exact rational weights. It shares no code with the protocol.

Note the asymmetry with the textbook bound ``1 - 2^-(|K_a|+|A|)``: a forged
qubit in the wrong basis still passes a comparison half the time, so the
measured detection rate sits well below that bound for short messages. The
bound is reported next to the measured numbers, never asserted.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.stats import binomtest, norm

from .errors import SizeError
from .keys import derive_schedule, ka_length, random_schedule, verify_mixing
from .protocol import (
    MessageBits,
    alice_sign,
    arbitrator_verify,
    bob_finalize,
    bob_wrap,
    run_session,
    verify_signature,
)
from .qubit import MAX_DENSITY_QUBITS, Basis, prepare
from .rng import RandomStream

CONFIDENCE = 0.95
_Z95 = float(norm.ppf(0.5 + CONFIDENCE / 2))


class AttackModel(str, Enum):
    OUTSIDER = "outsider"
    DISHONEST_BOB = "dishonest-bob"


@dataclass(frozen=True)
class AttackConfig:
    model: AttackModel
    n: int
    trials: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "model", AttackModel(self.model))
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")


@dataclass(frozen=True)
class AttackReport:
    model: AttackModel
    n: int
    trials: int
    detected: int
    xi_set: int
    empirical_rate: float
    wilson_lo: float
    wilson_hi: float
    paper_bound: float
    exact_rate: Optional[float] = None

    @property
    def wilson_se(self) -> float:
        return (self.wilson_hi - self.wilson_lo) / (2 * _Z95)

    def to_dict(self) -> dict:
        return {
            "model": self.model.value,
            "n": self.n,
            "trials": self.trials,
            "detected": self.detected,
            "empirical_rate": self.empirical_rate,
            "wilson_lo": self.wilson_lo,
            "wilson_hi": self.wilson_hi,
            "paper_bound": self.paper_bound,
            "exact_rate": self.exact_rate,
        }


@dataclass(frozen=True)
class EfficiencyReport:
    n: int
    b_s: int
    q_t: int
    b_t: int
    eta: Fraction

    def to_dict(self) -> dict:
        return {"n": self.n, "b_s": self.b_s, "q_t": self.q_t, "b_t": self.b_t,
                "eta": float(self.eta), "eta_exact": str(self.eta)}


@dataclass(frozen=True)
class MixingRow:
    m: int
    label: str
    distance: float

    def to_dict(self) -> dict:
        return {"m": self.m, "input": self.label, "trace_distance": self.distance}


def wilson_interval(k: int, trials: int) -> tuple[float, float]:
    ci = binomtest(k, trials).proportion_ci(confidence_level=CONFIDENCE, method="wilson")
    return float(ci.low), float(ci.high)


def paper_bound(n: int) -> Fraction:
    """``1 - 2^-(|K_a|+|A|)`` with ``|K_a| = 5n`` and ``|A| = n``."""
    return 1 - Fraction(1, 2 ** (ka_length(n) + n))


def _attack_trial(model: AttackModel, n: int, forged: MessageBits,
                  rng: RandomStream) -> tuple[bool, int]:
    sched = random_schedule(n, rng)
    ka_guess = rng.bits(ka_length(n))
    a_guess = rng.bits(n)
    # only the K_a and A parts of this schedule are read by alice_sign
    fake = derive_schedule(n, ka_guess, sched.kb, a_guess, sched.b_auth)
    s_forged = alice_sign(forged, fake)

    if model is AttackModel.OUTSIDER:
        # Eve poses as Alice; Bob verifies honestly
        result, _ = verify_signature(s_forged, sched, rng, signer="eve")
    else:
        # Bob forges and then asks the arbitrator to verify with his real K_b, B
        v = arbitrator_verify(bob_wrap(s_forged, sched), sched, rng)
        result = bob_finalize(v, sched, rng)
    return result.accepted, result.xi


def _attack_chunk(args) -> tuple[int, int]:
    model, n, seed, forged_bits, start, stop = args
    master = RandomStream(seed)
    forged = MessageBits(forged_bits)
    detected = xi_set = 0
    for t in range(start, stop):
        accepted, xi = _attack_trial(model, n, forged, master.spawn(t))
        detected += not accepted
        xi_set += xi
    return detected, xi_set


def run_attack(cfg: AttackConfig, message: Sequence[int] | None = None,
               workers: int = 1, with_exact: bool = False) -> AttackReport:
    """Monte Carlo forgery experiment.

    Trial ``t`` runs entirely on ``RandomStream(seed).spawn(t)``, so the
    aggregate counts do not depend on ``workers``. The forged message
    defaults to all zeros.
    """
    forged = tuple(message) if message is not None else (0,) * cfg.n
    if len(forged) != cfg.n:
        raise ValueError(f"forged message has {len(forged)} bits, n={cfg.n}")
    if workers <= 1:
        chunks = [(cfg.model, cfg.n, cfg.seed, forged, 0, cfg.trials)]
        results = [_attack_chunk(chunks[0])]
    else:
        edges = np.linspace(0, cfg.trials, workers + 1).astype(int)
        chunks = [(cfg.model, cfg.n, cfg.seed, forged, int(a), int(b))
                  for a, b in zip(edges[:-1], edges[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_attack_chunk, chunks))
    detected = sum(r[0] for r in results)
    xi_set = sum(r[1] for r in results)
    lo, hi = wilson_interval(detected, cfg.trials)
    exact = None
    if with_exact and cfg.n <= 2:
        exact = float(1 - exact_pass_probability(cfg.n, cfg.model, forged))
    return AttackReport(cfg.model, cfg.n, cfg.trials, detected, xi_set,
                        detected / cfg.trials, lo, hi, float(paper_bound(cfg.n)), exact)


# --- exact enumeration oracle (independent of qubit/keys/protocol code) ---

_I2 = np.eye(2, dtype=complex)
_PX = np.array([[0, 1], [1, 0]], dtype=complex)
_PZ = np.array([[1, 0], [0, -1]], dtype=complex)
_HAD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _ket(bit: int, diagonal: int) -> np.ndarray:
    v = np.zeros(2, dtype=complex)
    v[bit] = 1.0
    return _HAD @ v if diagonal else v


def _pad(x: int, z: int) -> np.ndarray:
    return (_PX if x else _I2) @ (_PZ if z else _I2)


def _born(state: np.ndarray, bit: int, diagonal: int) -> Fraction:
    p = abs(np.vdot(_ket(bit, diagonal), state)) ** 2
    # every branch weight in this protocol is dyadic
    return Fraction(p).limit_denominator(1 << 10)


def _key_space(n: int):
    """All ``(K_a, A)`` pairs of bit tuples for message length ``n``."""
    for bits in itertools.product((0, 1), repeat=ka_length(n) + n):
        yield bits[:ka_length(n)], bits[ka_length(n):]


def _conditional_pass(n: int, msg: Sequence[int], true_ka, true_a, true_kb_basis,
                      guesses: Iterable) -> Fraction:
    true_basis, true_otp = true_ka[:n], true_ka[n:]
    total = Fraction(0)
    count = 0
    for g_ka, g_a in guesses:
        count += 1
        g_basis, g_otp = g_ka[:n], g_ka[n:]
        plain = ([_ket(g_a[i] ^ msg[i], 0) for i in range(n)]
                 + [_ket(msg[i], g_basis[i]) for i in range(n)])
        # forger pads with the guessed key, arbitrator removes the true one
        decrypted = [_pad(true_otp[2 * j], true_otp[2 * j + 1]).conj().T
                     @ _pad(g_otp[2 * j], g_otp[2 * j + 1]) @ plain[j]
                     for j in range(2 * n)]
        m_tab = [[_born(decrypted[i], b, 0) for b in (0, 1)] for i in range(n)]
        r_tab = [[_born(decrypted[n + i], b, true_basis[i]) for b in (0, 1)] for i in range(n)]
        passed = Fraction(0)
        for m in itertools.product((0, 1), repeat=n):
            w_m = math.prod((m_tab[i][m[i]] for i in range(n)), start=Fraction(1))
            if not w_m:
                continue
            p = tuple(true_a[i] ^ m[i] for i in range(n))
            for r in itertools.product((0, 1), repeat=n):
                w_r = math.prod((r_tab[i][r[i]] for i in range(n)), start=Fraction(1))
                if not w_r or r != p:
                    continue  # gamma = 1
                # xi = 0 in both models: the authentication string B is genuine
                # Bob measures fresh encodings of p in the true kb basis
                bob = [_ket(p[i], true_kb_basis[i]) for i in range(n)]
                for seen in itertools.product((0, 1), repeat=n):
                    if seen != p:
                        continue
                    w_b = math.prod((_born(bob[i], seen[i], true_kb_basis[i]) for i in range(n)),
                                    start=Fraction(1))
                    passed += w_m * w_r * w_b
        total += passed
    return total / count


def exact_pass_probability(n: int, model: AttackModel = AttackModel.OUTSIDER,
                           message: Sequence[int] | None = None,
                           true_keys: tuple | None = None,
                           guesses: Iterable | None = None) -> Fraction:
    """Exact probability that a random-key forgery is accepted.

    With ``true_keys = (K_a, A, kb_basis)`` the result is conditional on
    those keys, enumerating all ``2^(6n)`` guesses (or the given
    ``guesses``) jointly across positions. Without it the result is averaged
    over uniform true keys; positions are independent (product states,
    independent uniform keys), so for ``n = 2`` the average is the product
    of exhaustive single-position averages.

    ``model`` does not change the value: both attackers face a genuine ``B``.
    """
    if not 1 <= n <= 2:
        raise SizeError(f"exact enumeration supports n in 1..2, got {n}")
    AttackModel(model)
    msg = tuple(message) if message is not None else (0,) * n
    if true_keys is not None:
        ka, a, kb_basis = true_keys
        pool = list(guesses) if guesses is not None else list(_key_space(n))
        return _conditional_pass(n, msg, tuple(ka), tuple(a), tuple(kb_basis), pool)
    if guesses is not None:
        raise ValueError("explicit guesses need explicit true_keys")
    result = Fraction(1)
    for bit in msg:
        cases = [(ka, a, (kb,)) for ka, a in _key_space(1) for kb in (0, 1)]
        pool = list(_key_space(1))
        result *= sum(_conditional_pass(1, (bit,), *case, pool) for case in cases) / len(cases)
    return result


_STATE_SYMBOLS = {"0": (0, Basis.RECTILINEAR), "1": (1, Basis.RECTILINEAR),
                  "+": (0, Basis.DIAGONAL), "-": (1, Basis.DIAGONAL)}

MIXING_BATTERY = {
    1: ("0", "+", "1", "-"),
    2: ("00", "++", "01", "+-"),
    3: ("000", "+++", "+-0", "01+"),
}


def mixing_report(max_m: int = MAX_DENSITY_QUBITS) -> list[MixingRow]:
    if not 1 <= max_m <= MAX_DENSITY_QUBITS:
        raise SizeError(f"max_m must be in 1..{MAX_DENSITY_QUBITS}, got {max_m}")
    rows = []
    for m in range(1, max_m + 1):
        for label in MIXING_BATTERY[m]:
            plain = [prepare(*_STATE_SYMBOLS[c]) for c in label]
            rows.append(MixingRow(m, label, verify_mixing(m, plain)))
    return rows


def efficiency(n: int, seed: int = 0) -> EfficiencyReport:
    """Signed bits over transmitted qubits plus classical bits, for one honest run."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    root = RandomStream(seed)
    sched = random_schedule(n, root.spawn(0))
    _, tr = run_session(MessageBits(root.spawn(1).bits(n)), sched, root.spawn(2))
    return EfficiencyReport(n, n, tr.q_t, tr.b_t, Fraction(n, tr.q_t + tr.b_t))
