"""Acceptance criteria, one test each, at their stated tolerances and runtime limits.

Run alone with ``pytest tests/test_acceptance.py``; the terminal summary
prints one PASS/FAIL line per criterion.
"""

import json
import math
from fractions import Fraction
from pathlib import Path

import pytest

from qsig.analysis import (
    AttackConfig,
    efficiency,
    exact_pass_probability,
    mixing_report,
    paper_bound,
    run_attack,
)
from qsig.cli import main
from qsig.errors import KeyReuseError
from qsig.keys import Segment, qotp_decrypt, qotp_encrypt, random_schedule, xor_pad
from qsig.protocol import alice_sign, run_session, seeded_session, transcript_document
from qsig.qkd import QBER_THRESHOLD, Eve, QkdSessionConfig, run_bb84
from qsig.qubit import Qubit, fidelity
from qsig.rng import RandomStream

GOLDEN = Path(__file__).parent / "golden"


def test_c1_qotp_mixing(criterion):
    with criterion("C1 QOTP mixing, trace distance < 1e-10 for m in 1..3", limit=1):
        rows = mixing_report(3)
        assert {r.m for r in rows} == {1, 2, 3}
        worst = max(r.distance for r in rows)
        assert worst < 1e-10, worst


def test_c2_completeness(criterion):
    with criterion("C2 completeness, 1000 honest sessions n in 1..32", limit=10):
        master = RandomStream(20261015)
        for t in range(1000):
            rng = master.spawn(t)
            n = 1 + t % 32
            p = rng.bits(n)
            res, _ = run_session(p, random_schedule(n, rng), rng)
            assert res.accepted and res.recovered == p, (t, n)


def test_c3_efficiency(criterion):
    with criterion("C3 efficiency eta(n) = n/(9n+2)", limit=1):
        for n in (1, 2, 10, 100, 1000):
            rep = efficiency(n)
            assert rep.eta == Fraction(n, 9 * n + 2)
        assert f"{float(efficiency(100).eta):.5f}" == "0.11086"
        assert round(1 / 9, 2) == 0.11


def test_c4_theorem1_quantification(criterion):
    with criterion("C4 exact oracle vs 10^5-trial Monte Carlo at n=1", limit=30):
        pass_prob = exact_pass_probability(1)
        assert pass_prob >= Fraction(1, 2 ** 6)
        rep = run_attack(AttackConfig("outsider", 1, 100_000, 7))
        exact_detect = float(1 - pass_prob)
        gap = abs(rep.empirical_rate - exact_detect)
        print(f"exact detection {exact_detect}, empirical {rep.empirical_rate:.5f} "
              f"[{rep.wilson_lo:.5f}, {rep.wilson_hi:.5f}], paper bound {rep.paper_bound}")
        assert rep.paper_bound == float(paper_bound(1)) == 0.984375
        assert gap <= 3 * rep.wilson_se, (gap, rep.wilson_se)


def test_c5_detection_trend(criterion):
    with criterion("C5 detection non-decreasing over n in {1,2,4,8}", limit=60):
        reports = [run_attack(AttackConfig("outsider", n, 10_000, 100 + n)) for n in (1, 2, 4, 8)]
        for prev, cur in zip(reports, reports[1:]):
            overlap = cur.wilson_hi >= prev.wilson_lo
            assert cur.empirical_rate >= prev.empirical_rate or overlap, (prev, cur)


def test_c6_bb84(criterion):
    with criterion("C6 BB84 noiseless identity and intercept-resend abort", limit=5):
        for seed in range(3):
            clean = run_bb84(QkdSessionConfig(20_000), RandomStream(seed))
            assert clean.key_sender == clean.key_receiver and clean.qber == 0
            assert not clean.aborted
        for seed in range(3):
            res = run_bb84(QkdSessionConfig(21_000, Eve.INTERCEPT_RESEND), RandomStream(seed))
            assert res.sifted_len >= 10_000
            assert 0.23 <= res.qber <= 0.27, res.qber
            assert res.qber > QBER_THRESHOLD and res.aborted


def test_c7_determinism(criterion):
    with criterion("C7 determinism and golden replay", limit=5):
        docs = []
        for _ in range(2):
            s = seeded_session(8, 2026)
            docs.append(json.dumps(transcript_document(8, 2026, s.message.bits,
                                                       s.transcript, s.result)))
        assert docs[0] == docs[1]
        cfg = AttackConfig("dishonest-bob", 3, 300, 11)
        assert run_attack(cfg) == run_attack(cfg)
        golden = sorted(p for p in GOLDEN.glob("*.json") if p.name != "keys_n3.json")
        assert len(golden) >= 3
        for path in golden:
            assert main(["replay", str(path)]) == 0, path


def _random_qubit(rng: RandomStream) -> Qubit:
    theta, phi = math.acos(1 - 2 * rng.uniform()), 2 * math.pi * rng.uniform()
    return Qubit(math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2))


def test_c8_crypto_round_trips(criterion):
    with criterion("C8 crypto round trips and one-time discipline"):
        rng = RandomStream(8)
        for _ in range(1000):
            q = _random_qubit(rng)
            key = rng.bits(2)
            (back,) = qotp_decrypt(qotp_encrypt([q], key), key)
            assert fidelity(q, back) == pytest.approx(1, abs=1e-12)
        for _ in range(1000):
            k = 1 + rng.below(256)
            bits, pad = rng.bits(k), rng.bits(k)
            assert xor_pad(xor_pad(bits, pad), pad, decrypt=True) == bits

        raised = attempts = 0
        for _ in range(100):
            seg = Segment(rng.bits(4))
            qotp_encrypt([_random_qubit(rng)] * 2, seg)
            attempts += 1
            try:
                qotp_encrypt([_random_qubit(rng)] * 2, seg)
            except KeyReuseError:
                raised += 1
            seg = Segment(rng.bits(8))
            xor_pad(rng.bits(8), seg)
            attempts += 1
            try:
                xor_pad(rng.bits(8), seg)
            except KeyReuseError:
                raised += 1
            sched = random_schedule(2, rng)
            alice_sign(rng.bits(2), sched)
            attempts += 1
            try:
                alice_sign(rng.bits(2), sched)
            except KeyReuseError:
                raised += 1
        assert raised == attempts == 300
