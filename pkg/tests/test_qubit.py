import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsig.errors import SizeError
from qsig.qubit import (
    Basis,
    Qubit,
    apply_h,
    apply_x,
    apply_z,
    density_of,
    fidelity,
    measure,
    prepare,
    trace_distance,
)
from qsig.rng import RandomStream

S = 1 / math.sqrt(2)
SEEDS = [0, 1, 7, 42, 2026]

angles = st.tuples(st.floats(0, math.pi), st.floats(0, 2 * math.pi))


def bloch(theta, phi):
    return Qubit(math.cos(theta / 2), complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2))


def amps(q):
    return np.array([q.amp0, q.amp1])


class TestPrepare:
    def test_zero_rectilinear(self):
        np.testing.assert_allclose(amps(prepare(0, Basis.RECTILINEAR)), [1, 0], atol=1e-15)

    def test_one_rectilinear(self):
        np.testing.assert_allclose(amps(prepare(1, Basis.RECTILINEAR)), [0, 1], atol=1e-15)

    def test_zero_diagonal(self):
        np.testing.assert_allclose(amps(prepare(0, Basis.DIAGONAL)), [S, S], atol=1e-15)

    def test_one_diagonal_is_minus(self):
        np.testing.assert_allclose(amps(prepare(1, Basis.DIAGONAL)), [S, -S], atol=1e-15)

    @pytest.mark.parametrize("bit", [0, 1])
    @pytest.mark.parametrize("basis", list(Basis))
    def test_unit_norm(self, bit, basis):
        assert abs(prepare(bit, basis).norm - 1) < 1e-12

    def test_selector_bit_maps_to_basis(self):
        assert Basis(0) is Basis.RECTILINEAR
        assert Basis(1) is Basis.DIAGONAL

    def test_rejects_non_bit(self):
        with pytest.raises(ValueError):
            prepare(2, Basis.RECTILINEAR)

    def test_unnormalized_qubit_rejected(self):
        with pytest.raises(ValueError, match="normalized"):
            Qubit(1.0, 0.1)


class TestGates:
    def test_x_flips_zero(self):
        assert apply_x(prepare(0, Basis.RECTILINEAR)) == prepare(1, Basis.RECTILINEAR)

    def test_x_fixes_plus(self):
        plus = prepare(0, Basis.DIAGONAL)
        assert apply_x(plus) == plus

    def test_z_fixes_zero(self):
        zero = prepare(0, Basis.RECTILINEAR)
        assert apply_z(zero) == zero

    def test_z_maps_plus_to_minus(self):
        assert apply_z(prepare(0, Basis.DIAGONAL)) == prepare(1, Basis.DIAGONAL)

    def test_h_maps_zero_to_plus(self):
        np.testing.assert_allclose(amps(apply_h(prepare(0, Basis.RECTILINEAR))), [S, S], atol=1e-15)

    @given(angles)
    def test_involutions_exact(self, ang):
        q = bloch(*ang)
        for gate in (apply_x, apply_z):
            back = gate(gate(q))
            assert abs(back.amp0 - q.amp0) <= 1e-15
            assert abs(back.amp1 - q.amp1) <= 1e-15

    @given(angles, st.lists(st.sampled_from(["x", "z", "h"]), max_size=20))
    def test_norm_preserved(self, ang, ops):
        gates = {"x": apply_x, "z": apply_z, "h": apply_h}
        q = bloch(*ang)
        for op in ops:
            q = gates[op](q)
            assert abs(q.norm - 1) < 1e-12


class TestMeasure:
    @pytest.mark.parametrize("bit", [0, 1])
    @pytest.mark.parametrize("basis", list(Basis))
    @pytest.mark.parametrize("seed", SEEDS)
    def test_same_basis_is_deterministic(self, bit, basis, seed):
        rng = RandomStream(seed)
        for _ in range(200):
            assert measure(prepare(bit, basis), basis, rng) == bit

    def test_collapse_in_place(self):
        q = prepare(0, Basis.DIAGONAL)
        out = measure(q, Basis.RECTILINEAR, RandomStream(3))
        assert q == prepare(out, Basis.RECTILINEAR)

    def test_consumes_one_draw_even_when_deterministic(self):
        rng = RandomStream(11)
        measure(prepare(0, Basis.RECTILINEAR), Basis.RECTILINEAR, rng)
        measure(prepare(1, Basis.DIAGONAL), Basis.DIAGONAL, rng)
        assert rng.position == 2

    @pytest.mark.parametrize("seed", SEEDS)
    def test_born_statistics_plus_rectilinear(self, seed):
        rng = RandomStream(seed)
        trials = 100_000
        zeros = sum(measure(prepare(0, Basis.DIAGONAL), Basis.RECTILINEAR, rng) == 0
                    for _ in range(trials))
        assert 0.49 <= zeros / trials <= 0.51

    def test_reproducible(self):
        def run(seed):
            rng = RandomStream(seed)
            return [measure(prepare(0, Basis.DIAGONAL), Basis.RECTILINEAR, rng) for _ in range(500)]

        assert run(5) == run(5)
        assert run(5) != run(6)


class TestDensity:
    def test_zero(self):
        np.testing.assert_allclose(density_of([prepare(0, Basis.RECTILINEAR)]), [[1, 0], [0, 0]])

    def test_plus(self):
        np.testing.assert_allclose(density_of([prepare(0, Basis.DIAGONAL)]),
                                   [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_tensor_product_row_major(self):
        rho = density_of([prepare(0, Basis.RECTILINEAR), prepare(1, Basis.RECTILINEAR)])
        expected = np.zeros((4, 4))
        expected[1, 1] = 1
        np.testing.assert_allclose(rho, expected)

    @pytest.mark.parametrize("m", [0, 4])
    def test_size_limits(self, m):
        with pytest.raises(SizeError):
            density_of([prepare(0, Basis.RECTILINEAR)] * m)

    @settings(max_examples=50)
    @given(st.lists(angles, min_size=1, max_size=3))
    def test_valid_density_matrix(self, angs):
        rho = density_of([bloch(*a) for a in angs])
        np.testing.assert_allclose(rho, rho.conj().T, atol=1e-12)
        assert abs(np.trace(rho) - 1) < 1e-12
        assert np.linalg.eigvalsh(rho).min() >= -1e-12

    def test_trace_distance_orthogonal_states(self):
        a = density_of([prepare(0, Basis.RECTILINEAR)])
        b = density_of([prepare(1, Basis.RECTILINEAR)])
        assert trace_distance(a, b) == pytest.approx(1.0)


def test_fidelity_ignores_global_phase():
    q = prepare(1, Basis.DIAGONAL)
    assert fidelity(q, Qubit(-q.amp0, -q.amp1)) == pytest.approx(1.0, abs=1e-12)


def test_serialization_round_trip():
    q = bloch(1.1, 2.3)
    assert Qubit.from_floats(q.to_floats()) == q


class TestRandomStream:
    def test_same_seed_same_draws(self):
        a, b = RandomStream(123), RandomStream(123)
        assert [a.uniform() for _ in range(1000)] == [b.uniform() for _ in range(1000)]

    def test_block_refill_matches_scalar_generator(self):
        rng = RandomStream(9)
        ref = np.random.Generator(np.random.PCG64(9))
        assert [rng.uniform() for _ in range(600)] == ref.random(600).tolist()

    def test_bits_consume_one_draw_each(self):
        a, b = RandomStream(4), RandomStream(4)
        assert a.bits(700) == tuple(b.bit() for _ in range(700))
        assert a.position == b.position == 700

    def test_spawn_independent_of_parent_position(self):
        a, b = RandomStream(8), RandomStream(8)
        b.bits(50)
        assert a.spawn(3).bits(64) == b.spawn(3).bits(64)
        assert a.spawn(3).bits(64) != a.spawn(4).bits(64)

    def test_sample_distinct(self):
        picked = RandomStream(2).sample(100, 40)
        assert len(set(picked)) == 40 and all(0 <= i < 100 for i in picked)

    def test_seed_range(self):
        with pytest.raises(ValueError):
            RandomStream(-1)
