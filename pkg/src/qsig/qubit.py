"""Single-qubit statevector simulation.

States are stored as two Python complex amplitudes; that is all a single
photon in this protocol ever needs, and it keeps the per-qubit cost of the
Monte Carlo experiments low. Small density matrices (up to three qubits) are
built with numpy for the ciphertext-mixing checks.

Polarization convention::

    |→⟩ = |0⟩   |↑⟩ = |1⟩   |↗⟩ = |+⟩   |↘⟩ = |−⟩
"""

from __future__ import annotations

import math
from enum import IntEnum
from typing import Sequence

import numpy as np

from .errors import SizeError
from .rng import RandomStream

NORM_TOL = 1e-12
MAX_DENSITY_QUBITS = 3

_S = math.sqrt(0.5)


class Basis(IntEnum):
    """Measurement basis; the integer value is the key bit that selects it."""

    RECTILINEAR = 0
    DIAGONAL = 1


class Qubit:
    """Normalized pure state ``amp0|0⟩ + amp1|1⟩``.

    Gates return new objects. :func:`measure` is the only operation that
    mutates a qubit (collapse in place).
    """

    __slots__ = ("amp0", "amp1")

    def __init__(self, amp0: complex, amp1: complex):
        amp0, amp1 = complex(amp0), complex(amp1)
        norm = abs(amp0) ** 2 + abs(amp1) ** 2
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"qubit not normalized: |a0|^2+|a1|^2 = {norm!r}")
        self.amp0 = amp0
        self.amp1 = amp1

    @property
    def norm(self) -> float:
        return abs(self.amp0) ** 2 + abs(self.amp1) ** 2

    def vector(self) -> np.ndarray:
        return np.array([self.amp0, self.amp1], dtype=complex)

    @classmethod
    def _trusted(cls, amp0: complex, amp1: complex) -> Qubit:
        # skips the norm check; only for results of norm-preserving operations
        q = object.__new__(cls)
        q.amp0 = amp0
        q.amp1 = amp1
        return q

    def copy(self) -> Qubit:
        return Qubit._trusted(self.amp0, self.amp1)

    def to_floats(self) -> list[float]:
        """``[re0, im0, re1, im1]``, rounded to 17 significant digits."""
        return [float(f"{x:.17g}") for x in
                (self.amp0.real, self.amp0.imag, self.amp1.real, self.amp1.imag)]

    @classmethod
    def from_floats(cls, values: Sequence[float]) -> Qubit:
        if len(values) != 4:
            raise ValueError(f"expected 4 floats, got {len(values)}")
        re0, im0, re1, im1 = (float(v) for v in values)
        return cls(complex(re0, im0), complex(re1, im1))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Qubit):
            return NotImplemented
        return self.amp0 == other.amp0 and self.amp1 == other.amp1

    def __repr__(self) -> str:
        return f"Qubit({self.amp0!r}, {self.amp1!r})"


def prepare(bit: int, basis: Basis) -> Qubit:
    """BB84 encoding of ``bit`` in ``basis``."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    if basis == Basis.RECTILINEAR:
        return Qubit._trusted(1 + 0j, 0j) if bit == 0 else Qubit._trusted(0j, 1 + 0j)
    return Qubit._trusted(_S + 0j, _S + 0j) if bit == 0 else Qubit._trusted(_S + 0j, -_S + 0j)


def apply_x(q: Qubit) -> Qubit:
    return Qubit._trusted(q.amp1, q.amp0)


def apply_z(q: Qubit) -> Qubit:
    return Qubit._trusted(q.amp0, -q.amp1)


def apply_h(q: Qubit) -> Qubit:
    return Qubit(_S * (q.amp0 + q.amp1), _S * (q.amp0 - q.amp1))


def prob_zero(q: Qubit, basis: Basis) -> float:
    """Born probability of outcome 0 when measuring ``q`` in ``basis``.

    Values within ``NORM_TOL`` of 0 or 1 are snapped, so that measuring an
    eigenstate of the basis is exactly deterministic despite 1/√2 rounding.
    """
    if basis == Basis.RECTILINEAR:
        p = abs(q.amp0) ** 2
    else:
        p = abs(q.amp0 + q.amp1) ** 2 / 2.0
    if p < NORM_TOL:
        return 0.0
    if p > 1.0 - NORM_TOL:
        return 1.0
    return p


def measure(q: Qubit, basis: Basis, rng: RandomStream) -> int:
    """Projective measurement; collapses ``q`` in place.

    Always consumes exactly one draw from ``rng``, including for eigenstates.
    """
    outcome = 0 if rng.uniform() < prob_zero(q, basis) else 1
    post = prepare(outcome, basis)
    q.amp0, q.amp1 = post.amp0, post.amp1
    return outcome


def fidelity(a: Qubit, b: Qubit) -> float:
    """``|⟨a|b⟩|²``; insensitive to global phase."""
    return abs(a.amp0.conjugate() * b.amp0 + a.amp1.conjugate() * b.amp1) ** 2


def density_of(qubits: Sequence[Qubit]) -> np.ndarray:
    """Density matrix of the product state ``q0 ⊗ q1 ⊗ ...`` (row-major)."""
    m = len(qubits)
    if not 1 <= m <= MAX_DENSITY_QUBITS:
        raise SizeError(f"density matrices support 1..{MAX_DENSITY_QUBITS} qubits, got {m}")
    psi = qubits[0].vector()
    for q in qubits[1:]:
        psi = np.kron(psi, q.vector())
    return np.outer(psi, psi.conj())


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the sum of the absolute eigenvalues of ``rho - sigma``."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(rho - sigma))))
