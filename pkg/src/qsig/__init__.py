"""Simulator for an arbitrated quantum signature scheme built on single photons.

Alice signs a classical message with a Pauli one-time pad over BB84-encoded
qubits; Bob verifies with the help of an arbitrator who shares keys with both.
"""

from .errors import (
    FormatError,
    KeyLengthError,
    KeyReuseError,
    ProvisioningError,
    QsigError,
    SizeError,
    UnderflowError,
)
from .keys import KeySchedule, derive_schedule, random_schedule
from .protocol import (
    MessageBits,
    Verdict,
    VerificationResult,
    alice_sign,
    arbitrator_verify,
    bob_finalize,
    bob_wrap,
    resolve_dispute,
    run_session,
)
from .qubit import Basis, Qubit
from .rng import RandomStream

__version__ = "0.1.0"
