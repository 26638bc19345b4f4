"""Three-party signing and verification flow.

Message sequence for one session (no retries; a lost message ends it)::

    Alice ──S──▶ Bob ──N──▶ Arbitrator ──V──▶ Bob

``S`` carries the encrypted message and signature qubits, ``N`` wraps ``S``
with Bob's authentication string, and ``V`` returns the verdict bits, the
recovered message under Bob's pad, fresh check qubits for Bob, and ``S``.

The message is classical: each bit is carried as a computational-basis
qubit, which is what lets the arbitrator read it back by a rectilinear
measurement. Signing arbitrary unknown quantum states is not supported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from .errors import FormatError
from .keys import (
    CLASSICAL,
    QUBIT,
    BitString,
    Envelope,
    KeySchedule,
    decrypt_envelope,
    derive_schedule,
    encrypt_envelope,
    format_bits,
    parse_bits,
    qotp_decrypt,
    qotp_encrypt,
    xor_bits,
    xor_pad,
)
from .qkd import provision_keys
from .qubit import Basis, measure, prepare
from .rng import RandomStream

ALICE = "alice"
BOB = "bob"
ARBITRATOR = "arbitrator"
# the arbitrator's audit view of K_a, used when settling a dispute
AUDIT = "arbitrator-audit"


@dataclass(frozen=True)
class MessageBits:
    bits: BitString

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise ValueError("message must contain at least one bit")
        if any(b not in (0, 1) for b in bits):
            raise ValueError(f"message bits must be 0 or 1: {bits}")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def from_str(cls, text: str) -> MessageBits:
        return cls(parse_bits(text))

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return format_bits(self.bits)


def _message(p) -> MessageBits:
    return p if isinstance(p, MessageBits) else MessageBits(tuple(p))


def s_layout(n: int):
    return (("M", QUBIT, n), ("R", QUBIT, n))


def n_layout(n: int):
    return (("S", QUBIT, 2 * n), ("B", CLASSICAL, n))


def v_layout(n: int):
    return (("gamma", CLASSICAL, 1), ("xi", CLASSICAL, 1), ("U", CLASSICAL, n),
            ("R_b'", QUBIT, n), ("S", QUBIT, 2 * n))


@dataclass
class SignaturePackage:
    envelope: Envelope


@dataclass
class VerifyRequest:
    envelope: Envelope


@dataclass
class VerifyResponse:
    envelope: Envelope


@dataclass(frozen=True)
class VerificationResult:
    gamma: int
    xi: int
    bob_match: bool
    accepted: bool
    recovered: Optional[BitString]

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "xi": self.xi,
            "accepted": self.accepted,
            "recovered": None if self.recovered is None else format_bits(self.recovered),
        }


class Verdict(str, Enum):
    SIGNED_BY_ALICE = "SignedByAlice"
    FORGED = "Forged"


@dataclass(frozen=True)
class TranscriptMessage:
    sender: str
    receiver: str
    label: str
    qubit_count: int
    cbit_count: int
    envelope: Envelope

    @property
    def payload(self) -> dict:
        return self.envelope.to_dict()

    def to_dict(self) -> dict:
        return {"from": self.sender, "to": self.receiver, "label": self.label,
                "qubits": self.qubit_count, "cbits": self.cbit_count,
                "payload": self.payload}


@dataclass
class Transcript:
    """Append-only message log with running qubit and classical-bit totals."""

    messages: list[TranscriptMessage] = field(default_factory=list)
    q_t: int = 0
    b_t: int = 0

    def record(self, sender: str, receiver: str, label: str, env: Envelope) -> None:
        # envelopes are never mutated after delivery; serialization is deferred
        self.messages.append(TranscriptMessage(sender, receiver, label, env.qubit_count,
                                               env.cbit_count, env))
        self.q_t += env.qubit_count
        self.b_t += env.cbit_count


def alice_sign(p, sched: KeySchedule) -> SignaturePackage:
    """Encode the message twice and encrypt both strings under ``ka_otp``.

    ``M_i = |A_i ⊕ p_i⟩`` in the rectilinear basis and ``R_i`` is ``p_i``
    encoded in the basis picked by ``ka_basis_i``.
    """
    p = _message(p)
    if len(p) != sched.n:
        raise FormatError(f"message has {len(p)} bits, schedule is for n={sched.n}")
    m = [prepare(a ^ b, Basis.RECTILINEAR) for a, b in zip(sched.a_auth, p.bits)]
    r = [prepare(b, Basis(k)) for b, k in zip(p.bits, sched.ka_basis)]
    s = qotp_encrypt(m + r, sched.segment("ka_otp", ALICE))
    n = sched.n
    return SignaturePackage(Envelope.build([("M", QUBIT, s[:n]), ("R", QUBIT, s[n:])]))


def bob_wrap(s: SignaturePackage, sched: KeySchedule) -> VerifyRequest:
    """Forward ``S`` unmeasured under ``kb_otp_n`` together with ``B ⊕ kb_pad_b``."""
    s.envelope.expect(s_layout(sched.n))
    qubits = qotp_encrypt(s.envelope.qubits, sched.segment("kb_otp_n", BOB))
    cbits = xor_pad(sched.b_auth, sched.segment("kb_pad_b", BOB))
    return VerifyRequest(Envelope.build([("S", QUBIT, qubits), ("B", CLASSICAL, cbits)]))


def arbitrator_verify(nreq: VerifyRequest, sched: KeySchedule,
                      rng: RandomStream) -> VerifyResponse:
    """Check the signature and build Bob's response.

    Consumes exactly ``2n`` draws: every ``M`` qubit, then every ``R`` qubit,
    in index order, with no early exit.
    """
    n = sched.n
    nreq.envelope.expect(n_layout(n))
    inner = decrypt_envelope(nreq.envelope, sched.segment("kb_otp_n", ARBITRATOR),
                             sched.segment("kb_pad_b", ARBITRATOR))
    b_prime = inner.get("B")
    mr = qotp_decrypt(inner.get("S"), sched.segment("ka_otp", ARBITRATOR))
    m_q, r_q = mr[:n], mr[n:]

    m = [measure(q, Basis.RECTILINEAR, rng) for q in m_q]
    p = xor_bits(sched.a_auth, m)
    r_seen = tuple(measure(q, Basis(k), rng) for q, k in zip(r_q, sched.ka_basis))
    gamma = 0 if r_seen == p else 1
    xi = 0 if b_prime == sched.b_auth else 1

    r_b = [prepare(b, Basis(k)) for b, k in zip(p, sched.kb_basis)]
    u = xor_bits(sched.b_auth, p)
    # same K_a pad again: restores the ciphertext of S (pad reuse inherited from the flow)
    s_again = qotp_encrypt(m_q + r_q, sched.segment("ka_otp", ARBITRATOR))
    v = Envelope.build([
        ("gamma", CLASSICAL, (gamma,)),
        ("xi", CLASSICAL, (xi,)),
        ("U", CLASSICAL, u),
        ("R_b'", QUBIT, r_b),
        ("S", QUBIT, s_again),
    ])
    return VerifyResponse(encrypt_envelope(v, sched.segment("kb_otp_v", ARBITRATOR),
                                           sched.segment("kb_pad_v", ARBITRATOR)))


def bob_finalize(v: VerifyResponse, sched: KeySchedule,
                 rng: RandomStream) -> VerificationResult:
    """Decrypt ``V`` and run Bob's own comparison.

    If either verdict bit is set Bob rejects without measuring anything.
    """
    n = sched.n
    v.envelope.expect(v_layout(n))
    plain = decrypt_envelope(v.envelope, sched.segment("kb_otp_v", BOB),
                             sched.segment("kb_pad_v", BOB))
    (gamma,), (xi,) = plain.get("gamma"), plain.get("xi")
    if gamma or xi:
        return VerificationResult(gamma, xi, False, False, None)
    p = xor_bits(sched.b_auth, plain.get("U"))
    seen = tuple(measure(q, Basis(k), rng) for q, k in zip(plain.get("R_b'"), sched.kb_basis))
    match = seen == p
    return VerificationResult(gamma, xi, match, match, p if match else None)


Channel = Callable[[str, Envelope], Envelope]


def run_session(p, sched: KeySchedule, rng: RandomStream,
                channel: Channel | None = None) -> tuple[VerificationResult, Transcript]:
    """Sign and verify one message.

    ``channel``, if given, sees every envelope in transit as
    ``channel(label, envelope)`` and returns what gets delivered. The
    transcript records delivered envelopes.
    """
    return verify_signature(alice_sign(p, sched), sched, rng, channel)


def verify_signature(s: SignaturePackage, sched: KeySchedule, rng: RandomStream,
                     channel: Channel | None = None,
                     signer: str = ALICE) -> tuple[VerificationResult, Transcript]:
    """Deliver ``S`` from ``signer`` to Bob and run the verification phase."""
    deliver = channel or (lambda label, env: env)
    tr = Transcript()

    s = SignaturePackage(deliver("S", s.envelope))
    tr.record(signer, BOB, "S", s.envelope)
    nreq = VerifyRequest(deliver("N", bob_wrap(s, sched).envelope))
    tr.record(BOB, ARBITRATOR, "N", nreq.envelope)
    v = VerifyResponse(deliver("V", arbitrator_verify(nreq, sched, rng).envelope))
    tr.record(ARBITRATOR, BOB, "V", v.envelope)
    return bob_finalize(v, sched, rng), tr


def resolve_dispute(s: SignaturePackage, sched: KeySchedule, rng: RandomStream) -> Verdict:
    """Decide whether ``S`` was produced with Alice's keys."""
    n = sched.n
    s.envelope.expect(s_layout(n))
    mr = qotp_decrypt(s.envelope.qubits, sched.segment("ka_otp", AUDIT))
    m = [measure(q, Basis.RECTILINEAR, rng) for q in mr[:n]]
    p = xor_bits(sched.a_auth, m)
    seen = tuple(measure(q, Basis(k), rng) for q, k in zip(mr[n:], sched.ka_basis))
    return Verdict.SIGNED_BY_ALICE if seen == p else Verdict.FORGED


def transcript_document(n: int, seed: int, message: Iterable[int], tr: Transcript,
                        result: VerificationResult, keys: dict | None = None) -> dict:
    """JSON-ready transcript file contents (schema 1)."""
    doc = {
        "schema": 1,
        "n": n,
        "seed": seed,
        "message": format_bits(message),
        "messages": [m.to_dict() for m in tr.messages],
        "q_t": tr.q_t,
        "b_t": tr.b_t,
        "result": result.to_dict(),
    }
    if keys is not None:
        doc["keys"] = keys
    return doc


@dataclass
class SeededSession:
    message: MessageBits
    schedule: KeySchedule
    result: VerificationResult
    transcript: Transcript


def seeded_session(n: int, seed: int, message=None,
                   sched: KeySchedule | None = None) -> SeededSession:
    """Run a fully seeded honest session.

    Sub-streams of ``seed``: 0 provisions keys over BB84 (skipped when
    ``sched`` is given), 1 draws the message (skipped when ``message`` is
    given), 2 drives the session's measurements.
    """
    root = RandomStream(seed)
    if sched is None:
        sched = derive_schedule(n, *provision_keys(n, root.spawn(0)))
    p = _message(message) if message is not None else MessageBits(root.spawn(1).bits(n))
    result, tr = run_session(p, sched, root.spawn(2))
    return SeededSession(p, sched, result, tr)


_ENVELOPE_SCHEMA = {
    "type": "object",
    "required": ["labels", "qubits", "cbits"],
    "properties": {
        "labels": {"type": "array", "items": {
            "type": "object",
            "required": ["name", "offset", "length", "kind"],
            "properties": {
                "name": {"type": "string"},
                "offset": {"type": "integer", "minimum": 0},
                "length": {"type": "integer", "minimum": 0},
                "kind": {"enum": [QUBIT, CLASSICAL]},
            },
        }},
        "qubits": {"type": "array", "items": {
            "type": "array", "items": {"type": "number"}, "minItems": 4, "maxItems": 4}},
        "cbits": {"type": "string", "pattern": "^[01]*$"},
    },
}

TRANSCRIPT_SCHEMA = {
    "type": "object",
    "required": ["schema", "n", "seed", "message", "messages", "q_t", "b_t", "result"],
    "properties": {
        "schema": {"const": 1},
        "n": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "message": {"type": "string", "pattern": "^[01]+$"},
        "messages": {"type": "array", "items": {
            "type": "object",
            "required": ["from", "to", "label", "qubits", "cbits", "payload"],
            "properties": {
                "from": {"type": "string"},
                "to": {"type": "string"},
                "label": {"type": "string"},
                "qubits": {"type": "integer", "minimum": 0},
                "cbits": {"type": "integer", "minimum": 0},
                "payload": _ENVELOPE_SCHEMA,
            },
        }},
        "q_t": {"type": "integer", "minimum": 0},
        "b_t": {"type": "integer", "minimum": 0},
        "result": {
            "type": "object",
            "required": ["gamma", "xi", "accepted", "recovered"],
            "properties": {
                "gamma": {"enum": [0, 1]},
                "xi": {"enum": [0, 1]},
                "accepted": {"type": "boolean"},
                "recovered": {"type": ["string", "null"]},
            },
        },
        "keys": {
            "type": "object",
            "required": ["n", "ka", "kb", "a", "b"],
        },
    },
}
