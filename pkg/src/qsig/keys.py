"""Key material, one-time pads and message envelopes.

Key layout (consecutive slices of the distributed strings, excess discarded)::

    K_a = ka_basis[n] | ka_otp[4n]                                    5n bits
    K_b = kb_basis[n] | kb_otp_n[4n] | kb_pad_b[n] | kb_otp_v[6n] | kb_pad_v[n+2]
                                                                      13n+2 bits
    A   = a_auth[n]
    B   = b_auth[n]

Quantum payloads are protected by a Pauli pad: qubit ``i`` uses the key pair
``(x, z) = (seg[2i], seg[2i+1])`` and is encrypted as ``X^x Z^z``. Classical
payloads are XOR-padded. Every pad segment may be used at most once per
direction by each holder (see :class:`Segment`).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import FormatError, KeyLengthError, KeyReuseError, SizeError
from .qubit import MAX_DENSITY_QUBITS, Qubit, apply_x, apply_z, density_of, trace_distance
from .rng import RandomStream

BitString = tuple[int, ...]

KA_SEGMENTS = ("ka_basis", "ka_otp")
KB_SEGMENTS = ("kb_basis", "kb_otp_n", "kb_pad_b", "kb_otp_v", "kb_pad_v")
PAD_SEGMENTS = frozenset({"ka_otp", "kb_otp_n", "kb_pad_b", "kb_otp_v", "kb_pad_v"})


def segment_lengths(n: int) -> dict[str, int]:
    return {
        "ka_basis": n,
        "ka_otp": 4 * n,
        "kb_basis": n,
        "kb_otp_n": 4 * n,
        "kb_pad_b": n,
        "kb_otp_v": 6 * n,
        "kb_pad_v": n + 2,
    }


def ka_length(n: int) -> int:
    return 5 * n


def kb_length(n: int) -> int:
    return 13 * n + 2


def parse_bits(text: str) -> BitString:
    if any(c not in "01" for c in text):
        raise ValueError(f"bit string may only contain '0' and '1': {text!r}")
    return tuple(int(c) for c in text)


def format_bits(bits: Iterable[int]) -> str:
    return "".join(str(b) for b in bits)


def _bit_tuple(bits: Iterable[int]) -> BitString:
    return bits if type(bits) is tuple else tuple(int(b) for b in bits)


def xor_bits(a: Sequence[int], b: Sequence[int]) -> BitString:
    if len(a) != len(b):
        raise KeyLengthError(f"xor of unequal lengths {len(a)} and {len(b)}")
    return tuple(x ^ y for x, y in zip(a, b))


class Segment:
    """One holder's view of a one-time key segment.

    Encryption and decryption are tracked separately: the same pad is
    legitimately applied once by the sender and once by the receiver, each
    through their own view.
    """

    __slots__ = ("name", "bits", "encrypted", "decrypted")

    def __init__(self, bits: Iterable[int], name: str = "pad"):
        self.name = name
        self.bits: BitString = _bit_tuple(bits)
        self.encrypted = False
        self.decrypted = False

    def claim(self, decrypt: bool) -> BitString:
        if decrypt:
            if self.decrypted:
                raise KeyReuseError(f"segment {self.name!r} already used to decrypt")
            self.decrypted = True
        else:
            if self.encrypted:
                raise KeyReuseError(f"segment {self.name!r} already used to encrypt")
            self.encrypted = True
        return self.bits

    @property
    def consumed(self) -> bool:
        return self.encrypted

    def __len__(self) -> int:
        return len(self.bits)

    def __repr__(self) -> str:
        return (f"Segment({self.name!r}, {format_bits(self.bits)!r}, "
                f"encrypted={self.encrypted}, decrypted={self.decrypted})")


SegmentLike = Union[Segment, Sequence[int]]


def _as_segment(seg: SegmentLike) -> Segment:
    return seg if isinstance(seg, Segment) else Segment(seg)


@dataclass
class KeySchedule:
    """Partitioned key material for one signing session.

    Basis and authentication strings are plain reference data. Pad segments
    are handed out per holder through :meth:`segment`, which enforces the
    one-time discipline.
    """

    n: int
    ka_basis: BitString
    ka_otp: BitString
    kb_basis: BitString
    kb_otp_n: BitString
    kb_pad_b: BitString
    kb_otp_v: BitString
    kb_pad_v: BitString
    a_auth: BitString
    b_auth: BitString
    _views: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def segment(self, name: str, holder: str) -> Segment:
        if name not in PAD_SEGMENTS:
            raise KeyError(f"{name!r} is not a pad segment")
        key = (name, holder)
        if key not in self._views:
            self._views[key] = Segment(getattr(self, name), name=f"{name}@{holder}")
        return self._views[key]

    @property
    def ka(self) -> BitString:
        return self.ka_basis + self.ka_otp

    @property
    def kb(self) -> BitString:
        return (self.kb_basis + self.kb_otp_n + self.kb_pad_b
                + self.kb_otp_v + self.kb_pad_v)

    def to_material(self) -> dict:
        """Key material record: ``{n, ka, kb, a, b}`` as '0'/'1' strings."""
        return {
            "n": self.n,
            "ka": format_bits(self.ka),
            "kb": format_bits(self.kb),
            "a": format_bits(self.a_auth),
            "b": format_bits(self.b_auth),
        }


def derive_schedule(n: int, raw_ka: Sequence[int], raw_kb: Sequence[int],
                    raw_a: Sequence[int], raw_b: Sequence[int]) -> KeySchedule:
    """Slice raw key strings into a :class:`KeySchedule`.

    Raises
    ------
    KeyLengthError
        If any input is shorter than required; the message names it.
    """
    if n < 1:
        raise ValueError(f"message length must be >= 1, got {n}")
    need = {"ka": ka_length(n), "kb": kb_length(n), "a": n, "b": n}
    given = {"ka": raw_ka, "kb": raw_kb, "a": raw_a, "b": raw_b}
    for name, k in need.items():
        if len(given[name]) < k:
            raise KeyLengthError(
                f"key string {name!r} has {len(given[name])} bits, needs {k} for n={n}")
    lengths = segment_lengths(n)
    parts: dict[str, BitString] = {}
    for source, names in (("ka", KA_SEGMENTS), ("kb", KB_SEGMENTS)):
        bits = _bit_tuple(given[source])
        pos = 0
        for name in names:
            parts[name] = bits[pos:pos + lengths[name]]
            pos += lengths[name]
    return KeySchedule(n=n, a_auth=_bit_tuple(raw_a)[:n], b_auth=_bit_tuple(raw_b)[:n], **parts)


def random_schedule(n: int, rng: RandomStream) -> KeySchedule:
    """Schedule from uniform bits drawn directly from ``rng``.

    Stands in for noiseless QKD output when thousands of schedules are needed.
    """
    return derive_schedule(n, rng.bits(ka_length(n)), rng.bits(kb_length(n)),
                           rng.bits(n), rng.bits(n))


def load_key_material(path: str | Path) -> KeySchedule:
    with open(path) as fh:
        data = json.load(fh)
    try:
        n = int(data["n"])
        strings = [parse_bits(data[k]) for k in ("ka", "kb", "a", "b")]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad key material file {path}: {exc}") from exc
    return derive_schedule(n, *strings)


def dump_key_material(sched: KeySchedule, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(sched.to_material(), fh, indent=2)
        fh.write("\n")


def qotp_encrypt(qubits: Sequence[Qubit], otp_segment: SegmentLike) -> list[Qubit]:
    """Pauli one-time pad: qubit ``i`` becomes ``X^x Z^z |q⟩``."""
    seg = _as_segment(otp_segment)
    if len(seg) != 2 * len(qubits):
        raise KeyLengthError(
            f"pad {seg.name!r} has {len(seg)} bits for {len(qubits)} qubits")
    bits = seg.claim(decrypt=False)
    out = []
    for i, q in enumerate(qubits):
        if bits[2 * i + 1]:
            q = apply_z(q)
        if bits[2 * i]:
            q = apply_x(q)
        out.append(q.copy())
    return out


def qotp_decrypt(qubits: Sequence[Qubit], otp_segment: SegmentLike) -> list[Qubit]:
    """Inverse of :func:`qotp_encrypt` (X first, then Z)."""
    seg = _as_segment(otp_segment)
    if len(seg) != 2 * len(qubits):
        raise KeyLengthError(
            f"pad {seg.name!r} has {len(seg)} bits for {len(qubits)} qubits")
    bits = seg.claim(decrypt=True)
    out = []
    for i, q in enumerate(qubits):
        if bits[2 * i]:
            q = apply_x(q)
        if bits[2 * i + 1]:
            q = apply_z(q)
        out.append(q.copy())
    return out


def xor_pad(bits: Sequence[int], pad_segment: SegmentLike, decrypt: bool = False) -> BitString:
    """Classical one-time pad. Self-inverse; ``decrypt`` selects which use is claimed."""
    seg = _as_segment(pad_segment)
    if len(seg) != len(bits):
        raise KeyLengthError(f"pad {seg.name!r} has {len(seg)} bits for {len(bits)} bits")
    return xor_bits(bits, seg.claim(decrypt=decrypt))


def verify_mixing(m: int, plain: Sequence[Qubit]) -> float:
    """Trace distance between the key-averaged ciphertext and ``I/2^m``.

    Enumerates all ``4^m`` Pauli keys with weight ``4^-m``.
    """
    if not 1 <= m <= MAX_DENSITY_QUBITS:
        raise SizeError(f"mixing check supports 1..{MAX_DENSITY_QUBITS} qubits, got {m}")
    if len(plain) != m:
        raise SizeError(f"expected {m} plaintext qubits, got {len(plain)}")
    dim = 2 ** m
    rho_c = np.zeros((dim, dim), dtype=complex)
    for key in itertools.product((0, 1), repeat=2 * m):
        rho_c += density_of(qotp_encrypt(plain, key))
    rho_c /= 4 ** m
    return trace_distance(rho_c, np.eye(dim) / dim)


QUBIT = "qubit"
CLASSICAL = "classical"


@dataclass(frozen=True)
class Field:
    name: str
    offset: int
    length: int
    kind: str


@dataclass
class Envelope:
    """Quantum plus classical payload with named fields.

    Qubit and classical offsets are counted separately within their own
    payloads. Both counts are public; only contents are encrypted.
    """

    qubits: list[Qubit]
    cbits: BitString
    labels: tuple[Field, ...]

    def __post_init__(self):
        self.cbits = _bit_tuple(self.cbits)
        for kind, total in ((QUBIT, len(self.qubits)), (CLASSICAL, len(self.cbits))):
            pos = 0
            for f in self.labels:
                if f.kind not in (QUBIT, CLASSICAL):
                    raise FormatError(f"field {f.name!r} has unknown kind {f.kind!r}")
                if f.kind == kind:
                    if f.offset != pos or f.length < 0:
                        raise FormatError(f"field {f.name!r} does not tile the {kind} payload")
                    pos += f.length
            if pos != total:
                raise FormatError(f"{kind} fields cover {pos} of {total} entries")

    @classmethod
    def build(cls, parts: Sequence[tuple[str, str, Sequence]]) -> Envelope:
        """Assemble from ``(name, kind, payload)`` triples, in label order."""
        qubits: list[Qubit] = []
        cbits: list[int] = []
        labels = []
        for name, kind, payload in parts:
            target = qubits if kind == QUBIT else cbits
            labels.append(Field(name, len(target), len(payload), kind))
            target.extend(payload)
        return cls(qubits, tuple(cbits), tuple(labels))

    @property
    def qubit_count(self) -> int:
        return len(self.qubits)

    @property
    def cbit_count(self) -> int:
        return len(self.cbits)

    def get(self, name: str):
        for f in self.labels:
            if f.name == name:
                src = self.qubits if f.kind == QUBIT else self.cbits
                return src[f.offset:f.offset + f.length]
        raise FormatError(f"envelope has no field {name!r}")

    def layout(self) -> tuple[tuple[str, str, int], ...]:
        return tuple((f.name, f.kind, f.length) for f in self.labels)

    def expect(self, layout: Sequence[tuple[str, str, int]]) -> None:
        if self.layout() != tuple(layout):
            raise FormatError(f"envelope layout {self.layout()} != expected {tuple(layout)}")

    def with_payload(self, qubits: Sequence[Qubit], cbits: Sequence[int]) -> Envelope:
        return Envelope(list(qubits), tuple(cbits), self.labels)

    def to_dict(self) -> dict:
        return {
            "labels": [{"name": f.name, "offset": f.offset, "length": f.length, "kind": f.kind}
                       for f in self.labels],
            "qubits": [q.to_floats() for q in self.qubits],
            "cbits": format_bits(self.cbits),
        }

    @classmethod
    def from_dict(cls, data: dict) -> Envelope:
        try:
            labels = tuple(Field(str(d["name"]), int(d["offset"]), int(d["length"]),
                                 str(d["kind"])) for d in data["labels"])
            qubits = [Qubit.from_floats(v) for v in data["qubits"]]
            cbits = parse_bits(data["cbits"])
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed envelope: {exc}") from exc
        return cls(qubits, cbits, labels)


def encrypt_envelope(env: Envelope, otp: SegmentLike, pad: SegmentLike) -> Envelope:
    """Encrypt qubit fields with the Pauli pad and classical fields with XOR."""
    return env.with_payload(qotp_encrypt(env.qubits, otp), xor_pad(env.cbits, pad))


def decrypt_envelope(env: Envelope, otp: SegmentLike, pad: SegmentLike) -> Envelope:
    return env.with_payload(qotp_decrypt(env.qubits, otp),
                            xor_pad(env.cbits, pad, decrypt=True))
