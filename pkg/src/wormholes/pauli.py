"""Phased Pauli operators with bit-packed symplectic arithmetic.

An operator on ``n`` qubits is stored as ``i**phase * X**x * Z**z`` where ``x``
and ``z`` are Python integers used as bit masks (bit ``j`` is qubit ``j``).
Python integers are arbitrary-width word arrays, so XOR/AND and
``int.bit_count`` give word-parallel symplectic products for free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

_TOKENS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_PARSE_TOKENS = {"+": 0, "": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}


class DimensionError(ValueError):
    """Raised when operators on different qubit counts are combined."""


def _check_dims(a: "PauliOperator", b: "PauliOperator") -> None:
    if a.n != b.n:
        raise DimensionError(f"qubit count mismatch: {a.n} vs {b.n}")


@dataclass(frozen=True)
class PauliOperator:
    n: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("n must be non-negative")
        mask = (1 << self.n) - 1
        if self.x & ~mask or self.z & ~mask:
            raise ValueError("bits set beyond qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    # ---- constructors -------------------------------------------------
    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n)

    @classmethod
    def from_sites(cls, n: int, kind: str, sites: Iterable[int]) -> "PauliOperator":
        """Product of a single Pauli type (``"X"``, ``"Y"`` or ``"Z"``) over ``sites``.

        Repeated sites cancel, so closed paths that revisit an edge behave as
        products should.
        """
        bits = 0
        for s in sites:
            if not 0 <= s < n:
                raise IndexError(f"qubit {s} out of range for n={n}")
            bits ^= 1 << s
        if kind == "X":
            return cls(n, bits, 0)
        if kind == "Z":
            return cls(n, 0, bits)
        if kind == "Y":
            return cls(n, bits, bits, bits.bit_count())
        raise ValueError(f"unknown Pauli kind {kind!r}")

    @classmethod
    def single(cls, n: int, qubit: int, kind: str) -> "PauliOperator":
        return cls.from_sites(n, kind, [qubit])

    @classmethod
    def from_string(cls, text: str) -> "PauliOperator":
        """Parse ``"+XIZY"`` / ``"-iXZII"``; the leading token is optional."""
        text = text.strip()
        i = 0
        while i < len(text) and text[i] in "+-i":
            i += 1
        token, body = text[:i], text[i:]
        if token not in _PARSE_TOKENS:
            raise ValueError(f"bad phase token {token!r}")
        x = z = 0
        for q, ch in enumerate(body):
            if ch == "X":
                x |= 1 << q
            elif ch == "Z":
                z |= 1 << q
            elif ch == "Y":
                x |= 1 << q
                z |= 1 << q
            elif ch not in "I_":
                raise ValueError(f"bad Pauli letter {ch!r} in {text!r}")
        ny = (x & z).bit_count()
        return cls(len(body), x, z, _PARSE_TOKENS[token] + ny)

    # ---- rendering ----------------------------------------------------
    def letters(self) -> str:
        out = []
        for q in range(self.n):
            xb = (self.x >> q) & 1
            zb = (self.z >> q) & 1
            out.append("IXZY"[xb | (zb << 1)])
        return "".join(out)

    def __str__(self) -> str:
        # Y = i X Z, so each Y absorbs one power of i from the stored phase.
        token = _TOKENS[(self.phase - (self.x & self.z).bit_count()) % 4]
        return token + self.letters()

    def __repr__(self) -> str:
        return f"PauliOperator({str(self)!r})"

    # ---- algebra ------------------------------------------------------
    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        return multiply(self, other)

    def __neg__(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, self.phase + 2)

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def support(self) -> list[int]:
        bits = self.x | self.z
        return [q for q in range(self.n) if (bits >> q) & 1]

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == (self.x & self.z).bit_count() % 2

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def sign(self) -> int:
        """+1 or -1 for a Hermitian operator written over {I, X, Y, Z}."""
        if not self.is_hermitian:
            raise ValueError(f"{self} is not Hermitian")
        return 1 if (self.phase - (self.x & self.z).bit_count()) % 4 == 0 else -1

    def unsigned(self) -> "PauliOperator":
        """Hermitian representative with sign +1 and the same bits."""
        return PauliOperator(self.n, self.x, self.z, (self.x & self.z).bit_count())

    def with_sign(self, sign: int) -> "PauliOperator":
        p = self.unsigned()
        return p if sign > 0 else -p

    def bits(self) -> int:
        """Symplectic vector packed as ``x | z << n`` (x-columns first)."""
        return self.x | (self.z << self.n)

    def same_bits(self, other: "PauliOperator") -> bool:
        return self.x == other.x and self.z == other.z

    def kind_at(self, q: int) -> str:
        return "IXZY"[((self.x >> q) & 1) | (((self.z >> q) & 1) << 1)]


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    """Exact product ``a * b``.

    Moving ``Z**za`` past ``X**xb`` contributes ``(-1)**|za & xb|``.
    """
    _check_dims(a, b)
    phase = a.phase + b.phase + 2 * (a.z & b.x).bit_count()
    return PauliOperator(a.n, a.x ^ b.x, a.z ^ b.z, phase)


def symplectic(a: PauliOperator, b: PauliOperator) -> int:
    _check_dims(a, b)
    return ((a.x & b.z).bit_count() + (a.z & b.x).bit_count()) & 1


def commutes(a: PauliOperator, b: PauliOperator) -> bool:
    return symplectic(a, b) == 0


def restrict(a: PauliOperator, region: Iterable[int]) -> PauliOperator:
    """Zero every site outside ``region``; the phase is reset to 0."""
    mask = 0
    for q in region:
        if not 0 <= q < a.n:
            raise IndexError(f"qubit {q} out of range for n={a.n}")
        mask |= 1 << q
    return PauliOperator(a.n, a.x & mask, a.z & mask, 0)


def bits_to_pauli(n: int, bits: int) -> PauliOperator:
    """Inverse of :meth:`PauliOperator.bits`, returned with sign +1."""
    mask = (1 << n) - 1
    x, z = bits & mask, bits >> n
    return PauliOperator(n, x, z, (x & z).bit_count())


def embed(p: PauliOperator, n: int, offset: int = 0) -> PauliOperator:
    """Place ``p`` on qubits ``offset .. offset+p.n-1`` of an ``n``-qubit register."""
    return PauliOperator(n, p.x << offset, p.z << offset, p.phase)
