"""Stabilizer frames: codes and states under Pauli measurement.

A frame holds an ordered list of independent, commuting, signed stabilizer
generators plus symplectic pairs of logical operators.  Measuring a Pauli
updates both; the logical list is therefore always the push-forward of the
logicals the frame started with, which is what gate extraction relies on.
"""

from __future__ import annotations

import enum
import os
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

from . import gf2
from .pauli import DimensionError, PauliOperator, bits_to_pauli, commutes, multiply, symplectic

OutcomeSource = Union[int, random.Random]

# Validate the frame after every measurement; slow, meant for test runs.
CHECK_INVARIANTS = os.environ.get("WORMHOLES_CHECK", "") not in ("", "0")


class FrameError(RuntimeError):
    pass


class InvariantViolation(FrameError):
    pass


class NotPureError(FrameError):
    pass


class Membership(enum.Enum):
    PLUS = "in-group-plus"
    MINUS = "in-group-minus"
    NOT_IN_GROUP = "not-in-group"


@dataclass(frozen=True)
class MeasurementRecord:
    observable: PauliOperator
    outcome: int
    deterministic: bool
    replaced_generator_index: int | None = None
    collapsed_logical: int | None = None

    @property
    def kind(self) -> str:
        if self.deterministic:
            return "deterministic"
        return "collapse" if self.collapsed_logical is not None else "random"


def draw_outcome(source: OutcomeSource) -> int:
    if isinstance(source, random.Random):
        return 1 if source.random() < 0.5 else -1
    if source not in (1, -1):
        raise ValueError(f"forced outcome must be +1 or -1, got {source!r}")
    return source


@dataclass
class StabilizerFrame:
    n: int
    stabilizers: list[PauliOperator] = field(default_factory=list)
    logicals: list[tuple[PauliOperator, PauliOperator]] = field(default_factory=list)
    removed_qubits: frozenset[int] = frozenset()

    def __post_init__(self):
        self._basis = None

    # ---- bookkeeping --------------------------------------------------
    def copy(self) -> "StabilizerFrame":
        return StabilizerFrame(self.n, list(self.stabilizers), list(self.logicals), self.removed_qubits)

    @property
    def k(self) -> int:
        return len(self.logicals)

    @property
    def rank(self) -> int:
        return gf2.rank([s.bits() for s in self.stabilizers])

    def _touch(self) -> None:
        self._basis = None

    def _echelon(self):
        if self._basis is None:
            self._basis = gf2.echelon([s.bits() for s in self.stabilizers])
        return self._basis

    def _check_operator(self, p: PauliOperator) -> None:
        if p.n != self.n:
            raise DimensionError(f"operator on {p.n} qubits, frame has {self.n}")

    def add_stabilizer(self, p: PauliOperator) -> None:
        self._check_operator(p)
        self.stabilizers.append(p)
        self._touch()

    def set_stabilizers(self, stabs: Sequence[PauliOperator]) -> None:
        self.stabilizers = list(stabs)
        self._touch()

    # ---- group membership ---------------------------------------------
    def decompose(self, p: PauliOperator) -> tuple[int, int]:
        """Return ``(residual_bits, generator_mask)`` for ``p`` against the group."""
        self._check_operator(p)
        return gf2.reduce(p.bits(), self._echelon())

    def product_of(self, mask: int) -> PauliOperator:
        out = PauliOperator.identity(self.n)
        i = 0
        while mask:
            if mask & 1:
                out = multiply(out, self.stabilizers[i])
            mask >>= 1
            i += 1
        return out

    def contains(self, p: PauliOperator) -> Membership:
        residual, mask = self.decompose(p)
        if residual:
            return Membership.NOT_IN_GROUP
        prod = self.product_of(mask)
        return Membership.PLUS if (prod.phase - p.phase) % 4 == 0 else Membership.MINUS

    def group_sign(self, p: PauliOperator) -> int | None:
        """Sign ``s`` with ``s * p`` in the group, or None when ``+-p`` is outside it."""
        m = self.contains(p)
        if m is Membership.NOT_IN_GROUP:
            return None
        return 1 if m is Membership.PLUS else -1

    def anticommuting(self, p: PauliOperator) -> list[int]:
        return [i for i, g in enumerate(self.stabilizers) if not commutes(g, p)]

    # ---- measurement --------------------------------------------------
    def measure(self, p: PauliOperator, source: OutcomeSource = 1) -> MeasurementRecord:
        """Measure Hermitian ``p`` in place and return the record."""
        self._check_operator(p)
        if not p.is_hermitian:
            raise ValueError(f"cannot measure non-Hermitian {p}")
        anti = self.anticommuting(p)
        if anti:
            first = anti[0]
            g = self.stabilizers[first]
            for i in anti[1:]:
                self.stabilizers[i] = multiply(self.stabilizers[i], g)
            self.logicals = [
                (lx if commutes(lx, p) else multiply(lx, g), lz if commutes(lz, p) else multiply(lz, g))
                for lx, lz in self.logicals
            ]
            outcome = draw_outcome(source)
            self.stabilizers[first] = p if outcome == 1 else -p
            self._touch()
            rec = MeasurementRecord(p, outcome, False, first)
        else:
            sign = self.group_sign(p)
            if sign is not None:
                rec = MeasurementRecord(p, sign, True)
            else:
                rec = self._collapse(p, source)
        if CHECK_INVARIANTS:
            self.validate()
        return rec

    def _collapse(self, p: PauliOperator, source: OutcomeSource) -> MeasurementRecord:
        flat = [op for pair in self.logicals for op in pair]
        hit = next((i for i, op in enumerate(flat) if not commutes(op, p)), None)
        if hit is None:
            raise InvariantViolation(f"{p} commutes with stabilizers and logicals but is not in the group")
        j = hit // 2
        a = flat[hit]
        pairs = []
        for i, (lx, lz) in enumerate(self.logicals):
            if i == j:
                continue
            if not commutes(lx, p):
                lx = multiply(lx, a)
            if not commutes(lz, p):
                lz = multiply(lz, a)
            pairs.append((lx, lz))
        self.logicals = pairs
        outcome = draw_outcome(source)
        self.stabilizers.append(p if outcome == 1 else -p)
        self._touch()
        return MeasurementRecord(p, outcome, False, None, j)

    # ---- code surgery ---------------------------------------------------
    def release(self, stabilizer: PauliOperator, conjugate: PauliOperator, as_z: bool = True) -> None:
        """Turn a stabilizer element into a logical operator paired with ``conjugate``.

        ``stabilizer`` must be in the group and ``conjugate`` must commute with
        every other generator once the frame is rearranged so that exactly one
        generator anticommutes with it.  The removed generator is the one that
        carried ``stabilizer``'s information.  ``as_z`` chooses whether the
        released operator becomes the Z- or the X-half of the new pair.
        """
        if self.contains(stabilizer) is Membership.NOT_IN_GROUP:
            raise FrameError(f"{stabilizer} is not in the stabilizer group")
        if commutes(stabilizer, conjugate):
            raise FrameError("conjugate must anticommute with the released operator")
        for lx, lz in self.logicals:
            if not (commutes(conjugate, lx) and commutes(conjugate, lz)):
                raise FrameError("conjugate must commute with existing logicals")
        anti = self.anticommuting(conjugate)
        first = anti[0]
        g = self.stabilizers[first]
        for i in anti[1:]:
            self.stabilizers[i] = multiply(self.stabilizers[i], g)
        del self.stabilizers[first]
        self._touch()
        if self.contains(stabilizer) is not Membership.NOT_IN_GROUP:
            raise FrameError("released operator is still generated by the remaining stabilizers")
        released = stabilizer.unsigned()
        conj = conjugate.unsigned()
        self.logicals.append((released, conj) if not as_z else (conj, released))
        if CHECK_INVARIANTS:
            self.validate()

    # ---- canonical form -------------------------------------------------
    def canonicalize(self) -> "StabilizerFrame":
        """Replace generators by the reduced echelon basis (x-columns first)."""
        rows: list[PauliOperator] = []
        for g in self.stabilizers:
            for r in rows:
                if g.bits() & (r.bits() & -r.bits()):
                    g = multiply(g, r)
            if g.is_identity:
                continue
            piv = g.bits() & -g.bits()
            rows = [multiply(r, g) if r.bits() & piv else r for r in rows]
            rows.append(g)
        rows.sort(key=lambda r: (r.bits() & -r.bits()).bit_length())
        self.stabilizers = rows
        self._touch()
        return self

    # ---- invariants -------------------------------------------------------
    def validate(self) -> None:
        stabs = self.stabilizers
        for s in stabs:
            if not s.is_hermitian:
                raise InvariantViolation(f"non-Hermitian stabilizer {s}")
        for i in range(len(stabs)):
            for j in range(i + 1, len(stabs)):
                if not commutes(stabs[i], stabs[j]):
                    raise InvariantViolation(f"stabilizers {i} and {j} anticommute")
        r = self.rank
        if r != len(stabs):
            raise InvariantViolation(f"stabilizers are dependent: rank {r} < {len(stabs)}")
        flat = [op for pair in self.logicals for op in pair]
        for op in flat:
            for s in stabs:
                if not commutes(op, s):
                    raise InvariantViolation(f"logical {op} anticommutes with stabilizer {s}")
        for a in range(len(flat)):
            for b in range(a + 1, len(flat)):
                expect = 1 if (a // 2 == b // 2) else 0
                if symplectic(flat[a], flat[b]) != expect:
                    raise InvariantViolation(f"logical algebra broken between {a} and {b}")
        if self.n - r != len(self.logicals):
            raise InvariantViolation(f"k mismatch: n - rank = {self.n - r}, {len(self.logicals)} logical pairs")

    # ---- dump -------------------------------------------------------------
    def dump(self) -> str:
        canon = self.copy().canonicalize()
        lines = [f"{self.n} {self.k} {len(self.removed_qubits)}"]
        lines += [str(s) for s in canon.stabilizers]
        for lx, lz in self.logicals:
            lines.append(f"{lx} {lz}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "StabilizerFrame":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        n, k, _removed = (int(t) for t in lines[0].split())
        body = lines[1:]
        stabs = [PauliOperator.from_string(t) for t in body[: len(body) - k]]
        pairs = []
        for ln in body[len(body) - k:]:
            a, b = ln.split()
            pairs.append((PauliOperator.from_string(a), PauliOperator.from_string(b)))
        return cls(n, stabs, pairs)


# ---- functional wrappers ---------------------------------------------------

def measure_pauli(frame: StabilizerFrame, p: PauliOperator, source: OutcomeSource = 1):
    out = frame.copy()
    rec = out.measure(p, source)
    return out, rec


def canonicalize(frame: StabilizerFrame) -> StabilizerFrame:
    return frame.copy().canonicalize()


def contains(frame: StabilizerFrame, p: PauliOperator) -> Membership:
    return frame.contains(p)


def product_state(n: int, kind: str = "Z") -> StabilizerFrame:
    return StabilizerFrame(n, [PauliOperator.single(n, q, kind) for q in range(n)])


def entanglement_entropy(frame: StabilizerFrame, region: Iterable[int]) -> int:
    """Entropy in bits of ``region`` for a pure stabilizer state.

    ``S(A) = |A| - g_A`` with ``g_A`` the number of independent group elements
    supported inside ``A``; ``g_A = rank - rank(generators restricted to the
    complement)``.
    """
    if frame.k != 0 or frame.rank != frame.n:
        raise NotPureError(f"frame is not a pure state (k={frame.k}, rank={frame.rank})")
    inside = 0
    for q in region:
        if not 0 <= q < frame.n:
            raise IndexError(q)
        inside |= 1 << q
    outside = ((1 << frame.n) - 1) & ~inside
    outside_cols = outside | (outside << frame.n)
    r_out = gf2.rank([s.bits() & outside_cols for s in frame.stabilizers])
    g_a = frame.n - r_out
    return inside.bit_count() - g_a


class LogicalDestroyed(FrameError):
    pass


@dataclass(frozen=True)
class LogicalAction:
    """Symplectic matrix over the basis (X1..Xk, Z1..Zk) plus image signs.

    Row ``i`` holds the image of basis element ``i`` expressed in the same basis;
    ``signs[i]`` is relative to the Hermitian form of that product (X then Z
    factors, with a factor of i absorbed when it contains a Y).
    """

    matrix: tuple[tuple[int, ...], ...]
    signs: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.matrix) // 2

    def is_symplectic(self) -> bool:
        k = self.k
        m = self.matrix
        for a in range(2 * k):
            for b in range(2 * k):
                val = 0
                for j in range(k):
                    val ^= (m[a][j] & m[b][k + j]) ^ (m[a][k + j] & m[b][j])
                expect = 1 if (a != b and a % k == b % k) else 0
                if val != expect:
                    return False
        return True

    def compose(self, after: "LogicalAction") -> "LogicalAction":
        """Matrix of applying ``self`` then ``after`` (signs dropped to +)."""
        a, b = self.matrix, after.matrix
        size = len(a)
        rows = []
        for i in range(size):
            rows.append(tuple(
                sum(a[i][j] & b[j][c] for j in range(size)) & 1 for c in range(size)))
        return LogicalAction(tuple(rows), (1,) * size)

    def __str__(self) -> str:
        return "\n".join("".join(str(v) for v in row) for row in self.matrix)


def _basis_ops(logicals):
    xs = [lx for lx, _ in logicals]
    zs = [lz for _, lz in logicals]
    return xs + zs


def logical_action(log, initial: StabilizerFrame, final: StabilizerFrame,
                   images: Sequence[tuple[PauliOperator, PauliOperator]] | None = None) -> LogicalAction:
    """Express the tracked logical images in ``final`` over ``initial``'s logicals.

    ``images`` defaults to ``final.logicals`` (the push-forward of the initial
    pairs).  ``log`` may be any iterable of records; a logical collapse inside
    it is reported as the cause when the logical counts disagree.
    """
    images = list(final.logicals if images is None else images)
    if len(images) != len(initial.logicals):
        culprit = None
        for idx, step in enumerate(log or []):
            rec = getattr(step, "record", step)
            if getattr(rec, "collapsed_logical", None) is not None:
                culprit = idx
                break
        raise LogicalDestroyed(f"logical count changed ({len(initial.logicals)} -> {len(images)});"
                               f" first collapsing measurement: step {culprit}")
    k = len(images)
    ref = _basis_ops(initial.logicals)
    img = _basis_ops(images)
    rows, signs = [], []
    for i, op in enumerate(img):
        row = []
        for j in range(2 * k):
            partner = ref[(j + k) % (2 * k)]
            row.append(symplectic(op, partner))
        prod = PauliOperator.identity(final.n)
        for j in range(2 * k):
            if row[j]:
                prod = multiply(prod, ref[j])
        if not prod.is_hermitian:
            # X_j Z_j = -i Y_j: compare against the Hermitian product
            prod = PauliOperator(prod.n, prod.x, prod.z, prod.phase + 1)
        residual = multiply(op, prod)
        for s in final.stabilizers:
            if not commutes(residual, s):
                raise LogicalDestroyed(f"image of logical {i} does not commute with the final stabilizers")
        if not residual.is_hermitian:
            # op and prod anticommute: impossible when both are in the normalizer
            raise LogicalDestroyed(f"image of logical {i} has inconsistent phase")
        m = final.contains(residual)
        if m is Membership.NOT_IN_GROUP:
            raise LogicalDestroyed(f"image of logical {i} is not generated by the reference logicals")
        signs.append(1 if m is Membership.PLUS else -1)
        rows.append(tuple(row))
    return LogicalAction(tuple(rows), tuple(signs))


def complete_logicals(frame: StabilizerFrame) -> list[tuple[PauliOperator, PauliOperator]]:
    """Symplectic basis of the normalizer modulo the stabilizer group.

    Existing logical pairs are kept first; any missing pairs are found from
    the null space of the check matrix by symplectic Gram-Schmidt.
    """
    n = frame.n
    stab_bits = [s.bits() for s in frame.stabilizers]
    # normalizer: vectors v with symplectic(s, v) = 0; swap halves to turn it into a dot product
    swapped = [(b >> n) | ((b & ((1 << n) - 1)) << n) for b in stab_bits]
    null = gf2.nullspace(swapped, 2 * n)
    pairs = list(frame.logicals)
    have = stab_bits + [op.bits() for pair in pairs for op in pair]
    basis = gf2.echelon(have)
    cands = []
    for v in null:
        res, _ = gf2.reduce(v, basis)
        if res:
            cands.append(bits_to_pauli(n, v))
            basis = gf2.echelon(have + [c.bits() for c in cands])
    def project(op):
        for lx, lz in pairs:
            wx, wz = symplectic(op, lx), symplectic(op, lz)
            if wz:
                op = multiply(op, lx)
            if wx:
                op = multiply(op, lz)
        return op.unsigned()

    cands = [project(c) for c in cands]
    while cands:
        a = cands.pop(0)
        idx = next((i for i, c in enumerate(cands) if not commutes(a, c)), None)
        if idx is None:
            continue
        b = cands.pop(idx)
        pairs.append((a, b))
        new = []
        for c in cands:
            if not commutes(c, b):
                c = multiply(c, a)
            if not commutes(c, a):
                c = multiply(c, b)
            new.append(c.unsigned())
        cands = new
    return pairs
