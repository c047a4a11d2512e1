"""Measurement-only Clifford gadgets and their needle realizations.

Gadgets run on small abstract frames (data qubits first, then ancillas).
Corrections are not hand-written: after each measurement the lightest Pauli
that flips the new generator while commuting with everything else in the
frame (including the tracked logical images) is found by search, so every
outcome branch lands on the same frame as the all-+1 branch.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .frame import LogicalAction, Membership, OutcomeSource, StabilizerFrame, logical_action
from .pauli import PauliOperator, commutes, multiply, symplectic

TRACE_SELF_CROSSING = "TRACE_SELF_CROSSING"
TRACE_BLOCKED = "TRACE_BLOCKED"
NOT_NEEDLE_MEASURABLE = "NOT_NEEDLE_MEASURABLE"
CATALYST_MISSING = "CATALYST_MISSING"


class ProtocolError(ValueError):
    def __init__(self, code: str, message: str = ""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code


# ---- Clifford maps ---------------------------------------------------------------

def _hermitian(p: PauliOperator) -> PauliOperator:
    return p if p.is_hermitian else PauliOperator(p.n, p.x, p.z, p.phase + 1)


@dataclass(frozen=True)
class CliffordMap:
    """Conjugation action on ``k`` qubits: images of X1..Xk then Z1..Zk."""

    images: tuple[PauliOperator, ...]

    @property
    def k(self) -> int:
        return len(self.images) // 2

    @classmethod
    def identity(cls, k: int) -> "CliffordMap":
        return cls(tuple(PauliOperator.single(k, q, "X") for q in range(k))
                   + tuple(PauliOperator.single(k, q, "Z") for q in range(k)))

    @classmethod
    def from_images(cls, xs: Sequence[str], zs: Sequence[str]) -> "CliffordMap":
        return cls(tuple(PauliOperator.from_string(s) for s in list(xs) + list(zs)))

    @classmethod
    def from_action(cls, action: LogicalAction) -> "CliffordMap":
        k = action.k
        basis = CliffordMap.identity(k).images
        out = []
        for row, sign in zip(action.matrix, action.signs):
            prod = PauliOperator.identity(k)
            for j, bit in enumerate(row):
                if bit:
                    prod = multiply(prod, basis[j])
            prod = _hermitian(prod)
            out.append(prod if sign == 1 else -prod)
        return cls(tuple(out))

    def apply(self, p: PauliOperator) -> PauliOperator:
        """Image of ``p`` (``i^phase X^x Z^z``) under the map."""
        k = self.k
        out = PauliOperator(k, 0, 0, p.phase)
        for q in range(k):
            if (p.x >> q) & 1:
                out = multiply(out, self.images[q])
        for q in range(k):
            if (p.z >> q) & 1:
                out = multiply(out, self.images[k + q])
        return out

    def then(self, after: "CliffordMap") -> "CliffordMap":
        """Apply ``self`` first, then ``after``."""
        return CliffordMap(tuple(after.apply(img) for img in self.images))

    def key(self) -> tuple[str, ...]:
        return tuple(str(p) for p in self.images)

    def symplectic_key(self) -> tuple[int, ...]:
        return tuple(p.bits() for p in self.images)

    def __str__(self) -> str:
        k = self.k
        names = [f"X{q + 1}" for q in range(k)] + [f"Z{q + 1}" for q in range(k)]
        return ", ".join(f"{a}->{p}" for a, p in zip(names, self.images))


def pauli_gates(k: int) -> list[CliffordMap]:
    """Single-qubit X and Z gates on each of ``k`` qubits."""
    out = []
    for q in range(k):
        for kind in "XZ":
            g = PauliOperator.single(k, q, kind)
            out.append(CliffordMap(tuple(p if commutes(p, g) else -p
                                         for p in CliffordMap.identity(k).images)))
    return out


def embed_map(m: CliffordMap, k: int, qubits: Sequence[int]) -> CliffordMap:
    """Act with ``m`` on ``qubits`` of a ``k``-qubit register, identity elsewhere."""
    base = list(CliffordMap.identity(k).images)

    def lift(p: PauliOperator) -> PauliOperator:
        x = z = 0
        for i, q in enumerate(qubits):
            x |= ((p.x >> i) & 1) << q
            z |= ((p.z >> i) & 1) << q
        return PauliOperator(k, x, z, p.phase)

    for i, q in enumerate(qubits):
        base[q] = lift(m.images[i])
        base[k + q] = lift(m.images[m.k + i])
    return CliffordMap(tuple(base))


def clifford_closure(generators: Sequence[CliffordMap], modulo_paulis: bool = False,
                     limit: int = 100000) -> set:
    """Keys of the group generated by ``generators`` (breadth-first)."""
    if not generators:
        return set()
    keyf = CliffordMap.symplectic_key if modulo_paulis else CliffordMap.key
    start = CliffordMap.identity(generators[0].k)
    seen = {keyf(start)}
    queue = deque([start])
    while queue:
        g = queue.popleft()
        for h in generators:
            nxt = g.then(h)
            key = keyf(nxt)
            if key not in seen:
                seen.add(key)
                if len(seen) > limit:
                    raise RuntimeError("closure exceeded limit")
                queue.append(nxt)
    return seen


# ---- gadgets -------------------------------------------------------------------

@dataclass
class GadgetStep:
    observable: PauliOperator
    corrections: dict[int, PauliOperator] = field(default_factory=dict)


def _flip_signs(frame: StabilizerFrame, c: PauliOperator) -> None:
    """Apply Pauli ``c`` to the state: generators anticommuting with it change sign."""
    frame.set_stabilizers([g if commutes(g, c) else -g for g in frame.stabilizers])


def _lightest_flip(frame: StabilizerFrame, index: int) -> PauliOperator:
    """Lightest Pauli anticommuting with generator ``index`` only, and with no logical."""
    n = frame.n
    others = [g for i, g in enumerate(frame.stabilizers) if i != index]
    others += [op for pair in frame.logicals for op in pair]
    target = frame.stabilizers[index]
    for w in range(1, n + 1):
        for sites in itertools.combinations(range(n), w):
            for letters in itertools.product("XZY", repeat=w):
                c = PauliOperator.identity(n)
                for q, a in zip(sites, letters):
                    c = multiply(c, PauliOperator.single(n, q, a))
                c = c.unsigned()
                if not commutes(c, target) and all(commutes(c, o) for o in others):
                    return c
    raise ProtocolError("NO_CORRECTION", f"nothing flips {target}")


@dataclass
class MeasurementGadget:
    n_data: int
    n_ancilla: int
    ancilla_prep: list[PauliOperator]
    steps: list[GadgetStep]
    name: str = ""

    @property
    def n(self) -> int:
        return self.n_data + self.n_ancilla

    @classmethod
    def derive(cls, n_data: int, n_ancilla: int, prep: Sequence[str | PauliOperator],
               observables: Sequence[str | PauliOperator], name: str = "") -> "MeasurementGadget":
        """Build a gadget, solving for each step's correction on the +1 branch."""
        prep = [PauliOperator.from_string(p) if isinstance(p, str) else p for p in prep]
        obs = [PauliOperator.from_string(p) if isinstance(p, str) else p for p in observables]
        g = cls(n_data, n_ancilla, prep, [GadgetStep(o) for o in obs], name)
        frame = g.initial_frame()
        for step in g.steps:
            rec = frame.measure(step.observable, 1)
            if rec.collapsed_logical is not None:
                raise ProtocolError("DESTROYS_DATA", f"measuring {step.observable} reads out a data qubit")
            if not rec.deterministic:
                step.corrections[-1] = _lightest_flip(frame, rec.replaced_generator_index)
        return g

    def initial_frame(self) -> StabilizerFrame:
        n = self.n
        logs = [(PauliOperator.single(n, q, "X"), PauliOperator.single(n, q, "Z"))
                for q in range(self.n_data)]
        return StabilizerFrame(n, list(self.ancilla_prep), logs)

    def run(self, outcomes: Sequence[int] | None = None,
            source: OutcomeSource = 1) -> tuple[StabilizerFrame, list[int]]:
        """Run on a fresh frame; ``outcomes`` forces each step, else ``source`` draws."""
        frame = self.initial_frame()
        seen = []
        for i, step in enumerate(self.steps):
            src = outcomes[i] if outcomes is not None else source
            rec = frame.measure(step.observable, src)
            seen.append(rec.outcome)
            if rec.deterministic:
                continue
            fix = step.corrections.get(rec.outcome)
            if fix is not None:
                _flip_signs(frame, fix)
        return frame, seen

    def action(self, outcomes: Sequence[int] | None = None) -> CliffordMap:
        final, _ = self.run(outcomes)
        return CliffordMap.from_action(logical_action([], self.initial_frame(), final))

    def branches(self) -> dict[tuple[int, ...], CliffordMap]:
        out = {}
        for forced in itertools.product((1, -1), repeat=len(self.steps)):
            _, seen = self.run(forced)
            if tuple(seen) not in out:
                out[tuple(seen)] = self.action(forced)
        return out

    def is_outcome_independent(self) -> bool:
        return len({m.key() for m in self.branches().values()}) == 1

    def dump(self) -> str:
        lines = [f"gadget {self.name or '-'}", f"data {self.n_data} ancilla {self.n_ancilla}"]
        lines += [f"prep {p}" for p in self.ancilla_prep]
        for s in self.steps:
            fixes = " ".join(f"{o:+d}:{c}" for o, c in sorted(s.corrections.items()))
            lines.append(f"measure {s.observable} {fixes}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "MeasurementGadget":
        name, nd, na, prep, steps = "", 0, 0, [], []
        for ln in text.splitlines():
            parts = ln.split()
            if not parts:
                continue
            if parts[0] == "gadget":
                name = "" if parts[1] == "-" else parts[1]
            elif parts[0] == "data":
                nd, na = int(parts[1]), int(parts[3])
            elif parts[0] == "prep":
                prep.append(PauliOperator.from_string(parts[1]))
            elif parts[0] == "measure":
                fixes = {}
                for tok in parts[2:]:
                    o, c = tok.split(":")
                    fixes[int(o)] = PauliOperator.from_string(c)
                steps.append(GadgetStep(PauliOperator.from_string(parts[1]), fixes))
            else:
                raise ValueError(f"bad gadget line {ln!r}")
        return cls(nd, na, prep, steps, name)


def _letter(p) -> str:
    s = p.letters() if isinstance(p, PauliOperator) else str(p).strip().lstrip("+")
    if len(s) != 1 or s not in "XYZI":
        raise ProtocolError("BAD_INPUT", f"expected a single-qubit Pauli, got {p!r}")
    if s == "I":
        raise ProtocolError("BAD_INPUT", "identity is not allowed")
    return s


def _third(a: str, b: str) -> str:
    return next(c for c in "XYZ" if c not in (a, b))


def lemma1_synthesize(A, B, P, Q) -> MeasurementGadget:
    """Gadget from the joint measurement ``A_1 P_a``: swaps B and C on qubit 1.

    The ancilla is prepared in the B basis and finally read out in the C
    basis, where C is the remaining Pauli.  When ``P != A`` the ancilla's
    letters are relabelled by the transposition taking A to P, which leaves
    the action on qubit 1 unchanged.  ``Q`` belongs to the companion
    measurement ``B_1 Q_a`` (see :func:`lemma1_pair`) and is only validated
    here.
    """
    A, B, P, _Q = _letter(A), _letter(B), _letter(P), _letter(Q)
    if A == B:
        raise ProtocolError("BAD_INPUT", "A and B must differ")
    C = _third(A, B)
    relabel = {c: c for c in "XYZ"}
    if P != A:
        relabel[A], relabel[P] = P, A
    return MeasurementGadget.derive(
        1, 1, [f"+I{relabel[B]}"], [A + P, "I" + relabel[C]], name=f"swap{B}{C}")


def lemma1_pair(A, B, P, Q) -> list[MeasurementGadget]:
    """Both gadgets: ``A_1 P_a`` swaps B and C, ``B_1 Q_a`` swaps A and C."""
    return [lemma1_synthesize(A, B, P, Q), lemma1_synthesize(B, A, Q, P)]


def cz_gadget() -> MeasurementGadget:
    """CZ between data qubits psi (0) and phi (1) via an ancilla (2) prepared in |0>."""
    return MeasurementGadget.derive(2, 1, ["+IIZ"], ["IZX", "ZIZ", "IIX"], name="cz")


# ---- catalytic Y ----------------------------------------------------------------

def crosses_itself(q: PauliOperator) -> bool:
    """Whether a logical operator's X part and Z part anticommute.

    Tracing runs a needle along the X string and along the Z string of the
    target; they cross an odd number of times exactly when the two parts
    anticommute, i.e. when ``q`` holds an odd number of Y factors.
    """
    return bool(symplectic(PauliOperator(q.n, q.x, 0), PauliOperator(q.n, 0, q.z)))


def logical_pauli(frame: StabilizerFrame, q: int, kind: str) -> PauliOperator:
    """X, Y or Z of logical qubit ``q`` as a physical operator (Y = i X Z)."""
    lx, lz = frame.logicals[q]
    if kind == "X":
        return lx
    if kind == "Z":
        return lz
    return _hermitian(multiply(lx, lz))


def prepare_catalyst(frame: StabilizerFrame, b: int) -> PauliOperator:
    """Initialization measurement of Y on logical ``b`` with forced +1; returns that Y."""
    yb = logical_pauli(frame, b, "Y")
    frame.measure(yb, 1)
    return yb


def catalytic_y_measure(frame: StabilizerFrame, y_a: PauliOperator, catalyst: PauliOperator,
                        source: OutcomeSource = 1) -> tuple[StabilizerFrame, int]:
    """Measure ``y_a`` through the traceable product ``y_a * catalyst``.

    ``catalyst`` (the Y of the second ancilla qubit) must be a +1 stabilizer;
    the product then agrees with ``y_a`` up to the group, and the catalyst
    commutes with it so it survives for the next call.  The frame is
    updated in place and returned with the outcome.
    """
    if frame.contains(catalyst) is not Membership.PLUS:
        raise ProtocolError(CATALYST_MISSING, f"{catalyst} is not a +1 stabilizer")
    yy = multiply(y_a, catalyst)
    if crosses_itself(yy):
        raise ProtocolError(TRACE_SELF_CROSSING, f"{yy} crosses itself")
    rec = frame.measure(yy, source)
    if frame.contains(catalyst) is not Membership.PLUS:
        raise ProtocolError(CATALYST_MISSING, "catalyst disturbed by the measurement")
    return frame, rec.outcome


# ---- needle operations -------------------------------------------------------------

def _label_index(engine, label: str) -> int:
    try:
        return engine.labels.index(label)
    except ValueError:
        raise ProtocolError("UNKNOWN_LABEL", f"no logical qubit labelled {label!r}") from None


def _needle_index(engine, pid: str) -> int:
    other = engine.partner.get(pid)
    for label in (f"{pid}+{other}", f"{other}+{pid}"):
        if label in engine.labels:
            return engine.labels.index(label)
    raise ProtocolError("UNKNOWN_LABEL", f"{pid} carries no logical qubit")


def needle_operator(engine, pid: str, basis: str) -> PauliOperator:
    """The needle's X or Z as it sits on the lattice now (loop or connecting chain)."""
    if basis not in ("X", "Z"):
        raise ProtocolError(NOT_NEEDLE_MEASURABLE, f"basis {basis} needs the punctures to overlap")
    partner = engine.partner.get(pid)
    if partner is None:
        raise ProtocolError("UNKNOWN_LABEL", f"{pid} has no partner puncture")
    smooth = engine.defects.punctures[pid].type == "smooth"
    loop_kind = "Z" if smooth else "X"
    if basis == loop_kind:
        return engine.puncture_loop(pid)
    return engine.puncture_chain(pid, partner)


def needle_measure(engine, pid: str, basis: str, source: OutcomeSource = 1) -> int:
    """Measure the needle's X (chain) or Z (loop); Y is rejected."""
    op = needle_operator(engine, pid, basis)
    rec = engine.frame.measure(op, source)
    engine.log.add(f"needle-{basis}:{pid}", rec)
    if rec.collapsed_logical is not None:
        del engine.labels[rec.collapsed_logical]
    engine.log.logical_images = list(engine.frame.logicals)
    return rec.outcome


def trace_operator(engine, pid: str, kind: str, wid: str, sink: str | None = None):
    """Trace the wormhole logical ``kind`` onto the needle ``pid``.

    Z is traced by braiding around mouth A, X by stitching through the
    wormhole and back through ``sink``.  Returns ``(frame, image)`` where
    ``image`` is the needle's X image in the logical basis; it equals
    ``X_n * Q``.
    """
    wq = _label_index(engine, f"{wid}.a")
    nq = _needle_index(engine, pid)
    k = engine.frame.k
    if kind not in "XYZ" or len(kind) != 1:
        raise ProtocolError("BAD_INPUT", f"unknown logical {kind!r}")
    q = PauliOperator.single(k, wq, kind)
    if crosses_itself(q):
        raise ProtocolError(TRACE_SELF_CROSSING, f"{kind} of {wid} crosses itself")
    if kind == "Z":
        action = engine.braid(pid, f"{wid}.mouthA")
    else:
        if sink is None:
            raise ProtocolError(TRACE_BLOCKED, "tracing X needs a sink wormhole")
        action = engine.stitch(pid, wid, sink)
    image = CliffordMap.from_action(action).images[nq]
    want = multiply(PauliOperator.single(k, nq, "X"), q)
    if not image.same_bits(want):
        raise ProtocolError("TRACE_FAILED", f"needle X went to {image}, expected {want}")
    return engine.frame, image
