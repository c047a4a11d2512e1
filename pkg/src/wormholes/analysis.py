"""Code distance, entanglement scans and syndrome reports."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .frame import StabilizerFrame, entanglement_entropy
from .pauli import PauliOperator, commutes


# ---- syndromes -------------------------------------------------------------------

@dataclass(frozen=True)
class Excitation:
    index: int
    charge: str  # e, m, hybrid, pair, pin or merged
    label: str
    support: tuple[int, ...]


def _charge_of(op: PauliOperator) -> str:
    if op.z == 0:
        return "e"
    if op.x == 0:
        return "m"
    return "hybrid"


def syndrome(reference, error: PauliOperator) -> list[Excitation]:
    """Generators anticommuting with ``error``, tagged with their charge.

    ``reference`` is either a frame (charges read off the Pauli content: pure
    X generators are stars, pure Z plaquettes, mixed ones hybrids) or a list
    of tagged checks from a defect configuration.
    """
    out = []
    if isinstance(reference, StabilizerFrame):
        items = [(g, _charge_of(g), f"g{i}") for i, g in enumerate(reference.stabilizers)]
    else:
        items = []
        for c in reference:
            label = f"{c.kind}{list(c.key)}"
            items.append((c.op, c.charge, label))
    for i, (op, charge, label) in enumerate(items):
        if not commutes(op, error):
            out.append(Excitation(i, charge, label, tuple(op.support)))
    return out


# ---- distance ---------------------------------------------------------------------

@dataclass(frozen=True)
class Distance:
    value: int | None
    w_max: int

    def __str__(self) -> str:
        return str(self.value) if self.value is not None else f"> {self.w_max}"


def _signatures(frame: StabilizerFrame, active: Sequence[int]):
    """Per active qubit and Pauli letter: (stabilizer syndrome mask, logical mask)."""
    n = frame.n
    logs = [op for pair in frame.logicals for op in pair]
    table = []
    for q in active:
        row = []
        for kind in "XYZ":
            p = PauliOperator.single(n, q, kind)
            s = 0
            for i, g in enumerate(frame.stabilizers):
                if not commutes(p, g):
                    s |= 1 << i
            lam = 0
            for j, lop in enumerate(logs):
                if not commutes(p, lop):
                    lam |= 1 << j
            row.append((s, lam))
        table.append(row)
    return table


def _enumerate(table, weight: int):
    """Yield (syndrome, logical mask, sites, letters) for every Pauli of exactly ``weight``."""
    m = len(table)
    for sites in itertools.combinations(range(m), weight):
        for letters in itertools.product(range(3), repeat=weight):
            s = lam = 0
            for q, a in zip(sites, letters):
                ds, dl = table[q][a]
                s ^= ds
                lam ^= dl
            yield s, lam, sites, letters


def distance_bounded(frame: StabilizerFrame, w_max: int) -> Distance:
    """Minimum weight of a nontrivial logical operator, searched up to ``w_max``.

    Operators commuting with every stabilizer are either in the group or
    anticommute with some logical; a nontrivial logical of weight ``d`` splits
    into two halves of weight at most ``ceil(d/2)`` with equal syndromes and
    different logical masks, so a table of half-weight operators keyed by
    syndrome finds it.
    """
    if frame.k < 1:
        raise ValueError("distance needs at least one logical qubit")
    active = [q for q in range(frame.n) if q not in frame.removed_qubits]
    table = _signatures(frame, active)
    half = (w_max + 1) // 2
    buckets: dict[int, list[tuple[int, dict[int, str]]]] = {}
    best: int | None = None
    for w in range(0, half + 1):
        for s, lam, sites, letters in _enumerate(table, w):
            ops = {active[q]: "XYZ"[a] for q, a in zip(sites, letters)}
            if s == 0 and lam and w <= w_max:
                best = w if best is None else min(best, w)
            for lam2, ops2 in buckets.get(s, ()):
                if lam2 == lam:
                    continue
                # product weight: shared sites with equal letters cancel
                weight = len(ops) + len(ops2)
                for q, a in ops.items():
                    if q in ops2:
                        weight -= 1 if ops2[q] != a else 2
                if weight <= w_max and (best is None or weight < best):
                    best = weight
            buckets.setdefault(s, []).append((lam, ops))
    return Distance(best, w_max)


def distance_bruteforce(frame: StabilizerFrame, w_max: int | None = None) -> Distance:
    """Reference search over every Pauli in increasing weight (small codes only)."""
    active = [q for q in range(frame.n) if q not in frame.removed_qubits]
    table = _signatures(frame, active)
    top = len(active) if w_max is None else w_max
    for w in range(1, top + 1):
        for s, lam, _sites, _letters in _enumerate(table, w):
            if s == 0 and lam:
                return Distance(w, top)
    return Distance(None, top)


# ---- entropy ----------------------------------------------------------------------

@dataclass(frozen=True)
class EntropyRow:
    shape: str
    area: int
    perimeter: int
    S: int
    mutual: int

    def line(self) -> str:
        return f"{self.shape:>6} area={self.area:<3} perimeter={self.perimeter:<3} S={self.S:<3} I={self.mutual}"


def mouth_region(lat, region) -> list[int]:
    """Qubits of one mouth: its interior edges plus its boundary edges."""
    return sorted(lat.region_interior(region) | set(lat.region_boundary(region)))


def entropy_scan(L: int, shapes: Iterable[tuple[int, int]], layout: str = "toric",
                 entangled: bool = True) -> list[EntropyRow]:
    """Entanglement of one mouth with the rest, for rectangular mouth shapes.

    For each ``(h, w)`` a wormhole with an ``h x w`` vertex mouth and an
    ``h x w`` plaquette mouth is created from the vacuum with forced
    outcomes; the remaining logical freedom is fixed by measuring every
    logical Z so the state is pure.  ``S`` is the entropy of the first
    mouth's region and ``I`` the mutual information between the two mouth
    regions.  With ``entangled=False`` the two footprints are plain
    punctures (smooth and rough) with no pairing between them.
    """
    from .defects import DefectEngine
    from .lattice import Region, build

    rows = []
    for h, w in shapes:
        lat, frame = build(L, layout)
        eng = DefectEngine(lat, frame)
        # vertex mouth in the upper half, plaquette mouth below it
        a = Region("vertices", tuple((1 + i, 1 + j) for i in range(h) for j in range(w)))
        rb = L // 2 + 1
        b = Region("plaquettes", tuple((rb + i, 1 + j) for i in range(h) for j in range(w)))
        if h + 2 > rb - 1 or rb + h + 1 > L or w + 2 > L:
            raise ValueError(f"shape {h}x{w} does not fit on L={L}")
        if entangled:
            eng.create_wormhole(a, b)
        else:
            eng.create_puncture(a, "smooth")
            eng.create_puncture(b, "rough")
        for _lx, lz in list(frame.logicals):
            frame.measure(lz, 1)
        ra, rb = mouth_region(lat, a), mouth_region(lat, b)
        sa = entanglement_entropy(frame, ra)
        sb = entanglement_entropy(frame, rb)
        sab = entanglement_entropy(frame, ra + rb)
        rows.append(EntropyRow(f"{h}x{w}", h * w, len(lat.region_boundary(a)), sa, sa + sb - sab))
    return rows
