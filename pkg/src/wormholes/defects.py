"""Punctures, twist lines and wormholes as measurement recipes on a frame.

Every defect configuration is described by two ingredients:

* single-qubit *pins*: X on the edges of a smooth cell (vertex) and Z on the
  edges of a rough cell (face), plus the pinned interiors of wormhole mouths;
* two-qubit *pair checks* ``X_e Z_f`` along twist lines and between the
  boundaries of wormhole mouths.

The code's checks follow from these: stars and plaquettes that commute with
every pin and pair check survive (with pinned sites multiplied out), and
frustrated generators with identical frustration patterns are merged into
hybrids.  Changing the configuration is done by measuring the checks of the
new configuration that were not checks before; the frame carries the
logical operators along.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .frame import MeasurementRecord, Membership, OutcomeSource, StabilizerFrame, logical_action
from .lattice import Lattice, LatticeError, Region, Site, path_operator, shortest_path
from .pauli import PauliOperator, commutes, multiply, symplectic

DIRECTIONS = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}


class DefectError(ValueError):
    pass


class CollisionError(DefectError):
    pass


# ---- registry ----------------------------------------------------------------

@dataclass
class Puncture:
    id: str
    vertices: frozenset[Site] = frozenset()  # smooth cells: X on every star edge
    faces: frozenset[Site] = frozenset()     # rough cells: Z on every face edge

    @property
    def type(self) -> str:
        if self.vertices and self.faces:
            return "mixed"
        return "smooth" if self.vertices else "rough"

    def region(self) -> Region:
        if self.type == "smooth":
            return Region("vertices", tuple(self.vertices))
        if self.type == "rough":
            return Region("plaquettes", tuple(self.faces))
        raise DefectError(f"puncture {self.id} straddles a pair line")


@dataclass
class TwistLine:
    id: str
    start: Site
    end: Site
    pairs: list[tuple[int, int]]  # (X edge, Z edge)


@dataclass
class Wormhole:
    id: str
    mouth_a: Region
    mouth_b: Region
    pairing: list[tuple[int, int]]  # (X edge on mouth a, Z edge on mouth b)
    sink: bool = False


@dataclass
class DefectSet:
    punctures: dict[str, Puncture] = field(default_factory=dict)
    twist_lines: dict[str, TwistLine] = field(default_factory=dict)
    wormholes: dict[str, Wormhole] = field(default_factory=dict)

    def copy(self) -> "DefectSet":
        return copy.deepcopy(self)

    def ids(self) -> list[str]:
        return list(self.punctures) + list(self.twist_lines) + list(self.wormholes)

    def pins(self, lat: Lattice) -> dict[int, str]:
        pins: dict[int, str] = {}

        def pin(e, kind, owner):
            prev = pins.get(e)
            if prev is not None and prev != kind:
                raise CollisionError(f"{owner} pins edge {lat.edges[e]} as {kind}, already {prev}")
            pins[e] = kind

        for p in self.punctures.values():
            for v in sorted(p.vertices):
                for e in lat.star_support[v]:
                    pin(e, "X", p.id)
            for f in sorted(p.faces):
                for e in lat.face_support[f]:
                    pin(e, "Z", p.id)
        for w in self.wormholes.values():
            for e in sorted(lat.region_interior(w.mouth_a)):
                pin(e, "Z", w.id)
            for e in sorted(lat.region_interior(w.mouth_b)):
                pin(e, "X", w.id)
        return pins

    def pairs(self) -> list[tuple[int, int]]:
        out = []
        for t in self.twist_lines.values():
            out.extend(t.pairs)
        for w in self.wormholes.values():
            out.extend(w.pairing)
        return out

    def pair_owner(self) -> dict[tuple[int, int], str]:
        out = {}
        for t in self.twist_lines.values():
            for p in t.pairs:
                out[p] = t.id
        for w in self.wormholes.values():
            for p in w.pairing:
                out[p] = w.id
        return out

    def footprint(self, lat: Lattice, defect_id: str) -> set[int]:
        """Edges used by one defect (pins and pair edges)."""
        if defect_id in self.punctures:
            p = self.punctures[defect_id]
            out = set()
            for v in p.vertices:
                out.update(lat.star_support[v])
            for f in p.faces:
                out.update(lat.face_support[f])
            return out
        if defect_id in self.twist_lines:
            return {e for pair in self.twist_lines[defect_id].pairs for e in pair}
        if defect_id in self.wormholes:
            w = self.wormholes[defect_id]
            return (lat.region_support(w.mouth_a) | lat.region_support(w.mouth_b)
                    | {e for pair in w.pairing for e in pair})
        raise DefectError(f"unknown defect {defect_id!r}")


# ---- checks ------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    kind: str   # pin | pair | star | plaquette | hybrid | merged
    key: tuple
    op: PauliOperator

    @property
    def charge(self) -> str:
        if self.kind == "star":
            return "e"
        if self.kind == "plaquette":
            return "m"
        return self.kind


_ORDER = {"pin": 0, "pair": 1, "hybrid": 2, "merged": 2, "star": 3, "plaquette": 3}


@dataclass
class CheckSet:
    checks: list[Check]
    frustrated: list[tuple[str, Site, PauliOperator, frozenset]]

    def ops(self) -> list[PauliOperator]:
        return [c.op for c in self.checks]

    def bits(self) -> set[int]:
        return {c.op.bits() for c in self.checks}

    def of_kind(self, *kinds) -> list[Check]:
        return [c for c in self.checks if c.kind in kinds]


def code_checks(lat: Lattice, defects: DefectSet) -> CheckSet:
    """Local checks of the code defined by a defect configuration."""
    n = lat.n
    pins = defects.pins(lat)
    pairs = defects.pairs()
    pair_of_edge: dict[int, tuple[str, tuple[int, int]]] = {}
    for a, b in pairs:
        for e, side in ((a, "X"), (b, "Z")):
            if e in pair_of_edge:
                raise CollisionError(f"edge {lat.edges[e]} used by two pair checks")
            pair_of_edge[e] = (side, (a, b))
    for e, kind in pins.items():
        if e in pair_of_edge and pair_of_edge[e][0] != kind:
            raise CollisionError(f"pin {kind} on edge {lat.edges[e]} anticommutes with a pair check")

    checks: list[Check] = []
    special: list[PauliOperator] = []
    for e in sorted(pins):
        op = PauliOperator.single(n, e, pins[e])
        checks.append(Check("pin", (e,), op))
        special.append(op)
    for a, b in pairs:
        op = multiply(PauliOperator.single(n, a, "X"), PauliOperator.single(n, b, "Z"))
        checks.append(Check("pair", (a, b), op))
        special.append(op)

    frustrated = []
    gens = [("star", v, "X", lat.star_support[v]) for v in sorted(lat.star_support)]
    gens += [("plaquette", f, "Z", lat.face_support[f]) for f in sorted(lat.face_support)]
    for kind, site, pk, sup in gens:
        reduced = [e for e in sup if pins.get(e) != pk]
        if not reduced:
            continue
        op = PauliOperator.from_sites(n, pk, reduced)
        sig = frozenset(i for i, s in enumerate(special) if not commutes(op, s))
        if sig:
            frustrated.append((kind, site, op, sig))
        else:
            checks.append(Check(kind, (site,), op))

    groups: dict[frozenset, list] = {}
    for item in frustrated:
        groups.setdefault(item[3], []).append(item)
    for sig in sorted(groups, key=lambda s: sorted(s)):
        items = groups[sig]
        for a, b in _spanning_pairs(items):
            kinds = {a[0], b[0]}
            label = "hybrid" if kinds == {"star", "plaquette"} else "merged"
            checks.append(Check(label, ((a[0], a[1]), (b[0], b[1])), multiply(a[2], b[2])))
    checks.sort(key=lambda c: (_ORDER[c.kind], c.key))
    return CheckSet(checks, frustrated)


def _spanning_pairs(items):
    """Independent local products generating all products of a frustrated group.

    Every pairwise product in the group commutes with the pins and pair
    checks.  Stars are first matched to plaquettes through the lightest
    available products (the hybrids); the matched blocks and any leftovers
    are then joined by a lightest spanning tree.
    """
    m = len(items)
    if m < 2:
        return []
    weight = {}
    for i in range(m):
        for j in range(i + 1, m):
            weight[i, j] = multiply(items[i][2], items[j][2]).weight
    stars = [i for i in range(m) if items[i][0] == "star"]
    faces = [j for j in range(m) if items[j][0] == "plaquette"]
    match: dict[int, int] = {}  # face -> star
    for w in sorted({weight[min(i, j), max(i, j)] for i in stars for j in faces}):
        adj = {i: [j for j in faces if weight[min(i, j), max(i, j)] <= w] for i in stars}

        def augment(i, seen):
            for j in adj[i]:
                if j in seen:
                    continue
                seen.add(j)
                if j not in match or augment(match[j], seen):
                    match[j] = i
                    return True
            return False

        for i in stars:
            if i not in match.values():
                augment(i, set())
    parent = list(range(m))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    out = []
    for j, i in sorted(match.items(), key=lambda t: (t[1], t[0])):
        parent[find(i)] = find(j)
        out.append((items[i], items[j]))
    for (i, j), _w in sorted(weight.items(), key=lambda t: (t[1], t[0])):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
            out.append((items[i], items[j]))
    return out


def hybrid_weights(lat: Lattice, defects: DefectSet, owner: str | None = None) -> list[int]:
    """Weights of hybrid checks, optionally only those frustrated by one defect's pairs."""
    cs = code_checks(lat, defects)
    if owner is None:
        return [c.op.weight for c in cs.of_kind("hybrid")]
    pairs = set()
    if owner in defects.twist_lines:
        pairs = set(defects.twist_lines[owner].pairs)
    elif owner in defects.wormholes:
        pairs = set(defects.wormholes[owner].pairing)
    pair_ops = [multiply(PauliOperator.single(lat.n, a, "X"), PauliOperator.single(lat.n, b, "Z"))
                for a, b in pairs]
    out = []
    for c in cs.of_kind("hybrid"):
        (_, s1), (_, s2) = c.key
        parts = [lat.star(s1) if k == "star" else lat.plaquette(s1) for k, s1 in [c.key[0]]]
        parts += [lat.star(s2) if k == "star" else lat.plaquette(s2) for k, s2 in [c.key[1]]]
        if any(not commutes(p, q) for p in parts for q in pair_ops):
            out.append(c.op.weight)
    return out


# ---- log -----------------------------------------------------------------------

@dataclass(frozen=True)
class LogStep:
    tag: str
    record: MeasurementRecord | None = None
    release: tuple[PauliOperator, PauliOperator, bool] | None = None  # (released, conjugate, as_z)


@dataclass
class DeformationLog:
    steps: list[LogStep] = field(default_factory=list)
    logical_images: list = field(default_factory=list)  # live view of the frame's logical pairs

    def add(self, tag: str, record: MeasurementRecord) -> None:
        self.steps.append(LogStep(tag, record))

    def add_release(self, tag: str, released: PauliOperator, conj: PauliOperator, as_z: bool = True) -> None:
        self.steps.append(LogStep(tag, None, (released, conj, as_z)))

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def records(self) -> list[MeasurementRecord]:
        return [s.record for s in self.steps if s.record is not None]

    def replay(self, initial: StabilizerFrame) -> StabilizerFrame:
        frame = initial.copy()
        for step in self.steps:
            if step.record is not None:
                frame.measure(step.record.observable, step.record.outcome)
            else:
                _release(frame, *step.release)
        return frame

    def summary(self) -> str:
        counts: dict[str, dict[str, int]] = {}
        order: list[str] = []
        for s in self.steps:
            if s.tag not in counts:
                counts[s.tag] = {}
                order.append(s.tag)
            kind = s.record.kind if s.record is not None else "release"
            counts[s.tag][kind] = counts[s.tag].get(kind, 0) + 1
        lines = []
        for tag in order:
            parts = ", ".join(f"{k}={v}" for k, v in sorted(counts[tag].items()))
            lines.append(f"{tag}: {parts}")
        return "\n".join(lines)

    def to_lines(self) -> list[str]:
        out = []
        for s in self.steps:
            if s.record is not None:
                r = s.record
                out.append(f"measure {r.observable} {r.outcome:+d} {s.tag}")
            else:
                op, conj, as_z = s.release
                out.append(f"release {'Z' if as_z else 'X'} {op} {conj} {s.tag}")
        return out

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "DeformationLog":
        log = cls()
        for ln in lines:
            # the tag goes last since it may contain spaces
            parts = ln.split(None, 4 if ln.startswith("release") else 3)
            if not parts:
                continue
            if parts[0] == "measure":
                obs, outcome, tag = PauliOperator.from_string(parts[1]), int(parts[2]), parts[3]
                log.steps.append(LogStep(tag, MeasurementRecord(obs, outcome, False)))
            elif parts[0] == "release":
                log.steps.append(LogStep(parts[4], None, (PauliOperator.from_string(parts[2]),
                                                          PauliOperator.from_string(parts[3]),
                                                          parts[1] == "Z")))
            else:
                raise ValueError(f"bad log line {ln!r}")
        return log


def _release(frame: StabilizerFrame, op: PauliOperator, conj: PauliOperator, as_z: bool = True) -> None:
    # op is a stabilizer here, so multiplying existing logicals by it changes
    # nothing physically while making them commute with the new conjugate.
    pairs = []
    for lx, lz in frame.logicals:
        if not commutes(lx, conj):
            lx = multiply(lx, op).unsigned()
        if not commutes(lz, conj):
            lz = multiply(lz, op).unsigned()
        pairs.append((lx, lz))
    frame.logicals[:] = pairs
    frame.release(op, conj, as_z=as_z)


# ---- engine --------------------------------------------------------------------

class DefectEngine:
    """Stateful driver: one frame, one defect registry, one log."""

    def __init__(self, lat: Lattice, frame: StabilizerFrame, source: OutcomeSource = 1):
        self.lat = lat
        self.frame = frame
        self.defects = DefectSet()
        self.log = DeformationLog()
        self.source = source
        self.checks = code_checks(lat, self.defects)
        self._counter = {"P": 0, "T": 0, "W": 0}
        self.partner: dict[str, str] = {}
        self.labels: list[str] = [f"torus{i + 1}" for i in range(frame.k)]
        self.log.logical_images = list(self.frame.logicals)

    # -- identifiers
    def _new_id(self, prefix: str) -> str:
        self._counter[prefix] += 1
        return f"{prefix}{self._counter[prefix]}"

    # -- core deformation
    def apply(self, new: DefectSet, tag: str) -> list[MeasurementRecord]:
        """Deform the code to configuration ``new`` by measuring its new checks."""
        cs = code_checks(self.lat, new)
        old = self.checks.bits()
        recs = []
        for c in cs.checks:
            if c.op.bits() in old:
                continue
            rec = self.frame.measure(c.op, self.source)
            self.log.add(tag, rec)
            recs.append(rec)
        self.defects = new
        self.checks = cs
        self.frame.removed_qubits = frozenset(new.pins(self.lat))
        self.log.logical_images = list(self.frame.logicals)
        return recs

    def code_k(self) -> int:
        from . import gf2
        return self.lat.n - gf2.rank([op.bits() for op in self.checks.ops()])

    def _check_free(self, new_edges: set[int], ignore: Iterable[str] = ()) -> None:
        ignore = set(ignore)
        for d in self.defects.ids():
            if d in ignore:
                continue
            clash = new_edges & self.defects.footprint(self.lat, d)
            if clash:
                raise CollisionError(f"overlaps defect {d} on edges {sorted(clash)}")

    # -- punctures
    def create_puncture(self, region: Region, type: str, partner: str | None = None) -> str:
        """Pin a smooth (vertex) or rough (plaquette) region.

        The second unpaired puncture of a type is matched with the first and
        the pair's logical qubit is installed.
        """
        if type not in ("smooth", "rough"):
            raise DefectError(f"unknown puncture type {type!r}")
        want = "vertices" if type == "smooth" else "plaquettes"
        if region.kind != want:
            raise DefectError(f"{type} punctures need a {want} region, got {region.kind}")
        cells = frozenset(self.lat.wrap(m) for m in region.members)
        pid = self._new_id("P")
        p = Puncture(pid, cells if type == "smooth" else frozenset(), cells if type == "rough" else frozenset())
        new = self.defects.copy()
        new.punctures[pid] = p
        self._check_free(new.footprint(self.lat, pid))
        saved = (self.frame.copy(), self.defects, self.checks, len(self.log.steps), self.log.logical_images)
        self.apply(new, f"create {pid}")
        if partner is None:
            waiting = [q for q, other in self.defects.punctures.items()
                       if q != pid and other.type == type and q not in self.partner]
            partner = waiting[0] if waiting else None
        if partner is not None and self.puncture_chain(partner, pid).weight == 0:
            frame, self.defects, self.checks, n_steps, self.log.logical_images = saved
            self.frame.stabilizers[:], self.frame.logicals[:] = frame.stabilizers, frame.logicals
            self.frame.removed_qubits = frame.removed_qubits
            self.frame._touch()
            del self.log.steps[n_steps:]
            self._counter["P"] -= 1
            raise CollisionError(f"{pid} would share a frustrated check with {partner}")
        if partner is not None:
            self.install_puncture_pair(partner, pid)
        return pid

    def puncture_loop(self, pid: str) -> PauliOperator:
        """Product of the generators removed by the puncture's own pins."""
        p = self.defects.punctures[pid]
        own = set()
        for v in p.vertices:
            own.update(self.lat.star_support[v])
        for f in p.faces:
            own.update(self.lat.face_support[f])
        out = PauliOperator.identity(self.lat.n)
        for kind, site, _op, _sig in self.checks.frustrated:
            sup = self.lat.star_support[site] if kind == "star" else self.lat.face_support[site]
            if set(sup) & own:
                full = self.lat.star(site) if kind == "star" else self.lat.plaquette(site)
                out = multiply(out, full)
        # strip the puncture's own pinned sites
        sites = [q for q in out.support if q not in own]
        kind = "Z" if p.type == "smooth" else "X"
        return PauliOperator.from_sites(self.lat.n, kind, sites)

    def _frustrated_cells(self, pid: str) -> list[Site]:
        p = self.defects.punctures[pid]
        own = set()
        for v in p.vertices:
            own.update(self.lat.star_support[v])
        for f in p.faces:
            own.update(self.lat.face_support[f])
        out = []
        for kind, site, _op, _sig in self.checks.frustrated:
            sup = self.lat.star_support[site] if kind == "star" else self.lat.face_support[site]
            if set(sup) & own:
                out.append(site)
        return out

    def blocked_edges(self, kind: str) -> set[int]:
        """Edges a ``kind`` string may not use without exciting a pin or pair check."""
        pins = self.defects.pins(self.lat)
        out = {e for e, k in pins.items() if k != kind}
        for a, b in self.defects.pairs():
            out.add(b if kind == "X" else a)
        return out

    def puncture_chain(self, pid_a: str, pid_b: str) -> PauliOperator:
        """Shortest chain joining two punctures of the same type."""
        pa, pb = self.defects.punctures[pid_a], self.defects.punctures[pid_b]
        if pa.type != pb.type or pa.type == "mixed":
            raise DefectError("chain needs two punctures of the same pure type")
        kind = "X" if pa.type == "smooth" else "Z"
        return path_operator(self.lat, (self._frustrated_cells(pid_a), self._frustrated_cells(pid_b)),
                             kind, blocked=self.blocked_edges(kind))

    def install_logical(self, op: PauliOperator, conj: PauliOperator, label: str,
                        as_z: bool = True) -> int:
        """Promote state stabilizer ``op`` to a logical Z (or X) with conjugate ``conj``."""
        for c in self.checks.ops():
            if not commutes(c, conj):
                raise DefectError("conjugate does not commute with the code checks")
        op, conj = op.unsigned(), conj.unsigned()
        _release(self.frame, op, conj, as_z)
        self.log.add_release(f"install:{label}", op, conj, as_z)
        self.labels.append(label)
        self.log.logical_images = list(self.frame.logicals)
        return self.frame.k - 1

    def _logical_ops(self) -> list[PauliOperator]:
        return [op for pair in self.frame.logicals for op in pair]

    def _in_code_span(self, op: PauliOperator) -> bool:
        from . import gf2
        rows = [c.bits() for c in self.checks.ops()] + [p.bits() for p in self._logical_ops()]
        return gf2.solve(rows, op.bits()) is not None

    def install_extras(self, candidates: Sequence[PauliOperator], labels: Sequence[str]) -> list[int]:
        """Promote each independent candidate loop to a logical Z with a shortest conjugate.

        Candidates already generated by the checks and installed logicals are
        skipped.  Each conjugate is the shortest closed string that
        anticommutes with its own loop and commutes with the other candidates
        and with every installed logical operator.
        """
        from . import gf2
        rows = [c.bits() for c in self.checks.ops()] + [p.bits() for p in self._logical_ops()]
        cands = []
        for i, z in enumerate(candidates):
            z = z.unsigned()
            if gf2.solve(rows, z.bits()) is not None:
                continue
            if self.frame.contains(z) is Membership.NOT_IN_GROUP:
                raise DefectError(f"loop {i} is not a stabilizer of the current state")
            rows.append(z.bits())
            cands.append((z, labels[i]))
        out = []
        for i, (z, label) in enumerate(cands):
            others = [c for j, (c, _l) in enumerate(cands) if j != i] + self._logical_ops()
            graph = AnyonGraph(self.lat.n, self.checks.checks)
            x = graph.cycle([z] + others, [1] + [0] * len(others))
            if x is None:
                raise DefectError(f"no conjugate string found for loop {i}")
            out.append(self.install_logical(z, x, label))
        return out

    def install_puncture_pair(self, pid_a: str, pid_b: str) -> int:
        """Logical pair of two like punctures: loop around ``pid_a`` and the chain to ``pid_b``."""
        p = self.defects.punctures[pid_a]
        loop = self.puncture_loop(pid_a)
        chain = self.puncture_chain(pid_a, pid_b)
        self.partner[pid_a], self.partner[pid_b] = pid_b, pid_a
        # smooth pair: Z loop, X chain; rough pair: X loop, Z chain
        return self.install_logical(loop, chain, f"{pid_a}+{pid_b}", as_z=p.type == "smooth")

    # -- motion
    def _shift(self, cells: Iterable[Site], d: tuple[int, int]) -> frozenset[Site]:
        out = set()
        for r, c in cells:
            s = self.lat.wrap((r + d[0], c + d[1]))
            out.add(s)
        return frozenset(out)

    def move_puncture(self, pid: str, direction: str) -> None:
        """Move one cell: grow into the shifted footprint, then release the old cells.

        When the grown footprint touches the X (Z) edge of a pair check the
        puncture crosses to the partner side and continues with the opposite
        type there.
        """
        if direction not in DIRECTIONS:
            raise DefectError(f"unknown direction {direction!r}")
        d = DIRECTIONS[direction]
        p = self.defects.punctures[pid]
        tv, tf = self._shift(p.vertices, d), self._shift(p.faces, d)
        grown = Puncture(pid, p.vertices | tv, p.faces | tf)
        far_v, far_f = self._far_cells(grown, p)
        for site in tv | tf:
            table = self.lat.star_support if site in tv else self.lat.face_support
            if site not in table:
                raise CollisionError(f"{pid} would leave the lattice at {site}")
        new = self.defects.copy()
        if far_v or far_f:
            grown = Puncture(pid, grown.vertices | far_v, grown.faces | far_f)
            new.punctures[pid] = grown
            self._check_free(new.footprint(self.lat, pid) - self.defects.footprint(self.lat, pid)
                             - self._pair_edges(), ignore=[pid])
            self.apply(new, f"move {pid} {direction} grow")
            final = Puncture(pid, frozenset(far_v), frozenset(far_f))
        else:
            new.punctures[pid] = grown
            self._check_free(new.footprint(self.lat, pid) - self.defects.footprint(self.lat, pid), ignore=[pid])
            self.apply(new, f"move {pid} {direction} grow")
            final = Puncture(pid, tv, tf)
        new = self.defects.copy()
        new.punctures[pid] = final
        self.apply(new, f"move {pid} {direction} shrink")

    def _pair_edges(self) -> set[int]:
        return {e for pair in self.defects.pairs() for e in pair}

    def _far_cells(self, grown: Puncture, before: Puncture) -> tuple[set[Site], set[Site]]:
        """Cells on the partner side of any pair edge newly covered by ``grown``."""
        lat = self.lat
        old_edges = set()
        for v in before.vertices:
            old_edges.update(lat.star_support[v])
        for f in before.faces:
            old_edges.update(lat.face_support[f])
        mouth_cells_v, mouth_cells_f = set(), set()
        for w in self.defects.wormholes.values():
            for m in (w.mouth_a, w.mouth_b):
                (mouth_cells_v if m.kind == "vertices" else mouth_cells_f).update(m.members)
        far_v, far_f = set(), set()
        for a, b in self.defects.pairs():
            x_cov = any(a in lat.star_support[v] for v in grown.vertices) and a not in old_edges
            z_cov = any(b in lat.face_support[f] for f in grown.faces) and b not in old_edges
            if x_cov:
                # Z on b is now implied; continue as a rough cell beside b
                cands = [f for f in lat.edge_faces(b)
                         if a not in lat.face_support[f] and f not in mouth_cells_f
                         and not self._face_in_mouth(f)]
                if not cands:
                    raise CollisionError(f"no free face beyond pair edge {lat.edges[b]}")
                far_f.add(sorted(cands)[0])
            if z_cov:
                ends_b = set(lat.edge_vertices(b))
                cands = [v for v in lat.edge_vertices(a) if v not in ends_b and not self._vertex_in_mouth(v)]
                if not cands:
                    raise CollisionError(f"no free vertex beyond pair edge {lat.edges[a]}")
                far_v.add(sorted(cands)[0])
        return far_v, far_f

    def _face_in_mouth(self, f: Site) -> bool:
        for w in self.defects.wormholes.values():
            if w.mouth_b.kind == "plaquettes" and f in w.mouth_b.members:
                return True
            if w.mouth_a.kind == "vertices" and all(v in w.mouth_a.members for v in self._face_corners(f)):
                return True
        return False

    def _vertex_in_mouth(self, v: Site) -> bool:
        for w in self.defects.wormholes.values():
            if v in w.mouth_a.members:
                return True
            if all(f in w.mouth_b.members for f in self._vertex_faces(v)):
                return True
        return False

    def _face_corners(self, f: Site) -> list[Site]:
        r, c = f
        return [self.lat.wrap(s) for s in ((r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1))]

    def _vertex_faces(self, v: Site) -> list[Site]:
        r, c = v
        return [self.lat.wrap(s) for s in ((r - 1, c - 1), (r - 1, c), (r, c - 1), (r, c))]

    def move_path(self, pid: str, directions: Iterable[str]) -> None:
        for d in directions:
            self.move_puncture(pid, d)

    def _busy_edges(self, pid: str) -> set[int]:
        """Edges a wandering puncture should keep clear of: other defects and their special checks."""
        busy = set()
        for d in self.defects.ids():
            if d != pid:
                busy |= self.defects.footprint(self.lat, d)
        for c in self.checks.checks:
            if c.kind in ("hybrid", "merged"):
                busy.update(c.op.support)
        return busy

    def route(self, pid: str, target: Site) -> list[str]:
        """Directions walking a one-cell puncture to ``target`` through clear cells.

        Intermediate cells keep the puncture's pins off other defects and
        their hybrid checks; only the final cell may touch them (which is how
        a puncture enters a mouth or a defect line).  Routes never cross the
        periodic seam, so a closed tour is contractible.
        """
        p = self.defects.punctures[pid]
        cells = p.vertices or p.faces
        if len(cells) != 1 or p.type == "mixed":
            raise DefectError("routing needs a one-cell puncture")
        table = self.lat.star_support if p.vertices else self.lat.face_support
        busy = self._busy_edges(pid)
        start = next(iter(cells))
        target = self.lat.wrap(target)
        prev = {start: None}
        frontier = [start]
        while frontier and target not in prev:
            nxt = []
            for cell in frontier:
                for name, (dr, dc) in DIRECTIONS.items():
                    raw = (cell[0] + dr, cell[1] + dc)
                    other = self.lat.wrap(raw)
                    if raw != other or other not in table or other in prev:
                        continue
                    if other != target and busy & set(table[other]):
                        continue
                    prev[other] = (cell, name)
                    nxt.append(other)
            frontier = nxt
        if target not in prev:
            raise CollisionError(f"no clear route for {pid} to {target}")
        out = []
        cell = target
        while prev[cell] is not None:
            cell, name = prev[cell]
            out.append(name)
        return out[::-1]

    def walk(self, pid: str, target: Site) -> None:
        self.move_path(pid, self.route(pid, target))

    # -- twist lines
    def twist_pairs(self, start: Site, end: Site) -> list[tuple[int, int]]:
        """X/Z edge pairs of a straight defect line between two sites.

        A line down column ``c`` measures ``X`` on the edge entering each site
        from the left and ``Z`` on the edge entering it from above; a line
        along row ``r`` uses the edge above (X) and the edge to the left (Z).
        """
        (r0, c0), (r1, c1) = start, end
        lat = self.lat
        if c0 == c1 and r1 > r0:
            return [(lat.edge("h", r, c0 - 1), lat.edge("v", r - 1, c0)) for r in range(r0 + 1, r1 + 1)]
        if r0 == r1 and c1 > c0:
            return [(lat.edge("v", r0 - 1, c), lat.edge("h", r0, c - 1)) for c in range(c0 + 1, c1 + 1)]
        raise DefectError("twist lines run down a column or right along a row")

    def create_twist_line(self, start: Site, end: Site) -> str:
        tid = self._new_id("T")
        line = TwistLine(tid, self.lat.wrap(start), self.lat.wrap(end), self.twist_pairs(start, end))
        new = self.defects.copy()
        new.twist_lines[tid] = line
        self._check_free(new.footprint(self.lat, tid))
        self.apply(new, f"create {tid}")
        self.install_extras([self.twist_line_loop(tid)], [tid])
        return tid

    def twist_checks(self, tid: str) -> list[Check]:
        """Hybrid checks frustrated by this line's pair measurements (twists at the ends)."""
        pairs = set(self.defects.twist_lines[tid].pairs)
        return self._hybrids_touching(pairs)

    def _hybrids_touching(self, pairs: set[tuple[int, int]]) -> list[Check]:
        n = self.lat.n
        pair_ops = [multiply(PauliOperator.single(n, a, "X"), PauliOperator.single(n, b, "Z")) for a, b in pairs]
        out = []
        for c in self.checks.of_kind("hybrid"):
            parts = [self.lat.star(s) if k == "star" else self.lat.plaquette(s) for k, s in c.key]
            if any(not commutes(p, q) for p in parts for q in pair_ops):
                out.append(c)
        return out

    def twists(self, tid: str) -> list[Check]:
        """The two end hybrids, each frustrated by a single pair measurement."""
        line = self.defects.twist_lines[tid]
        n = self.lat.n
        pair_ops = [multiply(PauliOperator.single(n, a, "X"), PauliOperator.single(n, b, "Z")) for a, b in line.pairs]
        out = []
        for c in self.twist_checks(tid):
            k, s = c.key[0]
            part = self.lat.star(s) if k == "star" else self.lat.plaquette(s)
            hits = sum(1 for q in pair_ops if not commutes(part, q))
            if hits == 1:
                out.append(c)
        return out

    def twist_line_loop(self, tid: str) -> PauliOperator:
        """Product of the plaquette halves of a line's hybrids (a Z loop around the line)."""
        out = PauliOperator.identity(self.lat.n)
        for c in self.twist_checks(tid):
            for k, s in c.key:
                if k == "plaquette":
                    out = multiply(out, self.lat.plaquette(s))
        return out.unsigned()

    # -- wormholes
    def default_pairing(self, mouth_a: Region, mouth_b: Region) -> list[tuple[int, int]]:
        """Orientation-reversed cyclic pairing anchored at each boundary's first edge."""
        ba = self.lat.region_boundary(mouth_a)
        bb = self.lat.region_boundary(mouth_b)
        if len(ba) != len(bb):
            raise DefectError(f"mouth boundaries differ in length: {len(ba)} vs {len(bb)}")
        m = len(ba)
        return [(ba[i], bb[(-i) % m]) for i in range(m)]

    def create_wormhole(self, mouth_a: Region, mouth_b: Region,
                        pairing: list[tuple[int, int]] | None = None, sink: bool = False) -> str:
        if mouth_a.kind != "vertices" or mouth_b.kind != "plaquettes":
            raise DefectError("mouth A is a vertex region and mouth B a plaquette region")
        sa, sb = self.lat.region_support(mouth_a), self.lat.region_support(mouth_b)
        if sa & sb:
            raise CollisionError("wormhole mouths overlap")
        if not self.lat.region_interior(mouth_a) or not self.lat.region_interior(mouth_b):
            raise DefectError("each mouth needs a non-empty interior")
        if pairing is None:
            pairing = self.default_pairing(mouth_a, mouth_b)
        else:
            ba, bb = set(self.lat.region_boundary(mouth_a)), set(self.lat.region_boundary(mouth_b))
            if sorted(a for a, _ in pairing) != sorted(ba) or sorted(b for _, b in pairing) != sorted(bb):
                raise DefectError("explicit pairing must be a bijection between the two boundaries")
        wid = self._new_id("W")
        new = self.defects.copy()
        new.wormholes[wid] = Wormhole(wid, mouth_a, mouth_b, list(pairing), sink)
        self._check_free(new.footprint(self.lat, wid))
        self.apply(new, f"create {wid}")
        # a sink's own qubit is labelled by the loop around mouth B, so that a
        # needle passing through it B-first leaves that qubit untouched
        loops = [self.mouth_loop_a(wid), self.mouth_loop_b(wid)]
        names = [f"{wid}.a", f"{wid}.b"]
        if sink:
            loops, names = loops[::-1], names[::-1]
        self.install_extras(loops, names)
        return wid

    def wormhole_hybrids(self, wid: str) -> list[Check]:
        return self._hybrids_touching(set(self.defects.wormholes[wid].pairing))

    def mouth_loop_a(self, wid: str) -> PauliOperator:
        """Z loop around mouth A: product of the plaquette halves of its hybrids."""
        out = PauliOperator.identity(self.lat.n)
        for c in self.wormhole_hybrids(wid):
            for k, s in c.key:
                if k == "plaquette":
                    out = multiply(out, self.lat.plaquette(s))
        return out.unsigned()

    def mouth_loop_b_stars(self, wid: str) -> PauliOperator:
        """X loop around mouth B: product of the star halves of its hybrids."""
        out = PauliOperator.identity(self.lat.n)
        for c in self.wormhole_hybrids(wid):
            for k, s in c.key:
                if k == "star":
                    out = multiply(out, self.lat.star(s))
        return out.unsigned()

    def mouth_loop_b(self, wid: str) -> PauliOperator:
        """Z loop around mouth B: Z on its boundary edges."""
        w = self.defects.wormholes[wid]
        return PauliOperator.from_sites(self.lat.n, "Z", self.lat.region_boundary(w.mouth_b))

    # -- composite protocols
    def target_edges(self, target: str) -> set[int]:
        """Edges owned by a defect, or by one mouth (``W1.mouthA``) and its hybrid halves."""
        if "." not in target:
            out = set(self.defects.footprint(self.lat, target))
            if target in self.defects.wormholes or target in self.defects.twist_lines:
                pairs = (self.defects.wormholes[target].pairing if target in self.defects.wormholes
                         else self.defects.twist_lines[target].pairs)
                for c in self._hybrids_touching(set(pairs)):
                    out.update(c.op.support)
            return out
        wid, mouth = target.split(".", 1)
        if wid not in self.defects.wormholes or mouth not in ("mouthA", "mouthB"):
            raise DefectError(f"unknown braid target {target!r}")
        w = self.defects.wormholes[wid]
        region = w.mouth_a if mouth == "mouthA" else w.mouth_b
        half = "plaquette" if mouth == "mouthA" else "star"
        out = set(self.lat.region_support(region))
        for c in self.wormhole_hybrids(wid):
            for k, site in c.key:
                if k == half:
                    part = self.lat.plaquette(site) if k == "plaquette" else self.lat.star(site)
                    out.update(part.support)
        return out

    def _tour(self, pid: str, edges: set[int]) -> list[Site]:
        """Corners of the smallest clear rectangle of cells enclosing ``edges``."""
        p = self.defects.punctures[pid]
        rows, cols = set(), set()
        for e in edges:
            for r, c in self.lat.edge_vertices(e):
                rows.add(r)
                cols.add(c)
        if max(rows) - min(rows) > self.lat.L // 2 or max(cols) - min(cols) > self.lat.L // 2:
            raise CollisionError("target straddles the periodic seam")
        # vertex cells must sit one row outside; face cells need their far edge outside too
        lo = 1 if p.type == "smooth" else 2
        r0, r1 = min(rows) - lo, max(rows) + 1
        c0, c1 = min(cols) - lo, max(cols) + 1
        if r0 < 0 or c0 < 0 or r1 >= self.lat.L or c1 >= self.lat.L:
            raise CollisionError("no room for a tour around the target")
        return [(r0, c0), (r0, c1), (r1, c1), (r1, c0)]

    def _straight(self, pid: str, target: Site) -> None:
        p = self.defects.punctures[pid]
        table = self.lat.star_support if p.vertices else self.lat.face_support
        (r, c), (tr, tc) = next(iter(p.vertices or p.faces)), target
        if r == tr:
            steps = ["right" if tc > c else "left"] * abs(tc - c)
        elif c == tc:
            steps = ["down" if tr > r else "up"] * abs(tr - r)
        else:
            raise DefectError(f"{target} is not in line with {pid}")
        busy = self._busy_edges(pid)
        cell = (r, c)
        for name in steps:
            dr, dc = DIRECTIONS[name]
            cell = (cell[0] + dr, cell[1] + dc)
            if busy & set(table[cell]):
                raise CollisionError(f"tour of {pid} is blocked at {cell}")
        self.move_path(pid, steps)

    def braid(self, pid: str, around: str):
        """Carry a one-cell puncture once around ``around`` and back; returns the logical action."""
        snap = self.snapshot()
        p = self.defects.punctures[pid]
        start = next(iter(p.vertices or p.faces))
        if around:
            corners = self._tour(pid, self.target_edges(around))
            first = min(range(4), key=lambda i: abs(corners[i][0] - start[0]) + abs(corners[i][1] - start[1]))
            self.walk(pid, corners[first])
            # straight legs only: a detour around the far side would undo the loop
            for i in range(1, 5):
                self._straight(pid, corners[(first + i) % 4])
        self.walk(pid, start)
        return self.action_since(snap)

    def _entries(self, wid: str, mouth: str, kind: str) -> list[Site]:
        """Cells from which a puncture of ``kind`` steps into a mouth."""
        w = self.defects.wormholes[wid]
        out = []
        if mouth == "a" and kind == "smooth":
            inside = set(w.mouth_a.members)
            for e in self.lat.region_boundary(w.mouth_a):
                out += [v for v in self.lat.edge_vertices(e) if v not in inside]
        elif mouth == "b" and kind == "rough":
            inside = set(w.mouth_b.members)
            for e in self.lat.region_boundary(w.mouth_b):
                out += [f for f in self.lat.edge_faces(e) if f not in inside]
        else:
            raise DefectError(f"a {kind} puncture cannot enter mouth {mouth} of {wid}")
        return sorted(set(out))

    def _walk_into(self, pid: str, wid: str, mouth: str) -> None:
        p = self.defects.punctures[pid]
        here = next(iter(p.vertices or p.faces))
        best = None
        for cell in self._entries(wid, mouth, p.type):
            try:
                path = self.route(pid, cell)
            except CollisionError:
                continue
            if best is None or len(path) < len(best):
                best = path
        if best is None:
            raise CollisionError(f"{pid} cannot reach mouth {mouth} of {wid} from {here}")
        self.move_path(pid, best)

    def stitch(self, pid: str, wid: str, sink: str):
        """Pass a one-cell needle through ``wid`` and back through ``sink``; returns the logical action."""
        if sink not in self.defects.wormholes or not self.defects.wormholes[sink].sink:
            raise DefectError(f"{sink!r} is not a sink wormhole")
        if wid == sink:
            raise DefectError("the stitched wormhole and the sink must differ")
        snap = self.snapshot()
        p = self.defects.punctures[pid]
        start = next(iter(p.vertices or p.faces))
        first, second = ("a", "b") if p.type == "smooth" else ("b", "a")
        self._walk_into(pid, wid, first)
        self._walk_into(pid, sink, second)
        if self.defects.punctures[pid].type != p.type:
            raise DefectError("needle did not return to its original type")
        self.walk(pid, start)
        return self.action_since(snap)

    def _plain_index(self) -> dict[tuple[str, Site], int]:
        return {(c.kind, c.key[0]): i for i, c in enumerate(self.checks.checks)
                if c.kind in ("star", "plaquette")}

    def anyon_string(self, charge: str, start: Site, end: Site) -> PauliOperator:
        """Shortest ordinary string between two like checks, through plain checks only."""
        kind = {"e": "star", "m": "plaquette"}[charge]
        idx = self._plain_index()
        try:
            a, b = idx[(kind, self.lat.wrap(start))], idx[(kind, self.lat.wrap(end))]
        except KeyError as exc:
            raise DefectError(f"no plain {kind} check at {exc.args[0][1]}") from None
        graph = AnyonGraph(self.lat.n, self.checks.checks)
        op = graph.path(a, b, allowed=set(idx.values()))
        if op is None:
            raise DefectError("no ordinary string joins the two checks")
        return op

    def transport_anyon(self, charge: str, start: Site, mouths: Sequence[str]):
        """Carry a ``charge`` anyon from ``start`` through each listed mouth in turn.

        Each hop walks through plain checks to the nearest check touching the
        entry mouth, then crosses using only that wormhole's own hybrid and
        pair checks until it reaches a plain check touching the partner
        mouth.  Returns the string operator and its syndrome.
        """
        from .analysis import syndrome
        kind = {"e": "star", "m": "plaquette"}[charge]
        idx = self._plain_index()
        node = idx.get((kind, self.lat.wrap(start)))
        if node is None:
            raise DefectError(f"no plain {kind} check at {start}")
        plain = set(idx.values())
        graph = AnyonGraph(self.lat.n, self.checks.checks)
        total = PauliOperator.identity(self.lat.n)
        for mouth in mouths:
            wid, side = mouth.split(".", 1)
            if wid not in self.defects.wormholes or side not in ("mouthA", "mouthB"):
                raise DefectError(f"unknown mouth {mouth!r}")
            other = f"{wid}.{'mouthB' if side == 'mouthA' else 'mouthA'}"
            near, far = self.target_edges(mouth), self.target_edges(other)
            other_kind = "plaquette" if kind == "star" else "star"
            entry = [i for i in plain if self.checks.checks[i].kind == kind
                     and set(self.checks.checks[i].op.support) & near]
            own = set(self.defects.wormholes[wid].pairing)
            hyb = {c.key for c in self._hybrids_touching(own)}
            special = {i for i, c in enumerate(self.checks.checks)
                       if (c.kind == "pair" and c.key in own) or (c.kind == "hybrid" and c.key in hyb)}
            # the charge label flips on the way through
            exits = [i for i in plain if self.checks.checks[i].kind == other_kind
                     and set(self.checks.checks[i].op.support) & far
                     and not set(self.checks.checks[i].op.support) & near]
            best = None
            for gate in sorted(entry):
                approach = (PauliOperator.identity(self.lat.n) if gate == node
                            else graph.path(node, gate, allowed=plain))
                if approach is None:
                    continue
                try:
                    through, end = self._shortest(graph, gate, exits, special)
                except DefectError:
                    continue
                w = approach.weight + through.weight
                if best is None or w < best[0]:
                    best = (w, multiply(approach, through), end)
            if best is None:
                raise DefectError(f"anyon path does not pass through {mouth}")
            total = multiply(total, best[1])
            node = best[2]
            kind = other_kind
        total = total.unsigned()
        return total, syndrome(self.checks.checks, total)

    def _shortest(self, graph: "AnyonGraph", src: int, goals: Iterable[int], allowed: set[int]):
        best = None
        for g in sorted(goals):
            op = graph.path(src, g, allowed=allowed)
            if op is not None and (best is None or op.weight < best[0].weight):
                best = (op, g)
        if best is None:
            raise DefectError("anyon path does not reach the mouth")
        return best

    # -- logical action helpers
    def snapshot(self) -> tuple[StabilizerFrame, int]:
        return self.frame.copy(), len(self.log)

    def action_since(self, snap) -> "LogicalAction":
        initial, start = snap
        return logical_action(self.log.steps[start:], initial, self.frame)



# ---- anyon graph ----------------------------------------------------------------

VACUUM = -1


class AnyonGraph:
    """Checks as nodes, single-qubit X and Z flips as edges.

    A flip that excites exactly two checks joins them; one that excites a
    single check joins it to :data:`VACUUM` (an open boundary).  Walks map to
    Pauli strings: an open walk moves an excitation, a closed walk commutes
    with every check.
    """

    def __init__(self, n: int, checks: Sequence[Check]):
        self.n = n
        self.checks = list(checks)
        touch: dict[int, list[int]] = {}
        for i, c in enumerate(self.checks):
            for q in c.op.support:
                touch.setdefault(q, []).append(i)
        self.moves: list[tuple[PauliOperator, int, int]] = []
        self.adj: dict[int, list[tuple[int, int]]] = {}
        for q in range(n):
            for kind in "XZ":
                op = PauliOperator.single(n, q, kind)
                syn = [i for i in touch.get(q, []) if not commutes(op, self.checks[i].op)]
                if len(syn) == 1:
                    syn.append(VACUUM)
                if len(syn) != 2:
                    continue
                m = len(self.moves)
                self.moves.append((op, syn[0], syn[1]))
                self.adj.setdefault(syn[0], []).append((m, syn[1]))
                self.adj.setdefault(syn[1], []).append((m, syn[0]))

    def _bfs(self, start: int, goal: int, parity0: int, want: int, par: list[int],
             blocked: set[int] = frozenset(), allowed: set[int] | None = None) -> list[int] | None:
        seen = {(start, parity0): None}
        frontier = [(start, parity0)]
        while frontier:
            nxt = []
            for state in frontier:
                node, p = state
                if node == goal and p == want:
                    path = []
                    while seen[state] is not None:
                        m, state = seen[state]
                        path.append(m)
                    return path[::-1]
                if allowed is not None and node != start and node not in allowed:
                    continue
                for m, other in self.adj.get(node, ()):
                    if m in blocked:
                        continue
                    s2 = (other, p ^ par[m])
                    if s2 not in seen:
                        seen[s2] = (m, state)
                        nxt.append(s2)
            frontier = nxt
        return None

    def _product(self, moves: Iterable[int]) -> PauliOperator:
        out = PauliOperator.identity(self.n)
        for m in moves:
            out = multiply(out, self.moves[m][0])
        return out.unsigned()

    def path(self, a: int, b: int, allowed: set[int] | None = None) -> PauliOperator | None:
        """Shortest string moving an excitation from check ``a`` to check ``b``.

        ``allowed`` restricts the checks the string may pass through on the way.
        """
        par = [0] * len(self.moves)
        found = self._bfs(a, b, 0, 0, par, allowed=allowed)
        return None if found is None else self._product(found)

    def cycle(self, targets: Sequence[PauliOperator], want: Sequence[int]) -> PauliOperator | None:
        """Shortest closed string with symplectic products ``want`` against ``targets``."""
        par = []
        for op, _u, _v in self.moves:
            mask = 0
            for t, target in enumerate(targets):
                if not commutes(op, target):
                    mask |= 1 << t
            par.append(mask)
        goal = sum(1 << t for t, w in enumerate(want) if w)
        best = None
        for m, (op, u, v) in enumerate(self.moves):
            if not par[m] & 1:
                continue
            rest = self._bfs(v, u, par[m], goal, par, {m})
            if rest is not None and (best is None or len(rest) + 1 < len(best)):
                best = [m] + rest
        return None if best is None else self._product(best)
