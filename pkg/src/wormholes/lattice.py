"""Toric and planar surface-code geometry.

Sites are ``(r, c)`` with ``r`` the row (growing downward) and ``c`` the column.
The horizontal edge ``("h", r, c)`` leaves site ``(r, c)`` to the right and the
vertical edge ``("v", r, c)`` leaves it downward.  Face ``(r, c)`` has its
top-left corner at site ``(r, c)``.  On the torus all coordinates wrap mod L.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .frame import StabilizerFrame
from .pauli import PauliOperator

Site = tuple[int, int]


class LatticeError(ValueError):
    pass


class OpenPathError(LatticeError):
    pass


class NoPathError(LatticeError):
    pass


@dataclass(frozen=True)
class Region:
    kind: str  # "plaquettes" | "vertices"
    members: tuple[Site, ...]

    def __post_init__(self):
        if self.kind not in ("plaquettes", "vertices"):
            raise LatticeError(f"unknown region kind {self.kind!r}")
        object.__setattr__(self, "members", tuple(sorted(set(self.members))))

    def literal(self) -> str:
        return f"{self.kind}:" + ",".join(f"({r},{c})" for r, c in self.members)

    def __str__(self) -> str:
        return self.literal()


_CELL = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")


def parse_region(text: str) -> Region:
    """Parse ``plaquettes:(r,c),(r,c)`` or ``vertices:(r,c),...``."""
    kind, sep, rest = text.strip().partition(":")
    if not sep or kind not in ("plaquettes", "vertices"):
        raise LatticeError(f"malformed region literal {text!r}")
    rest = rest.strip()
    cells = [(int(a), int(b)) for a, b in _CELL.findall(rest)]
    if not cells or _CELL.sub("", rest).replace(",", "").strip():
        raise LatticeError(f"malformed region literal {text!r}")
    return Region(kind, tuple(cells))


class Lattice:
    """Edge/vertex/face incidence tables for one layout.

    Check supports are stored as sorted tuples of qubit indices.  Planar
    patches have dangling horizontal edges on the left and right (rough
    sides) and no wraparound.
    """

    def __init__(self, L: int, layout: str = "toric"):
        if L < 2:
            raise LatticeError(f"L must be at least 2, got {L}")
        if layout not in ("toric", "planar"):
            raise LatticeError(f"unknown layout {layout!r}")
        self.L = L
        self.layout = layout
        self.edges: list[tuple[str, int, int]] = []
        self.edge_index: dict[tuple[str, int, int], int] = {}
        self.star_support: dict[Site, tuple[int, ...]] = {}
        self.face_support: dict[Site, tuple[int, ...]] = {}
        if layout == "toric":
            self._build_toric()
        else:
            self._build_planar()
        self.n = len(self.edges)
        self._edge_vertices: list[list[Site]] = [[] for _ in range(self.n)]
        self._edge_faces: list[list[Site]] = [[] for _ in range(self.n)]
        for v, sup in self.star_support.items():
            for e in sup:
                self._edge_vertices[e].append(v)
        for f, sup in self.face_support.items():
            for e in sup:
                self._edge_faces[e].append(f)

    # ---- construction ---------------------------------------------------
    def _add_edge(self, key):
        self.edge_index[key] = len(self.edges)
        self.edges.append(key)

    def _build_toric(self):
        L = self.L
        for r in range(L):
            for c in range(L):
                self._add_edge(("h", r, c))
                self._add_edge(("v", r, c))
        h = lambda r, c: self.edge_index[("h", r % L, c % L)]
        v = lambda r, c: self.edge_index[("v", r % L, c % L)]
        for r in range(L):
            for c in range(L):
                self.star_support[(r, c)] = tuple(sorted({h(r, c), h(r, c - 1), v(r, c), v(r - 1, c)}))
                self.face_support[(r, c)] = tuple(sorted({h(r, c), h(r + 1, c), v(r, c), v(r, c + 1)}))

    def _build_planar(self):
        # Vertices sit in columns 1..L-1; horizontal edges in columns 0..L-1
        # dangle off both sides.
        L = self.L
        for r in range(L):
            for c in range(L):
                self._add_edge(("h", r, c))
        for r in range(L - 1):
            for c in range(1, L):
                self._add_edge(("v", r, c))
        e = self.edge_index
        for r in range(L):
            for c in range(1, L):
                sup = [e[("h", r, c - 1)], e[("h", r, c)]]
                if r > 0:
                    sup.append(e[("v", r - 1, c)])
                if r < L - 1:
                    sup.append(e[("v", r, c)])
                self.star_support[(r, c)] = tuple(sorted(sup))
        for r in range(L - 1):
            for c in range(L):
                sup = [e[("h", r, c)], e[("h", r + 1, c)]]
                if c >= 1:
                    sup.append(e[("v", r, c)])
                if c + 1 <= L - 1:
                    sup.append(e[("v", r, c + 1)])
                self.face_support[(r, c)] = tuple(sorted(sup))

    # ---- basic queries --------------------------------------------------
    @property
    def toric(self) -> bool:
        return self.layout == "toric"

    def wrap(self, site: Site) -> Site:
        if self.toric:
            return (site[0] % self.L, site[1] % self.L)
        return site

    def edge(self, kind: str, r: int, c: int) -> int:
        key = (kind, r % self.L, c % self.L) if self.toric else (kind, r, c)
        try:
            return self.edge_index[key]
        except KeyError:
            raise LatticeError(f"no edge {key}") from None

    def edge_vertices(self, e: int) -> list[Site]:
        return self._edge_vertices[e]

    def edge_faces(self, e: int) -> list[Site]:
        return self._edge_faces[e]

    def star(self, site: Site) -> PauliOperator:
        return PauliOperator.from_sites(self.n, "X", self.star_support[self.wrap(site)])

    def plaquette(self, site: Site) -> PauliOperator:
        return PauliOperator.from_sites(self.n, "Z", self.face_support[self.wrap(site)])

    def vertex_neighbors(self, v: Site) -> list[tuple[int, Site]]:
        out = []
        for e in self.star_support[v]:
            for w in self._edge_vertices[e]:
                if w != v:
                    out.append((e, w))
        return sorted(out)

    def face_neighbors(self, f: Site) -> list[tuple[int, Site]]:
        out = []
        for e in self.face_support[f]:
            for g in self._edge_faces[e]:
                if g != f:
                    out.append((e, g))
        return sorted(out)

    def midpoint(self, e: int) -> tuple[float, float]:
        kind, r, c = self.edges[e]
        return (r, c + 0.5) if kind == "h" else (r + 0.5, c)

    def edge_between(self, a: Site, b: Site) -> int:
        for e, w in self.vertex_neighbors(self.wrap(a)):
            if w == self.wrap(b):
                return e
        raise LatticeError(f"sites {a} and {b} are not adjacent")

    # ---- regions ----------------------------------------------------------
    def _check_members(self, region: Region) -> list[Site]:
        table = self.face_support if region.kind == "plaquettes" else self.star_support
        cells = [self.wrap(m) for m in region.members]
        for m in cells:
            if m not in table:
                raise LatticeError(f"{region.kind[:-1]} {m} not on this lattice")
        return cells

    def region_support(self, region: Region) -> set[int]:
        table = self.face_support if region.kind == "plaquettes" else self.star_support
        out: set[int] = set()
        for m in self._check_members(region):
            out.update(table[m])
        return out

    def region_boundary(self, region: Region) -> list[int]:
        """Symmetric difference of member supports, cyclically ordered.

        The walk is counterclockwise (rows grow downward, so "up" is -r) and
        starts at the smallest edge index.
        """
        table = self.face_support if region.kind == "plaquettes" else self.star_support
        sym: set[int] = set()
        for m in self._check_members(region):
            sym.symmetric_difference_update(table[m])
        if not sym:
            return []
        return self._order_cycle(sym, region.kind)

    def region_interior(self, region: Region) -> set[int]:
        return self.region_support(region) - set(self.region_boundary(region))

    def _order_cycle(self, edges: set[int], kind: str) -> list[int]:
        # Consecutive boundary edges share a vertex (plaquette regions) or a
        # face (vertex regions).
        link = self._edge_vertices if kind == "plaquettes" else self._edge_faces
        start = min(edges)
        order = [start]
        seen = {start}
        cur = start
        while True:
            nxt = None
            for node in link[cur]:
                cands = sorted(e for e in edges if e not in seen and node in link[e])
                if cands:
                    nxt = cands[0]
                    break
            if nxt is None:
                break
            order.append(nxt)
            seen.add(nxt)
            cur = nxt
        if len(order) != len(edges):
            # not a single simple cycle; fall back to index order
            return sorted(edges)
        if self._signed_area(order) < 0:
            order = [order[0]] + order[1:][::-1]
        return order

    def _signed_area(self, order: Sequence[int]) -> float:
        pts = [self.midpoint(order[0])]
        for e in order[1:]:
            r, c = self.midpoint(e)
            pr, pc = pts[-1]
            dr, dc = r - pr, c - pc
            if self.toric:
                dr = (dr + self.L / 2) % self.L - self.L / 2
                dc = (dc + self.L / 2) % self.L - self.L / 2
            pts.append((pr + dr, pc + dc))
        area = 0.0
        for (r1, c1), (r2, c2) in zip(pts, pts[1:] + pts[:1]):
            x1, y1, x2, y2 = c1, -r1, c2, -r2
            area += x1 * y2 - x2 * y1
        return area / 2


def build(L: int, layout: str = "toric") -> tuple[Lattice, StabilizerFrame]:
    """Lattice plus the code frame with all star and plaquette generators.

    On the torus the star and plaquette at ``(L-1, L-1)`` are dropped as
    redundant and the two non-contractible logical pairs are installed.
    """
    lat = Lattice(L, layout)
    n = lat.n
    stars = sorted(lat.star_support)
    faces = sorted(lat.face_support)
    if lat.toric:
        stars.remove((L - 1, L - 1))
        faces.remove((L - 1, L - 1))
    stabs = [lat.star(s) for s in stars] + [lat.plaquette(f) for f in faces]
    if lat.toric:
        logicals = [
            (PauliOperator.from_sites(n, "X", [lat.edge("h", r, 0) for r in range(L)]),
             PauliOperator.from_sites(n, "Z", [lat.edge("h", 0, c) for c in range(L)])),
            (PauliOperator.from_sites(n, "X", [lat.edge("v", 0, c) for c in range(L)]),
             PauliOperator.from_sites(n, "Z", [lat.edge("v", r, 0) for r in range(L)])),
        ]
    else:
        logicals = [
            (PauliOperator.from_sites(n, "X", [lat.edge("h", r, 0) for r in range(L)]),
             PauliOperator.from_sites(n, "Z", [lat.edge("h", 0, c) for c in range(L)])),
        ]
    return lat, StabilizerFrame(n, stabs, logicals)


def loop_operator(lat: Lattice, path: Iterable[int], pauli_kind: str) -> PauliOperator:
    """Product of ``pauli_kind`` over a closed edge sequence.

    Z loops must be primal cycles (every vertex touched an even number of
    times); X loops must be dual cycles (every face touched evenly).
    """
    edges = list(path)
    counts: dict[Site, int] = {}
    link = lat.edge_vertices if pauli_kind == "Z" else lat.edge_faces
    parity: dict[int, int] = {}
    for e in edges:
        parity[e] = parity.get(e, 0) ^ 1
    for e, odd in parity.items():
        if odd:
            for node in link(e):
                counts[node] = counts.get(node, 0) + 1
    # dangling planar edges have a single endpoint and may close on the boundary
    if any(v % 2 for v in counts.values()):
        raise OpenPathError(f"{pauli_kind} path is not closed")
    return PauliOperator.from_sites(lat.n, pauli_kind, edges)


def _bfs(start: Sequence[Site], goal: set[Site], neighbors, blocked: set[int]) -> list[int]:
    parent: dict[Site, tuple[Site | None, int | None]] = {}
    queue = deque()
    for s in sorted(start):
        parent[s] = (None, None)
        queue.append(s)
    while queue:
        node = queue.popleft()
        if node in goal:
            path = []
            while parent[node][0] is not None:
                prev, e = parent[node]
                path.append(e)
                node = prev
            return path[::-1]
        for e, nb in neighbors(node):
            if e in blocked or nb in parent:
                continue
            parent[nb] = (node, e)
            queue.append(nb)
    raise NoPathError("no path between endpoints")


def shortest_path(lat: Lattice, start: Iterable[Site], end: Iterable[Site], pauli_kind: str,
                  blocked: Iterable[int] = ()) -> list[int]:
    """Edges of a shortest chain; Z chains join vertices, X chains join faces."""
    start = [lat.wrap(s) for s in start]
    goal = {lat.wrap(s) for s in end}
    nbrs = lat.vertex_neighbors if pauli_kind == "Z" else lat.face_neighbors
    return _bfs(start, goal, nbrs, set(blocked))


def path_operator(lat: Lattice, endpoints: tuple[Iterable[Site], Iterable[Site]], pauli_kind: str,
                  blocked: Iterable[int] = ()) -> PauliOperator:
    """Pauli string along a shortest path between two endpoint sets.

    Z chains run between vertices, X chains between faces (dual lattice).
    Ties go to the lowest edge index explored first.
    """
    a, b = endpoints
    if isinstance(a, tuple) and len(a) == 2 and isinstance(a[0], int):
        a = [a]
    if isinstance(b, tuple) and len(b) == 2 and isinstance(b[0], int):
        b = [b]
    return PauliOperator.from_sites(lat.n, pauli_kind, shortest_path(lat, a, b, pauli_kind, blocked))
