import pytest

from dense import rank_mod2, symplectic_rows
from wormholes.frame import Membership
from wormholes.lattice import (
    LatticeError,
    NoPathError,
    OpenPathError,
    Region,
    build,
    loop_operator,
    parse_region,
    path_operator,
)
from wormholes.pauli import PauliOperator, commutes


@pytest.mark.parametrize("L", range(2, 9))
def test_toric_counts(L):
    lat, frame = build(L)
    assert lat.n == 2 * L * L
    assert rank_mod2(symplectic_rows(frame.stabilizers)) == lat.n - 2
    assert frame.k == 2


@pytest.mark.parametrize("L", [2, 3, 4])
def test_incidence(L):
    lat, _ = build(L)
    for e in range(lat.n):
        assert len(lat.edge_vertices(e)) == 2
        assert len(lat.edge_faces(e)) == 2
    assert all(len(s) == 4 for s in lat.star_support.values())
    assert all(len(s) == 4 for s in lat.face_support.values())


def test_all_stars_and_plaquettes_multiply_to_identity():
    lat, _ = build(4)
    x = z = 0
    for s in lat.star_support:
        x ^= lat.star(s).x
    for f in lat.face_support:
        z ^= lat.plaquette(f).z
    assert x == 0 and z == 0


def test_stars_commute_with_plaquettes():
    lat, _ = build(3)
    for s in lat.star_support:
        for f in lat.face_support:
            assert commutes(lat.star(s), lat.plaquette(f))


def test_build_rejects_small():
    with pytest.raises(LatticeError):
        build(1)


def test_plaquette_loop_is_that_plaquette():
    lat, frame = build(4)
    loop = loop_operator(lat, lat.face_support[(1, 2)], "Z")
    assert loop == lat.plaquette((1, 2))
    assert frame.contains(loop) is Membership.PLUS


def test_noncontractible_loop_is_logical():
    lat, frame = build(3)
    loop = loop_operator(lat, [lat.edge("h", 0, c) for c in range(3)], "Z")
    assert loop.weight == 3
    assert frame.contains(loop) is Membership.NOT_IN_GROUP
    assert all(commutes(loop, s) for s in frame.stabilizers)


def test_open_loop_rejected():
    lat, _ = build(4)
    with pytest.raises(OpenPathError):
        loop_operator(lat, [lat.edge("h", 0, 0)], "Z")


def test_zero_length_path_is_identity():
    lat, _ = build(4)
    assert path_operator(lat, ((1, 1), (1, 1)), "Z").is_identity


def test_open_z_chain_excites_two_end_stars():
    lat, _ = build(5)
    chain = path_operator(lat, ((1, 1), (3, 4)), "Z")
    hit = [s for s in lat.star_support if not commutes(lat.star(s), chain)]
    assert sorted(hit) == [(1, 1), (3, 4)]
    assert chain.weight == 4  # 2 rows plus 2 columns the short way round


def test_blocked_path():
    lat, _ = build(3)
    every = range(lat.n)
    with pytest.raises(NoPathError):
        path_operator(lat, ((0, 0), (1, 1)), "Z", blocked=every)


def test_region_literal():
    r = parse_region("plaquettes:(1,1),(1,2)")
    assert r == Region("plaquettes", ((1, 1), (1, 2)))
    assert r.literal() == "plaquettes:(1,1),(1,2)"
    for bad in ["faces:(1,1)", "plaquettes:", "vertices:(1,1),(x,2)", "plaquettes (1,1)"]:
        with pytest.raises(LatticeError):
            parse_region(bad)


def test_region_boundary_is_ordered_cycle_and_commutes_outside():
    lat, frame = build(6)
    region = Region("plaquettes", ((2, 2), (2, 3), (3, 2)))
    boundary = lat.region_boundary(region)
    assert boundary[0] == min(boundary)
    assert len(boundary) == 8
    loop = loop_operator(lat, boundary, "Z")
    members = set(region.members)
    # the boundary Z loop is the product of the member plaquettes
    prod = PauliOperator.identity(lat.n)
    for f in members:
        prod = prod * lat.plaquette(f)
    assert loop.same_bits(prod)
    for s in lat.star_support:
        assert commutes(loop, lat.star(s))


def test_translation_invariance():
    L = 4
    lat, _ = build(L)

    def shift(e):
        kind, r, c = lat.edges[e]
        return lat.edge(kind, (r + 1) % L, (c + 2) % L)

    gens = {lat.star(s).bits() for s in lat.star_support} | {lat.plaquette(f).bits() for f in lat.face_support}
    for s in list(lat.star_support) + list(lat.face_support):
        op = lat.star(s) if s in lat.star_support else None
        if op is None:
            continue
        moved = PauliOperator.from_sites(lat.n, "X", [shift(e) for e in op.support])
        assert moved.bits() in gens


def test_planar_smoke():
    lat, frame = build(4, "planar")
    assert frame.k == 1
    assert all(commutes(a, b) for a in frame.stabilizers for b in frame.stabilizers)
    assert lat.n - rank_mod2(symplectic_rows(frame.stabilizers)) == 1
