import itertools
import random

import numpy as np
import pytest

from dense import matrix
from wormholes.frame import Membership, StabilizerFrame
from wormholes.pauli import PauliOperator, multiply
from wormholes.protocols import (
    CATALYST_MISSING,
    NOT_NEEDLE_MEASURABLE,
    TRACE_BLOCKED,
    TRACE_SELF_CROSSING,
    CliffordMap,
    MeasurementGadget,
    ProtocolError,
    catalytic_y_measure,
    clifford_closure,
    crosses_itself,
    cz_gadget,
    embed_map,
    lemma1_pair,
    lemma1_synthesize,
    logical_pauli,
    needle_operator,
    pauli_gates,
    prepare_catalyst,
    trace_operator,
)

P = PauliOperator.from_string


def dense_branch(gadget, outcomes, psi):
    """Run a gadget branch on a dense state; returns the data state after tracing out ancillas."""
    n = gadget.n
    state = psi
    for _ in range(gadget.n_ancilla):
        state = np.kron(state, np.array([1, 0], dtype=complex))
    rho = np.outer(state, state.conj())
    eye = np.eye(2 ** n)
    for prep in gadget.ancilla_prep:
        proj = (eye + matrix(prep)) / 2
        rho = proj @ rho @ proj
    rho /= np.trace(rho)
    for step, o in zip(gadget.steps, outcomes):
        proj = (eye + o * matrix(step.observable)) / 2
        rho = proj @ rho @ proj
        p = np.real(np.trace(rho))
        if p < 1e-9:
            return None
        rho /= p
        fix = step.corrections.get(o)
        if fix is not None:
            m = matrix(fix)
            rho = m @ rho @ m.conj().T
    d = 2 ** gadget.n_data
    rho = rho.reshape(d, 2 ** gadget.n_ancilla, d, 2 ** gadget.n_ancilla)
    return np.einsum("iaja->ij", rho)


def random_state(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


CZ = np.diag([1, 1, 1, -1]).astype(complex)


# ---- gadgets: abstract layer ----

def test_cz_gadget_matches_dense_cz_on_all_branches():
    g = cz_gadget()
    rng = np.random.default_rng(7)
    psi = random_state(rng, 4)
    want = CZ @ psi
    hits = 0
    for outcomes in itertools.product((1, -1), repeat=3):
        rho = dense_branch(g, outcomes, psi)
        if rho is None:
            continue
        hits += 1
        assert abs(np.real(want.conj() @ rho @ want) - 1) < 1e-9
    assert hits == 8


def test_cz_gadget_symplectic_images():
    m = cz_gadget().action()
    assert m.key() == CliffordMap.from_images(["+XZ", "+ZX"], ["+ZI", "+IZ"]).key()
    assert m.then(m).key() == CliffordMap.identity(2).key()


def test_cz_gadget_outcome_independent_and_has_eight_branches():
    g = cz_gadget()
    assert len(g.branches()) == 8
    assert g.is_outcome_independent()


@pytest.mark.parametrize("A,B", [("X", "Z"), ("Z", "X"), ("X", "Y"), ("Y", "Z")])
def test_axis_swap_heisenberg_images_match_dense(A, B):
    g = lemma1_synthesize(A, B, A, B)
    m = g.action()
    rng = np.random.default_rng(3)
    psi = random_state(rng, 2)
    for outcomes in itertools.product((1, -1), repeat=len(g.steps)):
        rho = dense_branch(g, outcomes, psi)
        if rho is None:
            continue
        for q in ("+X", "+Z", "+Y"):
            before = np.real(psi.conj() @ matrix(P(q)) @ psi)
            after = np.real(np.trace(rho @ matrix(m.apply(P(q)))))
            assert abs(before - after) < 1e-9


@pytest.mark.parametrize("A,B,swapped", [("X", "Z", ("Z", "Y")), ("Z", "X", ("X", "Y"))])
def test_axis_swap_swaps_b_and_c(A, B, swapped):
    m = lemma1_synthesize(A, B, A, B).action()
    b, c = swapped
    assert m.apply(P(b)).letters() == c
    assert m.apply(P(c)).letters() == b
    assert m.apply(P(A)).letters() == A


def test_axis_swap_relabelled_ancilla_gives_same_action():
    base = lemma1_synthesize("X", "Z", "X", "Z").action()
    for p in "YZ":
        other = lemma1_synthesize("X", "Z", p, "Z").action()
        assert other.symplectic_key() == base.symplectic_key()


@pytest.mark.parametrize("bad", [("X", "X", "X", "Z"), ("I", "Z", "X", "Z"), ("X", "Z", "I", "Z"),
                                 ("X", "Z", "X", "I"), ("XX", "Z", "X", "Z")])
def test_axis_swap_degenerate_inputs(bad):
    with pytest.raises(ProtocolError):
        lemma1_synthesize(*bad)


def test_axis_swap_closure_orders():
    gens = [g.action() for g in lemma1_pair("X", "Z", "X", "Z")]
    assert len(clifford_closure(gens, modulo_paulis=True)) == 6
    assert len(clifford_closure(gens + pauli_gates(1))) == 24


def test_two_qubit_closure_is_full_clifford_group_mod_paulis():
    singles = [g.action() for g in lemma1_pair("X", "Z", "X", "Z")]
    gens = [embed_map(s, 2, [q]) for s in singles for q in (0, 1)] + [cz_gadget().action()]
    assert len(clifford_closure(gens, modulo_paulis=True)) == 720


def test_gadget_dump_round_trip():
    for g in [cz_gadget(), lemma1_synthesize("Z", "Y", "X", "Z")]:
        again = MeasurementGadget.load(g.dump())
        assert again.dump() == g.dump()
        assert again.action().key() == g.action().key()


def test_gadget_that_reads_out_data_is_rejected():
    with pytest.raises(ProtocolError):
        MeasurementGadget.derive(1, 1, ["+IZ"], ["ZI"])


# ---- catalytic Y ----

def two_qubit_frame():
    return StabilizerFrame(2, [], [(P("XI"), P("ZI")), (P("IX"), P("IZ"))])


def test_catalyst_missing_is_reported_without_mutation():
    f = two_qubit_frame()
    before = f.dump()
    with pytest.raises(ProtocolError) as err:
        catalytic_y_measure(f, P("YI"), P("IY"))
    assert err.value.code == CATALYST_MISSING
    assert f.dump() == before


def test_catalyst_survives_repeated_measurements():
    f = two_qubit_frame()
    cat = prepare_catalyst(f, 1)
    rng = random.Random(11)
    outcomes = set()
    for _ in range(12):
        f.measure(P("XI"), rng)  # refresh qubit a so the next outcome is random
        f, out = catalytic_y_measure(f, P("YI"), cat, rng)
        outcomes.add(out)
        assert f.contains(P("IY")) is Membership.PLUS
    assert outcomes == {1, -1}


def test_catalytic_measurement_on_y_eigenstate_is_deterministic():
    f = two_qubit_frame()
    cat = prepare_catalyst(f, 1)
    f.measure(P("YI"), 1)
    before = f.dump()
    for _ in range(3):
        f, out = catalytic_y_measure(f, P("YI"), cat, random.Random(0))
        assert out == 1
    assert f.dump() == before


def test_catalytic_measurement_reads_y_on_a():
    f = two_qubit_frame()
    cat = prepare_catalyst(f, 1)
    f, out = catalytic_y_measure(f, logical_pauli(f, 0, "Y"), cat, -1)
    assert out == -1
    assert f.contains(P("YI")) is Membership.MINUS


def test_self_crossing_parity():
    assert crosses_itself(P("Y"))
    assert not crosses_itself(P("YY"))
    assert not crosses_itself(P("XZ"))


# ---- needle layer on the lattice ----

def sq(kind, r0, c0, s):
    from wormholes.lattice import Region
    return Region(kind, tuple((r0 + i, c0 + j) for i in range(s) for j in range(s)))


@pytest.fixture
def braid_setup():
    from wormholes.defects import DefectEngine
    from wormholes.lattice import Region, build
    lat, frame = build(10)
    eng = DefectEngine(lat, frame)
    w = eng.create_wormhole(sq("vertices", 2, 2, 2), sq("plaquettes", 6, 6, 2))
    p = eng.create_puncture(Region("vertices", ((6, 2),)), "smooth")
    eng.create_puncture(Region("vertices", ((8, 2),)), "smooth")
    return eng, w, p


def test_trace_y_is_self_crossing(braid_setup):
    eng, w, p = braid_setup
    before = eng.frame.dump()
    with pytest.raises(ProtocolError) as err:
        trace_operator(eng, p, "Y", w)
    assert err.value.code == TRACE_SELF_CROSSING
    assert eng.frame.dump() == before


def test_trace_x_without_sink_is_blocked(braid_setup):
    eng, w, p = braid_setup
    with pytest.raises(ProtocolError) as err:
        trace_operator(eng, p, "X", w)
    assert err.value.code == TRACE_BLOCKED


def test_trace_z_maps_needle_x_to_x_times_z(braid_setup):
    eng, w, p = braid_setup
    iw, ineedle = eng.labels.index(f"{w}.a"), eng.labels.index(f"{p}+P2")
    _frame, image = trace_operator(eng, p, "Z", w)
    k = eng.frame.k
    assert image.same_bits(multiply(PauliOperator.single(k, ineedle, "X"), PauliOperator.single(k, iw, "Z")))
    # the needle's physical chain now measures X_n Z_w of the tracked qubits
    lx, _ = eng.frame.logicals[ineedle]
    _, zw = eng.frame.logicals[iw]
    chain = needle_operator(eng, p, "X")
    assert eng.frame.contains(multiply(chain, multiply(lx, zw))) is not Membership.NOT_IN_GROUP


def test_trace_x_through_sink():
    from wormholes.defects import DefectEngine
    from wormholes.lattice import Region, build
    lat, frame = build(10)
    eng = DefectEngine(lat, frame)
    sink = eng.create_wormhole(sq("vertices", 6, 1, 2), sq("plaquettes", 6, 6, 2), sink=True)
    w = eng.create_wormhole(sq("vertices", 1, 1, 2), sq("plaquettes", 1, 6, 2))
    p = eng.create_puncture(Region("vertices", ((4, 2),)), "smooth")
    eng.create_puncture(Region("vertices", ((4, 4),)), "smooth")
    _frame, image = trace_operator(eng, p, "X", w, sink=sink)
    k = eng.frame.k
    iw, ineedle = eng.labels.index(f"{w}.a"), eng.labels.index(f"{p}+P2")
    assert image.same_bits(multiply(PauliOperator.single(k, ineedle, "X"), PauliOperator.single(k, iw, "X")))


def test_needle_y_is_not_measurable(braid_setup):
    eng, _w, p = braid_setup
    from wormholes.protocols import needle_measure
    with pytest.raises(ProtocolError) as err:
        needle_measure(eng, p, "Y")
    assert err.value.code == NOT_NEEDLE_MEASURABLE


def test_needle_z_prepared_in_z_is_deterministic(braid_setup):
    eng, _w, p = braid_setup
    from wormholes.protocols import needle_measure
    assert needle_measure(eng, p, "Z", -1) == -1
    assert needle_measure(eng, p, "Z", random.Random(5)) == -1
    assert eng.log.steps[-1].record.deterministic
