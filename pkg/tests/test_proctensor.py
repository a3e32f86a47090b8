import numpy as np
import pytest

from qproc import channels as ch
from qproc import proctensor as pt
from qproc import qla, tomo
from qproc.qla import SX, SZ, I2


def random_circuit(k, seed, d_E=2):
    rng = np.random.default_rng(seed)
    rho = qla.random_state(2 * d_E, seed=int(rng.integers(1 << 30)))
    Us = [qla.haar_unitary(2 * d_E, seed=int(rng.integers(1 << 30))) for _ in range(k)]
    return pt.CircuitProcess(rho, Us, 2, d_E)


def random_instrument_element(seed):
    """One CP element of a random two-outcome instrument (trace non-increasing)."""
    J = tomo.measure_prepare_instrument(tomo.random_ic_povm(2, seed=seed),
                                        [qla.random_state(2, seed=seed + k) for k in range(4)])
    return J.elements[seed % 4]


CONSTRUCTIONS = {
    "pocket": lambda: pt.shallow_pocket(1.0, 0.7),
    "pocket3": lambda: pt.shallow_pocket(0.5, durations=[0.2, 1.0, 0.4]),
    "stern-gerlach": lambda: pt.stern_gerlach_process(3),
    "initial-correlations": lambda: pt.initial_correlation_process((0.3, 0.2, 0.4), 0.5, 0.7),
    "markov": lambda: pt.markov_tensor(qla.random_state(2, seed=1),
                                       [ch.random_cptp(seed=2), ch.amplitude_damping(0.4)]),
    "circuit": lambda: pt.process_from_circuit(random_circuit(2, 3)),
}


@pytest.mark.parametrize("name", sorted(CONSTRUCTIONS))
def test_constructions_are_causal(name):
    rep = pt.check_causality(CONSTRUCTIONS[name]())
    assert rep.passed and rep.psd, rep.to_dict()
    assert rep.trace == pytest.approx(rep.trace_expected)


def test_causality_check_flags_signalling_tensor():
    # output at time 0 signalled back into the initial input: swap the roles of slots
    T = pt.markov_tensor(qla.proj([1, 0]), [ch.random_cptp(seed=4)])
    bad = pt.ProcessTensor(qla.permute(T.cmatrix(), [2, 1, 0]).data, T.slots)
    rep = pt.check_causality(bad)
    assert not rep.passed and rep.failed_level is not None


@pytest.mark.parametrize("seed", range(6))
def test_born_rule_matches_direct_simulation(seed):
    c = random_circuit(2, seed)
    T = pt.process_from_circuit(c)
    ops = [random_instrument_element(seed), random_instrument_element(seed + 1)]
    E = tomo.random_ic_povm(2, seed=seed).elements[0]
    assert pt.born_multi(T, ops + [E]) == pytest.approx(pt.simulate_circuit(c, ops + [E]), abs=1e-12)


def test_born_probabilities_sum_to_one_over_instruments():
    T = pt.process_from_circuit(random_circuit(2, 11))
    J = tomo.projective_instrument(d=2)
    total = sum(pt.born_multi(T, [a, b, E]) for a in J.elements for b in J.elements
                for E in tomo.projective_povm(d=2).elements)
    assert total == pytest.approx(1.0)


def test_open_final_slot_returns_subnormalized_state():
    T = pt.process_from_circuit(random_circuit(1, 5))
    A = random_instrument_element(3)
    rho = pt.born_multi(T, [A, "open"])
    p = pt.born_multi(T, [A, None])
    assert np.trace(rho).real == pytest.approx(p)
    assert qla.is_psd(rho)[0]


def test_reduce_matches_rebuilt_circuit():
    # dropping the middle time (identity) equals the circuit with the unitaries merged
    c = random_circuit(2, 7)
    T = pt.process_from_circuit(c)
    merged = pt.process_from_circuit(pt.CircuitProcess(c.rho_SE, [c.unitaries[1] @ c.unitaries[0]], 2))
    R = pt.reduce(T, [0, 2])
    assert np.allclose(R.choi, merged.choi, atol=1e-12)


def test_reduce_traces_later_times():
    c = random_circuit(2, 8)
    R = pt.reduce(pt.process_from_circuit(c), [0, 1])
    head = pt.process_from_circuit(pt.CircuitProcess(c.rho_SE, c.unitaries[:1], 2))
    assert np.allclose(R.choi, head.choi, atol=1e-12)
    assert pt.check_causality(R).passed


def test_reduce_requires_operation_for_earlier_times():
    T = pt.shallow_pocket(1.0, 0.3)
    with pytest.raises(ValueError):
        pt.reduce(T, [1, 2])
    R = pt.reduce(T, [1, 2], ops={0: qla.proj([1, 0])})
    assert R.conditional


def test_pocket_conditioned_on_identity_dephases_over_both_steps():
    g, t = 0.6, 0.8
    E = pt.pocket_channel(g, [t, t], [ch.identity_channel(2)])
    assert np.allclose(E.choi, ch.dephasing(g, 2 * t).choi, atol=1e-12)


def test_pocket_flip_refocuses_dephasing():
    g, t = 0.6, 0.8
    E = pt.pocket_channel(g, [t, t], [ch.unitary_channel(SX)])
    rho = qla.random_state(2, seed=2)
    assert np.allclose(ch.apply(E, rho), SX @ rho @ SX, atol=1e-12)


def test_pocket_single_step_is_dephasing():
    E = pt.pocket_channel(1.3, [0.5])
    assert np.allclose(E.choi, ch.dephasing(1.3, 0.5).choi)


def test_condition_on_zero_probability_outcome_raises():
    T = pt.stern_gerlach_process(2)  # starts in |+x>
    minus = qla.proj(np.array([1, -1]) / np.sqrt(2))
    with pytest.raises(ValueError, match="probability"):
        pt.condition_on_past(T, [ch.Channel(2, 2, "kraus", [minus])])


def test_conditioning_on_markov_past_leaves_future_unchanged():
    E1, E2 = ch.random_cptp(seed=21), ch.random_cptp(seed=22)
    T = pt.markov_tensor(qla.random_state(2, seed=20), [E1, E2])
    A = random_instrument_element(5)
    R = pt.condition_on_past(T, [A])
    # remaining process: normalized E1(A(rho0)) at 1i followed by E2
    head = pt.reduce(T, [0, 1])
    rho1 = pt.born_multi(head, [A, "open"]) / pt.born_multi(head, [A, None])
    assert np.allclose(R.choi, pt.markov_tensor(rho1, [E2]).choi)
    rep = pt.check_causality(R)
    assert rep.passed
    B = tomo.random_ic_povm(2, seed=1).elements[2]
    p_joint = pt.born_multi(T, [A, random_instrument_element(7), B])
    p_past = pt.born_multi(T, [A, ch.identity_channel(2), None])
    p_cond = pt.born_multi(R, [random_instrument_element(7), B])
    assert p_cond == pytest.approx(p_joint / p_past)


def test_superchannel_identity_input_gives_reduced_dynamics():
    rho_SE = pt.initial_correlation_state((0.1, -0.2, 0.3), 0.4)
    U = ch.xyz_coupling(0.3)
    T = pt.superchannel_build(rho_SE, U)
    # feeding the identity operation: tr_E[U rho_SE U^dag] (row-major Choi of a state)
    direct = qla.partial_trace(qla.CMatrix(U @ rho_SE @ U.conj().T, [2, 2]), [0]).data
    out = pt.apply_superchannel(T, ch.identity_channel(2))
    assert np.allclose(out, direct)


def test_superchannel_output_matches_simulation_for_cp_input():
    rho_SE = pt.initial_correlation_state((0.3, 0.2, 0.4), 0.5)
    U = ch.xyz_coupling(0.7)
    T = pt.superchannel_build(rho_SE, U)
    A = ch.random_cptp(seed=3)
    rho = sum(np.kron(K, I2) @ rho_SE @ np.kron(K, I2).conj().T for K in A.kraus)
    direct = qla.partial_trace(qla.CMatrix(U @ rho @ U.conj().T, [2, 2]), [0]).data
    assert np.allclose(pt.apply_superchannel(T, A), direct)


def test_initial_correlation_map_choi_and_spectrum():
    g, wt = 0.5, 0.7
    c, s = np.cos(2 * wt), np.sin(2 * wt)
    h = g * c * s
    # images of |k><l| under I -> I - h X, sigma_j -> c^2 sigma_j
    img = {(0, 0): np.array([[1 + c * c, -h], [-h, 1 - c * c]]) / 2,
           (1, 1): np.array([[1 - c * c, -h], [-h, 1 + c * c]]) / 2,
           (0, 1): np.array([[0, c * c], [0, 0]]),
           (1, 0): np.array([[0, 0], [c * c, 0]])}
    expected = np.zeros((4, 4))
    for (k, l), M in img.items():  # rows (out, in)
        for a in range(2):
            for b in range(2):
                expected[2 * a + k, 2 * b + l] = M[a, b]
    E = pt.initial_correlation_map(g, wt)
    assert np.allclose(E.choi, expected)
    vals = np.linalg.eigvalsh(E.choi)
    for v in (0.5 * (1 - c * c + h), 0.5 * (1 - c * c - h)):
        assert np.min(np.abs(vals - v)) < 1e-12


def test_initial_correlation_map_is_what_the_superchannel_gives_from_its_image():
    # with a = 0 the superchannel applied to unitary preparations reproduces the map
    g, wt = 0.5, 0.7
    T = pt.initial_correlation_process((0, 0, 0), g, wt)
    E = pt.initial_correlation_map(g, wt)
    for P in (I2, SX, SZ):
        out = pt.apply_superchannel(T, ch.unitary_channel(P))
        # the input operation acts on the maximally mixed reduced state, which is invariant
        assert np.allclose(np.trace(out), 1)
    assert np.allclose(pt.apply_superchannel(T, ch.identity_channel(2)), ch.apply(E, I2 / 2))


def test_link_product_composes_channels():
    A, B = ch.random_cptp(seed=1), ch.random_cptp(seed=2)
    dims = {"a": 2, "b": 2, "c": 2}
    # channel Choi order is (out, in); labels listed in matrix order
    C, labels = pt.link_product(B.choi, ["c", "b"], A.choi, ["b", "a"], dims)
    assert labels == ["c", "a"]
    assert np.allclose(C, ch.compose(B, A).choi)


def test_link_product_with_state_is_application():
    A = ch.random_cptp(seed=3)
    rho = qla.random_state(2, seed=4)
    out, labels = pt.link_product(A.choi, ["o", "i"], rho, ["i"], {"o": 2, "i": 2})
    assert labels == ["o"] and np.allclose(out, ch.apply(A, rho))


def test_link_product_dimension_mismatch():
    with pytest.raises(ValueError):
        pt.link_product(np.eye(4), ["a", "b"], np.eye(3), ["b"], {"a": 2, "b": 2})


@pytest.mark.parametrize("name", ["pocket", "circuit", "markov"])
def test_process_tomography_roundtrip(name):
    T = CONSTRUCTIONS[name]()
    basis = pt.ic_basis_for(T, seed=3)
    probs = pt.basis_probabilities(T, basis)
    est = pt.reconstruct_process(probs, basis, T.slots)
    assert np.allclose(est.choi, T.choi, atol=1e-9)


def test_basis_probabilities_agree_with_born_rule():
    T = CONSTRUCTIONS["circuit"]()
    basis = pt.ic_basis_for(T, seed=9)
    P = pt.basis_probabilities(T, basis)
    idx = (3, 7, 1)
    A = np.kron(np.kron(basis[0][3], basis[1][7]), basis[2][1])
    assert P[idx] == pytest.approx(pt.born_multi(T, A))


def test_reconstruct_rejects_incomplete_family():
    T = CONSTRUCTIONS["markov"]()
    basis = pt.ic_basis_for(T, seed=1)
    basis[1] = basis[1][:-1]
    with pytest.raises(ValueError):
        pt.reconstruct_process(np.zeros([len(b) for b in basis]), basis, T.slots)


def test_tester_hierarchy():
    slots = pt.standard_slots(1, 2)
    # measure-and-reprepare instrument at time 0 followed by a two-outcome POVM
    J = tomo.projective_instrument(d=2)
    total = sum(np.kron(pt.op_matrix(A, 2, 2), pt.op_matrix(E, 2))
                for A in J.elements for E in tomo.projective_povm(d=2).elements)
    ok, res = pt.check_tester(total, slots)
    assert ok, res
    ok, _ = pt.check_tester(2 * total, slots)
    assert not ok


def test_serialization_roundtrip():
    T = CONSTRUCTIONS["pocket3"]()
    back = pt.ProcessTensor.from_dict(T.to_dict())
    assert np.allclose(back.choi, T.choi) and back.slots == T.slots


def test_invalid_slots_and_shapes():
    with pytest.raises(ValueError):
        pt.ProcessTensor(np.eye(4), pt.standard_slots(1, 2))
    with pytest.raises(ValueError):
        pt.shallow_pocket(-1.0, 1.0)
    with pytest.raises(ValueError):
        pt.born_multi(pt.shallow_pocket(1.0, 1.0), [None])
    with pytest.raises(ValueError):
        pt.CircuitProcess(np.eye(4) / 4, [np.ones((4, 4))], 2)
