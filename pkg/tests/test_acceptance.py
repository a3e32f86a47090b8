"""Acceptance criteria 1-11.

Each test records one ``criterion N: PASS|FAIL`` line (printed in the pytest
terminal summary by ``conftest.py``, or directly when this file is run as a
script) and then asserts the criterion.  Literal comparisons against printed
matrices that are known to disagree are kept literal: they fail, and the
diagnostic explains by how much.
"""
import itertools
import sys
import time

import numpy as np

from qproc import channels as ch
from qproc import classical as cl
from qproc import memory as mem
from qproc import proctensor as pt
from qproc import qla, tomo
from qproc.cli import main as cli_main

RESULTS = {}


def record(n, ok, detail=""):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
    RESULTS[n] = line
    print(line)
    return ok


# ---------------------------------------------------------------------------
# 1. shallow-pocket compressed Choi
# ---------------------------------------------------------------------------

def printed_pocket_matrix(gt):
    e1, e2 = np.exp(-gt), np.exp(-2 * gt)
    return np.array([[1, e1, e1, e2],
                     [e1, 1, 1, e2],
                     [e1, 1, 1, e2],
                     [e2, e1, e1, 1]])


def test_criterion_1_shallow_pocket_choi(tmp_path):
    worst_literal, worst_herm, causal = 0.0, 0.0, True
    for gt in (0.1, 1.0, 5.0):
        out = tmp_path / f"pocket_{gt}.json"
        assert cli_main(["proc", "build", "--model", "shallow-pocket", "--gamma-t", str(gt),
                         "--out", str(out)]) == 0
        T = pt.ProcessTensor.from_dict(__import__("json").loads(out.read_text())["process"])
        C = pt.compressed_choi(T)
        P = printed_pocket_matrix(gt)
        worst_literal = max(worst_literal, float(np.abs(C - P).max()))
        # Hermitian completion of the printed lower triangle
        L = np.tril(P) + np.tril(P, -1).T
        worst_herm = max(worst_herm, float(np.abs(C - L).max()))
        causal &= pt.check_causality(T).passed
    ok = worst_literal <= 1e-10 and causal
    record(1, ok, f"literal max dev {worst_literal:.3e} at entries (1,3),(2,3) where the printed "
                  f"matrix is not Hermitian; Hermitian-completed max dev {worst_herm:.1e}; causal={causal}")
    assert worst_herm <= 1e-10 and causal
    assert ok, RESULTS[1]


# ---------------------------------------------------------------------------
# 2. shallow-pocket mutual information and spectrum
# ---------------------------------------------------------------------------

def test_criterion_2_pocket_mutual_information():
    T = pt.shallow_pocket(1.0, 10.0)
    mi = mem.slot_mutual_info(T, [1, 2], [3, 4])
    spec10 = np.sort(np.linalg.eigvalsh(pt.compressed_choi(T) / 4))[::-1]
    spec_lim = np.sort(np.linalg.eigvalsh(pt.compressed_choi(pt.shallow_pocket(1.0, 30.0)) / 4))[::-1]
    target = np.array([0.5, 0.25, 0.25, 0.0])
    dev10, dev_lim = float(np.abs(spec10 - target).max()), float(np.abs(spec_lim - target).max())
    ok = abs(mi - 0.3466) <= 0.005 and dev_lim <= 1e-9 and dev10 <= 1e-4
    record(2, ok, f"MI={mi:.6f} nats at gamma*t=10; spectrum dev {dev10:.1e} at 10, {dev_lim:.1e} at 30")
    assert ok, RESULTS[2]


# ---------------------------------------------------------------------------
# 3. conditioning the pocket
# ---------------------------------------------------------------------------

def test_criterion_3_pocket_conditioning():
    g, t = 1.0, 1.0
    E_id = pt.pocket_channel(g, [t, t], [ch.identity_channel(2)])
    E_x = pt.pocket_channel(g, [t, t], [ch.unitary_channel(qla.SX)])
    d_id = float(np.abs(E_id.choi - ch.dephasing(g, 2 * t).choi).max())
    d_x = float(np.abs(E_x.choi - ch.unitary_channel(qla.SX).choi).max())
    T = pt.shallow_pocket(g, t)
    markov = mem.is_markov(T).markov
    nr = mem.nonmarkov_rel_entropy(T)[0]
    divisible = mem.infer_divisor(E_id, pt.pocket_channel(g, [t])).cp
    ok = d_id <= 1e-9 and d_x <= 1e-9 and not markov and nr > 1e-3 and divisible
    record(3, ok, f"identity dev {d_id:.1e}, X dev {d_x:.1e}, is_markov={markov}, N_R={nr:.4f}, "
                  f"CP-divisible={divisible}")
    assert ok, RESULTS[3]


# ---------------------------------------------------------------------------
# 4. Stern-Gerlach
# ---------------------------------------------------------------------------

def test_criterion_4_stern_gerlach():
    T = pt.stern_gerlach_process(2)
    z = tomo.projective_instrument(d=2)
    H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    x = tomo.projective_instrument(H, d=2)
    zE = tomo.projective_povm(d=2).elements
    seqs = [pt.born_multi(T, [z.elements[a], x.elements[b], zE[c]])
            for a, b, c in itertools.product(range(2), repeat=3)]
    x_sum = ch.Channel(2, 2, "choi", sum(A.choi for A in x.elements))
    summed = pt.born_multi(T, [z.elements[0], x_sum, zE[0]])
    ident = pt.born_multi(T, [z.elements[0], ch.identity_channel(2), zE[0]])
    dev = max(abs(p - 1 / 8) for p in seqs)
    ok = dev <= 1e-12 and abs(summed - 0.25) <= 1e-12 and abs(ident - 0.5) <= 1e-12
    record(4, ok, f"max |p-1/8|={dev:.1e}, summed={summed:.12f}, identity={ident:.12f}")
    assert ok, RESULTS[4]


# ---------------------------------------------------------------------------
# 5. initial-correlation superchannel
# ---------------------------------------------------------------------------

def printed_superchannel(a1, a2, a3, g, wt):
    c, s = np.cos(2 * wt), np.sin(2 * wt)
    am, ap = a1 - 1j * a2, a1 + 1j * a2
    A3p, A3m, Cp, Cm, s2 = 1 + a3, 1 - a3, 1 + c * c, 1 - c * c, s * s
    P = np.zeros((8, 8), dtype=complex)
    P[0] = [A3p * Cp / 2, 0, 0, A3p * c * c, (-1j * g * s2 + am * Cp) / 2, 0, 0, -g * c * s + am * c * c]
    P[1] = [0, A3p * Cm / 2, 0, 0, 0, (1j * g + am) / 2 * s2, 0, 0]
    P[2] = [0, 0, A3p * Cm / 2, 0, 0, 0, (-1j * g + am) / 2 * s2, 0]
    P[3] = [A3p * c * c, 0, 0, A3p * Cp / 2, g * c * s + am * c * c, 0, 0, (1j * g * s2 + am * Cp) / 2]
    P[4] = [(1j * g * s2 + ap * Cp) / 2, 0, 0, g * c * s + ap * c * c, A3m * Cp / 2, 0, 0, A3m * c * c]
    P[5] = [0, (-1j * g + ap) / 2 * s2, 0, 0, 0, A3m * Cm / 2, 0, 0]
    P[6] = [0, 0, (1j * g + ap) / 2 * s2, 0, 0, 0, A3m * Cm / 2, 0]
    P[7] = [-g * c * s + ap * c * c, 0, 0, (-1j * g * s2 + ap * Cp) / 2, A3m * c * c, 0, 0, A3m * Cp / 2]
    return P


def test_criterion_5_initial_correlations():
    params = (0.3, 0.2, 0.4, 0.5, 0.7)
    a1, a2, a3, g, wt = params
    T = pt.initial_correlation_process((a1, a2, a3), g, wt)
    P = printed_superchannel(*params)
    literal = float(np.abs(T.choi - P).max())
    scaled = float(np.abs(2 * T.choi - P).max())
    psd, lo = qla.is_psd(T.choi)
    # Example-1 eigenvalues
    c, s = np.cos(2 * wt), np.sin(2 * wt)
    vals = qla.herm_eig(pt.initial_correlation_map(g, wt).choi)[0]
    want = [0.5 * (1 - c * c + g * c * s), 0.5 * (1 - c * c - g * c * s)]
    eig_dev = max(float(np.min(np.abs(vals - w))) for w in want)
    grid = [(gg, w, qla.min_eig(pt.initial_correlation_map(gg, w).choi))
            for gg in np.linspace(0, 1, 5) for w in np.linspace(0, np.pi / 2, 7)]
    n_ncp = sum(lo_g < -1e-12 for _, _, lo_g in grid)
    ok = literal <= 1e-9 and psd and eig_dev <= 1e-9 and n_ncp > 0
    record(5, ok, f"literal max dev {literal:.3e} (printed trace {np.trace(P).real:.0f} vs causal trace "
                  f"{np.trace(T.choi).real:.0f}; 2x ours matches to {scaled:.1e}); PSD={psd} "
                  f"(min eig {lo:.4f}); Example-1 eig dev {eig_dev:.1e}; NCP points on grid {n_ncp}/35")
    assert scaled <= 1e-9 and psd and eig_dev <= 1e-9 and n_ncp > 0
    assert ok, RESULTS[5]


# ---------------------------------------------------------------------------
# 6. channel zoo
# ---------------------------------------------------------------------------

def test_criterion_6_channel_zoo():
    p = np.array([0.55, 0.2, 0.15, 0.1])
    dep = np.sort(np.linalg.eigvalsh(ch.depolarizing(p).choi))
    dep_ok = np.allclose(dep, np.sort(2 * p), atol=1e-12)
    ad = ch.amplitude_damping(0.0)
    ad_dev = max(float(np.abs(ch.apply(ad, qla.random_state(2, seed=s)) - qla.proj([1, 0])).max())
                 for s in range(20))
    ts = np.linspace(0.05, 1.5, 10)
    pairs = [(s, t) for i, s in enumerate(ts) for t in ts[i + 1:]]
    deph_ok = all(mem.infer_divisor(ch.dephasing(1.0, t), ch.dephasing(1.0, s)).cp for s, t in pairs)
    xz_fail = any(not mem.infer_divisor(ch.xz_oscillatory(1.0, t), ch.xz_oscillatory(1.0, s)).cp
                  for s, t in pairs if abs(np.cos(2 * s)) > 1e-3)
    ok = dep_ok and ad_dev <= 1e-10 and deph_ok and xz_fail
    record(6, ok, f"depolarizing spectrum={dep_ok}, amplitude-damping dev {ad_dev:.1e}, "
                  f"dephasing CP-divisible={deph_ok}, xz fails somewhere={xz_fail}")
    assert ok, RESULTS[6]


# ---------------------------------------------------------------------------
# 7. tomography roundtrips
# ---------------------------------------------------------------------------

def test_criterion_7_tomography():
    t0 = time.perf_counter()
    worst = {"state": 0.0, "channel": 0.0, "process": 0.0}
    for seed in range(30):
        povm = tomo.random_ic_povm(2, seed=seed)
        rho = qla.random_state(2, seed=1000 + seed)
        est = tomo.state_tomography(povm.probabilities(rho), povm)
        worst["state"] = max(worst["state"], float(np.abs(est - rho).max()))

        C = ch.random_cptp(seed=2000 + seed)
        inputs = tomo.random_state_basis(2, seed=3000 + seed)
        est = tomo.channel_tomography(inputs, [ch.apply(C, r) for r in inputs])
        worst["channel"] = max(worst["channel"], float(np.abs(est.choi - C.choi).max()))

        rng = np.random.default_rng(4000 + seed)
        circ = pt.CircuitProcess(qla.random_state(4, seed=int(rng.integers(1 << 30))),
                                 [qla.haar_unitary(4, seed=int(rng.integers(1 << 30))) for _ in range(2)], 2)
        T = pt.process_from_circuit(circ)
        basis = pt.ic_basis_for(T, seed=seed)
        R = pt.reconstruct_process(pt.basis_probabilities(T, basis), basis, T.slots)
        worst["process"] = max(worst["process"], float(np.abs(R.choi - T.choi).max()))
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-8 and elapsed < 60
    record(7, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.2f} s for 30 seeds")
    assert ok, RESULTS[7]


# ---------------------------------------------------------------------------
# 8. Markov structure
# ---------------------------------------------------------------------------

def test_criterion_8_markov_structure():
    M = pt.markov_tensor(qla.random_state(2, seed=1), [ch.random_cptp(seed=2), ch.random_cptp(seed=3)])
    nr_m = mem.nonmarkov_rel_entropy(M)[0]
    bonds_m = mem.mpo_bond_dims(M)
    cb_m = mem.causal_break_check(M)[0]
    circ = pt.CircuitProcess(qla.random_state(4, seed=1), [qla.haar_unitary(4, seed=2),
                                                           qla.haar_unitary(4, seed=3)], 2, 2)
    C = pt.process_from_circuit(circ)
    nr_c = mem.nonmarkov_rel_entropy(C)[0]
    bonds_c = mem.mpo_bond_dims(C)
    cb_c = mem.causal_break_check(C)[0]
    markov_ok = nr_m <= 1e-9 and all(b == 1 for b in bonds_m) and cb_m
    flipped = nr_c > 1e-9 and any(b > 1 for b in bonds_c) and not cb_c
    ok = markov_ok and flipped
    record(8, ok, f"markov: N_R={nr_m:.1e}, bonds={bonds_m}, causal breaks={cb_m}; "
                  f"circuit: N_R={nr_c:.3f}, bonds={bonds_c}, causal breaks={cb_c}")
    assert ok, RESULTS[8]


# ---------------------------------------------------------------------------
# 9. Markov order
# ---------------------------------------------------------------------------

def test_criterion_9_markov_order():
    rho0 = qla.random_state(2, seed=3)
    e = [qla.proj(qla.ket(x, 2)) for x in range(2)]
    A = [np.kron(e[x], e[x]) for x in range(2)]
    hist = [np.kron(rho0, e[x]) for x in range(2)]
    fut = [e[x] for x in range(2)]
    comp = [(np.kron(np.kron(rho0, e[x]), e[x]), np.kron(e[x], e[1 - x])) for x in range(2)]
    slots = [(0, "i", 2), (0, "o", 2), (1, "i", 2), (1, "o", 2), (2, "i", 2)]
    T = mem.build_finite_order(fut, A, hist, slots, comp)
    split = {"H": [0], "M": [1], "F": [2]}
    own, _ = mem.markov_order_test(T, split, A)
    q = mem.qcmi(T, split)
    fails = 0
    for s in range(50):
        V = qla.haar_unitary(2, seed=1000 + s)
        P = [qla.proj(V[:, x]) for x in range(2)]
        ok_r, _ = mem.markov_order_test(T, split, [np.kron(P[x].T, P[x]) for x in range(2)])
        fails += not ok_r
    ok = own and q <= 1e-8 and fails >= 45
    record(9, ok, f"own instrument passes={own}, QCMI={q:.1e}, random-instrument failures {fails}/50")
    assert ok, RESULTS[9]


# ---------------------------------------------------------------------------
# 10. classical suite
# ---------------------------------------------------------------------------

def test_criterion_10_classical():
    p = 0.3
    flip = cl.classical_factory("coin_with_interventions", p=p, instrument="flip").extras["P_F2_heads"]
    ident = cl.classical_factory("coin_with_interventions", p=p, instrument="identity").extras["P_F2_heads"]
    coin_ok = abs(flip - 2 * p * (1 - p)) <= 1e-15 and abs(ident - ((1 - p) ** 2 + p ** 2)) <= 1e-15
    J = cl.parity_process()
    uniform = all(np.allclose(cl.conditional(J, b, [a]), 0.5) for a in range(4) for b in range(a + 1, 4))
    mass = all(J.prob(list(x)) == (1 / 8 if sum(x[:3]) % 2 == x[3] else 0)
               for x in itertools.product(range(2), repeat=4))
    c = cl.cmi(J, {"F": [3], "M": [1, 2], "H": [0]})
    order = cl.markov_order_estimate(J)
    rng = np.random.default_rng(10)
    dpi_ok = True
    for _ in range(100):
        d, e = rng.integers(2, 6, size=2)
        pp, qq = rng.random(d), rng.random(d)
        G = rng.random((e, d))
        dpi_ok &= cl.dpi_suite(pp / pp.sum(), qq / qq.sum(), G / G.sum(0)).contracts
    eu = cl.euclidean_counterexample()
    eu_ok = eu["violates_dpi"] and abs(eu["entry_ratio"] - 0.5) <= 1e-15
    ok = coin_ok and uniform and mass and c > 0 and order == 3 and dpi_ok and eu_ok
    record(10, ok, f"coin {flip:.4f}/{ident:.4f}, parity uniform={uniform}, mass={mass}, "
                   f"CMI={c:.4f}, order={order}, DPI x100={dpi_ok}, Euclidean factor {eu['entry_ratio']}")
    assert ok, RESULTS[10]


# ---------------------------------------------------------------------------
# 11. property floor
# ---------------------------------------------------------------------------

def demo_processes():
    circ = pt.CircuitProcess(qla.random_state(4, seed=7), [qla.haar_unitary(4, seed=8),
                                                           qla.haar_unitary(4, seed=9)], 2, 2)
    return {
        "shallow-pocket": pt.shallow_pocket(1.0, 0.8),
        "stern-gerlach": pt.stern_gerlach_process(3),
        "initial-correlations": pt.initial_correlation_process((0.3, 0.2, 0.4), 0.5, 0.7),
        "markov": pt.markov_tensor(qla.random_state(2, seed=1), [ch.random_cptp(seed=2), ch.random_cptp(seed=3)]),
        "circuit": pt.process_from_circuit(circ),
    }, circ


def get_consistency(procs, circ):
    """``reduce`` vs an independent rebuild of the coarser process, per demo."""
    devs = {}
    g, t = 1.0, 0.8
    devs["shallow-pocket/tail"] = np.abs(pt.reduce(procs["shallow-pocket"], [0, 1]).choi
                                         - pt.shallow_pocket(g, durations=[t]).choi).max()
    devs["shallow-pocket/middle"] = np.abs(pt.reduce(procs["shallow-pocket"], [0, 2]).choi
                                           - pt.shallow_pocket(g, durations=[2 * t]).choi).max()
    devs["stern-gerlach"] = np.abs(pt.reduce(procs["stern-gerlach"], [0, 1, 2]).choi
                                   - pt.stern_gerlach_process(2).choi).max()
    rho_SE = pt.initial_correlation_state((0.3, 0.2, 0.4), 0.5)
    rho_S = qla.partial_trace(qla.CMatrix(rho_SE, [2, 2]), [0]).data
    devs["initial-correlations"] = np.abs(pt.reduce(procs["initial-correlations"], [0]).choi - rho_S).max()
    E1, E2 = ch.random_cptp(seed=2), ch.random_cptp(seed=3)
    devs["markov"] = np.abs(pt.reduce(procs["markov"], [0, 2]).choi
                            - pt.markov_tensor(qla.random_state(2, seed=1), [ch.compose(E2, E1)]).choi).max()
    merged = pt.CircuitProcess(circ.rho_SE, [circ.unitaries[1] @ circ.unitaries[0]], 2)
    devs["circuit"] = np.abs(pt.reduce(procs["circuit"], [0, 2]).choi - pt.process_from_circuit(merged).choi).max()
    return {k: float(v) for k, v in devs.items()}


def test_criterion_11_property_floor():
    procs, circ = demo_processes()
    bad = []
    for name, T in procs.items():
        if not pt.check_causality(T).passed:
            bad.append(f"{name} causality")
    zoo = [ch.identity_channel(2), ch.amplitude_damping(0.3), ch.depolarizing([0.7, 0.1, 0.1, 0.1]),
           ch.dephasing(1.0, 0.4), ch.xz_oscillatory(1.0, 0.3), ch.random_cptp(seed=5),
           ch.unitary_channel(qla.haar_unitary(2, seed=6)), pt.pocket_channel(1.0, [0.8, 0.8], [ch.identity_channel(2)])]
    for C in zoo:
        if not ch.is_cptp(C):
            bad.append(f"{C!r} CPTP")
        if not ch.representations_agree(C)[0]:
            bad.append(f"{C!r} representations")
        U, dE = ch.dilate_to_unitary(C)
        for s in range(3):
            rho = qla.random_state(2, seed=s)
            if np.abs(ch.reduce_dilation(U, C.d_in, dE, rho) - ch.apply(C, rho)).max() > 1e-9:
                bad.append(f"{C!r} dilation")
                break
    devs = get_consistency(procs, circ)
    bad += [f"GET {k} {v:.1e}" for k, v in devs.items() if v > 1e-9]
    ok = not bad
    record(11, ok, f"{len(procs)} processes, {len(zoo)} channels, max GET dev {max(devs.values()):.1e}"
               + ("" if ok else "; " + "; ".join(bad)))
    assert ok, RESULTS[11]


if __name__ == "__main__":
    import pathlib
    import tempfile
    tests = [v for k, v in sorted(globals().items(), key=lambda kv: int(kv[0].split("_")[2])
                                  if kv[0].startswith("test_criterion_") else 0)
             if k.startswith("test_criterion_")]
    failed = 0
    for fn in tests:
        try:
            if "tmp_path" in fn.__code__.co_varnames[:fn.__code__.co_argcount]:
                with tempfile.TemporaryDirectory() as d:
                    fn(pathlib.Path(d))
            else:
                fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
