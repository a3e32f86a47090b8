"""
Markovianity tests, non-Markovianity measures, Markov order and
two-point (divisibility / snapshot / distinguishability) witnesses.

All entropic quantities are computed on unit-trace copies of the Choi
matrices and are in nats.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from . import qla
from .channels import Channel, is_cp
from .proctensor import (ProcessTensor, Slot, _contract, condition_on_past, op_matrix,
                         check_causality)
from .qla import CMatrix

SCHMIDT_TOL = 1e-9
MARKOV_TOL = 1e-8
CONFUSION_N = (1, 10, 100)


# ---------------------------------------------------------------------------
# product structure
# ---------------------------------------------------------------------------

def _groups(T):
    """Slot groups ``[0i], [0o, 1i], [1o, 2i], ...`` of the Markov product form."""
    groups = [[0]]
    for j in range(1, len(T.slots), 2):
        groups.append([j, j + 1])
    return groups


def closest_markov(T):
    """Product of the per-step marginals (the closest Markov process).

    Each factor is renormalized so that the product has the same trace as a
    causal process tensor on the same slots.
    """
    factors = []
    total = float(np.real(np.trace(T.choi)))
    for g in _groups(T):
        m = qla.partial_trace(T.cmatrix(), g).data
        tr = float(np.real(np.trace(m)))
        d_o = T.slots[g[0]].d if len(g) == 2 else 1
        factors.append(m / tr * d_o if tr > 0 else m)
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    del total
    return ProcessTensor(out, T.slots, T.conditional)


def _normalized(M):
    M = np.asarray(M)
    return M / np.real(np.trace(M))


def nonmarkov_rel_entropy(T, ns=CONFUSION_N):
    """Relative-entropy non-Markovianity and confusion probabilities.

    Returns
    -------
    N_R : float
        ``S(Y || Y_Markov)`` on normalized copies (``inf`` on support violation).
    confusion : dict
        ``{n: exp(-n N_R)}``.
    """
    M = closest_markov(T)
    nr = qla.q_rel_entropy(_normalized(T.choi), _normalized(M.choi))
    return nr, {int(n): float(np.exp(-n * nr)) for n in ns}


def schatten_bound(T, p=1):
    """Upper bound ``|| Y - Y_Markov ||_p`` (normalized copies) on the Schatten measure."""
    M = closest_markov(T)
    return qla.schatten_norm(_normalized(T.choi) - _normalized(M.choi), p)


def operator_schmidt_rank(M, dims, left, tol=SCHMIDT_TOL):
    """Operator-Schmidt rank of ``M`` across the cut ``left | rest``.

    Singular values at or above ``tol * sigma_max`` count (ties are counted as
    correlated).
    """
    dims = list(dims)
    left = sorted(left)
    right = [j for j in range(len(dims)) if j not in left]
    X = qla.permute(CMatrix(M, dims), left + right).data
    dl = int(np.prod([dims[j] for j in left])) if left else 1
    dr = int(np.prod([dims[j] for j in right])) if right else 1
    R = X.reshape(dl, dr, dl, dr).transpose(0, 2, 1, 3).reshape(dl * dl, dr * dr)
    s = np.linalg.svd(R, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0, s
    return int(np.sum(s >= tol * s[0])), s


def mpo_bond_dims(T, tol=SCHMIDT_TOL):
    """Bond dimensions across the cuts between ``(t,i)`` and ``(t,o)``, one per step."""
    out = []
    for t in T.times[:-1]:
        ji = T.index(t, "i")
        r, _ = operator_schmidt_rank(T.choi, T.dims, range(ji + 1), tol)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# Markov condition
# ---------------------------------------------------------------------------

def causal_break_elements(d_i, d_o, povm=None, states=None):
    """Measure-and-reprepare elements ``E_a^T kron rho_b`` (chronological order).

    Defaults use the qubit SIC-POVM and the ``{+x, +y, +z, -x}`` state basis,
    which together span the operation space (a full causal-break tester basis).
    """
    from .tomo import sic_povm_qubit, pauli_state_basis, random_ic_povm, random_state_basis
    if povm is None:
        povm = sic_povm_qubit().elements if d_i == 2 else random_ic_povm(d_i, 7).elements
    if states is None:
        states = pauli_state_basis() if d_o == 2 else random_state_basis(d_o, 11)
    return [[(np.kron(np.asarray(E).T, np.asarray(s))) for s in states] for E in povm]


@dataclass
class MarkovVerdict:
    markov: bool
    distance: float
    causal_breaks: bool
    details: list = field(default_factory=list)

    def __bool__(self):
        return self.markov


def causal_break_check(T, tol=1e-6):
    """Markov condition under causal breaks at every intermediate time.

    For each element ``E_a^T kron rho_b`` at time ``t`` the contracted tensor
    must factorize into past and future, and the normalized future factor
    must not depend on the measurement outcome ``a``.
    """
    details = []
    ok_all = True
    for t in T.times[1:-1]:
        js = T.time_slots(t)
        di, do = T.slots[js[0]].d, T.slots[js[1]].d
        grid = causal_break_elements(di, do)
        for b in range(len(grid[0])):
            futures = []
            for a in range(len(grid)):
                A = grid[a][b]
                R, rest = _contract(T.choi, T.dims, js, A)
                dims = [T.dims[j] for j in rest]
                past = [q for q, j in enumerate(rest) if j < js[0]]
                p = float(np.real(np.trace(R)))
                if abs(p) < 1e-12:
                    continue
                rank, s = operator_schmidt_rank(R, dims, past, tol=1e-9)
                prod_err = float(np.sqrt(np.sum(s[1:] ** 2)) / s[0]) if s.size > 1 else 0.0
                fut = qla.partial_trace(CMatrix(R, dims), [q for q in range(len(rest)) if q not in past]).data
                futures.append(_normalized(fut))
                details.append({"time": t, "a": a, "b": b, "product_error": prod_err})
                if prod_err > tol:
                    ok_all = False
            for f in futures[1:]:
                dev = float(np.abs(f - futures[0]).max())
                if dev > tol:
                    ok_all = False
                    details.append({"time": t, "b": b, "future_dependence": dev})
    return ok_all, details


def is_markov(T, tol=MARKOV_TOL):
    """Markov decision: trace-norm distance to the closest Markov process,
    cross-checked by causal breaks at the intermediate times.
    """
    dist = qla.schatten_norm(_normalized(T.choi) - _normalized(closest_markov(T).choi), 1)
    cb, details = causal_break_check(T, tol=max(tol, 1e-9) * 100)
    return MarkovVerdict(bool(dist <= tol and cb), dist, cb, details)


# ---------------------------------------------------------------------------
# conditional mutual information and Markov order
# ---------------------------------------------------------------------------

def _split_slots(T, split):
    """Slot indices of the F, M, H time blocks; validates the partition."""
    blocks = {}
    for key in ("F", "M", "H"):
        blocks[key] = sorted(int(t) for t in split.get(key, []))
    allt = blocks["F"] + blocks["M"] + blocks["H"]
    if sorted(allt) != T.times or len(set(allt)) != len(allt):
        raise ValueError(f"split must partition the times {T.times}")
    order = blocks["H"] + blocks["M"] + blocks["F"]
    if order != sorted(order):
        raise ValueError("split blocks must be contiguous in the order H < M < F")
    return {k: [j for t in v for j in T.time_slots(t)] for k, v in blocks.items()}


def qcmi(T, split):
    """Quantum conditional mutual information ``S(F:H|M)`` of the normalized Choi.

    ``split`` maps ``"F"``, ``"M"``, ``"H"`` to lists of times; every time
    contributes all of its slots.
    """
    s = _split_slots(T, split)
    rho = CMatrix(_normalized(T.choi), T.dims)
    return qla.q_cond_mutual_info(rho, s["F"], s["H"], s["M"])


def slot_mutual_info(T, a, b):
    """Mutual information (nats) between slot groups ``a`` and ``b`` of the
    normalized Choi matrix; all other slots are traced out."""
    a, b = list(a), list(b)
    keep = sorted(a + b)
    rho = qla.partial_trace(CMatrix(_normalized(T.choi), T.dims), keep)
    pos = {j: q for q, j in enumerate(keep)}
    return qla.q_mutual_info(rho, ([pos[j] for j in a], [pos[j] for j in b]))


def _mutual_info_matrix(R, dims, left):
    rho = CMatrix(_normalized(R), dims)
    right = [j for j in range(len(dims)) if j not in left]
    if not left or not right:
        return 0.0
    return qla.q_mutual_info(rho, (left, right))


def markov_order_test(T, split, instrument, tol=1e-8):
    """Does the instrument on the memory block split history from future?

    Parameters
    ----------
    instrument : list of ndarray
        Tester elements on the M slots in chronological Choi form.

    Returns
    -------
    passed : bool
    factors : dict
        ``{x: (history_factor, future_factor, schmidt_ratio, mutual_info)}``
        for every outcome with non-zero probability.
    """
    s = _split_slots(T, split)
    factors = {}
    passed = True
    for x, A in enumerate(instrument):
        R, rest = _contract(T.choi, T.dims, s["M"], np.asarray(A))
        dims = [T.dims[j] for j in rest]
        if np.real(np.trace(R)) < 1e-12:
            continue
        left = [q for q, j in enumerate(rest) if j in s["H"]]
        _, sv = operator_schmidt_rank(R, dims, left)
        ratio = float(sv[1] / sv[0]) if sv.size > 1 else 0.0
        mi = _mutual_info_matrix(R, dims, left)
        H = qla.partial_trace(CMatrix(R, dims), left).data if left else np.array([[1.0]])
        Fq = [q for q in range(len(rest)) if q not in left]
        F = qla.partial_trace(CMatrix(R, dims), Fq).data if Fq else np.array([[1.0]])
        factors[x] = (H, F, ratio, mi)
        if ratio > tol or mi > tol:
            passed = False
    return passed, factors


def build_finite_order(future, duals, history, slots, complement=(), split=None, check=True):
    """Process tensor with finite Markov order for a given memory instrument.

    ``Y = sum_x H_x kron conj(D_x) kron F_x + sum_alpha (complement terms)``
    in chronological order (history, memory, future).

    Parameters
    ----------
    future, history : lists of ndarray
        ``Y_{F|x}`` and ``Y~_{H|x}`` per instrument outcome.
    duals : list of ndarray
        Duals of the instrument elements (memory block, chronological form).
    slots : slot list of the full process.
    complement : iterable of (ndarray, ndarray)
        ``(Y~_{FH|alpha}, Dbar_alpha)`` with the first factor ordered (H, F).
    check : bool
        Raise when the result violates positivity or causality.
    """
    slots = [s if isinstance(s, Slot) else Slot(*s) for s in slots]
    dH = history[0].shape[0]
    dM = duals[0].shape[0]
    dF = future[0].shape[0]
    Y = np.zeros((dH * dM * dF,) * 2, dtype=complex)
    for H, D, F in zip(history, duals, future):
        Y += np.kron(np.kron(H, np.conj(D)), F)
    for FH, Db in complement:
        # FH is ordered (H, F); insert conj(Dbar) in the middle
        t = np.kron(np.asarray(FH), np.conj(Db))  # (H, F, M)
        Y += qla.permute(CMatrix(t, [dH, dF, dM]), [0, 2, 1]).data
    T = ProcessTensor(Y, slots)
    if check:
        rep = check_causality(T)
        if not rep.passed:
            raise ValueError(f"constructed process violates causality/positivity at {rep.failed_level}"
                             f" (min eig {rep.min_eig:.3e})")
    return T


def recovery_map(upsilon_MH, future, duals, instrument, d_F_out=1):
    """``W[Y_MH] = d_Fo sum_x c_x^{-1} F_x kron conj(D_x) kron tr_M(Y_MH A_x^T)``.

    ``upsilon_MH`` is ordered (H, M); the result is ordered (H, M, F).
    """
    U = np.asarray(upsilon_MH)
    dM = np.asarray(instrument[0]).shape[0]
    dH = U.shape[0] // dM
    out = None
    for F, D, A in zip(future, duals, instrument):
        c = float(np.real(np.trace(F)))
        hx, _ = _contract(U, [dH, dM], [1], np.asarray(A))
        term = d_F_out / c * np.kron(np.kron(hx, np.conj(D)), F)
        out = term if out is None else out + term
    return out


# ---------------------------------------------------------------------------
# two-point witnesses
# ---------------------------------------------------------------------------

@dataclass
class DivisorResult:
    zeta: np.ndarray
    choi: np.ndarray
    min_eig: float
    cp: bool
    residual: float


def infer_divisor(E_t, E_s, cond_guard=1e12):
    """Intermediate map ``zeta = E_t o E_s^{-1}`` and its CP verdict.

    Raises
    ------
    ValueError
        If ``E_s`` is (numerically) singular.
    """
    St, Ss = E_t.superop, E_s.superop
    c = np.linalg.cond(Ss)
    if not np.isfinite(c) or c > cond_guard:
        raise ValueError(f"intermediate map is not invertible (condition number {c:.3e})")
    Z = np.linalg.solve(Ss.T, St.T).T
    zeta = Channel(E_s.d_out, E_t.d_out, "superop", Z)
    ok, lo = is_cp(zeta)
    res = float(np.abs(Z @ Ss - St).max())
    return DivisorResult(Z, zeta.choi, lo, ok, res)


@dataclass
class SnapshotResult:
    generator: np.ndarray
    reconstruction_error: float
    cp_semigroup: bool
    family_consistent: bool
    markov: bool
    samples: list


def snapshot_generator(E_t, t, family=None, samples=None, tol=1e-8):
    """Generator ``L = log(E_t) / t`` from a single snapshot.

    The verdict requires ``exp(L s)`` to be CP for the sampled ``s`` in
    ``(0, t]`` and, when the family ``s -> E_s`` is available, to reproduce
    it (a mismatch means no time-independent Markovian generator exists).

    Raises
    ------
    ValueError
        If the principal logarithm is undefined (eigenvalue on the branch cut).
    """
    S = E_t.superop
    L = qla.principal_logm(S) / t
    rec = float(np.abs(expm(L * t) - S).max())
    if samples is None:
        samples = list(np.linspace(t / 10, t, 10))
    cp_all, consistent = True, True
    rows = []
    d = E_t.d_in
    for s in samples:
        Es = Channel(d, d, "superop", expm(L * s))
        ok, lo = is_cp(Es)
        dev = None
        if family is not None:
            dev = float(np.abs(Es.superop - family(s).superop).max())
            consistent &= dev <= tol
        cp_all &= ok
        rows.append({"s": float(s), "min_eig": lo, "cp": bool(ok), "family_deviation": dev})
    return SnapshotResult(L, rec, bool(cp_all), bool(consistent),
                          bool(cp_all and consistent and rec <= tol), rows)


@dataclass
class WitnessSeries:
    times: list
    distances: list
    verdicts: list
    markov: bool

    def rows(self):
        return list(zip(self.times, self.distances, self.verdicts))


def blp_witness(family, rho_plus, rho_minus, times, tol=1e-9):
    """Trace-distance (distinguishability) witness along a channel family.

    ``family(t)`` returns the channel acting up to time ``t`` (possibly with
    interventions built in).  A verdict of ``"non-markovian"`` is recorded at
    every time where the distance grows by more than ``tol``.
    """
    ds, verdicts = [], []
    prev = None
    for t in times:
        E = family(t)
        from .channels import apply
        d = qla.trace_distance(apply(E, rho_plus), apply(E, rho_minus))
        grew = prev is not None and d > prev + tol
        verdicts.append("non-markovian" if grew else "consistent")
        ds.append(float(d))
        prev = d
    return WitnessSeries([float(t) for t in times], ds, verdicts,
                         all(v == "consistent" for v in verdicts))


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

@dataclass
class MemoryReport:
    markov: bool
    rel_entropy_measure: float
    confusion: dict
    schatten_bound: float
    qcmi: object
    bond_dims: list
    causal: bool

    def to_dict(self):
        return {"markov": self.markov,
                "rel_entropy_measure": self.rel_entropy_measure,
                "confusion": {str(k): v for k, v in self.confusion.items()},
                "schatten_bound": self.schatten_bound,
                "qcmi": self.qcmi,
                "bond_dims": list(self.bond_dims),
                "causal": self.causal}


def memory_report(T, split=None, p=1, tol=MARKOV_TOL):
    nr, conf = nonmarkov_rel_entropy(T)
    q = qcmi(T, split) if split else None
    return MemoryReport(bool(is_markov(T, tol)), float(nr), conf, schatten_bound(T, p),
                        None if q is None else float(q), mpo_bond_dims(T),
                        bool(check_causality(T).passed))
