"""
POVMs, instruments, dual frames and linear-inversion tomography.

A basis ``{B_k}`` and its dual ``{D_k}`` satisfy ``tr(D_j^dagger B_k) = delta_jk``,
so that any operator in the span expands as ``X = sum_k tr(D_k^dagger X) B_k``
``= sum_k tr(B_k^dagger X) D_k``.
"""
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import qla
from .channels import Channel

COND_GUARD = 1e12


class POVM:
    """Positive operators summing to the identity.

    Parameters
    ----------
    elements : sequence of (d, d) arrays
    validate : bool
        Check positivity and completeness (default ``True``).
    """

    kind = "povm"

    def __init__(self, elements, validate=True):
        self.elements = [np.array(qla._arr(E), dtype=complex) for E in elements]
        if not self.elements:
            raise ValueError("empty POVM")
        self.d = self.elements[0].shape[0]
        if validate:
            for E in self.elements:
                ok, lo = qla.is_psd(E)
                if not ok:
                    raise ValueError(f"POVM element is not positive (eigenvalue {lo:.3e})")
            err = completeness_error(self.elements)
            if err > 1e-9:
                raise ValueError(f"POVM elements do not sum to identity (error {err:.3e})")

    def __len__(self):
        return len(self.elements)

    def probabilities(self, rho):
        return np.array([born_prob(rho, E) for E in self.elements])

    def is_informationally_complete(self):
        return _rank(self.elements) == self.d ** 2


class Instrument:
    """CP maps (as :class:`~qproc.channels.Channel`) summing to a CPTP map."""

    kind = "instrument"

    def __init__(self, elements, validate=True):
        self.elements = list(elements)
        if not self.elements:
            raise ValueError("empty instrument")
        if validate:
            from .channels import is_cp
            for A in self.elements:
                ok, lo = is_cp(A)
                if not ok:
                    raise ValueError(f"instrument element is not CP (eigenvalue {lo:.3e})")
            total = sum(A.choi for A in self.elements)
            d_in, d_out = self.elements[0].d_in, self.elements[0].d_out
            red = qla.partial_trace(qla.CMatrix(total, [d_out, d_in]), [1]).data
            err = float(np.linalg.norm(red - np.eye(d_in)))
            if err > 1e-9:
                raise ValueError(f"instrument does not sum to a trace-preserving map ({err:.3e})")

    def __len__(self):
        return len(self.elements)


class DualSet:
    """A basis paired with its dual set."""

    def __init__(self, basis, duals):
        self.basis = basis
        self.duals = duals

    def residual(self):
        G = np.array([[np.trace(D.conj().T @ B) for B in self.basis] for D in self.duals])
        return float(np.abs(G - np.eye(len(self.basis))).max())


def completeness_error(elements):
    d = np.asarray(elements[0]).shape[0]
    return float(np.abs(sum(elements) - np.eye(d)).max())


def _rank(mats, tol=1e-10):
    M = np.array([np.asarray(m).reshape(-1) for m in mats])
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s.max())))


def dual_set(basis, cond_guard=COND_GUARD):
    """Dual set of a linearly independent family of matrices.

    Solves the Gram system ``G_mk = tr(B_m^dagger B_k)`` instead of inverting
    it; duals lie in the span of the basis.

    Raises
    ------
    ValueError
        If the Gram matrix condition number exceeds ``cond_guard``.
    """
    B = [np.asarray(qla._arr(b), dtype=complex) for b in basis]
    V = np.array([b.reshape(-1) for b in B])          # rows vec(B_k)
    G = V.conj() @ V.T                                  # G_mk = <B_m, B_k>
    c = np.linalg.cond(G)
    if not np.isfinite(c) or c > cond_guard:
        raise ValueError(f"basis is (numerically) linearly dependent: cond(Gram) = {c:.3e}")
    # D_j = sum_m C_jm B_m with tr(D_j^dagger B_k) = sum_m conj(C_jm) G_mk = delta_jk
    Cc = np.linalg.solve(G.T, np.eye(len(B)))            # conj(C)^T
    C = Cc.T.conj()
    duals = [sum(C[j, m] * B[m] for m in range(len(B))) for j in range(len(B))]
    return DualSet(B, duals)


def frame_duals(elements):
    """Canonical dual frame (equals :func:`dual_set` for a basis)."""
    B = [np.asarray(qla._arr(b), dtype=complex) for b in elements]
    V = np.array([b.reshape(-1) for b in B])
    P = np.linalg.pinv(V.conj())  # columns: vec of duals
    d = B[0].shape
    return [P[:, j].reshape(d) for j in range(len(B))]


# ---------------------------------------------------------------------------
# POVM constructions
# ---------------------------------------------------------------------------

def sic_povm_qubit():
    """Qubit SIC-POVM ``{|phi_k><phi_k| / 2}``."""
    phis = [np.array([1, 0], dtype=complex)]
    for k in range(2, 5):
        phis.append(np.array([np.sqrt(1 / 3), np.sqrt(2 / 3) * np.exp(2j * (k - 2) * np.pi / 3)]))
    return POVM([0.5 * qla.proj(p) for p in phis])


def projective_povm(U=None, d=2):
    """Rank-1 projective measurement in the columns of ``U`` (computational basis by default)."""
    U = np.eye(d, dtype=complex) if U is None else np.asarray(U, dtype=complex)
    return POVM([qla.proj(U[:, k]) for k in range(U.shape[1])])


def ic_povm_from_positive_basis(F):
    """``E_k = F^{-1/2} F_k F^{-1/2}`` with ``F = sum_k F_k``.

    A pseudo-inverse square root is used when ``F`` is singular.
    """
    F = [np.asarray(qla._arr(f), dtype=complex) for f in F]
    for f in F:
        ok, lo = qla.is_psd(f)
        if not ok:
            raise ValueError(f"basis element is not positive (eigenvalue {lo:.3e})")
    S = qla.inv_sqrtm_psd(sum(F))
    return POVM([S @ f @ S for f in F], validate=False)


def random_ic_povm(d=2, seed=None):
    """Random informationally complete POVM.

    Samples ``d^2 - 1`` random rank-1 positive matrices ``F_k``, scales them by
    the largest ``alpha`` with ``1 - alpha * sum F_k >= 0`` and appends that
    remainder as the last element.  Resamples until the set spans.
    """
    rng = np.random.default_rng(seed)
    while True:
        F = []
        for _ in range(d * d - 1):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            F.append(qla.proj(v))
        alpha = 1.0 / float(np.linalg.eigvalsh(sum(F)).max())
        els = [alpha * f for f in F]
        last = np.eye(d) - sum(els)
        last = (last + last.conj().T) / 2
        els.append(last)
        if _rank(els) == d * d:
            return POVM(els, validate=False)


def random_state_basis(d=2, seed=None):
    """``d^2`` random pure states forming a basis of the operator space."""
    rng = np.random.default_rng(seed)
    while True:
        els = []
        for _ in range(d * d):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            els.append(qla.proj(v / np.linalg.norm(v)))
        if _rank(els) == d * d:
            return els


def pauli_state_basis():
    """``{|+x>, |+y>, |+z>, |-x>}`` projectors (a linearly independent state basis)."""
    s = 1 / np.sqrt(2)
    kets = [np.array([s, s]), np.array([s, 1j * s]), np.array([1, 0]), np.array([s, -s])]
    return [qla.proj(k) for k in kets]


# ---------------------------------------------------------------------------
# Born rule and tomography
# ---------------------------------------------------------------------------

def born_prob(rho, E):
    """``tr(rho E)`` (real part)."""
    R, M = qla._arr(rho), qla._arr(E)
    if R.shape != M.shape:
        raise ValueError("dimension mismatch")
    return float(np.real(np.trace(R @ M)))


def state_tomography(probs, povm):
    """Linear-inversion estimate ``rho = sum_k p_k Delta_k^dagger``.

    ``Delta_k`` are the (canonical) duals of the POVM elements.
    """
    if not povm.is_informationally_complete():
        raise ValueError("POVM is not informationally complete")
    p = np.asarray(probs, dtype=float)
    if p.shape != (len(povm),):
        raise ValueError("one probability per POVM element required")
    if abs(p.sum() - 1) > 1e-6 or np.any(p < -1e-6):
        raise ValueError("probabilities must be non-negative and sum to one")
    duals = frame_duals(povm.elements)
    return sum(pk * D.conj().T for pk, D in zip(p, duals))


def _workers():
    try:
        return max(1, int(os.environ.get("QPROC_THREADS", "1")))
    except ValueError:
        return 1


def pmap(fn, items):
    """Deterministic (order-preserving) map, threaded up to ``QPROC_THREADS``."""
    items = list(items)
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def channel_tomography(inputs, outputs):
    """Reconstruct a channel from its outputs on a state basis.

    ``Choi = sum_j rho'_j kron conj(D_j)`` with ``D_j`` dual to the inputs.
    """
    inputs = [np.asarray(qla._arr(r), dtype=complex) for r in inputs]
    outputs = [np.asarray(qla._arr(r), dtype=complex) for r in outputs]
    d_in = inputs[0].shape[0]
    if _rank(inputs) < d_in * d_in:
        raise ValueError("input states are not informationally complete")
    if len(inputs) != len(outputs):
        raise ValueError("one output per input state required")
    duals = dual_set(inputs).duals if len(inputs) == d_in * d_in else frame_duals(inputs)
    choi = sum(np.kron(o, D.conj()) for o, D in zip(outputs, duals))
    return Channel(d_in, outputs[0].shape[0], "choi", choi)


def instrument_to_povm(J):
    """Discard outputs: ``E_x = tr_out(A_x^T)``."""
    els = []
    for A in J.elements:
        red = qla.partial_trace(qla.CMatrix(A.choi, [A.d_out, A.d_in]), [1]).data
        els.append(red.T)
    return POVM(els)


def measure_prepare_instrument(povm, states):
    """Instrument ``A_x[rho] = tr(E_x rho) sigma_x`` (Choi ``sigma_x kron E_x^T``)."""
    els = []
    for E, s in zip(povm.elements, states):
        s = np.asarray(s, dtype=complex)
        els.append(Channel(E.shape[0], s.shape[0], "choi", np.kron(s, E.T)))
    return Instrument(els)


def projective_instrument(U=None, d=2):
    """Lueders instrument of a rank-1 projective measurement (state collapses onto the outcome)."""
    P = projective_povm(U, d)
    return Instrument([Channel(d, d, "kraus", [E]) for E in P.elements])


def povm_to_dict(P):
    return {"kind": P.kind, "elements": [qla.CMatrix(E).to_dict() for E in P.elements]}


def povm_from_dict(d):
    return POVM([qla.CMatrix.from_dict(e).data for e in d["elements"]])
