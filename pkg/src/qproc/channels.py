"""
Quantum channels in Kraus, Choi and superoperator form.

Conventions
-----------
* Vectorization is row-major: ``vec(rho)[r*d + s] = rho[r, s]`` so that
  ``vec(A rho B) = (A kron B^T) vec(rho)`` and the superoperator of a Kraus
  list is ``sum_j K_j kron conj(K_j)``.
* The Choi matrix is ordered (output kron input):
  ``Choi = sum_kl E[|k><l|] kron |k><l|``, and the action is
  ``E[rho] = tr_in[(1 kron rho^T) Choi]``.
"""
import numpy as np
from scipy.linalg import expm

from . import qla
from .qla import CMatrix, SX, SY, SZ, I2

TP_TOL = 1e-9
RANK_TOL = 1e-9
GS_PIVOT = 1e-10

REPS = ("kraus", "choi", "superop")


class Channel:
    """A linear map between matrix spaces held in one of three representations.

    Parameters
    ----------
    d_in, d_out : int
    rep : {"kraus", "choi", "superop"}
    payload : list of ndarray (Kraus) or ndarray (Choi / superoperator)

    Notes
    -----
    Non-CP maps can be represented (they appear as divisibility and
    initial-correlation witnesses) but cannot be converted to Kraus form.
    """

    def __init__(self, d_in, d_out, rep, payload):
        if rep not in REPS:
            raise ValueError(f"unknown representation {rep!r}")
        self.d_in, self.d_out, self.rep = int(d_in), int(d_out), rep
        if rep == "kraus":
            ks = [np.array(qla._arr(K), dtype=complex) for K in payload]
            if not ks:
                raise ValueError("empty Kraus list")
            for K in ks:
                if K.shape != (self.d_out, self.d_in):
                    raise ValueError(f"Kraus operator shape {K.shape} != {(self.d_out, self.d_in)}")
                K.flags.writeable = False
            self._payload = tuple(ks)
        else:
            side = (self.d_out * self.d_in, self.d_out * self.d_in) if rep == "choi" \
                else (self.d_out ** 2, self.d_in ** 2)
            M = np.array(qla._arr(payload), dtype=complex)
            if M.shape != side:
                raise ValueError(f"{rep} matrix shape {M.shape} != {side}")
            M.flags.writeable = False
            self._payload = M
        self._cache = {rep: self._payload}

    def __repr__(self):
        return f"Channel(d_in={self.d_in}, d_out={self.d_out}, rep={self.rep!r})"

    # representations ------------------------------------------------------
    @property
    def choi(self):
        """Choi matrix as ndarray, ordered (output, input)."""
        if "choi" not in self._cache:
            if self.rep == "kraus":
                self._cache["choi"] = choi_from_kraus(self._payload)
            else:
                self._cache["choi"] = _superop_to_choi(self._payload, self.d_in, self.d_out)
        return self._cache["choi"]

    @property
    def superop(self):
        if "superop" not in self._cache:
            if self.rep == "kraus":
                self._cache["superop"] = sum(np.kron(K, K.conj()) for K in self._payload)
            else:
                self._cache["superop"] = _choi_to_superop(self.choi, self.d_in, self.d_out)
        return self._cache["superop"]

    @property
    def kraus(self):
        if "kraus" not in self._cache:
            self._cache["kraus"] = tuple(kraus_from_choi(self.choi, self.d_in, self.d_out))
        return list(self._cache["kraus"])

    def choi_cmatrix(self):
        return CMatrix(self.choi, [self.d_out, self.d_in])

    def payload(self):
        return self._payload


def _superop_to_choi(S, d_in, d_out):
    # S[(a,b),(k,l)] = E[|k><l|]_{ab}  ->  Choi[(a,k),(b,l)]
    return np.ascontiguousarray(
        S.reshape(d_out, d_out, d_in, d_in).transpose(0, 2, 1, 3).reshape(d_out * d_in, d_out * d_in))


def _choi_to_superop(C, d_in, d_out):
    return np.ascontiguousarray(
        C.reshape(d_out, d_in, d_out, d_in).transpose(0, 2, 1, 3).reshape(d_out * d_out, d_in * d_in))


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------

def vectorize(rho):
    """Row-major column vector of a matrix."""
    return np.asarray(qla._arr(rho)).reshape(-1)


def devectorize(v):
    """Inverse of :func:`vectorize` for a square matrix."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"length {v.size} is not a perfect square")
    return v.reshape(d, d)


# ---------------------------------------------------------------------------
# conversions
# ---------------------------------------------------------------------------

def choi_from_kraus(kraus):
    """``sum_j vec(K_j) vec(K_j)^dagger`` (ordered output, input)."""
    ks = [np.asarray(qla._arr(K), dtype=complex) for K in kraus]
    vs = np.array([K.reshape(-1) for K in ks])
    return vs.T @ vs.conj()


def kraus_from_choi(choi, d_in=None, d_out=None, rank_tol=RANK_TOL):
    """Minimal Kraus list from the eigen-decomposition of a PSD Choi matrix.

    Raises
    ------
    ValueError
        If the Choi matrix has an eigenvalue below ``-TAU_PSD * lambda_max``;
        the message names the most negative eigenvalue.
    """
    C = np.asarray(qla._arr(choi), dtype=complex)
    if d_in is None or d_out is None:
        d = int(round(np.sqrt(C.shape[0])))
        d_in = d_in or d
        d_out = d_out or C.shape[0] // d_in
    vals, vecs = qla.herm_eig(C, tol=1e-8)
    lmax = max(float(np.abs(vals).max()), 1e-300)
    if vals[-1] < -qla.TAU_PSD * max(1.0, lmax):
        raise ValueError(f"map is not completely positive: Choi eigenvalue {vals[-1]:.6e}")
    keep = vals > rank_tol * lmax
    return [np.sqrt(l) * vecs[:, j].reshape(d_out, d_in)
            for j, l in zip(np.flatnonzero(keep), vals[keep])]


def convert(C, target):
    """Return an equivalent :class:`Channel` held in representation ``target``."""
    if target == C.rep:
        return C
    if target == "kraus":
        return Channel(C.d_in, C.d_out, "kraus", C.kraus)
    if target == "choi":
        return Channel(C.d_in, C.d_out, "choi", C.choi)
    if target == "superop":
        return Channel(C.d_in, C.d_out, "superop", C.superop)
    raise ValueError(f"unknown representation {target!r}")


def apply(C, rho):
    """Action of the channel on an operator, evaluated in its native representation."""
    R = np.asarray(qla._arr(rho), dtype=complex)
    if R.shape != (C.d_in, C.d_in):
        raise ValueError(f"input shape {R.shape} does not match d_in={C.d_in}")
    return apply_rep(C, R, C.rep)


def apply_rep(C, rho, rep):
    """Action computed from a specific representation (used for agreement checks)."""
    R = np.asarray(rho, dtype=complex)
    if rep == "kraus":
        return sum(K @ R @ K.conj().T for K in C.kraus)
    if rep == "superop":
        return devectorize(C.superop @ vectorize(R))
    if rep == "choi":
        Y = C.choi.reshape(C.d_out, C.d_in, C.d_out, C.d_in)
        return np.einsum("akbl,kl->ab", Y, R)
    raise ValueError(rep)


def representations_agree(C, atol=1e-10):
    """Max deviation of the three representations on the matrix-unit basis."""
    worst = 0.0
    reps = ["choi", "superop"] + (["kraus"] if is_cp(C)[0] else [])
    for k in range(C.d_in):
        for l in range(C.d_in):
            E = np.zeros((C.d_in, C.d_in), dtype=complex)
            E[k, l] = 1
            outs = [apply_rep(C, E, r) for r in reps]
            worst = max(worst, max(float(np.abs(o - outs[0]).max()) for o in outs))
    return worst <= atol, worst


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------

def is_cp(C, tau=qla.TAU_PSD):
    """``(is_cp, most_negative_choi_eigenvalue)``."""
    ok, lo = qla.is_psd(C.choi, tau)
    return ok, lo


def tp_residual(C):
    red = qla.partial_trace(CMatrix(C.choi, [C.d_out, C.d_in]), [1]).data
    return float(np.linalg.norm(red - np.eye(C.d_in)))


def is_tp(C, tol=TP_TOL):
    """``(is_tp, ||tr_out Choi - 1||_F)``."""
    r = tp_residual(C)
    return r <= tol, r


def is_cptp(C):
    return is_cp(C)[0] and is_tp(C)[0]


# ---------------------------------------------------------------------------
# composition and dilation
# ---------------------------------------------------------------------------

def compose(C2, C1):
    """``C2 o C1`` (apply ``C1`` first)."""
    if C1.d_out != C2.d_in:
        raise ValueError("dimension mismatch in compose")
    return Channel(C1.d_in, C2.d_out, "superop", C2.superop @ C1.superop)


def _complete_unitary(V, pivot=GS_PIVOT):
    """Extend the orthonormal columns ``V`` (n x m) to an n x n unitary by
    Gram-Schmidt over the standard basis."""
    n, m = V.shape
    cols = [V[:, j] for j in range(m)]
    for e in np.eye(n, dtype=complex):
        if len(cols) == n:
            break
        w = e.copy()
        for _ in range(2):  # re-orthogonalize once for stability
            for c in cols:
                w = w - c * np.vdot(c, w)
        nrm = np.linalg.norm(w)
        if nrm > pivot:
            cols.append(w / nrm)
    if len(cols) != n:
        raise RuntimeError("unitary completion failed")
    return np.column_stack(cols)


def dilate_to_unitary(C):
    """Unitary dilation with the environment starting in ``|0>``.

    Returns
    -------
    U : ndarray
        Unitary on system kron environment (system first).
    d_E : int
        Environment dimension, equal to the Kraus count.

    Notes
    -----
    The isometry ``V = sum_j K_j kron |j>`` fixes the columns ``|k>|0>`` of
    ``U``; the remaining columns are completed by Gram-Schmidt.
    """
    ok, r = is_tp(C)
    if not ok:
        raise ValueError(f"channel is not trace preserving (residual {r:.3e})")
    if C.d_in != C.d_out:
        raise ValueError("unitary dilation needs d_in == d_out")
    ks = C.kraus
    d, dE = C.d_in, len(ks)
    V = np.zeros((d * dE, d), dtype=complex)
    for j, K in enumerate(ks):
        V[j::dE, :] = K  # rows (a, j) -> a*dE + j
    U = np.zeros((d * dE, d * dE), dtype=complex)
    # columns (k, 0) carry the isometry; complete the rest
    first = [k * dE for k in range(d)]
    W = _complete_unitary(V)
    rest = [c for c in range(d * dE) if c not in first]
    U[:, first] = W[:, :d]
    U[:, rest] = W[:, d:]
    return U, dE


def reduce_dilation(U, d, dE, rho):
    """``tr_E[U (rho kron |0><0|) U^dagger]``."""
    env = np.zeros((dE, dE), dtype=complex)
    env[0, 0] = 1
    out = U @ np.kron(rho, env) @ U.conj().T
    return qla.partial_trace(CMatrix(out, [d, dE]), [0]).data


# ---------------------------------------------------------------------------
# factory
# ---------------------------------------------------------------------------

def identity_channel(d=2):
    return Channel(d, d, "kraus", [np.eye(d)])


def unitary_channel(U):
    U = np.asarray(qla._arr(U), dtype=complex)
    if not np.allclose(U @ U.conj().T, np.eye(U.shape[0]), atol=1e-9):
        raise ValueError("matrix is not unitary")
    return Channel(U.shape[1], U.shape[0], "kraus", [U])


def amplitude_damping(p):
    """Amplitude damping with survival amplitude ``p``: coherences scale by
    ``sqrt(p)`` and the excited population by ``p`` (``p=0`` resets to ``|0>``)."""
    if not 0 <= p <= 1:
        raise ValueError("p must lie in [0, 1]")
    S = np.array([[1, 0, 0, 1 - p],
                  [0, np.sqrt(p), 0, 0],
                  [0, 0, np.sqrt(p), 0],
                  [0, 0, 0, p]], dtype=complex)
    return Channel(2, 2, "superop", S)


def depolarizing(p):
    """Pauli channel ``sum_j p_j sigma_j rho sigma_j`` with ``p = (p0, p1, p2, p3)``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (4,) or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
        raise ValueError("need four non-negative weights summing to one")
    return Channel(2, 2, "kraus", [np.sqrt(pj) * P for pj, P in zip(p, qla.PAULIS) if pj > 0])


def dephasing(gamma, t):
    """Qubit dephasing: off-diagonals multiplied by ``exp(-gamma t)``."""
    if gamma * t < 0:
        raise ValueError("gamma*t must be non-negative")
    e = np.exp(-gamma * t)
    return Channel(2, 2, "kraus", [np.sqrt((1 + e) / 2) * I2, np.sqrt((1 - e) / 2) * SZ])


def xyz_coupling(omega_t):
    """``exp(-i omega t (XX + YY + ZZ))`` on two qubits."""
    H = sum(np.kron(P, P) for P in (SX, SY, SZ))
    return expm(-1j * omega_t * H)


def xz_oscillatory(omega, t=1.0):
    """Qubit channel from a Heisenberg-coupled, maximally mixed environment qubit.

    The Bloch vector contracts by ``cos(2 omega t)**2``; the map is unital.
    """
    U = xyz_coupling(omega * t)
    ks = []
    for e in range(2):  # env prepared in I/2 = mixture of |0>,|1>
        for f in range(2):
            K = np.zeros((2, 2), dtype=complex)
            for a in range(2):
                for k in range(2):
                    K[a, k] = U[a * 2 + f, k * 2 + e] / np.sqrt(2)
            ks.append(K)
    return Channel(2, 2, "kraus", ks)


def random_cptp(seed=None, d=2, rank=None, d_out=None):
    """Random CPTP map from a Haar-like isometry (Kraus rank ``rank``)."""
    rng = np.random.default_rng(seed)
    d_out = d if d_out is None else d_out
    r = d * d_out if rank is None else int(rank)
    G = rng.normal(size=(d_out * r, d)) + 1j * rng.normal(size=(d_out * r, d))
    Q, _ = np.linalg.qr(G)
    return Channel(d, d_out, "kraus", [Q[j * d_out:(j + 1) * d_out, :] for j in range(r)])


_FACTORY = {
    "identity": identity_channel,
    "amplitude_damping": amplitude_damping,
    "depolarizing": depolarizing,
    "dephasing": dephasing,
    "unitary": unitary_channel,
    "xz_oscillatory": xz_oscillatory,
    "random_cptp": random_cptp,
}


def channel_factory(kind, **params):
    """Build a named channel, e.g. ``channel_factory("dephasing", gamma=1, t=0.5)``."""
    try:
        fn = _FACTORY[kind]
    except KeyError:
        raise ValueError(f"unknown channel kind {kind!r}; choose from {sorted(_FACTORY)}") from None
    return fn(**params)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def channel_to_dict(C):
    if C.rep == "kraus":
        payload = [CMatrix(K).to_dict() for K in C.payload()]
    elif C.rep == "choi":
        payload = CMatrix(C.payload(), [C.d_out, C.d_in]).to_dict()
    else:
        payload = CMatrix(C.payload(), [C.d_out, C.d_out], [C.d_in, C.d_in]).to_dict()
    return {"d_in": C.d_in, "d_out": C.d_out, "rep": C.rep, "payload": payload}


def channel_from_dict(d):
    rep = d["rep"]
    if rep == "kraus":
        payload = [CMatrix.from_dict(k).data for k in d["payload"]]
    else:
        payload = CMatrix.from_dict(d["payload"]).data
    return Channel(d["d_in"], d["d_out"], rep, payload)
