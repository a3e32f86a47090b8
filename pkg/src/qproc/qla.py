"""
Dense complex linear algebra with tensor-factor bookkeeping.

:class:`CMatrix` carries a complex matrix together with the ordered factor
dimensions of its row and column spaces.  The free functions below
(partial traces, entropies, distances, ...) accept either a ``CMatrix`` or a
plain 2-D array plus an explicit ``dims`` list, and return ``CMatrix``
values whenever the result still has a tensor structure.

Conventions
-----------
* Row-major layout; factor 0 is the leftmost (slowest-varying) tensor slot.
* Logarithms are natural, so entropies are in nats.
* Positivity tolerance ``TAU_PSD`` is relative to the largest |eigenvalue|.
"""
import numpy as np
from scipy import linalg as sla

from . import _backend

TAU_PSD = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


def _prod(xs):
    out = 1
    for x in xs:
        out *= int(x)
    return out


class CMatrix:
    """Immutable complex matrix with tensor-factor dimensions.

    Parameters
    ----------
    data : array_like
        2-D complex array (a 0-d or 1-element input becomes 1x1).
    dims : sequence of int, optional
        Factor dimensions of the row space.  Defaults to ``[rows]``.
    cols_dims : sequence of int, optional
        Factor dimensions of the column space.  Defaults to ``dims`` for
        square data and ``[cols]`` otherwise.
    """

    __slots__ = ("_data", "rows_dims", "cols_dims")

    def __init__(self, data, dims=None, cols_dims=None):
        if isinstance(data, CMatrix):
            dims = data.rows_dims if dims is None else dims
            cols_dims = data.cols_dims if cols_dims is None else cols_dims
            data = data._data
        arr = np.array(data, dtype=complex)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        if arr.ndim != 2:
            raise ValueError("CMatrix data must be 2-D")
        rows = [int(d) for d in (dims if dims is not None else [arr.shape[0]])]
        if cols_dims is None:
            cols = list(rows) if arr.shape[0] == arr.shape[1] and _prod(rows) == arr.shape[1] \
                else [arr.shape[1]]
        else:
            cols = [int(d) for d in cols_dims]
        if any(d < 1 for d in rows + cols):
            raise ValueError("factor dimensions must be positive")
        if _prod(rows) != arr.shape[0] or _prod(cols) != arr.shape[1]:
            raise ValueError(f"dims {rows}x{cols} do not match shape {arr.shape}")
        arr.flags.writeable = False
        self._data = arr
        self.rows_dims = tuple(rows)
        self.cols_dims = tuple(cols)

    # -- basic views -------------------------------------------------------
    @property
    def data(self):
        """Read-only ndarray view of the entries."""
        return self._data

    @property
    def dims(self):
        """Factor dimensions (row space; equals column space for square operators)."""
        return self.rows_dims

    @property
    def shape(self):
        return self._data.shape

    @property
    def is_square(self):
        return self.rows_dims == self.cols_dims

    def __array__(self, dtype=None, copy=None):
        return self._data.astype(dtype) if dtype is not None else self._data.copy()

    def __repr__(self):
        return f"CMatrix(dims={list(self.rows_dims)}x{list(self.cols_dims)})\n{self._data!r}"

    # -- algebra -----------------------------------------------------------
    def _like(self, arr):
        return CMatrix(arr, self.rows_dims, self.cols_dims)

    def __add__(self, other):
        return self._like(self._data + _arr(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._like(self._data - _arr(other))

    def __rsub__(self, other):
        return self._like(_arr(other) - self._data)

    def __neg__(self):
        return self._like(-self._data)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            raise TypeError("use @ for matrix products")
        return self._like(self._data * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self._like(self._data / scalar)

    def __matmul__(self, other):
        o = other if isinstance(other, CMatrix) else CMatrix(other)
        return CMatrix(self._data @ o._data, self.rows_dims, o.cols_dims)

    def __eq__(self, other):
        if not isinstance(other, CMatrix):
            return NotImplemented
        return (self.rows_dims == other.rows_dims and self.cols_dims == other.cols_dims
                and np.array_equal(self._data, other._data))

    __hash__ = None

    @property
    def H(self):
        """Conjugate transpose."""
        return CMatrix(self._data.conj().T, self.cols_dims, self.rows_dims)

    @property
    def T(self):
        """Full transpose."""
        return CMatrix(self._data.T, self.cols_dims, self.rows_dims)

    def conj(self):
        return self._like(self._data.conj())

    def trace(self):
        return complex(np.trace(self._data))

    def allclose(self, other, atol=1e-10):
        return np.allclose(self._data, _arr(other), rtol=0, atol=atol)

    # -- serialization -----------------------------------------------------
    def to_dict(self):
        """JSON-ready dict with fields ``rows_dims, cols_dims, re, im`` in that order."""
        flat = self._data.ravel()
        return {
            "rows_dims": list(self.rows_dims),
            "cols_dims": list(self.cols_dims),
            "re": [float(x) for x in flat.real],
            "im": [float(x) for x in flat.imag],
        }

    @classmethod
    def from_dict(cls, d):
        rows, cols = list(d["rows_dims"]), list(d["cols_dims"])
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d.get("im", np.zeros_like(re)), dtype=float)
        if re.size != _prod(rows) * _prod(cols) or im.size != re.size:
            raise ValueError("entry count does not match dims")
        return cls((re + 1j * im).reshape(_prod(rows), _prod(cols)), rows, cols)


def _arr(x):
    return x._data if isinstance(x, CMatrix) else np.asarray(x, dtype=complex)


def as_cmatrix(M, dims=None):
    """Coerce ``M`` to a :class:`CMatrix`, optionally (re)labelling factor dims."""
    if isinstance(M, CMatrix) and dims is None:
        return M
    return CMatrix(_arr(M), dims)


def _square(M, dims=None):
    C = as_cmatrix(M, dims)
    if not C.is_square:
        raise ValueError("operation requires a square operator with matching row/col dims")
    return C


# ---------------------------------------------------------------------------
# tensor structure
# ---------------------------------------------------------------------------

def kron(*mats):
    """Kronecker product; factor dims concatenate.

    >>> kron(SZ, SZ).data.diagonal().real
    array([ 1., -1., -1.,  1.])
    """
    if not mats:
        return CMatrix(np.ones((1, 1)), [1])
    out = as_cmatrix(mats[0])
    for m in mats[1:]:
        m = as_cmatrix(m)
        out = CMatrix(np.kron(out.data, m.data), out.rows_dims + m.rows_dims,
                      out.cols_dims + m.cols_dims)
    return out


def _check_factors(C, factors):
    n = len(C.dims)
    for f in factors:
        if not 0 <= int(f) < n:
            raise IndexError(f"factor index {f} out of range for {n} factors")


def partial_trace(M, keep, dims=None):
    """Trace out every factor not in ``keep``.

    Parameters
    ----------
    M : CMatrix or array_like
    keep : iterable of int
        Factor indices to keep; the result lists them in ascending order.
    dims : sequence of int, optional
        Factor dims when ``M`` is a bare array.
    """
    C = _square(M, dims)
    keep = sorted(set(int(k) for k in keep))
    _check_factors(C, keep)
    out = _backend.kernels().partial_trace(C.data, C.dims, keep)
    return CMatrix(out, [C.dims[k] for k in keep] or [1])


def partial_transpose(M, factors, dims=None):
    """Transpose the listed factors (an involution; all factors = full transpose)."""
    C = _square(M, dims)
    factors = sorted(set(int(f) for f in factors))
    _check_factors(C, factors)
    if not factors:
        return C
    return CMatrix(_backend.kernels().partial_transpose(C.data, C.dims, factors), C.dims)


def permute(M, perm, dims=None):
    """Reorder factors so that input factor ``perm[j]`` becomes output factor ``j``."""
    C = _square(M, dims)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(len(C.dims))):
        raise ValueError(f"{perm} is not a permutation of {len(C.dims)} factors")
    return CMatrix(_backend.kernels().permute(C.data, C.dims, perm), [C.dims[p] for p in perm])


def contract(A, B):
    """``tr[A B^T] = sum_ij A_ij B_ij`` (the pairing used by the Born rule)."""
    return _backend.kernels().contract(_arr(A), _arr(B))


def max_entangled(d):
    """Unnormalized projector onto ``|Phi+> = sum_k |kk>`` (trace ``d``)."""
    d = int(d)
    if d < 2:
        raise ValueError("max_entangled requires d >= 2")
    v = np.eye(d, dtype=complex).reshape(d * d)
    return CMatrix(np.outer(v, v), [d, d])


def ket(index, d):
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def proj(v):
    """``|v><v|`` for a (not necessarily normalized) vector."""
    v = np.asarray(v, dtype=complex).ravel()
    return np.outer(v, v.conj())


# ---------------------------------------------------------------------------
# spectra and positivity
# ---------------------------------------------------------------------------

def hermiticity_error(M):
    A = _arr(M)
    scale = max(1.0, float(np.abs(A).max()) if A.size else 1.0)
    return float(np.abs(A - A.conj().T).max()) / scale if A.size else 0.0


def herm_eig(M, tol=TAU_PSD):
    """Eigen-decomposition of a Hermitian matrix, eigenvalues descending.

    Returns
    -------
    vals : ndarray of float
    vecs : ndarray, columns are eigenvectors

    Raises
    ------
    ValueError
        If ``M`` is not Hermitian within ``tol`` (relative to its largest entry).
    """
    A = _arr(M)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("herm_eig needs a square matrix")
    err = hermiticity_error(A)
    if err > tol:
        raise ValueError(f"matrix is not Hermitian (relative asymmetry {err:.3e})")
    vals, vecs = np.linalg.eigh((A + A.conj().T) / 2)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def min_eig(M):
    """Smallest eigenvalue of the Hermitian part."""
    A = _arr(M)
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])


def psd_tolerance(M, tau=TAU_PSD):
    A = _arr(M)
    ev = np.linalg.eigvalsh((A + A.conj().T) / 2)
    return tau * max(1.0, float(np.abs(ev).max()) if ev.size else 1.0)


def is_psd(M, tau=TAU_PSD):
    """``(passed, most_negative_eigenvalue)`` with a relative tolerance."""
    A = _arr(M)
    if hermiticity_error(A) > tau:
        return False, float("nan")
    lo = min_eig(A)
    return lo >= -psd_tolerance(A, tau), lo


def is_density_matrix(M, tau=TAU_PSD, subnormalized=False):
    ok, _ = is_psd(M, tau)
    tr = _arr(M).trace()
    if subnormalized:
        return ok and -tau <= tr.real <= 1 + tau and abs(tr.imag) <= tau
    return ok and abs(tr - 1) <= tau


def _clamped_spectrum(M, tau=TAU_PSD):
    vals, _ = herm_eig(M, tol=max(tau, 1e-9))
    cut = tau * max(1.0, float(np.abs(vals).max()) if vals.size else 1.0)
    if vals.size and vals[-1] < -cut:
        raise ValueError(f"not positive semidefinite (eigenvalue {vals[-1]:.3e})")
    vals = np.where(vals < cut, 0.0, vals)
    return vals


def vn_entropy(rho, tau=TAU_PSD):
    """Von Neumann entropy ``-tr[rho log rho]`` in nats (0 log 0 := 0)."""
    A = _arr(rho)
    if abs(A.trace() - 1) > 1e-6:
        raise ValueError("vn_entropy expects a unit-trace state")
    lam = _clamped_spectrum(A, tau)
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log(lam)))


def shannon(p):
    """Shannon entropy (nats) of a probability vector, 0 log 0 := 0."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def q_rel_entropy(rho, sigma, tau=TAU_PSD):
    """Quantum relative entropy ``S(rho||sigma) = tr[rho (log rho - log sigma)]``.

    Returns ``inf`` when the support of ``rho`` is not contained in the
    support of ``sigma`` (the support-violation flag).
    """
    R, S = _arr(rho), _arr(sigma)
    if R.shape != S.shape:
        raise ValueError("dimension mismatch")
    lr, vr = herm_eig(R, tol=1e-8)
    ls, vs = herm_eig(S, tol=1e-8)
    cr = tau * max(1.0, float(np.abs(lr).max()))
    cs = tau * max(1.0, float(np.abs(ls).max()))
    lr = np.where(lr < cr, 0.0, lr)
    sup = ls >= cs
    # weight of rho outside supp(sigma)
    kern = vs[:, ~sup]
    leak = float(np.real(np.trace(kern.conj().T @ R @ kern))) if kern.size else 0.0
    if leak > 10 * cr:
        return float("inf")
    pos = lr > 0
    term1 = float(np.sum(lr[pos] * np.log(lr[pos])))
    # tr[rho log sigma] over the support of sigma
    overlap = np.abs(vr[:, pos].conj().T @ vs[:, sup]) ** 2  # |<r_i|s_j>|^2
    term2 = float(np.sum(lr[pos][:, None] * overlap * np.log(ls[sup])[None, :]))
    val = term1 - term2
    # rounding can push an exact zero slightly negative; Klein's inequality says >= 0
    return max(val, 0.0)


def q_mutual_info(rho, cut, dims=None, tau=TAU_PSD):
    """Quantum mutual information ``S(A)+S(B)-S(AB)`` in nats.

    Parameters
    ----------
    rho : CMatrix or array_like
        Unit-trace state.
    cut : pair of iterables
        Factor indices of ``A`` and ``B``; together they must cover all factors.
    """
    C = _square(rho, dims)
    A, B = sorted(set(cut[0])), sorted(set(cut[1]))
    if set(A) & set(B) or sorted(A + B) != list(range(len(C.dims))):
        raise ValueError("cut must partition all factors into two blocks")
    return (vn_entropy(partial_trace(C, A), tau) + vn_entropy(partial_trace(C, B), tau)
            - vn_entropy(C, tau))


def q_cond_mutual_info(rho, a, b, c, dims=None, tau=TAU_PSD):
    """``S(A:B|C) = S(AC) + S(BC) - S(C) - S(ABC)`` for a state on factors a,b,c (may not cover all)."""
    C = _square(rho, dims)
    a, b, c = sorted(set(a)), sorted(set(b)), sorted(set(c))

    def S(fs):
        return vn_entropy(partial_trace(C, fs), tau) if fs else 0.0

    return S(a + c) + S(b + c) - S(c) - S(a + b + c)


def schatten_norm(M, p=1):
    """Schatten p-norm (``p=np.inf`` gives the operator norm)."""
    s = np.linalg.svd(_arr(M), compute_uv=False)
    if np.isinf(p):
        return float(s.max()) if s.size else 0.0
    return float(np.sum(s ** p) ** (1.0 / p))


def trace_distance(rho, sigma):
    """``(1/2) || rho - sigma ||_1``."""
    A, B = _arr(rho), _arr(sigma)
    if A.shape != B.shape:
        raise ValueError("dimension mismatch")
    D = A - B
    return 0.5 * float(np.abs(np.linalg.eigvalsh((D + D.conj().T) / 2)).sum())


def sqrtm_psd(M):
    vals, vecs = herm_eig(M, tol=1e-8)
    vals = np.clip(vals, 0, None)
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


def inv_sqrtm_psd(M, rcond=1e-12):
    """Pseudo-inverse square root (zero on the kernel)."""
    vals, vecs = herm_eig(M, tol=1e-8)
    keep = vals > rcond * max(1.0, float(vals.max()))
    inv = np.zeros_like(vals)
    inv[keep] = 1.0 / np.sqrt(vals[keep])
    return (vecs * inv) @ vecs.conj().T


def principal_logm(M, branch_tol=1e-12):
    """Principal matrix logarithm (Schur based) with a branch-cut guard.

    Raises
    ------
    ValueError
        If an eigenvalue is within ``branch_tol`` of the closed negative real
        axis (including zero), where the principal branch is undefined.
    """
    A = _arr(M)
    T, _ = sla.schur(A, output="complex")
    ev = np.diag(T)
    scale = max(1.0, float(np.abs(ev).max()))
    for lam in ev:
        if abs(lam) <= branch_tol * scale or (lam.real < 0 and abs(lam.imag) <= branch_tol * scale):
            raise ValueError(f"eigenvalue {lam:.3e} lies on the branch cut of the principal log")
    return sla.logm(A)


def random_state(d, seed=None, rank=None):
    """Random density matrix from a (complex Ginibre) induced measure."""
    rng = np.random.default_rng(seed)
    r = d if rank is None else rank
    G = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = G @ G.conj().T
    return rho / np.trace(rho)


def haar_unitary(d, seed=None):
    """Haar-random unitary via QR of a Ginibre matrix with phase fix."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph
