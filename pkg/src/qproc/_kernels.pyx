# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled index-gather kernels for dense tensor-factor bookkeeping.

Every kernel works on a square complex matrix whose side is the product of
an ordered list of factor dimensions.  Index arithmetic is precomputed as
integer offset tables with numpy; the O(N^2) gathers run without the GIL.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef double complex cplx


def _strides(dims):
    dims = [int(d) for d in dims]
    out = [1] * len(dims)
    for j in range(len(dims) - 2, -1, -1):
        out[j] = out[j + 1] * dims[j + 1]
    return out


def _offsets(dims, factors):
    """Flat offsets (into the full index) enumerating ``factors`` row-major."""
    st = _strides(dims)
    off = np.zeros(1, dtype=np.int64)
    for f in factors:
        d = int(dims[f])
        off = (off[:, None] + np.arange(d, dtype=np.int64)[None, :] * st[f]).ravel()
    return off


cdef void _gather(const cplx[:, ::1] m, const cnp.int64_t[::1] ro,
                  const cnp.int64_t[::1] co, cplx[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef Py_ssize_t n = ro.shape[0], k = co.shape[0]
    for i in range(n):
        for j in range(k):
            out[i, j] = m[ro[i], co[j]]


def permute(m, dims, perm):
    """Reorder tensor factors: factor ``perm[j]`` of the input becomes factor ``j``."""
    cdef const cplx[:, ::1] mv = np.ascontiguousarray(m, dtype=np.complex128)
    off = _offsets(dims, list(perm))
    out = np.empty((off.shape[0], off.shape[0]), dtype=np.complex128)
    _gather(mv, off, off, out)
    return out


def partial_trace(m, dims, keep):
    """Trace out every factor not listed in ``keep`` (kept order preserved)."""
    keep = sorted(int(k) for k in keep)
    traced = [j for j in range(len(dims)) if j not in keep]
    cdef cnp.int64_t[::1] ok = _offsets(dims, keep)
    cdef cnp.int64_t[::1] ot = _offsets(dims, traced)
    cdef const cplx[:, ::1] mv = np.ascontiguousarray(m, dtype=np.complex128)
    cdef Py_ssize_t nk = ok.shape[0], nt = ot.shape[0]
    out = np.zeros((nk, nk), dtype=np.complex128)
    cdef cplx[:, ::1] ov = out
    cdef Py_ssize_t r, c, t
    cdef cplx acc
    with nogil:
        for r in range(nk):
            for c in range(nk):
                acc = 0
                for t in range(nt):
                    acc = acc + mv[ok[r] + ot[t], ok[c] + ot[t]]
                ov[r, c] = acc
    return out


def partial_transpose(m, dims, factors):
    """Transpose the listed factors, leaving the others untouched."""
    factors = set(int(f) for f in factors)
    n = 1
    for d in dims:
        n *= int(d)
    st = _strides(dims)
    idx = np.arange(n, dtype=np.int64)
    part = np.zeros(n, dtype=np.int64)
    for f in factors:
        part += ((idx // st[f]) % int(dims[f])) * st[f]
    cdef cnp.int64_t[::1] a = idx - part
    cdef cnp.int64_t[::1] b = part
    cdef const cplx[:, ::1] mv = np.ascontiguousarray(m, dtype=np.complex128)
    out = np.empty((n, n), dtype=np.complex128)
    cdef cplx[:, ::1] ov = out
    cdef Py_ssize_t r, c, N = n
    with nogil:
        for r in range(N):
            for c in range(N):
                ov[r, c] = mv[a[r] + b[c], a[c] + b[r]]
    return out


def contract(A, B):
    """Return sum_ij A_ij * B_ij (no conjugation), i.e. tr[A B^T]."""
    cdef const cplx[:, ::1] av = np.ascontiguousarray(A, dtype=np.complex128)
    cdef const cplx[:, ::1] bv = np.ascontiguousarray(B, dtype=np.complex128)
    if av.shape[0] != bv.shape[0] or av.shape[1] != bv.shape[1]:
        raise ValueError("shape mismatch in contract")
    cdef Py_ssize_t i, j
    cdef cplx acc = 0
    with nogil:
        for i in range(av.shape[0]):
            for j in range(av.shape[1]):
                acc = acc + av[i, j] * bv[i, j]
    return complex(acc)
