"""Pure-numpy implementation of the tensor-factor kernels.

Same interface as the compiled ``_kernels`` extension; selected when the
extension is unavailable or ``QPROC_PURE_PYTHON=1`` is set.
"""
import numpy as np


def permute(m, dims, perm):
    """Reorder tensor factors: factor ``perm[j]`` of the input becomes factor ``j``."""
    dims = [int(d) for d in dims]
    n = len(dims)
    t = np.asarray(m, dtype=complex).reshape(dims + dims)
    axes = list(perm) + [p + n for p in perm]
    side = int(np.prod(dims)) if dims else 1
    return np.ascontiguousarray(t.transpose(axes).reshape(side, side))


def partial_trace(m, dims, keep):
    """Trace out every factor not listed in ``keep`` (kept order preserved)."""
    dims = [int(d) for d in dims]
    keep = sorted(int(k) for k in keep)
    n = len(dims)
    traced = [j for j in range(n) if j not in keep]
    t = np.asarray(m, dtype=complex).reshape(dims + dims)
    # move traced factors last on both sides, then trace the bipartite block
    axes = keep + traced + [k + n for k in keep] + [j + n for j in traced]
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    dt = int(np.prod([dims[j] for j in traced])) if traced else 1
    t = t.transpose(axes).reshape(dk, dt, dk, dt)
    return np.ascontiguousarray(np.einsum("ajbj->ab", t))


def partial_transpose(m, dims, factors):
    """Transpose the listed factors, leaving the others untouched."""
    dims = [int(d) for d in dims]
    n = len(dims)
    t = np.asarray(m, dtype=complex).reshape(dims + dims)
    axes = list(range(2 * n))
    for f in factors:
        axes[f], axes[f + n] = axes[f + n], axes[f]
    side = int(np.prod(dims)) if dims else 1
    return np.ascontiguousarray(t.transpose(axes).reshape(side, side))


def contract(A, B):
    """Return sum_ij A_ij * B_ij (no conjugation), i.e. tr[A B^T]."""
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise ValueError("shape mismatch in contract")
    return complex(np.sum(A * B))
