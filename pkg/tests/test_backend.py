import os

import numpy as np
import pytest

import qproc
from qproc import _backend, qla
from qproc.qla import CMatrix


def test_compiled_backend_selected_when_built():
    if "cython" not in qproc.available_backends():
        pytest.skip("compiled kernels not built")
    expected = "python" if os.environ.get("QPROC_PURE_PYTHON") else "cython"
    assert qproc.backend() == expected


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        qproc.use_backend("fortran")


@pytest.mark.parametrize("dims", [[2, 3], [2, 2, 2], [3, 1, 2, 2]])
def test_backends_agree(dims):
    if "cython" not in qproc.available_backends():
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(sum(dims))
    n = int(np.prod(dims))
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M.flags.writeable = False  # kernels must accept read-only buffers
    cy, py = _backend._compiled, _backend._kernels_py
    perm = list(range(1, len(dims))) + [0]
    assert np.allclose(cy.permute(M, dims, perm), py.permute(M, dims, perm))
    assert np.allclose(cy.partial_trace(M, dims, [0]), py.partial_trace(M, dims, [0]))
    assert np.allclose(cy.partial_trace(M, dims, []), py.partial_trace(M, dims, []))
    assert np.allclose(cy.partial_transpose(M, dims, [0, len(dims) - 1]),
                       py.partial_transpose(M, dims, [0, len(dims) - 1]))
    assert cy.contract(M, M.T) == pytest.approx(py.contract(M, M.T))


def test_switching_backends_gives_same_results():
    rho = CMatrix(qla.random_state(8, seed=3), [2, 2, 2])
    prev = qproc.use_backend("python")
    try:
        a = qla.partial_trace(rho, [0, 2]).data
    finally:
        qproc.use_backend(prev)
    b = qla.partial_trace(rho, [0, 2]).data
    assert np.allclose(a, b)
