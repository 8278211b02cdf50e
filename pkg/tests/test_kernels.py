import numpy as np
import pytest

from gwnorm import kernels
from gwnorm.taylor import euler_pair

pytestmark = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled extension not built")


def _mc_inputs(rng, p=6, n=300):
    eidx = -np.ones((p, p), dtype=np.int64)
    k = 0
    for i in range(p):
        for j in range(i + 1, p):
            if rng.uniform() < 0.5:
                eidx[i, j] = k
                k += 1
    phid = np.sqrt(rng.gamma(1.5, 1.0, (n, p)))
    phio = rng.normal(0, 0.7, (n, k))
    A = rng.normal(size=(p, p))
    L = np.linalg.cholesky(A @ A.T + p * np.eye(p))
    coup = rng.uniform(-0.5, 0.5, (p, p))
    return phid, phio, eidx, L, coup


@pytest.mark.parametrize("use_coup", [False, True])
def test_mc_backends_agree(use_coup):
    rng = np.random.default_rng(0)
    args = _mc_inputs(rng)
    a = kernels.get("mc_logweights", "python")(*args, use_coup)
    b = kernels.get("mc_logweights", "cython")(*args, use_coup)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("nv", [2, 3])
def test_recurrence_backends_agree(nv):
    rng = np.random.default_rng(nv)
    facs = []
    for _ in range(3):
        P = np.zeros((3,) * nv)
        P[(0,) * nv] = 1.0
        for k in range(nv):
            idx = [0] * nv
            idx[k] = 1
            P[tuple(idx)] = rng.uniform(-0.3, 0.3)
        idx = [0] * nv
        idx[0] = 2
        P[tuple(idx)] = rng.uniform(-0.1, 0.1)
        facs.append(P)
    Q, R = euler_pair(facs, [-1.5, 0.7, -2.2])
    a = kernels.get("graded_recurrence", "python")(Q, R, 1.0, 12)
    b = kernels.get("graded_recurrence", "cython")(Q, R, 1.0, 12)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
