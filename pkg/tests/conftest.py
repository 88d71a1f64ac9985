import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import svmbalance as sb


def random_problem(seed, n_range=(10, 40), p_range=(2, 6), kernel="rbf",
                   balanced=False):
    """Random dataset plus its Q matrix for property tests."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(*n_range))
    if balanced and n % 2:
        n += 1
    p = int(rng.integers(*p_range))
    X = rng.standard_normal((n, p))
    if balanced:
        n_t = n // 2
    else:
        n_t = int(rng.integers(3, n - 2))
    T = np.zeros(n, dtype=int)
    T[:n_t] = 1
    rng.shuffle(T)
    ds = sb.make_dataset(X, T)
    spec = {
        "linear": sb.KernelSpec("linear"),
        "polynomial": sb.KernelSpec("polynomial"),
        "poly_kernel": sb.KernelSpec("polynomial", explicit_features=False),
        "rbf": sb.KernelSpec("rbf", gamma="median"),
    }[kernel]
    qm, Xs, spec = sb.build_q(ds.X, ds.W, spec)
    return ds, qm, Xs, spec


@pytest.fixture
def rng():
    return np.random.default_rng(0)
