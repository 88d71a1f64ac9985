"""Feature standardization, polynomial expansion, Gram matrices and Q.

The balancing problems all consume the signed Gram matrix
``Q[i, j] = W[i] * W[j] * K(X[i], X[j])``, whose quadratic form
``a' Q a`` equals the squared RKHS norm of the weighted treated-vs-control
feature-mean difference. Three kernel families are supported:

* ``linear``:      K(x, y) = x'y
* ``polynomial``:  K(x, y) = (x'y + c)^d, or the explicit degree-2 feature
                   expansion followed by a linear kernel (the workflow
                   default, ``explicit_features=True``)
* ``rbf``:         K(x, y) = exp(-gamma * ||x - y||^2), with ``gamma``
                   either fixed or resolved by the median heuristic
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import pdist, squareform

FAMILIES = ("linear", "polynomial", "rbf")

# Subsample cap for the median heuristic; above this many rows a fixed-seed
# subsample keeps the pair count manageable.
MEDIAN_HEURISTIC_MAX_POINTS = 4096


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus the parameters that family requires.

    Parameters
    ----------
    family : str
        One of ``linear``, ``polynomial``, ``rbf``.
    degree : int
        Polynomial degree d >= 1.
    scale_c : float
        Polynomial offset c >= 0.
    gamma : float or "median" or None
        RBF scale; ``"median"`` resolves via :func:`median_heuristic`.
    explicit_features : bool
        For ``polynomial``: expand degree-2 features explicitly and apply a
        linear kernel (True) or evaluate (x'y + c)^d directly (False).
    """

    family: str
    degree: int = 2
    scale_c: float = 1.0
    gamma: float | str | None = None
    explicit_features: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "polynomial":
            if int(self.degree) < 1:
                raise ValueError("polynomial degree must be >= 1")
            if self.scale_c < 0:
                raise ValueError("polynomial offset c must be >= 0")
        if self.family == "rbf":
            g = self.gamma
            ok = g == "median" or (isinstance(g, (int, float)) and g > 0)
            if not ok:
                raise ValueError("rbf kernel needs gamma > 0 or 'median'")

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.family == "polynomial":
            d["degree"] = int(self.degree)
            d["scale_c"] = float(self.scale_c)
            d["explicit_features"] = bool(self.explicit_features)
        if self.family == "rbf":
            d["gamma"] = self.gamma
        return d


@dataclass(frozen=True)
class QMatrix:
    """Signed Gram matrix Q (with the plain kernel matrix K cached)."""

    Q: np.ndarray
    K: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.Q.shape[0]


def standardize(X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center and scale columns to mean 0, sd 1 (denominator N-1).

    Constant columns map to all-zeros and report sd 0.
    """
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    centered = X - means
    sds = X.std(axis=0, ddof=1) if X.shape[0] > 1 else np.zeros(X.shape[1])
    constant = (X.max(axis=0) - X.min(axis=0)) == 0.0
    sds = np.where(constant, 0.0, sds)
    safe = np.where(sds > 0, sds, 1.0)
    Xs = np.where(sds > 0, centered / safe, 0.0)
    return Xs, means, sds


def polynomial_expand(X, degree: int = 2, binary_columns="auto",
                      interaction_groups=None) -> np.ndarray:
    """Degree-2 feature expansion: originals, pairwise products, squares.

    Squares of binary (0/1-valued) columns are dropped, as are interactions
    between columns declared to belong to the same categorical group.

    Parameters
    ----------
    X : array (N, p)
    degree : int
        Only degree 2 is supported.
    binary_columns : "auto" or sequence of column indices
        ``"auto"`` flags columns whose values are a subset of {0, 1}.
    interaction_groups : sequence of index collections, optional
        Columns listed together are one-hot levels of the same variable;
        their mutual interactions are excluded.
    """
    X = np.asarray(X, dtype=float)
    if degree != 2:
        raise ValueError(f"unsupported degree {degree}; only degree 2 is implemented")
    n, p = X.shape
    if binary_columns == "auto":
        binary = [j for j in range(p) if np.isin(np.unique(X[:, j]), (0.0, 1.0)).all()]
    else:
        binary = list(binary_columns or [])
    same_group = set()
    for group in interaction_groups or []:
        group = sorted(group)
        for a in range(len(group)):
            for b in range(a + 1, len(group)):
                same_group.add((group[a], group[b]))

    cols = [X]
    for i in range(p):
        for j in range(i + 1, p):
            if (i, j) in same_group:
                continue
            cols.append((X[:, i] * X[:, j])[:, None])
    for j in range(p):
        if j in binary:
            continue
        cols.append((X[:, j] ** 2)[:, None])
    return np.hstack(cols)


def median_heuristic(Xs, max_points: int = MEDIAN_HEURISTIC_MAX_POINTS,
                     seed: int = 0) -> float:
    """RBF scale gamma = 1 / median of squared pairwise distances."""
    Xs = np.asarray(Xs, dtype=float)
    n = Xs.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least 2 points")
    if n > max_points:
        idx = np.random.default_rng(seed).choice(n, size=max_points, replace=False)
        Xs = Xs[np.sort(idx)]
    med = float(np.median(pdist(Xs, metric="sqeuclidean")))
    if med <= 0.0:
        raise ValueError("all pairwise distances are zero; cannot set rbf scale")
    return 1.0 / med


def resolve_gamma(spec: KernelSpec, Xs) -> KernelSpec:
    """Return a spec with a concrete gamma (runs the median heuristic if asked)."""
    if spec.family == "rbf" and spec.gamma == "median":
        return replace(spec, gamma=median_heuristic(Xs))
    return spec


def gram(Xs, spec: KernelSpec) -> np.ndarray:
    """Kernel matrix for standardized features under the given spec."""
    Xs = np.asarray(Xs, dtype=float)
    if spec.family == "linear":
        K = Xs @ Xs.T
    elif spec.family == "polynomial":
        K = (Xs @ Xs.T + spec.scale_c) ** int(spec.degree)
    else:
        spec = resolve_gamma(spec, Xs)
        d2 = squareform(pdist(Xs, metric="sqeuclidean"))
        K = np.exp(-float(spec.gamma) * d2)
        np.fill_diagonal(K, 1.0)
    return 0.5 * (K + K.T)


def q_matrix(K, W) -> QMatrix:
    """Signed Gram matrix Q[i, j] = W[i] W[j] K[i, j]."""
    K = np.asarray(K, dtype=float)
    W = np.asarray(W, dtype=float)
    if K.shape[0] != K.shape[1] or K.shape[0] != W.shape[0]:
        raise ValueError("K must be square and match the length of W")
    Q = K * np.outer(W, W)
    return QMatrix(Q=0.5 * (Q + Q.T), K=K)


def design_matrix(X, spec: KernelSpec, binary_columns="auto",
                  interaction_groups=None) -> np.ndarray:
    """Feature matrix actually fed to the kernel for this spec.

    The polynomial workflow expands raw X to degree-2 features first; every
    family then standardizes the resulting matrix.
    """
    X = np.asarray(X, dtype=float)
    if spec.family == "polynomial" and spec.explicit_features:
        X = polynomial_expand(X, degree=2, binary_columns=binary_columns,
                              interaction_groups=interaction_groups)
    Xs, _, _ = standardize(X)
    return Xs


def build_q(X, W, spec: KernelSpec, binary_columns="auto",
            interaction_groups=None) -> tuple[QMatrix, np.ndarray, KernelSpec]:
    """Full pipeline: features -> kernel -> Q. Returns (Q, features, resolved spec)."""
    Xs = design_matrix(X, spec, binary_columns=binary_columns,
                       interaction_groups=interaction_groups)
    spec = resolve_gamma(spec, Xs)
    if spec.family == "polynomial" and spec.explicit_features:
        K = Xs @ Xs.T
    else:
        K = gram(Xs, spec)
    return q_matrix(K, W), Xs, spec
