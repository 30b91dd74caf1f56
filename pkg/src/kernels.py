"""
Reproducing kernels for RKHS problems.

A kernel turns a list of points x^(1), ..., x^(P) into the Gram matrix of
the representers k(., x^(i)); elements are then coordinate vectors in that
spanning system and the evaluation functional at x^(i) is the i-th unit
coordinate vector.
"""

from typing import Any, Mapping, Optional

import numpy as np
from scipy.spatial.distance import cdist


class LinearKernel:
    """Linear kernel k(x, x') = <x, x'>."""

    name = "linear"

    def __call__(self, X: np.ndarray, Y: Optional[np.ndarray] = None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        return X @ Y.T

    def to_dict(self) -> dict:
        return {"linear": {}}


class GaussianKernel:
    """
    Gaussian kernel k(x, x') = exp(-gamma ||x - x'||^2).

    Attributes:
        gamma: Positive width parameter
    """

    name = "gaussian"

    def __init__(self, gamma: float = 1.0):
        if not gamma > 0:
            raise ValueError("GaussianKernel gamma must be positive")
        self.gamma = float(gamma)

    def __call__(self, X: np.ndarray, Y: Optional[np.ndarray] = None) -> np.ndarray:
        """Kernel matrix evaluated pairwise between the rows of X and Y (Y = X if None)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = X if Y is None else np.atleast_2d(np.asarray(Y, dtype=float))
        return np.exp(-self.gamma * cdist(X, Y, "sqeuclidean"))

    def to_dict(self) -> dict:
        return {"gaussian": {"gamma": self.gamma}}


def kernel_from_spec(spec: Any):
    """
    Build a kernel from its problem-file description.

    Accepts "linear", {"linear": {}} or {"gaussian": {"gamma": value}}.

    Raises:
        ValueError: On an unknown kernel name or bad parameters
    """
    if spec == "linear":
        return LinearKernel()
    if isinstance(spec, Mapping) and len(spec) == 1:
        (name, params), = spec.items()
        params = params or {}
        if name == "linear":
            return LinearKernel()
        if name == "gaussian":
            return GaussianKernel(gamma=float(params.get("gamma", 1.0)))
    raise ValueError(f"Unknown kernel specification: {spec!r}")


def gram_matrix(kernel, points: np.ndarray) -> np.ndarray:
    """Symmetrized Gram matrix of the kernel sections at the given points."""
    gram = kernel(points)
    return 0.5 * (gram + gram.T)
