"""
Evaluation and construction of target functionals and estimators.

Targets are maxima (or sup-inf combinations) of linear pieces; estimators
are maxima (or sup-inf combinations) of affine functions of the observation
vector. Every evaluation has a scalar form and a vectorized form over rows,
and the two agree exactly.
"""

import logging
import math
from itertools import combinations
from typing import Optional, Sequence, Union

import numpy as np

from src.errors import CombinatorialCapError, DimensionMismatchError
from src.models import (
    Estimator,
    Families,
    LinearFunctional,
    SupAffineEstimator,
    SupInfAffineEstimator,
    TargetFunctional,
    TargetKind,
)


logger = logging.getLogger(__name__)

DEFAULT_COMBINATORIAL_CAP = 10 ** 6

Pieces = Union[Sequence[LinearFunctional], Sequence[Sequence[float]], np.ndarray]


def stack_pieces(pieces: Pieces, name: str = "pieces") -> np.ndarray:
    """
    Stack functionals (or coefficient rows) into a matrix with one row each.

    Raises:
        ValueError: If the list is empty or the rows differ in length
    """
    rows = [p.coeffs if isinstance(p, LinearFunctional) else np.asarray(p, dtype=float) for p in pieces]
    if not rows:
        raise ValueError(f"{name} cannot be empty")
    lengths = {row.shape for row in rows}
    if len(lengths) != 1:
        raise DimensionMismatchError(f"{name} must all have the same length, got {sorted(lengths)}")
    return np.vstack(rows)


# Family reductions over a matrix of piece values (one row per point)

def sup_inf_values(values: np.ndarray, families: Families) -> np.ndarray:
    """max over families of the min of the family's piece values, per row."""
    inner = np.column_stack([values[:, list(family)].min(axis=1) for family in families])
    return inner.max(axis=1)


def inf_sup_values(values: np.ndarray, families: Families) -> np.ndarray:
    """min over families of the max of the family's piece values, per row."""
    inner = np.column_stack([values[:, list(family)].max(axis=1) for family in families])
    return inner.min(axis=1)


# Target evaluation

def piece_values(target: TargetFunctional, points: np.ndarray, gram: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Values gamma_i(f) of every piece at every point.

    Args:
        target: Target functional
        points: Matrix with one element per row
        gram: Pairing matrix; None means the plain dot product

    Returns:
        Matrix of shape (number of points, d)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != target.dim:
        raise DimensionMismatchError(
            f"Point dimension {points.shape[1]} does not match target dimension {target.dim}"
        )
    pieces = target.pieces if gram is None else target.pieces @ gram
    return points @ pieces.T


def eval_target_many(target: TargetFunctional, points: np.ndarray,
                     gram: Optional[np.ndarray] = None) -> np.ndarray:
    """Evaluate the target at every row of points."""
    values = piece_values(target, points, gram)
    if target.kind == TargetKind.SUP:
        return values.max(axis=1)
    return sup_inf_values(values, target.sup_families)


def eval_target(target: TargetFunctional, f: Sequence[float], gram: Optional[np.ndarray] = None) -> float:
    """Evaluate the target at a single element."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise DimensionMismatchError("eval_target expects a single element vector")
    return float(eval_target_many(target, f[None, :], gram)[0])


def eval_sup_linear(target: TargetFunctional, f: Sequence[float]) -> float:
    """
    Evaluate a sup-linear target: max_i <w_i, f>.

    Raises:
        ValueError: If the target is not of Sup kind or dimensions differ
    """
    if target.kind != TargetKind.SUP:
        raise ValueError("eval_sup_linear needs a Sup target")
    return eval_target(target, f)


# Estimator evaluation

def eval_estimator_many(estimator: Estimator, observations: np.ndarray) -> np.ndarray:
    """Evaluate the estimator at every row of the observation matrix."""
    y = np.asarray(observations, dtype=float)
    if y.ndim == 1:
        y = y[:, None] if estimator.m == 1 else y[None, :]
    if y.shape[1] != estimator.m:
        raise DimensionMismatchError(f"Estimator expects {estimator.m} observations, got {y.shape[1]}")
    if isinstance(estimator, SupAffineEstimator):
        return (estimator.offsets[None, :] + y @ estimator.gains.T).max(axis=1)
    affine = estimator.offsets[None, :, :] + np.einsum("nk,abk->nab", y, estimator.gains)
    return affine.min(axis=2).max(axis=1)


def eval_estimator(estimator: Estimator, y: Sequence[float]) -> float:
    """
    Evaluate the estimator at one observation vector.

    Sup-affine: max_i (c0_i + <c_i, y>). Sup-inf-affine: max_a min_b (c0_ab + <c_ab, y>).

    Raises:
        ValueError: If len(y) differs from the estimator's m
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != estimator.m:
        raise DimensionMismatchError(f"Estimator expects {estimator.m} observations, got {y.shape[0]}")
    return float(eval_estimator_many(estimator, y[None, :])[0])


# Target constructors

def sup_target(pieces: Pieces) -> TargetFunctional:
    """Sup-linear target max_i <w_i, .> from its pieces."""
    return TargetFunctional(kind=TargetKind.SUP, pieces=stack_pieces(pieces))


def _check_cap(n_sup: int, n_inf: int, cap: int) -> None:
    if n_sup * n_inf > cap:
        raise CombinatorialCapError(
            f"Sup-inf families need |A|*|B| = {n_sup}*{n_inf} = {n_sup * n_inf} pieces, "
            f"above the cap of {cap}"
        )


def lth_largest_target(pieces: Pieces, l: int, cap: int = DEFAULT_COMBINATORIAL_CAP) -> TargetFunctional:
    """
    Target returning the l-th largest value among the pieces.

    The sup families are all l-subsets and the inf families all
    (d + 1 - l)-subsets of the piece indices, in lexicographic order.

    Args:
        pieces: The linear pieces w_1, ..., w_d
        l: Rank, 1 <= l <= d (l = 1 is the maximum, l = d the minimum)
        cap: Upper bound on |A| * |B|

    Returns:
        SupInf TargetFunctional

    Raises:
        ValueError: If l is out of range
        CombinatorialCapError: If |A| * |B| exceeds the cap
    """
    matrix = stack_pieces(pieces)
    d = matrix.shape[0]
    if not 1 <= l <= d:
        raise ValueError(f"l must satisfy 1 <= l <= {d}, got {l}")
    _check_cap(math.comb(d, l), math.comb(d, l - 1), cap)
    sup_families = tuple(combinations(range(d), l))
    inf_families = tuple(combinations(range(d), d + 1 - l))
    logger.debug("lth_largest_target d=%d l=%d |A|=%d |B|=%d", d, l, len(sup_families), len(inf_families))
    return TargetFunctional(
        kind=TargetKind.SUP_INF,
        pieces=matrix,
        sup_families=sup_families,
        inf_families=inf_families,
    )


def inf_linear_target(pieces: Pieces, cap: int = DEFAULT_COMBINATORIAL_CAP) -> TargetFunctional:
    """Target min_i <w_i, .>, the l = d case of lth_largest_target."""
    matrix = stack_pieces(pieces)
    return lth_largest_target(matrix, matrix.shape[0], cap)


def difference_of_sups_target(mu: Pieces, nu: Pieces, cap: int = DEFAULT_COMBINATORIAL_CAP) -> TargetFunctional:
    """
    Target max_i mu_i - max_j nu_j written as max_i min_j (mu_i - nu_j).

    Piece (i, j) sits at index i * len(nu) + j. Sup family i collects the
    pieces of row i; inf family j collects the pieces of column j.

    Raises:
        ValueError: If either list is empty or the dimensions differ
    """
    mu_matrix = stack_pieces(mu, "mu")
    nu_matrix = stack_pieces(nu, "nu")
    if mu_matrix.shape[1] != nu_matrix.shape[1]:
        raise DimensionMismatchError(
            f"mu has dimension {mu_matrix.shape[1]} but nu has dimension {nu_matrix.shape[1]}"
        )
    n_mu, n_nu = mu_matrix.shape[0], nu_matrix.shape[0]
    _check_cap(n_mu, n_nu, cap)
    pieces = (mu_matrix[:, None, :] - nu_matrix[None, :, :]).reshape(n_mu * n_nu, -1)
    sup_families = tuple(tuple(i * n_nu + j for j in range(n_nu)) for i in range(n_mu))
    inf_families = tuple(tuple(i * n_nu + j for i in range(n_mu)) for j in range(n_nu))
    return TargetFunctional(
        kind=TargetKind.SUP_INF,
        pieces=pieces,
        sup_families=sup_families,
        inf_families=inf_families,
    )


def negate_target(target: TargetFunctional) -> TargetFunctional:
    """
    The target -gamma.

    For a SupInf target the roles of the families swap:
    -max_a min_{I_a} = min_a max_{I_a}(-.) = max_b min_{J_b}(-.).
    """
    if target.kind == TargetKind.SUP:
        # -max_i w_i = min_i (-w_i), expressed as the l = d sup-inf target
        return inf_linear_target(-target.pieces)
    return TargetFunctional(
        kind=TargetKind.SUP_INF,
        pieces=-target.pieces,
        sup_families=target.inf_families,
        inf_families=target.sup_families,
    )


def constant_estimator(value: float, m: int) -> SupAffineEstimator:
    """Single-piece estimator returning value for every observation vector."""
    return SupAffineEstimator(offsets=np.array([float(value)]), gains=np.zeros((1, m)))
