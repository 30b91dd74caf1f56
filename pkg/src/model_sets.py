"""
Model sets: support functions, membership, sampling and noise.

Two families are supported. A Polytope {f : <a_l, f> <= 1} lives in R^N
with the plain dot product. An ApproxSet {f : ||P_{V^perp}(f - g)||_G <= eps}
lives in a Hilbert space described by a Gram matrix; functionals on it are
given by the coordinates of their Riesz representers, so every pairing of a
functional h with an element f is h^T G f.

Besides the closed-form support functions, this module contributes the
program fragments (support bounds and noise terms) that synthesis and
evaluation programs are assembled from.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_solve, cholesky, eigvalsh

from src.conic import AffineExpr, ConicSolver, ProgramBuilder, raise_for_status
from src.errors import DimensionMismatchError, PreconditionError, SamplingError
from src.models import ApproxSet, ModelSet, NoiseModel, Polytope, SolveStatus
from src.settings import Settings


logger = logging.getLogger(__name__)

CONTAINS_TOL = 1e-9
ORTHOGONALITY_TOL = 1e-9
PSD_TOL = 1e-10


# Hilbert metric helpers

def gram_factor(gram: np.ndarray) -> np.ndarray:
    """
    Upper-triangular R with R^T R = G.

    The Cholesky factorization is retried once with a diagonal jitter of
    1e-12 * trace(G) / dim when G is only semidefinite.

    Raises:
        PreconditionError: If G is not symmetric or not positive semidefinite
    """
    gram = np.asarray(gram, dtype=float)
    dim = gram.shape[0]
    scale = max(1.0, float(np.max(np.abs(gram)))) if gram.size else 1.0
    if np.max(np.abs(gram - gram.T), initial=0.0) > PSD_TOL * scale:
        raise PreconditionError("Gram matrix must be symmetric")
    if dim == 0:
        return np.zeros((0, 0))
    sym = 0.5 * (gram + gram.T)
    smallest = float(eigvalsh(sym)[0])
    if smallest < -PSD_TOL * max(1.0, float(np.trace(sym))):
        raise PreconditionError(f"Gram matrix must be positive semidefinite, smallest eigenvalue {smallest:.3g}")
    try:
        return cholesky(sym, lower=False)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.trace(sym)) / dim
        logger.debug("Gram factorization retried with jitter %.3g", jitter)
        try:
            return cholesky(sym + jitter * np.eye(dim), lower=False)
        except np.linalg.LinAlgError:
            raise PreconditionError("Gram matrix could not be factorized even after jitter")


def vperp_projector(v_basis: np.ndarray, gram: np.ndarray) -> np.ndarray:
    """
    Matrix of the G-orthogonal projector onto the complement of span(v_basis).

    Raises:
        PreconditionError: If the basis vectors are linearly dependent in the G-metric
    """
    dim = gram.shape[0]
    if v_basis.shape[0] == 0:
        return np.eye(dim)
    cross = v_basis @ gram @ v_basis.T
    eigenvalues = eigvalsh(0.5 * (cross + cross.T))
    if eigenvalues[0] <= 1e-12 * max(1.0, eigenvalues[-1]):
        raise PreconditionError("ApproxSet v_basis must be linearly independent in the G-metric")
    factor = cholesky(cross, lower=False)
    # coefficients of the projection onto V: (V G V^T)^{-1} V G
    coefficients = cho_solve((factor, False), v_basis @ gram)
    return np.eye(dim) - v_basis.T @ coefficients


def pairing_matrix(model: ModelSet) -> np.ndarray:
    """Matrix M with <h, f> = h^T M f for the model's ambient space."""
    return model.gram


def pairing(model: ModelSet, h: Sequence[float], f: Sequence[float]) -> float:
    """
    Apply the functional with coefficients h to the element f.

    Polytope: <h, f>. ApproxSet: <h, f>_G.
    """
    h = np.asarray(h, dtype=float)
    f = np.asarray(f, dtype=float)
    if h.shape != (model.dim,) or f.shape != (model.dim,):
        raise DimensionMismatchError(f"pairing expects vectors of length {model.dim}")
    if isinstance(model, Polytope):
        return float(h @ f)
    return float(h @ model.gram @ f)


def g_norm(model: ApproxSet, x: np.ndarray) -> np.ndarray:
    """G-norms of the rows of x (or of a single vector)."""
    x = np.asarray(x, dtype=float)
    return np.linalg.norm(x @ model.factor.T, axis=-1)


# Support functions

def support_polytope(model: Polytope, eta: Sequence[float], settings: Optional[Settings] = None) -> float:
    """
    Support function sup_{f in K} <eta, f> of a polytope.

    Computed by the dual linear program inf { sum s : s >= 0, sum s_l a_l = eta }.

    Returns:
        The support value, or +inf when the dual is infeasible

    Raises:
        NumericalTroubleError: If the solver cannot certify the result
    """
    eta = _coeffs(eta, model.dim)
    if model.L == 0:
        return 0.0 if not np.any(eta) else float("inf")
    builder = ProgramBuilder()
    s = builder.add_variable("s", model.L)
    builder.add_nonneg(s)
    builder.add_zero(s.expr.transform(model.constraints.T) - eta)
    builder.minimize(s.expr.sum())
    program = builder.build()
    solution = ConicSolver(settings).solve(program)
    if solution.status == SolveStatus.INFEASIBLE:
        return float("inf")
    raise_for_status(solution, program, "support_polytope")
    return solution.objective


def support_approx(model: ApproxSet, eta: Sequence[float]) -> float:
    """
    Support function of an approximability set at the functional with Riesz coordinates eta.

    Equals <eta, g>_G + eps ||eta||_G when eta is G-orthogonal to V (relative
    tolerance 1e-9), +inf otherwise.
    """
    eta = _coeffs(eta, model.dim)
    norm = float(g_norm(model, eta))
    if model.n:
        basis_norms = g_norm(model, model.v_basis)
        inner = np.abs(model.v_basis @ model.gram @ eta)
        if np.any(inner > ORTHOGONALITY_TOL * norm * basis_norms):
            return float("inf")
    return float(eta @ model.gram @ model.g) + model.eps * norm


def support(model: ModelSet, eta: Sequence[float], settings: Optional[Settings] = None) -> float:
    """Support function of either model family."""
    if isinstance(model, Polytope):
        return support_polytope(model, eta, settings)
    return support_approx(model, eta)


def bounding_box(model: Polytope) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-coordinate bounds of a polytope.

    Returns:
        (lower, upper) arrays; entries are -inf/+inf along unbounded directions
    """
    from scipy.optimize import linprog

    lower = np.full(model.dim, -np.inf)
    upper = np.full(model.dim, np.inf)
    ones = np.ones(model.L)
    for j in range(model.dim):
        for sign in (1.0, -1.0):
            objective = np.zeros(model.dim)
            objective[j] = -sign
            if model.L == 0:
                continue
            result = linprog(objective, A_ub=model.constraints, b_ub=ones,
                             bounds=[(None, None)] * model.dim, method="highs")
            if result.status == 0:
                value = -result.fun
                if sign > 0:
                    upper[j] = value
                else:
                    lower[j] = -value
            elif result.status != 3:
                raise SamplingError(f"Bounding box LP failed for coordinate {j}: {result.message}")
    return lower, upper


# Membership

def contains_many(model: ModelSet, points: np.ndarray) -> np.ndarray:
    """Membership of every row of points, with tolerance 1e-9."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != model.dim:
        raise DimensionMismatchError(f"Points have dimension {points.shape[1]}, model has {model.dim}")
    if isinstance(model, Polytope):
        if model.L == 0:
            return np.ones(points.shape[0], dtype=bool)
        return np.all(points @ model.constraints.T <= 1.0 + CONTAINS_TOL, axis=1)
    residual = (points - model.g) @ model.vperp.T
    return g_norm(model, residual) <= model.eps + CONTAINS_TOL


def contains(model: ModelSet, f: Sequence[float]) -> bool:
    """Whether f belongs to the model set (tolerance 1e-9)."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise DimensionMismatchError("contains expects a single element vector")
    return bool(contains_many(model, f[None, :])[0])


# Sampling

def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(chunk)])


def _sample_polytope_chunk(model: Polytope, rng: np.random.Generator, size: int,
                           lower: np.ndarray, upper: np.ndarray, max_attempts: int) -> np.ndarray:
    accepted = []
    n_accepted, attempts = 0, 0
    while n_accepted < size:
        if attempts >= max_attempts:
            raise SamplingError(
                f"Rejection sampling accepted {n_accepted} of {size} points after {attempts} attempts; "
                "the polytope is too thin for box rejection, use a hit-and-run sampler instead"
            )
        batch = min(max(2 * size, 1024), max_attempts - attempts)
        candidates = lower + (upper - lower) * rng.random((batch, model.dim))
        attempts += batch
        keep = candidates[contains_many(model, candidates)]
        accepted.append(keep)
        n_accepted += keep.shape[0]
    return np.vstack(accepted)[:size]


def _sample_approx_chunk(model: ApproxSet, rng: np.random.Generator, size: int,
                         box_bound: float, max_attempts: int) -> np.ndarray:
    directions = []
    n_found, attempts = 0, 0
    while n_found < size:
        if attempts >= max_attempts:
            raise SamplingError("V-perp has no directions of positive G-norm to sample from")
        raw = rng.standard_normal((size, model.dim)) @ model.vperp.T
        attempts += size
        norms = g_norm(model, raw)
        keep = norms > 1e-12 * max(1.0, float(np.max(norms, initial=0.0)))
        directions.append(raw[keep] / norms[keep, None])
        n_found += int(np.count_nonzero(keep))
    unit = np.vstack(directions)[:size]
    # uniform in the ball of V-perp, which has dimension dim - n
    radius = model.eps * rng.random(size) ** (1.0 / max(model.dim - model.n, 1))
    coefficients = rng.uniform(-box_bound, box_bound, (size, model.n))
    return model.g + coefficients @ model.v_basis + radius[:, None] * unit


def sample(model: ModelSet, rng_seed: int, count: int, settings: Optional[Settings] = None) -> np.ndarray:
    """
    Draw deterministic sample points from a model set.

    Points are produced in fixed-size chunks, chunk c drawing from a
    generator seeded with (rng_seed, c), so the first n points never depend
    on count.

    Args:
        model: Polytope (must be bounded) or ApproxSet
        rng_seed: Seed of the sample stream
        count: Number of points
        settings: Chunk size, rejection budget and V-part box bound

    Returns:
        Matrix with count rows, each contained in the model set

    Raises:
        SamplingError: If the polytope is unbounded or too thin for rejection sampling
    """
    settings = settings or Settings()
    if count <= 0:
        return np.zeros((0, model.dim))
    chunk_size = settings.sample_chunk_size
    n_chunks = -(-count // chunk_size)
    if isinstance(model, Polytope):
        lower, upper = bounding_box(model)
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise SamplingError("Polytope is unbounded; uniform box rejection sampling needs a bounded set")
    chunks = []
    for chunk in range(n_chunks):
        rng = _chunk_rng(rng_seed, chunk)
        if isinstance(model, Polytope):
            points = _sample_polytope_chunk(model, rng, chunk_size, lower, upper,
                                            settings.max_rejection_attempts)
        else:
            points = _sample_approx_chunk(model, rng, chunk_size, settings.sample_box_bound,
                                          settings.max_rejection_attempts)
        logger.debug("Sampled chunk %d of %d (%d points)", chunk + 1, n_chunks, points.shape[0])
        chunks.append(points)
    return np.vstack(chunks)[:count]


def sample_noise(noise: Optional[NoiseModel], m: int, rng_seed: int, count: int,
                 settings: Optional[Settings] = None) -> np.ndarray:
    """
    Deterministic sample points of the noise ball r * B_p^m.

    Follows the same chunked seeding as sample, on a separate stream.
    """
    settings = settings or Settings()
    if noise is None or noise.radius == 0 or m == 0 or count <= 0:
        return np.zeros((max(count, 0), m))
    chunk_size = settings.sample_chunk_size
    chunks = []
    for chunk in range(-(-count // chunk_size)):
        rng = np.random.default_rng([int(rng_seed), int(chunk), 1])
        if noise.p == "inf":
            points = rng.uniform(-1.0, 1.0, (chunk_size, m))
        else:
            if noise.p == "2":
                direction = rng.standard_normal((chunk_size, m))
                direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            else:
                direction = rng.exponential(size=(chunk_size, m)) * rng.choice([-1.0, 1.0], (chunk_size, m))
                direction /= np.abs(direction).sum(axis=1, keepdims=True)
            points = direction * rng.random(chunk_size)[:, None] ** (1.0 / m)
        chunks.append(noise.radius * points)
    return np.vstack(chunks)[:count]


# Noise

def augment_noise(c: Sequence[float], noise: Optional[NoiseModel]) -> float:
    """
    Additive support term r * ||c||_{p'} contributed by observation noise.

    Returns 0 without noise.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    if noise is None or c.size == 0:
        return 0.0
    return noise.radius * float(np.linalg.norm(c, ord=noise.conjugate_order))


# Program fragments

def noise_term(builder: ProgramBuilder, noise: Optional[NoiseModel], coeffs: AffineExpr, name: str) -> AffineExpr:
    """
    One-row expression bounding r * ||coeffs||_{p'} from above.

    Adds the auxiliary variables and cone rows the bound needs; returns the
    zero expression when there is no noise to model.
    """
    if noise is None or noise.radius == 0 or coeffs.rows == 0:
        return AffineExpr.zeros(1)
    scaled = noise.radius * coeffs
    if noise.p == "inf":
        u = builder.add_variable(f"{name}_abs", coeffs.rows)
        builder.add_nonneg(u.expr - scaled)
        builder.add_nonneg(u.expr + scaled)
        return u.expr.sum()
    bound = builder.add_variable(f"{name}_norm", 1)
    if noise.p == "2":
        builder.add_soc(bound.expr, scaled)
    else:
        ones = np.ones((coeffs.rows, 1))
        builder.add_nonneg(bound.expr.transform(ones) - scaled)
        builder.add_nonneg(bound.expr.transform(ones) + scaled)
    return bound.expr


def add_support_constraint(builder: ProgramBuilder, model: ModelSet, eta: AffineExpr,
                           bound: AffineExpr, name: str) -> None:
    """
    Add rows enforcing support_K(eta) <= bound.

    Polytope: eta = sum s_l a_l with s >= 0 and sum s <= bound.
    ApproxSet: eta G-orthogonal to V, and eps ||eta||_G <= bound - <eta, g>_G.
    """
    if eta.rows != model.dim:
        raise DimensionMismatchError(f"Support direction has {eta.rows} rows, model has dimension {model.dim}")
    if isinstance(model, Polytope):
        s = builder.add_variable(f"{name}_dual", model.L)
        builder.add_nonneg(s)
        builder.add_zero(s.expr.transform(model.constraints.T) - eta)
        builder.add_nonneg(bound - s.expr.sum())
        return
    if model.n:
        builder.add_zero(eta.transform(model.v_basis @ model.gram))
    centered = bound - eta.transform((model.gram @ model.g)[None, :])
    builder.add_soc(centered, model.eps * eta.transform(model.factor))


def _coeffs(eta: Sequence[float], dim: int) -> np.ndarray:
    eta = np.asarray(getattr(eta, "coeffs", eta), dtype=float)
    if eta.shape != (dim,):
        raise DimensionMismatchError(f"Functional has shape {eta.shape}, expected ({dim},)")
    return eta
