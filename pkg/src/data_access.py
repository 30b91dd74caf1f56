"""
Data access layer for the optimal recovery toolkit.

This module provides the DataAccessService class that reads problem and
estimator files, writes estimator files and verification reports, and binds
estimators to problems through a hash of the canonical problem JSON.

All files are canonical JSON: sorted keys, no insignificant whitespace,
floats in shortest round-trip form, UTF-8, one trailing LF.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple, Union

import numpy as np

from src import __version__
from src.errors import HashMismatchError, ProblemFormatError
from src.functionals import difference_of_sups_target, lth_largest_target, sup_target
from src.kernels import gram_matrix, kernel_from_spec
from src.models import (
    ApproxSet,
    ConsistencyReport,
    Estimator,
    NoiseModel,
    ObservationMap,
    Polytope,
    Problem,
    SupAffineEstimator,
    SupInfAffineEstimator,
    TargetFunctional,
    TargetKind,
)
from src.settings import Settings


logger = logging.getLogger(__name__)


# Canonical JSON

def _plain(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, Mapping):
        return {str(key): _plain(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(value) for value in obj]
    return obj


def canonical_json(obj: Any) -> bytes:
    """
    Canonical JSON bytes of a document.

    Non-finite floats are written as null; other floats use the shortest
    text that reads back to the same double.
    """
    text = json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")


def problem_hash(document: Mapping[str, Any]) -> str:
    """Hex SHA-256 of the canonical JSON of a problem document."""
    return hashlib.sha256(canonical_json(document)).hexdigest()


# Problem documents

@dataclass(frozen=True, eq=False)
class LoadedProblem:
    """
    A parsed problem file.

    Attributes:
        problem: The problem instance
        document: The raw JSON document
        problem_hash: Hash binding estimator files to this problem
        path: File the problem was read from
    """
    problem: Problem
    document: Dict[str, Any]
    problem_hash: str
    path: Optional[Path] = None


def _single_key(value: Any, field: str) -> Tuple[str, Any]:
    if not isinstance(value, Mapping) or len(value) != 1:
        raise ProblemFormatError(f"{field} must be an object with exactly one key")
    (key, content), = value.items()
    return key, content


def _matrix(value: Any, dim: int, field: str, allow_indices: bool) -> np.ndarray:
    """Rows given as coordinate vectors or, in RKHS mode, as point indices."""
    if not isinstance(value, list):
        raise ProblemFormatError(f"{field} must be a list")
    if not value:
        return np.zeros((0, dim))
    if all(isinstance(entry, int) and not isinstance(entry, bool) for entry in value):
        if not allow_indices:
            raise ProblemFormatError(f"{field} uses point indices, which need an rkhs space")
        if min(value) < 0 or max(value) >= dim:
            raise ProblemFormatError(f"{field} point index out of range 0..{dim - 1}")
        return np.eye(dim)[value]
    try:
        matrix = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFormatError(f"{field} must be a matrix of numbers")
    if matrix.ndim != 2 or matrix.shape[1] != dim:
        raise ProblemFormatError(f"{field} rows must have length {dim}")
    return matrix


def _vector(value: Any, dim: int, field: str) -> np.ndarray:
    try:
        vector = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ProblemFormatError(f"{field} must be a vector of numbers")
    if vector.shape != (dim,):
        raise ProblemFormatError(f"{field} must have length {dim}")
    return vector


def parse_problem(document: Mapping[str, Any], settings: Optional[Settings] = None,
                  name: str = "") -> Problem:
    """
    Build a Problem from a problem document.

    Args:
        document: Parsed JSON with space, model, observations, target and optional noise
        settings: Supplies the combinatorial cap for sup-inf targets
        name: Fallback name when the document has none

    Returns:
        The validated Problem

    Raises:
        ProblemFormatError: On any schema or validation error
    """
    settings = settings or Settings()
    try:
        return _parse_problem(document, settings, name)
    except ProblemFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        raise ProblemFormatError(f"Invalid problem: {detail}")


def _parse_problem(document: Mapping[str, Any], settings: Settings, name: str) -> Problem:
    space_kind, space = _single_key(document["space"], "space")
    if space_kind == "rn":
        dim = int(space["dim"])
        if dim < 1:
            raise ProblemFormatError("space.rn.dim must be positive")
        gram = np.eye(dim)
        rkhs = False
    elif space_kind == "rkhs":
        kernel = kernel_from_spec(space["kernel"])
        points = np.array(space["points"], dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ProblemFormatError("space.rkhs.points must be a nonempty list of coordinate vectors")
        gram = gram_matrix(kernel, points)
        dim = points.shape[0]
        rkhs = True
    else:
        raise ProblemFormatError(f"Unknown space kind: {space_kind}")

    model_kind, content = _single_key(document["model"], "model")
    if model_kind == "polytope":
        if rkhs:
            raise ProblemFormatError("Polytope models need an rn space")
        model = Polytope(constraints=_matrix(content["a"], dim, "model.polytope.a", False))
    elif model_kind == "approx":
        if "gram" in content:
            if rkhs:
                raise ProblemFormatError("rkhs spaces derive the Gram matrix from the kernel")
            gram = np.array(content["gram"], dtype=float)
        g = _vector(content.get("g", [0.0] * dim), dim, "model.approx.g")
        model = ApproxSet(
            v_basis=_matrix(content.get("v_basis", []), dim, "model.approx.v_basis", rkhs),
            g=g,
            eps=float(content["eps"]),
            gram=gram,
        )
    else:
        raise ProblemFormatError(f"Unknown model kind: {model_kind}")

    observations = ObservationMap(rows=_matrix(document.get("observations", []), dim, "observations", rkhs))
    target = _parse_target(document["target"], dim, rkhs, settings)

    noise = None
    if document.get("noise") is not None:
        raw = document["noise"]
        noise = NoiseModel(p=str(raw["p"]).lower(), radius=float(raw["radius"]))

    return Problem(
        model=model,
        observations=observations,
        target=target,
        noise=noise,
        name=str(document.get("name", name)),
    )


def _parse_target(value: Any, dim: int, rkhs: bool, settings: Settings) -> TargetFunctional:
    kind, content = _single_key(value, "target")
    cap = settings.combinatorial_cap
    if kind == "sup":
        return sup_target(_matrix(content["w"], dim, "target.sup.w", rkhs))
    if kind == "lth_largest":
        l = content["l"]
        if not isinstance(l, int) or isinstance(l, bool):
            raise ProblemFormatError("target.lth_largest.l must be an integer")
        pieces = _matrix(content["w"], dim, "target.lth_largest.w", rkhs)
        if not 1 <= l <= pieces.shape[0]:
            raise ProblemFormatError(f"target.lth_largest.l must satisfy 1 <= l <= {pieces.shape[0]}, got {l}")
        return lth_largest_target(pieces, l, cap)
    if kind == "diff_of_sups":
        return difference_of_sups_target(
            _matrix(content["mu"], dim, "target.diff_of_sups.mu", rkhs),
            _matrix(content["nu"], dim, "target.diff_of_sups.nu", rkhs),
            cap,
        )
    if kind == "sup_inf":
        return TargetFunctional(
            kind=TargetKind.SUP_INF,
            pieces=_matrix(content["w"], dim, "target.sup_inf.w", rkhs),
            sup_families=[list(family) for family in content["sup_families"]],
            inf_families=[list(family) for family in content["inf_families"]],
        )
    raise ProblemFormatError(f"Unknown target kind: {kind}")


# Estimator documents

def estimator_to_dict(estimator: Estimator, metadata: Mapping[str, Any]) -> Dict[str, Any]:
    """Estimator file document."""
    document: Dict[str, Any] = {
        "kind": estimator.kind.value,
        "offsets": estimator.offsets,
        "gains": estimator.gains,
        "metadata": dict(metadata),
    }
    if isinstance(estimator, SupInfAffineEstimator):
        document["sup_families"] = [list(family) for family in estimator.sup_families]
        document["inf_families"] = [list(family) for family in estimator.inf_families]
    return _plain(document)


def estimator_from_dict(document: Mapping[str, Any]) -> Tuple[Estimator, Dict[str, Any]]:
    """
    Parse an estimator file document.

    Returns:
        (estimator, metadata)

    Raises:
        ProblemFormatError: On a malformed document
    """
    try:
        kind = document["kind"]
        metadata = dict(document.get("metadata", {}))
        if kind == "sup_affine":
            offsets = np.array(document["offsets"], dtype=float)
            gains = np.array(document["gains"], dtype=float)
            return SupAffineEstimator(offsets=offsets, gains=gains), metadata
        if kind == "sup_inf_affine":
            offsets = np.array(document["offsets"], dtype=float)
            gains = np.array(document["gains"], dtype=float)
            return SupInfAffineEstimator(
                offsets=offsets,
                gains=gains,
                sup_families=document["sup_families"],
                inf_families=document["inf_families"],
            ), metadata
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"Invalid estimator file: {exc}")
    raise ProblemFormatError(f"Unknown estimator kind: {kind}")


def report_to_dict(report: ConsistencyReport, hash_value: str) -> Dict[str, Any]:
    """Verification report document (contains no timings, so it is reproducible)."""
    return _plain({
        "problem": report.problem_name,
        "problem_hash": hash_value,
        "seed": report.seed,
        "samples": report.n_samples,
        "tol": report.tol,
        "e_hat": report.e_hat,
        "values": report.values,
        "passed": report.passed,
        "failed_checks": report.failed_checks,
        "checks": [
            {
                "name": check.name,
                "passed": check.passed,
                "value": check.value,
                "bound": check.bound,
                "tolerance": check.tolerance,
                "informational": check.informational,
                "detail": check.detail,
            }
            for check in report.checks
        ],
    })


class DataAccessService:
    """
    Reads and writes the toolkit's files.

    Loaded problems are cached by resolved path.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """Initialize the data access service with an empty cache."""
        self.settings = settings or Settings()
        self._cache: Dict[Path, LoadedProblem] = {}

    def _read_json(self, path: Union[str, Path]) -> Any:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"File not found: {path}")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"{path} is not valid JSON: {exc}")

    def load_problem(self, path: Union[str, Path]) -> LoadedProblem:
        """
        Load and validate a problem file.

        Args:
            path: Problem JSON file

        Returns:
            LoadedProblem with the problem and its hash

        Raises:
            FileNotFoundError: If the file doesn't exist
            ProblemFormatError: If the file is not a valid problem
        """
        resolved = Path(path).resolve()
        if resolved in self._cache:
            return self._cache[resolved]
        document = self._read_json(resolved)
        if not isinstance(document, dict):
            raise ProblemFormatError("Problem file must contain a JSON object")
        problem = parse_problem(document, self.settings, name=resolved.stem)
        loaded = LoadedProblem(problem=problem, document=document,
                               problem_hash=problem_hash(document), path=resolved)
        logger.debug("Loaded problem %s (hash %s)", problem.name, loaded.problem_hash[:12])
        self._cache[resolved] = loaded
        return loaded

    def get_cached_problem(self, path: Union[str, Path]) -> Optional[LoadedProblem]:
        """Cached problem for a path, if it was loaded before."""
        return self._cache.get(Path(path).resolve())

    def save_estimator(self, path: Union[str, Path], estimator: Estimator, e_hat: float,
                       hash_value: str, seed: int = 0) -> Dict[str, Any]:
        """
        Write an estimator file.

        Returns:
            The written document
        """
        metadata = {
            "e_hat": float(e_hat),
            "solver_tol": self.settings.tol,
            "problem_hash": hash_value,
            "tool_version": __version__,
            "seed": int(seed),
        }
        document = estimator_to_dict(estimator, metadata)
        Path(path).write_bytes(canonical_json(document))
        return document

    def load_estimator(self, path: Union[str, Path], expected_hash: Optional[str] = None,
                       force: bool = False) -> Tuple[Estimator, Dict[str, Any]]:
        """
        Read an estimator file, checking that it was built for the expected problem.

        Raises:
            HashMismatchError: If the hashes differ and force is False
        """
        document = self._read_json(path)
        if not isinstance(document, dict):
            raise ProblemFormatError("Estimator file must contain a JSON object")
        estimator, metadata = estimator_from_dict(document)
        stored = metadata.get("problem_hash")
        if expected_hash is not None and stored != expected_hash:
            if not force:
                raise HashMismatchError(
                    f"Estimator was built for problem {str(stored)[:12]}, not {expected_hash[:12]} (use --force)"
                )
            logger.warning("Problem hash mismatch ignored (--force)")
        return estimator, metadata

    def save_report(self, path: Union[str, Path], report: ConsistencyReport, hash_value: str) -> bytes:
        """Write a verification report and return its bytes."""
        content = canonical_json(report_to_dict(report, hash_value))
        Path(path).write_bytes(content)
        return content
