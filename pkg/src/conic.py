"""
Conic program assembly and solving.

Programs are stated as

    minimize <c, x>  subject to  b - A x in K_1 x ... x K_r

where every K_j is a zero cone, a nonnegative orthant or a second-order
cone. ProgramBuilder assembles them from named variable blocks and affine
expressions in a canonical row order (zero, then nonnegative, then
second-order segments); ConicSolver solves them through cvxpy and reports
certified residuals. dump_program / parse_program implement the line-based
`conic v1` debug format.
"""

import logging
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import InfeasibleProgramError, NumericalTroubleError, ProblemFormatError
from src.models import ConeKind, ConicProgram, Solution, SolveStatus
from src.settings import Settings


logger = logging.getLogger(__name__)

DUMP_HEADER = "conic v1"


# Expressions

@dataclass(frozen=True)
class VariableBlock:
    """
    A contiguous range of program variables.

    Attributes:
        name: Unique block name (reported in variable name maps)
        start: Index of the first variable
        size: Number of variables
    """
    name: str
    start: int
    size: int

    @property
    def expr(self) -> "AffineExpr":
        """The block as an expression with one row per variable."""
        return AffineExpr({self: np.eye(self.size)}, np.zeros(self.size))

    def __getitem__(self, index) -> "AffineExpr":
        return self.expr[index]


Operand = Union["AffineExpr", VariableBlock, float, int, np.ndarray, Sequence[float]]


class AffineExpr:
    """
    A vector of affine functions of the program variables.

    Each term maps a variable block to the dense matrix multiplying it; the
    expression value is sum_blocks M_block x_block + constant.
    """

    # numpy operands defer to the reflected operators below
    __array_ufunc__ = None

    def __init__(self, terms: Dict[VariableBlock, np.ndarray], constant: np.ndarray):
        self.constant = np.asarray(constant, dtype=float).reshape(-1)
        self.terms: Dict[VariableBlock, np.ndarray] = {}
        for block, matrix in terms.items():
            matrix = np.asarray(matrix, dtype=float).reshape(self.constant.shape[0], block.size)
            self.terms[block] = matrix

    @property
    def rows(self) -> int:
        return self.constant.shape[0]

    @classmethod
    def constant_expr(cls, values: Union[float, Sequence[float], np.ndarray]) -> "AffineExpr":
        return cls({}, np.atleast_1d(np.asarray(values, dtype=float)))

    @classmethod
    def zeros(cls, rows: int) -> "AffineExpr":
        return cls({}, np.zeros(rows))

    def _coerce(self, other: Operand) -> "AffineExpr":
        if isinstance(other, AffineExpr):
            expr = other
        elif isinstance(other, VariableBlock):
            expr = other.expr
        else:
            values = np.asarray(other, dtype=float)
            expr = AffineExpr.constant_expr(np.broadcast_to(values, (self.rows,)) if values.ndim == 0 else values)
        if expr.rows != self.rows:
            raise ValueError(f"Cannot combine expressions with {self.rows} and {expr.rows} rows")
        return expr

    def __add__(self, other: Operand) -> "AffineExpr":
        other = self._coerce(other)
        terms = {block: matrix.copy() for block, matrix in self.terms.items()}
        for block, matrix in other.terms.items():
            terms[block] = terms[block] + matrix if block in terms else matrix.copy()
        return AffineExpr(terms, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "AffineExpr":
        return AffineExpr({block: -matrix for block, matrix in self.terms.items()}, -self.constant)

    def __sub__(self, other: Operand) -> "AffineExpr":
        return self + (-self._coerce(other))

    def __rsub__(self, other: Operand) -> "AffineExpr":
        return self._coerce(other) - self

    def __mul__(self, scalar: float) -> "AffineExpr":
        scalar = float(scalar)
        return AffineExpr({block: scalar * matrix for block, matrix in self.terms.items()},
                          scalar * self.constant)

    __rmul__ = __mul__

    def transform(self, matrix: np.ndarray) -> "AffineExpr":
        """The expression M @ self."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        if matrix.shape[1] != self.rows:
            raise ValueError(f"Cannot apply a {matrix.shape} matrix to an expression with {self.rows} rows")
        return AffineExpr({block: matrix @ term for block, term in self.terms.items()}, matrix @ self.constant)

    def sum(self) -> "AffineExpr":
        return self.transform(np.ones((1, self.rows)))

    def __getitem__(self, index) -> "AffineExpr":
        selector = np.arange(self.rows)[index]
        selector = np.atleast_1d(selector)
        return AffineExpr({block: term[selector] for block, term in self.terms.items()}, self.constant[selector])

    @staticmethod
    def stack(exprs: Iterable[Operand]) -> "AffineExpr":
        """Concatenate expressions vertically."""
        parts = [e.expr if isinstance(e, VariableBlock) else e for e in exprs]
        parts = [p if isinstance(p, AffineExpr) else AffineExpr.constant_expr(p) for p in parts]
        if not parts:
            return AffineExpr.zeros(0)
        blocks: List[VariableBlock] = []
        for part in parts:
            blocks.extend(block for block in part.terms if block not in blocks)
        terms = {
            block: np.vstack([part.terms.get(block, np.zeros((part.rows, block.size))) for part in parts])
            for block in blocks
        }
        return AffineExpr(terms, np.concatenate([part.constant for part in parts]))

    def value(self, primal: np.ndarray) -> np.ndarray:
        """Evaluate the expression at a primal point."""
        result = self.constant.copy()
        for block, term in self.terms.items():
            result = result + term @ primal[block.start:block.start + block.size]
        return result


# Builder

class ProgramBuilder:
    """
    Incrementally assembles a ConicProgram.

    Constraints are collected per cone kind and emitted in the canonical
    order zero, nonnegative, second-order. Zero and nonnegative constraints
    are merged into one segment each; every second-order constraint keeps
    its own segment.
    """

    def __init__(self):
        """Initialize an empty program."""
        self._blocks: List[VariableBlock] = []
        self._n_var = 0
        self._zero: List[AffineExpr] = []
        self._nonneg: List[AffineExpr] = []
        self._soc: List[AffineExpr] = []
        self._objective: Optional[AffineExpr] = None

    @property
    def n_var(self) -> int:
        return self._n_var

    def add_variable(self, name: str, size: int) -> VariableBlock:
        """
        Allocate a new block of free variables.

        Raises:
            ValueError: If the name is already taken or the size is negative
        """
        if size < 0:
            raise ValueError(f"Variable block {name} cannot have negative size")
        if any(block.name == name for block in self._blocks):
            raise ValueError(f"Variable block {name} already exists")
        block = VariableBlock(name=name, start=self._n_var, size=int(size))
        self._blocks.append(block)
        self._n_var += block.size
        return block

    def add_zero(self, expr: Operand) -> None:
        """Constrain every row of expr to equal zero."""
        expr = _as_expr(expr)
        if expr.rows:
            self._zero.append(expr)

    def add_nonneg(self, expr: Operand) -> None:
        """Constrain every row of expr to be nonnegative."""
        expr = _as_expr(expr)
        if expr.rows:
            self._nonneg.append(expr)

    def add_soc(self, bound: Operand, vector: Operand) -> None:
        """Constrain ||vector||_2 <= bound, where bound has exactly one row."""
        bound = _as_expr(bound)
        vector = _as_expr(vector)
        if bound.rows != 1:
            raise ValueError("Second-order cone bound must be a single row")
        self._soc.append(AffineExpr.stack([bound, vector]))

    def add_simplex(self, block: VariableBlock) -> None:
        """Constrain the block to the standard simplex."""
        simplex_constraint(self, block)

    def minimize(self, expr: Operand) -> None:
        """Set the objective; any constant term is dropped."""
        expr = _as_expr(expr)
        if expr.rows != 1:
            raise ValueError("Objective must be a single row")
        self._objective = expr

    def build(self) -> ConicProgram:
        """
        Emit the program in canonical form.

        Each constraint expression M x + k in a cone contributes rows with
        A = -M and b = k, so that b - A x equals the expression.
        """
        objective = np.zeros(self._n_var)
        if self._objective is not None:
            for block, term in self._objective.terms.items():
                objective[block.start:block.start + block.size] += term[0]

        segments: List[Tuple[ConeKind, AffineExpr]] = []
        if self._zero:
            segments.append((ConeKind.ZERO, AffineExpr.stack(self._zero)))
        if self._nonneg:
            segments.append((ConeKind.NONNEG, AffineExpr.stack(self._nonneg)))
        segments.extend((ConeKind.SECOND_ORDER, expr) for expr in self._soc)

        rows, cols, vals, offsets = [], [], [], []
        row_offset = 0
        for _, expr in segments:
            for block, term in expr.terms.items():
                r, c = np.nonzero(term)
                rows.append(r + row_offset)
                cols.append(c + block.start)
                vals.append(-term[r, c])
            offsets.append(expr.constant)
            row_offset += expr.rows

        a_rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
        a_cols = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
        a_vals = np.concatenate(vals) if vals else np.zeros(0)
        order = np.lexsort((a_cols, a_rows))
        program = ConicProgram(
            objective=objective,
            a_rows=a_rows[order],
            a_cols=a_cols[order],
            a_vals=a_vals[order],
            b=np.concatenate(offsets) if offsets else np.zeros(0),
            cones=tuple((kind, expr.rows) for kind, expr in segments),
            n_var=self._n_var,
            variable_names=tuple((block.name, block.start, block.size) for block in self._blocks),
        )
        logger.debug("Built conic program: %d variables, %d rows, %d nonzeros, %d cone segments",
                     program.n_var, program.n_rows, program.a_vals.shape[0], len(program.cones))
        return program


def _as_expr(value: Operand) -> AffineExpr:
    if isinstance(value, AffineExpr):
        return value
    if isinstance(value, VariableBlock):
        return value.expr
    return AffineExpr.constant_expr(value)


def simplex_constraint(builder: ProgramBuilder, block: VariableBlock) -> None:
    """
    Add the standard simplex constraints for a variable block.

    Emits one zero row (sum of the block minus 1) and one nonnegative row per
    variable of the block.

    Raises:
        ValueError: If the block is empty
    """
    if block.size == 0:
        raise ValueError(f"Simplex block {block.name} cannot be empty")
    builder.add_zero(block.expr.sum() - 1.0)
    builder.add_nonneg(block.expr)


# Solver

def _cone_violation(kind: ConeKind, slack: np.ndarray) -> float:
    if slack.size == 0:
        return 0.0
    if kind == ConeKind.ZERO:
        return float(np.max(np.abs(slack)))
    if kind == ConeKind.NONNEG or slack.size == 1:
        return float(max(0.0, -np.min(slack)))
    return float(max(0.0, np.linalg.norm(slack[1:]) - slack[0]))


def constraint_matrix(program: ConicProgram):
    """The constraint matrix A as a scipy CSR matrix."""
    from scipy.sparse import coo_matrix

    return coo_matrix(
        (program.a_vals, (program.a_rows, program.a_cols)),
        shape=(program.n_rows, program.n_var),
    ).tocsr()


def primal_residual(program: ConicProgram, primal: np.ndarray) -> float:
    """Largest cone violation of b - A x, relative to 1 + ||b||_inf."""
    slack = program.b - constraint_matrix(program) @ primal
    start, worst = 0, 0.0
    for kind, dim in program.cones:
        worst = max(worst, _cone_violation(kind, slack[start:start + dim]))
        start += dim
    scale = 1.0 + (float(np.max(np.abs(program.b))) if program.n_rows else 0.0)
    return worst / scale


class ConicSolver:
    """
    Solves ConicPrograms through cvxpy.

    The configured backend receives the tolerance for feasibility and gap.
    Solver statuses map onto SolveStatus; an optimal status whose primal
    point violates the cones by more than residual_factor * tol (relative)
    is reported as numerical trouble.
    """

    def __init__(self, settings: Optional[Settings] = None):
        """
        Initialize the solver.

        Args:
            settings: Numerical configuration. Defaults to Settings().
        """
        self.settings = settings or Settings()

    def _solver_options(self) -> Dict[str, float]:
        tol = self.settings.tol
        solver = self.settings.solver.upper()
        if solver == "CLARABEL":
            return {"tol_gap_abs": tol, "tol_gap_rel": tol, "tol_feas": tol}
        if solver == "ECOS":
            return {"abstol": tol, "reltol": tol, "feastol": tol}
        if solver == "SCS":
            return {"eps_abs": tol, "eps_rel": tol}
        return {}

    def solve(self, program: ConicProgram) -> Solution:
        """
        Solve a conic program.

        Args:
            program: Program in canonical form

        Returns:
            Solution with status, objective, primal point and residuals
        """
        import cvxpy as cp

        x = cp.Variable(program.n_var)
        constraints = []
        equality = None
        if program.n_rows:
            slack = cp.Variable(program.n_rows)
            equality = constraint_matrix(program) @ x + slack == program.b
            constraints.append(equality)
            start = 0
            for kind, dim in program.cones:
                segment = slack[start:start + dim]
                if kind == ConeKind.ZERO:
                    constraints.append(segment == 0)
                elif kind == ConeKind.NONNEG or dim == 1:
                    constraints.append(segment >= 0)
                else:
                    constraints.append(cp.SOC(segment[0], segment[1:]))
                start += dim
        problem = cp.Problem(cp.Minimize(program.objective @ x), constraints)

        started = time.perf_counter()
        try:
            problem.solve(solver=self.settings.solver.upper(), verbose=False, **self._solver_options())
            raw_status = problem.status
        except cp.error.SolverError as exc:
            logger.warning("Solver %s failed: %s", self.settings.solver, exc)
            raw_status = "solver_error"
        elapsed = time.perf_counter() - started

        if raw_status == cp.OPTIMAL and x.value is not None:
            return self._optimal_solution(program, np.asarray(x.value, dtype=float), equality, elapsed)
        if raw_status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            status, objective = SolveStatus.INFEASIBLE, float("inf")
        elif raw_status in (cp.UNBOUNDED, cp.UNBOUNDED_INACCURATE):
            status, objective = SolveStatus.UNBOUNDED, float("-inf")
        else:
            status, objective = SolveStatus.NUMERICAL_TROUBLE, float("nan")
        logger.info("Conic solve status=%s (%s) time=%.3fs", status.value, raw_status, elapsed)
        return Solution(status=status, objective=objective, primal=np.zeros(0), solve_time=elapsed)

    def _optimal_solution(self, program: ConicProgram, primal: np.ndarray, equality, elapsed: float) -> Solution:
        objective = float(program.objective @ primal)
        residual = primal_residual(program, primal)
        dual_residual, gap = 0.0, 0.0
        if equality is not None and equality.dual_value is not None:
            multiplier = np.asarray(equality.dual_value, dtype=float).reshape(-1)
            at = constraint_matrix(program).T
            # orient the multiplier so that c = A^T nu
            if np.linalg.norm(program.objective + at @ multiplier) < np.linalg.norm(program.objective - at @ multiplier):
                multiplier = -multiplier
            scale = 1.0 + float(np.max(np.abs(program.objective))) if program.n_var else 1.0
            dual_residual = float(np.max(np.abs(program.objective - at @ multiplier), initial=0.0)) / scale
            gap = abs(objective - float(program.b @ multiplier)) / (1.0 + abs(objective))

        status = SolveStatus.OPTIMAL
        limit = self.settings.residual_factor * self.settings.tol
        if residual > limit:
            logger.warning("Optimal status with primal residual %.3g above %.3g, reporting numerical trouble",
                           residual, limit)
            status = SolveStatus.NUMERICAL_TROUBLE
        logger.info("Conic solve status=%s objective=%.12g time=%.3fs", status.value, objective, elapsed)
        return Solution(
            status=status,
            objective=objective,
            primal=primal,
            primal_residual=residual,
            dual_residual=dual_residual,
            gap=gap,
            solve_time=elapsed,
        )


def solve(program: ConicProgram, tol: Optional[float] = None, settings: Optional[Settings] = None) -> Solution:
    """Solve a program with the given settings (tol overrides settings.tol)."""
    settings = (settings or Settings()).with_overrides(tol=tol)
    return ConicSolver(settings).solve(program)


def raise_for_status(solution: Solution, program: ConicProgram, context: str,
                     branch: Optional[str] = None) -> None:
    """
    Convert a non-optimal solution into the matching exception.

    Raises:
        InfeasibleProgramError: On an infeasible program
        NumericalTroubleError: On unbounded programs or numerical trouble
    """
    if solution.status == SolveStatus.OPTIMAL:
        return
    logger.debug("Program for %s:\n%s", context, dump_program(program))
    if solution.status == SolveStatus.INFEASIBLE:
        raise InfeasibleProgramError(f"{context}: program is infeasible", branch=branch)
    if solution.status == SolveStatus.UNBOUNDED:
        raise NumericalTroubleError(f"{context}: program is unbounded below", solution.residuals)
    raise NumericalTroubleError(f"{context}: solver could not certify a solution", solution.residuals)


# Debug text format

def _fmt(value: float) -> str:
    return f"{value:.17g}"


def dump_program(program: ConicProgram) -> str:
    """
    Serialize a program to the `conic v1` text format.

    Lines: header, `var n`, `obj i value` for nonzero objective entries,
    `row tag dim` per cone segment, `A i j value` triplets and `b i value`
    for nonzero offsets. Values use 17 significant digits.
    """
    lines = [DUMP_HEADER, f"var {program.n_var}"]
    for i in np.nonzero(program.objective)[0]:
        lines.append(f"obj {i} {_fmt(program.objective[i])}")
    for kind, dim in program.cones:
        lines.append(f"row {kind.value} {dim}")
    for i, j, v in zip(program.a_rows, program.a_cols, program.a_vals):
        lines.append(f"A {i} {j} {_fmt(v)}")
    for i in np.nonzero(program.b)[0]:
        lines.append(f"b {i} {_fmt(program.b[i])}")
    return "\n".join(lines) + "\n"


def parse_program(text: str) -> ConicProgram:
    """
    Parse the `conic v1` text format.

    Raises:
        ProblemFormatError: On an unknown header, tag or malformed line
    """
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != DUMP_HEADER:
        raise ProblemFormatError(f"Program dump must start with '{DUMP_HEADER}'")
    n_var = None
    objective: Dict[int, float] = {}
    cones: List[Tuple[ConeKind, int]] = []
    triplets: List[Tuple[int, int, float]] = []
    offsets: Dict[int, float] = {}
    for number, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            if parts[0] == "var" and len(parts) == 2:
                n_var = int(parts[1])
            elif parts[0] == "obj" and len(parts) == 3:
                objective[int(parts[1])] = float(parts[2])
            elif parts[0] == "row" and len(parts) == 3:
                cones.append((ConeKind(parts[1]), int(parts[2])))
            elif parts[0] == "A" and len(parts) == 4:
                triplets.append((int(parts[1]), int(parts[2]), float(parts[3])))
            elif parts[0] == "b" and len(parts) == 3:
                offsets[int(parts[1])] = float(parts[2])
            else:
                raise ValueError(line)
        except ValueError:
            raise ProblemFormatError(f"Malformed program dump line {number}: {line}")
    if n_var is None:
        raise ProblemFormatError("Program dump has no 'var' line")

    c = np.zeros(n_var)
    b = np.zeros(sum(dim for _, dim in cones))
    try:
        for i, value in objective.items():
            c[i] = value
        for i, value in offsets.items():
            b[i] = value
    except IndexError as exc:
        raise ProblemFormatError(f"Program dump index out of range: {exc}")
    return ConicProgram(
        objective=c,
        a_rows=np.array([t[0] for t in triplets], dtype=np.int64),
        a_cols=np.array([t[1] for t in triplets], dtype=np.int64),
        a_vals=np.array([t[2] for t in triplets], dtype=float),
        b=b,
        cones=tuple(cones),
        n_var=n_var,
    )
