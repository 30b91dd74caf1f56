"""
Unit tests for estimator synthesis and fixed-estimator evaluation.

Expected values come from instances small enough to solve by hand:
the box [-1, 1]^2 observed through f1 with target max(f1, f2) has optimal
error 1, and so on for each fixture below.
"""

import numpy as np
import pytest

from src.errors import (
    CombinatorialCapError,
    DimensionMismatchError,
    InfeasibleProgramError,
    PreconditionError,
)
from src.functionals import constant_estimator, difference_of_sups_target, lth_largest_target, sup_target
from src.models import (
    ApproxSet,
    NoiseModel,
    ObservationMap,
    Polytope,
    Problem,
    SupAffineEstimator,
    SupInfAffineEstimator,
)
from src.settings import Settings
from src.synthesis import EstimatorSynthesizer, eval_error_fixed, noise_sweep, sup_branches, supinf_branches, synthesize


BOX_2D = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
BOX_3D = np.vstack([np.eye(3), -np.eye(3)])


@pytest.fixture
def synthesizer():
    """Synthesizer with default settings."""
    return EstimatorSynthesizer(Settings())


@pytest.fixture
def e1_problem():
    """Box [-1, 1]^2, observe f1, estimate max(f1, f2)."""
    return Problem(
        model=Polytope(constraints=BOX_2D),
        observations=ObservationMap(rows=np.array([[1.0, 0.0]])),
        target=sup_target(np.eye(2)),
        name="e1",
    )


@pytest.fixture
def triangle_problem():
    """Triangle f1 <= 1, f2 <= 1, f1 + f2 >= -1 with no observations."""
    return Problem(
        model=Polytope(constraints=np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])),
        observations=ObservationMap(rows=np.zeros((0, 2))),
        target=sup_target(np.eye(2)),
        name="triangle",
    )


@pytest.fixture
def line_problem():
    """Points within 1/2 of the f1 axis, observe f1, estimate f2."""
    return Problem(
        model=ApproxSet(v_basis=np.array([[1.0, 0.0]]), g=np.zeros(2), eps=0.5, gram=np.eye(2)),
        observations=ObservationMap(rows=np.array([[1.0, 0.0]])),
        target=sup_target([[0.0, 1.0]]),
        name="line",
    )


def _with(problem, **changes):
    fields = dict(model=problem.model, observations=problem.observations, target=problem.target,
                  noise=problem.noise, name=problem.name)
    fields.update(changes)
    return Problem(**fields)


class TestBranches:
    """Test cases for branch enumeration."""

    def test_sup_branches(self):
        """Test one branch per piece against all pieces."""
        branches = sup_branches(sup_target(np.eye(3)))
        assert [b.label for b in branches] == ["i*=0", "i*=1", "i*=2"]
        assert branches[1].plus == (1,)
        assert branches[1].minus == (0, 1, 2)

    def test_supinf_branches(self):
        """Test one branch per pair of families, row-major."""
        branches = supinf_branches(lth_largest_target(np.eye(3), 2))
        assert len(branches) == 9
        assert branches[1].label == "(a*,b*)=(0,1)"
        assert branches[1].plus == (0, 1)
        assert branches[1].minus == (0, 2)


class TestSupPolytope:
    """Test cases for the linear-program synthesis."""

    def test_e1_optimal_error(self, synthesizer, e1_problem):
        """Test that the E1 instance has optimal error 1."""
        result = synthesizer.synthesize(e1_problem)
        assert result.e_hat == pytest.approx(1.0, abs=1e-6)
        assert isinstance(result.estimator, SupAffineEstimator)
        assert result.branch_labels == ("i*=0", "i*=1")

    def test_synthesized_estimator_evaluates_to_ehat(self, synthesizer, e1_problem):
        """Test that the optimal estimator attains the optimal error."""
        result = synthesizer.synthesize(e1_problem)
        value = synthesizer.eval_error_fixed(e1_problem.model, e1_problem.observations,
                                             e1_problem.target, result.estimator)
        assert value == pytest.approx(result.e_hat, abs=1e-6)

    def test_offsets_from_slacks(self, synthesizer, e1_problem):
        """Test that offsets equal e_hat - e''."""
        result = synthesizer.synthesize(e1_problem)
        np.testing.assert_allclose(result.estimator.offsets, result.e_hat - result.e_second)
        assert np.all(2 * result.e_hat - result.e_prime - result.e_second >= -1e-6)

    def test_triangle_without_observations(self, synthesizer, triangle_problem):
        """Test that with m = 0 the optimal error is half the range of the target."""
        result = synthesizer.synthesize(triangle_problem)
        assert result.e_hat == pytest.approx(0.75, abs=1e-6)
        assert result.estimator.m == 0

    def test_fully_observed(self, synthesizer):
        """Test that observing every coordinate gives zero error."""
        problem = Problem(model=Polytope(constraints=BOX_2D), observations=ObservationMap(rows=np.eye(2)),
                          target=sup_target(np.eye(2)))
        assert synthesizer.synthesize(problem).e_hat == pytest.approx(0.0, abs=1e-6)

    def test_unbounded_direction(self, synthesizer):
        """Test that an unbounded support direction is diagnosed per branch."""
        problem = Problem(
            model=Polytope(constraints=np.array([[1.0, 0.0]])),
            observations=ObservationMap(rows=np.array([[1.0, 0.0]])),
            target=sup_target([[0.0, 1.0]]),
        )
        with pytest.raises(InfeasibleProgramError) as excinfo:
            synthesizer.synthesize(problem)
        assert excinfo.value.branch == "i*=0"
        assert excinfo.value.direction == [0.0, 1.0]

    def test_wrong_model_family(self, synthesizer, line_problem):
        """Test that the polytope entry point refuses approximability sets."""
        with pytest.raises(PreconditionError):
            synthesizer.synthesize_sup_polytope(line_problem.model, line_problem.observations,
                                                line_problem.target)

    def test_program_stats(self, synthesizer, e1_problem):
        """Test that sizes and status are reported."""
        stats = synthesizer.synthesize(e1_problem).program_stats
        assert stats["branches"] == 2
        assert stats["status"] == "optimal"
        assert stats["n_var"] > 0 and stats["n_rows"] > 0

    def test_assemble_without_solving(self, synthesizer, e1_problem):
        """Test that the synthesis program can be assembled on its own."""
        program = synthesizer.assemble_synthesis_program(e1_problem)
        names = [name for name, _, _ in program.variable_names]
        assert names[:3] == ["e", "e_prime", "e_second"]


class TestSupApprox:
    """Test cases for the second-order cone synthesis."""

    def test_linear_target(self, synthesizer, line_problem):
        """Test that estimating f2 within 1/2 of the f1 axis has error 1/2."""
        result = synthesizer.synthesize(line_problem)
        assert result.e_hat == pytest.approx(0.5, abs=1e-6)

    def test_absolute_value_target(self, synthesizer, line_problem):
        """Test that |f2| is estimated with error 1/4."""
        problem = _with(line_problem, target=sup_target([[0.0, 1.0], [0.0, -1.0]]))
        result = synthesizer.synthesize(problem)
        assert result.e_hat == pytest.approx(0.25, abs=1e-6)
        value = synthesizer.eval_error_fixed(problem.model, problem.observations, problem.target,
                                             result.estimator)
        assert value == pytest.approx(0.25, abs=1e-6)

    def test_unobserved_subspace(self, synthesizer, line_problem):
        """Test that a target seeing V without observations of V is infeasible."""
        problem = _with(line_problem, observations=ObservationMap(rows=np.zeros((0, 2))),
                        target=sup_target([[1.0, 0.0]]))
        with pytest.raises(InfeasibleProgramError):
            synthesizer.synthesize(problem)


class TestSupInf:
    """Test cases for sup-inf targets."""

    def test_median_of_box(self, synthesizer):
        """Test the median of three box coordinates with f1 observed."""
        problem = Problem(
            model=Polytope(constraints=BOX_3D),
            observations=ObservationMap(rows=np.array([[1.0, 0.0, 0.0]])),
            target=lth_largest_target(np.eye(3), 2),
        )
        result = synthesizer.synthesize(problem)
        assert result.e_hat == pytest.approx(1.0, abs=1e-6)
        assert isinstance(result.estimator, SupInfAffineEstimator)
        assert result.estimator.offsets.shape == (3, 3)

    def test_median_matches_fiber_grid(self, synthesizer):
        """Test the median instance against half the spread of the target on each grid fiber."""
        grid = np.linspace(-1.0, 1.0, 21)
        f1, f2, f3 = np.meshgrid(grid, grid, grid, indexing="ij")
        medians = np.median(np.stack([f1, f2, f3]), axis=0)
        # fibers of the observation f1 are the slices along the first axis
        oracle = np.max(medians.max(axis=(1, 2)) - medians.min(axis=(1, 2))) / 2.0
        problem = Problem(
            model=Polytope(constraints=BOX_3D),
            observations=ObservationMap(rows=np.array([[1.0, 0.0, 0.0]])),
            target=lth_largest_target(np.eye(3), 2),
        )
        assert synthesizer.synthesize(problem).e_hat == pytest.approx(oracle, abs=2e-2)

    def test_difference_of_sups(self, synthesizer, e1_problem):
        """Test max(f1, f2) - max(0) written as a difference of suprema."""
        problem = _with(e1_problem, target=difference_of_sups_target(np.eye(2), [[0.0, 0.0]]))
        assert synthesizer.synthesize(problem).e_hat == pytest.approx(1.0, abs=1e-6)

    def test_combinatorial_cap(self):
        """Test that the branch count is capped."""
        synthesizer = EstimatorSynthesizer(Settings(combinatorial_cap=4))
        problem = Problem(
            model=Polytope(constraints=BOX_3D),
            observations=ObservationMap(rows=np.array([[1.0, 0.0, 0.0]])),
            target=lth_largest_target(np.eye(3), 2),
        )
        with pytest.raises(CombinatorialCapError):
            synthesizer.synthesize(problem)


class TestFixedEvaluation:
    """Test cases for the worst-case error of a given estimator."""

    def test_rectified_observation(self, e1_problem):
        """Test the estimator max(y, 0) on E1."""
        estimator = SupAffineEstimator(offsets=np.zeros(2), gains=np.array([[1.0], [0.0]]))
        value = eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target, estimator)
        assert value == pytest.approx(1.0, abs=1e-6)

    def test_shifted_estimator(self, e1_problem):
        """Test that shifting max(y, 0) by 0.3 costs 0.3."""
        estimator = SupAffineEstimator(offsets=np.array([0.3, 0.3]), gains=np.array([[1.0], [0.0]]))
        value = eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target, estimator)
        assert value == pytest.approx(1.3, abs=1e-6)

    def test_constant_zero(self, e1_problem):
        """Test that the zero estimator on E1 has error 1."""
        value = eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target,
                                 constant_estimator(0.0, 1))
        assert value == pytest.approx(1.0, abs=1e-6)

    def test_different_piece_counts(self, e1_problem):
        """Test an estimator with more pieces than the target."""
        estimator = SupAffineEstimator(offsets=np.array([0.0, 0.0, -5.0]),
                                       gains=np.array([[1.0], [0.0], [0.0]]))
        value = eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target, estimator)
        assert value == pytest.approx(1.0, abs=1e-6)

    def test_noise_enters_estimator_side(self, e1_problem):
        """Test that observation noise adds to the error of a gain-carrying estimator."""
        estimator = SupAffineEstimator(offsets=np.zeros(2), gains=np.array([[1.0], [0.0]]))
        noise = NoiseModel(p="inf", radius=0.25)
        value = eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target,
                                 estimator, noise)
        assert value >= 1.0 - 1e-6

    def test_dimension_mismatch(self, e1_problem):
        """Test that the estimator must consume m observations."""
        with pytest.raises(DimensionMismatchError):
            eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target,
                             constant_estimator(0.0, 2))

    def test_sup_inf_estimator_refused(self, e1_problem):
        """Test that fixed evaluation needs a sup-affine estimator."""
        estimator = SupInfAffineEstimator(offsets=np.zeros((1, 1)), gains=np.zeros((1, 1, 1)),
                                          sup_families=((0,),), inf_families=((0,),))
        with pytest.raises(PreconditionError):
            eval_error_fixed(e1_problem.model, e1_problem.observations, e1_problem.target, estimator)


class TestNoise:
    """Test cases for noisy observations."""

    def test_fully_observed_noise_sweep(self):
        """Test that with every coordinate observed the optimal error equals the noise radius."""
        problem = Problem(model=Polytope(constraints=BOX_2D), observations=ObservationMap(rows=np.eye(2)),
                          target=sup_target(np.eye(2)))
        points = noise_sweep(problem, [0.0, 0.1, 0.5])
        assert [radius for radius, _ in points] == [0.0, 0.1, 0.5]
        np.testing.assert_allclose([value for _, value in points], [0.0, 0.1, 0.5], atol=1e-6)

    def test_noise_does_not_change_e1(self, e1_problem):
        """Test that small noise leaves the E1 error at its worst value 1."""
        problem = _with(e1_problem, noise=NoiseModel(p="inf", radius=0.1))
        assert synthesize(problem).e_hat == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("p", ["1", "2", "inf"])
    def test_every_noise_order(self, p):
        """Test the fully observed box under each noise norm."""
        problem = Problem(model=Polytope(constraints=BOX_2D), observations=ObservationMap(rows=np.eye(2)),
                          target=sup_target(np.eye(2)), noise=NoiseModel(p=p, radius=0.2))
        assert synthesize(problem).e_hat == pytest.approx(0.2, abs=1e-6)
