"""
Unit tests for ExportService.

Tests the export functionality for CSV and Excel formats, the result tables
and the HTML figures.
"""

from io import BytesIO, StringIO

import numpy as np
import pandas as pd
import pytest

from src.export_service import NOISE_SWEEP_COLUMNS, PLUGIN_GAP_COLUMNS, ExportService
from src.models import AffineRecoveryMap, PluginComparison, SupAffineEstimator, SynthesisResult


@pytest.fixture
def export_service():
    """Create an ExportService instance for testing."""
    return ExportService()


@pytest.fixture
def sweep_frame(export_service):
    """A noise sweep given out of order."""
    return export_service.noise_sweep_frame([(0.5, 1.5), (0.0, 1.0), (0.1, 1.1)])


def _comparison(e_opt, e_plug):
    estimator = SupAffineEstimator(offsets=np.zeros(1), gains=np.zeros((1, 0)))
    synthesis = SynthesisResult(e_hat=e_opt, estimator=estimator, e_prime=np.zeros(1),
                                e_second=np.zeros(1), branch_labels=("i*=0",))
    recovery = AffineRecoveryMap(intercept=np.zeros(2), gains=np.zeros((0, 2)), gram=np.eye(2))
    return PluginComparison(e_opt=e_opt, e_plug=e_plug, recovery_map=recovery, plugin=estimator,
                            synthesis=synthesis)


@pytest.fixture
def gap_frame(export_service):
    """Plug-in comparisons for two problems."""
    return export_service.plugin_gap_frame([
        ("triangle_plugin_gap", _comparison(0.75, 1.5)),
        ("hilbert_line", _comparison(0.5, 0.5)),
    ])


class TestTables:
    """Test cases for result tables."""

    def test_noise_sweep_sorted(self, sweep_frame):
        """Test that the sweep is sorted by radius."""
        assert list(sweep_frame.columns) == NOISE_SWEEP_COLUMNS
        assert sweep_frame["radius"].tolist() == [0.0, 0.1, 0.5]
        assert sweep_frame["e_hat"].tolist() == [1.0, 1.1, 1.5]

    def test_empty_sweep(self, export_service):
        """Test an empty sweep."""
        frame = export_service.noise_sweep_frame([])
        assert frame.empty
        assert list(frame.columns) == NOISE_SWEEP_COLUMNS

    def test_plugin_gap(self, gap_frame):
        """Test the gap column."""
        assert list(gap_frame.columns) == PLUGIN_GAP_COLUMNS
        assert gap_frame["gap"].tolist() == pytest.approx([0.75, 0.0])
        assert gap_frame["problem"].tolist() == ["triangle_plugin_gap", "hilbert_line"]


class TestExportCSV:
    """Test cases for CSV export."""

    def test_header_and_rows(self, export_service, sweep_frame):
        """Test the CSV header and row count."""
        csv_bytes = export_service.export_to_csv(sweep_frame, "sweep.csv")
        lines = csv_bytes.decode("utf-8").split("\n")
        assert lines[0] == "radius,e_hat"
        assert lines[1] == "0,1"
        assert lines[-1] == ""
        assert len(lines) == 5

    def test_full_precision(self, export_service):
        """Test that floats survive the text form."""
        frame = export_service.noise_sweep_frame([(0.1, 1.0 / 3.0)])
        parsed = pd.read_csv(StringIO(export_service.export_to_csv(frame, "x.csv").decode("utf-8")),
                             float_precision="round_trip")
        assert parsed["e_hat"].iloc[0] == 1.0 / 3.0

    def test_deterministic(self, export_service, gap_frame):
        """Test that exporting twice gives identical bytes."""
        assert export_service.export_to_csv(gap_frame, "a.csv") == export_service.export_to_csv(gap_frame, "b.csv")


class TestExportExcel:
    """Test cases for Excel export."""

    def test_readable(self, export_service, gap_frame):
        """Test that the workbook reads back."""
        excel_bytes = export_service.export_to_excel(gap_frame, "gap.xlsx")
        assert isinstance(excel_bytes, bytes)
        parsed = pd.read_excel(BytesIO(excel_bytes), sheet_name="Results")
        assert list(parsed.columns) == PLUGIN_GAP_COLUMNS
        assert parsed["e_plug"].tolist() == pytest.approx([1.5, 0.5])

    def test_sheet_name(self, export_service, sweep_frame):
        """Test a custom worksheet name."""
        excel_bytes = export_service.export_to_excel(sweep_frame, "sweep.xlsx", sheet_name="Sweep")
        parsed = pd.read_excel(BytesIO(excel_bytes), sheet_name="Sweep")
        assert len(parsed) == 3


class TestFigures:
    """Test cases for plotly figures."""

    def test_noise_sweep_figure(self, export_service, sweep_frame):
        """Test a single line trace over the sweep."""
        fig = export_service.noise_sweep_figure(sweep_frame)
        assert len(fig.data) == 1
        assert list(fig.data[0].x) == [0.0, 0.1, 0.5]

    def test_empty_figure(self, export_service):
        """Test the placeholder for an empty sweep."""
        fig = export_service.noise_sweep_figure(export_service.noise_sweep_frame([]))
        assert len(fig.data) == 0
        assert "No Data" in fig.layout.title.text

    def test_plugin_gap_figure(self, export_service, gap_frame):
        """Test grouped bars for both errors."""
        fig = export_service.plugin_gap_figure(gap_frame)
        assert [trace.name for trace in fig.data] == ["e_opt", "e_plug"]
        assert fig.layout.barmode == "group"

    def test_html(self, export_service, sweep_frame):
        """Test the standalone HTML document."""
        html = export_service.export_figure_to_html(export_service.noise_sweep_figure(sweep_frame), "sweep.html")
        text = html.decode("utf-8")
        assert text.lstrip().lower().startswith("<html")
        assert "plotly" in text
