"""
Export service for recovery results.

This module provides the ExportService class that turns noise sweeps and
plug-in comparisons into tables (CSV and Excel) and error-vs-noise figures
(standalone HTML).
"""

import io
import logging
from typing import Iterable, Sequence, Tuple

import pandas as pd

from src.models import PluginComparison


logger = logging.getLogger(__name__)

NOISE_SWEEP_COLUMNS = ["radius", "e_hat"]
PLUGIN_GAP_COLUMNS = ["problem", "e_opt", "e_plug", "gap"]


class ExportService:
    """
    Handles result export.

    Tables are plain DataFrames so the same data goes to every format.
    """

    def export_to_csv(self, data: pd.DataFrame, filename: str) -> bytes:
        """
        Export data to CSV format.

        Args:
            data: DataFrame containing the data to export
            filename: Name for the exported file (only used for logging)

        Returns:
            CSV data as bytes, floats written with 17 significant digits
        """
        buffer = io.StringIO()
        data.to_csv(buffer, index=False, float_format="%.17g", lineterminator="\n")
        csv_bytes = buffer.getvalue().encode("utf-8")
        buffer.close()
        logger.debug("Exported %d rows to CSV %s", len(data), filename)
        return csv_bytes

    def export_to_excel(self, data: pd.DataFrame, filename: str, sheet_name: str = "Results") -> bytes:
        """
        Export data to Excel format.

        Args:
            data: DataFrame containing the data to export
            filename: Name for the exported file (only used for logging)
            sheet_name: Worksheet name

        Returns:
            Excel data as bytes
        """
        buffer = io.BytesIO()
        with pd.ExcelWriter(buffer, engine="openpyxl") as writer:
            data.to_excel(writer, index=False, sheet_name=sheet_name)
        excel_bytes = buffer.getvalue()
        buffer.close()
        logger.debug("Exported %d rows to Excel %s", len(data), filename)
        return excel_bytes

    def noise_sweep_frame(self, points: Iterable[Tuple[float, float]]) -> pd.DataFrame:
        """
        Tabulate (radius, e_hat) pairs, sorted by radius.

        Args:
            points: Pairs as returned by EstimatorSynthesizer.noise_sweep

        Returns:
            DataFrame with columns radius and e_hat
        """
        frame = pd.DataFrame(list(points), columns=NOISE_SWEEP_COLUMNS, dtype=float)
        return frame.sort_values("radius", kind="stable").reset_index(drop=True)

    def plugin_gap_frame(self, rows: Sequence[Tuple[str, PluginComparison]]) -> pd.DataFrame:
        """
        Tabulate plug-in comparisons, one row per named problem.

        Args:
            rows: (problem name, comparison) pairs

        Returns:
            DataFrame with columns problem, e_opt, e_plug and gap
        """
        records = [
            {"problem": name, "e_opt": comparison.e_opt, "e_plug": comparison.e_plug, "gap": comparison.gap}
            for name, comparison in rows
        ]
        return pd.DataFrame(records, columns=PLUGIN_GAP_COLUMNS)

    def noise_sweep_figure(self, frame: pd.DataFrame, title: str = "Worst-case error vs noise radius"):
        """
        Line plot of the optimal worst-case error against the noise radius.

        Args:
            frame: Output of noise_sweep_frame

        Returns:
            Plotly Figure object
        """
        import plotly.graph_objects as go

        fig = go.Figure()
        if frame.empty:
            fig.update_layout(title=f"{title} (No Data)", showlegend=False)
            return fig

        fig.add_trace(go.Scatter(
            x=frame["radius"],
            y=frame["e_hat"],
            mode="lines+markers",
            name="e_hat",
            hovertemplate="radius=%{x}<br>e_hat=%{y}<extra></extra>",
        ))
        fig.update_layout(
            title=title,
            xaxis_title="noise radius",
            yaxis_title="optimal worst-case error",
            showlegend=False,
            plot_bgcolor="white",
        )
        return fig

    def plugin_gap_figure(self, frame: pd.DataFrame, title: str = "Optimal vs plug-in error"):
        """Grouped bars of e_opt and e_plug per problem."""
        import plotly.graph_objects as go

        fig = go.Figure(data=[
            go.Bar(name="e_opt", x=frame["problem"], y=frame["e_opt"]),
            go.Bar(name="e_plug", x=frame["problem"], y=frame["e_plug"]),
        ])
        fig.update_layout(title=title, barmode="group", yaxis_title="worst-case error")
        return fig

    def export_figure_to_html(self, fig, filename: str) -> bytes:
        """
        Export a figure as a standalone HTML document.

        The plotly.js bundle is referenced from its CDN to keep files small.
        """
        html = fig.to_html(full_html=True, include_plotlyjs="cdn")
        logger.debug("Exported figure to HTML %s", filename)
        return html.encode("utf-8")
