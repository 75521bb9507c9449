"""Presentation of experiment outputs: CSV tables and SVG plots.

SP values are multiplied by ``SP_DISPLAY_SCALE`` here and only here.
"""
from __future__ import annotations

import io
from typing import Any, Dict, List, Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
from matplotlib.figure import Figure

from .. import serialization
from ..data.dataset import Dataset
from ..exceptions import DataError
from ..metrics.fairness import FairnessReport
from ..storage import ArtifactStore
from .experiment import ScatterPoint

__all__ = [
    'SP_DISPLAY_SCALE',
    'report_tables',
    'scatter_svg',
    'distribution_svg',
    'render_experiment',
]


def __dir__() -> List[str]:
    return sorted(__all__)


SP_DISPLAY_SCALE = 10.0


def _csv(rows: List[Dict[str, Any]], columns: Sequence[str]) -> str:
    frame = pd.DataFrame(rows, columns=list(columns))
    for column in frame.columns:
        if frame[column].map(lambda v: isinstance(v, float)).any():
            frame[column] = [serialization.format_number(v) if isinstance(v, float) else v for v in frame[column]]
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


def report_tables(report: FairnessReport, ground_truth: Optional[Mapping[str, Any]] = None) -> Dict[str, str]:
    """CSV tables keyed by file name: accuracy/EA, PCC, SP (display scale) and the long format."""
    accuracy_rows, pcc_rows, sp_rows = [], [], []
    for label, m in report.labels.items():
        row: Dict[str, Any] = {"label": label, "maa": m.maa_global}
        for attribute in report.attributes:
            for category, value in m.maa_per_group.get(attribute, {}).items():
                row[f"maa[{attribute}={category}]"] = value
            row[f"ea[{attribute}]"] = m.ea_aggregate.get(attribute, float("nan"))
        accuracy_rows.append(row)
        for attribute, per in m.pcc_per_category.items():
            for category, result in per.items():
                pcc_rows.append({"label": label, "source": "prediction", "attribute": attribute,
                                 "category": category, "r": result.r, "p_value": result.p_value})
                if ground_truth and label in ground_truth and attribute in ground_truth[label]:
                    truth = ground_truth[label][attribute]["pcc"].get(category, {})
                    pcc_rows.append({
                        "label": label, "source": "ground_truth", "attribute": attribute, "category": category,
                        "r": float("nan") if truth.get("r") is None else float(truth["r"]),
                        "p_value": float("nan") if truth.get("p_value") is None else float(truth["p_value"]),
                    })
        for attribute, value in m.sp_per_attr.items():
            sp_row = {"label": label, "attribute": attribute, "sp_x10": value * SP_DISPLAY_SCALE}
            if ground_truth and label in ground_truth and attribute in ground_truth[label]:
                truth = ground_truth[label][attribute]["sp"]
                sp_row["ground_truth_sp_x10"] = float("nan") if truth is None else float(truth) * SP_DISPLAY_SCALE
            sp_rows.append(sp_row)

    accuracy_columns = list(dict.fromkeys(k for row in accuracy_rows for k in row))
    sp_columns = list(dict.fromkeys(k for row in sp_rows for k in row)) or ["label", "attribute", "sp_x10"]
    return {
        "accuracy.csv": _csv(accuracy_rows, accuracy_columns),
        "pcc.csv": _csv(pcc_rows, ["label", "source", "attribute", "category", "r", "p_value"]),
        "sp.csv": _csv(sp_rows, sp_columns),
        "metrics_long.csv": _csv(report.flatten_rows(), ["label", "metric", "attribute", "key", "value"]),
    }


def _svg(figure: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "faireg", "svg.fonttype": "none"}):
        figure.savefig(buffer, format="svg", metadata={"Date": None}, bbox_inches="tight")
    return buffer.getvalue()


def scatter_svg(points: Sequence[ScatterPoint], baseline_maa: float, threshold: float = 1e-3) -> bytes:
    """MAA against |PCC| of every tuning candidate, competent candidates highlighted."""
    figure = Figure(figsize=(6.0, 4.5))
    axes = figure.add_subplot(1, 1, 1)
    usable = [p for p in points if np.isfinite(p.maa) and np.isfinite(p.r)]
    for source in sorted({p.source for p in usable}):
        chosen = [p for p in usable if p.source == source]
        axes.scatter(
            [abs(p.r) for p in chosen],
            [p.maa for p in chosen],
            s=18,
            label=source,
            edgecolors=["black" if p.competent else "none" for p in chosen],
        )
    axes.axhline(baseline_maa, color="grey", linestyle="--", linewidth=1, label="constant mean")
    competent = [abs(p.r) for p in usable if p.competent]
    if competent:
        axes.axvspan(0.0, max(competent), ymin=0.0, ymax=1.0, color="green", alpha=0.08,
                     label=f"competent (p > {threshold:g})")
    axes.set_xlabel("|PCC| (strongest group correlation)")
    axes.set_ylabel("MAA")
    if usable:
        axes.legend(loc="lower right", fontsize="small")
    return _svg(figure)


def distribution_svg(dataset: Dataset, selector: str, bins: int = 30) -> bytes:
    """Per-category label histograms, one panel per label."""
    attr = dataset.protected_attr(selector).compact()
    n_labels = dataset.n_labels
    columns = min(3, n_labels)
    rows = int(np.ceil(n_labels / columns))
    figure = Figure(figsize=(4.0 * columns, 3.0 * rows))
    for j, label in enumerate(dataset.label_names):
        axes = figure.add_subplot(rows, columns, j + 1)
        edges = np.histogram_bin_edges(dataset.labels[:, j], bins=bins)
        for code, category in enumerate(attr.categories):
            axes.hist(dataset.labels[attr.codes == code, j], bins=edges, density=True, alpha=0.5, label=category)
        axes.set_title(label)
        if j == 0:
            axes.legend(fontsize="small")
    return _svg(figure)


def render_experiment(payload: Mapping[str, Any], store: ArtifactStore) -> List[str]:
    """Write tables and the scatter plot for a stored experiment output; returns written keys."""
    if "report" not in payload:
        raise DataError("Experiment output has no 'report' entry")
    report = FairnessReport.from_dict(payload["report"])
    written = []
    for name, text in report_tables(report, payload.get("ground_truth")).items():
        store.store_text(f"tables/{name}", text)
        written.append(f"tables/{name}")
    points = [ScatterPoint.from_dict(p) for p in payload.get("scatter", [])]
    if points:
        threshold = float(payload.get("config", {}).get("eval", {}).get("competent_p", 1e-3))
        store.store_bytes("plots/scatter.svg", scatter_svg(points, float(payload["baseline_maa"]), threshold))
        written.append("plots/scatter.svg")
    return written
