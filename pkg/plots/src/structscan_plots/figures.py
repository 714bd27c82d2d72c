"""Panels over structscan report files.

Five panel kinds mirror the experiment outputs:

* ``bias_mu``            -- mean size bias vs mean, dotted quartile lines
* ``bias_n``             -- mean size bias vs n across several reports
* ``fmeasure_mu``        -- mean F-measure vs mean
* ``wasserstein_loglog`` -- distance vs n on log-log axes with an n^-0.5
                            guide line and the fitted slope annotated
* ``mu_detect_curves``   -- type-II error curves from mu-detect runs

Inputs are the documented report schemas only: the bias panels read the
trial CSV + JSON summary pairs, the Wasserstein panel reads the scaling
JSON, and the detectability panel reads `mu,type2_error` curve CSVs.
Rendering never modifies its inputs and embeds no timestamps, so identical
inputs give identical images.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

PANEL_KINDS = (
    "bias_mu",
    "bias_n",
    "fmeasure_mu",
    "wasserstein_loglog",
    "mu_detect_curves",
)

_REQUIRED_CELL_FIELDS = {
    "bias_mu": ("mu", "bias_mean", "bias_q1", "bias_q3"),
    "bias_n": ("mu", "bias_mean"),
    "fmeasure_mu": ("mu", "f_mean"),
}


class SchemaError(ValueError):
    """A report is missing a column or field the panel needs."""


@dataclass(frozen=True)
class FigureSpec:
    """One panel: which reports, which kind, where the image goes."""

    reports: tuple[str, ...]
    kind: str
    out: str
    image_format: str = "png"
    labels: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        if self.kind not in PANEL_KINDS:
            raise ValueError(f"unknown panel kind {self.kind!r}; expected one of {PANEL_KINDS}")
        if not self.reports:
            raise ValueError("at least one report path is required")
        if self.labels is not None and len(self.labels) != len(self.reports):
            raise ValueError("labels must match reports one to one")

    def label(self, i: int) -> str:
        if self.labels:
            return self.labels[i]
        return str(self.reports[i])


def _load_summary(path: str) -> dict:
    with open(path) as fh:
        payload = json.load(fh)
    for key in ("schema_version", "config", "cells"):
        if key not in payload:
            raise SchemaError(f"{path}: missing field {key!r}")
    return payload


def _check_cells(payload: dict, path: str, fields: Sequence[str]) -> list[dict]:
    cells = payload["cells"]
    for f in fields:
        for cell in cells:
            if f not in cell:
                raise SchemaError(f"{path}: cell record missing column {f!r}")
    return sorted(cells, key=lambda c: c["mu"])


def _render_bias_mu(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.reports):
        payload = _load_summary(path)
        cells = _check_cells(payload, path, _REQUIRED_CELL_FIELDS["bias_mu"])
        mus = [c["mu"] for c in cells]
        color = f"C{i}"
        ax.plot(mus, [c["bias_mean"] for c in cells], "-o", color=color,
                label=spec.label(i))
        ax.plot(mus, [c["bias_q1"] for c in cells], ":", color=color, linewidth=1)
        ax.plot(mus, [c["bias_q3"] for c in cells], ":", color=color, linewidth=1)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("size bias")
    ax.legend(fontsize=8)


def _render_bias_n(spec: FigureSpec, ax) -> None:
    # each report contributes one point per cell at its configured n;
    # reports sharing a label form one line over n
    series: dict[str, list[tuple[int, float]]] = {}
    for i, path in enumerate(spec.reports):
        payload = _load_summary(path)
        cells = _check_cells(payload, path, _REQUIRED_CELL_FIELDS["bias_n"])
        n = payload["config"].get("n")
        if n is None:
            raise SchemaError(f"{path}: config echo missing column 'n'")
        series.setdefault(spec.label(i), []).append((int(n), cells[0]["bias_mean"]))
    for j, (label, pts) in enumerate(sorted(series.items())):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "-o", color=f"C{j}", label=label)
    ax.axhline(0.0, color="gray", linewidth=0.8)
    ax.set_xlabel("n")
    ax.set_ylabel("size bias")
    ax.legend(fontsize=8)


def _render_fmeasure_mu(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.reports):
        payload = _load_summary(path)
        cells = _check_cells(payload, path, _REQUIRED_CELL_FIELDS["fmeasure_mu"])
        ax.plot([c["mu"] for c in cells], [c["f_mean"] for c in cells], "-o",
                color=f"C{i}", label=spec.label(i))
    ax.set_ylim(0, 1.05)
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("F-measure")
    ax.legend(fontsize=8)


def _render_wasserstein(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.reports):
        with open(path) as fh:
            payload = json.load(fh)
        for key in ("pairs", "n_grid", "distances", "slopes"):
            if key not in payload:
                raise SchemaError(f"{path}: missing field {key!r}")
        n_grid = np.array(payload["n_grid"], dtype=float)
        for j, (pair, dists, slope) in enumerate(
            zip(payload["pairs"], payload["distances"], payload["slopes"])
        ):
            label = f"alpha={pair[0]:g}, mu={pair[1]:g} (slope {slope:+.2f})"
            ax.loglog(n_grid, dists, "-o", color=f"C{j}", label=label)
        guide = payload["distances"][0][0] * (n_grid / n_grid[0]) ** -0.5
        ax.loglog(n_grid, guide, "--", color="gray", label=r"$n^{-1/2}$ guide")
    ax.set_xlabel("n")
    ax.set_ylabel("1-Wasserstein distance")
    ax.legend(fontsize=8)


def _render_mu_detect(spec: FigureSpec, ax) -> None:
    for i, path in enumerate(spec.reports):
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "mu" not in reader.fieldnames:
                raise SchemaError(f"{path}: curve file missing column 'mu'")
            if "type2_error" not in reader.fieldnames:
                raise SchemaError(f"{path}: curve file missing column 'type2_error'")
            rows = sorted(
                ((float(r["mu"]), float(r["type2_error"])) for r in reader)
            )
        if not rows:
            raise SchemaError(f"{path}: empty curve file")
        ax.plot([r[0] for r in rows], [r[1] for r in rows], "-o", color=f"C{i}",
                label=spec.label(i))
    ax.set_xlabel(r"$\mu$")
    ax.set_ylabel("type-II error")
    ax.legend(fontsize=8)


_RENDERERS = {
    "bias_mu": _render_bias_mu,
    "bias_n": _render_bias_n,
    "fmeasure_mu": _render_fmeasure_mu,
    "wasserstein_loglog": _render_wasserstein,
    "mu_detect_curves": _render_mu_detect,
}


def render(spec: FigureSpec) -> str:
    """Render one panel; returns the written image path."""
    fig, ax = plt.subplots(figsize=(5.0, 3.6), dpi=140)
    try:
        _RENDERERS[spec.kind](spec, ax)
        ax.set_title(spec.kind.replace("_", " "))
        fig.tight_layout()
        out = spec.out
        if "." not in out.rsplit("/", 1)[-1]:
            out = f"{out}.{spec.image_format}"
        fig.savefig(out, format=spec.image_format, metadata=_no_timestamp_metadata(spec.image_format))
        return out
    finally:
        plt.close(fig)


def _no_timestamp_metadata(image_format: str):
    # identical inputs must give identical bytes; PNG embeds no timestamp by
    # default under Agg, SVG/PDF need their date fields pinned
    if image_format == "svg":
        return {"Date": None}
    if image_format == "pdf":
        return {"CreationDate": None}
    return None
