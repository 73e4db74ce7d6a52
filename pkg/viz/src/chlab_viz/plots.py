"""Figure rendering for laboratory artifacts.

Deterministic by construction: the Agg backend, a fixed style sheet
applied through ``rc_context``, and scrubbed image metadata make repeated
renders of the same inputs byte-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import (
    MissingColumn,
    ParseError,
    Snapshot,
    Table,
    read_snapshot,
    read_table,
)

KINDS = ("energy", "means", "separation", "heatmap", "dispersion")

_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 9.0,
    "axes.titlesize": 10.0,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.9,
}

_PHI_COLOR = "#1f77b4"
_SIGMA_COLOR = "#2ca02c"
_OVERLAY_COLOR = "#d62728"
_ENVELOPE_COLOR = "#9467bd"


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: a plot kind, an input artifact, an image path."""

    kind: str
    in_path: Path
    out_path: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        object.__setattr__(self, "in_path", Path(self.in_path))
        object.__setattr__(self, "out_path", Path(self.out_path))
        if not self.in_path.is_file():
            raise ParseError(f"input file does not exist: {self.in_path}")


@dataclass(frozen=True)
class RenderResult:
    """What a render produced: the image path and the figure's headline
    numbers (the values annotated on or summarized by the plot)."""

    kind: str
    out_path: Path
    annotations: dict[str, float] = field(default_factory=dict)


def render(spec: PlotSpec) -> RenderResult:
    """Render one figure and return its annotated values."""
    with plt.rc_context(_STYLE):
        fig = plt.figure()
        try:
            if spec.kind == "heatmap":
                annotations = _heatmap(fig, read_snapshot(spec.in_path))
            else:
                table = read_table(spec.in_path)
                annotations = {
                    "energy": _energy,
                    "means": _means,
                    "separation": _separation,
                    "dispersion": _dispersion,
                }[spec.kind](fig, table)
            spec.out_path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(spec.out_path, format="png", metadata={"Software": None})
        finally:
            plt.close(fig)
    return RenderResult(kind=spec.kind, out_path=spec.out_path, annotations=annotations)


# ----------------------------------------------------------------------
# table kinds
# ----------------------------------------------------------------------


def _energy(fig, table: Table) -> dict[str, float]:
    t = table.column("t")
    energy = table.column("E")
    ax = fig.add_subplot()
    ax.plot(t, energy, color=_PHI_COLOR, label="free energy")
    if table.has_column("F"):
        lyapunov = table.column("F")
        if np.any(np.isfinite(lyapunov)):
            ax.plot(t, lyapunov, color=_OVERLAY_COLOR, linestyle="--",
                    label="Lyapunov value")
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    ax.set_title("energy decay")
    ax.legend(loc="upper right")
    drop = float(energy[0] - energy[-1]) if len(energy) else math.nan
    return {"final_energy": float(energy[-1]) if len(energy) else math.nan,
            "total_drop": drop}


def _means(fig, table: Table) -> dict[str, float]:
    t = table.column("t")
    phi_mean = table.column("phi_mean")
    sigma_mean = table.column("sigma_mean")
    if len(t) == 0:
        raise ParseError("means plot needs at least one data row")
    alpha = table.meta_float("model.alpha")
    c0 = table.meta_float("model.c0")
    reversion = c0 + np.exp(-alpha * (t - t[0])) * (phi_mean[0] - c0)
    deviation = float(np.max(np.abs(phi_mean - reversion)))

    ax = fig.add_subplot()
    ax.plot(t, phi_mean, color=_PHI_COLOR, label="phase mean")
    ax.plot(t, reversion, color=_OVERLAY_COLOR, linestyle=":",
            label="exponential reversion law")
    ax.plot(t, sigma_mean, color=_SIGMA_COLOR, linestyle="--", label="nutrient mean")
    ax.set_xlabel("t")
    ax.set_ylabel("mean")
    ax.set_title("mean trajectories")
    ax.legend(loc="best")
    ax.text(0.02, 0.02, f"max deviation from reversion law: {deviation:.3e}",
            transform=ax.transAxes, fontsize=8.0)
    return {"max_deviation": deviation}


def _separation(fig, table: Table) -> dict[str, float]:
    t = table.column("t")
    min_phi = table.column("min_phi")
    max_phi = table.column("max_phi")
    ax = fig.add_subplot()
    ax.plot(t, min_phi, color=_PHI_COLOR, label="min phase")
    ax.plot(t, max_phi, color=_PHI_COLOR, linestyle="--", label="max phase")
    ax.axhline(1.0, color="0.4", linewidth=0.9)
    ax.axhline(-1.0, color="0.4", linewidth=0.9)
    ax.set_xlabel("t")
    ax.set_ylabel("phase extrema")
    annotations: dict[str, float]
    if table.has_column("lower") and table.has_column("upper"):
        lower = table.column("lower")
        upper = table.column("upper")
        ax.plot(t, lower, color=_ENVELOPE_COLOR, linestyle=":", label="lower envelope")
        ax.plot(t, upper, color=_ENVELOPE_COLOR, linestyle="-.", label="upper envelope")
        ax.fill_between(t, lower, upper, color=_ENVELOPE_COLOR, alpha=0.08)
        ax.set_title("separation envelopes")
        margin = float(1.0 - np.max(np.maximum(upper, -lower)))
        annotations = {"envelope_margin": margin}
    elif table.has_column("delta"):
        delta = table.column("delta")
        twin = ax.twinx()
        twin.plot(t, delta, color=_SIGMA_COLOR, linewidth=1.0, label="margin")
        twin.set_yscale("log")
        twin.set_ylabel("separation margin")
        twin.grid(False)
        ax.set_title("separation margin")
        annotations = {"final_delta": float(delta[-1]), "min_delta": float(np.min(delta))}
    else:
        raise MissingColumn(
            "separation plot needs either lower/upper envelopes or a delta column"
        )
    ax.legend(loc="center right", fontsize=8.0)
    return annotations


def _dispersion(fig, table: Table) -> dict[str, float]:
    q = table.column("q")
    branch = table.column("branch")
    predicted = table.column("predicted")
    measured = table.column("measured")
    rel_err = table.column("rel_err")
    ax = fig.add_subplot()
    markers = {0: "o", 1: "s"}
    for value in sorted(set(int(b) for b in branch)):
        mask = branch == value
        order = np.argsort(q[mask])
        ax.plot(q[mask][order], predicted[mask][order], color=_PHI_COLOR,
                marker=markers.get(value, "d"), markerfacecolor="none",
                linestyle="-", label=f"branch {value} predicted")
        ax.plot(q[mask][order], measured[mask][order], color=_OVERLAY_COLOR,
                marker="x", linestyle="none", label=f"branch {value} measured")
    ax.set_xlabel("mode eigenvalue q")
    ax.set_ylabel("rate")
    ax.set_title("dispersion: measured vs predicted")
    ax.legend(loc="best", fontsize=8.0)
    worst = float(np.max(rel_err)) if len(rel_err) else math.nan
    ax.text(0.02, 0.02, f"worst relative error: {worst:.3e}",
            transform=ax.transAxes, fontsize=8.0)
    return {"max_rel_err": worst}


# ----------------------------------------------------------------------
# snapshot kind
# ----------------------------------------------------------------------


def _heatmap(fig, snap: Snapshot) -> dict[str, float]:
    sup_phi = float(np.max(np.abs(snap.phi)))
    if snap.ndim == 1:
        x = np.linspace(0.0, snap.length_per_axis[0], snap.n_per_axis[0])
        ax = fig.add_subplot()
        ax.plot(x, snap.phi, color=_PHI_COLOR, label="phase")
        ax.plot(x, snap.sigma, color=_SIGMA_COLOR, linestyle="--", label="nutrient")
        ax.axhline(1.0, color="0.4", linewidth=0.9)
        ax.axhline(-1.0, color="0.4", linewidth=0.9)
        ax.set_xlabel("x")
        ax.set_ylabel("field")
        ax.set_title(f"fields at t = {snap.t:g}")
        ax.legend(loc="best")
    else:
        if snap.ndim == 3:
            mid = snap.n_per_axis[2] // 2
            phi_plane = snap.phi[:, :, mid]
            sigma_plane = snap.sigma[:, :, mid]
            suffix = f" (z slice {mid})"
        else:
            phi_plane = snap.phi
            sigma_plane = snap.sigma
            suffix = ""
        extent = (0.0, snap.length_per_axis[0], 0.0, snap.length_per_axis[1])
        axes = fig.subplots(1, 2)
        for ax, plane, cmap, label, limits in (
            (axes[0], phi_plane, "RdBu_r", "phase", (-1.0, 1.0)),
            (axes[1], sigma_plane, "viridis", "nutrient", (None, None)),
        ):
            image = ax.imshow(plane.T, origin="lower", extent=extent, cmap=cmap,
                              vmin=limits[0], vmax=limits[1], aspect="equal")
            ax.set_title(label + suffix)
            ax.set_xlabel("x")
            ax.set_ylabel("y")
            ax.grid(False)
            fig.colorbar(image, ax=ax, shrink=0.8)
        fig.suptitle(f"fields at t = {snap.t:g}")
    return {"t": float(snap.t), "sup_phi": sup_phi}
