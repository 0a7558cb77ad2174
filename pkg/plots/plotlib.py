"""Figure rendering for the teleportation simulator's CSV/JSON artifacts.

Consumes only the documented output formats of the `telefock` CLI (curve CSV,
state JSON, Wigner CSV, manifest JSON) and never recomputes physics. All
rendering is headless (Agg) with fixed figure geometry, so output dimensions
are deterministic.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIG_DPI = 120
GUIDE_LEVEL = 0.5
DEFAULT_MARKERS = (0.5, 2.0)


def load_curve(csv_path: Path) -> np.ndarray:
    """Rows (L, P_model, P_vacuum) from a curve CSV; raises on malformed data."""
    lines = Path(csv_path).read_text().strip().splitlines()
    if not lines or lines[0] != "L,P_model,P_vacuum":
        raise ValueError(f"{csv_path}: expected header 'L,P_model,P_vacuum'")
    try:
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise ValueError(f"{csv_path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError(f"{csv_path}: expected three columns")
    return data


def curve_figure(csv_path: Path, markers=DEFAULT_MARKERS) -> plt.Figure:
    """P(L) plot: model and vacuum curves with labeled conditioning markers."""
    data = load_curve(csv_path)
    fig, ax = plt.subplots(figsize=(5.4, 3.6), dpi=FIG_DPI)
    ax.plot(data[:, 0], data[:, 1], color="tab:blue", label="model")
    ax.plot(data[:, 0], data[:, 2], color="tab:gray", linestyle="--", label="two-mode vacuum")
    for L in markers:
        ax.axvline(L, color="tab:red", linewidth=0.8, alpha=0.6)
        ax.text(L, 0.04, f"L={L:g}", rotation=90, color="tab:red", ha="right", va="bottom")
    ax.set_xlim(0.0, max(4.0, data[-1, 0]))
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel("conditioning radius L")
    ax.set_ylabel("success probability P(L)")
    ax.legend(loc="lower right", frameon=False)
    fig.tight_layout()
    return fig


def render_curve(csv_path: Path, out_png: Path, markers=DEFAULT_MARKERS) -> None:
    fig = curve_figure(csv_path, markers)
    fig.savefig(out_png)
    plt.close(fig)


def load_manifest_states(manifest_path: Path) -> list[dict]:
    """State payloads + matching Wigner tables referenced by a run manifest."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    outputs = manifest.get("outputs", {})
    states = outputs.get("states", [])
    wigner = outputs.get("wigner", [])
    if not states:
        raise ValueError(f"{manifest_path}: manifest lists no state files")
    if len(states) != len(wigner):
        raise ValueError(f"{manifest_path}: state/wigner file lists differ in length")
    base = manifest_path.parent
    entries = []
    for state_name, wig_name in zip(states, wigner):
        payload = json.loads((base / state_name).read_text())
        for key in ("label", "photon_distribution", "w00"):
            if key not in payload:
                raise ValueError(f"{state_name}: missing key {key!r}")
        entries.append({"payload": payload, "wigner": load_wigner_csv(base / wig_name)})
    return entries


def load_wigner_csv(csv_path: Path) -> np.ndarray:
    lines = Path(csv_path).read_text().strip().splitlines()
    if not lines or lines[0] != "x,p,W":
        raise ValueError(f"{csv_path}: expected header 'x,p,W'")
    try:
        return np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    except ValueError as exc:
        raise ValueError(f"{csv_path}: {exc}") from None


def wigner_side_view(table: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """The W(x, p=p0) slice with p0 the grid point closest to zero."""
    ps = np.unique(table[:, 1])
    p0 = ps[np.argmin(np.abs(ps))]
    rows = table[table[:, 1] == p0]
    order = np.argsort(rows[:, 0])
    return rows[order, 0], rows[order, 2]


def states_figure(manifest_path: Path, n_max: int = 6) -> plt.Figure:
    """Per-state columns: photon bars with the 0.5 odd-sum guide, Wigner side view."""
    entries = load_manifest_states(manifest_path)
    n = len(entries)
    fig, axes = plt.subplots(2, n, figsize=(2.9 * n, 5.2), dpi=FIG_DPI, squeeze=False)
    for col, entry in enumerate(entries):
        payload = entry["payload"]
        probs = np.asarray(payload["photon_distribution"])[: n_max + 1]
        top = axes[0][col]
        top.bar(np.arange(probs.size), probs, color="tab:blue")
        top.axhline(GUIDE_LEVEL, color="tab:red", linewidth=0.9)
        top.set_ylim(0.0, 1.0)
        top.set_title(f"{payload['label']}  W(0,0)={payload['w00']:+.3f}", fontsize=9)
        top.set_xlabel("n")
        if col == 0:
            top.set_ylabel("photon number probability")
        xs, ws = wigner_side_view(entry["wigner"])
        bottom = axes[1][col]
        bottom.plot(xs, ws, color="tab:blue")
        bottom.axhline(0.0, color="black", linewidth=0.6)
        bottom.set_xlabel("x")
        if col == 0:
            bottom.set_ylabel("W(x, 0)")
    fig.tight_layout()
    return fig


def render_states(manifest_path: Path, out_png: Path) -> None:
    fig = states_figure(manifest_path)
    fig.savefig(out_png)
    plt.close(fig)
