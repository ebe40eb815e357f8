"""Turn the training CLI's CSV/JSON outputs into paper-style figures.

Three kinds:

  * violin      return distribution per variant, from the long-format
                comparison CSV (variant, model_index, return)
  * prob-trace  action-probability learning curves, from a trace CSV with
                an episode column plus one p_* column per action
  * density     overlaid return densities of the three assets, from the
                domain metadata export's discretized bins

Every plot is written twice, as <output stem>.svg and <output stem>.png.
SVG metadata dates are suppressed and the hash salt is pinned so re-running
a script yields byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "riskfigs"

FIGURE_KINDS = ("violin", "prob-trace", "density")

# variance printouts use population variance, matching the summary JSON the
# training CLI writes alongside the comparison CSV
VAR_DDOF = 0


class FigureError(ValueError):
    """Malformed input data or figure spec."""


@dataclass
class FigureSpec:
    input: Path
    kind: str
    output: Path
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None

    def __post_init__(self):
        self.input = Path(self.input)
        self.output = Path(self.output)
        if self.kind not in FIGURE_KINDS:
            raise FigureError(
                f"kind: expected one of {', '.join(FIGURE_KINDS)}, got {self.kind!r}"
            )


def fmt(x: float) -> str:
    """17 significant digits, the same shape the CLI writes into its CSVs."""
    return f"{float(x):.17g}"


# ---------------------------------------------------------------------------
# loaders
# ---------------------------------------------------------------------------

def load_long_returns(path) -> dict[str, np.ndarray]:
    """Parse a (variant, model_index, return) CSV into variant -> returns.

    Variants keep first-appearance order. The first malformed data row
    aborts with its line number.
    """
    path = Path(path)
    if not path.exists():
        raise FigureError(f"input not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FigureError(f"{path.name}: empty file")
        required = ("variant", "model_index", "return")
        missing = [c for c in required if c not in header]
        if missing:
            raise FigureError(f"{path.name}: missing column(s) {', '.join(missing)}")
        idx = {c: header.index(c) for c in required}
        out: dict[str, list] = {}
        for lineno, row in enumerate(reader, start=2):
            try:
                variant = row[idx["variant"]]
                int(row[idx["model_index"]])
                value = float(row[idx["return"]])
            except (IndexError, ValueError):
                raise FigureError(f"{path.name}: bad row at line {lineno}: {row!r}")
            out.setdefault(variant, []).append(value)
    return {k: np.asarray(v) for k, v in out.items()}


def load_prob_trace(path):
    """Parse a trace CSV into (episodes, names, probs array of shape (T, K))."""
    path = Path(path)
    if not path.exists():
        raise FigureError(f"input not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FigureError(f"{path.name}: empty file")
        if "episode" not in header or not any(c.startswith("p_") for c in header):
            raise FigureError(f"{path.name}: need an episode column and p_* columns")
        ep_idx = header.index("episode")
        p_cols = [(i, c[2:]) for i, c in enumerate(header) if c.startswith("p_")]
        episodes, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            try:
                episodes.append(int(row[ep_idx]))
                rows.append([float(row[i]) for i, _ in p_cols])
            except (IndexError, ValueError):
                raise FigureError(f"{path.name}: bad row at line {lineno}: {row!r}")
    if not rows:
        raise FigureError(f"{path.name}: no data rows")
    episodes = np.asarray(episodes)
    # the trace logs one row per episode; anything else means a truncated or
    # stitched file
    expected = np.arange(episodes[0], episodes[0] + len(episodes))
    if not np.array_equal(episodes, expected):
        raise FigureError(
            f"{path.name}: episode column does not enumerate rows "
            f"(got {len(episodes)} rows spanning {episodes[0]}..{episodes[-1]})"
        )
    return episodes, [name for _, name in p_cols], np.asarray(rows)


def load_asset_metadata(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FigureError(f"metadata not found: {path}")
    try:
        meta = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FigureError(f"{path.name}: not valid JSON ({e})")
    for key in ("bin_rewards", "outcome_probs", "bin_width", "asset_names"):
        if key not in meta:
            raise FigureError(f"{path.name}: missing key {key!r}")
    return meta


# ---------------------------------------------------------------------------
# plots
# ---------------------------------------------------------------------------

def _save_both(fig, output: Path) -> list[Path]:
    from matplotlib import pyplot as plt

    output.parent.mkdir(parents=True, exist_ok=True)
    base = output.with_suffix("")
    paths = [base.with_suffix(".svg"), base.with_suffix(".png")]
    fig.savefig(paths[0], format="svg", metadata={"Date": None})
    fig.savefig(paths[1], format="png", dpi=150)
    plt.close(fig)
    return paths


def violin_figure(spec: FigureSpec, variants: list[str], data: dict[str, np.ndarray]):
    from matplotlib import pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.violinplot([data[v] for v in variants], showmeans=True, showextrema=True)
    ax.set_xticks(range(1, len(variants) + 1))
    ax.set_xticklabels(variants)
    ax.set_ylabel(spec.ylabel or "return")
    if spec.xlabel:
        ax.set_xlabel(spec.xlabel)
    ax.set_title(spec.title or "return distribution over sampled models")
    return fig


def plot_violin(spec: FigureSpec) -> list[Path]:
    """One violin per variant; prints mean/variance and variance ratios."""
    data = load_long_returns(spec.input)
    if len(data) < 2:
        raise FigureError(f"need at least 2 variants, got {len(data)}")
    for variant, values in data.items():
        if values.size < 10:
            raise FigureError(f"variant {variant!r} has only {values.size} returns (need 10)")

    variants = list(data)
    for variant in variants:
        values = data[variant]
        print(f"{variant}: mean {fmt(values.mean())} variance {fmt(values.var(ddof=VAR_DDOF))}")
    ref = variants[0]
    ref_var = data[ref].var(ddof=VAR_DDOF)
    for variant in variants[1:]:
        ratio = data[variant].var(ddof=VAR_DDOF) / ref_var if ref_var > 0 else float("inf")
        print(f"variance ratio {variant}/{ref} = {fmt(ratio)}")
    return _save_both(violin_figure(spec, variants, data), spec.output)


def trace_figure(spec: FigureSpec, episodes, names, probs):
    from matplotlib import pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k, name in enumerate(names):
        ax.plot(episodes, probs[:, k], label=name)
    off = float(np.abs(probs.sum(axis=1) - 1.0).max())
    if off > 1e-6:
        ax.text(
            0.02, 0.98, f"warning: probabilities off simplex by {off:.2e}",
            transform=ax.transAxes, va="top", fontsize=8, color="tab:red",
        )
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel(spec.xlabel or "episode")
    ax.set_ylabel(spec.ylabel or "probability")
    ax.set_title(spec.title or "action probabilities during training")
    ax.legend()
    return fig


def plot_prob_trace(spec: FigureSpec) -> list[Path]:
    """One line per action probability over episodes, clamped axis [0, 1]."""
    episodes, names, probs = load_prob_trace(spec.input)
    return _save_both(trace_figure(spec, episodes, names, probs), spec.output)


def density_figure(spec: FigureSpec, names, rewards, densities):
    from matplotlib import pyplot as plt

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for k, name in enumerate(names):
        ax.plot(rewards, densities[k], label=name)
    ax.set_xlabel(spec.xlabel or "return")
    ax.set_ylabel(spec.ylabel or "density")
    ax.set_title(spec.title or "asset return distributions")
    ax.legend()
    return fig


def plot_density(spec: FigureSpec) -> list[Path]:
    """Overlaid per-asset return densities from the discretized bins."""
    meta = load_asset_metadata(spec.input)
    rewards = np.asarray(meta["bin_rewards"], dtype=float)
    probs = np.asarray(meta["outcome_probs"], dtype=float)
    width = float(meta["bin_width"])
    names = meta["asset_names"]
    if probs.shape != (len(names), rewards.size):
        raise FigureError(
            f"outcome_probs shape {probs.shape} does not match "
            f"{len(names)} assets x {rewards.size} bins"
        )
    return _save_both(
        density_figure(spec, names, rewards, probs / width), spec.output
    )


PLOTTERS = {
    "violin": plot_violin,
    "prob-trace": plot_prob_trace,
    "density": plot_density,
}


def render(spec: FigureSpec) -> list[Path]:
    return PLOTTERS[spec.kind](spec)
