"""Figure rendering for soft-robust policy optimization outputs."""

from .figures import (
    FIGURE_KINDS,
    FigureError,
    FigureSpec,
    load_asset_metadata,
    load_long_returns,
    load_prob_trace,
    plot_density,
    plot_prob_trace,
    plot_violin,
    render,
)

__all__ = [
    "FIGURE_KINDS",
    "FigureError",
    "FigureSpec",
    "load_asset_metadata",
    "load_long_returns",
    "load_prob_trace",
    "plot_density",
    "plot_prob_trace",
    "plot_violin",
    "render",
]
