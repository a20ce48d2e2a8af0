"""Shared builders for the test suite."""

from __future__ import annotations

import pathlib

import numpy as np
import pytest

from panellp.panel import Panel

DATA_DIR = pathlib.Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20260815)


def balanced_panel(
    rng: np.random.Generator,
    n_entities: int = 6,
    n_periods: int = 12,
    variables: tuple[str, ...] = ("y", "x"),
    start_year: int = 2000,
) -> Panel:
    """A dense random panel with entity labels E00, E01, ..."""
    cols = {
        v: rng.normal(size=(n_entities, n_periods)) for v in variables
    }
    return Panel(
        [f"E{i:02d}" for i in range(n_entities)],
        list(range(start_year, start_year + n_periods)),
        cols,
    )


def punch_holes(
    panel: Panel, rng: np.random.Generator, frac: float = 0.1
) -> Panel:
    """Knock out a fraction of cells in every variable, keeping each
    entity observed at least twice."""
    out = panel
    for name in panel.variables:
        grid = out.column(name).copy()
        mask = rng.random(grid.shape) < frac
        # never blank an entire row
        for i in range(grid.shape[0]):
            if mask[i].sum() > grid.shape[1] - 2:
                mask[i] = False
        grid[mask] = np.nan
        out = out.replace_column(name, grid)
    return out


@pytest.fixture
def data_dir() -> pathlib.Path:
    return DATA_DIR
