"""Immutable country-year panel container and the transforms used by the
projection engine.

A :class:`Panel` stores one float array per variable on a dense
entity-by-period grid.  Cells are either finite numbers or missing (NaN
internally); infinities are rejected at construction so they can never leak
into downstream arithmetic.  All transforms are pure: they return a new
``Panel`` and never mutate their input.

Period arithmetic (lags, leads, differences) is done in units of the integer
time index, never by positional shifting, so an entity observed for
1990-1995 with 1993 absent gets a missing lag at 1994 rather than a silently
misaligned one.  Shifts never cross entity boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateVariableError,
    MissingVariableError,
    PanelLPError,
)

__all__ = [
    "Panel",
    "VariableSpec",
    "add_lag",
    "horizon_delta",
    "first_difference",
    "standardize",
    "log_column",
    "per_capita",
    "scale_column",
    "two_way_demean",
    "apply_variable_spec",
]


def _as_grid(values, n_entities: int, n_periods: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n_entities, n_periods):
        raise PanelLPError(
            f"column {name!r} has shape {arr.shape}, expected "
            f"({n_entities}, {n_periods})"
        )
    if np.isinf(arr).any():
        raise PanelLPError(f"column {name!r} contains non-finite values (inf)")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


class Panel:
    """Dense entity x period grid of named numeric variables.

    Parameters
    ----------
    entities : sequence of str
        Unique entity labels, kept in the given order.
    periods : sequence of int
        Consecutive integer time indices (typically years).  The grid spans
        the full range; an entity simply holds missing cells for periods it
        does not cover.
    columns : mapping of str -> array-like
        One ``(n_entities, n_periods)`` array per variable.  ``NaN`` marks a
        missing cell; infinities are rejected.
    """

    __slots__ = ("_entities", "_periods", "_columns", "_entity_index")

    def __init__(
        self,
        entities: Sequence[str],
        periods: Sequence[int],
        columns: Mapping[str, object],
    ):
        ents = tuple(str(e) for e in entities)
        if len(ents) == 0:
            raise PanelLPError("panel needs at least one entity")
        if len(set(ents)) != len(ents):
            raise PanelLPError("duplicate entity labels")
        pers = tuple(int(p) for p in periods)
        if len(pers) == 0:
            raise PanelLPError("panel needs at least one period")
        if any(b - a != 1 for a, b in zip(pers, pers[1:])):
            raise PanelLPError("periods must be consecutive integers")
        self._entities = ents
        self._periods = pers
        self._entity_index = {e: i for i, e in enumerate(ents)}
        self._columns = {
            str(name): _as_grid(vals, len(ents), len(pers), str(name))
            for name, vals in columns.items()
        }

    # -- basic introspection -------------------------------------------------

    @property
    def entities(self) -> tuple[str, ...]:
        return self._entities

    @property
    def periods(self) -> tuple[int, ...]:
        return self._periods

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self._columns)

    @property
    def n_entities(self) -> int:
        return len(self._entities)

    @property
    def n_periods(self) -> int:
        return len(self._periods)

    def __contains__(self, name: str) -> bool:
        return name in self._columns

    def column(self, name: str) -> np.ndarray:
        """Read-only ``(n_entities, n_periods)`` array for ``name``."""
        try:
            return self._columns[name]
        except KeyError:
            raise MissingVariableError(
                f"no variable named {name!r}; have {sorted(self._columns)}"
            ) from None

    def entity_row(self, entity: str) -> int:
        try:
            return self._entity_index[entity]
        except KeyError:
            raise MissingVariableError(f"no entity named {entity!r}") from None

    def period_col(self, period: int) -> int:
        off = int(period) - self._periods[0]
        if off < 0 or off >= len(self._periods):
            raise PanelLPError(f"period {period} outside {self._periods[0]}..{self._periods[-1]}")
        return off

    def missing_count(self, name: str) -> int:
        return int(np.isnan(self.column(name)).sum())

    def present_mask(self, names: Iterable[str]) -> np.ndarray:
        """Boolean grid: True where every listed variable is non-missing."""
        names = list(names)
        if not names:
            raise PanelLPError("present_mask needs at least one variable")
        mask = ~np.isnan(self.column(names[0]))
        for name in names[1:]:
            mask &= ~np.isnan(self.column(name))
        return mask

    def observed_mask(self) -> np.ndarray:
        """True where the entity-period cell has any observed variable."""
        if not self._columns:
            return np.zeros((self.n_entities, self.n_periods), dtype=bool)
        mask = np.zeros((self.n_entities, self.n_periods), dtype=bool)
        for arr in self._columns.values():
            mask |= ~np.isnan(arr)
        return mask

    def period_gaps(self) -> dict[str, tuple[int, ...]]:
        """Interior periods with no data at all, recorded per entity."""
        obs = self.observed_mask()
        gaps: dict[str, tuple[int, ...]] = {}
        pers = np.asarray(self._periods)
        for i, ent in enumerate(self._entities):
            seen = np.flatnonzero(obs[i])
            if seen.size < 2:
                continue
            interior = np.arange(seen[0], seen[-1] + 1)
            hole = interior[~obs[i, interior]]
            if hole.size:
                gaps[ent] = tuple(int(p) for p in pers[hole])
        return gaps

    # -- derived panels ------------------------------------------------------

    def _new(self, columns: Mapping[str, np.ndarray]) -> "Panel":
        out = object.__new__(Panel)
        out._entities = self._entities
        out._periods = self._periods
        out._entity_index = self._entity_index
        out._columns = dict(columns)
        return out

    def with_column(self, name: str, values) -> "Panel":
        """Return a new panel with an added column; rejects name collisions."""
        name = str(name)
        if name in self._columns:
            raise PanelLPError(f"column {name!r} already exists")
        cols = dict(self._columns)
        cols[name] = _as_grid(values, self.n_entities, self.n_periods, name)
        return self._new(cols)

    def replace_column(self, name: str, values) -> "Panel":
        if name not in self._columns:
            raise MissingVariableError(f"no variable named {name!r}")
        cols = dict(self._columns)
        cols[name] = _as_grid(values, self.n_entities, self.n_periods, name)
        return self._new(cols)

    def select(self, names: Iterable[str]) -> "Panel":
        names = [str(n) for n in names]
        for n in names:
            if n not in self._columns:
                raise MissingVariableError(f"no variable named {n!r}")
        return self._new({n: self._columns[n] for n in names})

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_records(
        cls,
        records: Iterable[tuple[str, int, Mapping[str, float]]],
    ) -> "Panel":
        """Build a panel from ``(entity, period, {var: value})`` records.

        Entities keep first-appearance order; the period axis spans the full
        min..max range observed anywhere.  Values may be ``None``/NaN for
        missing cells.
        """
        rows = list(records)
        if not rows:
            raise PanelLPError("no records")
        entities: list[str] = []
        seen: set[str] = set()
        varnames: list[str] = []
        varseen: set[str] = set()
        pmin = None
        pmax = None
        for ent, per, vals in rows:
            if ent not in seen:
                seen.add(ent)
                entities.append(ent)
            per = int(per)
            pmin = per if pmin is None else min(pmin, per)
            pmax = per if pmax is None else max(pmax, per)
            for v in vals:
                if v not in varseen:
                    varseen.add(v)
                    varnames.append(v)
        periods = list(range(pmin, pmax + 1))
        eidx = {e: i for i, e in enumerate(entities)}
        grids = {
            v: np.full((len(entities), len(periods)), np.nan) for v in varnames
        }
        for ent, per, vals in rows:
            i = eidx[ent]
            j = int(per) - pmin
            for v, x in vals.items():
                if x is None:
                    continue
                grids[v][i, j] = float(x)
        return cls(entities, periods, grids)


@dataclass(frozen=True)
class VariableSpec:
    """How to derive a working column from raw panel data.

    ``name`` is the output column; ``source`` the raw input column (defaults
    to ``name``).  ``transform`` is one of ``level``, ``log``,
    ``per_capita_log`` (divide by ``population`` then log) or
    ``standardize``.
    """

    name: str
    transform: str = "level"
    source: str | None = None
    population: str | None = None

    def __post_init__(self):
        if self.transform not in ("level", "log", "per_capita_log", "standardize"):
            raise PanelLPError(f"unknown transform {self.transform!r}")
        if self.transform == "per_capita_log" and not self.population:
            raise PanelLPError("per_capita_log needs a population column")

    @property
    def src(self) -> str:
        return self.source if self.source is not None else self.name


# ---------------------------------------------------------------------------
# shift-based transforms
# ---------------------------------------------------------------------------


def _shifted(grid: np.ndarray, offset: int) -> np.ndarray:
    """Value at t+offset aligned to t, NaN where t+offset leaves the axis."""
    out = np.full_like(grid, np.nan)
    if offset == 0:
        return grid.copy()
    if offset > 0:
        out[:, :-offset] = grid[:, offset:]
    else:
        out[:, -offset:] = grid[:, :offset]
    return out


def add_lag(panel: Panel, var: str, j: int, out: str | None = None) -> Panel:
    """Add ``var`` lagged ``j`` periods as ``{var}_lag_{j}``.

    The lag at an entity's first ``j`` periods is missing; entity boundaries
    are never crossed.
    """
    if j < 1:
        raise PanelLPError(f"lag order must be >= 1, got {j}")
    name = out if out is not None else f"{var}_lag_{j}"
    return panel.with_column(name, _shifted(panel.column(var), -j))


def horizon_delta(panel: Panel, var: str, k: int, out: str | None = None) -> Panel:
    """Add the k-period forward change ``x[t+k] - x[t]`` as ``{var}_h{k}``.

    ``k = 0`` yields zeros wherever ``var`` is observed.  Cells whose ``t+k``
    falls past the panel end are missing.
    """
    if k < 0:
        raise PanelLPError(f"horizon must be >= 0, got {k}")
    name = out if out is not None else f"{var}_h{k}"
    grid = panel.column(var)
    return panel.with_column(name, _shifted(grid, k) - grid)


def first_difference(panel: Panel, var: str, out: str | None = None) -> Panel:
    """Add ``x[t] - x[t-1]`` as ``{var}_diff``."""
    name = out if out is not None else f"{var}_diff"
    grid = panel.column(var)
    return panel.with_column(name, grid - _shifted(grid, -1))


# ---------------------------------------------------------------------------
# value transforms
# ---------------------------------------------------------------------------


def standardize(
    panel: Panel,
    var: str,
    out: str | None = None,
    scope: str = "pooled",
) -> Panel:
    """Center and scale ``var`` to mean zero, unit sample variance.

    ``scope="pooled"`` uses one mean/sd over every non-missing entity-year
    cell (the default); ``scope="entity"`` standardizes within each entity.
    Writes over ``var`` unless ``out`` names a new column.  A zero sample
    standard deviation raises :class:`DegenerateVariableError`.
    """
    grid = panel.column(var)
    ok = ~np.isnan(grid)
    z = np.full_like(grid, np.nan)
    if scope == "pooled":
        vals = grid[ok]
        if vals.size < 2:
            raise DegenerateVariableError(f"{var!r}: need >= 2 values to standardize")
        sd = vals.std(ddof=1)
        if sd == 0.0:
            raise DegenerateVariableError(f"{var!r} has zero variance")
        z[ok] = (vals - vals.mean()) / sd
    elif scope == "entity":
        for i in range(panel.n_entities):
            sel = ok[i]
            vals = grid[i, sel]
            if vals.size == 0:
                continue
            if vals.size < 2:
                raise DegenerateVariableError(
                    f"{var!r}: entity {panel.entities[i]!r} has a single value"
                )
            sd = vals.std(ddof=1)
            if sd == 0.0:
                raise DegenerateVariableError(
                    f"{var!r} has zero variance within entity {panel.entities[i]!r}"
                )
            z[i, sel] = (vals - vals.mean()) / sd
    else:
        raise PanelLPError(f"unknown standardize scope {scope!r}")
    if out is None or out == var:
        return panel.replace_column(var, z)
    return panel.with_column(out, z)


def log_column(panel: Panel, var: str, out: str | None = None) -> tuple[Panel, int]:
    """Natural log of ``var``; non-positive cells become missing.

    Returns the new panel and the count of non-positive cells that were
    mapped to missing (surfaced in run diagnostics).
    """
    grid = panel.column(var)
    ok = ~np.isnan(grid)
    bad = ok & (grid <= 0.0)
    vals = np.full_like(grid, np.nan)
    good = ok & (grid > 0.0)
    vals[good] = np.log(grid[good])
    name = out if out is not None else f"log_{var}"
    if name == var:
        return panel.replace_column(var, vals), int(bad.sum())
    return panel.with_column(name, vals), int(bad.sum())


def per_capita(panel: Panel, var: str, population: str, out: str) -> Panel:
    """``var / population``; cells with missing or non-positive population
    become missing."""
    grid = panel.column(var)
    pop = panel.column(population)
    vals = np.full_like(grid, np.nan)
    ok = ~np.isnan(grid) & ~np.isnan(pop) & (pop > 0.0)
    vals[ok] = grid[ok] / pop[ok]
    return panel.with_column(out, vals)


def scale_column(panel: Panel, var: str, factor: float) -> Panel:
    """Multiply every non-missing cell of ``var`` by ``factor`` in place."""
    grid = panel.column(var)
    return panel.replace_column(var, grid * float(factor))


def apply_variable_spec(panel: Panel, spec: VariableSpec) -> tuple[Panel, int]:
    """Materialize ``spec.name`` from its source column.

    Returns the augmented panel and the number of cells invalidated by a log
    of a non-positive value (zero for the other transforms).
    """
    src = spec.src
    if spec.transform == "level":
        if spec.name == src:
            panel.column(src)  # existence check
            return panel, 0
        return panel.with_column(spec.name, panel.column(src)), 0
    if spec.transform == "log":
        return log_column(panel, src, out=spec.name)
    if spec.transform == "per_capita_log":
        tmp = f"__pc_{spec.name}"
        panel = per_capita(panel, src, spec.population, tmp)
        panel, bad = log_column(panel, tmp, out=spec.name)
        return panel.select([v for v in panel.variables if v != tmp]), bad
    if spec.transform == "standardize":
        return standardize(panel, src, out=spec.name), 0
    raise PanelLPError(f"unknown transform {spec.transform!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# two-way demeaning
# ---------------------------------------------------------------------------


def _alternating_demean(
    values: np.ndarray,
    ent_codes: np.ndarray,
    per_codes: np.ndarray,
    n_ent: int,
    n_per: int,
    entity_fe: bool,
    time_fe: bool,
    tolerance: float,
    max_sweeps: int,
) -> tuple[np.ndarray, int, float]:
    """Alternately sweep out entity and period means from ``values``.

    ``values`` is an ``(n_rows, n_vars)`` matrix; rows are grouped by the
    integer code arrays.  Iterates until the largest cell change in a full
    sweep is below ``tolerance``.  Returns ``(demeaned, sweeps, last_delta)``
    and raises :class:`ConvergenceError` past ``max_sweeps``.
    """
    v = np.array(values, dtype=float, copy=True)
    if v.ndim == 1:
        v = v[:, None]
    if not entity_fe and not time_fe:
        return v, 0, 0.0
    m = v.shape[1]
    cnt_e = np.bincount(ent_codes, minlength=n_ent).astype(float)
    cnt_p = np.bincount(per_codes, minlength=n_per).astype(float)
    div_e = np.maximum(cnt_e, 1.0)
    div_p = np.maximum(cnt_p, 1.0)
    has_e = cnt_e > 0
    has_p = cnt_p > 0
    delta = np.inf
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        if entity_fe:
            means = np.empty((n_ent, m))
            for c in range(m):
                means[:, c] = np.bincount(ent_codes, weights=v[:, c], minlength=n_ent)
            means /= div_e[:, None]
            v -= means[ent_codes]
            if has_e.any():
                delta = max(delta, float(np.abs(means[has_e]).max()))
        if time_fe:
            means = np.empty((n_per, m))
            for c in range(m):
                means[:, c] = np.bincount(per_codes, weights=v[:, c], minlength=n_per)
            means /= div_p[:, None]
            v -= means[per_codes]
            if has_p.any():
                delta = max(delta, float(np.abs(means[has_p]).max()))
        if delta < tolerance:
            return v, sweep, delta
    raise ConvergenceError(
        f"two-way demeaning did not converge in {max_sweeps} sweeps "
        f"(last sweep moved cells by {delta:.3e}, tolerance {tolerance:.1e})",
        sweeps=max_sweeps,
        last_delta=float(delta),
    )


def two_way_demean(
    panel: Panel,
    variables: Sequence[str],
    entity_fe: bool = True,
    time_fe: bool = True,
    tolerance: float = 1e-10,
    max_sweeps: int = 10_000,
) -> Panel:
    """Demean the listed variables over their joint non-missing cells.

    Every listed variable is demeaned on the same row set (cells where all
    of them are observed); cells outside that set come back missing, which
    keeps the result aligned with the listwise-deleted regression sample.
    """
    names = [str(v) for v in variables]
    mask = panel.present_mask(names)
    ent_idx, per_idx = np.nonzero(mask)
    if ent_idx.size == 0:
        raise PanelLPError("no cell has all the requested variables observed")
    mat = np.column_stack([panel.column(n)[mask] for n in names])
    out, _, _ = _alternating_demean(
        mat,
        ent_idx,
        per_idx,
        panel.n_entities,
        panel.n_periods,
        entity_fe,
        time_fe,
        tolerance,
        max_sweeps,
    )
    result = panel
    for c, name in enumerate(names):
        grid = np.full((panel.n_entities, panel.n_periods), np.nan)
        grid[mask] = out[:, c]
        result = result.replace_column(name, grid)
    return result
