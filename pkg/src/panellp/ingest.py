"""File boundary: CSV readers and writers, unit conversion, run config.

Readers are strict.  A malformed cell, a duplicate country-year key, or a
missing required column fails loudly with the file and line number rather
than propagating a silent NaN; an empty cell is the one sanctioned way to
say "missing".  Writers are lossless where the data flows back into code
(impulse responses round-trip through ``repr`` floats) and fixed-point
where the output is meant for reading (regression tables).
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError
from .estimator import RegressionResult, coefficient_interval
from .events import EventList, PandemicEvent
from .lp import IRF, GroupSpec
from .panel import Panel, scale_column

__all__ = [
    "CARBON_TO_CO2",
    "read_panel",
    "write_panel",
    "read_event_list",
    "read_groups",
    "carbon_to_co2",
    "merge",
    "write_irf",
    "read_irf",
    "write_regression_table",
    "load_config",
    "file_sha256",
]

# mass ratio of CO2 to elemental carbon (44/12, conventionally 3.667)
CARBON_TO_CO2 = 3.667


def _open_rows(path: str) -> Iterable[tuple[int, list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            yield reader.line_num, row


def _parse_float(
    cell: str, path: str, line: int, column: str
) -> float | None:
    text = cell.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise DataError(
            f"column {column!r} has non-numeric value {cell!r}",
            path=path,
            line=line,
        ) from None
    if not np.isfinite(value):
        raise DataError(
            f"column {column!r} has non-finite value {cell!r}",
            path=path,
            line=line,
        )
    return value


def _parse_int(cell: str, path: str, line: int, column: str) -> int:
    text = cell.strip()
    try:
        return int(text)
    except ValueError:
        raise DataError(
            f"column {column!r} has non-integer value {cell!r}",
            path=path,
            line=line,
        ) from None


def read_panel(path: str, columns: Sequence[str] | None = None) -> Panel:
    """Load a country-year CSV into a :class:`Panel`.

    The header must contain ``entity`` and ``year``; every other header
    names a numeric variable.  Empty cells are missing.  A repeated
    (entity, year) pair is an error that names both offending lines, and a
    non-numeric cell is an error naming file, line, and column.  Pass
    ``columns`` to require and keep only a subset of the variables.
    """
    rows = _open_rows(path)
    try:
        _, header = next(iter(rows))
    except StopIteration:
        raise DataError("file is empty", path=path) from None
    header = [h.strip() for h in header]
    for required in ("entity", "year"):
        if required not in header:
            raise DataError(
                f"header lacks required column {required!r} (found {header})",
                path=path,
                line=1,
            )
    ent_pos = header.index("entity")
    year_pos = header.index("year")
    var_names = [h for h in header if h not in ("entity", "year")]
    if len(set(header)) != len(header):
        raise DataError("header has duplicate column names", path=path, line=1)
    if columns is not None:
        for c in columns:
            if c not in var_names:
                raise DataError(
                    f"required variable {c!r} not in header", path=path, line=1
                )
        var_names = [c for c in var_names if c in set(columns)]
    var_pos = {v: header.index(v) for v in var_names}

    records: list[tuple[str, int, dict[str, float | None]]] = []
    seen: dict[tuple[str, int], int] = {}
    for line, row in rows:
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != len(header):
            raise DataError(
                f"row has {len(row)} fields, header has {len(header)}",
                path=path,
                line=line,
            )
        ent = row[ent_pos].strip()
        if ent == "":
            raise DataError("empty entity label", path=path, line=line)
        year = _parse_int(row[year_pos], path, line, "year")
        key = (ent, year)
        if key in seen:
            raise DataError(
                f"duplicate (entity, year) = ({ent}, {year}); "
                f"first seen at line {seen[key]}",
                path=path,
                line=line,
            )
        seen[key] = line
        vals = {
            v: _parse_float(row[var_pos[v]], path, line, v) for v in var_names
        }
        records.append((ent, year, vals))
    if not records:
        raise DataError("no data rows", path=path)
    return Panel.from_records(records)


def write_panel(panel: Panel, path: str, variables: Sequence[str] | None = None) -> None:
    """Write a panel back to CSV, one row per observed entity-year."""
    names = list(variables) if variables is not None else list(panel.variables)
    grids = [panel.column(n) for n in names]
    obs = panel.observed_mask()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["entity", "year"] + names)
        for i, ent in enumerate(panel.entities):
            for j, year in enumerate(panel.periods):
                if not obs[i, j]:
                    continue
                cells = []
                for g in grids:
                    v = g[i, j]
                    cells.append("" if np.isnan(v) else repr(float(v)))
                writer.writerow([ent, year] + cells)


def read_event_list(path: str, mortality_path: str | None = None) -> EventList:
    """Load events (``event_name, year, iso3`` rows) and optional mortality.

    The mortality file has ``event_name, iso3, mortality`` rows keyed to
    (event, affected country) pairs.
    """
    rows = _open_rows(path)
    try:
        _, header = next(iter(rows))
    except StopIteration:
        raise DataError("file is empty", path=path) from None
    header = [h.strip() for h in header]
    for required in ("event_name", "year", "iso3"):
        if required not in header:
            raise DataError(
                f"header lacks required column {required!r}", path=path, line=1
            )
    name_pos = header.index("event_name")
    year_pos = header.index("year")
    iso_pos = header.index("iso3")

    order: list[str] = []
    years: dict[str, int] = {}
    members: dict[str, list[str]] = {}
    first_line: dict[tuple[str, str], int] = {}
    for line, row in rows:
        if not row or all(c.strip() == "" for c in row):
            continue
        name = row[name_pos].strip()
        iso = row[iso_pos].strip()
        if name == "" or iso == "":
            raise DataError("empty event name or country code", path=path, line=line)
        year = _parse_int(row[year_pos], path, line, "year")
        if name not in years:
            years[name] = year
            members[name] = []
            order.append(name)
        elif years[name] != year:
            raise DataError(
                f"event {name!r} listed with conflicting years "
                f"{years[name]} and {year}",
                path=path,
                line=line,
            )
        key = (name, iso)
        if key in first_line:
            raise DataError(
                f"country {iso} repeated for event {name!r}; "
                f"first seen at line {first_line[key]}",
                path=path,
                line=line,
            )
        first_line[key] = line
        members[name].append(iso)

    if not order:
        raise DataError("no events in file", path=path)
    events = tuple(
        PandemicEvent(name=n, year=years[n], entities=tuple(members[n]))
        for n in order
    )

    mortality = None
    if mortality_path is not None:
        mortality = {}
        mrows = _open_rows(mortality_path)
        try:
            _, mheader = next(iter(mrows))
        except StopIteration:
            raise DataError("file is empty", path=mortality_path) from None
        mheader = [h.strip() for h in mheader]
        for required in ("event_name", "iso3", "mortality"):
            if required not in mheader:
                raise DataError(
                    f"header lacks required column {required!r}",
                    path=mortality_path,
                    line=1,
                )
        np_, ip_, mp_ = (
            mheader.index("event_name"),
            mheader.index("iso3"),
            mheader.index("mortality"),
        )
        seen_pairs: dict[tuple[str, str], int] = {}
        for line, row in mrows:
            if not row or all(c.strip() == "" for c in row):
                continue
            key = (row[np_].strip(), row[ip_].strip())
            if key in seen_pairs:
                raise DataError(
                    f"duplicate mortality entry for {key}; "
                    f"first seen at line {seen_pairs[key]}",
                    path=mortality_path,
                    line=line,
                )
            seen_pairs[key] = line
            value = _parse_float(row[mp_], mortality_path, line, "mortality")
            if value is None:
                continue  # an empty mortality cell is simply absent
            mortality[key] = value
    return EventList(events=events, mortality=mortality)


def read_groups(path: str, name: str) -> GroupSpec:
    """Load a membership CSV (``entity, member`` with 0/1 flags)."""
    rows = _open_rows(path)
    try:
        _, header = next(iter(rows))
    except StopIteration:
        raise DataError("file is empty", path=path) from None
    header = [h.strip() for h in header]
    for required in ("entity", "member"):
        if required not in header:
            raise DataError(
                f"header lacks required column {required!r}", path=path, line=1
            )
    ent_pos, mem_pos = header.index("entity"), header.index("member")
    members: set[str] = set()
    for line, row in rows:
        if not row or all(c.strip() == "" for c in row):
            continue
        flag = _parse_int(row[mem_pos], path, line, "member")
        if flag not in (0, 1):
            raise DataError(
                f"member flag must be 0 or 1, got {flag}", path=path, line=line
            )
        if flag == 1:
            members.add(row[ent_pos].strip())
    if not members:
        raise DataError("no group members flagged", path=path)
    return GroupSpec(name=name, members=frozenset(members))


def carbon_to_co2(panel: Panel, var: str) -> Panel:
    """Convert a column of carbon mass into CO2 mass (factor 3.667)."""
    return scale_column(panel, var, CARBON_TO_CO2)


def merge(panels: Sequence[Panel]) -> tuple[Panel, tuple[str, ...]]:
    """Outer-join panels on (entity, year).

    Variable names must not collide across inputs.  Returns the merged
    panel plus the entities that are absent from at least one input — a
    diagnostic for join keys that never matched (e.g. a country-code
    mismatch between sources).
    """
    if not panels:
        raise ConfigError("merge needs at least one panel")
    if len(panels) == 1:
        return panels[0], ()
    seen_vars: dict[str, int] = {}
    for idx, p in enumerate(panels):
        for v in p.variables:
            if v in seen_vars:
                raise DataError(
                    f"variable {v!r} appears in input {seen_vars[v] + 1} "
                    f"and input {idx + 1}; rename one of them"
                )
            seen_vars[v] = idx

    entities: list[str] = []
    eseen: set[str] = set()
    for p in panels:
        for e in p.entities:
            if e not in eseen:
                eseen.add(e)
                entities.append(e)
    pmin = min(p.periods[0] for p in panels)
    pmax = max(p.periods[-1] for p in panels)
    periods = list(range(pmin, pmax + 1))
    eidx = {e: i for i, e in enumerate(entities)}

    grids: dict[str, np.ndarray] = {}
    for p in panels:
        rows = [eidx[e] for e in p.entities]
        off = p.periods[0] - pmin
        for v in p.variables:
            grid = np.full((len(entities), len(periods)), np.nan)
            grid[np.asarray(rows), off : off + p.n_periods] = p.column(v)
            grids[v] = grid

    unmatched = tuple(
        e
        for e in entities
        if any(e not in set(p.entities) for p in panels)
    )
    return Panel(entities, periods, grids), unmatched


# ---------------------------------------------------------------------------
# impulse-response tables
# ---------------------------------------------------------------------------

_IRF_FIELDS = (
    "horizon",
    "series",
    "estimate",
    "se",
    "ci_low",
    "ci_high",
    "p_value",
    "stars",
    "n_obs",
    "n_entities",
    "n_periods",
    "r_squared",
)


def write_irf(irf: IRF, path: str) -> None:
    """Write the impulse response as CSV at full float precision.

    ``repr`` round-trips doubles exactly, so reading the file back yields
    bit-identical numbers.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_IRF_FIELDS)
        for h in irf.horizons:
            for iv in h.intervals:
                writer.writerow(
                    [
                        h.horizon,
                        iv.name,
                        repr(iv.estimate),
                        repr(iv.se),
                        repr(iv.ci_low),
                        repr(iv.ci_high),
                        repr(iv.p_value),
                        iv.stars,
                        h.n_obs,
                        h.n_entities,
                        h.n_periods,
                        repr(h.r_squared),
                    ]
                )


def read_irf(path: str) -> list[dict[str, object]]:
    """Read an impulse-response CSV back into typed row dicts."""
    out: list[dict[str, object]] = []
    rows = _open_rows(path)
    try:
        _, header = next(iter(rows))
    except StopIteration:
        raise DataError("file is empty", path=path) from None
    if tuple(h.strip() for h in header) != _IRF_FIELDS:
        raise DataError(f"unexpected header {header}", path=path, line=1)
    ints = {"horizon", "n_obs", "n_entities", "n_periods"}
    floats = {"estimate", "se", "ci_low", "ci_high", "p_value", "r_squared"}
    for line, row in rows:
        if not row:
            continue
        rec: dict[str, object] = {}
        for name, cell in zip(_IRF_FIELDS, row):
            if name in ints:
                rec[name] = _parse_int(cell, path, line, name)
            elif name in floats:
                rec[name] = float(cell)
            else:
                rec[name] = cell
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# fixed-point regression tables
# ---------------------------------------------------------------------------


def _fmt_est(value: float, stars: str) -> str:
    return f"{value:.3f}{stars}"


def _fmt_se(value: float) -> str:
    return f"({value:.3f})"


def write_regression_table(
    results: Sequence[tuple[str, RegressionResult]],
    path: str,
    title: str | None = None,
    conf_level: float = 0.95,
    dist: str = "t",
) -> None:
    """Render fitted regressions as an aligned fixed-point text table.

    One column per ``(label, result)`` pair.  Every coefficient row shows
    the estimate to three decimals with significance stars, and its
    clustered standard error parenthesized on the following line.  The
    footer reports observations, number of countries, number of years, and
    R-squared.  Columns absent from a fit (e.g. dropped as collinear) are
    left blank.
    """
    if not results:
        raise ConfigError("no results to tabulate")
    coef_order: list[str] = []
    for _, res in results:
        for c in res.columns:
            if c not in coef_order:
                coef_order.append(c)

    header = [""] + [label for label, _ in results]
    body: list[list[str]] = []
    for cname in coef_order:
        est_row = [cname]
        se_row = [""]
        for _, res in results:
            if cname in res.columns:
                iv = coefficient_interval(res, cname, conf_level, dist)
                est_row.append(_fmt_est(iv.estimate, iv.stars))
                se_row.append(_fmt_se(iv.se))
            else:
                est_row.append("")
                se_row.append("")
        body.append(est_row)
        body.append(se_row)

    footers = [
        ["Observations"] + [str(res.n_obs) for _, res in results],
        ["Number of countries"] + [str(res.n_entities) for _, res in results],
        ["Number of years"] + [str(res.n_periods) for _, res in results],
        ["R-Square"] + [f"{res.r_squared:.3f}" for _, res in results],
    ]

    rows = [header] + body + footers
    widths = [max(len(r[c]) for r in rows) for c in range(len(header))]
    sep = "  "
    rule = "-" * (sum(widths) + len(sep) * (len(widths) - 1))
    lines = []
    if title:
        lines.append(title)
    for idx, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])]
        cells += [cell.rjust(widths[c + 1]) for c, cell in enumerate(row[1:])]
        lines.append(sep.join(cells).rstrip())
        if idx == 0 or idx == len(rows) - 5:
            # under the header and between the last SE row and the footer
            lines.append(rule)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------


def load_config(path: str) -> dict[str, str]:
    """Parse a flat ``key = value`` config file.

    Blank lines and ``#`` comments are skipped; keys must be unique; a line
    without ``=`` is an error naming the line.  Values are returned as
    strings for the caller to interpret.
    """
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value', got {line!r}"
                    )
                key, _, value = line.partition("=")
                key = key.strip()
                value = value.strip()
                if not key:
                    raise ConfigError(f"{path}:{lineno}: empty key")
                if key in out:
                    raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
                out[key] = value
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return out


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
