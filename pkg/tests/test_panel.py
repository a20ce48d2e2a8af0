"""Panel container, shift/value transforms, and two-way demeaning."""

from __future__ import annotations

import numpy as np
import pytest

from panellp.errors import (
    DegenerateVariableError,
    MissingVariableError,
    PanelLPError,
)
from panellp.panel import (
    Panel,
    VariableSpec,
    add_lag,
    apply_variable_spec,
    first_difference,
    horizon_delta,
    log_column,
    per_capita,
    scale_column,
    standardize,
    two_way_demean,
)

from conftest import balanced_panel, punch_holes


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def test_construction_and_introspection():
    p = Panel(
        ["AAA", "BBB"],
        [2000, 2001, 2002],
        {"y": [[1.0, 2.0, 3.0], [4.0, np.nan, 6.0]]},
    )
    assert p.entities == ("AAA", "BBB")
    assert p.periods == (2000, 2001, 2002)
    assert p.variables == ("y",)
    assert p.n_entities == 2 and p.n_periods == 3
    assert "y" in p and "z" not in p
    assert p.missing_count("y") == 1
    assert p.entity_row("BBB") == 1
    assert p.period_col(2002) == 2


def test_construction_rejects_bad_shapes_and_values():
    with pytest.raises(PanelLPError):
        Panel([], [2000], {})
    with pytest.raises(PanelLPError):
        Panel(["A"], [], {})
    with pytest.raises(PanelLPError):
        Panel(["A", "A"], [2000], {})
    with pytest.raises(PanelLPError):
        Panel(["A"], [2000, 2002], {})  # gap in the period axis
    with pytest.raises(PanelLPError):
        Panel(["A"], [2000, 2001], {"y": [[1.0, np.inf]]})
    with pytest.raises(PanelLPError):
        Panel(["A"], [2000, 2001], {"y": [[1.0, 2.0, 3.0]]})


def test_columns_are_read_only():
    p = Panel(["A"], [2000, 2001], {"y": [[1.0, 2.0]]})
    with pytest.raises(ValueError):
        p.column("y")[0, 0] = 9.0


def test_missing_variable_error_names_candidates():
    p = Panel(["A"], [2000], {"y": [[1.0]]})
    with pytest.raises(MissingVariableError, match="'z'"):
        p.column("z")


def test_with_column_collision_and_replace():
    p = Panel(["A"], [2000, 2001], {"y": [[1.0, 2.0]]})
    q = p.with_column("x", [[5.0, 6.0]])
    assert q.variables == ("y", "x")
    assert p.variables == ("y",)  # original untouched
    with pytest.raises(PanelLPError):
        q.with_column("x", [[0.0, 0.0]])
    r = q.replace_column("x", [[7.0, 8.0]])
    assert r.column("x")[0, 1] == 8.0
    with pytest.raises(MissingVariableError):
        p.replace_column("nope", [[0.0, 0.0]])


def test_from_records_spans_full_period_range():
    p = Panel.from_records(
        [
            ("B", 2003, {"y": 1.0}),
            ("A", 2000, {"y": 2.0, "x": 3.0}),
            ("A", 2002, {"y": None}),
        ]
    )
    assert p.entities == ("B", "A")  # first-appearance order
    assert p.periods == (2000, 2001, 2002, 2003)
    assert p.variables == ("y", "x")
    assert p.column("y")[1, 0] == 2.0
    assert np.isnan(p.column("y")[1, 2])  # explicit None stays missing
    assert np.isnan(p.column("x")[0, 3])


def test_period_gaps_reports_interior_holes_only():
    y = np.array([[1.0, np.nan, 3.0, np.nan], [np.nan, 2.0, 3.0, 4.0]])
    p = Panel(["A", "B"], [2000, 2001, 2002, 2003], {"y": y})
    gaps = p.period_gaps()
    assert gaps == {"A": (2001,)}  # trailing/leading missing is not a gap


# ---------------------------------------------------------------------------
# shift transforms
# ---------------------------------------------------------------------------


def test_lag_never_crosses_entities(rng):
    p = balanced_panel(rng, n_entities=3, n_periods=5)
    q = add_lag(p, "y", 2)
    lag = q.column("y_lag_2")
    assert np.isnan(lag[:, :2]).all()
    np.testing.assert_array_equal(lag[:, 2:], p.column("y")[:, :-2])


def test_lag_requires_positive_order(rng):
    p = balanced_panel(rng)
    with pytest.raises(PanelLPError):
        add_lag(p, "y", 0)


def test_horizon_delta_matches_direct_subtraction(rng):
    p = balanced_panel(rng, n_periods=8)
    q = horizon_delta(p, "y", 3)
    d = q.column("y_h3")
    y = p.column("y")
    np.testing.assert_allclose(d[:, :-3], y[:, 3:] - y[:, :-3])
    assert np.isnan(d[:, -3:]).all()


def test_horizon_zero_is_identically_zero_where_observed(rng):
    p = punch_holes(balanced_panel(rng), rng, frac=0.2)
    q = horizon_delta(p, "y", 0)
    d = q.column("y_h0")
    ok = ~np.isnan(p.column("y"))
    assert (d[ok] == 0.0).all()
    assert np.isnan(d[~ok]).all()


def test_horizon_deltas_telescope(rng):
    # (y[t+2] - y[t]) == (y[t+1] - y[t]) + (y[t+2] - y[t+1]) shifted
    p = balanced_panel(rng, n_periods=10)
    q = horizon_delta(horizon_delta(p, "y", 1), "y", 2)
    h1 = q.column("y_h1")
    h2 = q.column("y_h2")
    lhs = h2[:, :-2]
    rhs = h1[:, :-2] + h1[:, 1:-1]
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_first_difference_aligns_with_lag(rng):
    p = balanced_panel(rng)
    q = first_difference(p, "y")
    d = q.column("y_diff")
    y = p.column("y")
    np.testing.assert_allclose(d[:, 1:], np.diff(y, axis=1))
    assert np.isnan(d[:, 0]).all()


# ---------------------------------------------------------------------------
# value transforms
# ---------------------------------------------------------------------------


def test_standardize_pooled_moments(rng):
    p = punch_holes(balanced_panel(rng), rng)
    q = standardize(p, "y", out="z")
    z = q.column("z")
    vals = z[~np.isnan(z)]
    assert abs(vals.mean()) < 1e-12
    assert abs(vals.std(ddof=1) - 1.0) < 1e-12


def test_standardize_is_idempotent(rng):
    p = balanced_panel(rng)
    once = standardize(p, "y")
    twice = standardize(once, "y")
    np.testing.assert_allclose(
        twice.column("y"), once.column("y"), atol=1e-12
    )


def test_standardize_entity_scope(rng):
    p = balanced_panel(rng, n_entities=4)
    q = standardize(p, "y", scope="entity")
    z = q.column("y")
    for i in range(4):
        assert abs(z[i].mean()) < 1e-12
        assert abs(z[i].std(ddof=1) - 1.0) < 1e-12


def test_standardize_zero_variance_raises():
    p = Panel(["A", "B"], [2000, 2001], {"y": np.ones((2, 2))})
    with pytest.raises(DegenerateVariableError):
        standardize(p, "y")


def test_log_column_counts_nonpositive_cells():
    p = Panel(["A"], [2000, 2001, 2002], {"y": [[1.0, 0.0, -3.0]]})
    q, bad = log_column(p, "y")
    assert bad == 2
    assert q.column("log_y")[0, 0] == 0.0
    assert np.isnan(q.column("log_y")[0, 1:]).all()


def test_per_capita_log_spec_round_trip():
    p = Panel(
        ["A"],
        [2000, 2001],
        {"emis": [[20.0, 30.0]], "pop": [[10.0, 0.0]]},
    )
    spec = VariableSpec(
        "log_pc", transform="per_capita_log", source="emis", population="pop"
    )
    q, bad = apply_variable_spec(p, spec)
    assert bad == 0  # zero population is missing, not a log error
    assert abs(q.column("log_pc")[0, 0] - np.log(2.0)) < 1e-15
    assert np.isnan(q.column("log_pc")[0, 1])
    assert "__pc_log_pc" not in q.variables  # scratch column dropped


def test_scale_column_multiplies_in_place():
    p = Panel(["A"], [2000, 2001], {"y": [[2.0, np.nan]]})
    q = scale_column(p, "y", 3.667)
    assert q.column("y")[0, 0] == 2.0 * 3.667
    assert np.isnan(q.column("y")[0, 1])


def test_variable_spec_src_defaults_to_name():
    assert VariableSpec("y").src == "y"
    assert VariableSpec("log_y", transform="log", source="y").src == "y"
    with pytest.raises(PanelLPError):
        VariableSpec("y", transform="cube")
    with pytest.raises(PanelLPError):
        VariableSpec("y", transform="per_capita_log")


def test_per_capita_guards_population():
    p = Panel(
        ["A"],
        [2000, 2001, 2002],
        {"v": [[1.0, 2.0, 3.0]], "pop": [[2.0, np.nan, -1.0]]},
    )
    q = per_capita(p, "v", "pop", "v_pc")
    got = q.column("v_pc")
    assert got[0, 0] == 0.5
    assert np.isnan(got[0, 1]) and np.isnan(got[0, 2])


# ---------------------------------------------------------------------------
# two-way demeaning
# ---------------------------------------------------------------------------


def test_demeaned_balanced_panel_matches_closed_form(rng):
    # on a balanced panel the within transform has an exact closed form:
    # x - entity mean - period mean + grand mean
    p = balanced_panel(rng, n_entities=5, n_periods=7)
    q = two_way_demean(p, ["y"])
    y = p.column("y")
    expect = (
        y
        - y.mean(axis=1, keepdims=True)
        - y.mean(axis=0, keepdims=True)
        + y.mean()
    )
    np.testing.assert_allclose(q.column("y"), expect, atol=1e-9)


def test_demeaned_groups_are_orthogonal(rng):
    p = punch_holes(balanced_panel(rng, n_entities=8, n_periods=10), rng)
    q = two_way_demean(p, ["y", "x"], tolerance=1e-12)
    mask = p.present_mask(["y", "x"])
    for name in ("y", "x"):
        z = q.column(name)
        ent_idx, per_idx = np.nonzero(mask)
        vals = z[mask]
        for code in range(p.n_entities):
            sel = ent_idx == code
            if sel.any():
                assert abs(vals[sel].mean()) < 1e-10
        for code in range(p.n_periods):
            sel = per_idx == code
            if sel.any():
                assert abs(vals[sel].mean()) < 1e-10


def test_demeaning_is_a_projection(rng):
    # applying the within transform twice changes nothing
    p = punch_holes(balanced_panel(rng), rng)
    once = two_way_demean(p, ["y"], tolerance=1e-13)
    twice = two_way_demean(once, ["y"], tolerance=1e-13)
    mask = ~np.isnan(once.column("y"))
    np.testing.assert_allclose(
        twice.column("y")[mask], once.column("y")[mask], atol=1e-9
    )


def test_demean_entity_only_and_time_only(rng):
    p = balanced_panel(rng)
    e = two_way_demean(p, ["y"], time_fe=False)
    t = two_way_demean(p, ["y"], entity_fe=False)
    np.testing.assert_allclose(
        e.column("y"),
        p.column("y") - p.column("y").mean(axis=1, keepdims=True),
        atol=1e-12,
    )
    np.testing.assert_allclose(
        t.column("y"),
        p.column("y") - p.column("y").mean(axis=0, keepdims=True),
        atol=1e-12,
    )


def test_demean_no_fe_is_identity(rng):
    p = balanced_panel(rng)
    q = two_way_demean(p, ["y"], entity_fe=False, time_fe=False)
    np.testing.assert_array_equal(q.column("y"), p.column("y"))


def test_demean_respects_joint_sample(rng):
    # cells outside the joint mask come back missing even if observed
    p = balanced_panel(rng, n_entities=3, n_periods=6)
    x = p.column("x").copy()
    x[0, 0] = np.nan
    p = p.replace_column("x", x)
    q = two_way_demean(p, ["y", "x"])
    assert np.isnan(q.column("y")[0, 0])


def test_demean_empty_joint_sample_raises(rng):
    p = balanced_panel(rng, n_entities=2, n_periods=3)
    y = np.full((2, 3), np.nan)
    p = p.replace_column("y", y)
    with pytest.raises(PanelLPError):
        two_way_demean(p, ["y", "x"])
