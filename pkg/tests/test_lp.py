"""Projection designs and the impulse-response driver."""

from __future__ import annotations

import numpy as np
import pytest

from panellp.errors import EmptySampleError, PanelLPError
from panellp.events import EventList, PandemicEvent
from panellp.lp import (
    GroupSpec,
    LPSpec,
    build_baseline_design,
    build_interaction_design,
    build_transition_design,
    build_transition_state,
    estimate_irf,
    pp_conversion,
    smooth_transition,
)
from panellp.panel import Panel, VariableSpec
from panellp.simgen import DGPSpec, generate


def sim_case(seed=3, **dgp_kw):
    base = dict(
        n_entities=30,
        n_periods=20,
        theta=(0.0, -0.03, -0.04, 0.0, 0.0, 0.0),
        shock_prob=0.12,
        seed=seed,
    )
    base.update(dgp_kw)
    panel, events, truth = generate(DGPSpec(**base))
    return panel, events, truth


def spec_y(**kw):
    base = dict(dependent=VariableSpec("y", transform="level"), horizons=3)
    base.update(kw)
    return LPSpec(**base)


# ---------------------------------------------------------------------------
# smooth transition weight
# ---------------------------------------------------------------------------


def test_transition_weight_frozen_values():
    assert smooth_transition(0.0, 1.5) == 0.5  # exact by symmetry
    assert smooth_transition(0.0, 0.7) == 0.5
    # F(z=1, sigma=1.5) = logistic(-1.5)
    assert smooth_transition(1.0, 1.5) == pytest.approx(
        0.18242552380635635, abs=1e-16
    )
    # deep recession z=-3: logistic(4.5)
    assert smooth_transition(-3.0, 1.5) == pytest.approx(
        0.9890130573694068, abs=1e-16
    )


def test_transition_weight_monotone_and_stable():
    z = np.linspace(-10, 10, 401)
    F = smooth_transition(z, 1.5)
    assert (np.diff(F) < 0).all()
    assert 0.0 <= F.min() and F.max() <= 1.0
    # far tails must not overflow
    assert smooth_transition(-1000.0, 1.5) == 1.0
    assert smooth_transition(1000.0, 1.5) == 0.0
    out = smooth_transition(np.array([0.0, np.nan]), 1.5)
    assert out[0] == 0.5 and np.isnan(out[1])
    with pytest.raises(PanelLPError):
        smooth_transition(0.0, 0.0)


def test_transition_state_standardizes_growth(rng):
    panel, _, _ = sim_case()
    state = build_transition_state(panel, "growth", sigma=1.5)
    vals = state.z[~np.isnan(state.z)]
    assert abs(vals.mean()) < 1e-12
    assert abs(vals.std(ddof=1) - 1.0) < 1e-12
    np.testing.assert_allclose(
        state.weight, smooth_transition(state.z, 1.5), equal_nan=True
    )
    # the original growth column is untouched
    assert "__z" not in panel.variables


def test_pp_conversion_matches_hand_product():
    got = pp_conversion(0.06, 32.3)
    assert got == 0.06 * 32.3
    assert 1.9 < got < 2.0


# ---------------------------------------------------------------------------
# spec validation
# ---------------------------------------------------------------------------


def test_spec_validation():
    dep = VariableSpec("y")
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, kind="fancy")
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, horizons=-1)
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, conf_level=1.0)
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, sigma=-2.0)
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, cluster="region")
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, kind="transition")  # no growth variable
    with pytest.raises(PanelLPError):
        LPSpec(dependent=dep, r2_mode="adjusted")
    assert LPSpec(dependent=dep, lag_order=0, dummy_lags=0).lag_order == 0


def test_group_spec():
    with pytest.raises(PanelLPError):
        GroupSpec("oecd", frozenset())
    g = GroupSpec("oecd", frozenset({"E00", "E02"}))
    p = Panel(["E00", "E01", "E02"], [2000, 2001], {"y": np.zeros((3, 2))})
    ind = g.indicator(p)
    np.testing.assert_array_equal(ind[:, 0], [1.0, 0.0, 1.0])
    np.testing.assert_array_equal(ind[:, 0], ind[:, 1])


# ---------------------------------------------------------------------------
# baseline design
# ---------------------------------------------------------------------------


def test_baseline_design_column_order():
    panel, events, _ = sim_case()
    spec = spec_y(controls=(VariableSpec("growth"),))
    d = build_baseline_design(panel, events, spec, k=1)
    assert d.columns == (
        "shock",
        "shock_lag_1",
        "shock_lag_2",
        "growth",
        "outcome_growth_lag_1",
        "outcome_growth_lag_2",
    )
    assert d.matrix.shape == (d.n_rows, 6)
    assert d.raw_response.shape == (d.n_rows,)


def test_baseline_design_without_fe_exposes_raw_columns():
    # with both FE off the design matrix is the raw listwise sample, so the
    # shock column must be exactly the 0/1 dummy
    panel, events, truth = sim_case()
    spec = spec_y(entity_fe=False, time_fe=False)
    d = build_baseline_design(panel, events, spec, k=2)
    shock_col = d.matrix[:, 0]
    assert set(np.unique(shock_col)) <= {0.0, 1.0}
    cells = {
        (ent, per) for ent, per in zip(d.entities, d.periods)
    }
    hits = {
        (ent, per)
        for (ent, per), s in zip(zip(d.entities, d.periods), shock_col)
        if s == 1.0
    }
    assert hits == set(truth.shock_cells) & cells
    # response equals the raw forward delta of y
    y = panel.column("y")
    for row in range(0, d.n_rows, 17):
        i = panel.entity_row(d.entities[row])
        j = panel.period_col(int(d.periods[row]))
        assert d.response[row] == pytest.approx(y[i, j + 2] - y[i, j])


def test_baseline_sample_shrinks_with_horizon():
    panel, events, _ = sim_case()
    irf = estimate_irf(panel, events, spec_y(horizons=4))
    ns = [h.n_obs for h in irf.horizons]
    assert all(a >= b for a, b in zip(ns, ns[1:]))
    # lags cost the first rows, horizons the last ones
    assert irf.horizons[0].n_obs == 30 * (20 - 3)
    assert irf.horizons[4].n_obs == 30 * (20 - 7)


def test_baseline_demeaned_design_is_group_centered():
    panel, events, _ = sim_case()
    d = build_baseline_design(panel, events, spec_y(), k=1)
    for col in range(d.matrix.shape[1]):
        vals = d.matrix[:, col]
        for ent in np.unique(d.entities):
            sel = d.entities == ent
            assert abs(vals[sel].mean()) < 1e-8
        for per in np.unique(d.periods):
            sel = d.periods == per
            assert abs(vals[sel].mean()) < 1e-8


def test_horizon_zero_response_is_identically_zero():
    panel, events, _ = sim_case()
    irf = estimate_irf(panel, events, spec_y(horizons=2))
    iv0 = irf.series("shock")[0]
    assert iv0.estimate == 0.0
    assert iv0.se == 0.0
    assert iv0.ci_low == 0.0 and iv0.ci_high == 0.0
    assert iv0.p_value == 1.0 and iv0.stars == ""
    assert irf.horizons[0].r_squared == 0.0


def test_empty_sample_reports_missing_counts():
    panel, events, _ = sim_case(n_periods=8)
    spec = spec_y()
    # horizon 7 on an 8-period panel: lags eat t < 3, the response eats the
    # rest, so the listwise sample is empty
    with pytest.raises(EmptySampleError, match="missing cells per variable"):
        build_baseline_design(panel, events, spec, k=7)
    # the driver names the first horizon that fails
    with pytest.raises(PanelLPError, match="horizon"):
        estimate_irf(panel, events, spec_y(horizons=7))


# ---------------------------------------------------------------------------
# estimation driver
# ---------------------------------------------------------------------------


def test_thread_pool_matches_serial_bitwise():
    panel, events, _ = sim_case()
    spec = spec_y(horizons=4)
    serial = estimate_irf(panel, events, spec, jobs=1)
    pooled = estimate_irf(panel, events, spec, jobs=4)
    for a, b in zip(serial.series("shock"), pooled.series("shock")):
        assert a.estimate == b.estimate
        assert a.se == b.se
        assert a.ci_low == b.ci_low and a.ci_high == b.ci_high


def test_irf_diagnostics_and_series_access():
    panel, events, _ = sim_case()
    irf = estimate_irf(panel, events, spec_y(horizons=2))
    assert irf.kind == "baseline"
    assert irf.series_names == ("shock",)
    assert len(irf.series("shock")) == 3
    assert irf.estimates("shock").shape == (3,)
    assert set(irf.diagnostics["demean_sweeps"]) == {0, 1, 2}
    with pytest.raises(PanelLPError, match="no series"):
        irf.series("ghost")


def test_dependent_log_transform_equals_prelogged_levels():
    panel, events, _ = sim_case()
    levels = panel.replace_column("y", np.exp(panel.column("y") / 10.0))
    logged = panel.replace_column("y", panel.column("y") / 10.0)
    via_transform = estimate_irf(
        levels,
        events,
        spec_y(dependent=VariableSpec("log_y", transform="log", source="y")),
    )
    direct = estimate_irf(logged, events, spec_y())
    np.testing.assert_allclose(
        via_transform.estimates("shock"),
        direct.estimates("shock"),
        atol=1e-12,
    )


def test_r2_modes_differ_but_share_estimates():
    panel, events, _ = sim_case()
    within = estimate_irf(panel, events, spec_y(horizons=1))
    overall = estimate_irf(panel, events, spec_y(horizons=1, r2_mode="overall"))
    assert within.estimates("shock")[1] == overall.estimates("shock")[1]
    r2w = within.horizons[1].r_squared
    r2o = overall.horizons[1].r_squared
    assert 0.0 <= r2w <= 1.0 and 0.0 <= r2o <= 1.0
    assert r2w != r2o


def test_severity_shock_dummy_selection():
    panel, events, _ = sim_case()
    # attach mortality so severity classes exist: spread values per event
    mortality = {}
    for ev in events.events:
        for i, ent in enumerate(ev.entities):
            mortality[(ev.name, ent)] = float(i + 1)
    events = EventList(events=events.events, mortality=mortality)
    full = estimate_irf(panel, events, spec_y(horizons=1))
    high = estimate_irf(panel, events, spec_y(horizons=1, shock_dummy="high"))
    assert high.estimates("shock")[1] != full.estimates("shock")[1]
    with pytest.raises(Exception, match="unknown shock dummy"):
        estimate_irf(panel, events, spec_y(shock_dummy="extreme"))


# ---------------------------------------------------------------------------
# interaction design
# ---------------------------------------------------------------------------


def test_interaction_requires_group():
    panel, events, _ = sim_case()
    with pytest.raises(PanelLPError, match="GroupSpec"):
        estimate_irf(panel, events, spec_y(kind="interaction"))


def test_interaction_columns_and_absorbed_membership():
    panel, events, _ = sim_case()
    group = GroupSpec("treated", frozenset(panel.entities[:15]))
    spec = spec_y(kind="interaction")
    d = build_interaction_design(panel, events, group, spec, k=1)
    assert d.columns[:3] == ("shock", "shock_x_group", "group")
    irf = estimate_irf(panel, events, spec, group=group)
    # time-invariant membership is absorbed by entity effects and dropped
    for h in irf.horizons:
        assert "group" in h.dropped_columns


def test_interaction_report_only_leaves_membership_out():
    panel, events, _ = sim_case()
    group = GroupSpec("treated", frozenset(panel.entities[:15]))
    spec = spec_y(kind="interaction", group_handling="report_only")
    d = build_interaction_design(panel, events, group, spec, k=1)
    assert "group" not in d.columns
    assert d.columns[:2] == ("shock", "shock_x_group")


def test_interaction_marginal_effect_identity():
    # effect_in - effect_outside must equal the product-term coefficient
    panel, events, _ = sim_case()
    group = GroupSpec("oecd", frozenset(panel.entities[:10]))
    irf = estimate_irf(panel, events, spec_y(kind="interaction"), group=group)
    assert irf.series_names == ("effect_outside_oecd", "effect_in_oecd")
    for h in irf.horizons:
        outside = h.interval("effect_outside_oecd")
        inside = h.interval("effect_in_oecd")
        omega = h.result.coefficient("shock_x_group")
        assert inside.estimate - outside.estimate == pytest.approx(
            omega, abs=1e-14
        )
        # outside effect is the shock coefficient itself
        assert outside.estimate == pytest.approx(
            h.result.coefficient("shock"), abs=1e-14
        )


def test_interaction_recovers_split_truths():
    # two different injected paths by group membership
    panel, events, truth = sim_case(
        seed=11, n_entities=60, n_periods=30, theta=(0.0, -0.04, 0.0)
    )
    # shift members' outcome so their response differs by a constant:
    # instead simulate via group injection: reuse theta for all, then the
    # product coefficient should be ~0
    group = GroupSpec("half", frozenset(panel.entities[:30]))
    irf = estimate_irf(
        panel, events, spec_y(kind="interaction", horizons=2), group=group
    )
    h1 = irf.horizons[1]
    omega = h1.result.coefficient("shock_x_group")
    se = h1.interval("effect_in_half").se + h1.interval("effect_outside_half").se
    assert abs(omega) < 4 * se  # no spurious group split


# ---------------------------------------------------------------------------
# transition design
# ---------------------------------------------------------------------------


def test_transition_columns_and_weight_split():
    panel, events, _ = sim_case()
    spec = spec_y(kind="transition", growth="growth", entity_fe=False, time_fe=False)
    state = build_transition_state(panel, "growth", spec.sigma, spec.z_scope)
    d = build_transition_design(panel, events, state, spec, k=1)
    assert d.columns == (
        "shock_recession",
        "shock_expansion",
        "shock_lag_1",
        "shock_lag_2",
        "outcome_growth_lag_1",
        "outcome_growth_lag_2",
        "growth_lag_1",
        "recession_weight_lag_1",
        "growth_lag_2",
        "recession_weight_lag_2",
    )
    rec = d.matrix[:, 0]
    exp_ = d.matrix[:, 1]
    # with FE off, the two weighted shocks sum back to the 0/1 dummy
    total = rec + exp_
    assert set(np.round(np.unique(total), 12)) <= {0.0, 1.0}
    hit = total == 1.0
    assert ((rec[hit] > 0.0) & (rec[hit] < 1.0)).all()


def test_transition_state_panel_mismatch():
    panel, events, _ = sim_case()
    other, _, _ = sim_case(n_entities=10)
    state = build_transition_state(other, "growth")
    with pytest.raises(PanelLPError, match="different panel"):
        build_transition_design(
            panel, events, state, spec_y(kind="transition", growth="growth"), 1
        )


def test_transition_estimates_both_series():
    panel, events, _ = sim_case(
        seed=5,
        n_entities=80,
        n_periods=30,
        theta=(0.0,),
        theta_recession=(0.0, -0.05, -0.05),
        theta_expansion=(0.0, 0.02, 0.02),
        error_rho=0.0,
        ar_coef=0.0,
    )
    irf = estimate_irf(
        panel, events, spec_y(kind="transition", growth="growth", horizons=2)
    )
    assert irf.series_names == ("shock_recession", "shock_expansion")
    rec = irf.estimates("shock_recession")
    exp_ = irf.estimates("shock_expansion")
    assert rec[0] == 0.0 and exp_[0] == 0.0
    assert rec[1] < exp_[1]
    assert rec[2] < exp_[2]
