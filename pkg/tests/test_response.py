"""Graduated response: band classification, alerts, gating, transitions."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from swarmgov.metrics import (
    IrreversibilityLedger,
    LedgerEntry,
    NormalizationConfig,
    RawMetrics,
    normalize,
)
from swarmgov.response import (
    ActionRequest,
    AuthorizationToken,
    IncidentState,
    ResponseLevel,
    ThresholdConfig,
    Verdict,
    classify,
    evaluate_alerts,
    gate_action,
    transition,
)

CONFIG = NormalizationConfig(cir_target=0.6, edi_max=0.5, i_b=5.0, sf_max=30.0)


def vector(**overrides: float):
    values = {"n1": 1.0, "n2": 1.0, "n3": 1.0, "n4": 1.0, "n5": 1.0, "n6": 1.0}
    values.update(overrides)
    return normalize(
        RawMetrics(
            ias=values["n1"],
            cir=values["n2"] * CONFIG.cir_target,
            edi=(1.0 - values["n3"]) * CONFIG.edi_max,
            i_c=(1.0 - values["n4"]) * CONFIG.i_b,
            sf=(1.0 - values["n5"]) * CONFIG.sf_max,
            scs=values["n6"],
        ),
        CONFIG,
    )


class TestClassify:
    @pytest.mark.parametrize(
        "cqs,level",
        [
            (0.92, ResponseLevel.NORMAL),
            (0.86, ResponseLevel.NORMAL),
            (0.81, ResponseLevel.NORMAL),
            (0.8, ResponseLevel.ELEVATED),
            (0.71, ResponseLevel.ELEVATED),
            (0.64, ResponseLevel.ELEVATED),
            (0.6, ResponseLevel.ELEVATED),
            (0.58, ResponseLevel.RESTRICTED),
            (0.4, ResponseLevel.RESTRICTED),
            (0.39, ResponseLevel.MINIMAL),
            (0.2, ResponseLevel.MINIMAL),
            (0.19, ResponseLevel.SAFE_STATE),
            (0.0, ResponseLevel.SAFE_STATE),
            (1.0, ResponseLevel.NORMAL),
        ],
    )
    def test_band_assignment(self, cqs, level):
        assert classify(cqs) is level

    def test_out_of_range_scores_rejected(self):
        with pytest.raises(ValueError):
            classify(-0.01)
        with pytest.raises(ValueError):
            classify(1.01)

    @given(st.floats(min_value=0.0, max_value=1.0))
    def test_every_score_lands_in_exactly_one_band(self, cqs):
        assert classify(cqs) in ResponseLevel


class TestAlerts:
    def test_064_divergence_does_not_alert(self):
        alerts = evaluate_alerts(vector(n3=0.64), ThresholdConfig())
        assert alerts == []

    def test_058_divergence_alerts(self):
        alerts = evaluate_alerts(vector(n3=0.58), ThresholdConfig())
        assert [a.metric for a in alerts] == ["n3"]
        assert alerts[0].threshold == pytest.approx(0.6)

    def test_budget_alert_below_03(self):
        alerts = evaluate_alerts(vector(n4=0.29), ThresholdConfig())
        assert [a.metric for a in alerts] == ["n4"]

    def test_exact_threshold_value_does_not_alert(self):
        assert evaluate_alerts(vector(n2=0.6), ThresholdConfig()) == []

    def test_multiple_breaches_alert_once_each(self):
        alerts = evaluate_alerts(vector(n1=0.5, n6=0.5), ThresholdConfig())
        assert sorted(a.metric for a in alerts) == ["n1", "n6"]

    def test_jitter_is_deterministic_and_bounded(self):
        config = ThresholdConfig(jitter={"n3": 0.05})
        seen = set()
        for tick in range(50):
            a = config.effective_threshold("n3", seed=7, tick=tick)
            b = config.effective_threshold("n3", seed=7, tick=tick)
            assert a == b
            assert 0.55 <= a <= 0.65
            seen.add(a)
        assert len(seen) > 1

    def test_different_seeds_draw_different_jitter(self):
        config = ThresholdConfig(jitter={"n3": 0.05})
        a = config.effective_threshold("n3", seed=1, tick=0)
        b = config.effective_threshold("n3", seed=2, tick=0)
        assert a != b

    def test_invalid_thresholds_rejected(self):
        with pytest.raises(ValueError):
            ThresholdConfig(thresholds={"n7": 0.5})
        with pytest.raises(ValueError):
            ThresholdConfig(thresholds={"n1": 1.5})


def ledger(consumed: float, budget: float = 5.0) -> IrreversibilityLedger:
    led = IrreversibilityLedger(budget=budget)
    step = 1
    remaining = consumed
    while remaining > 1e-12:
        iota = min(1.0, remaining)
        led.append(LedgerEntry(step, f"seed-{step}", iota))
        remaining -= iota
        step += 1
    return led


class TestGate:
    def test_normal_within_budget_allows(self):
        decision = gate_action(
            ResponseLevel.NORMAL, ActionRequest("a", 0.2), ledger(1.0)
        )
        assert decision.verdict is Verdict.ALLOW

    def test_budget_crossing_requires_authorization(self):
        decision = gate_action(
            ResponseLevel.NORMAL, ActionRequest("a", 0.2), ledger(4.9)
        )
        assert decision.verdict is Verdict.REQUIRE_AUTHORIZATION
        assert decision.reason == "budget-exhausted"

    def test_budget_crossing_with_token_allows(self):
        decision = gate_action(
            ResponseLevel.NORMAL,
            ActionRequest("a", 0.2),
            ledger(4.9),
            authorization=AuthorizationToken("tok-1", "a"),
        )
        assert decision.verdict is Verdict.ALLOW

    def test_token_for_other_action_does_not_authorize(self):
        decision = gate_action(
            ResponseLevel.NORMAL,
            ActionRequest("a", 0.2),
            ledger(4.9),
            authorization=AuthorizationToken("tok-1", "b"),
        )
        assert decision.verdict is Verdict.REQUIRE_AUTHORIZATION

    def test_elevated_behaves_like_normal_for_budget(self):
        decision = gate_action(
            ResponseLevel.ELEVATED, ActionRequest("a", 0.5), ledger(1.0)
        )
        assert decision.verdict is Verdict.ALLOW

    def test_restricted_allows_reversible_only(self):
        allow = gate_action(ResponseLevel.RESTRICTED, ActionRequest("a", 0.0), ledger(1.0))
        reject = gate_action(ResponseLevel.RESTRICTED, ActionRequest("b", 0.2), ledger(1.0))
        assert allow.verdict is Verdict.ALLOW
        assert reject.verdict is Verdict.REJECT

    def test_restricted_rejects_even_with_token(self):
        decision = gate_action(
            ResponseLevel.RESTRICTED,
            ActionRequest("a", 0.2),
            ledger(1.0),
            authorization=AuthorizationToken("tok-1", "a"),
        )
        assert decision.verdict is Verdict.REJECT

    def test_minimal_requires_authorization_for_everything(self):
        decision = gate_action(ResponseLevel.MINIMAL, ActionRequest("a", 0.0), ledger(1.0))
        assert decision.verdict is Verdict.REQUIRE_AUTHORIZATION

    def test_minimal_rejects_irreversible_non_self_preservation(self):
        decision = gate_action(ResponseLevel.MINIMAL, ActionRequest("a", 0.3), ledger(1.0))
        assert decision.verdict is Verdict.REJECT

    def test_minimal_self_preservation_waits_for_authorization(self):
        pending = gate_action(
            ResponseLevel.MINIMAL,
            ActionRequest("evade", 0.3, self_preservation=True),
            ledger(1.0),
        )
        assert pending.verdict is Verdict.REQUIRE_AUTHORIZATION
        allowed = gate_action(
            ResponseLevel.MINIMAL,
            ActionRequest("evade", 0.3, self_preservation=True),
            ledger(1.0),
            authorization=AuthorizationToken("tok-1", "evade"),
        )
        assert allowed.verdict is Verdict.ALLOW

    def test_safe_state_rejects_everything(self):
        for iota in (0.0, 0.5):
            decision = gate_action(
                ResponseLevel.SAFE_STATE,
                ActionRequest("a", iota, self_preservation=True),
                ledger(0.0),
                authorization=AuthorizationToken("tok-1", "a"),
            )
            assert decision.verdict is Verdict.REJECT

    @given(
        st.sampled_from(list(ResponseLevel)),
        st.floats(min_value=0.0, max_value=1.0),
        st.booleans(),
        st.floats(min_value=0.0, max_value=6.0),
        st.booleans(),
    )
    def test_gate_is_pure_and_total(self, level, iota, self_pres, consumed, with_token):
        action = ActionRequest("a", iota, self_preservation=self_pres)
        token = AuthorizationToken("tok", "a") if with_token else None
        led = ledger(consumed)
        first = gate_action(level, action, led, token)
        second = gate_action(level, action, led, token)
        assert first == second
        assert first.verdict in Verdict
        # Restriction table: no irreversible action passes below Elevated
        # without authorization, and SafeState never passes anything.
        if level is ResponseLevel.SAFE_STATE:
            assert first.verdict is Verdict.REJECT
        if level is ResponseLevel.RESTRICTED and iota > 0.0:
            assert first.verdict is Verdict.REJECT
        if level is ResponseLevel.MINIMAL and first.verdict is Verdict.ALLOW:
            assert with_token


class TestTransition:
    def test_pigr_flag_on_first_dip_below_trigger(self):
        result = transition(
            ResponseLevel.ELEVATED, vector(n3=0.58), ThresholdConfig()
        )
        assert result.level is ResponseLevel.RESTRICTED
        kinds = [d.kind for d in result.events]
        assert "pigr-flag" in kinds
        assert "level-transition" in kinds
        assert result.incident.active

    def test_no_duplicate_pigr_flag_inside_incident(self):
        incident = IncidentState(active=True)
        result = transition(
            ResponseLevel.RESTRICTED, vector(n3=0.58), ThresholdConfig(), incident
        )
        assert all(d.kind != "pigr-flag" for d in result.events)

    def test_deescalation_is_immediate(self):
        result = transition(
            ResponseLevel.RESTRICTED, vector(n3=0.82, n4=0.71), ThresholdConfig(),
            IncidentState(active=True),
        )
        assert result.level is ResponseLevel.ELEVATED
        assert not result.incident.active

    def test_no_transition_event_when_level_unchanged(self):
        result = transition(ResponseLevel.NORMAL, vector(n3=0.86), ThresholdConfig())
        assert result.level is ResponseLevel.NORMAL
        assert all(d.kind != "level-transition" for d in result.events)

    def test_alert_payload_carries_metric_value_threshold(self):
        result = transition(ResponseLevel.NORMAL, vector(n4=0.29), ThresholdConfig())
        alerts = [d for d in result.events if d.kind == "alert"]
        assert len(alerts) == 1
        assert alerts[0].payload["metric"] == "n4"
        assert alerts[0].payload["threshold"] == pytest.approx(0.3)
