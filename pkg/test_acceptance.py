"""
Tests for the acceptance rules.

The beta and gamma identities are the ones that make a composed rule
reversible: beta(x,y) p(x) pi(y|x) is symmetric in (x, y) and
gamma(W_x, W_y) W_y is symmetric in its two arguments.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acceptance import (
    ALWAYS_ACCEPT, F_BARKER, F_MIN, GENERALIZED, NOREF, AcceptanceForm, AcceptanceRule,
    BetaKind, BetaRule, GammaKind, GammaRule, acceptance_probability, alpha_composed,
    alpha_generalized, alpha_noref, auxiliary_log_ratio, composed, describe, eval_beta,
    eval_gamma, parse_acceptance,
)
from model_zoo import GaussianRandomWalk, IndependentGaussian, bimodal_target, lambda_from_text, lambda_one
from sampling_model import ConfigError, ContractViolation, InvalidBetaError

points = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)
weights = st.floats(min_value=1e-3, max_value=1.0, allow_nan=False)

TARGET = bimodal_target()
RW = GaussianRandomWalk(1.0)
TINY = lambda_from_text("const(1e-30)")

# Each beta with a lambda keeping it inside [0, 1] on [-3, 3]
BETAS = [
    BetaRule(BetaKind.BETA1),
    BetaRule(BetaKind.BETA2),
    BetaRule(BetaKind.BETA3, lam=lambda_from_text("const(0.7)")),
    BetaRule(BetaKind.BETA4, lam=lambda_one),
    BetaRule(BetaKind.BETA5, lam=TINY),
    BetaRule(BetaKind.BETA6, lam=TINY),
    BetaRule(BetaKind.BETA7, lam=TINY),
    BetaRule(BetaKind.GENERAL_F, F=F_BARKER),
    BetaRule(BetaKind.GENERAL_F, F=F_MIN),
]


def _log_flow(rule, x, y):
    """log of beta(x, y) p(x) pi(y|x)"""
    beta = eval_beta(rule, x, y, TARGET, RW)
    return np.log(beta) + TARGET.log_density(x) + RW.log_cond(y, x)


class TestBeta:

    @pytest.mark.parametrize("rule", BETAS, ids=lambda r: f"{r.kind.value}")
    @given(x=points, y=points)
    @settings(max_examples=60, deadline=None)
    def test_flow_is_symmetric(self, rule, x, y):
        assert _log_flow(rule, x, y) == pytest.approx(_log_flow(rule, y, x), abs=1e-9)

    @pytest.mark.parametrize("rule", BETAS, ids=lambda r: f"{r.kind.value}")
    @given(x=points, y=points)
    @settings(max_examples=30, deadline=None)
    def test_range(self, rule, x, y):
        assert 0.0 <= eval_beta(rule, x, y, TARGET, RW) <= 1.0

    def test_beta1_is_metropolis_hastings(self):
        value = eval_beta(BetaRule(BetaKind.BETA1), 0.3, 1.8, TARGET, RW)
        ratio = np.exp(TARGET.log_density(1.8) - TARGET.log_density(0.3))
        assert value == pytest.approx(min(1.0, ratio))

    def test_beta3_defaults_to_barker(self):
        rule = BetaRule(BetaKind.BETA3)
        assert rule.lam is lambda_one
        assert eval_beta(rule, 0.3, 1.8, TARGET, RW) == pytest.approx(
            eval_beta(BetaRule(BetaKind.BETA2), 0.3, 1.8, TARGET, RW))

    def test_zero_target_at_candidate_gives_zero(self, levy):
        assert eval_beta(BetaRule(BetaKind.BETA1), 1.0, -1.0, levy, RW) == 0.0

    def test_zero_target_at_current_state(self, levy):
        with pytest.raises(ContractViolation):
            eval_beta(BetaRule(BetaKind.BETA1), -1.0, 1.0, levy, RW)

    def test_asymmetric_lambda(self):
        rule = BetaRule(BetaKind.BETA4, lam=lambda a, b: 10.0 + float(a[0]) + 2.0 * float(b[0]))
        with pytest.raises(InvalidBetaError):
            eval_beta(rule, 0.5, 1.0, TARGET, RW)

    def test_lambda_too_large_leaves_unit_interval(self):
        rule = BetaRule(BetaKind.BETA5, lam=lambda_one)
        with pytest.raises(InvalidBetaError):
            eval_beta(rule, 3.0, -3.0, TARGET, RW)

    @given(x=points, y=points)
    @settings(max_examples=60, deadline=None)
    def test_general_beta_with_min_is_beta1(self, x, y):
        general = eval_beta(parse_acceptance("beta_general_gamma1", f="min").beta, x, y, TARGET, RW)
        assert abs(general - eval_beta(BetaRule(BetaKind.BETA1), x, y, TARGET, RW)) <= 1e-12

    def test_lambda_betas_need_lambda(self):
        with pytest.raises(ConfigError):
            BetaRule(BetaKind.BETA6)
        with pytest.raises(ConfigError):
            BetaRule(BetaKind.GENERAL_F)


class TestGamma:

    @pytest.mark.parametrize("kind", list(GammaKind))
    @given(w_x=weights, w_y=weights)
    def test_swap_identity(self, kind, w_x, w_y):
        rule = GammaRule(kind)
        swapped = eval_gamma(rule, w_y, w_x) * w_x
        assert eval_gamma(rule, w_x, w_y) * w_y == pytest.approx(swapped, abs=1e-15, rel=0)

    def test_values(self):
        assert eval_gamma(GammaRule(GammaKind.GAMMA1), 0.2, 0.5) == 0.2
        assert eval_gamma(GammaRule(GammaKind.GAMMA2), 0.2, 0.6) == pytest.approx(0.25)
        assert eval_gamma(GammaRule(GammaKind.GAMMA3), 0.2, 0.5) == pytest.approx(0.4)
        assert eval_gamma(GammaRule(GammaKind.GAMMA3), 0.5, 0.2) == 1.0

    def test_zero_selected_weight(self):
        with pytest.raises(ContractViolation):
            eval_gamma(GammaRule(GammaKind.GAMMA2), 0.5, 0.0)

    def test_weight_above_one(self):
        with pytest.raises(ContractViolation):
            eval_gamma(GammaRule(GammaKind.GAMMA1), 1.5, 0.5)


class TestAcceptanceFunctions:

    @pytest.mark.parametrize("F", [F_MIN, F_BARKER], ids=["min", "barker"])
    @given(t=st.floats(min_value=1e-6, max_value=1e6))
    def test_reciprocal_symmetry(self, F, t):
        assert F(t) == pytest.approx(t * F(1.0 / t), rel=1e-9)

    @pytest.mark.parametrize("F", [F_MIN, F_BARKER], ids=["min", "barker"])
    def test_log_form_matches(self, F):
        for t in (1e-3, 0.5, 1.0, 7.0):
            assert F.of_log_ratio(np.log(t)) == pytest.approx(F(t))

    def test_barker_does_not_overflow(self):
        assert F_BARKER.of_log_ratio(1000.0) == 1.0
        assert F_BARKER.of_log_ratio(-1000.0) == 0.0


class TestAlpha:

    @given(x=points, y=points)
    @settings(max_examples=50, deadline=None)
    def test_single_try_is_metropolis_hastings(self, x, y):
        alpha = alpha_generalized(x, y, 0, 1.0, 1.0, TARGET, RW)
        log_r = TARGET.log_density(y) - TARGET.log_density(x)
        assert alpha == pytest.approx(min(1.0, np.exp(log_r)))

    def test_generalized_weight_factor(self):
        base = alpha_generalized(1.0, 0.0, 0, 1.0, 1.0, TARGET, RW)
        assert base < 1.0
        assert alpha_generalized(1.0, 0.0, 0, 0.2, 0.8, TARGET, RW) == pytest.approx(base * 0.25)

    def test_zero_reference_weight(self):
        assert alpha_generalized(1.0, 0.5, 0, 0.0, 0.5, TARGET, RW) == 0.0

    def test_noref_equals_generalized_for_independent_proposals(self):
        props = [IndependentGaussian(mu=(0.0,), sigma=3.0)] * 3
        cands = np.array([[0.4], [2.5], [-1.0]])
        for k in range(3):
            a = alpha_noref(1.5, cands[k], k, cands, 0.3, 0.4, TARGET, props)
            b = alpha_generalized(1.5, cands[k], k, 0.3, 0.4, TARGET, props[k])
            assert a == pytest.approx(b)

    def test_noref_random_walk_includes_auxiliary_ratio(self):
        props = [RW] * 3
        cands = np.array([[0.4], [2.5], [-1.0]])
        x, k = np.array([1.5]), 1
        log_back = np.array([RW.log_cond(c, cands[k]) for c in cands])
        log_forth = np.array([RW.log_cond(c, x) for c in cands])
        aux = np.exp(auxiliary_log_ratio(log_back, log_forth, k))
        ratio = np.exp(TARGET.log_density(cands[k]) - TARGET.log_density(x))
        noref = alpha_noref(x, cands[k], k, cands, 0.3, 0.4, TARGET, props)
        assert aux != pytest.approx(1.0)
        assert noref == pytest.approx(min(1.0, ratio * 0.75 * aux))

    def test_composed_is_product(self):
        rule = composed(BetaKind.BETA2, GammaKind.GAMMA2)
        beta = eval_beta(rule.beta, 0.2, 1.1, TARGET, RW)
        gamma = eval_gamma(rule.gamma, 0.3, 0.6)
        assert alpha_composed(rule, 0.2, 1.1, 0.3, 0.6, TARGET, RW) == pytest.approx(beta * gamma)

    def test_dispatch(self):
        cands = np.array([[0.4], [1.0]])
        props = [RW, RW]
        assert acceptance_probability(ALWAYS_ACCEPT, 0.0, cands[1], 1, cands, 0.5, 0.5,
                                      TARGET, props) == 1.0
        assert acceptance_probability(GENERALIZED, 0.0, cands[1], 1, cands, 0.5, 0.5, TARGET, props) == \
            pytest.approx(alpha_generalized(0.0, cands[1], 1, 0.5, 0.5, TARGET, RW))

    def test_composed_requires_composed_rule(self):
        with pytest.raises(ContractViolation):
            alpha_composed(GENERALIZED, 0.0, 1.0, 0.5, 0.5, TARGET, RW)


class TestParsing:

    @pytest.mark.parametrize("text, form", [
        ("generalized", AcceptanceForm.GENERALIZED),
        ("NOREF", AcceptanceForm.NOREF),
        ("always", AcceptanceForm.ALWAYS_ACCEPT),
        ("beta1_gamma3", AcceptanceForm.COMPOSED),
        ("beta_general_gamma2", AcceptanceForm.COMPOSED),
    ])
    def test_forms(self, text, form):
        assert parse_acceptance(text).form == form

    def test_composed_identifier(self):
        rule = parse_acceptance("beta2_gamma3")
        assert rule.identifier == "beta2_gamma3"
        assert rule.draws_references
        assert not NOREF.draws_references

    def test_general_beta_uses_barker(self):
        rule = parse_acceptance("beta_general_gamma1")
        assert rule.beta.F is F_BARKER
        assert "barker" in describe(rule)

    def test_general_beta_function_is_selectable(self):
        rule = parse_acceptance("beta_general_gamma3", f="MIN")
        assert rule.beta.F is F_MIN
        assert "min" in describe(rule)
        assert parse_acceptance("beta_general_gamma3", f="barker").beta.F is F_BARKER

    def test_acceptance_function_errors(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_acceptance("beta_general_gamma1", f="logistic")
        assert excinfo.value.valid_ids == ["min", "barker"]
        with pytest.raises(ConfigError):
            parse_acceptance("beta1_gamma1", f="min")

    def test_lambda_is_parsed(self):
        rule = parse_acceptance("beta4_gamma3", lam="inv_dist(2)")
        assert rule.beta.lam(np.array([0.0]), np.array([1.0])) == pytest.approx(1.0)

    def test_unknown_identifier(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_acceptance("beta9_gamma1")
        assert "beta1_gamma1" in excinfo.value.valid_ids

    def test_missing_lambda(self):
        with pytest.raises(ConfigError):
            parse_acceptance("beta5_gamma2")

    def test_form_arguments_are_checked(self):
        with pytest.raises(ConfigError):
            AcceptanceRule(AcceptanceForm.GENERALIZED, beta=BetaRule(BetaKind.BETA1))
        with pytest.raises(ConfigError):
            AcceptanceRule(AcceptanceForm.COMPOSED, beta=BetaRule(BetaKind.BETA1))
