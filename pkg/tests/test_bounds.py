import math

import numpy as np
import pytest

from seqpred.bounds import (
    B_RULES,
    BoundCheckResult,
    InequalityPoint,
    check_convergence_bounds,
    check_finite_loss_plateau,
    check_instant_bounds,
    check_instant_distance_bounds,
    check_logloss_identity,
    check_loss_bounds,
    grid_verify_proof_inequalities,
    proof_inequality_values,
)
from seqpred.distances import instant_distances
from seqpred.engine import HistoryRecord, exact_evaluate, monte_carlo_evaluate
from seqpred.losses import ErrorLoss, LogLoss, MatrixLoss, QuadraticLoss
from seqpred.measures import BernoulliMeasure, DeterministicMeasure
from seqpred.mixture import MixtureModel
from seqpred.schemes import ConstantScheme, MajorityVoteScheme


@pytest.fixture(scope="module")
def three_coin_report():
    mix = MixtureModel([BernoulliMeasure(0.2), BernoulliMeasure(0.5), BernoulliMeasure(0.8)],
                       [1 / 3, 1 / 3, 1 - 2 / 3])
    return exact_evaluate(mix, 0, [ErrorLoss(), QuadraticLoss(), LogLoss()], 10,
                          schemes=[ConstantScheme(0), MajorityVoteScheme(2)],
                          collect_records=True)


@pytest.fixture(scope="module")
def collapse_report():
    mix = MixtureModel([BernoulliMeasure(0.0), BernoulliMeasure(1.0)], [0.5, 0.5])
    return exact_evaluate(mix, 1, [ErrorLoss(), LogLoss()], 12, collect_records=True)


@pytest.fixture(scope="module")
def plateau_report():
    mix = MixtureModel([DeterministicMeasure.from_pattern([0, 1]), BernoulliMeasure(0.5)],
                       [0.1, 0.9])
    return exact_evaluate(mix, 0, [MatrixLoss([[0, 1], [3, 0]]), LogLoss()], 30,
                          collect_records=True)


class TestResultSemantics:
    def test_pass_iff_slack_above_negative_tolerance(self):
        assert BoundCheckResult("x", 1.0, 2.0, 1e-9).passed
        assert BoundCheckResult("x", 1.0, 1.0 - 5e-10, 1e-9).passed
        assert not BoundCheckResult("x", 1.0, 1.0 - 5e-9, 1e-9).passed

    def test_line_and_dict(self):
        r = BoundCheckResult("some-bound", 1.0, 2.0, 1e-9, location="t=3")
        assert r.line().startswith("PASS  some-bound:")
        assert "t=3" in r.line()
        d = r.to_dict()
        assert d["pass"] and d["slack"] == 1.0 and d["bound_id"] == "some-bound"


class TestConvergenceChecks:
    def test_all_pass_on_three_coins(self, three_coin_report):
        results = check_convergence_bounds(three_coin_report)
        assert all(r.passed for r in results)
        by_id = {r.bound_id: r for r in results}
        assert by_id["kl-total<=log-inv-weight"].rhs == pytest.approx(math.log(3), abs=1e-12)
        assert by_id["kl-total<=log-inv-weight"].slack > 0.3  # strictly positive slack
        assert by_id["kl-telescoping-identity"].lhs <= 1e-9

    def test_collapse_bound_is_tight(self, collapse_report):
        by_id = {r.bound_id: r for r in check_convergence_bounds(collapse_report)}
        entropy = by_id["kl-total<=log-inv-weight"]
        assert entropy.passed
        assert abs(entropy.slack) <= 1e-12  # equality witness

    def test_single_component_trivial(self):
        mix = MixtureModel([BernoulliMeasure(0.4)], [1.0])
        rep = exact_evaluate(mix, 0, [ErrorLoss()], 5)
        for r in check_convergence_bounds(rep):
            assert r.passed

    def test_entropy_slack_non_increasing_in_horizon(self, three_coin_report):
        cap = three_coin_report.log_inv_true_weight
        slack = cap - three_coin_report.cumulative["kl"]
        assert (np.diff(slack) <= 1e-15).all()

    def test_deviation_count_matches_manual_count(self, three_coin_report):
        eps = 0.2
        results = check_convergence_bounds(three_coin_report, deviation_epsilon=eps)
        dev = [r for r in results if r.bound_id == "deviation-count"][0]
        manual = int((three_coin_report.per_step["square"] > eps**2).sum())
        assert dev.lhs == manual
        assert dev.rhs == pytest.approx(three_coin_report.total("kl") / eps**2, abs=1e-12)

    def test_statistical_mode_widens_tolerances(self):
        mix = MixtureModel([BernoulliMeasure(0.2), BernoulliMeasure(0.8)], [0.5, 0.5])
        mc = monte_carlo_evaluate(mix, 0, [ErrorLoss()], 6, samples=500, seed=11)
        results = check_convergence_bounds(mc)
        assert all(r.mode == "statistical" for r in results)
        assert all(r.passed for r in results)
        assert any(r.tolerance > 1e-9 for r in results)


class TestLossChecks:
    def test_all_pass_on_three_coins(self, three_coin_report):
        for label in ("error", "quadratic"):
            results = check_loss_bounds(three_coin_report, label)
            assert all(r.passed for r in results), [r.line() for r in results if not r.passed]

    def test_regret_chain_values(self, three_coin_report):
        by_id = {r.bound_id: r for r in check_loss_bounds(three_coin_report, "error")}
        gap = (three_coin_report.total("mixture_loss[error]")
               - three_coin_report.total("informed_loss[error]"))
        assert gap >= 0
        kl = three_coin_report.total("kl")
        l_inf = three_coin_report.total("informed_loss[error]")
        form1 = kl + math.sqrt(4 * l_inf * kl + kl * kl)
        assert by_id["regret-bound-sqrt-form[error]"].rhs == pytest.approx(form1, abs=1e-12)
        assert by_id["regret-bound-form-chain[error]"].passed

    def test_alternative_scheme_certificates(self, three_coin_report):
        by_id = {r.bound_id: r for r in check_loss_bounds(three_coin_report, "error")}
        for scheme in ("constant-0", "majority-vote"):
            assert by_id[f"informed-optimality[error|{scheme}]"].passed
            assert by_id[f"no-scheme-much-better[error|{scheme}]"].passed

    def test_unbounded_loss_routed_away(self, three_coin_report):
        with pytest.raises(ValueError, match="unbounded"):
            check_loss_bounds(three_coin_report, "log")

    def test_logloss_identity_exact(self, three_coin_report, collapse_report):
        assert check_logloss_identity(three_coin_report, "log").lhs <= 1e-9
        r = check_logloss_identity(collapse_report, "log")
        assert r.passed
        # both sides equal log 2 on the collapse preset
        gap = (collapse_report.total("mixture_loss[log]")
               - collapse_report.total("informed_loss[log]"))
        assert gap == pytest.approx(math.log(2), abs=1e-12)

    def test_trivial_mixture_has_zero_gap(self):
        mix = MixtureModel([BernoulliMeasure(0.4)], [1.0])
        rep = exact_evaluate(mix, 0, [ErrorLoss()], 5)
        results = check_loss_bounds(rep, "error")
        assert all(r.passed for r in results)
        by_id = {r.bound_id: r for r in results}
        assert by_id["regret-nonneg[error]"].slack == pytest.approx(0.0, abs=1e-15)


class TestPlateauChecks:
    def test_finite_loss_cap_and_plateau(self, plateau_report):
        results = check_loss_bounds(plateau_report, "matrix")
        by_id = {r.bound_id: r for r in results}
        cap = by_id["finite-loss-cap[matrix]"]
        assert cap.passed
        assert cap.rhs == pytest.approx(2 * math.log(10), abs=1e-12)
        # the rescaled asymmetric loss plateaus at exactly 2/3
        assert cap.lhs == pytest.approx(2 / 3, abs=1e-12)
        plate = by_id["loss-plateau[matrix]"]
        assert plate.passed
        assert plate.lhs == 0.0  # increments vanish exactly once the posterior locks on

    def test_plateau_emitted_only_for_deterministic_truth(self, three_coin_report):
        ids = [r.bound_id for r in check_loss_bounds(three_coin_report, "error")]
        assert not any(i.startswith("finite-loss-cap") for i in ids)

    def test_plateau_helper_detects_unsettled_series(self):
        mix = MixtureModel([DeterministicMeasure.from_pattern([0, 1]), BernoulliMeasure(0.5)],
                           [0.1, 0.9])
        rep = exact_evaluate(mix, 0, [MatrixLoss([[0, 1], [3, 0]])], 3)
        plate = [r for r in check_finite_loss_plateau(rep, "matrix")
                 if r.bound_id.startswith("loss-plateau")][0]
        assert not plate.passed  # the series still climbs inside the final quarter


class TestInstantChecks:
    def test_hand_case_half_vs_quarter(self):
        # true (1/2, 1/2), mixture (1/4, 3/4), error loss: both predict through
        # the threshold, so the regret is 0 <= abs distance 1/2 <= sqrt(2 kl)
        dist = instant_distances([0.5, 0.5], [0.25, 0.75])
        rec = HistoryRecord(step=1, history=(), weight=1.0, distances=dist,
                            ratio_term=0.0, losses={"error": (0.5, 0.5)})
        mix = MixtureModel([BernoulliMeasure(0.5)], [1.0])
        rep = exact_evaluate(mix, 0, [ErrorLoss()], 1)
        results = check_instant_bounds([rec], rep, "error")
        by_id = {r.bound_id: r for r in results}
        assert by_id["instant-regret-nonneg[error]"].rhs == pytest.approx(0.0, abs=1e-15)
        assert by_id["instant-regret<=abs[error]"].rhs == pytest.approx(0.5, abs=1e-15)
        assert by_id["instant-abs<=sqrt-2kl[error]"].rhs == pytest.approx(
            math.sqrt(2 * dist.kl), abs=1e-15)
        assert all(r.passed for r in results)

    def test_exhaustive_chains_on_three_coins(self, three_coin_report):
        results = check_instant_bounds(three_coin_report.records, three_coin_report, "error")
        assert all(r.passed for r in results), [r.line() for r in results if not r.passed]
        agg = [r for r in results if r.bound_id.startswith("squared-regret-sum")][0]
        assert agg.rhs == pytest.approx(2 * three_coin_report.total("kl"), abs=1e-12)
        # minimal-slack locations are reported
        assert all(r.location for r in results if "instant" in r.bound_id)

    def test_collapse_chains_hit_equality(self, collapse_report):
        by_id = {r.bound_id: r for r in
                 check_instant_bounds(collapse_report.records, collapse_report, "error")}
        # at t=1 the regret equals the absolute distance exactly (both 1)
        assert abs(by_id["instant-regret<=abs[error]"].slack) <= 1e-12

    def test_distance_sandwich(self, three_coin_report):
        results = check_instant_distance_bounds(three_coin_report.records)
        assert all(r.passed for r in results)

    def test_unbounded_loss_rejected(self, three_coin_report):
        with pytest.raises(ValueError, match="unbounded"):
            check_instant_bounds(three_coin_report.records, three_coin_report, "log")


class TestProofInequalities:
    def test_point_values_entropy_term_vanishes_on_diagonal(self):
        vals = proof_inequality_values(InequalityPoint(1.0, 2.0, 0.5, 0.5))
        assert vals["f1"] == pytest.approx(0.5, abs=1e-15)

    def test_single_point_sanity(self):
        vals = proof_inequality_values(InequalityPoint(2.0, 1.5, 0.9, 0.1))
        assert vals["f1"] == pytest.approx(3.5277824880057733, abs=1e-12)
        assert vals["f1"] > 0

    def test_reduced_form_boundary_value(self):
        # g1 at z -> 0 approaches (AB - 1) * (B + 1)
        for a_const, b_const in ((1.0, 2.0), (0.5, 3.0), (4.0, 1.25)):
            vals = proof_inequality_values(InequalityPoint(a_const, b_const, 0.5, 1e-9))
            want = (a_const * b_const - 1.0) * (b_const + 1.0)
            assert vals["g1"] == pytest.approx(want, rel=1e-6)

    def test_reduced_quadratic_boundary_terms_nonneg_for_both_rules(self):
        # the z/(1-z) -> 1 reduction of the extremal expression is checked at
        # its two boundary values; both need A*B >= 1, true under both rules
        for rule in B_RULES.values():
            for a in np.geomspace(0.1, 10, 41):
                b = rule(a)
                assert (a * b - 1.0) * (a + b + 2.0) >= -1e-12
                assert 0.5 * (a * b - 1.0) * (2 * a + b + 3.0) >= -1e-12

    def test_reduced_forms_nonnegative_on_their_branches(self):
        zs_lo = np.linspace(1e-6, 0.5, 2001)
        zs_hi = np.linspace(0.5, 1 - 1e-6, 2001)
        for rule in B_RULES.values():
            for a in (0.1, 0.5, 1.0, 2.0, 4.0, 10.0):
                b = rule(a)
                g1 = [proof_inequality_values(InequalityPoint(a, b, 0.5, z))["g1"] for z in zs_lo[::100]]
                g2 = [proof_inequality_values(InequalityPoint(a, b, 0.5, z))["g2"] for z in zs_hi[::100]]
                assert min(g1) >= -1e-12
                assert min(g2) >= -1e-12

    def test_half_boundary_lower_bound_pointwise(self):
        # f1(y, 1/2) >= 2 B'(y - 1/2)^2 + A'(1 - y) - y on the y grid
        ys = np.linspace(1e-4, 1 - 1e-4, 201)
        for a_const, b_const in ((0.5, 3.0), (1.0, 2.0), (4.0, 2.0)):
            ap, bp = a_const + 1, b_const + 1
            for y in ys:
                f1 = proof_inequality_values(InequalityPoint(a_const, b_const, float(y), 0.5))["f1"]
                assert f1 >= 2 * bp * (y - 0.5) ** 2 + ap * (1 - y) - y - 1e-12

    def test_blowup_trend_toward_boundaries(self):
        f1 = [proof_inequality_values(InequalityPoint(1.0, 2.0, 0.5, z))["f1"]
              for z in (1e-2, 1e-4, 1e-6)]
        assert f1[0] < f1[1] < f1[2]
        f2 = [proof_inequality_values(InequalityPoint(1.0, 2.0, 0.5, 1 - z))["f2"]
              for z in (1e-2, 1e-4, 1e-6)]
        assert f2[0] < f2[1] < f2[2]

    def test_endpoint_domain_errors(self):
        with pytest.raises(ValueError):
            InequalityPoint(1.0, 2.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            InequalityPoint(1.0, 2.0, 0.5, 1.0)
        with pytest.raises(ValueError):
            InequalityPoint(-1.0, 2.0, 0.5, 0.5)


class TestGridVerification:
    def test_both_rules_pass_on_a_coarse_grid(self):
        for rule in B_RULES:
            results = grid_verify_proof_inequalities(rule, grid_points=51)
            assert [r.passed for r in results] == [True, True]
            assert all(r.tolerance == 1e-12 for r in results)

    def test_subthreshold_constant_fails_with_located_minimum(self):
        results = grid_verify_proof_inequalities(0.01, a_values=[1.0], grid_points=101)
        f1 = results[0]
        assert not f1.passed
        assert f1.rhs < -0.3
        assert "z=0.5" in f1.location

    def test_callable_rule(self):
        results = grid_verify_proof_inequalities(lambda a: 1.0 / a + 1.0,
                                                 a_values=[0.5, 2.0], grid_points=31)
        assert all(r.passed for r in results)

    def test_reproducible_results(self):
        a = grid_verify_proof_inequalities("1/A+1", grid_points=31)
        b = grid_verify_proof_inequalities("1/A+1", grid_points=31)
        assert [(r.lhs, r.rhs, r.location) for r in a] == [(r.lhs, r.rhs, r.location) for r in b]
