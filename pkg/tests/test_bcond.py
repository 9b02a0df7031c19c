import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pottstree.bcond import (
    BoundarySpecError,
    OutsideTheoremError,
    SuccessorProfile,
    SuccessorRule,
    bset_membership,
    candidate_measures,
    classify_boundary,
    empirical_classify,
    feasible_profiles,
    figure_rule,
    generate_config,
    initial_Y,
    measure_c_values,
    normal_form,
    parse_boundary_spec,
    qm_condition,
    solve_theta_star,
    h1_of_theta,
)
from pottstree.dynamics import basin_predict
from pottstree.exactrec import base_log_ratios
from pottstree.model import Configuration, ModelParams, sphere
from pottstree.tisgm import RegimeError, TisgmDescriptor, canonical, solve_branch, theta_crit


def regimes(q, m):
    tm = theta_crit(q, m)
    return [tm, 0.5 * (tm + q + 1), q + 1.0, q + 2.0]


def regime_theta(q, m, key):
    return dict(zip(["theta_m", "midpoint", "q+1", "q+2"], regimes(q, m)))[key]


class TestProfiles:
    def test_strict_sum(self):
        with pytest.raises(ValueError):
            SuccessorProfile((1, 0, 0)).check(2)
        SuccessorProfile((1, 0, 0), strict=False).check(2)
        with pytest.raises(ValueError):
            SuccessorProfile((-1, 3, 0))

    def test_permuted(self):
        prof = SuccessorProfile((2, 0, 0))
        assert prof.permuted({1: 3, 2: 1, 3: 2}).c == (0, 0, 2)

    @pytest.mark.parametrize(
        "q,m,expected",
        [(3, 1, [(0, 1, 1), (2, 0, 0)]), (5, 2, [(1, 1, 0, 0, 0)]), (10, 4, []), (5, 1, [(2, 0, 0, 0, 0)])],
    )
    def test_feasible(self, q, m, expected):
        got = sorted(p.c for p in feasible_profiles(ModelParams(q=q, theta=2.0), m))
        assert got == expected

    def test_no_strict_mu2_profile_for_m_at_least_3(self):
        for q in range(6, 14):
            for m in range(3, q // 2 + 1):
                for prof in feasible_profiles(ModelParams(q=q, theta=2.0), m):
                    assert prof.c[0] <= prof.c[-1]

    def test_initial_Y(self):
        p = ModelParams(q=3, J=0.8)
        np.testing.assert_allclose(initial_Y(p, SuccessorProfile((2, 0, 0))), [1.6, 0.0])
        np.testing.assert_array_equal(initial_Y(ModelParams(q=2, J=0.8), SuccessorProfile((1, 1))), [0.0])
        with pytest.raises(ValueError):
            initial_Y(p, SuccessorProfile((1, 1, 1), strict=False))

    def test_initial_Y_matches_base_level(self):
        p = ModelParams(q=5, J=0.6)
        prof = SuccessorProfile((1, 1, 0, 0, 0))
        omega = generate_config(p, prof.rule(), 3)
        base = base_log_ratios(p, 3, omega)
        for y in base.values.values():
            np.testing.assert_array_equal(y, initial_Y(p, prof))


class TestRules:
    def test_undefined_color(self):
        with pytest.raises(ValueError, match="children for colors"):
            SuccessorRule(3, {1: (2, 3)}, root_color=1)
        with pytest.raises(ValueError, match="outside"):
            SuccessorRule(3, {1: (1, 4)}, root_color=1)

    def test_root_children_cyclic(self):
        assert figure_rule("fig5").root_children() == (2, 3, 2)

    def test_monochromatic(self):
        p = ModelParams(q=4, J=1.0)
        rule = SuccessorRule(4, {2: (2, 2)}, root_color=2)
        conf = generate_config(p, rule, 3)
        assert set(conf.assignment.values()) == {2}

    def test_fig7_sphere_balanced(self):
        p = ModelParams(q=5, J=1.0)
        conf = generate_config(p, figure_rule("fig7"), 3)
        colors = [conf[v] for v in sphere(p, 4)]
        assert colors.count(1) == colors.count(2) == len(colors) // 2

    def test_deterministic(self):
        for name in ("fig5", "fig6", "fig7", "fig8"):
            rule = figure_rule(name)
            p = ModelParams(q=rule.q, J=1.0)
            a = generate_config(p, rule, 5).to_json()
            b = generate_config(p, figure_rule(name), 5).to_json()
            assert json.dumps(a) == json.dumps(b)

    def test_unknown_figure(self):
        with pytest.raises(ValueError, match="fig9"):
            figure_rule("fig9")

    def test_k_mismatch(self):
        with pytest.raises(ValueError):
            generate_config(ModelParams(q=5, k=3, J=1.0), figure_rule("fig7"), 2)


class TestCValues:
    def test_fig7_strict(self):
        cv = measure_c_values(ModelParams(q=5, J=1.0), figure_rule("fig7"), 4)
        assert cv.strict and cv.profile.c == (1, 1, 0, 0, 0)

    def test_monochromatic(self):
        p = ModelParams(q=3, J=1.0)
        cv = measure_c_values(p, SuccessorProfile((2, 0, 0)).rule(), 3)
        assert cv.strict and cv.profile.c == (2, 0, 0)

    def test_fig5_diagonal(self):
        cv = measure_c_values(ModelParams(q=5, J=1.0), figure_rule("fig5"), 4)
        assert not cv.strict
        assert cv.diagonal_values() == {1: 0, 2: 0, 3: 1, 4: 1, 5: 1}

    def test_fig6_diagonal(self):
        rule = figure_rule("fig6")
        diag = measure_c_values(ModelParams(q=15, J=1.0), rule, 5).diagonal_values()
        assert [diag[i] for i in (1, 2, 3)] == [1, 1, 1]
        assert all(diag[j] == 2 for j in diag if j >= 4)
        assert all(rule.table[j] == (j, j) for j in range(4, 16))

    def test_fig8_diagonal(self):
        rule = figure_rule("fig8")
        diag = measure_c_values(ModelParams(q=10, J=1.0), rule, 6).diagonal_values()
        assert all(diag[i] == 1 for i in (1, 2, 3, 4))
        assert all(rule.table[j].count(j) == 0 for j in range(5, 11))

    def test_incomplete_configuration(self):
        p = ModelParams(q=3, J=1.0)
        with pytest.raises(ValueError):
            measure_c_values(p, Configuration(3, {(): 1}), 2)


class TestBSets:
    def test_q3_examples(self):
        p = ModelParams(q=3, theta=4.5)
        up = bset_membership(p, SuccessorProfile((2, 0, 0)), 1)
        assert up.in_B and up.plus_0 and up.sets()[:2] == ["B_1", "B^+_{1,0}"]
        down = bset_membership(p, SuccessorProfile((0, 1, 1)), 1)
        assert down.in_B and down.minus_0

    def test_q5_threshold(self):
        theta = 6.5
        p = ModelParams(q=5, theta=theta)
        mem = bset_membership(p, SuccessorProfile((1, 1, 0, 0, 0)), 2)
        h1 = solve_branch(5, theta, 2)[0][1]
        assert mem.in_B and mem.plus_1 == (math.log(theta) > h1)

    def test_h1_needed(self):
        mem = bset_membership(ModelParams(q=5, theta=4.0), SuccessorProfile((1, 1, 0, 0, 0)), 2)
        with pytest.raises(RegimeError):
            mem.plus_1


class TestClassifier:
    def test_examples(self):
        p = ModelParams(q=3, theta=4.5)
        up = classify_boundary(p, SuccessorProfile((2, 0, 0)))
        assert (up.m, up.branch, up.support) == (1, "high", (1,))
        down = classify_boundary(p, SuccessorProfile((0, 1, 1)))
        assert (down.m, down.branch, down.support) == (1, "low", (1,))
        assert classify_boundary(ModelParams(q=3, theta=4.0), SuccessorProfile((0, 1, 1))) == TisgmDescriptor.free()

    def test_outside_theorem(self):
        with pytest.raises(OutsideTheoremError):
            normal_form(SuccessorProfile((0, 1, 2)))
        # k=3 allows three distinct counts
        with pytest.raises(ValueError):
            classify_boundary(ModelParams(q=4, k=3, theta=9.0), SuccessorProfile((2, 1, 0, 0)))

    def test_normal_form(self):
        m, perm = normal_form(SuccessorProfile((0, 2, 0)))
        assert m == 1 and perm[2] == 1
        m, perm = normal_form(SuccessorProfile((0, 0, 1, 1)))
        assert m == 2 and perm == {1: 1, 2: 2, 3: 3, 4: 4}
        assert normal_form(SuccessorProfile((1, 1, 1)))[0] == 0

    @pytest.mark.parametrize("q", range(3, 9))
    def test_agrees_with_basins(self, q):
        for m in range(1, q // 2 + 1):
            for theta in [1.5, *regimes(q, m)]:
                p = ModelParams(q=q, theta=theta)
                for prof in feasible_profiles(p, m):
                    pred = classify_boundary(p, prof)
                    m_nf, perm = normal_form(prof)
                    if m_nf == 0:
                        assert pred == TisgmDescriptor.free()
                        continue
                    nf = prof.permuted(perm)
                    inverse = {new: old for old, new in perm.items()}
                    via_basin = basin_predict(p, m_nf, initial_Y(p, nf)[0])
                    if via_basin.m:
                        via_basin = canonical(via_basin.permuted(inverse), q)
                    assert pred == via_basin, (q, m, theta, prof)

    @given(st.permutations(range(1, 6)), st.sampled_from([6.0, 6.5, 7.0]))
    @settings(max_examples=40)
    def test_permutation_covariance(self, perm, theta):
        p = ModelParams(q=5, theta=theta)
        pi = dict(zip(range(1, 6), perm))
        for prof in [SuccessorProfile((2, 0, 0, 0, 0)), SuccessorProfile((1, 1, 0, 0, 0))]:
            base = classify_boundary(p, prof)
            moved = classify_boundary(p, prof.permuted(pi))
            assert moved == canonical(base.permuted(pi), 5)


class TestSection5:
    def test_qm_bounds(self):
        r = qm_condition(5, 1)
        assert r.holds and r.lower == pytest.approx(1.1716, abs=1e-4) and r.upper == pytest.approx(6.8284, abs=1e-4)
        r2 = qm_condition(5, 2)
        assert r2.holds and r2.lower == pytest.approx(2.111, abs=1e-3) and r2.upper == pytest.approx(37.889, abs=1e-3)

    def test_qm_all(self):
        for q in range(2, 65):
            for m in range(1, q // 2 + 1):
                r = qm_condition(q, m)
                assert r.holds == r.direct

    @pytest.mark.parametrize("q,m", [(17, 1), (55, 2)])
    def test_theta_star(self, q, m):
        roots = solve_theta_star(q, m)
        assert roots
        for t in roots:
            assert theta_crit(q, m) < t < q + 1
            assert abs(math.log(t) - h1_of_theta(q, t, m)) < 1e-10

    def test_theta_star_q3(self):
        # no sign change on the scan
        assert solve_theta_star(3, 1) == []


class TestEmpirical:
    def test_q3_profiles(self):
        p = ModelParams(q=3, theta=4.5)
        (_, h1), (_, h2) = solve_branch(3, 4.5, 1)
        up = empirical_classify(p, SuccessorProfile((2, 0, 0)).rule())
        assert up.descriptor == classify_boundary(p, SuccessorProfile((2, 0, 0)))
        np.testing.assert_allclose(up.limit, [h2, 0.0], atol=1e-8)
        down = empirical_classify(p, SuccessorProfile((0, 1, 1)).rule(root_color=2))
        assert down.descriptor == classify_boundary(p, SuccessorProfile((0, 1, 1)))
        np.testing.assert_allclose(down.limit, [h1, 0.0], atol=1e-8)

    def test_zero_coupling(self):
        res = empirical_classify(ModelParams(q=3, J=0.0), SuccessorProfile((2, 0, 0)).rule(), n_max=1)
        assert res.descriptor == TisgmDescriptor.free()

    def test_antiferro_candidates(self):
        assert candidate_measures(ModelParams(q=3, J=-0.5)) == [TisgmDescriptor.free()]

    def test_unresolved_when_short(self):
        res = empirical_classify(ModelParams(q=3, theta=4.5), SuccessorProfile((2, 0, 0)).rule(), n_max=3)
        assert res.descriptor is None and not res.resolved

    def test_fig7(self):
        res = empirical_classify(ModelParams(q=5, theta=7.0), figure_rule("fig7"))
        assert res.descriptor.support == (1, 2) and res.descriptor.m == 2


class TestSpecParsing:
    def test_kinds(self):
        p = ModelParams(q=3, theta=4.5)
        assert parse_boundary_spec('{"type":"profile","c":[2,0,0]}', p) == SuccessorProfile((2, 0, 0))
        rule = parse_boundary_spec({"type": "rule", "table": {"1": [2, 3], "2": [2, 2], "3": [3, 3]}}, p)
        assert rule.table[1] == (2, 3)
        conf = parse_boundary_spec({"type": "explicit", "assign": {"0.1.1": 2}}, p)
        assert conf[(1, 1)] == 2
        assert parse_boundary_spec({"type": "figure", "name": "fig7"}, ModelParams(q=5, theta=7.0)).name == "fig7"

    @pytest.mark.parametrize(
        "text,match",
        [
            ('{"type": "profile", "c": [2, 0', "line 1 column"),
            ('{"type": "profile", "c": [2, 0]}', r"\$.c"),
            ('{"type": "profile"}', "missing key 'c'"),
            ('{"type": "blob"}', "unknown boundary type"),
            ('{"type": "explicit", "assign": {"1.2": 1}}', r"\$.assign"),
            ('{"type": "figure", "name": "fig5"}', "needs q=5"),
            ('[1, 2]', "object"),
        ],
    )
    def test_errors(self, text, match):
        with pytest.raises(BoundarySpecError, match=match):
            parse_boundary_spec(text, ModelParams(q=3, theta=4.5))


class TestDeepRecursion:
    """At n_max=200 the recursion is too short for slow regimes; deeper runs settle them."""

    @pytest.mark.parametrize(
        "q,theta_key,c",
        [
            (3, "theta_m", (0, 1, 1)),
            (3, "midpoint", (0, 1, 1)),
            (3, "midpoint", (2, 0, 0)),
            (5, "midpoint", (1, 1, 0, 0, 0)),
            (5, "q+1", (1, 1, 0, 0, 0)),
        ],
    )
    def test_geometric_cases_resolve(self, q, theta_key, c):
        prof = SuccessorProfile(c)
        p = ModelParams(q=q, theta=regime_theta(q, normal_form(prof)[0], theta_key))
        res = empirical_classify(p, prof.rule(), n_max=2000, tol=1e-9)
        assert res.descriptor == classify_boundary(p, prof)

    @pytest.mark.parametrize(
        "q,theta_key,c",
        [
            (3, "theta_m", (2, 0, 0)),
            (3, "q+1", (0, 1, 1)),
            (5, "theta_m", (2, 0, 0, 0, 0)),
            (5, "theta_m", (1, 1, 0, 0, 0)),
        ],
    )
    def test_tangent_cases_approach_prediction(self, q, theta_key, c):
        prof = SuccessorProfile(c)
        p = ModelParams(q=q, theta=regime_theta(q, normal_form(prof)[0], theta_key))
        target = classify_boundary(p, prof).vector(q)
        traj = empirical_classify(p, prof.rule(), n_max=4000, check_homogeneity=False).trajectory
        dist = np.max(np.abs(traj.ys - target), axis=1)
        # monotone approach, algebraic rate: ten times deeper, about ten times closer
        assert np.all(np.diff(dist[50:]) <= 0)
        assert 5 < dist[399] / dist[3999] < 15
        # the other candidate measures stay far away
        others = [d for d in candidate_measures(p) if d != classify_boundary(p, prof)]
        assert min(np.max(np.abs(d.vector(q) - traj.ys[-1])) for d in others) > 10 * dist[-1]
