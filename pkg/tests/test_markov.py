import random
from fractions import Fraction

import pytest

import model_zoo as zoo
from scmkit import (
    DiscreteDistribution,
    FiniteDomain,
    GaussianDistribution,
    ScmError,
    SolvabilityError,
    conditional_independent,
    d_separated,
    functional_graph,
    sigma_separated,
    verify_markov,
)

F = Fraction


def product_distribution():
    dom = FiniteDomain((0, 1))
    probs = {}
    for a in (0, 1):
        for b in (0, 1):
            probs[(a, b)] = F(1, 4)
    return DiscreteDistribution(("A", "B"), {"A": dom, "B": dom}, probs)


class TestConditionalIndependence:
    def test_product_distribution(self):
        assert conditional_independent(product_distribution(), ["A"], ["B"])

    def test_copy_dependence(self):
        dom = FiniteDomain((0, 1))
        probs = {(0, 0): F(1, 2), (1, 1): F(1, 2)}
        dist = DiscreteDistribution(("A", "B"), {"A": dom, "B": dom}, probs)
        assert not conditional_independent(dist, ["A"], ["B"])

    def test_deterministic_chain_screens_off(self):
        # X2 = X1, X3 = X2: X1 and X3 are independent given X2 (exact tables)
        dom = FiniteDomain((0, 1))
        probs = {(0, 0, 0): F(1, 2), (1, 1, 1): F(1, 2)}
        dist = DiscreteDistribution(("X1", "X2", "X3"), {v: dom for v in ("X1", "X2", "X3")}, probs)
        assert conditional_independent(dist, ["X1"], ["X3"], ["X2"])
        assert not conditional_independent(dist, ["X1"], ["X3"])

    def test_overlap_rejected(self):
        with pytest.raises(ScmError):
            conditional_independent(product_distribution(), ["A"], ["A"])

    def test_gaussian_partial_covariance(self):
        cov = [[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]]
        dist = GaussianDistribution(("A", "B", "C"), [0, 0, 0], cov)
        # cov(A,C) = 0.25 = 0.5 * 0.5: conditioning on B removes it
        assert conditional_independent(dist, ["A"], ["C"], ["B"])
        assert not conditional_independent(dist, ["A"], ["C"])


class TestVerifyMarkov:
    def test_acyclic_chain_no_violations(self):
        m = zoo.chain_substitution()
        for kind in ("sigma", "d"):
            report = verify_markov(m, kind=kind)
            assert report.ok, [e for e in report.violations]

    def test_cycle4_sigma_holds(self):
        m = zoo.cycle4_scm()
        report = verify_markov(m, kind="sigma")
        assert report.ok

    def test_sigma_violations_subset_of_d_violations(self):
        m = zoo.cycle4_scm()
        sig = verify_markov(m, kind="sigma")
        dee = verify_markov(m, kind="d")
        sig_triples = {(e.a, e.b, e.s) for e in sig.violations}
        d_triples = {(e.a, e.b, e.s) for e in dee.violations}
        assert sig_triples <= d_triples

    def test_separation_contrast_is_visible_in_the_graph(self):
        g = functional_graph(zoo.cycle4_scm())
        assert d_separated(g, ["X1"], ["X3"], ["X2", "X4"])
        assert not sigma_separated(g, ["X1"], ["X3"], ["X2", "X4"])

    def test_precondition_failure_names_component(self):
        _, m_tilde = zoo.nonunique_selfloop_pair()
        with pytest.raises(SolvabilityError):
            verify_markov(m_tilde, kind="sigma")

    def test_unknown_kind(self):
        with pytest.raises(ScmError):
            verify_markov(zoo.chain_substitution(), kind="m")

    def test_max_conditioning_limits_triples(self):
        m = zoo.chain_substitution()
        small = verify_markov(m, kind="sigma", max_conditioning=0)
        full = verify_markov(m, kind="sigma")
        assert len(small.entries) < len(full.entries)

    def test_full_subsets_flag(self):
        m = zoo.chain_substitution()
        singles = verify_markov(m, kind="sigma")
        full = verify_markov(m, kind="sigma", full_subsets=True)
        assert len(full.entries) > len(singles.entries)
        assert full.ok

    def test_report_serialization(self):
        report = verify_markov(zoo.chain_substitution(), kind="sigma", max_conditioning=1)
        obj = report.to_json_obj()
        assert obj["kind"] == "sigma"
        assert obj["violations"] == 0
        table = report.to_table()
        assert "violations: 0" in table

    def test_gaussian_markov(self):
        m = zoo.lin_gauss_anm()
        report = verify_markov(m, kind="sigma")
        assert report.ok

    def test_random_models_sigma_markov(self):
        rng = random.Random(61)
        from scmkit import functional_graph as fg
        from scmkit import uniquely_solvable_wrt

        accepted = 0
        attempts = 0
        while accepted < 25 and attempts < 400:
            attempts += 1
            m = zoo.random_finite_scm(rng, max_endo=4, self_arg_p=0.15)
            graph = fg(m)
            comps = {graph.scc_map()[n] for n in graph.nodes}
            if not all(uniquely_solvable_wrt(m, sorted(c)) for c in comps):
                continue
            report = verify_markov(m, kind="sigma", max_conditioning=2)
            assert report.ok, (m, report.violations)
            accepted += 1
        assert accepted == 25
