import random
from fractions import Fraction

import pytest

import model_zoo as zoo
from scmkit import (
    DomainMismatchError,
    FiniteDomain,
    FiniteScm,
    GaussianBlock,
    LinearScm,
    MixedGraph,
    TabularMechanism,
    augmented_graph,
    canonicalize,
    functional_graph,
    functional_parents,
    mechanisms_equivalent,
    validate,
)

F = Fraction


class TestValidate:
    def test_well_formed(self):
        m, _ = zoo.equivalence_pair()
        assert validate(m).ok

    def test_unnormalized_measure(self):
        m, _ = zoo.equivalence_pair()
        bad = m.replace(measure={"E": {-1: F(1, 2), 0: F(0), 1: F(1, 4)}})
        report = validate(bad)
        assert not report.ok
        assert any("not normalized" in p for p in report.problems)

    def test_partial_table(self):
        dom = FiniteDomain((0, 1))
        m = FiniteScm({"X": dom}, {"E": dom}, {"E": zoo.uniform(0, 1)},
                      {"X": TabularMechanism(("E",), {(0,): 0})})
        report = validate(m)
        assert any("not total" in p for p in report.problems)

    def test_output_outside_codomain(self):
        dom = FiniteDomain((0, 1))
        m = FiniteScm({"X": dom}, {"E": dom}, {"E": zoo.uniform(0, 1)},
                      {"X": TabularMechanism(("E",), {(0,): 0, (1,): 7})})
        assert any("outside its codomain" in p for p in validate(m).problems)

    def test_linear_shape_violation(self):
        m = zoo.interventions_linear()
        bad = LinearScm(m.endogenous, m.blocks, m.B, [[1, 0], [0, 1], [0, 0]])
        assert any("Gamma" in p for p in validate(bad).problems)

    def test_linear_non_psd(self):
        block = GaussianBlock("W", ("E1", "E2"), [0, 0], [[1.0, 2.0], [2.0, 1.0]])
        m = LinearScm(("X",), (block,), [[0.0]], [[1.0, 0.0]])
        assert any("positive semi-definite" in p for p in validate(m).problems)


class TestMechanismsEquivalent:
    def test_quadratic_equals_identity_off_null_set(self):
        m1, m2 = zoo.equivalence_pair()
        assert mechanisms_equivalent(m1, m2)

    def test_identical_tables(self):
        m1, _ = zoo.equivalence_pair()
        assert mechanisms_equivalent(m1, m1.replace())

    def test_full_support_breaks_equivalence(self):
        m1, m2 = zoo.equivalence_pair_full_support()
        assert not mechanisms_equivalent(m1, m2)

    def test_signature_mismatch(self):
        m1, _ = zoo.equivalence_pair()
        other = m1.replace(measure={"E": zoo.uniform(-1, 0, 1)})
        with pytest.raises(DomainMismatchError):
            mechanisms_equivalent(m1, other)


class TestFunctionalParents:
    def test_constant_in_x(self):
        m, _ = zoo.equivalence_pair()
        assert functional_parents(m, "X") == {"E"}

    def test_quadratic_self_dependence(self):
        m = zoo.augmented_example()
        assert functional_parents(m, "X4") == {"X2", "X4", "E3"}

    def test_all_parents_of_example(self):
        m = zoo.augmented_example()
        assert functional_parents(m, "X1") == {"E1", "E2"}
        assert functional_parents(m, "X2") == {"E2"}
        assert functional_parents(m, "X3") == {"X1", "X2", "X5"}
        assert functional_parents(m, "X5") == {"X3", "X4"}

    def test_zero_probability_noise_is_invisible(self):
        dom = FiniteDomain((0, 1))
        m = FiniteScm(
            {"X": dom}, {"E": dom}, {"E": {0: F(1), 1: F(0)}},
            {"X": TabularMechanism(("E",), {(0,): 0, (1,): 1})},
        )
        assert functional_parents(m, "X") == set()

    def test_linear_self_loop(self):
        m = LinearScm(("X1", "X2"), zoo.std_blocks("E1"),
                      [[1.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
        assert "X1" in functional_parents(m, "X1")

    def test_linear_self_loop_iff_not_uniquely_solvable_singleton(self):
        from scmkit import uniquely_solvable_wrt

        # B_kk = 1 after the canonicalization attempt <=> singleton not uniquely solvable
        for bkk in (0.0, 0.5, 1.0, -1.0, 2.0):
            m = LinearScm(("X1",), zoo.std_blocks("E1"), [[bkk]], [[1.0]])
            cm = canonicalize(m)
            has_loop = cm.B[0, 0] == 1.0
            assert has_loop == ("X1" in functional_parents(m, "X1"))
            assert has_loop == (not uniquely_solvable_wrt(m, ["X1"]))

    def test_finite_analogue_of_unit_diagonal(self):
        # x = x + r over a finite domain: the relation [0 = r] keeps the
        # variable as its own parent, mirroring the B_kk = 1 linear case
        dom = FiniteDomain((0, 1))
        m = FiniteScm(
            {"X": dom, "R": dom}, {}, {},
            {
                "X": TabularMechanism(("X", "R"), {
                    (x, r): x if r == 0 else 1 - x for x in (0, 1) for r in (0, 1)
                }),
                "R": TabularMechanism.constant(0),
            },
        )
        assert "X" in functional_parents(m, "X")

    def test_linear_zero_variance_coordinate(self):
        blocks = (GaussianBlock("E1", ("E1",), [3.0], [[0.0]]),)
        m = LinearScm(("X",), blocks, [[0.0]], [[1.0]])
        assert functional_parents(m, "X") == set()


class TestGraphs:
    def test_augmented_graph_matches_figure(self):
        m = zoo.augmented_example()
        expected = MixedGraph(
            ["X1", "X2", "X3", "X4", "X5", "E1", "E2", "E3"],
            [("X1", "X3"), ("X2", "X3"), ("X2", "X4"), ("X3", "X5"),
             ("X5", "X3"), ("X4", "X5"), ("X4", "X4"),
             ("E1", "X1"), ("E2", "X1"), ("E2", "X2"), ("E3", "X4")],
        )
        assert augmented_graph(m) == expected

    def test_functional_graph_matches_figure(self):
        m = zoo.augmented_example()
        expected = MixedGraph(
            ["X1", "X2", "X3", "X4", "X5"],
            [("X1", "X3"), ("X2", "X3"), ("X2", "X4"), ("X3", "X5"),
             ("X5", "X3"), ("X4", "X5"), ("X4", "X4")],
            [("X1", "X2")],
        )
        assert functional_graph(m) == expected

    def test_constant_mechanisms_give_edgeless_graph(self):
        dom = FiniteDomain((0, 1))
        m = FiniteScm({"X": dom}, {"E": dom}, {"E": zoo.uniform(0, 1)},
                      {"X": TabularMechanism.constant(0)})
        g = augmented_graph(m)
        assert set(g.nodes) == {"X", "E"}
        assert not g.directed

    def test_interventions_example_augmented_graph(self):
        m = zoo.interventions_linear()
        g = augmented_graph(m)
        assert g == MixedGraph(
            ["X1", "X2", "X3", "E1", "E2", "E3"],
            [("X1", "X2"), ("X2", "X1"), ("X3", "X2"), ("X1", "X3"),
             ("E1", "X1"), ("E2", "X2"), ("E3", "X3")],
        )

    def test_latent_confounder_functional_graph(self):
        m = zoo.latent_confounder()
        g = functional_graph(m)
        assert g.directed == {("X1", "X2")}
        assert g.bidirected == {("X1", "X2")}

    def test_no_edges_into_exogenous(self):
        g = augmented_graph(zoo.augmented_example())
        for _, head in g.directed:
            assert head.startswith("X")

    def test_singleton_with_private_noise(self):
        m, _ = zoo.equivalence_pair()
        fg = functional_graph(m)
        assert fg.nodes == ("X",)
        assert not fg.directed and not fg.bidirected

    def test_linear_shared_block_gives_bidirected_edge(self):
        m = zoo.treatment_twin()
        fg = functional_graph(m)
        assert fg.directed == frozenset()
        assert fg.bidirected == {("X2", "X2'")}

    def test_equivalent_models_same_graph(self):
        m1, m2 = zoo.equivalence_pair()
        assert augmented_graph(m1) == augmented_graph(m2)

    def test_functional_graph_directed_part_is_induced(self):
        m = zoo.augmented_example()
        aug = augmented_graph(m)
        fun = functional_graph(m)
        induced = aug.induced(m.endogenous_names)
        assert fun.directed == induced.directed


class TestCanonicalize:
    def test_linear_self_feedback_normalized(self):
        m = zoo.not_canonical_linear()
        cm = canonicalize(m)
        assert cm.B[0, 0] == 0.0
        assert cm.Gamma[0, 0] == pytest.approx(0.5)
        assert cm.Gamma[0, 1] == pytest.approx(0.5)

    def test_already_canonical_unchanged(self):
        m = zoo.interventions_linear()
        cm = canonicalize(m)
        assert (cm.B == m.B).all()
        assert (cm.Gamma == m.Gamma).all()

    def test_genuine_self_loop_untouched(self):
        m = LinearScm(("X",), zoo.std_blocks("E1"), [[1.0]], [[1.0]])
        cm = canonicalize(m)
        assert cm.B[0, 0] == 1.0

    def test_finite_arguments_shrink_to_parents(self):
        m = zoo.augmented_example()
        cm = canonicalize(m)
        for k in m.endogenous_names:
            assert set(cm.mechanisms[k].args) == functional_parents(m, k)

    def test_finite_equivalence_random(self):
        rng = random.Random(20240911)
        for _ in range(25):
            m = zoo.random_finite_scm(rng)
            cm = canonicalize(m)
            assert mechanisms_equivalent(m, cm)
            # idempotent up to mechanism equivalence
            assert mechanisms_equivalent(cm, canonicalize(cm))

    def test_zero_variance_coordinate_folded_into_intercept(self):
        blocks = (GaussianBlock("E1", ("E1",), [3.0], [[0.0]]),)
        m = LinearScm(("X",), blocks, [[0.0]], [[2.0]])
        cm = canonicalize(m)
        assert cm.Gamma[0, 0] == 0.0
        assert cm.c[0] == pytest.approx(6.0)


class TestJsonExport:
    def test_finite_json(self):
        m, _ = zoo.equivalence_pair()
        obj = m.to_json_obj()
        assert obj["family"] == "finite"
        assert obj["measure"]["E"] == ["1/2", "0", "1/2"]
        assert obj["mechanisms"]["X"]["args"] == ["E"]

    def test_linear_json(self):
        m = zoo.interventions_linear()
        obj = m.to_json_obj()
        assert obj["family"] == "linear"
        assert obj["B"][1] == [1.0, 0.0, 1.0]
