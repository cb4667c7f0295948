"""Solvability analysis and exact distribution computation.

Finite SCMs: all quantifiers over exogenous values range over the support of
the product measure; everything is computed in exact rational arithmetic.
Linear SCMs: solvability reduces to linear algebra on I - B restricted to the
subset, with the global tolerance for zero tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .config import REGULARIZATION_CONDITION, tolerance
from .errors import (
    EvidenceError,
    NotSolvable,
    NotUniquelySolvable,
    ScmError,
    UnknownNameError,
)
from .graph import MixedGraph, enumerate_loops
from .scm import FiniteScm, FiniteDomain, LinearScm, functional_parents

__all__ = [
    "DiscreteDistribution",
    "GaussianDistribution",
    "SelectorPolytope",
    "SolvabilityResult",
    "SolveMap",
    "fiber",
    "solvable_wrt",
    "uniquely_solvable_wrt",
    "solve_map",
    "structurally_uniquely_solvable",
    "uniquely_solvable_all_subsets",
    "observational_distribution",
    "observational_polytope",
    "interventional_distribution",
    "counterfactual_distribution",
    "gaussian_condition",
]


# --- distributions --------------------------------------------------------

class DiscreteDistribution:
    """Exact distribution over a finite product of named domains.

    Only cells with positive probability are stored; probabilities are
    ``Fraction`` instances summing to exactly 1.
    """

    __slots__ = ("vars", "domains", "probs")

    def __init__(self, vars, domains: Mapping[str, FiniteDomain], probs: Mapping[tuple, Fraction]):
        self.vars = tuple(vars)
        self.domains = {v: domains[v] for v in self.vars}
        cleaned = {}
        total = Fraction(0)
        for cell, p in probs.items():
            p = Fraction(p)
            if p < 0:
                raise ScmError(f"negative probability {p} at {cell!r}")
            if p:
                cleaned[tuple(cell)] = cleaned.get(tuple(cell), Fraction(0)) + p
                total += p
        if total != 1:
            raise ScmError(f"distribution not normalized: sums to {total}")
        self.probs = cleaned

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return self.vars == other.vars and self.probs == other.probs

    def __hash__(self):
        return hash((self.vars, frozenset(self.probs.items())))

    def __repr__(self):
        return f"DiscreteDistribution(vars={self.vars!r}, {len(self.probs)} cells)"

    def prob(self, assignment: Mapping[str, object]) -> Fraction:
        """Probability of a (possibly partial) assignment."""
        idx = [self.vars.index(v) for v in assignment]
        want = [assignment[v] for v in assignment]
        return sum(
            (p for cell, p in self.probs.items() if all(cell[i] == w for i, w in zip(idx, want))),
            Fraction(0),
        )

    def marginal(self, names) -> "DiscreteDistribution":
        names = tuple(names)
        unknown = set(names) - set(self.vars)
        if unknown:
            raise UnknownNameError(f"unknown coordinates {sorted(unknown)}")
        idx = [self.vars.index(v) for v in names]
        out = {}
        for cell, p in self.probs.items():
            key = tuple(cell[i] for i in idx)
            out[key] = out.get(key, Fraction(0)) + p
        return DiscreteDistribution(names, self.domains, out)

    def condition(self, evidence: Mapping[str, object]) -> "DiscreteDistribution":
        """Exact Bayes conditioning; raises on zero-probability evidence."""
        for v in evidence:
            if v not in self.vars:
                raise UnknownNameError(f"unknown coordinate {v!r}")
        keep_vars = tuple(v for v in self.vars if v not in evidence)
        idx_e = [(self.vars.index(v), evidence[v]) for v in evidence]
        idx_k = [self.vars.index(v) for v in keep_vars]
        total = Fraction(0)
        cells = {}
        for cell, p in self.probs.items():
            if all(cell[i] == want for i, want in idx_e):
                total += p
                key = tuple(cell[i] for i in idx_k)
                cells[key] = cells.get(key, Fraction(0)) + p
        if total == 0:
            raise EvidenceError(f"evidence {dict(evidence)!r} has probability zero")
        return DiscreteDistribution(keep_vars, self.domains, {k: p / total for k, p in cells.items()})

    def to_json_obj(self) -> dict:
        def render(v):
            return str(v) if isinstance(v, Fraction) else v

        cells = sorted(self.probs.items(), key=lambda kv: tuple(map(str, kv[0])))
        return {
            "vars": list(self.vars),
            "probs": [[",".join(str(render(v)) for v in cell), str(p)] for cell, p in cells],
        }


class GaussianDistribution:
    """A Gaussian law over named real coordinates."""

    __slots__ = ("vars", "mean", "cov", "regularized")

    def __init__(self, vars, mean, cov, regularized=False, tol=None):
        tol = tolerance(tol)
        self.vars = tuple(vars)
        n = len(self.vars)
        self.mean = np.asarray(mean, dtype=float).reshape(n)
        self.cov = np.asarray(cov, dtype=float).reshape(n, n)
        if not np.allclose(self.cov, self.cov.T, atol=max(tol, 1e-8 * (1 + np.abs(self.cov).max(initial=0.0)))):
            raise ScmError("covariance is not symmetric")
        self.cov = (self.cov + self.cov.T) / 2
        if n and np.linalg.eigvalsh(self.cov).min() < -max(tol, 1e-8 * (1 + np.abs(self.cov).max(initial=0.0))):
            raise ScmError("covariance is not positive semi-definite")
        self.mean.setflags(write=False)
        self.cov.setflags(write=False)
        self.regularized = bool(regularized)

    def __repr__(self):
        return f"GaussianDistribution(vars={self.vars!r})"

    def marginal(self, names) -> "GaussianDistribution":
        idx = [self.vars.index(v) for v in names]
        return GaussianDistribution(
            tuple(names), self.mean[idx], self.cov[np.ix_(idx, idx)], self.regularized
        )

    def close_to(self, other: "GaussianDistribution", tol=None) -> bool:
        tol = tolerance(tol)
        return (
            self.vars == other.vars
            and np.allclose(self.mean, other.mean, atol=tol)
            and np.allclose(self.cov, other.cov, atol=tol)
        )

    def to_json_obj(self) -> dict:
        return {"vars": list(self.vars), "mean": self.mean.tolist(), "cov": self.cov.tolist()}


@dataclass
class SelectorPolytope:
    """Achievable observational distributions of a solvable finite SCM.

    ``vertices`` are the distributions induced by deterministic selectors
    (one fiber element per support point); the achievable set is exactly
    their convex hull.
    """

    vars: tuple
    vertices: tuple
    fibers: dict = field(repr=False, default_factory=dict)

    @property
    def unique(self) -> bool:
        return len(self.vertices) == 1


@dataclass
class SolvabilityResult:
    ok: bool
    subset: tuple
    witness: object = None

    def __bool__(self):
        return self.ok


@dataclass
class SolveMap:
    """The mapping assigning the unique solution of a subsystem to its inputs.

    Finite: a total table keyed by (endogenous-argument values, exogenous-
    argument values).  Linear: matrices (A, G, d) with
    x_targets = A x_args + G e + d.
    """

    targets: tuple
    endo_args: tuple
    exo_args: tuple
    table: dict = None
    A: np.ndarray = None
    G: np.ndarray = None
    d: np.ndarray = None

    def __call__(self, assignment: Mapping[str, object]) -> dict:
        if self.table is None:
            raise ScmError("linear solve maps are evaluated through their matrices")
        key = (
            tuple(assignment[a] for a in self.endo_args),
            tuple(assignment[a] for a in self.exo_args),
        )
        values = self.table[key]
        return dict(zip(self.targets, values))


# --- finite fibers ---------------------------------------------------------

def _subset_names(m, subset) -> tuple:
    names = set([subset]) if isinstance(subset, str) else set(subset)
    unknown = names - set(m.endogenous_names)
    if unknown:
        raise UnknownNameError(f"unknown endogenous index(es): {sorted(unknown)}")
    return tuple(n for n in m.endogenous_names if n in names)


def _dependency_components(m: FiniteScm, subset: tuple):
    """Strongly connected components of the declared-argument dependency graph
    on ``subset``, in topological order.  Declared arguments are a superset of
    the functional parents, so this is a sound decomposition for fiber
    enumeration."""
    cache = m._cache.setdefault("components", {})
    if subset in cache:
        return cache[subset]
    inside = set(subset)
    edges = []
    for o in subset:
        for a in m.mechanisms[o].args:
            if a in inside and a != o:
                edges.append((a, o))
    g = MixedGraph(subset, edges, ())
    comps = []
    seen = set()
    for n in subset:
        c = g.scc_map()[n]
        if c not in seen:
            seen.add(c)
            comps.append(c)
    comp_parents = {
        c: set(g.scc_map()[a] for o in c for a in m.mechanisms[o].args if a in inside) - {c}
        for c in comps
    }
    ordered = []
    placed = set()
    while comps:
        progress = False
        for c in list(comps):
            if comp_parents[c] <= placed:
                ordered.append(tuple(o for o in subset if o in c))
                placed.add(c)
                comps.remove(c)
                progress = True
        if not progress:  # pragma: no cover - SCC condensation is acyclic
            raise AssertionError("cyclic component order")
    cache[subset] = ordered
    return ordered


def _component_solutions(m, comp, assign):
    mechs = [(o, m.mechanisms[o]) for o in comp]
    out = []
    for combo in itertools.product(*(m.endogenous[o].values for o in comp)):
        assign.update(zip(comp, combo))
        if all(assign[o] == mech(assign) for o, mech in mechs):
            out.append(combo)
    for o in comp:
        del assign[o]
    return out


def _fibers(m: FiniteScm, subset: tuple, base_assign: dict, first_only=False):
    """All solutions of the structural equations of ``subset`` given the
    context/noise values in ``base_assign``; solved per strongly connected
    component of the declared dependency graph, branching where a component
    has several local solutions."""
    comps = _dependency_components(m, subset)
    solutions = []
    assign = dict(base_assign)

    def rec(level):
        if level == len(comps):
            solutions.append(tuple(assign[o] for o in subset))
            return first_only
        for combo in _component_solutions(m, comps[level], assign):
            assign.update(zip(comps[level], combo))
            stop = rec(level + 1)
            for o in comps[level]:
                del assign[o]
            if stop:
                return True
        return False

    rec(0)
    return solutions


def _relevant_exo(m: FiniteScm, subset) -> tuple:
    names = set()
    for o in subset:
        names.update(a for a in m.mechanisms[o].args if a in m.exogenous)
    return tuple(j for j in m.exogenous_names if j in names)


def _relevant_ctx(m: FiniteScm, subset) -> tuple:
    inside = set(subset)
    names = set()
    for o in subset:
        names.update(a for a in m.mechanisms[o].args if a in m.endogenous and a not in inside)
    return tuple(i for i in m.endogenous_names if i in names)


def _support_assignments(m: FiniteScm, exo_names):
    """Yield (assignment dict, probability) over the support of the product
    measure restricted to ``exo_names``."""
    supports = [m.support(j) for j in exo_names]
    for combo in itertools.product(*supports):
        p = Fraction(1)
        for j, v in zip(exo_names, combo):
            p *= Fraction(m.measure[j][v])
        yield dict(zip(exo_names, combo)), p


def fiber(m: FiniteScm, subset, e: Mapping[str, object], ctx: Mapping[str, object] = None) -> frozenset:
    """The set of solutions x_subset of the structural equations of ``subset``
    for fixed exogenous values ``e`` and context ``ctx`` on the remaining
    endogenous variables, by exhaustive enumeration.

    Tuples follow the endogenous declaration order restricted to ``subset``.
    """
    if not isinstance(m, FiniteScm):
        raise ScmError("fibers are defined for finite SCMs")
    subset = _subset_names(m, subset)
    ctx = dict(ctx or {})
    for name, value in list(e.items()) + list(ctx.items()):
        if value not in m.domain_of(name):
            raise ScmError(f"value {value!r} outside the domain of {name}")
    assign = {**ctx, **dict(e)}
    needed = set(_relevant_exo(m, subset)) - set(e)
    if needed:
        raise ScmError(f"missing exogenous values for {sorted(needed)}")
    needed_ctx = set(_relevant_ctx(m, subset)) - set(assign)
    if needed_ctx:
        raise ScmError(f"missing context values for {sorted(needed_ctx)}")
    out = []
    for combo in itertools.product(*(m.endogenous[o].values for o in subset)):
        assign.update(zip(subset, combo))
        if all(assign[o] == m.mechanisms[o](assign) for o in subset):
            out.append(combo)
    return frozenset(out)


# --- solvability ------------------------------------------------------------

def _finite_scan(m: FiniteScm, subset, need_unique: bool):
    subset = _subset_names(m, subset)
    exo = _relevant_exo(m, subset)
    ctx_names = _relevant_ctx(m, subset)
    for e_assign, _ in _support_assignments(m, exo):
        for ctx_combo in itertools.product(*(m.endogenous[i].values for i in ctx_names)):
            assign = dict(e_assign)
            assign.update(zip(ctx_names, ctx_combo))
            sols = _fibers(m, subset, assign, first_only=not need_unique)
            bad = (len(sols) == 0) if not need_unique else (len(sols) != 1)
            if bad:
                witness = {
                    "e": dict(e_assign),
                    "ctx": dict(zip(ctx_names, ctx_combo)),
                    "fiber": tuple(sols),
                }
                return SolvabilityResult(False, subset, witness)
    return SolvabilityResult(True, subset)


def _linear_support_directions(m: LinearScm, tol):
    """Columns spanning the support directions of the noise, block by block."""
    cols = []
    for b in m.blocks:
        if not len(b.coords):
            continue
        w, v = np.linalg.eigh((b.cov + b.cov.T) / 2)
        keep = v[:, w > tol * max(1.0, w.max(initial=0.0))]
        block = np.zeros((len(m.coord_names), keep.shape[1]))
        coords = m.coord_names
        rows = [coords.index(c) for c in b.coords]
        block[rows, :] = keep
        cols.append(block)
    if not cols:
        return np.zeros((len(m.coord_names), 0))
    return np.hstack(cols)


def _linear_solvable(m: LinearScm, subset, tol=None):
    tol = tolerance(tol)
    subset = tuple(n for n in m.endogenous_names if n in set([subset] if isinstance(subset, str) else subset))
    idx = [m.endo_index(o) for o in subset]
    rest = [i for i, n in enumerate(m.endogenous_names) if n not in set(subset)]
    A = np.eye(len(idx)) - m.B[np.ix_(idx, idx)]
    if len(idx) == 0:
        return SolvabilityResult(True, subset)
    smin = np.linalg.svd(A, compute_uv=False)
    if smin.size and smin.min() > tol * max(1.0, smin.max()):
        return SolvabilityResult(True, subset)
    # singular restriction: the system is consistent for almost every noise
    # value and every context iff the possible right-hand sides stay in the
    # column space of A
    variances = m.coord_variances()
    if np.any(variances <= tol):
        raise ScmError(
            "linear solvability with singular I - B_OO requires all noise "
            "coordinates to have positive variance"
        )
    S = _linear_support_directions(m, tol)
    rhs_cols = [m.B[np.ix_(idx, rest)], m.Gamma[idx, :] @ S]
    offset = (m.Gamma[idx, :] @ m.noise_mean() + m.c[idx]).reshape(-1, 1)
    stacked = np.hstack([c for c in rhs_cols if c.size] + [offset])
    rank_a = np.linalg.matrix_rank(A, tol=tol * max(1.0, float(np.abs(A).max(initial=0.0))))
    rank_full = np.linalg.matrix_rank(
        np.hstack([A, stacked]), tol=tol * max(1.0, float(np.abs(A).max(initial=0.0)), float(np.abs(stacked).max(initial=0.0)))
    )
    if rank_a == rank_full:
        return SolvabilityResult(True, subset)
    return SolvabilityResult(False, subset, witness={"inconsistent": "I - B_OO rank test"})


def solvable_wrt(m, subset) -> SolvabilityResult:
    """Is the subsystem on ``subset`` solvable: does every positive-probability
    input admit at least one solution?"""
    if isinstance(m, FiniteScm):
        return _finite_scan(m, subset, need_unique=False)
    if isinstance(m, LinearScm):
        return _linear_solvable(m, subset)
    raise ScmError(f"not an SCM: {m!r}")


def uniquely_solvable_wrt(m, subset) -> SolvabilityResult:
    """Is the subsystem on ``subset`` uniquely solvable: is every fiber over a
    positive-probability input a singleton?"""
    if isinstance(m, FiniteScm):
        return _finite_scan(m, subset, need_unique=True)
    if isinstance(m, LinearScm):
        tol = tolerance()
        subset_t = tuple(n for n in m.endogenous_names if n in set([subset] if isinstance(subset, str) else subset))
        idx = [m.endo_index(o) for o in subset_t]
        A = np.eye(len(idx)) - m.B[np.ix_(idx, idx)]
        if len(idx) == 0:
            return SolvabilityResult(True, subset_t)
        s = np.linalg.svd(A, compute_uv=False)
        if s.min() > tol * max(1.0, s.max()):
            return SolvabilityResult(True, subset_t)
        return SolvabilityResult(False, subset_t, witness={"singular": "I - B_OO"})
    raise ScmError(f"not an SCM: {m!r}")


def structurally_uniquely_solvable(m) -> bool:
    """Uniquely solvable with respect to every singleton; equivalently the
    augmented graph has no self-loops (both are computed and cross-checked)."""
    from .scm import augmented_graph

    by_singletons = all(bool(uniquely_solvable_wrt(m, [i])) for i in m.endogenous_names)
    no_self_loops = all((i, i) not in augmented_graph(m).directed for i in m.endogenous_names)
    if by_singletons != no_self_loops:  # pragma: no cover - consistency guard
        raise AssertionError("self-loop detection disagrees with singleton solvability")
    return by_singletons


def uniquely_solvable_all_subsets(m, max_nodes: int = 16) -> bool:
    """Uniquely solvable with respect to every subset, decided through the
    loops of the functional graph only."""
    from .scm import functional_graph

    g = functional_graph(m)
    if len(g.nodes) > max_nodes:
        raise ScmError(f"uniquely_solvable_all_subsets bound exceeded ({len(g.nodes)} > {max_nodes})")
    loops = enumerate_loops(MixedGraph(g.nodes, g.directed, ()), max_nodes=max_nodes)
    return all(bool(uniquely_solvable_wrt(m, sorted(loop))) for loop in loops)


# --- solve maps --------------------------------------------------------------

def _canonical_args(m, subset):
    pa = set()
    for o in subset:
        pa |= functional_parents(m, o)
    if isinstance(m, FiniteScm):
        endo_all, exo_all = m.endogenous_names, m.exogenous_names
    else:
        endo_all, exo_all = m.endogenous_names, m.block_names
    inside = set(subset)
    endo_args = tuple(i for i in endo_all if i in pa and i not in inside)
    exo_args = tuple(j for j in exo_all if j in pa)
    return endo_args, exo_args


def solve_map(m, subset) -> SolveMap:
    """The mapping g assigning to each input of the subsystem its unique
    solution; requires unique solvability with respect to ``subset``."""
    if isinstance(m, LinearScm):
        res = uniquely_solvable_wrt(m, subset)
        if not res:
            raise NotUniquelySolvable(res.subset, res.witness)
        subset_t = res.subset if isinstance(res.subset, tuple) else tuple(res.subset)
        subset_t = tuple(n for n in m.endogenous_names if n in set(subset_t))
        idx = [m.endo_index(o) for o in subset_t]
        rest_names = tuple(n for n in m.endogenous_names if n not in set(subset_t))
        rest = [m.endo_index(o) for o in rest_names]
        inv = np.linalg.inv(np.eye(len(idx)) - m.B[np.ix_(idx, idx)])
        return SolveMap(
            targets=subset_t,
            endo_args=rest_names,
            exo_args=m.coord_names,
            A=inv @ m.B[np.ix_(idx, rest)],
            G=inv @ m.Gamma[idx, :],
            d=inv @ m.c[idx],
        )
    if not isinstance(m, FiniteScm):
        raise ScmError(f"not an SCM: {m!r}")

    subset_t = _subset_names(m, subset)
    res = _finite_scan(m, subset_t, need_unique=True)
    if not res:
        raise NotUniquelySolvable(res.subset, res.witness)
    endo_args, exo_args = _canonical_args(m, subset_t)
    # non-parent declared arguments are pinned; the relation does not depend
    # on them on the support
    pin = {}
    for i in _relevant_ctx(m, subset_t):
        if i not in endo_args:
            pin[i] = m.endogenous[i].first()
    for j in _relevant_exo(m, subset_t):
        if j not in exo_args:
            sup = m.support(j)
            pin[j] = sup[0] if sup else m.exogenous[j].first()

    supports = {j: set(m.support(j)) for j in exo_args}
    table = {}
    for e_combo in itertools.product(*(m.exogenous[j].values for j in exo_args)):
        on_support = all(v in supports[j] for j, v in zip(exo_args, e_combo))
        for ctx_combo in itertools.product(*(m.endogenous[i].values for i in endo_args)):
            assign = dict(pin)
            assign.update(zip(exo_args, e_combo))
            assign.update(zip(endo_args, ctx_combo))
            sols = _fibers(m, subset_t, assign)
            if on_support and len(sols) != 1:  # pragma: no cover - guarded by the scan
                raise NotUniquelySolvable(subset_t, {"e": e_combo, "ctx": ctx_combo})
            if sols:
                value = sorted(sols)[0] if len(sols) > 1 else sols[0]
            else:
                value = tuple(m.endogenous[o].first() for o in subset_t)
            table[(ctx_combo, e_combo)] = value
    return SolveMap(targets=subset_t, endo_args=endo_args, exo_args=exo_args, table=table)


# --- distributions of solutions ----------------------------------------------

def observational_distribution(m):
    """The law of the unique solution: exact pushforward for finite SCMs,
    closed-form Gaussian for linear SCMs."""
    if isinstance(m, FiniteScm):
        endo = m.endogenous_names
        exo = m.exogenous_names
        probs = {}
        for e_assign, p in _support_assignments(m, exo):
            sols = _fibers(m, endo, e_assign)
            if len(sols) == 0:
                raise NotSolvable(endo, {"e": e_assign})
            if len(sols) > 1:
                raise NotUniquelySolvable(endo, {"e": e_assign, "fiber": tuple(sols)})
            cell = sols[0]
            probs[cell] = probs.get(cell, Fraction(0)) + p
        return DiscreteDistribution(endo, m.endogenous, probs)
    if isinstance(m, LinearScm):
        tol = tolerance()
        n = len(m.endogenous)
        A = np.eye(n) - m.B
        s = np.linalg.svd(A, compute_uv=False) if n else np.array([1.0])
        if s.min() <= tol * max(1.0, s.max()):
            res = _linear_solvable(m, m.endogenous_names)
            if not res:
                raise NotSolvable(m.endogenous_names, res.witness)
            raise NotUniquelySolvable(m.endogenous_names, {"singular": "I - B"})
        inv = np.linalg.inv(A)
        mean = inv @ (m.Gamma @ m.noise_mean() + m.c)
        cov = inv @ m.Gamma @ m.noise_cov() @ m.Gamma.T @ inv.T
        return GaussianDistribution(m.endogenous_names, mean, cov)
    raise ScmError(f"not an SCM: {m!r}")


def observational_polytope(m: FiniteScm, max_selectors: int = 10**6) -> SelectorPolytope:
    """All achievable observational distributions of a solvable finite SCM,
    represented by the vertex distributions of deterministic selectors."""
    if not isinstance(m, FiniteScm):
        raise ScmError("the selector polytope is defined for finite SCMs")
    endo = m.endogenous_names
    points = []
    count = 1
    for e_assign, p in _support_assignments(m, m.exogenous_names):
        sols = _fibers(m, endo, e_assign)
        if not sols:
            raise NotSolvable(endo, {"e": e_assign})
        points.append((p, sols))
        count *= len(sols)
        if count > max_selectors:
            raise ScmError(f"selector polytope overflow: more than {max_selectors} candidate selectors")
    vertices = []
    seen = set()
    fibers = {i: tuple(sols) for i, (_, sols) in enumerate(points)}
    for choice in itertools.product(*(sols for _, sols in points)):
        probs = {}
        for (p, _), cell in zip(points, choice):
            probs[cell] = probs.get(cell, Fraction(0)) + p
        dist = DiscreteDistribution(endo, m.endogenous, probs)
        key = frozenset(dist.probs.items())
        if key not in seen:
            seen.add(key)
            vertices.append(dist)
    vertices.sort(key=lambda d: sorted((tuple(map(str, c)), str(p)) for c, p in d.probs.items()))
    return SelectorPolytope(vars=endo, vertices=tuple(vertices), fibers=fibers)


def interventional_distribution(m, intervention: Mapping[str, object]):
    """Observational distribution of the intervened model; solvability errors
    propagate."""
    from .transform import intervene

    return observational_distribution(intervene(m, intervention))


def counterfactual_distribution(m, factual_do, observed, cf_do, query):
    """Distribution of the counterfactual query variables (primed copies)
    given a factual intervention, factual observations, and a counterfactual
    intervention, computed on the intervened twin model.

    ``factual_do`` and ``cf_do`` use original variable names; ``query`` names
    the primed copies explicitly.
    """
    from .transform import intervene, twin

    tw = twin(m)
    iv = dict(factual_do)
    for k, v in dict(cf_do).items():
        iv[k + "'"] = v
    intervened = intervene(tw, iv)
    dist = observational_distribution(intervened)
    query = tuple([query] if isinstance(query, str) else query)
    for q in query:
        if not q.endswith("'"):
            raise UnknownNameError(f"counterfactual query variables are primed copies, got {q!r}")
    observed = dict(observed)
    if isinstance(dist, DiscreteDistribution):
        if observed:
            dist = dist.condition(observed)
        return dist.marginal(query)
    if observed:
        dist = gaussian_condition(dist, observed)
    return dist.marginal(query)


def gaussian_condition(d: GaussianDistribution, observed: Mapping[str, float], tol=None) -> GaussianDistribution:
    """Condition a Gaussian on exact values of some coordinates (Schur
    complement).  A badly conditioned observed block is regularized and the
    result flagged; a singular observed block is an error."""
    tol = tolerance(tol)
    names = list(observed)
    for v in names:
        if v not in d.vars:
            raise UnknownNameError(f"unknown coordinate {v!r}")
    keep = [v for v in d.vars if v not in observed]
    ia = [d.vars.index(v) for v in keep]
    ib = [d.vars.index(v) for v in names]
    saa = d.cov[np.ix_(ia, ia)]
    sab = d.cov[np.ix_(ia, ib)]
    sbb = d.cov[np.ix_(ib, ib)]
    values = np.array([float(observed[v]) for v in names])
    s = np.linalg.svd(sbb, compute_uv=False)
    # invertibility is an absolute test against epsilon; a block that passes
    # it but is badly conditioned gets regularized instead of trusted
    if s.min() <= tol:
        raise EvidenceError("observed block covariance is singular")
    regularized = d.regularized
    if s.max() / s.min() > REGULARIZATION_CONDITION:
        sbb = sbb + tol * np.eye(len(names))
        regularized = True
    k = sab @ np.linalg.inv(sbb)
    mean = d.mean[ia] + k @ (values - d.mean[ib])
    cov = saa - k @ sab.T
    return GaussianDistribution(tuple(keep), mean, cov, regularized=regularized)
