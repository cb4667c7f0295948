"""Directed mixed graphs and the graph algorithms used throughout the library.

Graphs are immutable value objects: nodes keep their construction order for
display, but equality, hashing and serialization are order-insensitive
(canonically sorted).  Directed edges may be self-loops; bidirected edges
connect distinct nodes.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from typing import Iterable

from .errors import ScmError, UnknownNameError

__all__ = [
    "MixedGraph",
    "relatives",
    "intervene_graph",
    "latent_projection",
    "enumerate_loops",
    "d_separated",
    "sigma_separated",
]


def _as_node_set(seed) -> frozenset:
    if isinstance(seed, str):
        return frozenset([seed])
    return frozenset(seed)


class MixedGraph:
    """A directed mixed graph (nodes, directed edges, bidirected edges)."""

    __slots__ = ("_nodes", "_directed", "_bidirected", "_pa", "_ch", "_scc")

    def __init__(self, nodes: Iterable[str], directed=(), bidirected=()):
        ordered = []
        seen = set()
        for n in nodes:
            if not isinstance(n, str) or not n:
                raise ScmError(f"node names must be non-empty strings, got {n!r}")
            if n not in seen:
                seen.add(n)
                ordered.append(n)
        self._nodes = tuple(ordered)
        node_set = seen

        d = set()
        for tail, head in directed:
            if tail not in node_set or head not in node_set:
                raise UnknownNameError(f"directed edge ({tail}, {head}) has an endpoint outside the node set")
            d.add((tail, head))
        self._directed = frozenset(d)

        b = set()
        for pair in bidirected:
            u, v = tuple(pair)
            if u not in node_set or v not in node_set:
                raise UnknownNameError(f"bidirected edge ({u}, {v}) has an endpoint outside the node set")
            if u == v:
                raise ScmError(f"bidirected edge endpoints must be distinct, got ({u}, {v})")
            b.add((u, v) if u < v else (v, u))
        self._bidirected = frozenset(b)

        pa = {n: set() for n in self._nodes}
        ch = {n: set() for n in self._nodes}
        for tail, head in self._directed:
            pa[head].add(tail)
            ch[tail].add(head)
        self._pa = pa
        self._ch = ch
        self._scc = None

    # --- basic structure -------------------------------------------------

    @property
    def nodes(self) -> tuple:
        return self._nodes

    @property
    def directed(self) -> frozenset:
        return self._directed

    @property
    def bidirected(self) -> frozenset:
        return self._bidirected

    def __eq__(self, other):
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return (
            set(self._nodes) == set(other._nodes)
            and self._directed == other._directed
            and self._bidirected == other._bidirected
        )

    def __hash__(self):
        return hash((frozenset(self._nodes), self._directed, self._bidirected))

    def __repr__(self):
        return (
            f"MixedGraph(nodes={sorted(self._nodes)}, "
            f"directed={sorted(self._directed)}, bidirected={sorted(self._bidirected)})"
        )

    def _check_known(self, nodes):
        unknown = _as_node_set(nodes) - set(self._nodes)
        if unknown:
            raise UnknownNameError(f"unknown node(s): {', '.join(sorted(unknown))}")

    def is_subgraph_of(self, other: "MixedGraph") -> bool:
        return (
            set(self._nodes) <= set(other._nodes)
            and self._directed <= other._directed
            and self._bidirected <= other._bidirected
        )

    def induced(self, nodes) -> "MixedGraph":
        keep = _as_node_set(nodes)
        self._check_known(keep)
        return MixedGraph(
            [n for n in self._nodes if n in keep],
            [e for e in self._directed if e[0] in keep and e[1] in keep],
            [e for e in self._bidirected if e[0] in keep and e[1] in keep],
        )

    # --- relatives -------------------------------------------------------

    def parents_of(self, seed) -> frozenset:
        seed = _as_node_set(seed)
        self._check_known(seed)
        out = set()
        for n in seed:
            out |= self._pa[n]
        return frozenset(out)

    def children_of(self, seed) -> frozenset:
        seed = _as_node_set(seed)
        self._check_known(seed)
        out = set()
        for n in seed:
            out |= self._ch[n]
        return frozenset(out)

    def _closure(self, seed, step):
        """Reflexive-transitive closure of ``step`` starting from ``seed``."""
        seen = set(seed)
        queue = deque(seed)
        while queue:
            for nxt in step[queue.popleft()]:
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return frozenset(seen)

    def ancestors_of(self, seed) -> frozenset:
        seed = _as_node_set(seed)
        self._check_known(seed)
        return self._closure(seed, self._pa)

    def descendants_of(self, seed) -> frozenset:
        seed = _as_node_set(seed)
        self._check_known(seed)
        return self._closure(seed, self._ch)

    def scc_of(self, node: str) -> frozenset:
        self._check_known([node])
        return self.scc_map()[node]

    def scc_map(self) -> dict:
        """Map every node to its strongly connected component (as a frozenset)."""
        if self._scc is None:
            comp = {}
            for n in self._nodes:
                if n not in comp:
                    members = self.descendants_of([n]) & self.ancestors_of([n])
                    fs = frozenset(members)
                    for m in fs:
                        comp[m] = fs
            self._scc = comp
        return self._scc

    def is_acyclic(self) -> bool:
        """True iff there is no directed cycle; a self-loop counts as a cycle."""
        for tail, head in self._directed:
            if tail == head:
                return False
        return all(len(c) == 1 for c in self.scc_map().values())

    # --- serialization ---------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "nodes": sorted(self._nodes),
            "directed": sorted([list(e) for e in self._directed]),
            "bidirected": sorted([list(e) for e in self._bidirected]),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json_obj(cls, obj) -> "MixedGraph":
        try:
            return cls(obj["nodes"], [tuple(e) for e in obj.get("directed", [])],
                       [tuple(e) for e in obj.get("bidirected", [])])
        except (KeyError, TypeError) as exc:
            raise ScmError(f"malformed graph JSON: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "MixedGraph":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScmError(f"malformed graph JSON: {exc}") from exc
        return cls.from_json_obj(obj)

    def to_dot(self) -> str:
        lines = ["digraph G {"]
        for n in sorted(self._nodes):
            lines.append(f'  "{n}";')
        for tail, head in sorted(self._directed):
            lines.append(f'  "{tail}" -> "{head}";')
        for u, v in sorted(self._bidirected):
            lines.append(f'  "{u}" -> "{v}" [dir=both];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def relatives(g: MixedGraph, seed, kind: str) -> frozenset:
    """One of parents/children/ancestors/descendants of a node set.

    Ancestors and descendants are reflexive-transitive (a node is its own
    ancestor via the length-0 path), parents and children are one-step.
    """
    dispatch = {
        "parents": g.parents_of,
        "children": g.children_of,
        "ancestors": g.ancestors_of,
        "descendants": g.descendants_of,
    }
    if kind not in dispatch:
        raise ScmError(f"unknown relative kind {kind!r}")
    return dispatch[kind](seed)


def intervene_graph(g: MixedGraph, targets) -> MixedGraph:
    """Remove all edges incoming on ``targets`` (and bidirected edges touching them)."""
    targets = _as_node_set(targets)
    g._check_known(targets)
    return MixedGraph(
        g.nodes,
        [e for e in g.directed if e[1] not in targets],
        [e for e in g.bidirected if e[0] not in targets and e[1] not in targets],
    )


def latent_projection(g: MixedGraph, latent) -> MixedGraph:
    """Project a directed graph onto the complement of ``latent``.

    An edge i -> j survives iff there is a directed path from i to j whose
    intermediate nodes all lie in ``latent`` (of any length >= 1 edges).
    Defined for directed graphs only.
    """
    latent = _as_node_set(latent)
    g._check_known(latent)
    if g.bidirected:
        raise ScmError("latent_projection is defined for directed graphs (no bidirected edges)")
    keep = [n for n in g.nodes if n not in latent]
    keep_set = set(keep)
    edges = set()
    for i in keep:
        # nodes in `latent` reachable from i by edges whose heads stay latent,
        # plus i itself for the n = 0 (direct edge) case
        reach = {i}
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for v in g._ch[u]:
                if v in keep_set:
                    edges.add((i, v))
                elif v not in reach:
                    reach.add(v)
                    queue.append(v)
    return MixedGraph(keep, edges, ())


def enumerate_loops(g: MixedGraph, max_nodes: int = 16) -> frozenset:
    """All node subsets whose induced subgraph is strongly connected.

    Singletons always qualify (length-0 connectivity).  Enumeration is
    exponential, hence the node-count bound.
    """
    if len(g.nodes) > max_nodes:
        raise ScmError(f"enumerate_loops bound exceeded: {len(g.nodes)} nodes > {max_nodes}")
    loops = set()
    nodes = g.nodes
    for r in range(1, len(nodes) + 1):
        for subset in itertools.combinations(nodes, r):
            if r == 1:
                loops.add(frozenset(subset))
                continue
            sub = g.induced(subset)
            anchor = subset[0]
            comp = sub.descendants_of([anchor]) & sub.ancestors_of([anchor])
            if comp == frozenset(subset):
                loops.add(frozenset(subset))
    return frozenset(loops)


# --- separation --------------------------------------------------------

def _paths_between(g: MixedGraph, sources: frozenset, sinks: frozenset):
    """Yield all simple paths from a source to a sink as (nodes, steps).

    ``steps[k]`` describes the edge between nodes[k] and nodes[k+1]:
    'out' for nodes[k] -> nodes[k+1], 'in' for nodes[k] <- nodes[k+1],
    'bi' for nodes[k] <-> nodes[k+1].  A single node in both sets yields
    the length-0 path.  Parallel directed/bidirected edges yield distinct
    paths because their collider status differs.
    """
    directed = g.directed
    bidirected = g.bidirected
    neighbours = {n: set() for n in g.nodes}
    for tail, head in directed:
        neighbours[tail].add(head)
        neighbours[head].add(tail)
    for u, v in bidirected:
        neighbours[u].add(v)
        neighbours[v].add(u)

    def steps_between(u, v):
        if (u, v) in directed:
            yield "out"
        if (v, u) in directed:
            yield "in"
        if ((u, v) if u < v else (v, u)) in bidirected:
            yield "bi"

    for start in sorted(sources):
        if start in sinks:
            yield (start,), ()
        stack = [((start,), (), {start})]
        while stack:
            nodes, steps, seen = stack.pop()
            for nxt in sorted(neighbours[nodes[-1]] - seen):
                for kind in steps_between(nodes[-1], nxt):
                    new_nodes = nodes + (nxt,)
                    new_steps = steps + (kind,)
                    if nxt in sinks:
                        yield new_nodes, new_steps
                    stack.append((new_nodes, new_steps, seen | {nxt}))


def _path_blocked(g, nodes, steps, cond, an_cond, sigma):
    if nodes[0] in cond or nodes[-1] in cond:
        return True
    scc = g.scc_map() if sigma else None
    for k in range(1, len(nodes) - 1):
        node = nodes[k]
        into_left = steps[k - 1] in ("out", "bi")
        into_right = steps[k] in ("in", "bi")
        if into_left and into_right:
            # collider: blocks unless it has a descendant in (or is in) cond
            if node not in an_cond:
                return True
        else:
            # non-collider
            if node not in cond:
                continue
            if not sigma:
                return True
            children_on_path = []
            if steps[k - 1] == "in":
                children_on_path.append(nodes[k - 1])
            if steps[k] == "out":
                children_on_path.append(nodes[k + 1])
            if any(child not in scc[node] for child in children_on_path):
                return True
    return False


def _separated(g, a, b, s, sigma):
    a = _as_node_set(a)
    b = _as_node_set(b)
    s = _as_node_set(s)
    if not a or not b:
        raise ScmError("separation needs nonempty node sets on both sides")
    for group in (a, b, s):
        g._check_known(group)
    an_cond = g.ancestors_of(s) if s else frozenset()
    for nodes, steps in _paths_between(g, a, b):
        if not _path_blocked(g, nodes, steps, s, an_cond, sigma):
            return False
    return True


def d_separated(g: MixedGraph, a, b, s) -> bool:
    """True iff every path between ``a`` and ``b`` is d-blocked by ``s``."""
    return _separated(g, a, b, s, sigma=False)


def sigma_separated(g: MixedGraph, a, b, s) -> bool:
    """True iff every path between ``a`` and ``b`` is sigma-blocked by ``s``.

    Sigma-blocking differs from d-blocking only at a non-collider in the
    conditioning set: it blocks only if at least one of its children on the
    path leaves its strongly connected component.  On acyclic graphs the two
    notions coincide.
    """
    return _separated(g, a, b, s, sigma=True)
