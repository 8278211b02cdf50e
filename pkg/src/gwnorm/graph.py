"""Undirected graphs, orderings, moral DAG closure and chordality tools.

Vertices are 0-based internally. Graph files are 1-based.
"""

from dataclasses import dataclass, field
from itertools import combinations

from .errors import ParseError, PreconditionError


def _edge(i, j):
    i, j = int(i), int(j)
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Graph:
    p: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.p < 0:
            raise PreconditionError("vertex count must be nonnegative")
        es = set()
        for e in self.edges:
            i, j = e
            if i == j:
                raise PreconditionError(f"self-loop at vertex {i}")
            if not (0 <= i < self.p and 0 <= j < self.p):
                raise PreconditionError(f"edge {e} has an endpoint outside 0..{self.p - 1}")
            es.add(_edge(i, j))
        object.__setattr__(self, "edges", frozenset(es))

    @classmethod
    def from_edges(cls, p, edges):
        edges = [_edge(*e) for e in edges]
        if len(set(edges)) != len(edges):
            raise PreconditionError("duplicate edge")
        return cls(p, frozenset(edges))

    @property
    def num_edges(self):
        return len(self.edges)

    def has_edge(self, i, j):
        return _edge(i, j) in self.edges

    def neighbors(self, v):
        return frozenset(j if i == v else i for (i, j) in self.edges if v in (i, j))

    def adjacency(self):
        adj = [set() for _ in range(self.p)]
        for i, j in self.edges:
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def degree(self, v):
        return len(self.neighbors(v))

    def add_edge(self, i, j):
        return Graph(self.p, self.edges | {_edge(i, j)})

    def remove_edge(self, i, j):
        e = _edge(i, j)
        if e not in self.edges:
            raise PreconditionError(f"edge {e} not in graph")
        return Graph(self.p, self.edges - {e})

    def induced(self, vertices):
        """Induced subgraph relabelled 0..k-1 in the order given."""
        vertices = list(vertices)
        pos = {v: k for k, v in enumerate(vertices)}
        es = [(pos[i], pos[j]) for (i, j) in self.edges if i in pos and j in pos]
        return Graph(len(vertices), frozenset(_edge(*e) for e in es))

    def is_clique(self, vertices):
        return all(self.has_edge(i, j) for i, j in combinations(sorted(vertices), 2))

    def components(self):
        adj = self.adjacency()
        seen, comps = set(), []
        for s in range(self.p):
            if s in seen:
                continue
            stack, comp = [s], []
            seen.add(s)
            while stack:
                v = stack.pop()
                comp.append(v)
                for w in adj[v]:
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            comps.append(sorted(comp))
        return comps

    def is_forest(self):
        return self.num_edges == self.p - len(self.components())


@dataclass(frozen=True)
class Ordering:
    """``perm[k]`` is the vertex at rank ``k``."""

    perm: tuple

    def __post_init__(self):
        perm = tuple(int(v) for v in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise PreconditionError("ordering is not a permutation of 0..p-1")
        object.__setattr__(self, "perm", perm)

    @classmethod
    def identity(cls, p):
        return cls(tuple(range(p)))

    @property
    def rank(self):
        r = [0] * len(self.perm)
        for k, v in enumerate(self.perm):
            r[v] = k
        return tuple(r)

    def __len__(self):
        return len(self.perm)


@dataclass(frozen=True)
class Dag:
    p: int
    arcs: frozenset
    order: Ordering = None

    def parents(self, v):
        return frozenset(i for (i, j) in self.arcs if j == v)

    def children(self, v):
        return frozenset(j for (i, j) in self.arcs if i == v)

    def indeg(self, v):
        return len(self.parents(v))

    def skeleton(self):
        return Graph(self.p, frozenset(_edge(i, j) for i, j in self.arcs))


@dataclass(frozen=True)
class MoralClosure:
    base: Dag
    fill_arcs: frozenset
    collider_sets: dict

    @property
    def arcs(self):
        return self.base.arcs | self.fill_arcs

    def skeleton(self):
        return Graph(self.base.p, frozenset(_edge(i, j) for i, j in self.arcs))


@dataclass(frozen=True)
class CliqueDecomposition:
    cliques: tuple
    separators: tuple


def orient(g, ord):
    if len(ord) != g.p:
        raise PreconditionError(f"ordering has length {len(ord)}, graph has {g.p} vertices")
    r = ord.rank
    arcs = frozenset((i, j) if r[i] < r[j] else (j, i) for (i, j) in g.edges)
    return Dag(g.p, arcs, ord)


def moral_closure(d):
    """Marry parents until nothing changes: the fixpoint G_0, G_1, ... ."""
    rank = d.order.rank if d.order is not None else _rank_from_arcs(d)
    arcs = set(d.arcs)
    while True:
        parents = [set() for _ in range(d.p)]
        for i, j in arcs:
            parents[j].add(i)
        new = set()
        for v in range(d.p):
            for a, b in combinations(sorted(parents[v]), 2):
                if (a, b) not in arcs and (b, a) not in arcs:
                    new.add((a, b) if rank[a] < rank[b] else (b, a))
        if not new:
            break
        arcs |= new
    fill = frozenset(arcs - set(d.arcs))
    colliders = {}
    for i, j in fill:
        colliders[(i, j)] = frozenset(
            k for k in range(d.p) if (i, k) in arcs and (j, k) in arcs)
    return MoralClosure(d, fill, colliders)


def _rank_from_arcs(d):
    # used only for a Dag built without an ordering
    indeg = [0] * d.p
    out = [[] for _ in range(d.p)]
    for i, j in d.arcs:
        indeg[j] += 1
        out[i].append(j)
    ready = sorted(v for v in range(d.p) if indeg[v] == 0)
    order = []
    while ready:
        v = ready.pop(0)
        order.append(v)
        for w in sorted(out[v]):
            indeg[w] -= 1
            if indeg[w] == 0:
                ready.append(w)
        ready.sort()
    if len(order) != d.p:
        raise PreconditionError("arcs contain a cycle")
    rank = [0] * d.p
    for k, v in enumerate(order):
        rank[v] = k
    return rank


def fill_count(g, ord):
    return len(moral_closure(orient(g, ord)).fill_arcs)


def is_perfect(g, ord):
    """True when every vertex's lower-ranked neighbours form a clique."""
    r = ord.rank
    adj = g.adjacency()
    for v in range(g.p):
        lower = [w for w in adj[v] if r[w] < r[v]]
        if not g.is_clique(lower):
            return False
    return True


def max_cardinality_search(g):
    adj = g.adjacency()
    weight = [0] * g.p
    visited = [False] * g.p
    order = []
    for _ in range(g.p):
        best = max((v for v in range(g.p) if not visited[v]),
                   key=lambda v: (weight[v], -v))
        visited[best] = True
        order.append(best)
        for w in adj[best]:
            if not visited[w]:
                weight[w] += 1
    return Ordering(tuple(order))


def is_chordal(g):
    """Return ``(True, perfect ordering)`` or ``(False, None)``."""
    ord = max_cardinality_search(g)
    if is_perfect(g, ord):
        return True, ord
    return False, None


def elimination_fill(g, ord):
    """Fill edges in insertion order, eliminating from the highest rank down."""
    adj = g.adjacency()
    r = ord.rank
    fills = []
    for v in reversed(ord.perm):
        lower = sorted((w for w in adj[v] if r[w] < r[v]))
        for a, b in combinations(lower, 2):
            if b not in adj[a]:
                adj[a].add(b)
                adj[b].add(a)
                fills.append(_edge(a, b))
    return fills


def min_fill_ordering(g):
    """Greedy min-fill elimination; ties go to the lowest label.

    The first vertex eliminated gets the highest rank.
    """
    adj = g.adjacency()
    remaining = set(range(g.p))
    elim = []
    while remaining:
        def cost(v):
            nb = [w for w in adj[v] if w in remaining]
            return sum(1 for a, b in combinations(nb, 2) if b not in adj[a])
        v = min(sorted(remaining), key=cost)
        nb = sorted(w for w in adj[v] if w in remaining)
        for a, b in combinations(nb, 2):
            adj[a].add(b)
            adj[b].add(a)
        remaining.remove(v)
        elim.append(v)
    return Ordering(tuple(reversed(elim)))


def chordal_cover(g, ord=None):
    """Min-fill cover: returns (cover graph, ordering, fill edges in insertion order)."""
    if ord is None:
        ord = min_fill_ordering(g)
    fills = elimination_fill(g, ord)
    cover = Graph(g.p, g.edges | frozenset(fills))
    return cover, ord, fills


def clique_decomposition(g, ord):
    if not is_perfect(g, ord):
        raise PreconditionError("ordering is not perfect for this graph (fill detected)")
    r = ord.rank
    adj = g.adjacency()
    cands = []
    for v in ord.perm:
        cands.append(frozenset([v] + [w for w in adj[v] if r[w] < r[v]]))
    cliques = []
    for c in cands:
        if any(c < o for o in cands):
            continue
        # a candidate equal to an earlier one cannot occur: v is its top vertex
        cliques.append(c)
    seps = []
    seen = set()
    for k, c in enumerate(cliques):
        if k > 0:
            seps.append(frozenset(seen & c))
        seen |= c
    return CliqueDecomposition(tuple(cliques), tuple(seps))


def triangle_count(g, e):
    i, j = e
    if not g.has_edge(i, j):
        raise PreconditionError(f"edge {e} not in graph")
    return len(common_neighbors(g, e))


def common_neighbors(g, e):
    i, j = e
    return g.neighbors(i) & g.neighbors(j)


def max_clique_size(g):
    """Largest clique of a small graph (exact, by growing cliques)."""
    adj = g.adjacency()
    best = 1 if g.p else 0

    def grow(clique, cands):
        nonlocal best
        best = max(best, len(clique))
        for v in sorted(cands):
            if v > (clique[-1] if clique else -1):
                grow(clique + [v], cands & adj[v])

    grow([], set(range(g.p)))
    return best


def parse_graph(text):
    p = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if p is None:
            if len(parts) != 2 or parts[0] != "p":
                raise ParseError(f"line {lineno}: expected 'p <n>' header")
            try:
                p = int(parts[1])
            except ValueError:
                raise ParseError(f"line {lineno}: bad vertex count {parts[1]!r}") from None
            if p < 1:
                raise ParseError(f"line {lineno}: vertex count must be positive")
            continue
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<i> <j>'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer vertex label") from None
        if not (1 <= i <= p and 1 <= j <= p):
            raise ParseError(f"line {lineno}: vertex label outside 1..{p}")
        if i == j:
            raise ParseError(f"line {lineno}: self-loop")
        e = _edge(i - 1, j - 1)
        if e in edges:
            raise ParseError(f"line {lineno}: duplicate edge {i} {j}")
        edges.append(e)
    if p is None:
        raise ParseError("missing 'p <n>' header")
    return Graph(p, frozenset(edges))


def read_graph(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read graph file {path}: {exc}") from None
    return parse_graph(text)


def format_graph(g):
    lines = [f"p {g.p}"]
    lines += [f"{i + 1} {j + 1}" for i, j in sorted(g.edges)]
    return "\n".join(lines) + "\n"
