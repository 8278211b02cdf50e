"""Named graphs and random generators used by tests and the CLI examples."""

from itertools import combinations

import numpy as np

from .graph import Graph


def g5():
    """The five-vertex non-chordal example graph (1-based: 12 14 15 23 34 35 45)."""
    return Graph.from_edges(5, [(0, 1), (0, 3), (0, 4), (1, 2), (2, 3), (2, 4), (3, 4)])


def path(p):
    return Graph.from_edges(p, [(i, i + 1) for i in range(p - 1)])


def cycle(p):
    return Graph.from_edges(p, [(i, (i + 1) % p) for i in range(p)])


def complete(p):
    return Graph.from_edges(p, list(combinations(range(p), 2)))


def empty(p):
    return Graph(p, frozenset())


def bipartite(m, n):
    """Complete bipartite H_{m,n}: parts 0..m-1 and m..m+n-1."""
    return Graph.from_edges(m + n, [(i, m + j) for i in range(m) for j in range(n)])


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


def petersen_subgraph():
    """Petersen graph induced on its first six vertices: outer 5-cycle plus one spoke."""
    return petersen().induced(range(6))


def random_chordal(rng, p, density=0.5):
    """Random chordal graph: each new vertex joins a random clique of the current graph."""
    edges = set()
    cliques = [[0]]
    for v in range(1, p):
        base = cliques[rng.integers(len(cliques))]
        k = rng.integers(0, len(base) + 1) if rng.random() < density else rng.integers(0, 2)
        nb = sorted(rng.choice(base, size=min(k, len(base)), replace=False).tolist())
        for w in nb:
            edges.add((w, v))
        cliques.append(nb + [v])
    return Graph.from_edges(p, sorted(edges))


def random_graph(rng, p, prob):
    es = [(i, j) for i, j in combinations(range(p), 2) if rng.random() < prob]
    return Graph.from_edges(p, es)


def random_correlation(rng, p, min_eig=0.2):
    """Random correlation matrix with smallest eigenvalue at least ``min_eig``.

    Eigenvalues are ``min_eig`` plus a Dirichlet share of the remaining trace.
    """
    from scipy.stats import random_correlation as rc
    eig = min_eig + (p - p * min_eig) * rng.dirichlet(np.ones(p))
    eig = eig * (p / eig.sum())
    R = rc.rvs(eig, random_state=rng)
    R = (R + R.T) / 2
    np.fill_diagonal(R, 1.0)
    return R


def random_spd(rng, p, dof=None):
    dof = dof or p + 2
    X = rng.normal(size=(p, dof))
    return X @ X.T / dof + 0.1 * np.eye(p)
