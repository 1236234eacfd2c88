"""Shared random-instance generators. Everything is seeded and deterministic."""

import numpy as np

from biascsp.instances import CspInstance, Hypergraph
from biascsp.predicates import Predicate


def rng_for(*ids):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(list(ids))))


def random_hypergraph(rng, n, r, m=None, weighted=False, uniform_arity=True, simple=False):
    """Random instance with m edges of arity r (exactly r when uniform_arity)."""
    if m is None:
        m = int(rng.integers(1, 2 * n + 1))
    edges = []
    for _ in range(m):
        size = r if uniform_arity else int(rng.integers(1, r + 1))
        edges.append(tuple(sorted(rng.choice(n, size=size, replace=False).tolist())))
    if simple:
        edges = sorted(set(edges))
        m = len(edges)
    if weighted:
        vw = (0.1 + rng.random(n)).tolist()
    else:
        vw = None
    ew = (0.2 + rng.random(m)).tolist() if weighted else None
    return Hypergraph.build(n, edges, vertex_weights=vw, edge_weights=ew, arity=r)


def random_csp(rng, n, r, psi, mu, m=None, negations=False):
    H = random_hypergraph(rng, n, r, m=m)
    pats = None
    if negations:
        pats = tuple(tuple(int(s) for s in rng.choice([1, -1], size=r)) for _ in H.edges)
    return CspInstance(H, psi, mu, pats)


def random_predicate(rng, r):
    table = rng.integers(0, 2, size=1 << r)
    return Predicate(r, tuple(int(v) for v in table))


def triangle():
    return Hypergraph.build(3, [(0, 1), (0, 2), (1, 2)], arity=2)


def path3():
    return Hypergraph.build(3, [(0, 1), (1, 2)], arity=2)


def k4():
    return Hypergraph.build(4, [(i, j) for i in range(4) for j in range(i + 1, 4)], arity=2)
