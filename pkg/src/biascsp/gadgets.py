"""Dictatorship-test gadget lab.

Samplers for the biased noisy-hypercube, SSE-based, and unique-games-based
test distributions; exact influence and noise-operator machinery on tabulated
functions; exact small-scale acceptance oracles; and a seeded Monte Carlo
acceptance estimator.

Conventions: bits are 0/1 with 1 = "in the set" and, for leakage flags,
1 = top (no leak). Coordinates are 0-based, so the "first coordinate"
fallback of the decoding map is index 0.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

TABLE_CAP = 1 << 20


class GadgetError(ValueError):
    pass


def _rng(seed, *ids):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, ids)])))


@dataclass(frozen=True)
class GadgetParams:
    """Parameter block for the test distributions.

    nu, tau, alpha, epsilon, M only enter the soundness proofs; they are
    carried as diagnostic metadata and never used by the samplers.
    rho_formula records how rho was produced (it is always taken as input).
    """

    mu: float = 0.1
    rho: float = 0.3
    beta: float = 0.05
    eta: float = 0.01
    r: int = 2
    R: int = 4
    t: int = 3
    label_size: int = 4
    samples: int = 10_000
    seed: int = 0
    variant: str = "shared-theta"   # hypercube test: shared-theta | independent-copies
    rho_formula: str | None = None
    diagnostics: tuple = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("mu", "rho", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise GadgetError(f"{name}={v} must be in (0,1)")
        if not 0.0 <= self.eta < 1.0:
            raise GadgetError(f"eta={self.eta} must be in [0,1)")
        if self.samples < 1:
            raise GadgetError("samples must be >= 1")
        if self.r < 1:
            raise GadgetError("arity must be >= 1")
        if self.variant not in ("shared-theta", "independent-copies"):
            raise GadgetError(f"unknown hypercube variant {self.variant!r}")

    def to_json(self) -> dict:
        return {
            "mu": self.mu, "rho": self.rho, "beta": self.beta, "eta": self.eta,
            "r": self.r, "R": self.R, "t": self.t, "label_size": self.label_size,
            "samples": self.samples, "seed": self.seed, "variant": self.variant,
            "rho_formula": self.rho_formula, "diagnostics": list(self.diagnostics),
        }


# ---------------------------------------------------------------------------
# Tabulated functions on finite product spaces: influence and noise

@dataclass(frozen=True)
class TabulatedFunction:
    """f: prod_i Omega_i -> [0,1] on a finite product probability space."""

    sizes: tuple
    probs: tuple          # probs[i] sums to 1 over alphabet i
    table: np.ndarray     # shape == sizes

    def __post_init__(self):
        size = math.prod(self.sizes)
        if size > TABLE_CAP:
            raise GadgetError(f"domain size {size} exceeds cap {TABLE_CAP}")
        if tuple(self.table.shape) != tuple(self.sizes):
            raise GadgetError("table shape does not match domain sizes")
        for p in self.probs:
            if len(p) not in (0,) and abs(sum(p) - 1.0) > 1e-9:
                raise GadgetError("coordinate measures must sum to 1")
        if self.table.min() < -1e-12 or self.table.max() > 1 + 1e-12:
            raise GadgetError("table values must lie in [0,1]")

    @staticmethod
    def biased_cube(t: int, mu: float, values) -> "TabulatedFunction":
        """Function on {0,1}^t with each bit Bernoulli(mu)."""
        table = np.asarray(values, dtype=float).reshape((2,) * t)
        return TabulatedFunction((2,) * t, tuple((1 - mu, mu) for _ in range(t)), table)

    def expectation(self) -> float:
        out = self.table
        for axis in range(len(self.sizes) - 1, -1, -1):
            out = np.tensordot(out, np.asarray(self.probs[axis]), axes=([axis], [0]))
        return float(out)


def influence(f: TabulatedFunction, i: int) -> float:
    """Inf_i[f] = E[Var_i f], computed by exact summation."""
    t = len(f.sizes)
    if not 0 <= i < t:
        raise GadgetError(f"coordinate {i} out of range")
    p_i = np.asarray(f.probs[i])
    mean = np.tensordot(f.table, p_i, axes=([i], [0]))
    mean_sq = np.tensordot(f.table ** 2, p_i, axes=([i], [0]))
    var = np.maximum(mean_sq - mean ** 2, 0.0)
    for axis, probs in enumerate(p for j, p in enumerate(f.probs) if j != i):
        var = np.tensordot(var, np.asarray(probs), axes=([0], [0])) if var.ndim else var
    return float(var)


def noise_operator(f: TabulatedFunction, rho: float) -> TabulatedFunction:
    """T_rho: per coordinate keep with probability rho, resample otherwise."""
    if not 0.0 <= rho <= 1.0:
        raise GadgetError(f"noise parameter must be in [0,1], got {rho}")
    table = f.table.astype(float)
    for axis in range(len(f.sizes)):
        p = np.asarray(f.probs[axis])
        avg = np.tensordot(table, p, axes=([axis], [0]))
        table = rho * table + (1 - rho) * np.expand_dims(avg, axis)
    return TabulatedFunction(f.sizes, f.probs, table)


# ---------------------------------------------------------------------------
# The pairwise-correlated tuple distribution

def sample_correlated(probs, r: int, rho: float, rng) -> tuple:
    """With probability rho one shared draw copied r times, else r independent
    draws, both from the finite measure `probs`."""
    p = np.asarray(probs, dtype=float)
    if rng.random() < rho:
        w = int(rng.choice(len(p), p=p))
        return (w,) * r
    return tuple(int(v) for v in rng.choice(len(p), size=r, p=p))


# ---------------------------------------------------------------------------
# Biased noisy hypercube test

def sample_noisy_hypercube_edge(params: GadgetParams, rng) -> np.ndarray:
    """One hyperedge of the mu-biased noisy hypercube: an (r, R) 0/1 array.

    "independent-copies": each copy keeps each coordinate of x independently
    with probability rho. "shared-theta": per coordinate, with probability
    rho^2 every copy shares x's bit, otherwise every copy resamples.
    """
    mu, rho, r, R = params.mu, params.rho, params.r, params.R
    x = rng.random(R) < mu
    fresh = rng.random((r, R)) < mu
    if params.variant == "independent-copies":
        keep = rng.random((r, R)) < rho
    else:
        keep = np.broadcast_to(rng.random(R) < rho * rho, (r, R))
    return np.where(keep, x[None, :], fresh).astype(np.int8)


def hypercube_dictator_acceptance(params: GadgetParams) -> float:
    """Exact acceptance of the first-coordinate dictator, per variant."""
    mu, rho, r = params.mu, params.rho, params.r
    if params.variant == "shared-theta":
        s = rho * rho
        return s * mu + (1 - s) * mu ** r
    keep = rho + (1 - rho) * mu
    return mu * keep ** r + (1 - mu) * ((1 - rho) * mu) ** r


def _column_distribution(params: GadgetParams) -> np.ndarray:
    """Joint law of one coordinate column (x_1(i), ..., x_r(i)), as a vector
    indexed by the column pattern (copy 0 = MSB)."""
    mu, rho, r = params.mu, params.rho, params.r
    out = np.zeros(1 << r)
    for pattern in range(1 << r):
        bits = [(pattern >> (r - 1 - j)) & 1 for j in range(r)]
        prod = math.prod(mu if b else 1 - mu for b in bits)
        if params.variant == "shared-theta":
            s = rho * rho
            p = (1 - s) * prod
            if all(b == bits[0] for b in bits):
                p += s * (mu if bits[0] else 1 - mu)
        else:
            p = 0.0
            for x, px in ((0, 1 - mu), (1, mu)):
                term = px
                for b in bits:
                    term *= rho * (1 if b == x else 0) + (1 - rho) * (mu if b else 1 - mu)
                p += term
        out[pattern] = p
    return out


def hypercube_acceptance_exact(f_table, params: GadgetParams) -> float:
    """E[prod_j f(x_j)] by exhaustive enumeration over column patterns.

    f_table has length 2^R, indexed with coordinate 0 as MSB. The joint
    sample space has (2^r)^R points; capped at TABLE_CAP.
    """
    r, R = params.r, params.R
    if (1 << r) ** R > TABLE_CAP:
        raise GadgetError("hypercube enumeration over cap; use Monte Carlo")
    f = np.asarray(f_table, dtype=float)
    col_p = _column_distribution(params)
    total = 0.0
    for cols in itertools.product(range(1 << r), repeat=R):
        prob = math.prod(col_p[c] for c in cols)
        if prob == 0.0:
            continue
        prod = 1.0
        for j in range(r):
            row = 0
            for i, c in enumerate(cols):
                row |= ((c >> (r - 1 - j)) & 1) << (R - 1 - i)
            prod *= f[row]
            if prod == 0.0:
                break
        total += prob * prod
    return total


# ---------------------------------------------------------------------------
# SSE-based test for DkSH

@dataclass(frozen=True)
class RegularGraph:
    n: int
    neighbors: tuple   # neighbors[v] is a tuple of endpoints, fixed degree

    def __post_init__(self):
        degs = {len(nb) for nb in self.neighbors}
        if len(degs) != 1 or 0 in degs:
            raise GadgetError("graph must be regular with positive degree")

    @staticmethod
    def from_edges(n: int, edges) -> "RegularGraph":
        nbrs = [[] for _ in range(n)]
        for u, v in edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        return RegularGraph(n, tuple(tuple(sorted(nb)) for nb in nbrs))

    @property
    def degree(self) -> int:
        return len(self.neighbors[0])


def two_cliques(m: int) -> tuple:
    """Disjoint union of two K_m's; the first clique has expansion 0."""
    edges = [(i, j) for i in range(m) for j in range(i + 1, m)]
    edges += [(m + i, m + j) for i in range(m) for j in range(i + 1, m)]
    return RegularGraph.from_edges(2 * m, edges), tuple(range(m))


def edge_expansion(G: RegularGraph, S) -> float:
    S = set(S)
    vol = len(S) / G.n
    crossing = sum(1 for v in S for u in G.neighbors[v] if u not in S)
    total = G.n * G.degree
    return (crossing / total) / min(vol, 1 - vol)


def _walk_step(G: RegularGraph, a: int, eta: float, rng) -> int:
    if rng.random() < eta:
        return int(rng.integers(G.n))
    nb = G.neighbors[a]
    return int(nb[rng.integers(len(nb))])


@dataclass(frozen=True)
class SseDraw:
    """One draw of the SSE-based hyperedge distribution (all intermediates kept)."""

    A: np.ndarray            # (R,) vertices
    x: np.ndarray            # (R,) bits
    z: np.ndarray            # (R,) flags, 1 = top
    theta: np.ndarray        # (R,) shared-noise indicators
    B: np.ndarray            # (r, R) walked vertices
    x_copies: np.ndarray     # (r, R)
    z_copies: np.ndarray     # (r, R)
    x_hat: np.ndarray        # (r, R) after (1-eta)-correlated resampling
    z_prime: np.ndarray      # (r, R)
    B_prime: np.ndarray      # (r, R) after leakage
    x_prime: np.ndarray      # (r, R)
    perms: np.ndarray        # (r, R), perms[j][i] = pi_j(i)

    def queries(self):
        """The r permuted triples handed to the long code."""
        out = []
        r, R = self.B_prime.shape
        for j in range(r):
            p = self.perms[j]
            B_q = np.empty(R, dtype=self.B_prime.dtype)
            x_q = np.empty(R, dtype=self.x_prime.dtype)
            z_q = np.empty(R, dtype=self.z_prime.dtype)
            B_q[p] = self.B_prime[j]
            x_q[p] = self.x_prime[j]
            z_q[p] = self.z_prime[j]
            out.append((B_q, x_q, z_q))
        return out


def sse_test_sample(G: RegularGraph, params: GadgetParams, rng) -> SseDraw:
    """One draw of the hyperedge distribution from the SSE-composed verifier."""
    mu, rho, beta, eta, r, R = (params.mu, params.rho, params.beta,
                                params.eta, params.r, params.R)
    if R > 16 or G.n > 64:
        raise GadgetError("SSE sampler is desk scale: R <= 16, |V| <= 64")
    A = rng.integers(G.n, size=R)
    B = np.array([[ _walk_step(G, int(A[i]), eta, rng) for i in range(R)]
                  for _ in range(r)])
    x = (rng.random(R) < mu).astype(np.int8)
    z = (rng.random(R) < beta).astype(np.int8)
    theta = (rng.random(R) < rho).astype(np.int8)
    fresh_x = (rng.random((r, R)) < mu).astype(np.int8)
    fresh_z = (rng.random((r, R)) < beta).astype(np.int8)
    shared = theta[None, :].astype(bool)
    x_copies = np.where(shared, x[None, :], fresh_x)
    z_copies = np.where(shared, z[None, :], fresh_z)
    keep_pair = rng.random((r, R)) < 1 - eta
    re_x = (rng.random((r, R)) < mu).astype(np.int8)
    re_z = (rng.random((r, R)) < beta).astype(np.int8)
    x_hat = np.where(keep_pair, x_copies, re_x)
    z_prime = np.where(keep_pair, z_copies, re_z)
    leak = z_prime == 0
    leak_B = rng.integers(G.n, size=(r, R))
    leak_x = (rng.random((r, R)) < mu).astype(np.int8)
    B_prime = np.where(leak, leak_B, B)
    x_prime = np.where(leak, leak_x, x_hat)
    perms = np.array([rng.permutation(R) for _ in range(r)])
    return SseDraw(A, x, z, theta, B, x_copies, z_copies, x_hat, z_prime,
                   B_prime, x_prime, perms)


def dictator_strategy(A, z, S) -> tuple:
    """Pi(A, z) = coordinates landing in S x {top}; the decoded coordinate is
    its unique element when it is a singleton, else the first coordinate."""
    S = set(S)
    Pi = tuple(i for i in range(len(A)) if int(A[i]) in S and int(z[i]) == 1)
    if len(Pi) == 1:
        return Pi, Pi[0], True
    return Pi, 0, False


def sse_dictator_assignment(S):
    """The honest long code induced by a planted set: read x at the decoded
    coordinate of (B, z)."""
    S = set(S)

    def f(B, x, z) -> int:
        _, i_star, _ = dictator_strategy(B, z, S)
        return int(x[i_star])

    return f


def sse_accepts(draw: SseDraw, assignment) -> bool:
    return all(assignment(B_q, x_q, z_q) == 1 for B_q, x_q, z_q in draw.queries())


def sse_dictator_acceptance_exact(G: RegularGraph, S, params: GadgetParams) -> float:
    """Exact acceptance of the dictator strategy by exhaustive enumeration.

    Coordinates are i.i.d.; per coordinate the sufficient statistic of copy j
    is (membership of the query in S x top, the x' bit), i.e. 4 states per
    copy. Enumerates all (4^r)^R coordinate-state vectors, weighting each copy
    by the exact probability its decoded coordinate reads a 1 (the ambiguous
    case averages x' over the uniformly permuted first coordinate).
    """
    mu, rho, beta, eta, r, R = (params.mu, params.rho, params.beta,
                                params.eta, params.r, params.R)
    n_states = 4 ** r
    if n_states ** R > TABLE_CAP:
        raise GadgetError("SSE enumeration over cap; use Monte Carlo")
    S = set(S)
    vol = len(S) / G.n
    # P[B_j in S | a], identical for every copy
    q_a = [eta * vol + (1 - eta) * sum(1 for u in G.neighbors[a] if u in S) / G.degree
           for a in range(G.n)]
    gamma = {(xb, zb): (mu if xb else 1 - mu) * (beta if zb else 1 - beta)
             for xb in (0, 1) for zb in (0, 1)}
    joint = np.zeros(n_states)
    for a in range(G.n):
        pa = 1.0 / G.n
        for xb in (0, 1):
            px = mu if xb else 1 - mu
            for zb in (0, 1):
                pz = beta if zb else 1 - beta
                for th in (0, 1):
                    pt = rho if th else 1 - rho
                    # law of (x_hat, z') for one copy given (x, z, theta)
                    pair = {k: eta * gamma[k] for k in gamma}
                    if th:
                        pair[(xb, zb)] += 1 - eta
                    else:
                        for k in gamma:
                            pair[k] += (1 - eta) * gamma[k]
                    # per-copy state law: state = 2*p + v
                    d = [0.0] * 4
                    leak_mass = pair[(0, 0)] + pair[(1, 0)]
                    d[0] += leak_mass * (1 - mu)            # p=0, v=0 via leak
                    d[1] += leak_mass * mu                  # p=0, v=1 via leak
                    for v in (0, 1):
                        top = pair[(v, 1)]
                        d[2 * 1 + v] += top * q_a[a]        # p=1, v=x_hat
                        d[2 * 0 + v] += top * (1 - q_a[a])  # B outside S
                    w = pa * px * pz * pt
                    for combo in range(n_states):
                        prod = 1.0
                        c = combo
                        for _ in range(r):
                            prod *= d[c & 3]
                            c >>= 2
                        joint[combo] += w * prod
    total = 0.0
    for states in itertools.product(range(n_states), repeat=R):
        prob = math.prod(joint[c] for c in states)
        if prob == 0.0:
            continue
        acc = 1.0
        for j in range(r):
            shift = 2 * j
            pv = [(states[i] >> shift) & 3 for i in range(R)]
            members = [i for i, s in enumerate(pv) if s & 2]
            if len(members) == 1:
                acc *= pv[members[0]] & 1
            else:
                acc *= sum(s & 1 for s in pv) / R
            if acc == 0.0:
                break
        total += prob * acc
    return total


# ---------------------------------------------------------------------------
# Unique-games-based test

@dataclass(frozen=True)
class UgInstance:
    """Unique games on label set [t]; each edge (u, v) carries the bijection
    pi_{u->v}, stored so that a labeling satisfies it iff pi[sigma(u)] == sigma(v)."""

    n: int
    t: int
    edges: tuple   # (u, v, pi) with pi a tuple of length t

    def __post_init__(self):
        for u, v, pi in self.edges:
            if sorted(pi) != list(range(self.t)):
                raise GadgetError(f"edge ({u},{v}) carries a non-bijection")

    def neighbors(self, v: int):
        """(w, pi_{w->v}) pairs over edges incident to v."""
        out = []
        for a, b, pi in self.edges:
            if a == v:
                inv = [0] * self.t
                for i, p in enumerate(pi):
                    inv[p] = i
                out.append((b, tuple(inv)))
            elif b == v:
                out.append((a, tuple(pi)))
        return out

    def satisfied_fraction(self, sigma) -> float:
        good = sum(1 for u, v, pi in self.edges if pi[sigma[u]] == sigma[v])
        return good / len(self.edges)


def ug_satisfiable_instance(n: int, t: int, m: int, seed: int):
    """A perfectly satisfiable instance together with its planted labeling."""
    rng = _rng(seed, 71)
    sigma = tuple(int(v) for v in rng.integers(t, size=n))
    edges = []
    for _ in range(m):
        u = int(rng.integers(n))
        v = int(rng.integers(n - 1))
        v = v if v < u else v + 1
        others_src = [i for i in range(t) if i != sigma[u]]
        others_dst = [i for i in range(t) if i != sigma[v]]
        perm_rest = rng.permutation(len(others_dst))
        pi = [0] * t
        pi[sigma[u]] = sigma[v]
        for i, j in zip(others_src, perm_rest):
            pi[i] = others_dst[j]
        edges.append((u, v, tuple(pi)))
    return UgInstance(n, t, tuple(edges)), sigma


def dictator_long_code(label: int, t: int, R: int):
    """Lambda_label: [R]^t -> [R], reading coordinate `label`."""

    def f(zvec) -> int:
        return int(zvec[label])

    return f


def folded_eval(f, zvec: np.ndarray, R: int) -> int:
    """Evaluate the folded code: f(z - z_0 * ones mod R) + z_0 mod R."""
    shift = int(zvec[0])
    return (f((zvec - shift) % R) + shift) % R


def ug_test_accepts(instance: UgInstance, codes, params: GadgetParams, rng) -> bool:
    """One run of the k-query equality test on folded long codes.

    codes maps vertex -> long code function over [R]^t. k = params.r copies;
    shared z coordinates with probability rho, (1-eta)-correlated queries.
    """
    t, R, k = params.t, params.label_size, params.r
    if t > 8 or R > 8:
        raise GadgetError("UG sampler is desk scale: t <= 8, label size <= 8")
    v = int(rng.integers(instance.n))
    nbrs = instance.neighbors(v)
    if not nbrs:
        raise GadgetError(f"vertex {v} has no neighbors")
    picks = [nbrs[int(rng.integers(len(nbrs)))] for _ in range(k)]
    z = rng.integers(R, size=t)
    theta = rng.random(t) < params.rho
    z_js = np.where(np.broadcast_to(theta, (k, t)), z[None, :],
                    rng.integers(R, size=(k, t)))
    keep = rng.random((k, t)) < 1 - params.eta
    z_primes = np.where(keep, z_js, rng.integers(R, size=(k, t)))
    values = []
    for j, (w, pi) in enumerate(picks):
        y = z_primes[j][np.asarray(pi)]
        values.append(folded_eval(codes[w], y, R))
    return all(val == values[0] for val in values)


def ug_completeness_bound(params: GadgetParams, eps_c: float = 0.0) -> float:
    """rho (1 - eta k) (1 - eps_c k): the dictator acceptance guarantee."""
    k = params.r
    return params.rho * (1 - params.eta * k) * (1 - eps_c * k)


# ---------------------------------------------------------------------------
# Monte Carlo harness

def mc_acceptance(one_sample, params: GadgetParams, batch: int = 10_000):
    """Unbiased acceptance estimate with standard error.

    one_sample(rng) -> 0/1. Batches draw from disjoint seed streams
    (seed, batch index); the merged mean is order-independent.
    """
    n = params.samples
    sums = []
    done = 0
    b = 0
    while done < n:
        take = min(batch, n - done)
        rng = _rng(params.seed, 97, b)
        sums.append(float(sum(one_sample(rng) for _ in range(take))))
        done += take
        b += 1
    hits = math.fsum(sums)
    p_hat = hits / n
    stderr = math.sqrt(max(p_hat * (1 - p_hat), 0.0) / n)
    return p_hat, stderr
