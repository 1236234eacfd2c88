"""Instance-to-instance transformations, each with a forward constructor and,
where meaningful, a labeling decoder.

All constructors are deterministic given (instance, seed). "Arbitrary" choices
(padding vertices, dummy placement) are always made by ascending vertex index.
Duplicate edges produced by truncation are merged with summed weight, which is
value-equivalent to keeping multiplicities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .instances import (
    CspInstance,
    Hypergraph,
    InfeasibleError,
    Labeling,
    StructuralError,
    value_csp,
    value_dksh,
)
from .predicates import Predicate, minimal_elements, permute_coordinates

TOL = 1e-9


class ReductionError(ValueError):
    pass


class DegenerateSplitError(ReductionError):
    """w(V \\ T) = 0: the caller must fall back to pure enumeration over T."""


@dataclass(frozen=True)
class ReductionCertificate:
    source_value: float
    target_value: float
    decoded_labeling: Labeling | None
    inequality_checked: str

    def to_json(self) -> dict:
        return {
            "source_value": self.source_value,
            "target_value": self.target_value,
            "decoded_labeling": self.decoded_labeling.as_string() if self.decoded_labeling else None,
            "inequality_checked": self.inequality_checked,
        }


# ---------------------------------------------------------------------------
# DkSH -> single predicate (hardness direction)

@dataclass(frozen=True)
class DkshToPredicate:
    csp: CspInstance
    mu_prime: float
    coordinate_order: tuple
    n_source: int
    source_bias: float

    def decode(self, sigma_prime: Labeling) -> Labeling:
        """Restrict to the original vertices, then pad ascending to weight exactly mu*n."""
        n = self.n_source
        bits = list(sigma_prime.bits[:n])
        k = self.source_bias * n
        if abs(k - round(k)) > TOL:
            raise ReductionError(f"decode needs mu*n integral, got {k}")
        k = round(k)
        if sum(bits) > k:
            raise ReductionError("labeling heavier than mu*n cannot be padded down")
        for i in range(n):
            if sum(bits) == k:
                break
            if bits[i] == 0:
                bits[i] = 1
        return Labeling(tuple(bits))


def dksh_to_predicate(H: Hypergraph, psi: Predicate, beta: int, mu: float) -> DkshToPredicate:
    """Embed a DkSH instance of arity i* into a biased CSP on predicate psi.

    beta must be a minimal accepting string of psi of weight i*. Coordinates of
    psi are relabeled so beta becomes ones-then-zeros; the relabeling is
    recorded in the result. Dummy vertices of weight n are appended to every
    edge, and the bias shrinks to mu / (r - i* + 1).
    """
    if beta not in minimal_elements(psi):
        raise ReductionError(f"beta {beta:#b} is not a minimal element of the predicate")
    r = psi.arity
    beta_bits = [(beta >> (r - 1 - t)) & 1 for t in range(r)]
    i_star = sum(beta_bits)
    if H.arity != i_star or any(len(e) != i_star for e in H.edges):
        raise ReductionError(f"source instance must be {i_star}-uniform for this beta")
    if len(set(H.vertex_weights)) != 1:
        raise ReductionError("source DkSH instance must have uniform vertex weights")
    if not 0.0 < mu < 1.0:
        raise ReductionError(f"bias must be in (0,1), got {mu}")
    order = tuple(t for t in range(r) if beta_bits[t]) + tuple(t for t in range(r) if not beta_bits[t])
    psi_tilde = permute_coordinates(psi, order)
    n = H.n
    dummies = tuple(range(n, n + r - i_star))
    edges = tuple(e + dummies for e in H.edges)
    weights = (1.0,) * n + (float(n),) * (r - i_star)
    mu_prime = mu / (r - i_star + 1)
    csp = CspInstance(
        Hypergraph(n + r - i_star, weights, edges, H.edge_weights, r), psi_tilde, mu_prime)
    return DkshToPredicate(csp, mu_prime, order, n, mu)


# ---------------------------------------------------------------------------
# Single-string predicate -> weighted DkSH (algorithmic direction)

def predicate_to_dksh(csp: CspInstance) -> Hypergraph:
    """Truncate every constraint to the coordinates where the single accepting
    string is 1; duplicates merge into edge weights. Vertices and the bias
    carry over unchanged."""
    accepting = csp.predicate.accepting()
    if len(accepting) != 1:
        raise ReductionError("predicate_to_dksh needs a single-string predicate")
    beta = accepting[0]
    r = csp.predicate.arity
    keep = [t for t in range(r) if (beta >> (r - 1 - t)) & 1]
    H = csp.hypergraph
    edges = tuple(tuple(e[t] for t in keep) for e in H.edges)
    out = Hypergraph(H.n, H.vertex_weights, edges, H.edge_weights,
                     max((len(e) for e in edges), default=0), allow_empty_edges=True)
    return out.merge_duplicate_edges()


# ---------------------------------------------------------------------------
# Heavy-vertex split

@dataclass(frozen=True)
class HeavySplit:
    heavy: tuple                 # sorted heavy vertex set T
    rest: tuple                  # new index -> original vertex, for V \ T
    instance: Hypergraph         # conditional instance on V \ T, weights renormalized
    delta: float                 # bias for the conditional instance
    kept_fraction: float         # Pr_{e ~ E}[sigma_T(e|_T) = all ones]
    sigma_T_weight: float

    def lift(self, pi: Labeling, sigma_T: dict, n: int) -> Labeling:
        bits = [0] * n
        for v, b in sigma_T.items():
            bits[v] = b
        for new_i, v in enumerate(self.rest):
            bits[v] = pi.bits[new_i]
        return Labeling(tuple(bits))


def heavy_set(H: Hypergraph, mu: float, heavy_exponent: float = 10.0) -> tuple:
    w = H.normalized_weights().vertex_weights
    thresh = mu ** heavy_exponent
    return tuple(i for i in range(H.n) if w[i] > thresh)


def heavy_vertex_split(H: Hypergraph, mu: float, eta: float, sigma_T: dict,
                       heavy_exponent: float = 10.0) -> HeavySplit:
    """Condition on a partial labeling of the heavy vertices.

    Keeps edges whose heavy part is fully 1-labeled, truncated to the light
    vertices (empty truncations stay as trivially satisfied edges), renormalizes
    the light vertex weights, and computes the residual bias
    delta = (mu(1+eta) - w(sigma_T)) / w(V \\ T).
    """
    Hn = H.normalized_weights()
    T = heavy_set(H, mu, heavy_exponent)
    if set(sigma_T) != set(T):
        raise ReductionError(f"sigma_T must label exactly the heavy set {T}")
    w_sigma = sum(Hn.vertex_weights[v] for v in T if sigma_T[v])
    if w_sigma > mu + TOL:
        raise ReductionError(f"w(sigma_T)={w_sigma} exceeds mu={mu}")
    rest = tuple(i for i in range(H.n) if i not in set(T))
    w_rest = sum(Hn.vertex_weights[v] for v in rest)
    if w_rest <= 0:
        raise DegenerateSplitError("all weight is on the heavy set")
    new_index = {v: i for i, v in enumerate(rest)}
    edges, weights, kept = [], [], 0.0
    total = H.total_edge_weight()
    for e, w in zip(H.edges, H.edge_weights):
        if all(sigma_T[v] for v in e if v in sigma_T):
            edges.append(tuple(new_index[v] for v in e if v not in sigma_T))
            weights.append(w)
            kept += w
    inst = Hypergraph(len(rest), tuple(Hn.vertex_weights[v] / w_rest for v in rest),
                      tuple(edges), tuple(weights), H.arity,
                      allow_empty_edges=True).merge_duplicate_edges()
    delta = (mu * (1.0 + eta) - w_sigma) / w_rest
    return HeavySplit(T, rest, inst, delta, kept / total if total > 0 else 0.0, w_sigma)


# ---------------------------------------------------------------------------
# Cloud expansion: weighted -> uniform weights

@dataclass(frozen=True)
class CloudExpansion:
    instance: Hypergraph
    source: Hypergraph
    cloud_sizes: tuple
    offsets: tuple
    N: int

    def decode(self, sigma_prime: Labeling, rng) -> Labeling:
        """Per-vertex uniform cloud-index sampling: sigma(i) = sigma'(i, x(i))."""
        bits = []
        for i, ell in enumerate(self.cloud_sizes):
            j = int(rng.integers(ell))
            bits.append(sigma_prime.bits[self.offsets[i] + j])
        return Labeling(tuple(bits))

    def sample_edge_two_step(self, rng) -> tuple:
        """Draw e ~ E by weight, then uniform cloud indices per endpoint."""
        src = self.source
        probs = np.asarray(src.edge_weights) / src.total_edge_weight()
        k = int(rng.choice(len(src.edges), p=probs))
        e = src.edges[k]
        return tuple(self.offsets[v] + int(rng.integers(self.cloud_sizes[v])) for v in e)


def cloud_expansion(H: Hypergraph, *, n_cap: int = 10**6, decimals: int = 6,
                    multiple_of: int = 1, edge_cap: int = 200000) -> CloudExpansion:
    """Replace vertex i by a cloud of w(i)*N unit-weight copies.

    N is the smallest value <= n_cap making every w(i)*N integral after the
    weights are rounded to `decimals` digits (and, optionally, divisible by
    `multiple_of` so downstream size constraints stay integral). Each edge is
    expanded over the product of its clouds with weight w(e)/prod(cloud sizes).
    """
    if any(w <= 0 for w in H.vertex_weights):
        raise ReductionError("cloud expansion needs strictly positive vertex weights")
    total = H.total_vertex_weight()
    scale = 10 ** decimals
    p = [round(w / total * scale) for w in H.vertex_weights]
    if any(v == 0 for v in p):
        raise ReductionError(f"a vertex weight rounds to zero at {decimals} decimals")
    P = sum(p)
    g = 0
    for v in p:
        g = math.gcd(g, v)
    base = P // math.gcd(g, P)
    N = base * (multiple_of // math.gcd(base, multiple_of))
    if N > n_cap:
        raise ReductionError(f"cloud expansion needs N={N} > cap {n_cap}")
    sizes = tuple(v * N // P for v in p)
    offsets, acc = [], 0
    for ell in sizes:
        offsets.append(acc)
        acc += ell
    edges, weights = [], []
    n_expanded = 0
    for e, w in zip(H.edges, H.edge_weights):
        combos = 1
        for v in e:
            combos *= sizes[v]
        n_expanded += combos
        if n_expanded > edge_cap:
            raise ReductionError(f"cloud expansion exceeds edge cap {edge_cap}")
        ew = w / combos
        for js in itertools.product(*[range(sizes[v]) for v in e]):
            edges.append(tuple(offsets[v] + j for v, j in zip(e, js)))
            weights.append(ew)
    inst = Hypergraph(acc, (1.0,) * acc, tuple(edges), tuple(weights), H.arity,
                      allow_empty_edges=H.allow_empty_edges)
    return CloudExpansion(inst, H, sizes, tuple(offsets), N)


# ---------------------------------------------------------------------------
# Clique expansion: arity r -> graph

def clique_expansion(H: Hypergraph, mu: float, *, strict: bool = True) -> Hypergraph:
    """Replace each hyperedge by its vertex pairs with weight mu^(r-2) w(e) / C(r,2)."""
    r = H.arity
    if r < 2:
        raise ReductionError("clique expansion needs arity >= 2")
    factor = mu ** (r - 2) / math.comb(r, 2)
    acc: dict = {}
    for e, w in zip(H.edges, H.edge_weights):
        if len(set(e)) != len(e):
            if strict:
                raise ReductionError(f"edge {e} repeats a vertex")
            continue
        for u, v in itertools.combinations(sorted(set(e)), 2):
            acc[(u, v)] = acc.get((u, v), 0.0) + factor * w
    edges = tuple(sorted(acc))
    if not edges:
        raise ReductionError("clique expansion produced no edges")
    return Hypergraph(H.n, H.vertex_weights, edges, tuple(acc[e] for e in edges), 2)


# ---------------------------------------------------------------------------
# DkS -> Max-2-CSP (random partition)

@dataclass(frozen=True)
class Max2CspInstance:
    n_vars: int
    label_size: int
    constraints: tuple   # (i, j, frozenset of accepted (a, b) label pairs)

    def __post_init__(self):
        for i, j, acc in self.constraints:
            if i == j:
                raise StructuralError("2-CSP constraints need distinct variables")
            for a, b in acc:
                if not (0 <= a < self.label_size and 0 <= b < self.label_size):
                    raise StructuralError(f"label pair {(a, b)} outside [{self.label_size}]^2")

    def satisfied_count(self, assignment) -> int:
        return sum(1 for i, j, acc in self.constraints
                   if (assignment[i], assignment[j]) in acc)

    def solve_exact(self, cap: int = 2 * 10**6):
        """Best assignment by full enumeration; ties to the lexicographically smallest."""
        if self.label_size ** self.n_vars > cap:
            raise InfeasibleError("2-CSP exact enumeration over cap")
        best, best_assign = -1, None
        for assignment in itertools.product(range(self.label_size), repeat=self.n_vars):
            c = self.satisfied_count(assignment)
            if c > best:
                best, best_assign = c, assignment
        return best_assign, best

    def solve_greedy(self):
        """Label variables in ascending order, maximizing constraints already decided."""
        assignment = [0] * self.n_vars
        decided = set()
        by_var: dict = {}
        for k, (i, j, acc) in enumerate(self.constraints):
            by_var.setdefault(i, []).append(k)
            by_var.setdefault(j, []).append(k)
        for v in range(self.n_vars):
            best_label, best_gain = 0, -1
            for label in range(self.label_size):
                gain = 0
                for k in by_var.get(v, []):
                    i, j, acc = self.constraints[k]
                    other = j if i == v else i
                    if other in decided:
                        pair = (label, assignment[j]) if i == v else (assignment[i], label)
                        if pair in acc:
                            gain += 1
                if gain > best_gain:
                    best_label, best_gain = label, gain
            assignment[v] = best_label
            decided.add(v)
        return tuple(assignment), self.satisfied_count(assignment)


@dataclass(frozen=True)
class DksToMax2Csp:
    csp: Max2CspInstance
    blocks: tuple   # blocks[i] = sorted tuple of original vertices; pi_i maps position -> label

    def decode(self, assignment) -> tuple:
        """Any assignment maps to a set with exactly one vertex per block."""
        return tuple(sorted(self.blocks[i][assignment[i]] for i in range(len(self.blocks))))


def dks_to_max2csp(G: Hypergraph, mu: float, seed: int) -> DksToMax2Csp:
    """Random-partition reduction from unweighted DkS to a 2-CSP on mu*n variables
    with label set size 1/mu."""
    if G.arity != 2 or any(len(e) != 2 for e in G.edges):
        raise ReductionError("dks_to_max2csp needs a graph")
    if len(set(G.vertex_weights)) != 1 or any(w != G.edge_weights[0] for w in G.edge_weights):
        raise ReductionError("dks_to_max2csp needs an unweighted instance")
    simple = {tuple(sorted(e)) for e in G.edges}
    if len(simple) != len(G.edges):
        raise ReductionError("dks_to_max2csp needs a simple graph (no duplicate edges)")
    n = G.n
    R = 1.0 / mu
    ell = mu * n
    if abs(R - round(R)) > TOL or abs(ell - round(ell)) > TOL:
        raise ReductionError(f"need 1/mu and mu*n integral; got {R}, {ell}")
    R, ell = round(R), round(ell)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
    perm = rng.permutation(n)
    blocks = tuple(tuple(sorted(int(v) for v in perm[i * R:(i + 1) * R])) for i in range(ell))
    where = {}
    for i, block in enumerate(blocks):
        for pos, v in enumerate(block):
            where[v] = (i, pos)
    accepted: dict = {}
    for (a, b) in G.edges:
        (i, pa), (j, pb) = where[a], where[b]
        if i == j:
            continue
        if i > j:
            i, j, pa, pb = j, i, pb, pa
        accepted.setdefault((i, j), set()).add((pa, pb))
    constraints = tuple((i, j, frozenset(acc)) for (i, j), acc in sorted(accepted.items()))
    return DksToMax2Csp(Max2CspInstance(ell, R, constraints), blocks)


def induced_edge_count(G: Hypergraph, S) -> int:
    S = set(S)
    return sum(1 for e in G.edges if set(e) <= S)


def densest_subgraph_count(G: Hypergraph, k: int) -> int:
    """delta_k(G): max number of induced edges over k-subsets, by enumeration."""
    best = 0
    for S in itertools.combinations(range(G.n), k):
        best = max(best, induced_edge_count(G, S))
    return best


# ---------------------------------------------------------------------------
# Bias rescaling (folklore comparison between biases)

def bias_rescale(H: Hypergraph, mu: float, ell: int, direction: str, seed: int = 0,
                 scheme: str = "independent"):
    """Labeling transformer between biases ell*mu and mu on uniform instances.

    "subsample" shrinks an ell*mu*n-weight labeling to bias mu; "pad" extends a
    mu*n-weight labeling to ell*mu*n by ascending vertex index. Returns a
    callable (labeling, rng=None).

    The default subsample scheme keeps each support vertex independently with
    probability 1/ell, which retains each induced edge with probability exactly
    ell^-r. An exact uniform mu*n-subset (scheme="uniform-subset") retains only
    the hypergeometric (mu n)_r / (ell mu n)_r, which sits strictly below
    ell^-r at finite n, so the retention guarantee is tied to "independent".
    """
    if direction not in ("subsample", "pad"):
        raise ReductionError(f"unknown direction {direction!r}")
    if scheme not in ("independent", "uniform-subset"):
        raise ReductionError(f"unknown scheme {scheme!r}")
    n = H.n
    k_small, k_big = mu * n, ell * mu * n
    if abs(k_small - round(k_small)) > TOL or abs(k_big - round(k_big)) > TOL:
        raise ReductionError("both biases must be integral against n")
    k_small, k_big = round(k_small), round(k_big)

    def transform(sigma: Labeling, rng=None) -> Labeling:
        if rng is None:
            rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed])))
        supp = list(sigma.support())
        if direction == "subsample":
            if len(supp) < k_small:
                raise ReductionError(f"support {len(supp)} below target {k_small}")
            if ell == 1 and len(supp) == k_small:
                return sigma
            if scheme == "uniform-subset":
                chosen = rng.choice(supp, size=k_small, replace=False)
                return Labeling.from_support(n, (int(v) for v in chosen))
            keep = rng.random(len(supp)) < 1.0 / ell
            return Labeling.from_support(n, (v for v, k in zip(supp, keep) if k))
        bits = list(sigma.bits)
        for i in range(n):
            if sum(bits) >= k_big:
                break
            if bits[i] == 0:
                bits[i] = 1
        if sum(bits) < k_big:
            raise ReductionError("not enough vertices to pad")
        return Labeling(tuple(bits))

    return transform


# ---------------------------------------------------------------------------
# Certificate helpers

def certify_value_identity(H: Hypergraph, split: HeavySplit, sigma_T: dict,
                           pi: Labeling) -> ReductionCertificate:
    """Val_{sigma_T o pi}(H) must equal kept_fraction * Val_pi(H_sigma_T)."""
    lifted = split.lift(pi, sigma_T, H.n)
    lhs = value_dksh(lifted, H)
    rhs = split.kept_fraction * value_dksh(pi, split.instance)
    return ReductionCertificate(lhs, rhs, lifted, "heavy-split value identity")
