"""Approximation algorithms composed end-to-end: DkS backends, the clique
expansion + rounding algorithm for unweighted DkSH, the cloud-expansion solver
for bounded weights, heavy-set enumeration for arbitrary weights, and the
single-string / general-predicate / negation wrappers on top.

Randomness discipline: every random draw flows from (cfg.seed, stage id,
repetition index) through numpy SeedSequence, so a result is a pure function
of (instance, cfg) regardless of thread count, and merges are tie-broken by
iteration order (beta ascending, sigma_T ascending, repetition ascending).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .instances import (
    CspInstance,
    Hypergraph,
    InfeasibleError,
    Labeling,
    brute_force_opt,
    relative_weight,
    value_csp,
    value_dksh,
)
from .predicates import (
    Predicate,
    bitstring,
    minimal_elements,
    negation_conjugate,
    single_string_predicate,
)
from .reductions import (
    DegenerateSplitError,
    cloud_expansion,
    clique_expansion,
    dks_to_max2csp,
    heavy_set,
    heavy_vertex_split,
)

TOL = 1e-9

_STAGE = {"dks": 1, "round": 2, "decode": 3, "cloud": 4, "weighted": 5,
          "sub": 6, "beta": 7, "pattern": 8, "partition": 9}


def _rng(seed, *ids):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *ids])))


def _child_seed(seed, stage, index=0) -> int:
    return int(np.random.SeedSequence([seed, _STAGE[stage], index]).generate_state(1)[0])


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    seed: int = 0
    repetitions: int | None = None   # default ceil((1/mu)^r), capped
    eta: float = 0.5
    dks_backend: str = "exact"       # exact | greedy-peel | via-2csp
    heavy_exponent: float = 10.0
    heavy_cap: int = 20
    size_band: float = 0.2
    bounded_weight_exponent: float = 8.0
    rep_cap: int = 10_000
    threads: int = 1                 # merging is order-independent; kept for CLI parity

    def validate(self, mu: float):
        if not 0.0 < mu < 1.0:
            raise SolverError(f"bias must be in (0,1), got {mu}")
        if not mu * mu < self.eta < 1.0:
            raise SolverError(f"eta={self.eta} outside (mu^2, 1) for mu={mu}")
        if self.dks_backend not in ("exact", "greedy-peel", "via-2csp"):
            raise SolverError(f"unknown dks backend {self.dks_backend!r}")
        if self.repetitions is not None and self.repetitions < 1:
            raise SolverError("repetitions must be >= 1")

    def reps_for(self, mu: float, r: int) -> int:
        if self.repetitions is not None:
            return min(self.repetitions, self.rep_cap)
        return min(math.ceil((1.0 / mu) ** r), self.rep_cap)

    def child(self, stage: str, index: int = 0) -> "SolverConfig":
        return replace(self, seed=_child_seed(self.seed, stage, index))

    def to_json(self) -> dict:
        return {
            "seed": self.seed, "repetitions": self.repetitions, "eta": self.eta,
            "dks_backend": self.dks_backend, "heavy_exponent": self.heavy_exponent,
            "heavy_cap": self.heavy_cap, "size_band": self.size_band,
            "bounded_weight_exponent": self.bounded_weight_exponent,
            "rep_cap": self.rep_cap, "threads": self.threads,
        }


@dataclass(frozen=True)
class SolveResult:
    labeling: Labeling
    value: float
    relative_weight: float
    slack_used: float
    trace: tuple = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "labeling": self.labeling.as_string(),
            "value": self.value,
            "relative_weight": self.relative_weight,
            "slack_used": self.slack_used,
            "trace": [dict(t) for t in self.trace],
        }


def _result(sigma: Labeling, value: float, H: Hypergraph, mu: float, trace) -> SolveResult:
    rw = relative_weight(sigma, H)
    return SolveResult(sigma, value, rw, max(0.0, rw / mu - 1.0), tuple(trace))


# ---------------------------------------------------------------------------
# Elementary pieces

def subsample_half(sigma: Labeling, seed: int) -> Labeling:
    """Keep each 1-bit independently with probability 1/2; zeros stay zero."""
    rng = _rng(seed)
    bits = tuple(b if b == 0 else int(rng.integers(2)) for b in sigma.bits)
    return Labeling(bits)


def greedy_dksh1(H: Hypergraph, k: int) -> Labeling:
    """Top-k vertices by covered singleton-edge weight; ties by ascending index.

    The arity-1 objective is modular, so this greedy is in fact exact, which
    comfortably clears the generic (1 - 1/e) guarantee.
    """
    if any(len(e) > 1 for e in H.edges):
        raise SolverError("greedy_dksh1 needs an arity-1 instance")
    if k > H.n:
        raise SolverError(f"k={k} exceeds n={H.n}")
    deg = [0.0] * H.n
    for e, w in zip(H.edges, H.edge_weights):
        if e:
            deg[e[0]] += w
    chosen = sorted(range(H.n), key=lambda v: (-deg[v], v))[:k]
    return Labeling.from_support(H.n, chosen)


def _adjust_to_size(bits, k) -> Labeling:
    """Flip lowest-indexed eligible vertices until the support has exactly k ones."""
    bits = list(bits)
    count = sum(bits)
    i = 0
    while count < k and i < len(bits):
        if bits[i] == 0:
            bits[i] = 1
            count += 1
        i += 1
    i = 0
    while count > k and i < len(bits):
        if bits[i] == 1:
            bits[i] = 0
            count -= 1
        i += 1
    return Labeling(tuple(bits))


def _peel(H: Hypergraph, k: int) -> Labeling:
    """Iteratively drop the min-weighted-degree vertex until k remain."""
    alive = [True] * H.n
    edge_alive = [True] * len(H.edges)
    deg = [0.0] * H.n
    for e, w in zip(H.edges, H.edge_weights):
        for v in e:
            deg[v] += w
    remaining = H.n
    while remaining > k:
        drop = min((v for v in range(H.n) if alive[v]), key=lambda v: (deg[v], v))
        alive[drop] = False
        remaining -= 1
        for idx, (e, w) in enumerate(zip(H.edges, H.edge_weights)):
            if edge_alive[idx] and drop in e:
                edge_alive[idx] = False
                for v in e:
                    if alive[v]:
                        deg[v] -= w
    return Labeling(tuple(1 if alive[v] else 0 for v in range(H.n)))


# ---------------------------------------------------------------------------
# DkS (graphs)

def solve_dks(G: Hypergraph, mu: float, cfg: SolverConfig) -> SolveResult:
    """Densest-k-subgraph with a pluggable backend; the output has exactly
    floor(mu*n) vertices (exact/via-2csp require mu*n integral)."""
    cfg.validate(mu)
    n = G.n
    k = mu * n
    trace = [{"stage": "dks", "backend": cfg.dks_backend}]
    if cfg.dks_backend in ("exact", "via-2csp"):
        if abs(k - round(k)) > TOL:
            raise SolverError(f"mu*n={k} must be integral for backend {cfg.dks_backend}")
        k = round(k)
    else:
        k = math.floor(k + TOL)
    if cfg.dks_backend == "exact":
        sigma, value = brute_force_opt(G, mu, "exactly")
        return _result(sigma, value, G, mu, trace)
    if cfg.dks_backend == "greedy-peel":
        sigma = _peel(G, k)
        return _result(sigma, value_dksh(sigma, G), G, mu, trace)
    # via-2csp: random partition per repetition, exact-or-greedy labeler
    best = None
    reps = cfg.reps_for(mu, 2)
    for j in range(reps):
        red = dks_to_max2csp(G, mu, seed=_child_seed(cfg.seed, "partition", j))
        csp = red.csp
        if csp.label_size ** csp.n_vars <= 100_000:
            assignment, _ = csp.solve_exact()
        else:
            assignment, _ = csp.solve_greedy()
        sigma = Labeling.from_support(n, red.decode(assignment))
        val = value_dksh(sigma, G)
        if best is None or val > best[0]:
            best = (val, sigma, j)
    trace.append({"stage": "dks-2csp", "chosen_rep": best[2], "reps": reps})
    return _result(best[1], best[0], G, mu, trace)


# ---------------------------------------------------------------------------
# Unweighted DkSH: clique expansion + rounding

def rounding_edge_success_bound(e, S, mu: float, alpha: float) -> float:
    """Disjoint-events lower bound on Pr[e subset S'] under the mixing rounding:
    sum over vertex pairs of e inside S of alpha^2 (1-alpha)^(|e|-2) mu^(|e|-2)."""
    import itertools as it
    r = len(e)
    if r < 2:
        return 0.0
    total = 0.0
    for u, v in it.combinations(sorted(set(e)), 2):
        if u in S and v in S:
            total += alpha ** 2 * (1 - alpha) ** (r - 2) * mu ** (r - 2)
    return total


def solve_dksh_unweighted(H: Hypergraph, mu: float, cfg: SolverConfig) -> SolveResult:
    """Clique expansion, DkS on the graph, then per-vertex mixing with
    alpha = 2/r; candidates outside the size band mu*n*(1 +- size_band) are
    dropped, the winner is trimmed/padded to exactly mu*n."""
    cfg.validate(mu)
    r = H.arity
    if r < 2:
        raise SolverError("solve_dksh_unweighted needs arity >= 2")
    if len(set(H.vertex_weights)) != 1:
        raise SolverError("solve_dksh_unweighted needs uniform vertex weights")
    n = H.n
    k = mu * n
    if abs(k - round(k)) > TOL:
        raise SolverError(f"mu*n={k} must be integral")
    k = round(k)
    trace = []
    try:
        G = clique_expansion(H, mu, strict=False)
        dks = solve_dks(G, mu, cfg.child("dks"))
        S = set(dks.labeling.support())
        trace.append({"stage": "clique+dks", "dks_value": dks.value})
    except (ValueError, InfeasibleError):
        S = set(range(k))
        trace.append({"stage": "clique+dks", "fallback": "no usable pairs"})
    alpha = 2.0 / r
    expected_lb = sum(w * rounding_edge_success_bound(e, S, mu, alpha)
                      for e, w in zip(H.edges, H.edge_weights))
    total_e = H.total_edge_weight()
    trace.append({"stage": "rounding", "alpha": alpha,
                  "expected_induced_lb": expected_lb / total_e if total_e else 0.0})
    lo, hi = k * (1 - cfg.size_band), k * (1 + cfg.size_band)
    best = None
    reps = cfg.reps_for(mu, r)
    for j in range(reps):
        rng = _rng(cfg.seed, _STAGE["round"], j)
        take_s = rng.random(n) < alpha
        coin = rng.random(n) < mu
        bits = [1 if (ts and (v in S)) or (not ts and c) else 0
                for v, (ts, c) in enumerate(zip(take_s, coin))]
        size = sum(bits)
        if not lo - TOL <= size <= hi + TOL:
            continue
        sigma = _adjust_to_size(bits, k)
        val = value_dksh(sigma, H)
        if best is None or val > best[0]:
            best = (val, sigma, j)
    if best is None:
        sigma = _adjust_to_size([1 if v in S else 0 for v in range(n)], k)
        best = (value_dksh(sigma, H), sigma, -1)
        trace.append({"stage": "rounding", "fallback": "no candidate in size band"})
    trace.append({"stage": "rounding", "chosen_rep": best[2], "reps": reps})
    return _result(best[1], best[0], H, mu, trace)


# ---------------------------------------------------------------------------
# Bounded weights: cloud expansion

def solve_dksh_bounded(H: Hypergraph, mu: float, cfg: SolverConfig, *,
                       weight_bound: float | None = None) -> SolveResult:
    """Cloud-expand to uniform weights, solve there, decode per-cloud.

    Keeps the best decode whose relative weight lands in mu*(1 +- eta); if no
    repetition lands in the band, falls back to the best decode not exceeding
    mu*(1 + eta), then to all-zeros.
    """
    cfg.validate(mu)
    Hn = H.normalized_weights()
    bound = weight_bound if weight_bound is not None else mu ** cfg.bounded_weight_exponent
    if max(Hn.vertex_weights) > bound + TOL:
        raise SolverError(
            f"max relative weight {max(Hn.vertex_weights):.6g} exceeds bound {bound:.6g}")
    exp = cloud_expansion(Hn)
    Hp = exp.instance
    k = math.floor(mu * Hp.n + TOL)
    trace = [{"stage": "cloud", "N": exp.N, "expanded_n": Hp.n, "k": k}]
    if k == 0:
        sigma = Labeling.zeros(H.n)
        return _result(sigma, value_dksh(sigma, H), H, mu, trace)
    inner_mu = k / Hp.n
    arity_eff = max((len(e) for e in Hp.edges), default=0)
    if arity_eff >= 2:
        inner = solve_dksh_unweighted(Hp, inner_mu, cfg.child("cloud"))
        sigma_prime = inner.labeling
        trace.append({"stage": "inner", "value": inner.value, "arity": arity_eff})
    elif arity_eff == 1:
        sigma_prime = greedy_dksh1(Hp, k)
        trace.append({"stage": "inner", "greedy_dksh1": True})
    else:
        sigma = Labeling.zeros(H.n)
        return _result(sigma, value_dksh(sigma, H), H, mu, trace)
    best_band, best_feasible = None, None
    reps = cfg.reps_for(mu, max(arity_eff, 1))
    for j in range(reps):
        rng = _rng(cfg.seed, _STAGE["decode"], j)
        sigma = exp.decode(sigma_prime, rng)
        rw = relative_weight(sigma, H)
        val = value_dksh(sigma, H)
        if abs(rw - mu) <= mu * cfg.eta + TOL and (best_band is None or val > best_band[0]):
            best_band = (val, sigma, j)
        if rw <= mu * (1 + cfg.eta) + TOL and (best_feasible is None or val > best_feasible[0]):
            best_feasible = (val, sigma, j)
    best = best_band or best_feasible
    if best is None:
        sigma = Labeling.zeros(H.n)
        best = (value_dksh(sigma, H), sigma, -1)
        trace.append({"stage": "decode", "fallback": "no decode within weight band"})
    trace.append({"stage": "decode", "chosen_rep": best[2], "reps": reps,
                  "in_band": best is best_band})
    return _result(best[1], best[0], H, mu, trace)


# ---------------------------------------------------------------------------
# Arbitrary weights: heavy-set enumeration

def solve_dksh_weighted(H: Hypergraph, mu: float, cfg: SolverConfig) -> SolveResult:
    """Enumerate partial labelings of the heavy set; on each branch either fill
    the light part with ones (when it is almost weightless or the residual bias
    saturates) or recurse through the bounded-weights solver at the residual
    bias. Output weight never exceeds mu*(1 + eta)."""
    cfg.validate(mu)
    Hn = H.normalized_weights()
    T = heavy_set(Hn, mu, cfg.heavy_exponent)
    if len(T) > cfg.heavy_cap:
        raise SolverError(f"heavy set size {len(T)} exceeds cap {cfg.heavy_cap}")
    rest = [v for v in range(H.n) if v not in set(T)]
    w = Hn.vertex_weights
    w_rest = sum(w[v] for v in rest)
    eta = cfg.eta
    best = None
    branch_of_best = None
    for mask in range(1 << len(T)):
        sigma_T = {v: (mask >> i) & 1 for i, v in enumerate(T)}
        w_sig = sum(w[v] for v in T if sigma_T[v])
        if w_sig > mu + TOL:
            continue
        if w_rest < mu * eta:
            bits = [1] * H.n
            for v, b in sigma_T.items():
                bits[v] = b
            candidate, branch = Labeling(tuple(bits)), "fill-ones"
        else:
            split = heavy_vertex_split(Hn, mu, eta, sigma_T, cfg.heavy_exponent)
            if split.delta >= 1.0 - TOL:
                pi = Labeling.ones(split.instance.n)
                branch = "saturated"
            else:
                inner_bound = mu ** cfg.heavy_exponent / (mu * eta)
                inner = solve_dksh_bounded(
                    split.instance, split.delta / (1 + eta), cfg.child("weighted", mask),
                    weight_bound=inner_bound)
                pi = inner.labeling
                branch = "bounded"
            candidate = split.lift(pi, sigma_T, H.n)
        rw = relative_weight(candidate, Hn)
        if rw > mu * (1 + eta) + TOL:
            continue
        val = value_dksh(candidate, Hn)
        if best is None or val > best[0]:
            best = (val, candidate, mask)
            branch_of_best = branch
    if best is None:
        sigma = Labeling.zeros(H.n)
        best = (value_dksh(sigma, Hn), sigma, 0)
        branch_of_best = "all-zeros"
    trace = [{"stage": "weighted", "heavy": list(T), "chosen_mask": best[2],
              "branch": branch_of_best}]
    return _result(best[1], best[0], Hn, mu, trace)


# ---------------------------------------------------------------------------
# Single-string predicates and general predicates

def solve_single_string(csp: CspInstance, mu: float, cfg: SolverConfig) -> SolveResult:
    """Truncate to the weighted DkSH instance, solve it, then half-subsample;
    the unsubsampled stage-1 labeling stays in the candidate pool, so for the
    all-ones string the pipeline coincides with the weighted solver."""
    from .reductions import predicate_to_dksh
    cfg.validate(mu)
    accepting = csp.predicate.accepting()
    if len(accepting) != 1:
        raise SolverError("solve_single_string needs a single-string predicate")
    H = predicate_to_dksh(csp)
    if max((len(e) for e in H.edges), default=0) == 0:
        # beta has no ones: the all-zeros labeling satisfies every constraint
        # that matches beta's zeros; candidates below would all tie anyway
        sigma = Labeling.zeros(csp.n)
        return _result(sigma, value_csp(sigma, csp), csp.hypergraph, mu,
                       [{"stage": "single-string", "empty_truncation": True}])
    stage1 = solve_dksh_weighted(H, mu, cfg.child("dks"))
    sigma1 = stage1.labeling
    best = (value_csp(sigma1, csp), sigma1, -1)
    reps = cfg.reps_for(mu, csp.predicate.arity)
    for j in range(reps):
        sigma2 = subsample_half(sigma1, _child_seed(cfg.seed, "sub", j))
        val = value_csp(sigma2, csp)
        if val > best[0]:
            best = (val, sigma2, j)
    trace = [{"stage": "single-string", "dksh_value": stage1.value,
              "chosen_rep": best[2], "reps": reps}]
    return _result(best[1], best[0], csp.hypergraph, mu, trace)


def solve_general(csp: CspInstance, mu: float, cfg: SolverConfig) -> SolveResult:
    """Loop over minimal accepting strings, solve each single-string instance,
    return the labeling with the best value under the original predicate
    (accepting supersets count)."""
    cfg.validate(mu)
    if csp.negation_patterns is not None:
        raise SolverError("solve_general takes negation-free instances; "
                          "use solve_with_negations")
    mins = minimal_elements(csp.predicate)
    if not mins:
        sigma = Labeling.zeros(csp.n)
        return _result(sigma, 0.0, csp.hypergraph, mu,
                       [{"stage": "general", "empty_minimal_set": True}])
    best = None
    trace = [{"stage": "general", "minimal_set":
              [bitstring(b, csp.predicate.arity) for b in mins]}]
    for bi, beta in enumerate(mins):
        sub = CspInstance(csp.hypergraph,
                          single_string_predicate(bitstring(beta, csp.predicate.arity)),
                          csp.bias)
        res = solve_single_string(sub, mu, cfg.child("beta", bi))
        val = value_csp(res.labeling, csp)
        if best is None or val > best[0]:
            best = (val, res.labeling, beta)
    trace.append({"stage": "general", "chosen_beta":
                  bitstring(best[2], csp.predicate.arity)})
    return _result(best[1], best[0], csp.hypergraph, mu, trace)


def solve_with_negations(csp: CspInstance, mu: float, cfg: SolverConfig) -> SolveResult:
    """Partition constraints by negation pattern; above bias 1/2 work with the
    input-complemented predicate at bias 1-mu and complement the output.
    Every candidate is evaluated on the true instance before the argmax."""
    psi = csp.predicate
    r = psi.arity
    H = csp.hypergraph
    complement = mu > 0.5
    if complement:
        psi1, mu1 = psi.complement_inputs(), 1.0 - mu
    else:
        psi1, mu1 = psi, mu
    cfg.validate(mu1)  # the eta window applies at the working bias
    pats = csp.negation_patterns or tuple((1,) * r for _ in H.edges)
    groups: dict = {}
    for idx, pi in enumerate(pats):
        groups.setdefault(tuple(pi), []).append(idx)
    best = None
    trace = [{"stage": "negations", "complemented": complement,
              "patterns": len(groups)}]
    for gi, (pi, idxs) in enumerate(sorted(groups.items())):
        sub_h = Hypergraph(H.n, H.vertex_weights,
                           tuple(H.edges[i] for i in idxs),
                           tuple(H.edge_weights[i] for i in idxs),
                           H.arity, H.allow_empty_edges)
        sub = CspInstance(sub_h, negation_conjugate(psi1, pi), mu1)
        res = solve_general(sub, mu1, cfg.child("pattern", gi))
        cand = res.labeling
        if complement:
            cand = _pad_for_complement(cand, H, mu, cfg.eta)
        val = value_csp(cand, csp)
        if best is None or val > best[0]:
            best = (val, cand, list(pi))
    trace.append({"stage": "negations", "chosen_pattern": best[2]})
    return _result(best[1], best[0], H, mu, trace)


def _pad_for_complement(sigma: Labeling, H: Hypergraph, mu: float, eta: float) -> Labeling:
    """Pad the complement-side labeling with ones (ascending) until its
    complement's relative weight drops to at most mu*(1 + eta), then flip."""
    target = 1.0 - mu * (1 + eta)
    bits = list(sigma.bits)
    total = H.total_vertex_weight()
    w = sum(wi for wi, b in zip(H.vertex_weights, bits) if b)
    for i in range(H.n):
        if w / total >= target - TOL:
            break
        if bits[i] == 0:
            bits[i] = 1
            w += H.vertex_weights[i]
    return Labeling(tuple(bits)).complement()
