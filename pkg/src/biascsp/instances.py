"""Hypergraph and CSP instance types, exact evaluation, and brute-force oracles.

Vertices are 0..n-1. Hyperedges are ordered tuples of vertex indices; edge
weights encode multiplicity of duplicate edges. Labelings are 0/1 vertex
assignments. Values are edge-weight fractions of satisfied/induced edges,
which makes the conditional edge laws produced by the reductions come out as
plain weighted hypergraphs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .predicates import Predicate, symmetric_decomposition

TOL = 1e-9
BRUTE_FORCE_CAP = 22


class StructuralError(ValueError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class Labeling:
    bits: tuple

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise StructuralError("labeling bits must be 0/1")

    def __len__(self):
        return len(self.bits)

    def support(self) -> tuple:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def complement(self) -> "Labeling":
        return Labeling(tuple(1 - b for b in self.bits))

    def as_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def concat(self, other: "Labeling") -> "Labeling":
        return Labeling(self.bits + other.bits)

    @staticmethod
    def from_support(n: int, support) -> "Labeling":
        bits = [0] * n
        for i in support:
            bits[i] = 1
        return Labeling(tuple(bits))

    @staticmethod
    def from_string(s: str) -> "Labeling":
        return Labeling(tuple(int(c) for c in s))

    @staticmethod
    def zeros(n: int) -> "Labeling":
        return Labeling((0,) * n)

    @staticmethod
    def ones(n: int) -> "Labeling":
        return Labeling((1,) * n)


@dataclass(frozen=True)
class Hypergraph:
    n: int
    vertex_weights: tuple
    edges: tuple
    edge_weights: tuple
    arity: int
    allow_empty_edges: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise StructuralError("need at least one vertex")
        if len(self.vertex_weights) != self.n:
            raise StructuralError("vertex_weights length != n")
        if len(self.edge_weights) != len(self.edges):
            raise StructuralError("edge_weights length != number of edges")
        if any(w < 0 for w in self.vertex_weights):
            raise StructuralError("vertex weights must be nonnegative")
        if not any(w > 0 for w in self.vertex_weights):
            raise StructuralError("at least one vertex weight must be positive")
        if any(w <= 0 for w in self.edge_weights):
            raise StructuralError("edge weights must be positive")
        for e in self.edges:
            if len(e) > self.arity:
                raise StructuralError(f"edge {e} longer than arity {self.arity}")
            if not e and not self.allow_empty_edges:
                raise StructuralError("empty edge in instance without allow_empty_edges")
            if any(not 0 <= v < self.n for v in e):
                raise StructuralError(f"edge {e} references vertex outside 0..{self.n - 1}")

    @staticmethod
    def build(n, edges, *, vertex_weights=None, edge_weights=None, arity=None,
              allow_empty_edges=False) -> "Hypergraph":
        edges = tuple(tuple(e) for e in edges)
        if vertex_weights is None:
            vertex_weights = (1.0,) * n
        if edge_weights is None:
            edge_weights = (1.0,) * len(edges)
        if arity is None:
            arity = max((len(e) for e in edges), default=1)
        return Hypergraph(n, tuple(float(w) for w in vertex_weights), edges,
                          tuple(float(w) for w in edge_weights), arity, allow_empty_edges)

    def total_vertex_weight(self) -> float:
        return float(sum(self.vertex_weights))

    def total_edge_weight(self) -> float:
        return float(sum(self.edge_weights))

    def weight_of(self, sigma: Labeling) -> float:
        _check_compat(sigma, self)
        return float(sum(w for w, b in zip(self.vertex_weights, sigma.bits) if b))

    def normalized_weights(self) -> "Hypergraph":
        """Same instance with vertex weights rescaled to sum 1."""
        total = self.total_vertex_weight()
        return Hypergraph(self.n, tuple(w / total for w in self.vertex_weights),
                          self.edges, self.edge_weights, self.arity, self.allow_empty_edges)

    def merge_duplicate_edges(self) -> "Hypergraph":
        """Collapse identical (ordered) edge tuples, summing their weights."""
        acc: dict = {}
        order = []
        for e, w in zip(self.edges, self.edge_weights):
            if e not in acc:
                order.append(e)
                acc[e] = 0.0
            acc[e] += w
        return Hypergraph(self.n, self.vertex_weights, tuple(order),
                          tuple(acc[e] for e in order), self.arity, self.allow_empty_edges)


@dataclass(frozen=True)
class CspInstance:
    hypergraph: Hypergraph
    predicate: Predicate
    bias: float
    negation_patterns: tuple | None = None

    def __post_init__(self):
        if self.predicate.arity != self.hypergraph.arity:
            raise StructuralError(
                f"predicate arity {self.predicate.arity} != hypergraph arity {self.hypergraph.arity}"
            )
        for e in self.hypergraph.edges:
            if len(e) != self.predicate.arity:
                raise StructuralError(f"CSP edge {e} must have length exactly {self.predicate.arity}")
        if not 0.0 < self.bias < 1.0:
            raise StructuralError(f"bias must be in (0,1), got {self.bias}")
        if self.negation_patterns is not None:
            if len(self.negation_patterns) != len(self.hypergraph.edges):
                raise StructuralError("one negation pattern per edge required")
            for pi in self.negation_patterns:
                if len(pi) != self.predicate.arity or any(s not in (1, -1) for s in pi):
                    raise StructuralError(f"bad negation pattern {pi}")

    @property
    def n(self):
        return self.hypergraph.n


@dataclass(frozen=True)
class ValueReport:
    value: float
    relative_weight: float
    feasible: bool

    def to_json(self) -> dict:
        return {"value": self.value, "relative_weight": self.relative_weight,
                "feasible": self.feasible}


def _check_compat(sigma: Labeling, H: Hypergraph):
    if len(sigma) != H.n:
        raise StructuralError(f"labeling length {len(sigma)} != vertex count {H.n}")


def relative_weight(sigma: Labeling, H: Hypergraph) -> float:
    """Weight of the 1-labeled vertices divided by the total vertex weight."""
    return H.weight_of(sigma) / H.total_vertex_weight()


def value_dksh(sigma: Labeling, H: Hypergraph) -> float:
    """Edge-weight fraction of edges fully inside the support of sigma.

    Empty edges (arising from truncation reductions) count as satisfied.
    """
    _check_compat(sigma, H)
    total = H.total_edge_weight()
    if total == 0:
        return 0.0
    sat = sum(w for e, w in zip(H.edges, H.edge_weights)
              if all(sigma.bits[v] for v in e))
    return float(sat) / total


def value_csp(sigma: Labeling, psi_instance: CspInstance) -> float:
    """Edge-weight fraction of constraints e with psi(pi_e o sigma(e)) = 1."""
    H = psi_instance.hypergraph
    _check_compat(sigma, H)
    total = H.total_edge_weight()
    if total == 0:
        return 0.0
    psi = psi_instance.predicate
    pats = psi_instance.negation_patterns
    sat = 0.0
    for k, (e, w) in enumerate(zip(H.edges, H.edge_weights)):
        bits = [sigma.bits[v] for v in e]
        if pats is not None:
            bits = [b if s == 1 else 1 - b for b, s in zip(bits, pats[k])]
        if psi(bits):
            sat += w
    return float(sat) / total


def value_report(sigma: Labeling, instance, mu: float, slack: float = 0.0) -> ValueReport:
    if isinstance(instance, CspInstance):
        val, H = value_csp(sigma, instance), instance.hypergraph
    else:
        val, H = value_dksh(sigma, instance), instance
    rw = relative_weight(sigma, H)
    return ValueReport(val, rw, rw <= mu * (1.0 + slack) + TOL)


def _negation_flips(psi_instance: CspInstance):
    """Per-edge XOR masks turning sigma(e) indices into negated indices."""
    r = psi_instance.predicate.arity
    flips = []
    pats = psi_instance.negation_patterns
    for k in range(len(psi_instance.hypergraph.edges)):
        f = 0
        if pats is not None:
            for t, s in enumerate(pats[k]):
                if s == -1:
                    f |= 1 << (r - 1 - t)
        flips.append(f)
    return flips


def brute_force_opt(instance, mu: float, mode: str = "at-most", *,
                    cap: int = BRUTE_FORCE_CAP, exact: bool = False):
    """Exact optimum over all labelings meeting the bias constraint.

    mode "at-most": relative weight <= mu; mode "exactly": relative weight
    equal to mu (within TOL). Ties are broken by the lexicographically
    smallest bit string. Returns (Labeling, value); value is a Fraction in
    exact mode, float otherwise.
    """
    if mode not in ("at-most", "exactly"):
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(instance, CspInstance):
        H = instance.hypergraph
        if mu is None:
            mu = instance.bias
    else:
        H = instance
    if mu is None:
        raise ValueError("bias mu required")
    n = H.n
    if n > cap:
        raise InfeasibleError(f"brute force refused: n={n} exceeds cap {cap}")
    uniform = len(set(H.vertex_weights)) == 1
    if mode == "exactly" and uniform:
        k = mu * n
        if abs(k - round(k)) > TOL:
            raise InfeasibleError(f"mode=exactly needs mu*n integral; mu*n={k}")
    if exact:
        return _brute_force_exact(instance, H, mu, mode)
    return _brute_force_float(instance, H, mu, mode)


def _subset_weights(weights, masks):
    n = len(weights)
    out = np.zeros(len(masks), dtype=np.float64)
    for i in range(n):
        out += np.asarray(weights[i]) * ((masks >> i) & 1)
    return out


def _satisfied_weight(instance, H, masks):
    sat = np.zeros(len(masks), dtype=np.float64)
    if isinstance(instance, CspInstance):
        table = np.asarray(instance.predicate.table, dtype=np.float64)
        r = instance.predicate.arity
        flips = _negation_flips(instance)
        for k, (e, w) in enumerate(zip(H.edges, H.edge_weights)):
            idx = np.zeros(len(masks), dtype=np.int64)
            for t, v in enumerate(e):
                idx |= ((masks >> v) & 1) << (r - 1 - t)
            idx ^= flips[k]
            sat += w * table[idx]
    else:
        for e, w in zip(H.edges, H.edge_weights):
            emask = 0
            for v in e:
                emask |= 1 << v
            sat += w * ((masks & emask) == emask)
    return sat


def _brute_force_float(instance, H, mu, mode):
    n = H.n
    masks = np.arange(1 << n, dtype=np.int64)
    wsum = _subset_weights(H.vertex_weights, masks)
    target = mu * H.total_vertex_weight()
    if mode == "at-most":
        feasible = wsum <= target + TOL
    else:
        feasible = np.abs(wsum - target) <= TOL
    if not feasible.any():
        raise InfeasibleError(f"no labeling of relative weight {mode} {mu}")
    total = H.total_edge_weight()
    sat = _satisfied_weight(instance, H, masks)
    values = sat / total if total > 0 else sat
    values = np.where(feasible, values, -1.0)
    best = values.max()
    candidates = np.nonzero(values >= best - TOL)[0]
    # lexicographically smallest bit string = smallest bit-reversed mask
    revkeys = np.zeros(len(candidates), dtype=np.int64)
    cand = masks[candidates]
    for i in range(n):
        revkeys |= ((cand >> i) & 1) << (n - 1 - i)
    winner = int(cand[np.argmin(revkeys)])
    bits = tuple((winner >> i) & 1 for i in range(n))
    return Labeling(bits), float(values[winner])


def _brute_force_exact(instance, H, mu, mode):
    n = H.n
    weights = [Fraction(w).limit_denominator(10**12) for w in H.vertex_weights]
    total_w = sum(weights)
    mu_f = Fraction(mu).limit_denominator(10**12)
    target = mu_f * total_w
    edge_w = [Fraction(w).limit_denominator(10**12) for w in H.edge_weights]
    total_e = sum(edge_w)
    is_csp = isinstance(instance, CspInstance)
    flips = _negation_flips(instance) if is_csp else None
    best_val, best_bits = None, None
    for mask in range(1 << n):
        wsum = sum(weights[i] for i in range(n) if (mask >> i) & 1)
        if mode == "at-most":
            if wsum > target:
                continue
        elif wsum != target:
            continue
        sat = Fraction(0)
        for k, (e, w) in enumerate(zip(H.edges, edge_w)):
            if is_csp:
                idx = 0
                r = instance.predicate.arity
                for t, v in enumerate(e):
                    idx |= ((mask >> v) & 1) << (r - 1 - t)
                ok = instance.predicate.table[idx ^ flips[k]]
            else:
                ok = all((mask >> v) & 1 for v in e)
            if ok:
                sat += w
        val = sat / total_e if total_e > 0 else Fraction(0)
        bits = tuple((mask >> i) & 1 for i in range(n))
        if best_val is None or val > best_val or (val == best_val and bits < best_bits):
            best_val, best_bits = val, bits
    if best_val is None:
        raise InfeasibleError(f"no labeling of relative weight {mode} {mu}")
    return Labeling(best_bits), best_val


# ---------------------------------------------------------------------------
# JSON instance format

def load_instance(obj, *, allow_empty_edges=False):
    """Parse the instance JSON document; returns (Hypergraph|CspInstance, bias|None).

    Edge tuples are canonicalized ascending only when the constraint semantics
    are symmetric (no predicate given, or a permutation-invariant predicate
    with no negations); otherwise the stated order is preserved.
    """
    if isinstance(obj, str):
        with open(obj) as fh:
            obj = json.load(fh)
    try:
        n = int(obj["n"])
        raw_edges = obj["edges"]
    except (KeyError, TypeError) as exc:
        raise StructuralError(f"instance JSON needs 'n' and 'edges': {exc}")
    vertex_weights = obj.get("vertex_weights")
    edge_weights = obj.get("edge_weights")
    arity = obj.get("arity")
    predicate = Predicate.from_json(obj["predicate"]) if "predicate" in obj else None
    bias = float(obj["bias"]) if "bias" in obj else None
    negations = obj.get("negations")
    symmetric = negations is None and (
        predicate is None or symmetric_decomposition(predicate) is not None)
    edges = []
    for e in raw_edges:
        e = tuple(int(v) for v in e)
        edges.append(tuple(sorted(e)) if symmetric else e)
    H = Hypergraph.build(n, edges, vertex_weights=vertex_weights,
                         edge_weights=edge_weights, arity=arity,
                         allow_empty_edges=allow_empty_edges)
    if predicate is None:
        return H, bias
    if bias is None:
        raise StructuralError("CSP instance JSON needs 'bias'")
    pats = tuple(tuple(int(s) for s in pi) for pi in negations) if negations else None
    return CspInstance(H, predicate, bias, pats), bias


def dump_instance(instance, bias=None) -> dict:
    if isinstance(instance, CspInstance):
        H = instance.hypergraph
        out = dump_instance(H, bias=instance.bias)
        out["predicate"] = instance.predicate.to_json()
        if instance.negation_patterns is not None:
            out["negations"] = [list(pi) for pi in instance.negation_patterns]
        return out
    out = {
        "n": instance.n,
        "arity": instance.arity,
        "vertex_weights": list(instance.vertex_weights),
        "edges": [list(e) for e in instance.edges],
        "edge_weights": list(instance.edge_weights),
    }
    if bias is not None:
        out["bias"] = bias
    return out
