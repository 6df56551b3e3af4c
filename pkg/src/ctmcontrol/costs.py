"""Edge running costs and the per-node jump Hamiltonian.

Each directed edge carries a convex running cost l(lam) of its jump
intensity lam >= 0, from one of two families with scale a > 0 and
shift b:

  entropic:   l(lam) = lam * (log(lam / a) - 1) - b * lam,  l(0) = 0
  quadratic:  l(lam) = lam**2 / (2 * a) - b * lam

The node Hamiltonian is the conjugate sup over intensities of
sum_j lam_j * p_j - l_ij(lam_j), which splits per edge:

  entropic:   h(p) = a * exp(p + b),        argmax a * exp(p + b)
  quadratic:  h(p) = a * max(p + b, 0)**2 / 2,  argmax a * max(p + b, 0)

Entropic edges make the Hamiltonian strictly increasing in each slope;
quadratic edges are flat below -b, which is what the strict_monotone
flag records for the model as a whole.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import NegativeIntensity, NumericOverflow
from .graph import Graph

# exp overflows past this; used to fail loudly instead of returning inf
_EXP_LIMIT = 709.0


class CostFamily(enum.Enum):
    ENTROPIC = "entropic"
    QUADRATIC = "quadratic"


@dataclass(frozen=True)
class EdgeCost:
    """Running-cost description of a single edge."""

    family: CostFamily
    scale: float
    shift: float = 0.0

    def __post_init__(self):
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        if not math.isfinite(self.shift):
            raise ValueError(f"shift must be finite, got {self.shift}")

    def value(self, lam: float) -> float:
        """l(lam) for a single intensity, with l(0) = 0 for both families."""
        if lam < 0.0:
            raise NegativeIntensity(f"intensity {lam} is negative")
        if self.family is CostFamily.ENTROPIC:
            if lam == 0.0:
                return 0.0
            return lam * (math.log(lam / self.scale) - 1.0) - self.shift * lam
        return lam * lam / (2.0 * self.scale) - self.shift * lam

    def conjugate(self, p: float) -> float:
        """h(p) = sup_{lam >= 0} lam * p - l(lam)."""
        q = p + self.shift
        if self.family is CostFamily.ENTROPIC:
            if q > _EXP_LIMIT:
                raise NumericOverflow(f"exp({q}) overflows in entropic conjugate")
            return self.scale * math.exp(q)
        return 0.5 * self.scale * max(q, 0.0) ** 2

    def maximizer(self, p: float) -> float:
        """The intensity attaining the conjugate sup."""
        q = p + self.shift
        if self.family is CostFamily.ENTROPIC:
            if q > _EXP_LIMIT:
                raise NumericOverflow(f"exp({q}) overflows in entropic maximizer")
            return self.scale * math.exp(q)
        return self.scale * max(q, 0.0)

    def lower_bound(self) -> float:
        """min over lam >= 0 of l(lam), in closed form per family."""
        if self.family is CostFamily.ENTROPIC:
            # minimum at lam = a * exp(b)
            return -self.scale * math.exp(self.shift)
        # minimum at lam = a * b when b > 0, else at lam = 0
        return -0.5 * self.scale * max(self.shift, 0.0) ** 2


class CostModel:
    """Graph plus one EdgeCost per edge, with vectorized evaluation.

    Edges are stored flat in canonical order (by source node, then
    target), split per node by ``offsets``: node i's edges occupy
    ``slice(offsets[i], offsets[i+1])`` of the flat arrays. This is the
    ordering used everywhere an intensity or slope vector appears.
    """

    def __init__(self, graph: Graph, edge_costs: Mapping[tuple[int, int], EdgeCost]):
        expected = graph.edges()
        missing = [e for e in expected if e not in edge_costs]
        if missing:
            raise ValueError(f"missing cost for edges {missing[:4]}")
        extra = [e for e in edge_costs if e not in set(expected)]
        if extra:
            raise ValueError(f"costs given for edges not in the graph: {extra[:4]}")

        self.graph = graph
        self.edge_costs = {e: edge_costs[e] for e in expected}
        n = graph.n_nodes
        src, dst, scale, shift, entropic = [], [], [], [], []
        offsets = [0]
        for i in range(n):
            for j in graph.out_neighbors[i]:
                c = edge_costs[(i, j)]
                src.append(i)
                dst.append(j)
                scale.append(c.scale)
                shift.append(c.shift)
                entropic.append(c.family is CostFamily.ENTROPIC)
            offsets.append(len(src))
        self.edge_src = np.array(src, dtype=np.intp)
        self.edge_dst = np.array(dst, dtype=np.intp)
        self.scale = np.array(scale, dtype=float)
        self.shift = np.array(shift, dtype=float)
        self.entropic = np.array(entropic, dtype=bool)
        self.offsets = np.array(offsets, dtype=np.intp)
        self.strict_monotone = bool(self.entropic.all())
        # node-by-edge incidence of sources; turns per-edge terms into node sums
        inc = np.zeros((n, len(src)))
        inc[self.edge_src, np.arange(len(src))] = 1.0
        self._incidence = inc
        # per-node additive lower bound on the running cost
        per_edge = np.array([self.edge_costs[e].lower_bound() for e in expected])
        self.cost_floor = inc @ per_edge

    @property
    def n_nodes(self) -> int:
        return self.graph.n_nodes

    @property
    def n_edges(self) -> int:
        return len(self.edge_src)

    def node_slice(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    @classmethod
    def uniform(cls, graph: Graph, cost: EdgeCost) -> "CostModel":
        return cls(graph, {e: cost for e in graph.edges()})

    # vectorized kernels over flat edge arrays; shapes broadcast over
    # leading axes so a whole trajectory of slopes can be mapped at once

    def _guard_exponent(self, q: np.ndarray) -> None:
        if np.any((q > _EXP_LIMIT) & self.entropic):
            top = float(np.max(np.where(self.entropic, q, -np.inf)))
            raise NumericOverflow(f"exp({top}) overflows in entropic edge kernel")

    def conjugate_terms(self, p_flat: np.ndarray) -> np.ndarray:
        q = p_flat + self.shift
        self._guard_exponent(q)
        ent = self.scale * np.exp(np.where(self.entropic, q, 0.0))
        quad = 0.5 * self.scale * np.square(np.clip(q, 0.0, None))
        return np.where(self.entropic, ent, quad)

    def maximizer_terms(self, p_flat: np.ndarray) -> np.ndarray:
        q = p_flat + self.shift
        self._guard_exponent(q)
        ent = self.scale * np.exp(np.where(self.entropic, q, 0.0))
        quad = self.scale * np.clip(q, 0.0, None)
        return np.where(self.entropic, ent, quad)

    def cost_terms(self, lam_flat: np.ndarray, edges: slice | None = None) -> np.ndarray:
        scale = self.scale if edges is None else self.scale[edges]
        shift = self.shift if edges is None else self.shift[edges]
        entropic = self.entropic if edges is None else self.entropic[edges]
        lam = np.asarray(lam_flat, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logs = np.log(np.where(lam > 0.0, lam, 1.0) / scale)
        ent = np.where(lam > 0.0, lam * (logs - 1.0), 0.0) - shift * lam
        quad = np.square(lam) / (2.0 * scale) - shift * lam
        return np.where(entropic, ent, quad)

    def slopes(self, values: np.ndarray) -> np.ndarray:
        """Per-edge slopes V[dst] - V[src]; values may be (..., n_nodes)."""
        v = np.asarray(values, dtype=float)
        return v[..., self.edge_dst] - v[..., self.edge_src]

    def hamiltonian_vector(self, values: np.ndarray) -> np.ndarray:
        """All node Hamiltonians H(i, (V_j - V_i)_j) at once."""
        return self.conjugate_terms(self.slopes(values)) @ self._incidence.T

    def intensity_vector(self, values: np.ndarray) -> np.ndarray:
        """Flat per-edge optimal intensities at the given value vector."""
        return self.maximizer_terms(self.slopes(values))

    def running_cost_vector(self, lam_flat: np.ndarray) -> np.ndarray:
        """Per-node running costs L(i, lam(i, .)) from flat intensities."""
        return self.cost_terms(lam_flat) @ self._incidence.T


@dataclass(frozen=True)
class PVector:
    """Slope vector attached to a node, ordered like its neighbor list."""

    node: int
    values: np.ndarray = field(repr=False)

    def validate(self, graph: Graph) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.shape != (graph.degree(self.node),):
            raise ValueError(
                f"slope vector has shape {v.shape}, node {self.node} has degree {graph.degree(self.node)}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("slope vector has non-finite entries")


def _node_array(model: CostModel, i: int, p, name: str) -> np.ndarray:
    values = getattr(p, "values", p)
    arr = np.asarray(values, dtype=float)
    deg = model.graph.degree(i)
    if arr.shape != (deg,):
        raise ValueError(f"{name} has shape {arr.shape}, node {i} has degree {deg}")
    return arr


def cost(model: CostModel, i: int, lambdas) -> float:
    """Running cost L(i, lam) = sum of edge costs at node i."""
    lam = _node_array(model, i, lambdas, "intensity vector")
    if np.any(lam < 0.0):
        raise NegativeIntensity(f"negative intensity at node {i}: {lam}")
    neighbors = model.graph.out_neighbors[i]
    return sum(model.edge_costs[(i, j)].value(float(v)) for j, v in zip(neighbors, lam))


def hamiltonian(model: CostModel, i: int, p) -> float:
    """H(i, p) = sum over outgoing edges of the edge conjugates h_ij(p_j)."""
    arr = _node_array(model, i, p, "slope vector")
    neighbors = model.graph.out_neighbors[i]
    return sum(model.edge_costs[(i, j)].conjugate(float(v)) for j, v in zip(neighbors, arr))


def optimal_intensities(model: CostModel, i: int, p) -> np.ndarray:
    """The intensities attaining the sup in H(i, p), one per outgoing edge."""
    arr = _node_array(model, i, p, "slope vector")
    neighbors = model.graph.out_neighbors[i]
    return np.array(
        [model.edge_costs[(i, j)].maximizer(float(v)) for j, v in zip(neighbors, arr)]
    )


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    passed: bool | None  # None means not asserted for this model
    witness: dict | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[PropertyCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.passed is not None)

    def __getitem__(self, name: str) -> PropertyCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_assumptions(model: CostModel, sample_budget: int = 1000) -> ValidationReport:
    """Sampled checks of the structural assumptions the solvers rely on.

    Probes, over random slope and intensity samples: finiteness of the
    costs, midpoint convexity and coordinatewise monotonicity of H, the
    additive lower bound on L, and superlinear growth of L in the
    intensities. Strict monotonicity is asserted when every edge is
    entropic; for a purely quadratic model the check runs and reports
    its failure with a witness; for mixed models it is not asserted.
    """
    if sample_budget < 100:
        raise ValueError(f"sample_budget must be at least 100, got {sample_budget}")
    rng = np.random.default_rng(20240817)
    n = model.n_nodes
    checks: list[PropertyCheck] = []

    def random_slopes():
        return rng.uniform(-3.0, 3.0, size=model.n_edges)

    # finiteness of L at positive intensities
    ok, witness = True, None
    for _ in range(sample_budget // 10):
        lam = rng.uniform(0.0, 10.0, size=model.n_edges)
        vals = model.cost_terms(lam)
        if not np.all(np.isfinite(vals)):
            ok, witness = False, {"lam": lam.tolist()}
            break
    checks.append(PropertyCheck("finite_cost", ok, witness))

    # midpoint convexity of each node Hamiltonian in the slopes
    ok, witness = True, None
    for _ in range(sample_budget):
        p, q = random_slopes(), random_slopes()
        hp = model.conjugate_terms(p) @ model._incidence.T
        hq = model.conjugate_terms(q) @ model._incidence.T
        hm = model.conjugate_terms(0.5 * (p + q)) @ model._incidence.T
        gap = hm - 0.5 * (hp + hq)
        if np.any(gap > 1e-10 * (1.0 + np.abs(hp) + np.abs(hq))):
            i = int(np.argmax(gap))
            ok, witness = False, {"node": i, "gap": float(gap[i])}
            break
    checks.append(PropertyCheck("convexity", ok, witness))

    # coordinatewise monotonicity: p <= p' implies H <= H'
    ok, witness = True, None
    for _ in range(sample_budget):
        p = random_slopes()
        q = p + rng.uniform(0.0, 2.0, size=model.n_edges)
        hp = model.conjugate_terms(p) @ model._incidence.T
        hq = model.conjugate_terms(q) @ model._incidence.T
        if np.any(hp > hq + 1e-12 * (1.0 + np.abs(hq))):
            i = int(np.argmax(hp - hq))
            ok, witness = False, {"node": i, "drop": float(hp[i] - hq[i])}
            break
    checks.append(PropertyCheck("monotone", ok, witness))

    # strictness: raising any single slope must raise H at its source
    families = set(model.entropic.tolist())
    if model.strict_monotone or families == {False}:
        ok, witness = True, None
        for _ in range(sample_budget):
            p = random_slopes()
            e = int(rng.integers(model.n_edges))
            q = p.copy()
            q[e] += rng.uniform(0.1, 1.0)
            i = int(model.edge_src[e])
            hp = float(model.conjugate_terms(p) @ model._incidence.T[:, i])
            hq = float(model.conjugate_terms(q) @ model._incidence.T[:, i])
            if not hq > hp:
                ok = False
                witness = {"edge": (int(model.edge_src[e]), int(model.edge_dst[e])), "slope": float(p[e])}
                break
        checks.append(PropertyCheck("strict_monotone", ok, witness))
    else:
        checks.append(PropertyCheck("strict_monotone", None, None))

    # running cost bounded below by the closed-form floor
    ok, witness = True, None
    floor = model.cost_floor
    for _ in range(sample_budget):
        lam = rng.uniform(0.0, 20.0, size=model.n_edges)
        vals = model.running_cost_vector(lam)
        if np.any(vals < floor - 1e-12 * (1.0 + np.abs(floor))):
            i = int(np.argmin(vals - floor))
            ok, witness = False, {"node": i, "value": float(vals[i]), "floor": float(floor[i])}
            break
    checks.append(PropertyCheck("bounded_below", ok, witness))

    # superlinearity: L(c lam) / (c |lam|) grows without bound in c
    ok, witness = True, None
    for _ in range(max(10, sample_budget // 100)):
        lam = rng.uniform(0.5, 2.0, size=model.n_edges)
        ratios = []
        for c in (1e2, 1e4, 1e6):
            vals = model.running_cost_vector(c * lam)
            ratios.append(vals / (c * np.max(lam)))
        r = np.stack(ratios)
        if not (np.all(r[1] > r[0]) and np.all(r[2] > r[1])):
            ok, witness = False, {"ratios": r[:, 0].tolist()}
            break
    checks.append(PropertyCheck("superlinear", ok, witness))

    return ValidationReport(tuple(checks))
