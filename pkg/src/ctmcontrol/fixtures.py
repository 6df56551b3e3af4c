"""Random test instances: strongly connected models with bounded data.

The generator draws a directed cycle through all nodes (guaranteeing
strong connectivity) plus independent extra edges, with cost scales in
[0.5, 2], shifts in [-0.5, 0.5] and terminal payoffs in [-1, 1]. Those
ranges keep value spreads of order one, so solver tolerances and test
margins mean the same thing on every drawn instance.
"""

from __future__ import annotations

import numpy as np

from .costs import CostFamily, CostModel, EdgeCost
from .finite_horizon import Problem
from .graph import build_graph


def random_model(rng: np.random.Generator, n_nodes: int = 5,
                 extra_edge_prob: float = 0.4, family: str = "entropic") -> CostModel:
    """Draw a strongly connected cost model.

    family selects the conjugate family per edge: "entropic",
    "quadratic", or "mixed" (fair coin per edge).
    """
    if n_nodes < 2:
        raise ValueError(f"need at least 2 nodes, got {n_nodes}")
    if family not in ("entropic", "quadratic", "mixed"):
        raise ValueError(f"unknown family {family!r}")
    edges = {(i, (i + 1) % n_nodes) for i in range(n_nodes)}
    for i in range(n_nodes):
        for j in range(n_nodes):
            if i != j and (i, j) not in edges and rng.random() < extra_edge_prob:
                edges.add((i, j))
    ordered = sorted(edges)
    costs = {}
    for e in ordered:
        if family == "mixed":
            fam = CostFamily.ENTROPIC if rng.random() < 0.5 else CostFamily.QUADRATIC
        else:
            fam = CostFamily.ENTROPIC if family == "entropic" else CostFamily.QUADRATIC
        scale = rng.uniform(0.5, 2.0)
        shift = rng.uniform(-0.5, 0.5)
        costs[e] = EdgeCost(fam, scale, shift)
    return CostModel(build_graph(n_nodes, ordered), costs)


def random_problem(rng: np.random.Generator, n_nodes: int = 5, horizon: float = 1.0,
                   discount: float = 0.0, extra_edge_prob: float = 0.4,
                   family: str = "entropic") -> Problem:
    """Draw a random model plus terminal payoffs in [-1, 1]."""
    model = random_model(rng, n_nodes, extra_edge_prob, family)
    g = rng.uniform(-1.0, 1.0, size=n_nodes)
    return Problem(model, g, horizon, discount)
