"""Finite-horizon value functions and feedback policies.

The value function of the intensity-control problem solves, node by
node, the backward equation

    dV_i/dt - r V_i + H(i, (V_j - V_i)_{j in V(i)}) = 0,   V_i(T) = g_i,

where H is the model's jump Hamiltonian. Internally the system is
integrated forward in time-to-go s = T - t with the adaptive
Runge-Kutta stepper, landing exactly on a uniform output grid; the
stored terminal row is the caller's g, bitwise. The optimal feedback
intensities are the conjugate maximizers evaluated on the value slopes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .costs import CostModel
from .ode import StepStats, integrate_grid

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10


@dataclass(frozen=True)
class Problem:
    """A control problem instance on a fixed graph and cost model."""

    costs: CostModel
    terminal_payoff: np.ndarray = field(repr=False)
    horizon: float
    discount: float = 0.0

    def __post_init__(self):
        g = np.asarray(self.terminal_payoff, dtype=float)
        if g.shape != (self.costs.n_nodes,):
            raise ValueError(
                f"terminal payoff has shape {g.shape}, expected ({self.costs.n_nodes},)"
            )
        if not np.all(np.isfinite(g)):
            raise ValueError("terminal payoff has non-finite entries")
        object.__setattr__(self, "terminal_payoff", g)
        if not (self.horizon > 0.0 and math.isfinite(self.horizon)):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if not (self.discount >= 0.0 and math.isfinite(self.discount)):
            raise ValueError(f"discount must be nonnegative and finite, got {self.discount}")

    @property
    def graph(self):
        return self.costs.graph


def output_grid(horizon: float) -> np.ndarray:
    """Uniform output grid: max(256, ceil(64 T)) intervals on [0, T]."""
    intervals = max(256, math.ceil(64.0 * horizon))
    return np.linspace(0.0, horizon, intervals + 1)


@dataclass(frozen=True)
class ValueTrajectory:
    """Values on the output grid, plus solver quality metadata.

    values[k, i] approximates V_i(grid[k]); the last row equals the
    problem's terminal payoff bitwise. max_residual is the equation
    residual of the stored values measured by ``residual`` below.
    """

    grid: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    max_residual: float
    step_count: int
    rejected_steps: int


class PolicyMode(enum.Enum):
    TIME_VARYING = "time-varying"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class Policy:
    """Feedback jump intensities in canonical flat edge order.

    Time-varying policies store one row per grid point and are read as
    piecewise-constant in time, left-continuous: on (t_k, t_{k+1}] the
    row at t_{k+1} applies. Stationary policies store a single row.
    """

    mode: PolicyMode
    intensities: np.ndarray = field(repr=False)
    grid: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        lam = np.asarray(self.intensities, dtype=float)
        if np.any(lam < 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError("policy intensities must be finite and nonnegative")
        if self.mode is PolicyMode.TIME_VARYING:
            if self.grid is None or lam.ndim != 2 or lam.shape[0] != self.grid.shape[0]:
                raise ValueError("time-varying policy needs one intensity row per grid point")
        elif lam.ndim != 1:
            raise ValueError("stationary policy takes a single intensity row")


def solve_finite_horizon(problem: Problem, rtol: float = DEFAULT_RTOL,
                         atol: float = DEFAULT_ATOL) -> ValueTrajectory:
    """Integrate the backward value equation onto the output grid.

    Works in time-to-go s = T - t, where the system reads
    dW/ds = H(W) - r W with W(0) = g, then reverses the rows. The
    returned max_residual includes finite-difference truncation of the
    grid, so it scales like (grid spacing)**8 on top of solver error.
    """
    model = problem.costs
    r = problem.discount
    grid = output_grid(problem.horizon)

    def rhs(_s, w):
        return model.hamiltonian_vector(w) - r * w

    rows, stats = integrate_grid(rhs, grid, problem.terminal_payoff, rtol, atol)
    values = rows[::-1].copy()
    values[-1] = problem.terminal_payoff
    traj = ValueTrajectory(grid, values, float("nan"), stats.accepted, stats.rejected)
    return replace(traj, max_residual=residual(problem, traj))


def extract_policy(problem: Problem, trajectory: ValueTrajectory) -> Policy:
    """Optimal feedback intensities along a solved value trajectory."""
    lam = problem.costs.intensity_vector(trajectory.values)
    return Policy(PolicyMode.TIME_VARYING, lam, trajectory.grid)


def _stencil_weights(nodes: np.ndarray, at: float) -> np.ndarray:
    """First-derivative weights on the given stencil nodes (unit spacing)."""
    n = nodes.shape[0]
    powers = np.vander(nodes - at, n, increasing=True).T
    rhs = np.zeros(n)
    rhs[1] = 1.0
    return np.linalg.solve(powers, rhs)


# nine-point stencils: centered in the bulk, offset near the ends,
# all with O(dt**8) truncation
_CENTER9 = _stencil_weights(np.arange(-4.0, 5.0), 0.0)
_OFFSET1 = _stencil_weights(np.arange(0.0, 9.0), 1.0)
_OFFSET2 = _stencil_weights(np.arange(0.0, 9.0), 2.0)
_OFFSET3 = _stencil_weights(np.arange(0.0, 9.0), 3.0)


def _time_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """Eighth-order finite differences of the rows, interior points only.

    Returns rows 1..M-1. Centered nine-point stencils away from the
    ends; the three rows nearest each end use offset nine-point
    stencils of the same order, so truncation stays O(dt**8)
    throughout. The high order matters: solutions develop a boundary
    layer at the terminal time whose higher derivatives would dominate
    a low-order difference.
    """
    v = values
    m = v.shape[0] - 1
    d = np.empty((m - 1, v.shape[1]))
    center = sum(w * v[4 + s: m - 3 + s] for s, w in zip(range(-4, 5), _CENTER9))
    d[3:-3] = center / dt
    d[0] = (_OFFSET1 @ v[:9]) / dt
    d[1] = (_OFFSET2 @ v[:9]) / dt
    d[2] = (_OFFSET3 @ v[:9]) / dt
    d[-3] = -(_OFFSET3 @ v[:-10:-1]) / dt
    d[-2] = -(_OFFSET2 @ v[:-10:-1]) / dt
    d[-1] = -(_OFFSET1 @ v[:-10:-1]) / dt
    return d


def residual(problem: Problem, trajectory: ValueTrajectory) -> float:
    """Max equation residual over interior grid points and nodes.

    Approximates dV/dt by finite differences on the stored grid and
    measures |dV/dt - r V + H(V)| in the infinity norm.
    """
    grid, values = trajectory.grid, trajectory.values
    if grid.shape[0] < 9:
        raise ValueError("residual needs at least nine grid points")
    dt = float(grid[1] - grid[0])
    dvdt = _time_derivative(values, dt)
    interior = values[1:-1]
    ham = problem.costs.hamiltonian_vector(interior)
    res = dvdt - problem.discount * interior + ham
    return float(np.max(np.abs(res)))


@dataclass(frozen=True)
class ComparisonReport:
    """Outcome of an ordering check between two solved trajectories."""

    max_violation: float
    satisfied: bool
    tolerance: float


def verify_comparison(problem: Problem, g_low: np.ndarray, g_high: np.ndarray,
                      horizon: float, tolerance: float = 1e-8) -> ComparisonReport:
    """Solve twice and check order propagation from the terminal data.

    With g_low <= g_high coordinatewise, the low solution must stay
    below the high one at every grid point up to the tolerance. The
    report carries the largest observed violation.
    """
    low = np.asarray(g_low, dtype=float)
    high = np.asarray(g_high, dtype=float)
    if np.any(low > high):
        raise ValueError("g_low must be <= g_high coordinatewise")
    base = replace(problem, horizon=horizon)
    traj_low = solve_finite_horizon(replace(base, terminal_payoff=low))
    traj_high = solve_finite_horizon(replace(base, terminal_payoff=high))
    violation = float(np.max(traj_low.values - traj_high.values))
    return ComparisonReport(violation, violation <= tolerance, tolerance)
