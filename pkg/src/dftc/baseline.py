"""Full-state-feedback baseline controller and quadratic trajectory cost.

The baseline is a discrete infinite-horizon LQR computed on a linearization
of the exact one-step RK4 map around the upright equilibrium. It provides
the imitation targets for the learned controllers and the reference cost in
every evaluation.
"""

from dataclasses import dataclass

import numpy as np

from . import plant
from .errors import InstabilityError, InvalidInputError, RiccatiConvergenceError

# state weights heavily penalize link angles; input weight makes current cheap
DEFAULT_Q = (5e4, 5e4, 5e2, 1e2, 1e-2, 1e-2)
DEFAULT_R = (1e-5, 1e-5)


@dataclass(frozen=True)
class CostWeights:
    """Diagonal state/input weights of the quadratic running cost."""

    Q: tuple = DEFAULT_Q
    R: tuple = DEFAULT_R

    def __post_init__(self):
        q = tuple(float(v) for v in self.Q)
        r = tuple(float(v) for v in self.R)
        if len(q) != plant.N_STATES or len(r) != plant.N_INPUTS:
            raise InvalidInputError("Q needs 6 entries and R needs 2")
        if any(v < 0 for v in q) or any(v <= 0 for v in r):
            raise InvalidInputError("Q entries must be >= 0 and R entries > 0")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)

    def q_matrix(self):
        return np.diag(self.Q)

    def r_matrix(self):
        return np.diag(self.R)


@dataclass(frozen=True)
class LinearizedPlant:
    """Discrete-time linearization x+ = A_d x + B_d u at the origin."""

    A_d: np.ndarray
    B_d: np.ndarray
    h: float


@dataclass(frozen=True)
class LqrGain:
    """LQR solution: u = -K x, Riccati matrix P, and iteration residual."""

    K: np.ndarray
    P: np.ndarray
    residual: float
    h: float
    i_max: float


def linearize(params, h, delta=1e-6):
    """Central finite-difference Jacobians of the one-step RK4 map at 0.

    Returns the discrete-time pair (A_d, B_d) of the map
    x+ = step_rk4(x, u, h) evaluated around x = 0, u = 0.
    """
    n, m = plant.N_STATES, plant.N_INPUTS
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    x0 = np.zeros(n)
    u0 = np.zeros(m)
    for j in range(n):
        dx = np.zeros(n)
        dx[j] = delta
        xp = plant.step_rk4(params, x0 + dx, u0, h)
        xm = plant.step_rk4(params, x0 - dx, u0, h)
        A[:, j] = (xp - xm) / (2.0 * delta)
    for j in range(m):
        du = np.zeros(m)
        du[j] = delta
        xp = plant.step_rk4(params, x0, u0 + du, h)
        xm = plant.step_rk4(params, x0, u0 - du, h)
        B[:, j] = (xp - xm) / (2.0 * delta)
    return LinearizedPlant(A_d=A, B_d=B, h=h)


def riccati_residual(P, A, B, Q, R):
    """Max-norm defect of the discrete algebraic Riccati equation."""
    BtPB = B.T @ P @ B
    AtPB = A.T @ P @ B
    P_next = Q + A.T @ P @ A - AtPB @ np.linalg.solve(R + BtPB, AtPB.T)
    return float(np.max(np.abs(P_next - P)))


def solve_riccati(lin, weights, tol=1e-12, max_iter=200000, i_max=None):
    """Fixed-point iteration of the discrete Riccati recursion.

    Iterates P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA until the largest
    elementwise change drops below tol, then forms K = (R + B'PB)^-1 B'PA.

    Raises:
        RiccatiConvergenceError: tol not reached within max_iter sweeps.
        InstabilityError: closed-loop spectral radius of A - BK is >= 1.
    """
    A, B = lin.A_d, lin.B_d
    Q, R = weights.q_matrix(), weights.r_matrix()
    P = Q.copy()
    for _ in range(max_iter):
        AtPB = A.T @ P @ B
        BtPB = B.T @ P @ B
        P_next = Q + A.T @ P @ A - AtPB @ np.linalg.solve(R + BtPB, AtPB.T)
        P_next = 0.5 * (P_next + P_next.T)
        change = np.max(np.abs(P_next - P))
        P = P_next
        if change < tol:
            break
    else:
        raise RiccatiConvergenceError(
            f"Riccati iteration did not reach tol={tol} in {max_iter} sweeps",
            residual=riccati_residual(P, A, B, Q, R))
    K = np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    radius = float(np.max(np.abs(np.linalg.eigvals(A - B @ K))))
    if radius >= 1.0:
        raise InstabilityError(f"closed-loop spectral radius {radius:.6f} >= 1")
    return LqrGain(K=K, P=P, residual=riccati_residual(P, A, B, Q, R),
                   h=lin.h, i_max=float(i_max) if i_max is not None else np.inf)


def design_lqr(params, h=0.01, weights=None, tol=1e-12):
    """Linearize the plant and solve for the LQR gain in one call."""
    weights = weights or CostWeights()
    lin = linearize(params, h)
    return solve_riccati(lin, weights, tol=tol, i_max=params.i_max)


def baseline_policy(gain, x):
    """Baseline control law u = -K x, saturated to the current limit."""
    u = -gain.K @ np.asarray(x, dtype=float)
    return np.clip(u, -gain.i_max, gain.i_max)


def trajectory_cost(states, inputs, h, weights=None):
    """Rectangle-rule quadratic cost sum_k (x'Qx + u'Ru) * h.

    Args:
        states: (L, 6) array of states sampled every h seconds.
        inputs: (L, 2) array of applied inputs.
        h: sampling interval [s].
        weights: CostWeights (paper defaults when omitted).
    """
    weights = weights or CostWeights()
    x = np.asarray(states, dtype=float)
    u = np.asarray(inputs, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInputError("trajectory_cost needs a non-empty (L, 6) state array")
    if u.shape[0] != x.shape[0]:
        raise InvalidInputError("states and inputs must have equal length")
    q = np.asarray(weights.Q)
    r = np.asarray(weights.R)
    return float((np.sum(x * x * q) + np.sum(u * u * r)) * h)
