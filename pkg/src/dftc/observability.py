"""Empirical observability Gramians for sensor-subset configurations.

The Gramian of a configuration is assembled from simulated output
trajectories of perturbed initial conditions:

    W_jk = 1/(4 eps^2) * integral_0^T (y+j - y-j)' (y+k - y-k) dt

where y+-j is the output trajectory started from x_bar +- eps * e_j and
restricted to the active sensors. log det W scores how well the remaining
sensors reveal the full state; configurations are ranked by that measure.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import plant
from .baseline import baseline_policy
from .errors import (DivergenceError, InvalidConfigError, InvalidInputError,
                     UnobservableConfigError)

PROBE_CLOSED_LOOP = "closed_loop_baseline"
PROBE_ZERO_INPUT = "zero_input"

# determinant floor below which a configuration is reported unobservable
DET_FLOOR = 1e-300


def default_channel_scales():
    """Characteristic magnitude of each sensor channel.

    Wheel speeds reach hundreds of rad/s while link angles stay below one
    radian; without rescaling, log det W is dominated entirely by the
    wheel-speed channels and the sensor ranking degenerates. Scaling by the
    workspace half-widths makes the channels unit-comparable.
    """
    return tuple((plant.IC_HIGH - plant.IC_LOW) / 2.0)


@dataclass(frozen=True)
class GramianConfig:
    """Probe settings for empirical Gramian computation.

    base_points holds the linearization centers x_bar; the Gramians of all
    base points are summed, which keeps the result positive semidefinite.
    channel_scales divides each sensor channel before integration (set all
    ones for the literal unscaled Gramian).
    """

    epsilon: float = 1e-4
    horizon: float = 4.0
    step: float = 1e-3
    base_points: tuple = (tuple([0.0] * plant.N_STATES),)
    probe_policy: str = PROBE_CLOSED_LOOP
    channel_scales: tuple = None

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidConfigError("epsilon must satisfy 0 < eps << 1")
        if self.horizon <= 0 or self.step <= 0:
            raise InvalidConfigError("horizon and step must be positive")
        pts = tuple(tuple(float(v) for v in p) for p in self.base_points)
        if not pts:
            raise InvalidConfigError("at least one base point is required")
        if any(len(p) != plant.N_STATES for p in pts):
            raise InvalidConfigError("base points must be 6-dimensional")
        if self.probe_policy not in (PROBE_CLOSED_LOOP, PROBE_ZERO_INPUT):
            raise InvalidConfigError(f"unknown probe policy {self.probe_policy!r}")
        scales = self.channel_scales
        if scales is None:
            scales = default_channel_scales()
        scales = tuple(float(s) for s in scales)
        if len(scales) != plant.N_SENSORS or any(s <= 0 for s in scales):
            raise InvalidConfigError("channel_scales needs 6 positive entries")
        object.__setattr__(self, "base_points", pts)
        object.__setattr__(self, "channel_scales", scales)

    @classmethod
    def default(cls, seed=0, n_base_points=8, **kwargs):
        """Config with base points drawn from the workspace box."""
        rng = np.random.default_rng(seed)
        pts = plant.sample_initial_conditions(rng, n_base_points)
        return cls(base_points=tuple(tuple(p) for p in pts), **kwargs)


@dataclass(frozen=True)
class GramianResult:
    W: np.ndarray
    J: float
    config: plant.SensorConfig


@dataclass
class RankRow:
    """One row of the configuration ranking table."""

    config: plant.SensorConfig
    J: float = None
    status: str = "ok"  # ok | reference | unobservable


def _trapezoid_weights(n_samples, h):
    w = np.full(n_samples, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def output_deltas(deriv, x_bar, eps, horizon, step, output=None):
    """Perturbed-output differences for a generic autonomous system.

    Integrates dx/dt = deriv(x) with RK4 from x_bar +- eps*e_j for every
    state direction j and returns D with D[j, t, :] = y+j(t) - y-j(t),
    where y = output(x) (identity when output is None).

    Raises DivergenceError naming the probe (j, sign) that blew up.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    n = x_bar.size
    n_steps = int(round(horizon / step))
    ys = []
    for j in range(n):
        pair = []
        for sign in (1.0, -1.0):
            x = x_bar.copy()
            x[j] += sign * eps
            traj = np.empty((n_steps + 1, n))
            traj[0] = x
            for t in range(n_steps):
                k1 = deriv(x)
                k2 = deriv(x + 0.5 * step * k1)
                k3 = deriv(x + 0.5 * step * k2)
                k4 = deriv(x + step * k3)
                x = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                traj[t + 1] = x
            if not np.all(np.isfinite(traj)):
                raise DivergenceError(
                    f"probe rollout diverged (state {j}, sign {int(sign):+d})",
                    context="output_deltas")
            pair.append(traj if output is None else
                        np.apply_along_axis(output, 1, traj))
        ys.append(pair[0] - pair[1])
    return np.stack(ys)


def gramian_from_deltas(D, eps, step):
    """Trapezoidal-rule Gramian from output differences D (n, T, n_y)."""
    w = _trapezoid_weights(D.shape[1], step)
    W = np.einsum("jtc,t,ktc->jk", D, w, D) / (4.0 * eps * eps)
    return 0.5 * (W + W.T)


def _plant_output_deltas(params, cfg, gain, x_bar):
    """Output differences of all 12 plant probes, integrated as one batch."""
    n = plant.N_STATES
    n_steps = int(round(cfg.horizon / cfg.step))
    X = np.tile(np.asarray(x_bar, dtype=float), (2 * n, 1))
    for j in range(n):
        X[2 * j, j] += cfg.epsilon
        X[2 * j + 1, j] -= cfg.epsilon
    if cfg.probe_policy == PROBE_CLOSED_LOOP:
        if gain is None:
            raise InvalidInputError("closed-loop probes need a baseline gain")
        K = gain.K
        i_max = gain.i_max

        def deriv(Xb):
            U = np.clip(-(Xb @ K.T), -i_max, i_max)
            return plant.dynamics_batch(params, Xb, U)
    else:
        U0 = np.zeros((2 * n, plant.N_INPUTS))

        def deriv(Xb):
            return plant.dynamics_batch(params, Xb, U0)

    h = cfg.step
    Y = np.empty((2 * n, n_steps + 1, n))
    Y[:, 0, :] = X
    for t in range(n_steps):
        k1 = deriv(X)
        k2 = deriv(X + 0.5 * h * k1)
        k3 = deriv(X + 0.5 * h * k2)
        k4 = deriv(X + h * k3)
        X = X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Y[:, t + 1, :] = X
    if not np.all(np.isfinite(Y)):
        bad = np.argwhere(~np.all(np.isfinite(Y), axis=(1, 2)))[0, 0]
        raise DivergenceError(
            f"probe rollout diverged (state {bad // 2}, "
            f"sign {'+' if bad % 2 == 0 else '-'}, base point {tuple(x_bar)})",
            context="empirical_gramian")
    # measurements are the states themselves (identity output map)
    return Y[0::2] - Y[1::2]


def channel_gramians(params, cfg, gain=None):
    """Per-sensor Gramian contributions G[c], summed over base points.

    The Gramian of any sensor subset S is sum(G[c] for c in S), so one set
    of probe rollouts serves every configuration and subset monotonicity
    holds exactly.
    """
    n = plant.N_STATES
    G = np.zeros((plant.N_SENSORS, n, n))
    w = _trapezoid_weights(int(round(cfg.horizon / cfg.step)) + 1, cfg.step)
    scales = np.asarray(cfg.channel_scales)
    for x_bar in cfg.base_points:
        D = _plant_output_deltas(params, cfg, gain, x_bar)
        D /= scales
        Gc = np.einsum("jtc,t,ktc->cjk", D, w, D) / (4.0 * cfg.epsilon ** 2)
        G += Gc
    return 0.5 * (G + G.transpose(0, 2, 1))


def empirical_gramian(params, sensors, cfg, gain=None):
    """Empirical observability Gramian of one sensor configuration.

    Probe rollouts run under the baseline controller (or zero input per
    cfg.probe_policy); Gramians of all base points are summed. Returns a
    GramianResult whose J is NaN when the configuration is unobservable.
    """
    G = channel_gramians(params, cfg, gain)
    W = G[list(sensors.indices)].sum(axis=0)
    W = 0.5 * (W + W.T)
    try:
        J = observability_measure(W)
    except UnobservableConfigError:
        J = float("nan")
    return GramianResult(W=W, J=J, config=sensors)


def observability_measure(W):
    """log det W via symmetric eigendecomposition.

    Raises UnobservableConfigError when W is singular (any non-positive
    eigenvalue, or determinant below the numeric floor).
    """
    W = np.asarray(W, dtype=float)
    Ws = 0.5 * (W + W.T)
    ev = np.linalg.eigvalsh(Ws)
    if ev[0] <= 0.0:
        raise UnobservableConfigError(
            f"Gramian is singular (min eigenvalue {ev[0]:.3e})")
    logdet = float(np.sum(np.log(ev)))
    if logdet < math.log(DET_FLOOR):
        raise UnobservableConfigError(
            f"Gramian determinant below floor (log det {logdet:.3e})")
    return logdet


def rank_configurations(params, configs, cfg, gain=None):
    """Rank sensor configurations by observability measure.

    configs must contain the full configuration and all six single-drop
    configurations; additional subsets are allowed. All configurations are
    scored on the same probe trajectories. Unobservable configurations are
    kept as rows flagged "unobservable" instead of aborting the ranking.

    Returns RankRow list sorted by J descending (unobservable rows last);
    the full configuration is marked "reference".
    """
    required = [plant.full_config()] + plant.single_drop_configs()
    present = {c.active for c in configs}
    missing = [c for c in required if c.active not in present]
    if missing:
        raise InvalidInputError(
            "configs must include the full configuration and every "
            f"single-drop configuration; missing {[c.label() for c in missing]}")
    G = channel_gramians(params, cfg, gain)
    full = plant.full_config().active
    rows = []
    for sc in configs:
        W = G[list(sc.indices)].sum(axis=0)
        row = RankRow(config=sc)
        try:
            row.J = observability_measure(W)
        except UnobservableConfigError:
            row.status = "unobservable"
        if sc.active == full and row.status == "ok":
            row.status = "reference"
        rows.append(row)
    rows.sort(key=lambda r: (r.J is None, -(r.J if r.J is not None else 0.0)))
    return rows


