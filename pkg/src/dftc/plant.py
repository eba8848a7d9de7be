"""Reaction-wheel inverted pendulum: dynamics, sensing, abrupt sensor faults.

The plant is a pendulum held upright by extension springs and actuated by
two orthogonal reaction wheels driven by current-controlled motors. The two
axes are mechanically identical and decoupled; per axis:

    I_p * ddtheta = ml*g*sin(theta) - k_s*theta - b_th*dtheta - tau + b_ph*dphi
    ddphi         = (tau - b_ph*dphi) / I_w - ddtheta
    tau           = k_T * clip(i, -i_max, i_max)

State vector layout, fixed everywhere (files, cost weights, network input):

    x = [theta1, theta2, dtheta1, dtheta2, dphi1, dphi2]

theta: link angles from vertical (rad); dtheta: link rates (rad/s);
dphi: wheel speeds (rad/s). Every state is measured by its own sensor, so
the fault-free output map is the identity, y = x.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InvalidInputError, InvalidConfigError

N_STATES = 6
N_INPUTS = 2
N_SENSORS = 6

# index constants for the state vector
THETA1, THETA2, DTHETA1, DTHETA2, DPHI1, DPHI2 = range(6)

# sensors 1..6 measure x[0]..x[5]; 1 and 2 are position sensors, the rest rates
POSITION_SENSORS = (1, 2)
VELOCITY_SENSORS = (3, 4, 5, 6)

# abrupt fault modes
MODE_HOLD_LAST = "hold_last"
MODE_ZERO = "zero"
MODE_CONSTANT = "constant"
FAULT_MODES = (MODE_HOLD_LAST, MODE_ZERO, MODE_CONSTANT)


@dataclass(frozen=True)
class PlantParams:
    """Physical parameters, identical for both axes.

    Attributes:
        I_p: pendulum inertia about the pivot, per axis [kg m^2]
        I_w: reaction wheel inertia [kg m^2]
        ml: pendulum mass times CoM height [kg m]
        g: gravitational acceleration [m/s^2]
        k_s: spring stiffness about the pivot, per axis [N m/rad]
        b_th: link viscous damping [N m s/rad]
        b_ph: wheel bearing damping [N m s/rad]
        k_T: motor torque constant [N m/A]
        i_max: motor current limit [A]
        noise_std: sensor noise standard deviation, 0 disables noise
    """

    I_p: float = 0.02
    I_w: float = 5.12e-4
    ml: float = 0.3
    g: float = 9.81
    k_s: float = 5.0
    b_th: float = 0.01
    b_ph: float = 1e-5
    k_T: float = 0.0369
    i_max: float = 5.0
    noise_std: float = 0.0

    def __post_init__(self):
        if not (self.I_p > 0 and self.I_w > 0 and self.i_max > 0 and self.k_T > 0):
            raise InvalidConfigError("I_p, I_w, i_max and k_T must be positive")
        if not self.k_s > self.ml * self.g:
            raise InvalidConfigError(
                "k_s must exceed ml*g so the springs stabilize the upright "
                f"equilibrium (k_s={self.k_s}, ml*g={self.ml * self.g})"
            )
        if self.noise_std < 0:
            raise InvalidConfigError("noise_std must be >= 0")


@dataclass(frozen=True)
class SensorConfig:
    """Subset of the six sensors that remain available."""

    active: tuple = tuple(range(1, N_SENSORS + 1))

    def __post_init__(self):
        act = tuple(sorted(set(int(s) for s in self.active)))
        if not act:
            raise InvalidConfigError("sensor configuration must be non-empty")
        if act[0] < 1 or act[-1] > N_SENSORS:
            raise InvalidConfigError(f"sensor indices must lie in 1..{N_SENSORS}")
        object.__setattr__(self, "active", act)

    @property
    def indices(self):
        """0-based column indices of the active sensors."""
        return tuple(s - 1 for s in self.active)

    def label(self):
        return "".join(str(s) for s in self.active)


def full_config():
    return SensorConfig()


def single_drop_configs():
    """The six configurations with exactly one faulty sensor discarded."""
    all_sensors = set(range(1, N_SENSORS + 1))
    return [SensorConfig(tuple(sorted(all_sensors - {s}))) for s in range(1, N_SENSORS + 1)]


@dataclass(frozen=True)
class FaultSpec:
    """One abrupt sensor fault: which sensor, what failure mode, and when.

    mode is one of MODE_HOLD_LAST (output frozen at the last pre-fault
    reading), MODE_ZERO (output drops to zero) or MODE_CONSTANT (output
    stuck at `value`). Only one sensor can fail per rollout.
    """

    sensor: int
    mode: str
    t_f: float
    value: float = 0.0

    def __post_init__(self):
        if not 1 <= self.sensor <= N_SENSORS:
            raise InvalidConfigError(f"fault sensor must be in 1..{N_SENSORS}, got {self.sensor}")
        if self.mode not in FAULT_MODES:
            raise InvalidConfigError(f"unknown fault mode {self.mode!r}")
        if not self.t_f >= 0:
            raise InvalidConfigError("fault time must be >= 0")
        if self.mode == MODE_CONSTANT and not math.isfinite(self.value):
            raise InvalidConfigError("constant fault value must be finite")


def dynamics(params, x, u):
    """Continuous-time state derivative f(x, u).

    Args:
        params: PlantParams.
        x: state vector, shape (6,).
        u: motor currents, shape (2,); saturated to +-i_max internally.

    Returns:
        dx/dt as a float64 array [dtheta1, dtheta2, ddtheta1, ddtheta2,
        ddphi1, ddphi2].
    """
    th1 = float(x[0]); th2 = float(x[1])
    dth1 = float(x[2]); dth2 = float(x[3])
    dph1 = float(x[4]); dph2 = float(x[5])
    i1 = float(u[0]); i2 = float(u[1])
    if not (math.isfinite(th1) and math.isfinite(th2) and math.isfinite(dth1)
            and math.isfinite(dth2) and math.isfinite(dph1) and math.isfinite(dph2)
            and math.isfinite(i1) and math.isfinite(i2)):
        raise InvalidInputError("dynamics received non-finite state or input")

    i_max = params.i_max
    tau1 = params.k_T * min(max(i1, -i_max), i_max)
    tau2 = params.k_T * min(max(i2, -i_max), i_max)

    mlg = params.ml * params.g
    ddth1 = (mlg * math.sin(th1) - params.k_s * th1 - params.b_th * dth1
             - tau1 + params.b_ph * dph1) / params.I_p
    ddth2 = (mlg * math.sin(th2) - params.k_s * th2 - params.b_th * dth2
             - tau2 + params.b_ph * dph2) / params.I_p
    ddph1 = (tau1 - params.b_ph * dph1) / params.I_w - ddth1
    ddph2 = (tau2 - params.b_ph * dph2) / params.I_w - ddth2
    return np.array([dth1, dth2, ddth1, ddth2, ddph1, ddph2])


def saturate(u, i_max):
    """Clip motor currents to the actuator limit."""
    return np.clip(np.asarray(u, dtype=float), -i_max, i_max)


def step_rk4(params, x, u, h):
    """One classical 4th-order Runge-Kutta step with zero-order-hold input.

    Raises DivergenceError (carrying the offending state) if the result is
    not finite.
    """
    if not h > 0:
        raise InvalidInputError(f"step size must be positive, got {h}")
    k1 = dynamics(params, x, u)
    k2 = dynamics(params, x + 0.5 * h * k1, u)
    k3 = dynamics(params, x + 0.5 * h * k2, u)
    k4 = dynamics(params, x + h * k3, u)
    x_next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise DivergenceError("RK4 step produced a non-finite state",
                              state=x_next, context="step_rk4")
    return x_next


def measure(x, noise_std=0.0, rng=None):
    """Sensor readings for a state: identity map, optionally with noise.

    Each state component is measured by its own sensor, so y = x. When
    noise_std > 0 an independent zero-mean Gaussian sample is added per
    channel (rng required in that case).
    """
    y = np.array(x, dtype=float, copy=True)
    if noise_std > 0.0:
        if rng is None:
            raise InvalidInputError("measure with noise requires an rng")
        y += rng.normal(0.0, noise_std, size=y.shape)
    return y


def apply_fault(y, history_value, spec, t):
    """Corrupt one sensor channel according to an abrupt fault spec.

    Args:
        y: clean sensor vector, shape (6,).
        history_value: reading of the failed sensor at the last sample
            before the fault (used by MODE_HOLD_LAST).
        spec: FaultSpec, or None for no fault.
        t: current time [s].

    Returns:
        The measurement the controller actually sees. Before t_f the vector
        is returned unchanged; from t_f on, the failed channel is replaced
        and all others are untouched.
    """
    if spec is None or t < spec.t_f:
        return np.array(y, dtype=float, copy=True)
    if not 1 <= spec.sensor <= N_SENSORS:
        raise InvalidConfigError(f"fault sensor must be in 1..{N_SENSORS}")
    out = np.array(y, dtype=float, copy=True)
    if spec.mode == MODE_HOLD_LAST:
        out[spec.sensor - 1] = history_value
    elif spec.mode == MODE_ZERO:
        out[spec.sensor - 1] = 0.0
    else:
        out[spec.sensor - 1] = spec.value
    return out


def total_energy(params, x):
    """Mechanical energy of the undamped, unforced plant, summed over axes.

    Kinetic terms use the link rate and the wheel rate relative to inertial
    space (dtheta + dphi); potential terms combine the springs and gravity,
    zeroed at upright. Conserved when b_th = b_ph = 0 and u = 0.
    """
    e = 0.0
    for a in range(2):
        th = x[a]; dth = x[2 + a]; dph = x[4 + a]
        e += 0.5 * params.I_p * dth ** 2
        e += 0.5 * params.I_w * (dth + dph) ** 2
        e += 0.5 * params.k_s * th ** 2
        e += params.ml * params.g * (math.cos(th) - 1.0)
    return e


def plant_params_from_dict(d):
    """Build PlantParams from a config mapping, rejecting unknown keys."""
    known = {f.name for f in PlantParams.__dataclass_fields__.values()}
    unknown = set(d) - known
    if unknown:
        raise InvalidConfigError(f"unknown plant parameter keys: {sorted(unknown)}")
    return PlantParams(**d)


# initial-condition box used for dataset generation, observability base
# points, and evaluation scenarios
IC_LOW = np.array([-np.pi / 4, -np.pi / 4, -6.8, -6.8, -300.0, -300.0])
IC_HIGH = -IC_LOW


def sample_initial_conditions(rng, n):
    """Draw n initial states uniformly from the workspace box."""
    return rng.uniform(IC_LOW, IC_HIGH, size=(n, N_STATES))


def dynamics_batch(params, X, U):
    """Vectorized dynamics for a batch of states.

    Args:
        X: (B, 6) states; U: (B, 2) currents (saturated internally).

    Returns:
        (B, 6) state derivatives. No finiteness checks; callers on this
        fast path validate results themselves.
    """
    th = X[:, 0:2]
    dth = X[:, 2:4]
    dph = X[:, 4:6]
    tau = params.k_T * np.clip(U, -params.i_max, params.i_max)
    mlg = params.ml * params.g
    ddth = (mlg * np.sin(th) - params.k_s * th - params.b_th * dth
            - tau + params.b_ph * dph) / params.I_p
    ddph = (tau - params.b_ph * dph) / params.I_w - ddth
    return np.concatenate([dth, ddth, ddph], axis=1)
