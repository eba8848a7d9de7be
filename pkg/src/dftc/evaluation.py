"""Closed-loop evaluation: scenario suites with and without sensor faults,
normalized costs, settling checks, inference timing, and report export.

Every scenario is normalized against the baseline controller's fault-free
cost from the same initial condition. The baseline itself is always run
without faults (its rows in the "fault" condition repeat the fault-free
run), mirroring how learned controllers are compared against an ideal
reference.
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from . import dataset as dsm
from . import plant
from .baseline import CostWeights, trajectory_cost
from .errors import DivergenceError, InvalidInputError
from .rngs import substream

CONDITION_NO_FAULT = "no_fault"
CONDITION_FAULT = "fault"
CONDITIONS = (CONDITION_NO_FAULT, CONDITION_FAULT)

RUNS_CSV_HEADER = ["controller", "scenario", "condition", "J", "rho", "settled",
                   "max_abs_dphi", "diverged", "fault_sensor", "fault_mode",
                   "fault_value", "fault_time"]

# a baseline cost this small means the scenario never left the origin and
# the cost ratio carries no information
RHO_DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class Scenario:
    """One evaluation episode: initial state, optional fault, timing."""

    id: int
    x0: tuple
    fault: plant.FaultSpec = None
    duration: float = 4.0
    h: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.fault is not None and not (0.3 - 1e-12 <= self.fault.t_f <= 2.0 + 1e-12):
            raise InvalidInputError("scenario fault time must lie in [0.3 s, 2.0 s]")
        if len(self.x0) != plant.N_STATES:
            raise InvalidInputError("scenario initial condition must be 6-dimensional")

    @property
    def n_steps(self):
        return int(round(self.duration / self.h))


@dataclass
class RolloutResult:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    measurements: np.ndarray
    J: float
    diverged: bool
    features: np.ndarray = None   # (L, 192) LSTM block outputs, when recorded


@dataclass
class EvalRow:
    controller: str
    scenario: int
    condition: str
    J: float            # None when the run diverged
    rho: float          # None when diverged or the denominator is degenerate
    settled: bool
    max_abs_dphi: float
    diverged: bool
    fault: plant.FaultSpec = None


@dataclass
class EvalReport:
    rows: list
    aggregates: dict       # controller -> condition -> stats dict
    controllers: list
    n_scenarios: int
    trajectories: dict = None    # (controller, scenario, condition) -> RolloutResult


def rollout(params, controller, scenario, apply_scenario_fault=True, weights=None,
            record_features=False):
    """Run one closed-loop episode: measure, corrupt, act, integrate.

    The controller only ever sees the (possibly faulty) measurement vector.
    Divergence does not raise; it flags the result and truncates the
    recorded arrays at the failed step.
    """
    weights = weights or CostWeights()
    controller.reset()
    n = scenario.n_steps
    fault = scenario.fault if apply_scenario_fault else None
    rng = substream(scenario.seed, "measure", scenario.id) if params.noise_std > 0 else None
    want_features = record_features and hasattr(controller, "record_features")
    if want_features:
        controller.record_features = True
    x = np.asarray(scenario.x0, dtype=float)
    times = np.arange(n) * scenario.h
    states = np.zeros((n, 6))
    inputs = np.zeros((n, 2))
    measurements = np.zeros((n, 6))
    feat_rows = []
    held = None
    diverged = False
    k_done = 0
    for k in range(n):
        t = times[k]
        states[k] = x
        y_clean = plant.measure(x, params.noise_std, rng)
        if fault is not None and t < fault.t_f:
            held = y_clean[fault.sensor - 1]
        # held stays None when the fault is active from t = 0; the first
        # reading then serves as the frozen value
        history = held if held is not None else (y_clean[fault.sensor - 1] if fault else 0.0)
        y = plant.apply_fault(y_clean, history, fault, t)
        measurements[k] = y
        u = controller.act(y)
        inputs[k] = u
        if want_features and controller.last_features is not None:
            feat_rows.append(controller.last_features)
        k_done = k + 1
        try:
            x = plant.step_rk4(params, x, u, scenario.h)
        except DivergenceError:
            diverged = True
            break
    if k_done < n:
        times, states = times[:k_done], states[:k_done]
        inputs, measurements = inputs[:k_done], measurements[:k_done]
    features = np.asarray(feat_rows) if feat_rows else None
    J = None if diverged else trajectory_cost(states, inputs, scenario.h, weights)
    return RolloutResult(times=times, states=states, inputs=inputs,
                         measurements=measurements, J=J, diverged=diverged,
                         features=features)


def settling_check(states, h, tol_theta=0.05, hold=0.5):
    """True iff both link angles stay within tol for the final hold period."""
    n_hold = int(round(hold / h))
    if states.shape[0] < n_hold or n_hold == 0:
        return False
    tail = states[-n_hold:, :2]
    return bool(np.all(np.abs(tail) <= tol_theta))


def draw_scenarios(n_scenarios, seed, fault_window=(0.3, 2.0), duration=4.0, h=0.01):
    """Initial conditions from the workspace box plus one sampled fault each.

    The fault distribution matches dataset augmentation: sensor uniform in
    1..6, position sensors fail to hold-last/zero/constant U(-pi, pi),
    velocity sensors fail to zero, fault time uniform on the sample grid.
    """
    times = np.arange(int(round(duration / h))) * h
    scenarios = []
    for i in range(n_scenarios):
        rng = substream(seed, "eval", i)
        x0 = plant.sample_initial_conditions(rng, 1)[0]
        fault = dsm._draw_fault(rng, times, fault_window)
        scenarios.append(Scenario(id=i, x0=tuple(x0), fault=fault,
                                  duration=duration, h=h, seed=seed))
    return scenarios


def run_suite(params, controllers, n_scenarios, seed, weights=None,
              keep_trajectories=False, record_features=False,
              settle_tol=0.05, settle_hold=0.5):
    """Evaluate controllers on paired fault-free / faulted scenarios.

    Args:
        controllers: ordered mapping name -> controller; must contain
            "baseline", which provides the cost denominator and always runs
            fault-free.

    Every controller is scored under both conditions, so the report has
    n_scenarios * len(controllers) * 2 rows. rho = J / J_baseline(no fault,
    same initial condition). Diverged runs carry no cost and are excluded
    from the aggregates but counted.
    """
    if "baseline" not in controllers:
        raise InvalidInputError('run_suite needs a "baseline" controller')
    weights = weights or CostWeights()
    scenarios = draw_scenarios(n_scenarios, seed)
    rows = []
    kept = {} if keep_trajectories else None
    for sc in scenarios:
        base = rollout(params, controllers["baseline"], sc,
                       apply_scenario_fault=False, weights=weights)
        if base.diverged or base.J is None or base.J <= RHO_DENOM_FLOOR:
            denom = None
        else:
            denom = base.J
        for name, ctrl in controllers.items():
            for condition in CONDITIONS:
                if name == "baseline":
                    res = base
                else:
                    with_fault = condition == CONDITION_FAULT
                    res = rollout(params, ctrl, sc, apply_scenario_fault=with_fault,
                                  weights=weights, record_features=record_features)
                rho = None
                if not res.diverged and denom is not None:
                    rho = 1.0 if res is base else res.J / denom
                rows.append(EvalRow(
                    controller=name, scenario=sc.id, condition=condition,
                    J=res.J, rho=rho,
                    settled=settling_check(res.states, sc.h, settle_tol, settle_hold),
                    max_abs_dphi=float(np.max(np.abs(res.states[:, 4:6])))
                    if res.states.size else float("nan"),
                    diverged=res.diverged,
                    fault=sc.fault if condition == CONDITION_FAULT else None))
                if kept is not None:
                    kept[(name, sc.id, condition)] = res
    report = EvalReport(rows=rows, aggregates=aggregate_rows(rows),
                        controllers=list(controllers), n_scenarios=n_scenarios,
                        trajectories=kept)
    return report


def aggregate_rows(rows):
    """Mean/std of rho per controller and condition, with exclusion counts."""
    agg = {}
    for row in rows:
        per_ctrl = agg.setdefault(row.controller, {})
        stats = per_ctrl.setdefault(row.condition,
                                    {"rhos": [], "n": 0, "excluded": 0})
        stats["n"] += 1
        if row.rho is None:
            stats["excluded"] += 1
        else:
            stats["rhos"].append(row.rho)
    out = {}
    for ctrl, conds in agg.items():
        out[ctrl] = {}
        for cond, stats in conds.items():
            rhos = np.asarray(stats["rhos"])
            out[ctrl][cond] = {
                "mean_rho": float(rhos.mean()) if rhos.size else None,
                "std_rho": float(rhos.std()) if rhos.size else None,
                "n": stats["n"],
                "excluded": stats["excluded"],
            }
    return out


def timing_stats(controller, n_calls=1000, seed=0, warmup=20):
    """Mean and worst wall-clock seconds per controller act() call.

    Measurements are representative workspace vectors; the controller is
    warmed up (JIT, buffer fill) before timing starts.
    """
    rng = substream(seed, "timing")
    ys = plant.sample_initial_conditions(rng, n_calls + warmup)
    controller.reset()
    for k in range(warmup):
        controller.act(ys[k])
    worst = 0.0
    total = 0.0
    for k in range(n_calls):
        t0 = time.perf_counter()
        controller.act(ys[warmup + k])
        dt = time.perf_counter() - t0
        total += dt
        worst = max(worst, dt)
    return total / n_calls, worst


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def export_report(report, out_dir):
    """Write report.json and runs.csv into out_dir.

    Timing is deliberately absent from both files so that re-running a
    pipeline with the same seed reproduces them byte for byte; wall-clock
    figures go to a separate timing.json written by the CLI.
    """
    import csv
    import os
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "controllers": report.controllers,
        "conditions": list(CONDITIONS),
        "n_scenarios": report.n_scenarios,
        "aggregates": report.aggregates,
    }
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RUNS_CSV_HEADER)
        for r in report.rows:
            f = r.fault
            w.writerow([
                r.controller, str(r.scenario), r.condition, _fmt(r.J), _fmt(r.rho),
                str(int(r.settled)), _fmt(r.max_abs_dphi), str(int(r.diverged)),
                str(f.sensor) if f else "", f.mode if f else "",
                _fmt(f.value) if f and f.mode == plant.MODE_CONSTANT else "",
                _fmt(f.t_f) if f else ""])
    return [os.path.join(out_dir, "report.json"), os.path.join(out_dir, "runs.csv")]


def export_trajectories(report, out_dir):
    """Per-run time-series CSVs (Fig.-style plot data), one file per rollout.

    Columns: t, the six true states, the two inputs, the six measurements,
    plus one column per recorded LSTM feature when present.
    """
    import csv
    import os
    os.makedirs(out_dir, exist_ok=True)
    if not report.trajectories:
        return []
    paths = []
    for (name, sid, condition), res in sorted(report.trajectories.items()):
        path = os.path.join(out_dir, f"traj_{sid:04d}_{name}_{condition}.csv")
        header = (["t"] + [f"x{i}" for i in range(1, 7)] + ["u1", "u2"]
                  + [f"y{i}" for i in range(1, 7)])
        n_feat = res.features.shape[1] if res.features is not None else 0
        header += [f"lstm_feat{k}" for k in range(n_feat)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(res.states.shape[0]):
                row = ([_fmt(res.times[k])] + [_fmt(v) for v in res.states[k]]
                       + [_fmt(v) for v in res.inputs[k]]
                       + [_fmt(v) for v in res.measurements[k]])
                if n_feat:
                    row += [_fmt(v) for v in res.features[k]]
                w.writerow(row)
        paths.append(path)
    return paths
