"""Training-data pipeline: closed-loop rollouts, fault augmentation,
train/val/test splitting, sequence windowing, and CSV persistence.

A trajectory records 4 s of closed-loop operation under the baseline
controller at 10 ms sampling (400 steps). Augmented copies replay the same
states and inputs but corrupt one sensor channel from a random fault time
onward; the imitation target stays the fault-free baseline action.

Augmented trajectories receive id = parent_id + (copy + 1) * n_parents, so
parent lineage survives a save/load round trip: the parent of a faulted
trajectory is id % n_parents, with n_parents the number of fault-free
trajectories in the file.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import plant
from .baseline import baseline_policy
from .errors import DatasetFormatError, DivergenceError, InvalidConfigError, InvalidInputError
from .rngs import substream

SAMPLE_PERIOD = 0.01
ROLLOUT_DURATION = 4.0
ROLLOUT_STEPS = int(round(ROLLOUT_DURATION / SAMPLE_PERIOD))
WINDOW_LENGTH = 10

SPLIT_TRAIN = "train"
SPLIT_VAL = "val"
SPLIT_TEST = "test"
SPLITS = (SPLIT_TRAIN, SPLIT_VAL, SPLIT_TEST)

CSV_HEADER = (["traj_id", "step", "t"]
              + [f"x{i}" for i in range(1, 7)]
              + ["u1", "u2"]
              + [f"y{i}" for i in range(1, 7)]
              + ["fault_sensor", "fault_mode", "fault_value", "fault_time", "split"])


@dataclass
class Trajectory:
    """One rollout. Arrays are treated as immutable after construction."""

    id: int
    times: np.ndarray        # (L,)
    states: np.ndarray       # (L, 6)
    inputs: np.ndarray       # (L, 2)
    measurements: np.ndarray  # (L, 6), post-fault
    fault: plant.FaultSpec = None
    parent_id: int = None
    h: float = SAMPLE_PERIOD

    @property
    def length(self):
        return self.states.shape[0]

    def validate(self):
        L = self.length
        if not (self.times.shape == (L,) and self.inputs.shape == (L, 2)
                and self.measurements.shape == (L, 6) and self.states.shape == (L, 6)):
            raise InvalidInputError(f"trajectory {self.id}: inconsistent array lengths")
        if not np.allclose(self.times, np.arange(L) * self.h, atol=1e-12):
            raise InvalidInputError(f"trajectory {self.id}: times must equal k*h")
        if self.fault is None and not np.array_equal(self.measurements, self.states):
            raise InvalidInputError(
                f"trajectory {self.id}: fault-free measurements must equal states")


@dataclass
class SampleWindow:
    """m consecutive measurements plus the baseline action at the last step."""

    window: np.ndarray  # (m, 6)
    target: np.ndarray  # (2,)


@dataclass
class NormalizerStats:
    mean: np.ndarray  # (6,)
    std: np.ndarray   # (6,)


@dataclass
class Dataset:
    trajectories: list
    split_assignment: dict = None          # id -> split name
    normalizer_stats: NormalizerStats = None
    diverged_count: int = 0

    def __len__(self):
        return len(self.trajectories)

    def by_split(self, name):
        if self.split_assignment is None:
            raise InvalidInputError("dataset has no split assignment yet")
        return [t for t in self.trajectories if self.split_assignment.get(t.id) == name]

    def originals(self):
        return [t for t in self.trajectories if t.fault is None]

    def n_points(self):
        return sum(t.length for t in self.trajectories)


@dataclass(frozen=True)
class AugmentationConfig:
    """Synthetic-fault settings: two faulted copies per clean trajectory,
    fault time uniform on the sample grid inside fault_window."""

    copies_per_trajectory: int = 2
    fault_window: tuple = (0.3, 2.0)
    seed: int = 0

    def __post_init__(self):
        if self.copies_per_trajectory < 0:
            raise InvalidConfigError("copies_per_trajectory must be >= 0")
        lo, hi = self.fault_window
        if not 0 <= lo <= hi:
            raise InvalidConfigError("fault_window must satisfy 0 <= lo <= hi")


def rollout_baseline(params, gain, x0, n_steps=ROLLOUT_STEPS, h=SAMPLE_PERIOD,
                     rng=None):
    """Closed-loop rollout recording (x, u = k(x)) pairs.

    Measurements equal the states when sensor noise is off. The input
    applied over [k*h, (k+1)*h) is recorded at step k.
    """
    x = np.asarray(x0, dtype=float)
    states = np.empty((n_steps, 6))
    inputs = np.empty((n_steps, 2))
    measurements = np.empty((n_steps, 6))
    for k in range(n_steps):
        states[k] = x
        measurements[k] = plant.measure(x, params.noise_std, rng)
        u = baseline_policy(gain, x)
        inputs[k] = u
        x = plant.step_rk4(params, x, u, h)
    return states, inputs, measurements


def generate_trajectories(params, gain, n_traj, seed):
    """Fault-free closed-loop dataset from uniformly sampled initial states.

    Each trajectory gets its own seed substream, so the result is
    independent of generation order. Diverging rollouts are excluded and
    counted in Dataset.diverged_count.
    """
    trajectories = []
    diverged = 0
    for k in range(n_traj):
        rng = substream(seed, "gen", k)
        x0 = plant.sample_initial_conditions(rng, 1)[0]
        try:
            states, inputs, measurements = rollout_baseline(params, gain, x0, rng=rng)
        except DivergenceError:
            diverged += 1
            continue
        tid = len(trajectories)
        trajectories.append(Trajectory(
            id=tid, times=np.arange(ROLLOUT_STEPS) * SAMPLE_PERIOD,
            states=states, inputs=inputs, measurements=measurements))
    return Dataset(trajectories=trajectories, diverged_count=diverged)


def _draw_fault(rng, times, window):
    """Sample one FaultSpec following the augmentation distribution."""
    sensor = int(rng.integers(1, plant.N_SENSORS + 1))
    grid = times[(times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)]
    if grid.size == 0:
        raise InvalidConfigError("fault_window contains no sample times")
    t_f = float(grid[rng.integers(0, grid.size)])
    if sensor in plant.POSITION_SENSORS:
        mode = (plant.MODE_HOLD_LAST, plant.MODE_ZERO, plant.MODE_CONSTANT)[
            int(rng.integers(0, 3))]
        value = float(rng.uniform(-np.pi, np.pi)) if mode == plant.MODE_CONSTANT else 0.0
    else:
        mode, value = plant.MODE_ZERO, 0.0
    return plant.FaultSpec(sensor=sensor, mode=mode, t_f=t_f, value=value)


def faulted_measurements(traj, fault):
    """Measurements of traj with one abrupt fault applied from t_f onward."""
    k_f = int(np.searchsorted(traj.times, fault.t_f - 1e-12))
    meas = np.array(traj.measurements, copy=True)
    col = fault.sensor - 1
    if k_f >= traj.length:
        return meas
    if fault.mode == plant.MODE_HOLD_LAST:
        held = meas[k_f - 1, col] if k_f > 0 else meas[0, col]
        meas[k_f:, col] = held
    elif fault.mode == plant.MODE_ZERO:
        meas[k_f:, col] = 0.0
    else:
        meas[k_f:, col] = fault.value
    return meas


def augment(ds, cfg):
    """Append faulted copies of every fault-free trajectory.

    States, inputs and times are shared with the parent (the imitation
    target stays the fault-free baseline action); only the measurements
    are rewritten. Fault draws use one substream per (parent, copy).
    """
    if any(t.fault is not None for t in ds.trajectories):
        raise InvalidInputError("augment expects a dataset of fault-free trajectories")
    parents = ds.trajectories
    n = len(parents)
    out = list(parents)
    for copy_idx in range(cfg.copies_per_trajectory):
        for p in parents:
            lo, hi = cfg.fault_window
            if hi > p.times[-1] + 1e-12:
                raise InvalidConfigError(
                    f"fault_window {cfg.fault_window} exceeds trajectory duration "
                    f"{p.times[-1] + p.h:.3f}")
            rng = substream(cfg.seed, "augment", p.id, copy_idx)
            fault = _draw_fault(rng, p.times, cfg.fault_window)
            out.append(Trajectory(
                id=p.id + (copy_idx + 1) * n, times=p.times, states=p.states,
                inputs=p.inputs, measurements=faulted_measurements(p, fault),
                fault=fault, parent_id=p.id, h=p.h))
    return Dataset(trajectories=out, diverged_count=ds.diverged_count)


def split(ds, seed):
    """Assign trajectories to train/val/test in 80/10/10 proportions.

    Parents are shuffled and partitioned by count; an augmented trajectory
    always follows its parent, which keeps faulted variants of one rollout
    out of the other splits. Normalizer statistics are computed from the
    training measurements only.
    """
    parents = ds.originals()
    if len(parents) < 10:
        raise InvalidConfigError("need at least 10 fault-free trajectories to split")
    order = np.array([p.id for p in parents])
    substream(seed, "split").shuffle(order)
    n = len(order)
    n_train = int(round(0.8 * n))
    n_val = int(round(0.1 * n))
    assignment = {}
    for rank, pid in enumerate(order):
        if rank < n_train:
            assignment[int(pid)] = SPLIT_TRAIN
        elif rank < n_train + n_val:
            assignment[int(pid)] = SPLIT_VAL
        else:
            assignment[int(pid)] = SPLIT_TEST
    for t in ds.trajectories:
        if t.fault is not None:
            if t.parent_id is None or t.parent_id not in assignment:
                raise InvalidInputError(
                    f"faulted trajectory {t.id} has no parent to inherit a split from")
            assignment[t.id] = assignment[t.parent_id]
    new_ds = Dataset(trajectories=ds.trajectories, split_assignment=assignment,
                     diverged_count=ds.diverged_count)
    train_meas = np.concatenate([t.measurements for t in new_ds.by_split(SPLIT_TRAIN)])
    mean = train_meas.mean(axis=0)
    std = train_meas.std(axis=0)
    std = np.maximum(std, 1e-8)
    new_ds.normalizer_stats = NormalizerStats(mean=mean, std=std)
    return new_ds


def window_samples(traj, m=WINDOW_LENGTH):
    """All length-m measurement windows with their baseline-action targets.

    Window k covers measurements[k-m+1 .. k] and targets inputs[k]; a
    trajectory of L steps yields L - m + 1 windows.
    """
    if traj.length < m:
        raise InvalidInputError(
            f"trajectory length {traj.length} shorter than window {m}")
    out = []
    for k in range(m - 1, traj.length):
        out.append(SampleWindow(window=traj.measurements[k - m + 1:k + 1],
                                target=traj.inputs[k]))
    return out


def stack_windows(trajectories, m=WINDOW_LENGTH):
    """Windows of many trajectories stacked into arrays (X (N,m,6), Y (N,2))."""
    xs, ys = [], []
    for t in trajectories:
        if t.length < m:
            raise InvalidInputError(
                f"trajectory length {t.length} shorter than window {m}")
        sw = np.lib.stride_tricks.sliding_window_view(t.measurements, m, axis=0)
        xs.append(np.ascontiguousarray(sw.transpose(0, 2, 1)))
        ys.append(t.inputs[m - 1:])
    return np.concatenate(xs), np.concatenate(ys)


def _fmt(v):
    return repr(float(v))


def save_dataset(ds, path):
    """Write the dataset as one CSV with full float round-trip fidelity."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for t in ds.trajectories:
            f = t.fault
            fault_cols = ["", "", "", ""]
            if f is not None:
                fault_cols = [str(f.sensor), f.mode,
                              _fmt(f.value) if f.mode == plant.MODE_CONSTANT else "",
                              _fmt(f.t_f)]
            split_name = ""
            if ds.split_assignment is not None:
                split_name = ds.split_assignment.get(t.id, "")
            for k in range(t.length):
                row = ([str(t.id), str(k), _fmt(t.times[k])]
                       + [_fmt(v) for v in t.states[k]]
                       + [_fmt(v) for v in t.inputs[k]]
                       + [_fmt(v) for v in t.measurements[k]]
                       + fault_cols + [split_name])
                w.writerow(row)


def load_dataset(path):
    """Read a dataset CSV written by save_dataset.

    Raises DatasetFormatError with the 1-based line number on any
    malformed row.
    """
    rows_by_id = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError("dataset file is empty", line=1)
        if header != CSV_HEADER:
            raise DatasetFormatError(
                f"unexpected header (got {len(header)} columns)", line=1)
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                raise DatasetFormatError(
                    f"expected {len(CSV_HEADER)} columns, got {len(row)}",
                    line=lineno)
            try:
                tid = int(row[0])
                step = int(row[1])
                nums = [float(v) for v in row[2:17]]
                fault_cols = row[17:21]
                split_name = row[21]
            except ValueError as exc:
                raise DatasetFormatError(f"bad value: {exc}", line=lineno)
            rows_by_id.setdefault(tid, []).append(
                (step, nums, fault_cols, split_name, lineno))

    trajectories = []
    assignment = {}
    any_split = False
    for tid in sorted(rows_by_id):
        rows = sorted(rows_by_id[tid], key=lambda r: r[0])
        L = len(rows)
        times = np.empty(L)
        states = np.empty((L, 6))
        inputs = np.empty((L, 2))
        meas = np.empty((L, 6))
        fault = None
        split_name = rows[0][3]
        for idx, (step, nums, fault_cols, s_name, lineno) in enumerate(rows):
            if step != idx:
                raise DatasetFormatError(
                    f"trajectory {tid}: non-contiguous steps", line=lineno)
            times[idx] = nums[0]
            states[idx] = nums[1:7]
            inputs[idx] = nums[7:9]
            meas[idx] = nums[9:15]
            if fault_cols[0] != "":
                try:
                    fault = plant.FaultSpec(
                        sensor=int(fault_cols[0]), mode=fault_cols[1],
                        value=float(fault_cols[2]) if fault_cols[2] else 0.0,
                        t_f=float(fault_cols[3]))
                except (ValueError, InvalidConfigError) as exc:
                    raise DatasetFormatError(f"bad fault columns: {exc}", line=lineno)
        h = float(times[1] - times[0]) if L > 1 else SAMPLE_PERIOD
        trajectories.append(Trajectory(
            id=tid, times=times, states=states, inputs=inputs,
            measurements=meas, fault=fault, h=h))
        if split_name:
            any_split = True
            if split_name not in SPLITS:
                raise DatasetFormatError(f"unknown split {split_name!r}", line=rows[0][4])
            assignment[tid] = split_name

    # restore parent lineage from the id convention
    n_parents = sum(1 for t in trajectories if t.fault is None)
    if n_parents:
        for t in trajectories:
            if t.fault is not None:
                t.parent_id = t.id % n_parents

    ds = Dataset(trajectories=trajectories,
                 split_assignment=assignment if any_split else None)
    if any_split and assignment:
        train = ds.by_split(SPLIT_TRAIN)
        if train:
            m = np.concatenate([t.measurements for t in train])
            ds.normalizer_stats = NormalizerStats(
                mean=m.mean(axis=0), std=np.maximum(m.std(axis=0), 1e-8))
    return ds


def dataset_equal(a, b):
    """Bit-exact equality of two datasets (used by round-trip tests)."""
    if len(a) != len(b) or (a.split_assignment or {}) != (b.split_assignment or {}):
        return False
    for ta, tb in zip(a.trajectories, b.trajectories):
        if ta.id != tb.id or ta.fault != tb.fault:
            return False
        for fa, fb in ((ta.times, tb.times), (ta.states, tb.states),
                       (ta.inputs, tb.inputs), (ta.measurements, tb.measurements)):
            if not np.array_equal(fa, fb):
                return False
    return True


def fault_free_subset(ds):
    """Dataset restricted to the fault-free parents.

    Split assignment and normalizer statistics carry over, so a model
    trained on this subset shares the full dataset's normalization.
    """
    parents = ds.originals()
    assignment = None
    if ds.split_assignment is not None:
        assignment = {t.id: ds.split_assignment[t.id] for t in parents
                      if t.id in ds.split_assignment}
    return Dataset(trajectories=parents, split_assignment=assignment,
                   normalizer_stats=ds.normalizer_stats,
                   diverged_count=ds.diverged_count)


