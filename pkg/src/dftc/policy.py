"""Closed-loop controllers: the recurrent fault-tolerant policy, the
fault-naive feedforward comparison network, and the baseline wrapper.

The recurrent controller keeps a ring buffer of the last ten (possibly
faulty) sensor vectors and maps them straight to motor currents; no fault
flag, masking, or state reconstruction is involved. The feedforward
controller sees only the current measurement, which is exactly why it
breaks under faults.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import dataset as dsm
from . import nn
from .errors import InvalidInputError, NumericError
from .rngs import substream


class DftcController:
    """Recurrent controller over a sliding measurement window.

    Until m measurements have arrived, the window is padded with copies of
    the first measurement, which matches the near-constant prefixes the
    training windows exhibit right after release.
    """

    def __init__(self, model, i_max=5.0, record_features=False):
        self.model = model
        self.i_max = float(i_max)
        self.record_features = record_features
        self.last_features = None
        self._buffer = deque(maxlen=model.window)
        self._ws = None

    def reset(self):
        self._buffer.clear()
        self.last_features = None

    def act(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.model.n_blocks,) or not np.all(np.isfinite(y)):
            raise NumericError("controller received a bad measurement vector")
        self._buffer.append(y.copy())
        m = self.model.window
        rows = list(self._buffer)
        window = np.array([rows[0]] * (m - len(rows)) + rows)
        if self._ws is None:
            self._ws = nn._Workspace(self.model, 1)
        pred, _ = nn._forward_into(self.model, window[None], self._ws)
        if not np.all(np.isfinite(pred)):
            raise NumericError("non-finite controller output")
        if self.record_features:
            self.last_features = self._ws.feats[0].copy()
        return np.clip(pred[0], -self.i_max, self.i_max)


@dataclass
class FnnParams:
    """Plain 6 -> 64 -> ReLU -> 64 -> ReLU -> 2 network with normalizer."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    norm_mean: np.ndarray
    norm_std: np.ndarray

    def param_items(self):
        return [("fc1.w", self.w1), ("fc1.b", self.b1),
                ("fc2.w", self.w2), ("fc2.b", self.b2),
                ("out.w", self.w3), ("out.b", self.b3)]

    def weight_items(self):
        return [(n, a) for n, a in self.param_items() if n.endswith(".w")]

    def param_count(self):
        return sum(a.size for _, a in self.param_items())

    def copy(self):
        return FnnParams(*(a.copy() for _, a in self.param_items()),
                         norm_mean=self.norm_mean.copy(),
                         norm_std=self.norm_std.copy())


def init_fnn(seed, sizes=(6, 64, 64, 2)):
    rng = substream(seed, "init")

    def uniform(shape, fan_in):
        lim = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-lim, lim, size=shape)

    d0, d1, d2, d3 = sizes
    return FnnParams(
        w1=uniform((d1, d0), d0), b1=np.zeros(d1),
        w2=uniform((d2, d1), d1), b2=np.zeros(d2),
        w3=uniform((d3, d2), d2), b3=np.zeros(d3),
        norm_mean=np.zeros(d0), norm_std=np.ones(d0))


def fnn_forward(net, Y_in):
    """Batch forward pass; Y_in is (B, 6) raw measurements."""
    xn = (np.asarray(Y_in, dtype=float) - net.norm_mean) / net.norm_std
    a1 = xn @ net.w1.T + net.b1
    r1 = np.maximum(a1, 0.0)
    a2 = r1 @ net.w2.T + net.b2
    r2 = np.maximum(a2, 0.0)
    return r2 @ net.w3.T + net.b3, (xn, a1, r1, a2, r2)


def fnn_backward(net, Y_in, targets, lam=0.0):
    """Gradients of P_L2 for the feedforward network."""
    pred, (xn, a1, r1, a2, r2) = fnn_forward(net, Y_in)
    B = pred.shape[0]
    v = np.asarray(targets, dtype=float) - pred
    P = float(0.5 * np.sum(v * v) / B)
    dpred = -v / B
    grads = {"out.w": dpred.T @ r2, "out.b": dpred.sum(axis=0)}
    da2 = dpred @ net.w3
    da2 *= a2 > 0
    grads["fc2.w"] = da2.T @ r1
    grads["fc2.b"] = da2.sum(axis=0)
    da1 = da2 @ net.w2
    da1 *= a1 > 0
    grads["fc1.w"] = da1.T @ xn
    grads["fc1.b"] = da1.sum(axis=0)
    P_L2 = P
    if lam > 0:
        reg = 0.0
        for name, arr in net.weight_items():
            grads[name] += (lam / B) * arr
            reg += float(np.sum(arr * arr))
        P_L2 = P + 0.5 * lam * reg / B
    return grads, P, P_L2


class FnnController:
    """Stateless feedforward controller; no fault-tolerance properties."""

    def __init__(self, net, i_max=5.0):
        self.net = net
        self.i_max = float(i_max)

    def reset(self):
        pass

    def act(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (6,) or not np.all(np.isfinite(y)):
            raise NumericError("controller received a bad measurement vector")
        pred, _ = fnn_forward(self.net, y[None])
        if not np.all(np.isfinite(pred)):
            raise NumericError("non-finite controller output")
        return np.clip(pred[0], -self.i_max, self.i_max)


class BaselineController:
    """Full-state LQR wrapped in the common controller interface."""

    def __init__(self, gain):
        self.gain = gain

    def reset(self):
        pass

    def act(self, y):
        u = -self.gain.K @ np.asarray(y, dtype=float)
        return np.clip(u, -self.gain.i_max, self.gain.i_max)


def _fnn_pairs(trajectories):
    ys = np.concatenate([t.measurements for t in trajectories])
    us = np.concatenate([t.inputs for t in trajectories])
    return ys, us


def train_fnn(ds, cfg, i_max=5.0, init_seed=None):
    """Supervised regression of (y -> u) pairs on fault-free data.

    ds must be split and fault-free (use dataset.fault_free_subset on an
    augmented dataset). Returns (FnnController, learning curve).
    """
    if any(t.fault is not None for t in ds.trajectories):
        raise InvalidInputError("train_fnn expects a fault-free dataset")
    if ds.split_assignment is None or ds.normalizer_stats is None:
        raise InvalidInputError("train_fnn requires a split dataset with normalizer stats")
    net = init_fnn(cfg.seed if init_seed is None else init_seed)
    net.norm_mean = np.asarray(ds.normalizer_stats.mean, dtype=float).copy()
    net.norm_std = np.asarray(ds.normalizer_stats.std, dtype=float).copy()
    X, Y = _fnn_pairs(ds.by_split(dsm.SPLIT_TRAIN))
    Xv, Yv = _fnn_pairs(ds.by_split(dsm.SPLIT_VAL))

    def backward_fn(xb, yb):
        return fnn_backward(net, xb, yb, lam=cfg.weight_decay)

    def on_epoch(_):
        pred, _ = fnn_forward(net, Xv)
        P = nn.loss(pred, Yv)
        return nn.regularized_loss(P, net, cfg.weight_decay, Xv.shape[0])

    curve = nn.sgd_loop(net, backward_fn, {"X": X, "Y": Y}, cfg, on_epoch=on_epoch)
    return FnnController(net, i_max=i_max), curve
