"""From-scratch recurrent network: six per-sensor LSTM blocks + FC head.

Each sensor channel feeds its own single-layer LSTM; the final hidden
states of all blocks are concatenated and passed through two ReLU layers
and a linear output that produces the two motor currents. Training is
plain RMSprop on the L2-regularized quadratic imitation loss, with exact
gradients from backpropagation through time.

Implementation notes (all mathematically inert):
  * gate blocks are ordered [input i, forget f, cell g, output o];
  * sigmoid is evaluated as 0.5*(1 + tanh(x/2)) so one SIMD tanh covers
    all four gates, with the 1/2 pre-scaling folded into a copy of the
    weights;
  * per step, [h, x, 1] is multiplied with the stacked [U'; W'; b] matrix
    so recurrence, input and bias need a single GEMM;
  * the elementwise cell update/backward chains are fused numba kernels;
  * weight gradients are accumulated in one stacked GEMM per block.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (InvalidConfigError, InvalidInputError, ModelFormatError,
                     NumericError)
from .rngs import substream

N_BLOCKS = 6
HIDDEN = 32
WINDOW = 10
FC_SIZES = (64, 64)
N_OUTPUTS = 2


# ---------------------------------------------------------------------------
# parameters

@dataclass
class LstmParams:
    """One LSTM block. Gate blocks ordered [i, f, g, o] along the 4H axis."""

    input_weights: np.ndarray      # (4H, D), D = 1
    recurrent_weights: np.ndarray  # (4H, H)
    bias: np.ndarray               # (4H,)

    @property
    def hidden(self):
        return self.recurrent_weights.shape[1]


@dataclass
class ModelParams:
    """All weights of the network plus the input normalization statistics."""

    blocks: list                   # N_BLOCKS LstmParams
    fc1_w: np.ndarray              # (64, n_blocks*H)
    fc1_b: np.ndarray
    fc2_w: np.ndarray              # (64, 64)
    fc2_b: np.ndarray
    out_w: np.ndarray              # (2, 64)
    out_b: np.ndarray
    norm_mean: np.ndarray          # (n_blocks,)
    norm_std: np.ndarray           # (n_blocks,)
    window: int = WINDOW

    @property
    def hidden(self):
        return self.blocks[0].hidden

    @property
    def n_blocks(self):
        return len(self.blocks)

    def param_items(self):
        """Ordered (name, array) pairs over every trainable parameter."""
        items = []
        for j, blk in enumerate(self.blocks):
            items.append((f"lstm{j}.input_weights", blk.input_weights))
            items.append((f"lstm{j}.recurrent_weights", blk.recurrent_weights))
            items.append((f"lstm{j}.bias", blk.bias))
        items += [("fc1.w", self.fc1_w), ("fc1.b", self.fc1_b),
                  ("fc2.w", self.fc2_w), ("fc2.b", self.fc2_b),
                  ("out.w", self.out_w), ("out.b", self.out_b)]
        return items

    def weight_items(self):
        """Parameters subject to L2 regularization (biases excluded)."""
        return [(n, a) for n, a in self.param_items() if not n.endswith(("bias", ".b"))]

    def param_count(self):
        return sum(a.size for _, a in self.param_items())

    def copy(self):
        return ModelParams(
            blocks=[LstmParams(b.input_weights.copy(), b.recurrent_weights.copy(),
                               b.bias.copy()) for b in self.blocks],
            fc1_w=self.fc1_w.copy(), fc1_b=self.fc1_b.copy(),
            fc2_w=self.fc2_w.copy(), fc2_b=self.fc2_b.copy(),
            out_w=self.out_w.copy(), out_b=self.out_b.copy(),
            norm_mean=self.norm_mean.copy(), norm_std=self.norm_std.copy(),
            window=self.window)


def init_model(seed, hidden=HIDDEN, window=WINDOW, n_blocks=N_BLOCKS,
               fc_sizes=FC_SIZES):
    """Seeded uniform +-1/sqrt(fan_in) initialization, zero biases."""
    rng = substream(seed, "init")

    def uniform(shape, fan_in):
        lim = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-lim, lim, size=shape)

    blocks = []
    for _ in range(n_blocks):
        blocks.append(LstmParams(
            input_weights=uniform((4 * hidden, 1), 1),
            recurrent_weights=uniform((4 * hidden, hidden), hidden),
            bias=np.zeros(4 * hidden)))
    f1, f2 = fc_sizes
    return ModelParams(
        blocks=blocks,
        fc1_w=uniform((f1, n_blocks * hidden), n_blocks * hidden),
        fc1_b=np.zeros(f1),
        fc2_w=uniform((f2, f1), f1), fc2_b=np.zeros(f2),
        out_w=uniform((N_OUTPUTS, f2), f2), out_b=np.zeros(N_OUTPUTS),
        norm_mean=np.zeros(n_blocks), norm_std=np.ones(n_blocks),
        window=window)


def set_normalizer(mp, stats):
    """Install dataset normalization statistics into the model."""
    mp.norm_mean = np.asarray(stats.mean, dtype=float).copy()
    mp.norm_std = np.asarray(stats.std, dtype=float).copy()
    if np.any(mp.norm_std <= 0):
        raise InvalidConfigError("normalizer std entries must be positive")


# ---------------------------------------------------------------------------
# fused cell kernels

@njit(cache=True)
def _cell_forward(gates, c_prev, c_out):
    """Convert tanh-activated sigmoid gates in place and advance the cell.

    On entry gates[:, :2H] and gates[:, 3H:] hold tanh(z/2) of the i, f, o
    pre-activations and gates[:, 2H:3H] holds tanh(z) of g; on exit all
    four are the activated gate values and c_out = f*c_prev + i*g.
    """
    B, H4 = gates.shape
    H = H4 // 4
    for r in range(B):
        for k in range(H):
            i = 0.5 * (gates[r, k] + 1.0)
            f = 0.5 * (gates[r, H + k] + 1.0)
            o = 0.5 * (gates[r, 3 * H + k] + 1.0)
            gates[r, k] = i
            gates[r, H + k] = f
            gates[r, 3 * H + k] = o
            c_out[r, k] = f * c_prev[r, k] + i * gates[r, 2 * H + k]


@njit(cache=True)
def _cell_backward(gates, tc, c_prev, dh, dc, dz):
    """One BPTT step: gate pre-activation gradients and the cell carry.

    dh/dc are the gradients flowing into h_t and c_t; on exit dz holds the
    pre-activation gradients and dc carries the gradient for c_{t-1}.
    """
    B, H4 = gates.shape
    H = H4 // 4
    for r in range(B):
        for k in range(H):
            i = gates[r, k]
            f = gates[r, H + k]
            g = gates[r, 2 * H + k]
            o = gates[r, 3 * H + k]
            t = tc[r, k]
            dcv = dc[r, k] + dh[r, k] * o * (1.0 - t * t)
            dz[r, k] = dcv * g * i * (1.0 - i)
            dz[r, H + k] = dcv * c_prev[r, k] * f * (1.0 - f)
            dz[r, 2 * H + k] = dcv * i * (1.0 - g * g)
            dz[r, 3 * H + k] = dh[r, k] * t * o * (1.0 - o)
            dc[r, k] = dcv * f


# ---------------------------------------------------------------------------
# workspace

class _Workspace:
    """Reusable buffers and GEMM-ready repack of the weights.

    Allocating multi-megabyte caches per batch dominates the runtime on
    this problem size, so training reuses one workspace per batch shape.
    """

    def __init__(self, mp, batch):
        H, m, nb = mp.hidden, mp.window, mp.n_blocks
        f1 = mp.fc1_w.shape[0]
        f2 = mp.fc2_w.shape[0]
        self.batch = batch
        self.gates = np.empty((nb, m, batch, 4 * H))
        self.cells = np.empty((nb, m, batch, H))
        self.tanh_c = np.empty((nb, m, batch, H))
        self.h_aug = np.empty((nb, m, batch, H + 2))
        self.z = np.empty((batch, 4 * H))
        self.dz = np.empty((m, batch, 4 * H))
        self.feats = np.empty((batch, nb * H))
        self.zeros = np.zeros((batch, H))
        self.dh = np.empty((batch, H))
        self.dc = np.empty((batch, H))
        self.x_cols = np.empty((nb, m, batch))
        # packed weights: rows [U'; W'; b]; *_s has the sigmoid pre-scaling
        self.w_aug = np.empty((nb, H + 2, 4 * H))
        self.w_aug_s = np.empty((nb, H + 2, 4 * H))
        self.u_canon = np.empty((nb, 4 * H, H))
        self.fc1_wT = np.empty((mp.fc1_w.shape[1], f1))
        self.fc2_wT = np.empty((f1, f2))
        self.out_wT = np.empty((f2, N_OUTPUTS))
        self.d_waug = np.empty((nb, H + 2, 4 * H))
        self._sig_scale = np.ones(4 * H)
        self._sig_scale[:2 * H] = 0.5
        self._sig_scale[3 * H:] = 0.5

    def pack(self, mp):
        H = mp.hidden
        for j, blk in enumerate(mp.blocks):
            wa = self.w_aug[j]
            wa[:H] = blk.recurrent_weights.T
            wa[H] = blk.input_weights[:, 0]
            wa[H + 1] = blk.bias
            np.multiply(wa, self._sig_scale, out=self.w_aug_s[j])
            self.u_canon[j] = blk.recurrent_weights
        self.fc1_wT[:] = mp.fc1_w.T
        self.fc2_wT[:] = mp.fc2_w.T
        self.out_wT[:] = mp.out_w.T


def _forward_into(mp, X, ws):
    """Batch forward pass through blocks and head, filling ws caches.

    Returns (pred, head_cache). X is (B, m, n_blocks), already windowed but
    not yet normalized.
    """
    B = X.shape[0]
    H, m, nb = mp.hidden, mp.window, mp.n_blocks
    if X.shape[1] != m or X.shape[2] != nb:
        raise InvalidInputError(f"window batch must be (B, {m}, {nb}), got {X.shape}")
    np.copyto(ws.x_cols, X.transpose(2, 1, 0))
    ws.x_cols -= mp.norm_mean[:, None, None]
    ws.x_cols /= mp.norm_std[:, None, None]
    ws.pack(mp)
    z = ws.z
    for j in range(nb):
        gates, cells, tanh_c, h_aug = (ws.gates[j], ws.cells[j],
                                       ws.tanh_c[j], ws.h_aug[j])
        h = ws.zeros
        c_prev = ws.zeros
        for t in range(m):
            ha = h_aug[t]
            ha[:, :H] = h
            ha[:, H] = ws.x_cols[j, t]
            ha[:, H + 1] = 1.0
            np.matmul(ha, ws.w_aug_s[j], out=z)
            np.tanh(z, out=gates[t])
            _cell_forward(gates[t], c_prev, cells[t])
            np.tanh(cells[t], out=tanh_c[t])
            h = gates[t][:, 3 * H:] * tanh_c[t]
            c_prev = cells[t]
        ws.feats[:, j * H:(j + 1) * H] = h
    a1 = ws.feats @ ws.fc1_wT + mp.fc1_b
    r1 = np.maximum(a1, 0.0)
    a2 = r1 @ ws.fc2_wT + mp.fc2_b
    r2 = np.maximum(a2, 0.0)
    pred = r2 @ ws.out_wT + mp.out_b
    return pred, (a1, r1, a2, r2)


def forward_batch(mp, X, ws=None):
    """Network output for a batch of measurement windows (B, m, 6)."""
    X = np.asarray(X, dtype=float)
    if ws is None or ws.batch != X.shape[0]:
        ws = _Workspace(mp, X.shape[0])
    pred, _ = _forward_into(mp, X, ws)
    return pred


def model_forward(mp, window, return_features=False):
    """Output currents for one complete measurement window (m, 6).

    Raises NumericError naming the first non-finite stage. When
    return_features is set, also returns the concatenated final hidden
    states of the six blocks (the feature vector seen by the head).
    """
    window = np.asarray(window, dtype=float)
    if window.shape != (mp.window, mp.n_blocks):
        raise InvalidInputError(
            f"window must be ({mp.window}, {mp.n_blocks}), got {window.shape}")
    ws = _Workspace(mp, 1)
    pred, _ = _forward_into(mp, window[None], ws)
    if not np.all(np.isfinite(ws.feats)):
        raise NumericError("non-finite activation in LSTM blocks")
    if not np.all(np.isfinite(pred)):
        raise NumericError("non-finite activation in FC head")
    if return_features:
        return pred[0], ws.feats[0].copy()
    return pred[0]


def loss(preds, targets):
    """Imitation loss P = 1/(2n) sum_i |target_i - pred_i|^2."""
    preds = np.asarray(preds, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if preds.shape != targets.shape or preds.ndim != 2 or preds.shape[0] == 0:
        raise InvalidInputError("loss needs equal, non-empty (n, 2) arrays")
    v = targets - preds
    return float(0.5 * np.sum(v * v) / preds.shape[0])


def regularized_loss(P, mp, lam, n):
    """P_L2 = P + lambda/(2n) * sum of squared weights (biases excluded)."""
    if lam < 0:
        raise InvalidInputError("lambda must be >= 0")
    reg = sum(float(np.sum(a * a)) for _, a in mp.weight_items())
    return float(P + 0.5 * lam * reg / n)


def backward(mp, X, Y, lam=0.0, ws=None):
    """Exact gradients of P_L2 for a batch of windows.

    Args:
        X: (B, m, 6) measurement windows; Y: (B, 2) baseline targets.
        lam: L2 coefficient (applied to weights only).

    Returns:
        (grads, P, P_L2) where grads maps parameter names (as in
        ModelParams.param_items) to arrays of matching shape.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape[0] == 0:
        raise InvalidInputError("backward needs a non-empty batch")
    B = X.shape[0]
    H, m, nb = mp.hidden, mp.window, mp.n_blocks
    if ws is None or ws.batch != B:
        ws = _Workspace(mp, B)
    pred, (a1, r1, a2, r2) = _forward_into(mp, X, ws)
    v = Y - pred
    P = float(0.5 * np.sum(v * v) / B)

    grads = {}
    dpred = -v / B
    grads["out.w"] = dpred.T @ r2
    grads["out.b"] = dpred.sum(axis=0)
    da2 = dpred @ mp.out_w
    da2 *= a2 > 0
    grads["fc2.w"] = da2.T @ r1
    grads["fc2.b"] = da2.sum(axis=0)
    da1 = da2 @ mp.fc2_w
    da1 *= a1 > 0
    grads["fc1.w"] = da1.T @ ws.feats
    grads["fc1.b"] = da1.sum(axis=0)
    dfeat = da1 @ mp.fc1_w

    for j in range(nb):
        gates, cells, tanh_c, h_aug = (ws.gates[j], ws.cells[j],
                                       ws.tanh_c[j], ws.h_aug[j])
        dh = ws.dh
        dh[:] = dfeat[:, j * H:(j + 1) * H]
        dc = ws.dc
        dc[:] = 0.0
        for t in range(m - 1, -1, -1):
            c_prev = cells[t - 1] if t > 0 else ws.zeros
            _cell_backward(gates[t], tanh_c[t], c_prev, dh, dc, ws.dz[t])
            if t > 0:
                np.matmul(ws.dz[t], ws.u_canon[j], out=dh)
        np.matmul(h_aug.reshape(m * B, H + 2).T, ws.dz.reshape(m * B, 4 * H),
                  out=ws.d_waug[j])
        grads[f"lstm{j}.recurrent_weights"] = ws.d_waug[j][:H].T.copy()
        grads[f"lstm{j}.input_weights"] = ws.d_waug[j][H].copy()[:, None]
        grads[f"lstm{j}.bias"] = ws.d_waug[j][H + 1].copy()

    P_L2 = P
    if lam > 0:
        reg = 0.0
        scale = lam / B
        for name, arr in mp.weight_items():
            grads[name] += scale * arr
            reg += float(np.sum(arr * arr))
        P_L2 = P + 0.5 * lam * reg / B

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")
    return grads, P, P_L2


# ---------------------------------------------------------------------------
# optimizer and training loop

@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters (paper schedule by default)."""

    epochs: int = 200
    batch_size: int = 1024
    lr: float = 1e-3
    lr_after_drop: float = 5e-4
    lr_drop_epoch: int = 100
    weight_decay: float = 1e-3        # L2 coefficient lambda
    rms_decay: float = 0.99
    rms_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size < 1:
            raise InvalidConfigError("epochs must be >= 0 and batch_size >= 1")
        if min(self.lr, self.lr_after_drop, self.rms_eps) <= 0:
            raise InvalidConfigError("learning rates and eps must be positive")
        if not 0 <= self.rms_decay < 1 or self.weight_decay < 0:
            raise InvalidConfigError("bad rms_decay or weight_decay")

    def lr_at(self, epoch):
        return self.lr if epoch < self.lr_drop_epoch else self.lr_after_drop


def rmsprop_init(params_like):
    """Zeroed mean-square accumulators shaped like the parameters."""
    return {name: np.zeros_like(a) for name, a in params_like.param_items()}


def rmsprop_step(state, params_like, grads, lr, decay=0.99, eps=1e-8):
    """In-place RMSprop update: s <- d*s + (1-d)*g^2; V <- V - lr*g/(sqrt(s)+eps)."""
    for name, arr in params_like.param_items():
        g = grads[name]
        s = state[name]
        s *= decay
        s += (1.0 - decay) * g * g
        arr -= lr * g / (np.sqrt(s) + eps)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


def evaluate_loss(mp, X, Y, lam, chunk=4096):
    """P_L2 over a full array pair, treating it as a single batch."""
    if X.shape[0] == 0:
        raise InvalidInputError("empty evaluation set")
    total = 0.0
    ws = None
    for lo in range(0, X.shape[0], chunk):
        xb = X[lo:lo + chunk]
        if ws is None or ws.batch != xb.shape[0]:
            ws = _Workspace(mp, xb.shape[0])
        pred, _ = _forward_into(mp, xb, ws)
        v = Y[lo:lo + chunk] - pred
        total += 0.5 * float(np.sum(v * v))
    P = total / X.shape[0]
    return regularized_loss(P, mp, lam, X.shape[0])


def sgd_loop(params_like, backward_fn, data, cfg, on_epoch=None):
    """Generic seeded training loop shared by the recurrent and FNN models.

    Args:
        params_like: object with param_items(), updated in place.
        backward_fn: (X_batch, Y_batch, workspace_batch_size) -> (grads, P, P_L2).
        data: dict with X, Y (train) and Xv, Yv (validation) arrays.
        cfg: TrainConfig.
        on_epoch: optional callable(epoch) -> val_loss; when None the
            validation loss is not computed and recorded as nan.

    Returns the learning curve as a list of EpochRecord.
    """
    X, Y = data["X"], data["Y"]
    n = X.shape[0]
    if n == 0:
        raise InvalidInputError("training set is empty")
    state = rmsprop_init(params_like)
    curve = []
    for epoch in range(cfg.epochs):
        order = substream(cfg.seed, "train", epoch).permutation(n)
        lr = cfg.lr_at(epoch)
        batch_losses = []
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            grads, _, p_l2 = backward_fn(X[idx], Y[idx])
            if not math.isfinite(p_l2):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}, batch {lo // cfg.batch_size}")
            rmsprop_step(state, params_like, grads, lr,
                         decay=cfg.rms_decay, eps=cfg.rms_eps)
            batch_losses.append(p_l2)
        val = on_epoch(epoch) if on_epoch is not None else float("nan")
        curve.append(EpochRecord(epoch=epoch + 1,
                                 train_loss=float(np.mean(batch_losses)),
                                 val_loss=val))
    return curve


def train(mp, ds, cfg):
    """Train the recurrent controller on a split dataset.

    The model's normalizer is set from the dataset statistics. Returns
    (trained params, learning curve); mp itself is not modified.
    """
    from . import dataset as dsm
    if ds.split_assignment is None or ds.normalizer_stats is None:
        raise InvalidInputError("train requires a split dataset with normalizer stats")
    model = mp.copy()
    set_normalizer(model, ds.normalizer_stats)
    X, Y = dsm.stack_windows(ds.by_split(dsm.SPLIT_TRAIN), m=model.window)
    Xv, Yv = dsm.stack_windows(ds.by_split(dsm.SPLIT_VAL), m=model.window)

    ws_cache = {}

    def backward_fn(xb, yb):
        b = xb.shape[0]
        if b not in ws_cache:
            ws_cache[b] = _Workspace(model, b)
        return backward(model, xb, yb, lam=cfg.weight_decay, ws=ws_cache[b])

    def on_epoch(_):
        return evaluate_loss(model, Xv, Yv, cfg.weight_decay)

    curve = sgd_loop(model, backward_fn, {"X": X, "Y": Y}, cfg, on_epoch=on_epoch)
    return model, curve


# ---------------------------------------------------------------------------
# persistence

def save_model(mp, path):
    """JSON model file with full float fidelity and architecture metadata."""
    doc = {
        "arch": {
            "H": mp.hidden,
            "m": mp.window,
            "n_blocks": mp.n_blocks,
            "fc_sizes": [mp.fc1_w.shape[0], mp.fc2_w.shape[0]],
        },
        "normalizer": {"mean": mp.norm_mean.tolist(), "std": mp.norm_std.tolist()},
        "param_count": mp.param_count(),
        "weights": {name: arr.tolist() for name, arr in mp.param_items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _expected_shapes(H, m, n_blocks, fc_sizes):
    f1, f2 = fc_sizes
    shapes = {}
    for j in range(n_blocks):
        shapes[f"lstm{j}.input_weights"] = (4 * H, 1)
        shapes[f"lstm{j}.recurrent_weights"] = (4 * H, H)
        shapes[f"lstm{j}.bias"] = (4 * H,)
    shapes.update({"fc1.w": (f1, n_blocks * H), "fc1.b": (f1,),
                   "fc2.w": (f2, f1), "fc2.b": (f2,),
                   "out.w": (N_OUTPUTS, f2), "out.b": (N_OUTPUTS,)})
    return shapes


def load_model(path):
    """Load and validate a model file written by save_model."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        arch = doc["arch"]
        H, m = int(arch["H"]), int(arch["m"])
        n_blocks = int(arch["n_blocks"])
        fc_sizes = tuple(int(v) for v in arch["fc_sizes"])
        weights = doc["weights"]
        norm = doc["normalizer"]
    except KeyError as exc:
        raise ModelFormatError(f"missing field {exc}")
    shapes = _expected_shapes(H, m, n_blocks, fc_sizes)
    arrays = {}
    for name, shape in shapes.items():
        if name not in weights:
            raise ModelFormatError(f"missing weight array {name!r}")
        arr = np.asarray(weights[name], dtype=float)
        if arr.shape != shape:
            raise ModelFormatError(
                f"{name}: expected shape {shape}, got {arr.shape}")
        arrays[name] = arr
    mean = np.asarray(norm.get("mean"), dtype=float)
    std = np.asarray(norm.get("std"), dtype=float)
    if mean.shape != (n_blocks,) or std.shape != (n_blocks,):
        raise ModelFormatError("normalizer arrays must have one entry per block")
    if np.any(std <= 0):
        raise ModelFormatError("normalizer std entries must be positive")
    blocks = [LstmParams(arrays[f"lstm{j}.input_weights"],
                         arrays[f"lstm{j}.recurrent_weights"],
                         arrays[f"lstm{j}.bias"]) for j in range(n_blocks)]
    mp = ModelParams(blocks=blocks, fc1_w=arrays["fc1.w"], fc1_b=arrays["fc1.b"],
                     fc2_w=arrays["fc2.w"], fc2_b=arrays["fc2.b"],
                     out_w=arrays["out.w"], out_b=arrays["out.b"],
                     norm_mean=mean, norm_std=std, window=m)
    declared = doc.get("param_count")
    if declared is not None and int(declared) != mp.param_count():
        raise ModelFormatError(
            f"param_count mismatch: file says {declared}, arrays give {mp.param_count()}")
    return mp
