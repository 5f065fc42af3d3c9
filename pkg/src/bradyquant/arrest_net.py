"""LSTM-FCN arrest classifier in plain numpy.

Two branches read the same masked ``(channels, length)`` sequence:

* an LSTM over the time axis whose hidden state at the last valid step goes
  through dropout (training only);
* three Conv1d -> BatchNorm -> ReLU blocks followed by global average pooling
  over the valid positions.

The two feature vectors are concatenated and mapped by a dense softmax layer
to the four arrest categories.  Padding positions (mask False) are zeroed on
entry and after every conv block, skipped by the LSTM, and excluded from the
batch-norm statistics and the pooling, so their contents never matter.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import DegenerateDataset, InvalidConfig, ModelFileError, ShapeMismatch

FORMAT_VERSION = 1
MAGIC = b"BQLSTMFCN"
BN_EPS = 1e-5
BN_MOMENTUM = 0.9
INPUT_MODES = ("cycles", "resampled_signal")


@dataclass(frozen=True)
class NetConfig:
    lstm_hidden: int = 8
    conv_channels: tuple = (32, 64, 32)
    conv_kernels: tuple = (8, 5, 3)
    dropout_rate: float = 0.3
    n_classes: int = 4
    seed: int = 0
    input_mode: str = "cycles"
    length: int = 10
    in_channels: int = 2

    def __post_init__(self):
        object.__setattr__(self, "conv_channels", tuple(int(c) for c in self.conv_channels))
        object.__setattr__(self, "conv_kernels", tuple(int(k) for k in self.conv_kernels))

    @classmethod
    def for_mode(cls, input_mode: str = "cycles", **kw) -> "NetConfig":
        if input_mode == "resampled_signal":
            kw.setdefault("length", 64)
            kw.setdefault("in_channels", 1)
        return cls(input_mode=input_mode, **kw)

    def validate(self):
        ints = [self.lstm_hidden, self.n_classes, self.length, self.in_channels]
        ints += list(self.conv_channels) + list(self.conv_kernels)
        if any(v <= 0 for v in ints):
            raise InvalidConfig("all sizes must be positive")
        if len(self.conv_channels) != len(self.conv_kernels):
            raise InvalidConfig("conv_channels and conv_kernels differ in length")
        if max(self.conv_kernels) > self.length:
            raise InvalidConfig(
                f"kernel {max(self.conv_kernels)} longer than sequence length {self.length}"
            )
        if not 0.0 <= self.dropout_rate < 1.0:
            raise InvalidConfig("dropout_rate must be in [0, 1)")
        if self.input_mode not in INPUT_MODES:
            raise InvalidConfig(f"input_mode must be one of {INPUT_MODES}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 150
    batch_size: int = 32
    learning_rate: float = 0.005
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    # early stopping on a held-out slice of the training data; off when 0
    val_fraction: float = 0.0
    patience: int = 10
    # "constant" or "cosine" (learning rate annealed to zero over the epochs)
    lr_schedule: str = "constant"

    def validate(self):
        if self.epochs < 0 or self.batch_size <= 0 or self.learning_rate < 0:
            raise InvalidConfig("epochs >= 0, batch_size > 0, learning_rate >= 0 required")
        if not 0.0 <= self.val_fraction < 1.0 or self.patience < 1:
            raise InvalidConfig("val_fraction must be in [0, 1) and patience >= 1")
        if self.lr_schedule not in ("constant", "cosine"):
            raise InvalidConfig("lr_schedule must be 'constant' or 'cosine'")

    def rate(self, epoch: int) -> float:
        if self.lr_schedule == "cosine" and self.epochs > 0:
            return 0.5 * self.learning_rate * (1 + math.cos(math.pi * epoch / self.epochs))
        return self.learning_rate


@dataclass
class NetParams:
    config: NetConfig
    weights: dict
    buffers: dict
    version: int = FORMAT_VERSION

    def copy(self) -> "NetParams":
        return NetParams(
            self.config,
            {k: v.copy() for k, v in self.weights.items()},
            {k: v.copy() for k, v in self.buffers.items()},
            self.version,
        )


@dataclass(eq=False)
class SeriesSample:
    channels: np.ndarray  # (C, L)
    mask: np.ndarray  # (L,) bool, prefix-true
    label: Optional[int] = None


# -- sample construction -----------------------------------------------------


def _znorm(v: np.ndarray) -> np.ndarray:
    sd = v.std()
    if sd < 1e-12:
        return np.zeros_like(v)
    return (v - v.mean()) / sd


def make_sample(cycles, length: int = 10, label: Optional[int] = None) -> SeriesSample:
    """Two-channel sample from a CycleSeries.

    Position ``j`` pairs the amplitude of peak ``j+1`` with the interval from
    peak ``j`` to peak ``j+1``; each channel is z-normalized over the valid
    positions and padding is zero.
    """
    amps = np.asarray(cycles.amplitudes, dtype=float)[1:]
    ints = np.asarray(cycles.intervals, dtype=float)
    n = min(len(ints), length)
    if n < 1:
        raise ShapeMismatch("need at least 2 cycles to build a sample")
    x = np.zeros((2, length))
    x[0, :n] = _znorm(amps[:n])
    x[1, :n] = _znorm(ints[:n])
    mask = np.arange(length) < n
    return SeriesSample(x, mask, label)


def make_signal_sample(values, length: int = 64, label: Optional[int] = None) -> SeriesSample:
    """One-channel sample: the smoothed signal linearly resampled to ``length``."""
    v = np.asarray(values, dtype=float)
    grid = np.linspace(0, len(v) - 1, length)
    x = _znorm(np.interp(grid, np.arange(len(v)), v))[None, :]
    return SeriesSample(x, np.ones(length, dtype=bool), label)


def stack_samples(samples: Sequence[SeriesSample]):
    X = np.stack([s.channels for s in samples]).astype(float)
    M = np.stack([s.mask for s in samples]).astype(bool)
    return X, M


def samples_to_array(samples: Sequence[SeriesSample]) -> np.ndarray:
    """Pack samples into an ``(n, C, L)`` array with NaN at padding."""
    X, M = stack_samples(samples)
    return np.where(M[:, None, :], X, np.nan)


def array_to_batch(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3:
        raise ShapeMismatch(f"expected (n, channels, length) array, got shape {X.shape}")
    M = ~np.isnan(X).any(axis=1)
    if not np.isfinite(np.where(M[:, None, :], X, 0.0)).all():
        raise ShapeMismatch("non-finite values at valid positions")
    if (M[:, 1:] & ~M[:, :-1]).any():
        raise ShapeMismatch("validity mask must be prefix-true")
    return np.nan_to_num(X, nan=0.0), M


# -- parameters --------------------------------------------------------------


def param_shapes(cfg: NetConfig) -> dict:
    H, C = cfg.lstm_hidden, cfg.in_channels
    shapes = {"lstm_Wx": (C, 4 * H), "lstm_Wh": (H, 4 * H), "lstm_b": (4 * H,)}
    prev = C
    for k, (out, ker) in enumerate(zip(cfg.conv_channels, cfg.conv_kernels), 1):
        shapes[f"conv{k}_W"] = (out, prev, ker)
        shapes[f"bn{k}_gamma"] = (out,)
        shapes[f"bn{k}_beta"] = (out,)
        prev = out
    shapes["dense_W"] = (H + prev, cfg.n_classes)
    shapes["dense_b"] = (cfg.n_classes,)
    return shapes


def init_params(cfg: NetConfig) -> NetParams:
    """Uniform(+-1/sqrt(fan_in)) weights, zero biases, identity batch norm."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    weights = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith("_gamma"):
            weights[name] = np.ones(shape)
        elif name.endswith(("_beta", "_b")):
            weights[name] = np.zeros(shape)
        else:
            fan_in = {"lstm_Wx": cfg.lstm_hidden, "lstm_Wh": cfg.lstm_hidden}.get(
                name, int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
            )
            bound = 1.0 / np.sqrt(fan_in)
            weights[name] = rng.uniform(-bound, bound, size=shape)
    buffers = {}
    for k, out in enumerate(cfg.conv_channels, 1):
        buffers[f"bn{k}_mean"] = np.zeros(out)
        buffers[f"bn{k}_var"] = np.ones(out)
    return NetParams(cfg, weights, buffers)


# -- layers ------------------------------------------------------------------


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _conv_forward(X, W):
    K = W.shape[2]
    left = (K - 1) // 2
    Xp = np.pad(X, ((0, 0), (0, 0), (left, K - 1 - left)))
    cols = np.lib.stride_tricks.sliding_window_view(Xp, K, axis=2)  # (N, I, L, K)
    return np.einsum("nilk,oik->nol", cols, W, optimize=True), cols


def _conv_backward(dY, cols, W, need_dx=True):
    dW = np.einsum("nol,nilk->oik", dY, cols, optimize=True)
    if not need_dx:
        return None, dW
    N, _, L = dY.shape
    K = W.shape[2]
    dcols = np.einsum("nol,oik->nilk", dY, W, optimize=True)
    dXp = np.zeros((N, W.shape[1], L + K - 1))
    for k in range(K):
        dXp[:, :, k : k + L] += dcols[:, :, :, k]
    left = (K - 1) // 2
    return dXp[:, :, left : left + L], dW


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _forward(params: NetParams, X, M, train: bool, drop=None):
    cfg, W = params.config, params.weights
    N, C, L = X.shape
    if C != cfg.in_channels or L != cfg.length:
        raise ShapeMismatch(
            f"input is ({C}, {L}), network expects ({cfg.in_channels}, {cfg.length})"
        )
    if M.shape != (N, L) or (M[:, 1:] & ~M[:, :-1]).any():
        raise ShapeMismatch("validity mask must be (n, length) and prefix-true")
    Mf = M.astype(float)
    X = np.where(M[:, None, :], X, 0.0)
    cache = {"X": X, "M": Mf, "train": train}

    # LSTM over valid steps
    H = cfg.lstm_hidden
    h = np.zeros((N, H))
    c = np.zeros((N, H))
    steps = []
    for t in range(L):
        m = Mf[:, t : t + 1]
        z = X[:, :, t] @ W["lstm_Wx"] + h @ W["lstm_Wh"] + W["lstm_b"]
        i = _sigmoid(z[:, :H])
        f = _sigmoid(z[:, H : 2 * H])
        o = _sigmoid(z[:, 2 * H : 3 * H])
        g = np.tanh(z[:, 3 * H :])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        steps.append((h, c, i, f, o, g, tc, m))
        h = m * (o * tc) + (1 - m) * h
        c = m * c_new + (1 - m) * c
    cache["steps"] = steps
    if drop is None:
        drop = np.ones((N, H))
    cache["drop"] = drop
    h_out = h * drop

    # FCN branch
    A = X
    cnt = Mf.sum()
    m3 = Mf[:, None, :]
    blocks = []
    batch_stats = {}
    for k in range(1, len(cfg.conv_channels) + 1):
        Y, cols = _conv_forward(A, W[f"conv{k}_W"])
        if train:
            mu = (Y * m3).sum(axis=(0, 2)) / cnt
            var = (((Y - mu[None, :, None]) ** 2) * m3).sum(axis=(0, 2)) / cnt
            batch_stats[k] = (mu, var * cnt / max(cnt - 1.0, 1.0))
        else:
            mu, var = params.buffers[f"bn{k}_mean"], params.buffers[f"bn{k}_var"]
        std = np.sqrt(var + BN_EPS)
        xhat = (Y - mu[None, :, None]) / std[None, :, None]
        out = W[f"bn{k}_gamma"][None, :, None] * xhat + W[f"bn{k}_beta"][None, :, None]
        A = np.maximum(out, 0.0) * m3
        blocks.append((cols, xhat, std, out))
    cache["blocks"] = blocks
    n_valid = Mf.sum(axis=1, keepdims=True)
    pooled = A.sum(axis=2) / np.maximum(n_valid, 1.0)
    feat = np.concatenate([h_out, pooled], axis=1)
    cache["feat"] = feat
    logits = feat @ W["dense_W"] + W["dense_b"]
    return logits, cache, batch_stats


def _backward(params: NetParams, cache, dlogits) -> dict:
    cfg, W = params.config, params.weights
    H = cfg.lstm_hidden
    grads = {}
    feat = cache["feat"]
    grads["dense_W"] = feat.T @ dlogits
    grads["dense_b"] = dlogits.sum(axis=0)
    dfeat = dlogits @ W["dense_W"].T
    dh = dfeat[:, :H] * cache["drop"]
    dpooled = dfeat[:, H:]

    Mf = cache["M"]
    m3 = Mf[:, None, :]
    n_valid = np.maximum(Mf.sum(axis=1), 1.0)
    dA = dpooled[:, :, None] * m3 / n_valid[:, None, None]
    cnt = Mf.sum()
    nblocks = len(cfg.conv_channels)
    for k in range(nblocks, 0, -1):
        cols, xhat, std, out = cache["blocks"][k - 1]
        dout = dA * (out > 0) * m3
        gamma = W[f"bn{k}_gamma"]
        grads[f"bn{k}_gamma"] = (dout * xhat).sum(axis=(0, 2))
        grads[f"bn{k}_beta"] = dout.sum(axis=(0, 2))
        dxhat = dout * gamma[None, :, None]
        if cache["train"]:
            s1 = (dxhat * m3).sum(axis=(0, 2))[None, :, None]
            s2 = (dxhat * xhat * m3).sum(axis=(0, 2))[None, :, None]
            dY = m3 * (cnt * dxhat - s1 - xhat * s2) / (cnt * std[None, :, None])
        else:
            dY = dxhat / std[None, :, None]
        dX, grads[f"conv{k}_W"] = _conv_backward(dY, cols, W[f"conv{k}_W"], need_dx=k > 1)
        if k > 1:
            dA = dX * m3

    X = cache["X"]
    dWx = np.zeros_like(W["lstm_Wx"])
    dWh = np.zeros_like(W["lstm_Wh"])
    db = np.zeros_like(W["lstm_b"])
    dc = np.zeros_like(dh)
    for t in range(X.shape[2] - 1, -1, -1):
        h_prev, c_prev, i, f, o, g, tc, m = cache["steps"][t]
        dh_new = m * dh
        dc_new = m * dc + dh_new * o * (1 - tc**2)
        dz = np.concatenate(
            [
                dc_new * g * i * (1 - i),
                dc_new * c_prev * f * (1 - f),
                dh_new * tc * o * (1 - o),
                dc_new * i * (1 - g**2),
            ],
            axis=1,
        )
        dWx += X[:, :, t].T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dh = dz @ W["lstm_Wh"].T + (1 - m) * dh
        dc = dc_new * f + (1 - m) * dc
    grads["lstm_Wx"], grads["lstm_Wh"], grads["lstm_b"] = dWx, dWh, db
    return grads


# -- public functional API ---------------------------------------------------


def forward_batch(params: NetParams, X, M, mode: str = "eval", rng=None, drop=None) -> np.ndarray:
    """Class probabilities ``(N, n_classes)``.

    In ``train`` mode batch norm uses batch statistics and dropout is applied
    to the LSTM output, drawn from ``rng`` unless an explicit ``drop`` mask is
    given.
    """
    train = mode == "train"
    if train and drop is None:
        drop = _dropout_mask(params.config, X.shape[0], rng or np.random.default_rng())
    logits, _, _ = _forward(params, np.asarray(X, float), np.asarray(M, bool), train, drop)
    return _softmax(logits)


def forward(params: NetParams, x: SeriesSample, mode: str = "eval", rng=None) -> np.ndarray:
    ch = np.asarray(x.channels, dtype=float)
    if ch.ndim != 2:
        raise ShapeMismatch(f"sample channels must be 2-D, got {ch.shape}")
    return forward_batch(params, ch[None], np.asarray(x.mask, bool)[None], mode, rng)[0]


def _dropout_mask(cfg: NetConfig, n: int, rng) -> np.ndarray:
    keep = 1.0 - cfg.dropout_rate
    return (rng.random((n, cfg.lstm_hidden)) < keep) / keep


def loss_and_grads(params: NetParams, X, M, y, mode: str = "train", drop=None):
    """Mean cross-entropy and its gradient for every trainable tensor."""
    y = np.asarray(y, dtype=int)
    if ((y < 0) | (y >= params.config.n_classes)).any():
        raise ShapeMismatch("labels out of range")
    logits, cache, stats = _forward(params, np.asarray(X, float), np.asarray(M, bool),
                                    mode == "train", drop)
    probs = _softmax(logits)
    n = len(y)
    loss = -float(np.mean(np.log(probs[np.arange(n), y] + 1e-300)))
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    grads = _backward(params, cache, dlogits / n)
    grads["_logits"] = dlogits / n
    return loss, grads, stats


def backward(params: NetParams, x: SeriesSample, label: int, mode: str = "eval") -> dict:
    """Gradient of the cross-entropy of one sample w.r.t. every parameter."""
    ch = np.asarray(x.channels, dtype=float)
    if ch.ndim != 2:
        raise ShapeMismatch(f"sample channels must be 2-D, got {ch.shape}")
    _, grads, _ = loss_and_grads(params, ch[None], np.asarray(x.mask, bool)[None], [label],
                                 mode, drop=np.ones((1, params.config.lstm_hidden)))
    return grads


@dataclass
class TrainResult:
    params: NetParams
    loss_history: list = field(default_factory=list)
    val_history: list = field(default_factory=list)
    best_epoch: Optional[int] = None


def train(data: Sequence[SeriesSample], cfg: TrainConfig = TrainConfig(),
          net: NetConfig = NetConfig()) -> TrainResult:
    """Minibatch Adam on mean cross-entropy; deterministic given both seeds."""
    cfg.validate()
    labels = np.array([s.label for s in data])
    if len(data) == 0 or any(s.label is None for s in data):
        raise DegenerateDataset("every training sample needs a label")
    if len(np.unique(labels)) < 2:
        raise DegenerateDataset("training data holds a single class")
    X, M = stack_samples(data)
    return _train_arrays(X, M, labels.astype(int), cfg, net)


def _holdout(y, frac, rng):
    """Per-class random slice of size round(frac * count), at least one per class."""
    val = []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        k = min(len(idx) - 1, max(1, int(round(frac * len(idx)))))
        val.extend(rng.permutation(idx)[:k].tolist())
    val = np.sort(np.array(val, dtype=int))
    return np.setdiff1d(np.arange(len(y)), val), val


def _train_arrays(X, M, y, cfg: TrainConfig, net: NetConfig) -> TrainResult:
    cfg.validate()
    params = init_params(net)
    rng = np.random.default_rng(cfg.seed)
    fit_idx, val_idx = np.arange(len(y)), np.zeros(0, dtype=int)
    if cfg.val_fraction > 0:
        fit_idx, val_idx = _holdout(y, cfg.val_fraction, rng)
    m = {k: np.zeros_like(v) for k, v in params.weights.items()}
    v = {k: np.zeros_like(w) for k, w in params.weights.items()}
    step = 0
    history, val_history = [], []
    best = (np.inf, None, None)
    n = len(fit_idx)
    for epoch in range(cfg.epochs):
        order = fit_idx[rng.permutation(n)]
        lr = cfg.rate(epoch)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            drop = _dropout_mask(net, len(idx), rng)
            loss, grads, stats = loss_and_grads(params, X[idx], M[idx], y[idx], "train", drop)
            total += loss * len(idx)
            step += 1
            corr1 = 1 - cfg.beta1**step
            corr2 = 1 - cfg.beta2**step
            for k, w in params.weights.items():
                gk = grads[k]
                m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * gk
                v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * gk * gk
                w -= lr * (m[k] / corr1) / (np.sqrt(v[k] / corr2) + cfg.eps)
            for k, (mu, var) in stats.items():
                b = params.buffers
                b[f"bn{k}_mean"] = BN_MOMENTUM * b[f"bn{k}_mean"] + (1 - BN_MOMENTUM) * mu
                b[f"bn{k}_var"] = BN_MOMENTUM * b[f"bn{k}_var"] + (1 - BN_MOMENTUM) * var
        history.append(total / n)
        if len(val_idx):
            vl, _, _ = loss_and_grads(params, X[val_idx], M[val_idx], y[val_idx], "eval")
            val_history.append(vl)
            if vl < best[0]:
                best = (vl, epoch, params.copy())
            elif epoch - best[1] >= cfg.patience:
                break
    if best[2] is not None:
        return TrainResult(best[2], history, val_history, best[1])
    return TrainResult(params, history, val_history)


def predict_arrest(params: NetParams, x: SeriesSample) -> int:
    return int(np.argmax(forward(params, x, "eval")))


# -- model container ---------------------------------------------------------
#
#   MAGIC | u32 header length (LE) | header JSON (utf-8) | tensor bytes
#
# Tensors are little-endian float64 in header order.  The header's "sha256"
# covers the header serialized without that key followed by the tensor bytes.


def _header_and_blob(params: NetParams):
    tensors = [("weights", k, v) for k, v in params.weights.items()]
    tensors += [("buffers", k, v) for k, v in params.buffers.items()]
    entries, chunks = [], []
    for group, name, arr in tensors:
        data = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"group": group, "name": name, "shape": list(arr.shape), "dtype": "<f8"})
        chunks.append(data)
    header = {"version": params.version, "config": asdict(params.config), "tensors": entries}
    return header, b"".join(chunks)


def dumps_params(params: NetParams) -> bytes:
    header, blob = _header_and_blob(params)
    body = json.dumps(header, sort_keys=True).encode()
    header["sha256"] = hashlib.sha256(body + blob).hexdigest()
    raw = json.dumps(header, sort_keys=True).encode()
    return MAGIC + struct.pack("<I", len(raw)) + raw + blob


def loads_params(data: bytes) -> NetParams:
    if not data.startswith(MAGIC):
        raise ModelFileError("not an arrest-net model file")
    off = len(MAGIC)
    (n,) = struct.unpack_from("<I", data, off)
    try:
        header = json.loads(data[off + 4 : off + 4 + n])
    except json.JSONDecodeError:
        raise ModelFileError("corrupt model header") from None
    blob = data[off + 4 + n :]
    if header.get("version") != FORMAT_VERSION:
        raise ModelFileError(f"unsupported model version {header.get('version')}")
    digest = header.pop("sha256", None)
    body = json.dumps(header, sort_keys=True).encode()
    if digest != hashlib.sha256(body + blob).hexdigest():
        raise ModelFileError("checksum mismatch")
    cfg = NetConfig(**header["config"])
    out = {"weights": {}, "buffers": {}}
    pos = 0
    for e in header["tensors"]:
        size = int(np.prod(e["shape"])) * 8
        arr = np.frombuffer(blob[pos : pos + size], dtype="<f8").reshape(e["shape"]).astype(float)
        out[e["group"]][e["name"]] = arr
        pos += size
    return NetParams(cfg, out["weights"], out["buffers"], header["version"])


# -- estimator ---------------------------------------------------------------


class ArrestNetClassifier(ClassifierMixin, BaseEstimator):
    """scikit-learn wrapper around the LSTM-FCN.

    ``X`` is ``(n_samples, channels, length)`` with NaN at padding positions
    (see :func:`samples_to_array`); ``y`` holds arrest categories 0-3.
    """

    def __init__(self, lstm_hidden=8, conv_channels=(32, 64, 32), conv_kernels=(8, 5, 3),
                 dropout_rate=0.3, epochs=150, batch_size=32, learning_rate=0.005,
                 input_mode="cycles", seed=0):
        self.lstm_hidden = lstm_hidden
        self.conv_channels = conv_channels
        self.conv_kernels = conv_kernels
        self.dropout_rate = dropout_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.input_mode = input_mode
        self.seed = seed

    def _configs(self, length, channels):
        net = NetConfig(
            lstm_hidden=self.lstm_hidden,
            conv_channels=tuple(self.conv_channels),
            conv_kernels=tuple(self.conv_kernels),
            dropout_rate=self.dropout_rate,
            seed=self.seed,
            input_mode=self.input_mode,
            length=length,
            in_channels=channels,
        )
        tr = TrainConfig(epochs=self.epochs, batch_size=self.batch_size,
                         learning_rate=self.learning_rate, seed=self.seed)
        return net, tr

    def fit(self, X, y):
        X, M = array_to_batch(X)
        y = np.asarray(y, dtype=int)
        if len(y) != len(X):
            raise ShapeMismatch("X and y differ in length")
        if len(np.unique(y)) < 2:
            raise DegenerateDataset("training data holds a single class")
        net, tr = self._configs(X.shape[2], X.shape[1])
        res = _train_arrays(X, M, y, tr, net)
        self.params_ = res.params
        self.loss_history_ = res.loss_history
        self.classes_ = np.arange(net.n_classes)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "params_")
        X, M = array_to_batch(X)
        return forward_batch(self.params_, X, M, "eval")

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)
