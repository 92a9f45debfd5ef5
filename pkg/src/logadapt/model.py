"""Fixed-window LSTM over event embeddings with a two-class softmax head.

Consecutive events are grouped into non-overlapping windows of at most
``k`` events. Hidden and cell state reset to zero at every window start,
so windows are independent. Each event in a window receives class logits
from a linear head on its hidden state; training uses class-weighted
cross-entropy with exact analytic gradients (backpropagation through
time), verified against finite differences in the test suite.

Parameter blocks pack the four gates row-wise in the order input, forget,
cell candidate, output.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, InvalidWindowSize, ShapeMismatch

N_CLASSES = 2


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


@dataclass
class LstmParams:
    """All trainable parameters; doubles as the gradient container.

    ``gate_x`` (4h, d) maps inputs to the stacked gate pre-activations,
    ``gate_h`` (4h, h) is the recurrent counterpart, ``gate_b`` (4h,) the
    bias. ``head_w`` (2, h) and ``head_b`` (2,) form the classification
    head.
    """

    gate_x: np.ndarray
    gate_h: np.ndarray
    gate_b: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    @property
    def embedding_dim(self) -> int:
        return self.gate_x.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.gate_x.shape[0] // 4

    def blocks(self) -> tuple[np.ndarray, ...]:
        return (self.gate_x, self.gate_h, self.gate_b, self.head_w, self.head_b)

    def copy(self) -> "LstmParams":
        return LstmParams(*(b.copy() for b in self.blocks()))

    def _gate_rows(self, gate: int, matrix: np.ndarray) -> np.ndarray:
        h = self.hidden_dim
        return matrix[gate * h : (gate + 1) * h]

    # Per-gate views (read/write) in case callers need individual gates.
    @property
    def input_gate_x(self) -> np.ndarray:
        return self._gate_rows(0, self.gate_x)

    @property
    def forget_gate_x(self) -> np.ndarray:
        return self._gate_rows(1, self.gate_x)

    @property
    def cell_gate_x(self) -> np.ndarray:
        return self._gate_rows(2, self.gate_x)

    @property
    def output_gate_x(self) -> np.ndarray:
        return self._gate_rows(3, self.gate_x)

    @property
    def forget_gate_bias(self) -> np.ndarray:
        return self._gate_rows(1, self.gate_b.reshape(-1, 1)).reshape(-1)


def init_params(embedding_dim: int, hidden_dim: int, rng: np.random.Generator) -> LstmParams:
    """Random initialization: uniform +-1/sqrt(hidden_dim) weights, zero
    biases except the forget-gate bias, which starts at 1."""
    scale = 1.0 / np.sqrt(hidden_dim)
    h4 = 4 * hidden_dim
    params = LstmParams(
        gate_x=rng.uniform(-scale, scale, (h4, embedding_dim)),
        gate_h=rng.uniform(-scale, scale, (h4, hidden_dim)),
        gate_b=np.zeros(h4),
        head_w=rng.uniform(-scale, scale, (N_CLASSES, hidden_dim)),
        head_b=np.zeros(N_CLASSES),
    )
    params.gate_b[hidden_dim : 2 * hidden_dim] = 1.0
    return params


def zeros_like_params(params: LstmParams) -> LstmParams:
    return LstmParams(*(np.zeros_like(b) for b in params.blocks()))


def add_scaled_(dst: LstmParams, src: LstmParams, scale: float = 1.0) -> None:
    """In-place dst += scale * src over all blocks."""
    for d, s in zip(dst.blocks(), src.blocks()):
        d += scale * s


@dataclass(frozen=True)
class Window:
    """Up to k consecutive events: embeddings (n, d) and boolean labels (n,)."""

    x: np.ndarray
    y: np.ndarray
    start_seq: int = 0

    def __post_init__(self):
        if self.x.ndim != 2 or self.y.ndim != 1 or self.x.shape[0] != self.y.shape[0]:
            raise ShapeMismatch(
                f"window embeddings {self.x.shape} and labels {self.y.shape} are inconsistent"
            )
        if self.x.shape[0] < 1:
            raise ShapeMismatch("window must contain at least one event")

    def __len__(self) -> int:
        return self.x.shape[0]


def make_windows(x: np.ndarray, y: np.ndarray, k: int, start_seq: int = 0) -> list[Window]:
    """Partition events into consecutive, non-overlapping windows of size k.

    The final window may be shorter than k; every event appears in exactly
    one window. Zero events yield an empty list.
    """
    if k < 1:
        raise InvalidWindowSize(f"window size must be >= 1, got {k}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    if x.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"{x.shape[0]} embeddings vs {y.shape[0]} labels")
    return [
        Window(x[i : i + k], y[i : i + k], start_seq + i)
        for i in range(0, x.shape[0], k)
    ]


@dataclass(frozen=True)
class Prediction:
    """Per-event class probabilities, anomalous = class 1."""

    probs: np.ndarray  # (n, 2)

    @property
    def prob_anomalous(self) -> np.ndarray:
        return self.probs[:, 1]

    def thresholded(self, threshold: float) -> np.ndarray:
        return self.probs[:, 1] >= threshold


def _check_input(params: LstmParams, x: np.ndarray) -> None:
    if x.shape[-1] != params.embedding_dim:
        raise ShapeMismatch(
            f"embedding dim {x.shape[-1]} does not match params dim {params.embedding_dim}"
        )


def _forward_batch(params: LstmParams, xb: np.ndarray) -> tuple[np.ndarray, dict]:
    """LSTM forward over a batch of equal-length windows.

    ``xb`` has shape (B, T, d); returns per-event logits (B, T, 2) and the
    activation cache needed for the backward pass. State starts at zero.
    """
    _check_input(params, xb)
    batch, steps, _ = xb.shape
    hid = params.hidden_dim
    pre = xb @ params.gate_x.T + params.gate_b  # (B, T, 4h)
    gates_i = np.empty((batch, steps, hid))
    gates_f = np.empty_like(gates_i)
    gates_g = np.empty_like(gates_i)
    gates_o = np.empty_like(gates_i)
    cells = np.empty_like(gates_i)
    tanh_c = np.empty_like(gates_i)
    hidden = np.empty_like(gates_i)
    h_prev = np.zeros((batch, hid))
    c_prev = np.zeros((batch, hid))
    for t in range(steps):
        act = pre[:, t, :] + h_prev @ params.gate_h.T
        gi = _sigmoid(act[:, :hid])
        gf = _sigmoid(act[:, hid : 2 * hid])
        gg = np.tanh(act[:, 2 * hid : 3 * hid])
        go = _sigmoid(act[:, 3 * hid :])
        c_prev = gf * c_prev + gi * gg
        tc = np.tanh(c_prev)
        h_prev = go * tc
        gates_i[:, t] = gi
        gates_f[:, t] = gf
        gates_g[:, t] = gg
        gates_o[:, t] = go
        cells[:, t] = c_prev
        tanh_c[:, t] = tc
        hidden[:, t] = h_prev
    logits = hidden @ params.head_w.T + params.head_b
    cache = {
        "x": xb,
        "i": gates_i,
        "f": gates_f,
        "g": gates_g,
        "o": gates_o,
        "c": cells,
        "tc": tanh_c,
        "h": hidden,
        "logits": logits,
    }
    return logits, cache


def _backward_batch(params: LstmParams, cache: dict, dlogits: np.ndarray) -> LstmParams:
    """Exact gradients for a batch given the loss gradient at the logits."""
    xb = cache["x"]
    batch, steps, _ = xb.shape
    hid = params.hidden_dim
    grads = zeros_like_params(params)
    hidden = cache["h"]
    grads.head_w += np.einsum("btk,bth->kh", dlogits, hidden)
    grads.head_b += dlogits.sum(axis=(0, 1))
    dh_all = dlogits @ params.head_w  # (B, T, h)
    dh_next = np.zeros((batch, hid))
    dc_next = np.zeros((batch, hid))
    da = np.empty((batch, 4 * hid))
    for t in range(steps - 1, -1, -1):
        gi = cache["i"][:, t]
        gf = cache["f"][:, t]
        gg = cache["g"][:, t]
        go = cache["o"][:, t]
        tc = cache["tc"][:, t]
        c_prev = cache["c"][:, t - 1] if t > 0 else np.zeros((batch, hid))
        h_prev = hidden[:, t - 1] if t > 0 else np.zeros((batch, hid))
        dh = dh_all[:, t] + dh_next
        dc = dc_next + dh * go * (1.0 - tc * tc)
        da[:, :hid] = dc * gg * gi * (1.0 - gi)
        da[:, hid : 2 * hid] = dc * c_prev * gf * (1.0 - gf)
        da[:, 2 * hid : 3 * hid] = dc * gi * (1.0 - gg * gg)
        da[:, 3 * hid :] = dh * tc * go * (1.0 - go)
        grads.gate_x += da.T @ xb[:, t]
        grads.gate_h += da.T @ h_prev
        grads.gate_b += da.sum(axis=0)
        dh_next = da @ params.gate_h
        dc_next = dc * gf
    return grads


def forward(params: LstmParams, window: Window) -> tuple[Prediction, dict]:
    """Run one window; returns per-event predictions and the backward cache."""
    logits, cache = _forward_batch(params, window.x[None, :, :])
    probs = np.exp(_log_softmax(logits[0]))
    return Prediction(probs), cache


def event_weights(labels: np.ndarray, class_weights: tuple[float, float]) -> np.ndarray:
    """Per-event weight vector: class_weights = (normal, anomalous)."""
    w_normal, w_anomalous = class_weights
    return np.where(labels, w_anomalous, w_normal)


def loss(pred: Prediction, labels: np.ndarray, class_weights: tuple[float, float] = (1.0, 1.0)) -> float:
    """Mean over events of weight(label) * negative log p(true class)."""
    labels = np.asarray(labels, dtype=bool)
    if pred.probs.shape[0] != labels.shape[0]:
        raise ShapeMismatch(f"{pred.probs.shape[0]} predictions vs {labels.shape[0]} labels")
    p_true = pred.probs[np.arange(labels.size), labels.astype(int)]
    nll = -np.log(np.maximum(p_true, 1e-300))
    return float(np.mean(event_weights(labels, class_weights) * nll))


def backward(
    params: LstmParams,
    window: Window,
    cache: dict,
    class_weights: tuple[float, float] = (1.0, 1.0),
) -> LstmParams:
    """Analytic gradient of the window-mean weighted loss w.r.t. params."""
    logits = cache["logits"]
    if logits.shape[:2] != (1, len(window)):
        raise ShapeMismatch("cache does not match window")
    probs = np.exp(_log_softmax(logits))
    onehot = np.zeros_like(probs)
    onehot[0, np.arange(len(window)), window.y.astype(int)] = 1.0
    weights = event_weights(window.y, class_weights)
    dlogits = weights[None, :, None] * (probs - onehot) / len(window)
    return _backward_batch(params, cache, dlogits)


def _group_windows(windows: list[Window]) -> list[tuple[list[int], np.ndarray, np.ndarray]]:
    """Group windows by length (first-seen order) for batched passes."""
    order: dict[int, list[int]] = {}
    for idx, window in enumerate(windows):
        order.setdefault(len(window), []).append(idx)
    groups = []
    for length, indices in order.items():
        xb = np.stack([windows[i].x for i in indices])
        yb = np.stack([windows[i].y for i in indices])
        groups.append((indices, xb, yb))
    return groups


def split_loss_grad(
    params: LstmParams,
    windows: list[Window],
    class_weights: tuple[float, float] = (1.0, 1.0),
) -> tuple[float, LstmParams]:
    """Loss and gradient over all windows of a split.

    The split loss is the mean over all events of the weighted negative
    log-likelihood, i.e. windows contribute proportionally to their length.
    """
    grads = zeros_like_params(params)
    if not windows:
        return 0.0, grads
    total_events = sum(len(w) for w in windows)
    total_loss = 0.0
    for _, xb, yb in _group_windows(windows):
        logits, cache = _forward_batch(params, xb)
        logp = _log_softmax(logits)
        probs = np.exp(logp)
        batch, steps = yb.shape
        onehot = np.zeros_like(probs)
        rows = np.repeat(np.arange(batch), steps)
        cols = np.tile(np.arange(steps), batch)
        onehot[rows, cols, yb.astype(int).ravel()] = 1.0
        weights = event_weights(yb, class_weights)
        total_loss += float(-(weights * np.take_along_axis(
            logp, yb.astype(int)[:, :, None], axis=2
        )[:, :, 0]).sum()) / total_events
        dlogits = weights[:, :, None] * (probs - onehot) / total_events
        add_scaled_(grads, _backward_batch(params, cache, dlogits))
    return total_loss, grads


def split_predict(
    params: LstmParams, windows: list[Window], threshold: float = 0.5
) -> np.ndarray:
    """Per-event boolean predictions over all windows, in event order."""
    if not windows:
        return np.zeros(0, dtype=bool)
    parts: list[np.ndarray | None] = [None] * len(windows)
    for indices, xb, _ in _group_windows(windows):
        logits, _ = _forward_batch(params, xb)
        probs = np.exp(_log_softmax(logits))
        flags = probs[:, :, 1] >= threshold
        for row, idx in enumerate(indices):
            parts[idx] = flags[row]
    return np.concatenate(parts)


def predict(params: LstmParams, window: Window, threshold: float = 0.5) -> np.ndarray:
    """Predicted anomalous iff prob_anomalous >= threshold (ties anomalous)."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    pred, _ = forward(params, window)
    return pred.thresholded(threshold)


def sgd_step(params: LstmParams, grads: LstmParams, lr: float) -> LstmParams:
    """Plain gradient-descent update: params - lr * grads."""
    return LstmParams(*(p - lr * g for p, g in zip(params.blocks(), grads.blocks())))


@dataclass
class AdamWState:
    """First/second moment estimates and the step counter."""

    m: LstmParams
    v: LstmParams
    step: int = 0

    @classmethod
    def zeros(cls, params: LstmParams) -> "AdamWState":
        return cls(zeros_like_params(params), zeros_like_params(params))


def adamw_step(
    params: LstmParams,
    grads: LstmParams,
    state: AdamWState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    weight_decay: float = 0.01,
) -> tuple[LstmParams, AdamWState]:
    """One decoupled-weight-decay adaptive-moment update (pure)."""
    beta1, beta2 = betas
    step = state.step + 1
    new_m = []
    new_v = []
    new_p = []
    for p, g, m, v in zip(params.blocks(), grads.blocks(), state.m.blocks(), state.v.blocks()):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**step)
        v_hat = v / (1.0 - beta2**step)
        new_m.append(m)
        new_v.append(v)
        new_p.append(p - lr * (m_hat / (np.sqrt(v_hat) + eps)) - lr * weight_decay * p)
    return LstmParams(*new_p), AdamWState(LstmParams(*new_m), LstmParams(*new_v), step)


# Model checkpoint (little-endian): magic "CSLM" | version u32 = 1 |
# embedding_dim u32 | hidden_dim u32 | parameter blocks as f32 in the
# order gate_x, gate_h, gate_b, head_w, head_b (C order, gates packed
# input/forget/cell/output).
CSLM_MAGIC = b"CSLM"
CSLM_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sIII")


def save_checkpoint(params: LstmParams, path: str | Path) -> None:
    with open(path, "wb") as handle:
        handle.write(
            _CKPT_HEADER.pack(CSLM_MAGIC, CSLM_VERSION, params.embedding_dim, params.hidden_dim)
        )
        for block in params.blocks():
            handle.write(np.asarray(block, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path) -> LstmParams:
    with open(path, "rb") as handle:
        header = handle.read(_CKPT_HEADER.size)
        if len(header) < _CKPT_HEADER.size:
            raise FormatError("truncated checkpoint header")
        magic, version, embedding_dim, hidden_dim = _CKPT_HEADER.unpack(header)
        if magic != CSLM_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {CSLM_MAGIC!r}")
        if version != CSLM_VERSION:
            raise FormatError(f"unsupported checkpoint version {version}")
        shapes = (
            (4 * hidden_dim, embedding_dim),
            (4 * hidden_dim, hidden_dim),
            (4 * hidden_dim,),
            (N_CLASSES, hidden_dim),
            (N_CLASSES,),
        )
        blocks = []
        for shape in shapes:
            n = int(np.prod(shape))
            raw = handle.read(4 * n)
            if len(raw) < 4 * n:
                raise FormatError("truncated checkpoint block")
            blocks.append(np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape))
        if handle.read(1):
            raise FormatError("trailing bytes after final checkpoint block")
    return LstmParams(*blocks)
