"""Dense LSTM-cell arithmetic with hand-derived gradients.

Everything here operates on plain numpy arrays owned by the caller: the
functions are pure, keep no internal state, and are safe to call from
multiple threads on disjoint data. Gate weights are stored stacked as
(4 * hidden_dim, fan_in) with gate order [input, forget, output, candidate],
so one matmul produces all four pre-activations.

Double precision is the default; single precision is allowed for training
speed but finite-difference checks are only reliable in double.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError

GATES = 4  # i, f, o, g


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split positive/negative branches to avoid overflow in exp.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def require_finite(name: str, *arrays: np.ndarray) -> None:
    """Raise NonFiniteError if any array contains NaN or Inf."""
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(f"non-finite values in {name}")


@dataclass
class LstmParams:
    """Weights of one LSTM cell.

    w_x: (4H, input_dim) input-to-gate weights, rows stacked [i, f, o, g].
    w_h: (4H, H) hidden-to-gate weights, same stacking.
    b:   (4H,) gate biases.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w_x.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_h.shape[1]

    def validate(self) -> None:
        h = self.hidden_dim
        if self.w_x.shape != (GATES * h, self.input_dim):
            raise ValueError(f"w_x shape {self.w_x.shape} inconsistent with hidden_dim {h}")
        if self.w_h.shape != (GATES * h, h):
            raise ValueError(f"w_h shape {self.w_h.shape} inconsistent with hidden_dim {h}")
        if self.b.shape != (GATES * h,):
            raise ValueError(f"b shape {self.b.shape} inconsistent with hidden_dim {h}")
        require_finite("LstmParams", self.w_x, self.w_h, self.b)


@dataclass
class LstmState:
    """Hidden and cell vectors, both (H,)."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def zeros(cls, hidden_dim: int, dtype=np.float64) -> "LstmState":
        return cls(np.zeros(hidden_dim, dtype=dtype), np.zeros(hidden_dim, dtype=dtype))


@dataclass
class StepCache:
    """Intermediates of one forward step, kept for the backward pass."""

    x: np.ndarray
    h_prev: np.ndarray
    c_prev: np.ndarray
    i: np.ndarray
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray
    c_new: np.ndarray
    tanh_c_new: np.ndarray


def lstm_cell_forward(
    params: LstmParams, x: np.ndarray, state: LstmState, *, want_cache: bool = True
) -> tuple[LstmState, StepCache | None]:
    """One LSTM step.

    i = sigmoid(Wi x + Ui h + bi), f/o likewise, g = tanh(Wg x + Ug h + bg);
    c' = f*c + i*g; h' = o*tanh(c'). Returns the new state and, when
    want_cache is set, the intermediates needed by lstm_cell_backward.
    """
    hd = params.hidden_dim
    if x.shape != (params.input_dim,):
        raise ValueError(f"x shape {x.shape}, expected ({params.input_dim},)")
    if state.h.shape != (hd,) or state.c.shape != (hd,):
        raise ValueError(f"state shapes {state.h.shape}/{state.c.shape}, expected ({hd},)")
    require_finite("lstm_cell_forward input", x, state.h, state.c)

    pre = params.w_x @ x + params.w_h @ state.h + params.b
    i = sigmoid(pre[:hd])
    f = sigmoid(pre[hd : 2 * hd])
    o = sigmoid(pre[2 * hd : 3 * hd])
    g = np.tanh(pre[3 * hd :])
    c_new = f * state.c + i * g
    tanh_c = np.tanh(c_new)
    h_new = o * tanh_c
    require_finite("lstm_cell_forward output", h_new, c_new)

    cache = None
    if want_cache:
        cache = StepCache(x, state.h, state.c, i, f, o, g, c_new, tanh_c)
    return LstmState(h_new, c_new), cache


@dataclass
class LstmGrads:
    """Parameter gradients mirroring LstmParams shapes."""

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros_like(cls, params: LstmParams) -> "LstmGrads":
        return cls(np.zeros_like(params.w_x), np.zeros_like(params.w_h), np.zeros_like(params.b))

    def add_(self, other: "LstmGrads") -> None:
        self.w_x += other.w_x
        self.w_h += other.w_h
        self.b += other.b


def lstm_cell_backward(
    params: LstmParams, cache: StepCache, dh: np.ndarray, dc: np.ndarray
) -> tuple[LstmGrads, np.ndarray, np.ndarray, np.ndarray]:
    """Exact gradients of one LSTM step.

    dh, dc are the upstream gradients w.r.t. the step's outputs h', c'.
    Returns (param grads, dx, dh_prev, dc_prev). Derivation, per entry:

        do      = dh * tanh(c')
        dc_tot  = dc + dh * o * (1 - tanh(c')^2)
        df      = dc_tot * c_prev         dc_prev = dc_tot * f
        di      = dc_tot * g              dg      = dc_tot * i

    then through the activations (sigmoid' = a(1-a), tanh' = 1-t^2) and the
    affine map: d_pre (4H,), dW = outer(d_pre, x), dU = outer(d_pre, h_prev),
    db = d_pre, dx = W^T d_pre, dh_prev = U^T d_pre.
    """
    if cache is None:
        raise ValueError("missing StepCache: forward was not run in training mode")
    hd = params.hidden_dim
    if dh.shape != (hd,) or dc.shape != (hd,):
        raise ValueError(f"upstream grads {dh.shape}/{dc.shape}, expected ({hd},)")

    do = dh * cache.tanh_c_new
    dc_tot = dc + dh * cache.o * (1.0 - cache.tanh_c_new**2)
    df = dc_tot * cache.c_prev
    dc_prev = dc_tot * cache.f
    di = dc_tot * cache.g
    dg = dc_tot * cache.i

    d_pre = np.concatenate(
        [
            di * cache.i * (1.0 - cache.i),
            df * cache.f * (1.0 - cache.f),
            do * cache.o * (1.0 - cache.o),
            dg * (1.0 - cache.g**2),
        ]
    )
    grads = LstmGrads(
        w_x=np.outer(d_pre, cache.x),
        w_h=np.outer(d_pre, cache.h_prev),
        b=d_pre.copy(),
    )
    dx = params.w_x.T @ d_pre
    dh_prev = params.w_h.T @ d_pre
    return grads, dx, dh_prev, dc_prev


def init_lstm_params(
    input_dim: int, hidden_dim: int, rng: np.random.Generator, dtype=np.float64
) -> LstmParams:
    """Uniform [-s, s] with s = 1/sqrt(hidden_dim); forget-gate bias set to 1."""
    s = 1.0 / np.sqrt(hidden_dim)
    b = np.zeros(GATES * hidden_dim, dtype=dtype)
    b[hidden_dim : 2 * hidden_dim] = 1.0
    return LstmParams(
        w_x=rng.uniform(-s, s, size=(GATES * hidden_dim, input_dim)).astype(dtype),
        w_h=rng.uniform(-s, s, size=(GATES * hidden_dim, hidden_dim)).astype(dtype),
        b=b,
    )


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max())
    return e / e.sum()


def softmax_cross_entropy(logits: np.ndarray, target: int) -> tuple[float, np.ndarray]:
    """Loss -log softmax(logits)[target] and its gradient w.r.t. logits.

    dlogits = softmax(logits) - onehot(target).
    """
    if logits.size == 0:
        raise ValueError("empty logits")
    if not 0 <= target < logits.shape[0]:
        raise ValueError(f"target {target} out of range for {logits.shape[0]} logits")
    shifted = logits - logits.max()
    log_z = np.log(np.sum(np.exp(shifted)))
    loss = float(log_z - shifted[target])
    dlogits = np.exp(shifted - log_z)
    dlogits[target] -= 1.0
    return loss, dlogits


def gradient_check(
    model_loss_fn, params: dict[str, np.ndarray], eps: float = 1e-5, floor: float = 1e-5
) -> float:
    """Compare analytic gradients against central finite differences.

    model_loss_fn(params) must return (loss, grads) with grads keyed like
    params. Every parameter entry is perturbed by +-eps in place; the
    returned value is max over entries of |a - n| / max(|a|, |n|, floor).
    The floor keeps finite-difference roundoff (absolute noise around
    1e-10 in double precision) from dominating the ratio on near-zero
    gradient entries; a genuinely wrong formula still produces an absolute
    deviation on the entry's own scale and exceeds the floor-divided
    tolerance. Raises if two evaluations at the same point disagree, since
    a non-deterministic loss makes the comparison meaningless.
    """
    loss0, grads = model_loss_fn(params)
    loss1, _ = model_loss_fn(params)
    if loss0 != loss1:
        raise ValueError(f"loss function is not deterministic: {loss0!r} != {loss1!r}")

    worst = 0.0
    for name, p in params.items():
        flat = p.reshape(-1)
        gflat = grads[name].reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            lp, _ = model_loss_fn(params)
            flat[k] = orig - eps
            lm, _ = model_loss_fn(params)
            flat[k] = orig
            numeric = (lp - lm) / (2.0 * eps)
            analytic = gflat[k]
            denom = max(abs(analytic), abs(numeric), floor)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst
