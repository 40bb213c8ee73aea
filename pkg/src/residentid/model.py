"""Bidirectional LSTM sequence tagger with hand-rolled BPTT.

One recurrent layer per direction, gates computed from the concatenated
[h_prev, x_t] per the classic formulation, an optional dropout on the
concatenated bidirectional output, and a linear projection into the
resident tag space. Training minimizes masked mean cross-entropy with
Adam, evaluates validation loss after every epoch and returns the
snapshot with the lowest validation loss. Everything is numpy and
deterministic given the seed; gradient_check verifies the analytic
gradients against central finite differences.
"""

from __future__ import annotations

import copy
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError, NumericError
from .ingest import FeatureSequence

_GATES = ("i", "f", "o", "c")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(x, -60.0, 60.0)))


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


@dataclass
class DirectionParams:
    """Gate weights for one direction; each w_* is H x (H + F)."""

    w_i: np.ndarray
    w_f: np.ndarray
    w_o: np.ndarray
    w_c: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    @property
    def hidden(self) -> int:
        return self.b_i.shape[0]

    @property
    def feature(self) -> int:
        return self.w_i.shape[1] - self.hidden


@dataclass
class LstmParams:
    """Full tagger parameters: both directions plus the tag projection."""

    fwd: DirectionParams
    bwd: DirectionParams
    w_tag: np.ndarray  # (n_classes, 2H)
    b_tag: np.ndarray  # (n_classes,)

    @property
    def hidden_size(self) -> int:
        return self.fwd.hidden

    @property
    def feature_size(self) -> int:
        return self.fwd.feature

    @property
    def n_classes(self) -> int:
        return self.b_tag.shape[0]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for prefix, dp in (("fwd", self.fwd), ("bwd", self.bwd)):
            for g in _GATES:
                out.append((f"{prefix}.w_{g}", getattr(dp, f"w_{g}")))
            for g in _GATES:
                out.append((f"{prefix}.b_{g}", getattr(dp, f"b_{g}")))
        out.append(("w_tag", self.w_tag))
        out.append(("b_tag", self.b_tag))
        return out

    def copy(self) -> "LstmParams":
        return copy.deepcopy(self)


@dataclass(frozen=True)
class TrainConfig:
    """Training knobs; defaults follow the write-ups in the README."""

    hidden_size: int = 64
    dropout: float = 0.2
    learning_rate: float = 1e-3
    max_epochs: int = 100
    batch_size: int = 1
    rng_seed: int = 0
    chunk_len: int = 1000
    class_weighting: bool = False
    patience: int = 10
    grad_clip: float = 5.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.hidden_size < 1 or self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("hidden_size, max_epochs and batch_size must be >= 1")


def init_params(hidden: int, feature: int, n_classes: int, rng: np.random.Generator) -> LstmParams:
    """Uniform(-1/sqrt(H), 1/sqrt(H)) weights, zero biases, forget bias 1."""
    k = 1.0 / np.sqrt(hidden)

    def direction() -> DirectionParams:
        ws = {f"w_{g}": rng.uniform(-k, k, size=(hidden, hidden + feature)) for g in _GATES}
        bs = {f"b_{g}": np.zeros(hidden) for g in _GATES}
        bs["b_f"] = np.ones(hidden)
        return DirectionParams(**ws, **bs)

    fwd = direction()
    bwd = direction()
    w_tag = rng.uniform(-k, k, size=(n_classes, 2 * hidden))
    b_tag = np.zeros(n_classes)
    return LstmParams(fwd=fwd, bwd=bwd, w_tag=w_tag, b_tag=b_tag)


def lstm_cell(
    x_t: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray, dp: DirectionParams
) -> tuple[np.ndarray, np.ndarray]:
    """One recurrent step on the concatenated [h_prev, x_t].

    i/f/o gates through the sigmoid, candidate through tanh, then
    c_t = f*c_prev + i*c_tilde and h_t = o*tanh(c_t).
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if x_t.shape[0] != dp.feature or h_prev.shape[0] != dp.hidden:
        raise DataError(
            f"dimension mismatch: x {x_t.shape[0]} vs F {dp.feature}, "
            f"h {h_prev.shape[0]} vs H {dp.hidden}"
        )
    z = np.concatenate([h_prev, x_t])
    i_t = _sigmoid(dp.w_i @ z + dp.b_i)
    f_t = _sigmoid(dp.w_f @ z + dp.b_f)
    o_t = _sigmoid(dp.w_o @ z + dp.b_o)
    c_tilde = np.tanh(dp.w_c @ z + dp.b_c)
    c_t = f_t * c_prev + i_t * c_tilde
    h_t = o_t * np.tanh(c_t)
    return h_t, c_t


class _DirectionCache:
    """Per-step activations kept for the backward pass."""

    __slots__ = ("x", "gates_i", "gates_f", "gates_o", "cand", "c", "c_prev", "h", "h_prev", "tanh_c")

    def __init__(self, **kw):
        for k, v in kw.items():
            setattr(self, k, v)


def _stacked_weights(dp: DirectionParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    H = dp.hidden
    w_h = np.concatenate([dp.w_i[:, :H], dp.w_f[:, :H], dp.w_o[:, :H], dp.w_c[:, :H]], axis=0)
    w_x = np.concatenate([dp.w_i[:, H:], dp.w_f[:, H:], dp.w_o[:, H:], dp.w_c[:, H:]], axis=0)
    b = np.concatenate([dp.b_i, dp.b_f, dp.b_o, dp.b_c])
    return w_h, w_x, b


def _run_direction(x: np.ndarray, dp: DirectionParams) -> _DirectionCache:
    """Run one direction over the rows of x; equivalent to repeated lstm_cell."""
    L = x.shape[0]
    H = dp.hidden
    w_h, w_x, b = _stacked_weights(dp)
    ax = x @ w_x.T + b  # (L, 4H) input contribution, precomputed
    gi = np.empty((L, H))
    gf = np.empty((L, H))
    go = np.empty((L, H))
    cand = np.empty((L, H))
    cs = np.empty((L, H))
    hs = np.empty((L, H))
    h_prev = np.zeros((L, H))
    c_prev = np.zeros((L, H))
    h = np.zeros(H)
    c = np.zeros(H)
    for t in range(L):
        h_prev[t] = h
        c_prev[t] = c
        a = ax[t] + w_h @ h
        sig = _sigmoid(a[: 3 * H])
        i_t, f_t, o_t = sig[:H], sig[H : 2 * H], sig[2 * H :]
        g_t = np.tanh(a[3 * H :])
        c = f_t * c + i_t * g_t
        h = o_t * np.tanh(c)
        gi[t], gf[t], go[t], cand[t] = i_t, f_t, o_t, g_t
        cs[t] = c
        hs[t] = h
    return _DirectionCache(
        x=x, gates_i=gi, gates_f=gf, gates_o=go, cand=cand,
        c=cs, c_prev=c_prev, h=hs, h_prev=h_prev, tanh_c=np.tanh(cs),
    )


def _direction_backward(
    d_h: np.ndarray, cache: _DirectionCache, dp: DirectionParams
) -> dict[str, np.ndarray]:
    """BPTT for one direction given per-step gradients on its outputs."""
    L, H = d_h.shape
    w_h, _, _ = _stacked_weights(dp)
    da = np.empty((L, 4 * H))
    dh_rec = np.zeros(H)
    dc_rec = np.zeros(H)
    for t in range(L - 1, -1, -1):
        dh = d_h[t] + dh_rec
        i_t, f_t, o_t = cache.gates_i[t], cache.gates_f[t], cache.gates_o[t]
        g_t, tanh_c = cache.cand[t], cache.tanh_c[t]
        do = dh * tanh_c
        dc = dc_rec + dh * o_t * (1.0 - tanh_c * tanh_c)
        df = dc * cache.c_prev[t]
        di = dc * g_t
        dg = dc * i_t
        da_t = da[t]
        da_t[:H] = di * i_t * (1.0 - i_t)
        da_t[H : 2 * H] = df * f_t * (1.0 - f_t)
        da_t[2 * H : 3 * H] = do * o_t * (1.0 - o_t)
        da_t[3 * H :] = dg * (1.0 - g_t * g_t)
        dh_rec = w_h.T @ da_t
        dc_rec = dc * f_t
    z = np.concatenate([cache.h_prev, cache.x], axis=1)  # (L, H+F)
    dw_all = da.T @ z  # (4H, H+F)
    db_all = da.sum(axis=0)
    grads = {}
    for gi_, g in enumerate(_GATES):
        grads[f"w_{g}"] = dw_all[gi_ * H : (gi_ + 1) * H]
        grads[f"b_{g}"] = db_all[gi_ * H : (gi_ + 1) * H]
    return grads


def forward(
    seq: FeatureSequence,
    params: LstmParams,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Per-step class scores for one chunk (padded rows score zero).

    Both directions run over the real rows only, so a padded chunk
    scores identically to its unpadded equivalent. Dropout (train time
    only) is applied to the concatenated bidirectional output.
    """
    scores, _ = _forward_cached(seq, params, dropout=dropout, rng=rng)
    return scores


def _forward_cached(
    seq: FeatureSequence,
    params: LstmParams,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
):
    if seq.features.shape[1] != params.feature_size:
        raise DataError(
            f"feature width {seq.features.shape[1]} != model {params.feature_size}"
        )
    L = seq.features.shape[0]
    real = seq.n_real
    x = seq.features[:real]
    cache_f = _run_direction(x, params.fwd)
    cache_b = _run_direction(x[::-1], params.bwd)
    hh = np.concatenate([cache_f.h, cache_b.h[::-1]], axis=1)  # (real, 2H)
    drop_mask = None
    if dropout > 0.0:
        if rng is None:
            raise ValueError("dropout requires an rng")
        drop_mask = (rng.random(hh.shape) >= dropout) / (1.0 - dropout)
        hh = hh * drop_mask
    s = hh @ params.w_tag.T + params.b_tag
    scores = np.zeros((L, params.n_classes))
    scores[:real] = s
    return scores, (cache_f, cache_b, hh, drop_mask, real)


def _log_softmax(s: np.ndarray) -> np.ndarray:
    shifted = s - s.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def softmax_scores(scores: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax(scores))


def _loss_and_grads(
    seq: FeatureSequence,
    params: LstmParams,
    class_weights: np.ndarray | None = None,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[float, float, dict[str, np.ndarray] | None]:
    """Masked mean cross-entropy on one chunk plus parameter gradients.

    Returns (loss, total weight, grads); grads is None when the chunk
    has no labeled rows. Rows count only if real and labeled.
    """
    scores, (cache_f, cache_b, hh, drop_mask, real) = _forward_cached(
        seq, params, dropout=dropout, rng=rng
    )
    labels = seq.labels[:real]
    counted = labels >= 0
    if not counted.any():
        return 0.0, 0.0, None
    y = labels[counted]
    weights = np.ones(y.shape[0]) if class_weights is None else class_weights[y]
    total_w = float(weights.sum())
    logp = _log_softmax(scores[:real][counted])
    loss = float(-(weights * logp[np.arange(y.shape[0]), y]).sum() / total_w)

    p = np.exp(_log_softmax(scores[:real]))
    d_s = np.zeros_like(p)
    d_s[counted] = p[counted]
    d_s[np.nonzero(counted)[0], y] -= 1.0
    d_s[counted] *= (weights / total_w)[:, None]

    grads: dict[str, np.ndarray] = {}
    grads["w_tag"] = d_s.T @ hh
    grads["b_tag"] = d_s.sum(axis=0)
    d_hh = d_s @ params.w_tag
    if drop_mask is not None:
        d_hh = d_hh * drop_mask
    H = params.hidden_size
    g_f = _direction_backward(d_hh[:, :H], cache_f, params.fwd)
    g_b = _direction_backward(d_hh[:, H:][::-1], cache_b, params.bwd)
    for g in _GATES:
        grads[f"fwd.w_{g}"] = g_f[f"w_{g}"]
        grads[f"fwd.b_{g}"] = g_f[f"b_{g}"]
        grads[f"bwd.w_{g}"] = g_b[f"w_{g}"]
        grads[f"bwd.b_{g}"] = g_b[f"b_{g}"]
    return loss, total_w, grads


def dataset_loss(
    chunks: Sequence[FeatureSequence],
    params: LstmParams,
    class_weights: np.ndarray | None = None,
) -> float:
    """Event-weighted mean cross-entropy over all labeled rows."""
    total, weight = 0.0, 0.0
    for seq in chunks:
        scores = forward(seq, params)
        real = seq.n_real
        labels = seq.labels[:real]
        counted = labels >= 0
        if not counted.any():
            continue
        y = labels[counted]
        w = np.ones(y.shape[0]) if class_weights is None else class_weights[y]
        logp = _log_softmax(scores[:real][counted])
        total += float(-(w * logp[np.arange(y.shape[0]), y]).sum())
        weight += float(w.sum())
    return total / weight if weight > 0 else 0.0


class _Adam:
    def __init__(self, params: LstmParams, lr: float):
        self.lr = lr
        self.beta1, self.beta2, self.eps = 0.9, 0.999, 1e-8
        self.t = 0
        self.m = {name: np.zeros_like(a) for name, a in params.named_arrays()}
        self.v = {name: np.zeros_like(a) for name, a in params.named_arrays()}

    def step(self, params: LstmParams, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, arr in params.named_arrays():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            arr -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def _clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> None:
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if max_norm > 0 and total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale


def _class_weights(chunks: Sequence[FeatureSequence], n_classes: int) -> np.ndarray:
    counts = np.zeros(n_classes)
    for seq in chunks:
        labels = seq.labels[seq.mask]
        labels = labels[labels >= 0]
        np.add.at(counts, labels, 1.0)
    weights = np.zeros(n_classes)
    present = counts > 0
    weights[present] = counts.sum() / (present.sum() * counts[present])
    return weights


def _infer_n_classes(chunks: Sequence[FeatureSequence]) -> int:
    top = -1
    for seq in chunks:
        if seq.labels.size:
            top = max(top, int(seq.labels.max()))
    if top < 0:
        raise DataError("no labeled events in the data")
    return top + 1


def train(
    chunks_train: Sequence[FeatureSequence],
    chunks_valid: Sequence[FeatureSequence],
    cfg: TrainConfig,
    n_classes: int | None = None,
) -> tuple[LstmParams, list[dict]]:
    """Fit the tagger; returns the snapshot with minimum validation loss.

    One Adam update per batch of batch_size chunks (per-chunk losses
    averaged), global gradient-norm clipping, early stop after
    cfg.patience epochs without validation improvement. The training
    curve records post-epoch losses computed with dropout off. With an
    empty validation set the training loss drives snapshot selection.
    """
    if not chunks_train:
        raise DataError("training set is empty")
    if n_classes is None:
        n_classes = _infer_n_classes(list(chunks_train) + list(chunks_valid))
    feature = chunks_train[0].features.shape[1]
    rng = np.random.default_rng(cfg.rng_seed)
    params = init_params(cfg.hidden_size, feature, n_classes, rng)
    weights = _class_weights(chunks_train, n_classes) if cfg.class_weighting else None
    adam = _Adam(params, cfg.learning_rate)

    best = params.copy()
    best_val = np.inf
    stale = 0
    curve: list[dict] = []
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(chunks_train))
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            summed: dict[str, np.ndarray] | None = None
            n_used = 0
            for ci in batch:
                loss, _, grads = _loss_and_grads(
                    chunks_train[ci], params, class_weights=weights,
                    dropout=cfg.dropout, rng=rng,
                )
                if not np.isfinite(loss):
                    raise NumericError(
                        f"training diverged: loss={loss!r} at epoch {epoch}, chunk {ci}"
                    )
                if grads is None:
                    continue
                n_used += 1
                if summed is None:
                    summed = grads
                else:
                    for name in summed:
                        summed[name] += grads[name]
            if summed is None:
                continue
            if n_used > 1:
                for g in summed.values():
                    g /= n_used
            _clip_global_norm(summed, cfg.grad_clip)
            adam.step(params, summed)
        train_loss = dataset_loss(chunks_train, params, weights)
        val_loss = dataset_loss(chunks_valid, params, weights) if chunks_valid else train_loss
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise NumericError(f"non-finite loss after epoch {epoch}")
        curve.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best = params.copy()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return best, curve


def gradient_check(
    params: LstmParams, seq: FeatureSequence, epsilon: float = 1e-5
) -> float:
    """Max relative error of analytic vs. central-difference gradients.

    Perturbs every parameter element. Relative error uses the larger of
    the two magnitudes with a 1e-6 floor so that finite-difference noise
    on near-zero gradients does not register as failure.
    """
    _, _, analytic = _loss_and_grads(seq, params)
    if analytic is None:
        raise DataError("sequence has no labeled rows to differentiate")
    worst = 0.0
    for name, arr in params.named_arrays():
        grad = analytic[name]
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.shape[0]):
            orig = flat[i]
            flat[i] = orig + epsilon
            lp, _, _ = _loss_and_grads(seq, params)
            flat[i] = orig - epsilon
            lm, _, _ = _loss_and_grads(seq, params)
            flat[i] = orig
            numeric = (lp - lm) / (2.0 * epsilon)
            denom = max(abs(gflat[i]), abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


@dataclass
class EvalReport:
    """Per-event tagging metrics over masked, labeled rows."""

    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: np.ndarray  # (n, n) counts, rows = true class
    n_events: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion.tolist(),
            "n_events": self.n_events,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(
            accuracy=d["accuracy"],
            macro_precision=d["macro_precision"],
            macro_recall=d["macro_recall"],
            macro_f1=d["macro_f1"],
            confusion=np.asarray(d["confusion"]),
            n_events=d["n_events"],
        )


def report_from_pairs(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> EvalReport:
    """Build an EvalReport from aligned true/predicted label vectors."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise DataError("label vectors differ in length")
    if y_true.size == 0:
        raise DataError("no events to evaluate")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (y_true, y_pred), 1)
    total = int(confusion.sum())
    accuracy = float(np.trace(confusion)) / total
    precision = np.zeros(n_classes)
    recall = np.zeros(n_classes)
    f1 = np.zeros(n_classes)
    for c in range(n_classes):
        tp = confusion[c, c]
        col = confusion[:, c].sum()
        row = confusion[c, :].sum()
        precision[c] = tp / col if col > 0 else 0.0
        recall[c] = tp / row if row > 0 else 0.0
        if precision[c] + recall[c] > 0:
            f1[c] = 2 * precision[c] * recall[c] / (precision[c] + recall[c])
    return EvalReport(
        accuracy=accuracy,
        macro_precision=float(precision.mean()),
        macro_recall=float(recall.mean()),
        macro_f1=float(f1.mean()),
        confusion=confusion,
        n_events=total,
    )


def predict(chunks: Sequence[FeatureSequence], params: LstmParams) -> list[np.ndarray]:
    """Per-chunk argmax predictions; padded rows get -1."""
    out = []
    for seq in chunks:
        scores = forward(seq, params)
        pred = np.full(seq.mask.shape[0], -1, dtype=np.int64)
        real = seq.n_real
        pred[:real] = scores[:real].argmax(axis=1)
        out.append(pred)
    return out


def evaluate(chunks: Sequence[FeatureSequence], params: LstmParams) -> EvalReport:
    """Masked per-event argmax vs. labels, macro-averaged metrics."""
    if not chunks:
        raise DataError("test set is empty")
    trues, preds = [], []
    for seq, pred in zip(chunks, predict(chunks, params)):
        counted = seq.mask & (seq.labels >= 0)
        trues.append(seq.labels[counted])
        preds.append(pred[counted])
    return report_from_pairs(
        np.concatenate(trues), np.concatenate(preds), params.n_classes
    )


@dataclass
class CrossValResult:
    folds: list[EvalReport]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean,
            "std": self.std,
        }


_METRICS = ("accuracy", "macro_precision", "macro_recall", "macro_f1")


def _fit_fold(args) -> EvalReport:
    chunks, test_idx, pool_idx, cfg, upsample_factor, n_classes, fold = args
    from .ingest import upsample_training

    fold_seed = _derive_seed(cfg.rng_seed, fold)
    n_train = max(1, int(round(0.75 * len(pool_idx))))
    if len(pool_idx) >= 2:
        n_train = min(n_train, len(pool_idx) - 1)
    train_chunks = [chunks[i] for i in pool_idx[:n_train]]
    valid_chunks = [chunks[i] for i in pool_idx[n_train:]]
    if upsample_factor > 1:
        train_chunks = upsample_training(train_chunks, upsample_factor, _derive_seed(fold_seed, 1))
    fold_cfg = replace(cfg, rng_seed=fold_seed)
    params, _ = train(train_chunks, valid_chunks, fold_cfg, n_classes=n_classes)
    return evaluate([chunks[i] for i in test_idx], params)


def cross_validate(
    chunks: Sequence[FeatureSequence],
    k: int,
    cfg: TrainConfig,
    upsample_factor: int = 1,
    jobs: int = 1,
) -> CrossValResult:
    """Randomized k-fold cross-validation.

    Chunks are shuffled with the seed and split into k folds; each fold
    serves once as the test set while the remainder is split 75/25 into
    train/validation. Up-sampling applies to the training portion only.
    Folds may run in parallel (jobs > 1); results merge by fold index
    either way.
    """
    chunks = list(chunks)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(chunks) < k:
        raise DataError(f"need at least {k} chunks for {k}-fold CV, got {len(chunks)}")
    n_classes = _infer_n_classes(chunks)
    rng = np.random.default_rng(cfg.rng_seed)
    perm = rng.permutation(len(chunks))
    folds = np.array_split(perm, k)
    tasks = []
    for fold, test_idx in enumerate(folds):
        test_set = set(int(i) for i in test_idx)
        pool_idx = [int(i) for i in perm if int(i) not in test_set]
        tasks.append(
            (chunks, [int(i) for i in test_idx], pool_idx, cfg, upsample_factor, n_classes, fold)
        )
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(_fit_fold, tasks))
    else:
        reports = [_fit_fold(t) for t in tasks]
    mean = {m: float(np.mean([getattr(r, m) for r in reports])) for m in _METRICS}
    std = {m: float(np.std([getattr(r, m) for r in reports])) for m in _METRICS}
    return CrossValResult(folds=reports, mean=mean, std=std)


CHECKPOINT_VERSION = 1


def save_checkpoint(params: LstmParams, cfg: TrainConfig, path: str | Path) -> None:
    doc = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(cfg),
        "dims": {
            "hidden": params.hidden_size,
            "feature": params.feature_size,
            "classes": params.n_classes,
        },
        "params": {name: arr.tolist() for name, arr in params.named_arrays()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path: str | Path) -> tuple[LstmParams, TrainConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise DataError(f"unsupported checkpoint version: {doc.get('version')!r}")
    arrays = {name: np.asarray(val) for name, val in doc["params"].items()}

    def direction(prefix: str) -> DirectionParams:
        kw = {f"w_{g}": arrays[f"{prefix}.w_{g}"] for g in _GATES}
        kw.update({f"b_{g}": arrays[f"{prefix}.b_{g}"] for g in _GATES})
        return DirectionParams(**kw)

    params = LstmParams(
        fwd=direction("fwd"),
        bwd=direction("bwd"),
        w_tag=arrays["w_tag"],
        b_tag=arrays["b_tag"],
    )
    cfg = TrainConfig(**doc["config"])
    return params, cfg
