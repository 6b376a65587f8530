"""Loss, optimizer, training-pair construction, and the training loop.

The loss is a weighted sum of three terms over the m generated poses:
mean squared error against the targets, mean consecutive-pose distance
(continuity), and the negative per-dimension temporal variance (rewarding
dynamic motion):

    total = mse + alpha * continuity + beta * variance
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import EmptyDataset, InvalidConfig, LengthMismatch, ShapeMismatch
from .model import ParamStore, Seq2SeqModel, backward, forward_graph
from .pose import encode_pose, normalize_pose


@dataclass
class Hyperparams:
    alpha: float = 0.01  # continuity weight
    beta: float = 1.0  # variance weight
    lr: float = 0.0001
    batch_size: int = 64
    clip_lo: float = -5.0
    clip_hi: float = 5.0
    dropout: float = 0.1
    epochs: int = 560
    seed: int = 0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidConfig("alpha and beta must be non-negative")
        if self.lr <= 0:
            raise InvalidConfig("lr must be positive")
        if self.clip_lo >= self.clip_hi:
            raise InvalidConfig("clip_lo must be below clip_hi")
        if self.batch_size < 1 or self.epochs < 0:
            raise InvalidConfig("batch_size must be >= 1 and epochs >= 0")


@dataclass
class LossBreakdown:
    mse: float
    continuity: float
    variance: float
    total: float


@dataclass
class TrainingPair:
    """Words paired with n seed poses followed by m target poses."""

    words: list
    target_poses: np.ndarray  # (n + m, gesture_dim)

    def __post_init__(self):
        if not self.words:
            raise InvalidConfig("training pair needs at least one word")
        object.__setattr__(self, "target_poses", np.asarray(self.target_poses, dtype=np.float64))


class AdamState:
    """Per-parameter moment accumulators for bias-corrected Adam."""

    def __init__(self, store: ParamStore, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.first = {name: np.zeros_like(p.value) for name, p in store.items()}
        self.second = {name: np.zeros_like(p.value) for name, p in store.items()}


def _loss_graph(pred: Tensor, target: np.ndarray, alpha: float, beta: float):
    """Loss terms for a (B, m, d) prediction tensor, averaged over the batch.

    Returns (mse, continuity, variance, total) graph tensors.
    """
    batch, m, dim = pred.shape
    diff = ad.add(pred, -target)
    mse = ad.tmean(ad.mul(diff, diff))
    steps = ad.add(pred[:, 1:, :], ad.mul(pred[:, :-1, :], -1.0))
    norms = ad.sqrt(ad.tsum(ad.mul(steps, steps), axis=2))  # (B, m-1)
    continuity = ad.tmean(ad.mul(ad.tsum(norms, axis=1), 1.0 / (m - 1)))
    centered = ad.add(pred, ad.mul(ad.tmean(pred, axis=1, keepdims=True), -1.0))
    per_dim_var = ad.tmean(ad.mul(centered, centered), axis=1)  # (B, d) population variance
    variance = ad.mul(ad.tmean(per_dim_var), -1.0)
    total = ad.add(ad.add(mse, ad.mul(continuity, alpha)), ad.mul(variance, beta))
    return mse, continuity, variance, total


def compute_loss(pred, target, h: Hyperparams) -> LossBreakdown:
    """Loss breakdown for one m-pose sequence against its targets."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise LengthMismatch(f"prediction {pred.shape} vs target {target.shape}")
    if pred.ndim != 2 or pred.shape[0] < 2:
        raise LengthMismatch("need at least 2 poses per sequence")
    mse, cont, var, total = _loss_graph(Tensor(pred[None]), target[None], h.alpha, h.beta)
    return LossBreakdown(
        mse=float(mse.data), continuity=float(cont.data), variance=float(var.data), total=float(total.data)
    )


def compute_loss_graph(pred: Tensor, target: np.ndarray, h: Hyperparams):
    """Differentiable batched loss; returns (LossBreakdown, total tensor)."""
    if pred.shape[1] < 2:
        raise LengthMismatch("need at least 2 poses per sequence")
    if pred.shape != np.asarray(target).shape:
        raise LengthMismatch(f"prediction {pred.shape} vs target {np.asarray(target).shape}")
    mse, cont, var, total = _loss_graph(pred, np.asarray(target, dtype=np.float64), h.alpha, h.beta)
    breakdown = LossBreakdown(
        mse=float(mse.data), continuity=float(cont.data), variance=float(var.data), total=float(total.data)
    )
    return breakdown, total


def clip_gradients(store: ParamStore, lo: float, hi: float):
    """Clamp every gradient entry into [lo, hi], in place. Idempotent."""
    for _, p in store.items():
        np.clip(p.grad, lo, hi, out=p.grad)


def adam_step(store: ParamStore, state: AdamState, lr: float):
    """Standard bias-corrected Adam update. Gradients are left untouched;
    the caller decides when to clear them."""
    state.step_count += 1
    t = state.step_count
    bias1 = 1.0 - state.beta1**t
    bias2 = 1.0 - state.beta2**t
    for name, p in store.items():
        m = state.first.get(name)
        v = state.second.get(name)
        if m is None or m.shape != p.value.shape:
            raise ShapeMismatch(f"Adam state does not match parameter {name}")
        m *= state.beta1
        m += (1.0 - state.beta1) * p.grad
        v *= state.beta2
        v += (1.0 - state.beta2) * (p.grad * p.grad)
        p.value -= lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)


def make_training_pairs(records, pca, n: int, m: int, stride: int | None = None) -> list[TrainingPair]:
    """Build training pairs the way chunked generation consumes them.

    Each record's words are partitioned into inference chunks with the
    planning formula at the record's own duration; chunk i owns the m
    output frames [i*m, (i+1)*m), and its n seed frames are the ground
    truth immediately before that span. The first chunk is seeded with the
    mean pose (zero vectors), the same cold start generation uses. Records
    shorter than n + m frames yield nothing; `stride` overrides the frame
    step between windows (default m, the generation-aligned spacing).
    """
    from .synthesis import plan_chunks

    if stride is None:
        stride = m
    if stride < 1:
        raise InvalidConfig("stride must be >= 1")
    pairs = []
    for rec in records:
        if not rec.words or len(rec.frames) < n + m:
            continue
        chunks = plan_chunks([w.surface for w in rec.words], rec.duration, n, m).chunks
        coeffs = np.stack([encode_pose(pca, normalize_pose(f)) for f in rec.frames])
        total = coeffs.shape[0]
        for start in range(0, total - m + 1, stride):
            chunk = chunks[min(start // m, len(chunks) - 1)]
            if not chunk:
                continue
            seeds = np.zeros((n, coeffs.shape[1]))
            lo = max(0, start - n)
            if start > 0:
                seeds[n - (start - lo) :] = coeffs[lo:start]
            pairs.append(TrainingPair(words=list(chunk), target_poses=np.concatenate([seeds, coeffs[start : start + m]])))
    return pairs


@dataclass
class TrainResult:
    model: Seq2SeqModel
    history: list = field(default_factory=list)  # per-epoch LossBreakdown


def _length_groups(batch_indices, lengths):
    """Split a batch into runs of equal word count, ascending, stable."""
    ordered = sorted(batch_indices, key=lambda i: lengths[i])
    groups = []
    for idx in ordered:
        if groups and lengths[groups[-1][-1]] == lengths[idx]:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return groups


def train_model(
    pairs: list[TrainingPair],
    h: Hyperparams,
    model: Seq2SeqModel,
    table,
    on_epoch=None,
) -> TrainResult:
    """Seeded shuffle, fixed-size batches (last partial batch kept), forward
    in train mode with ground-truth seed poses, loss on the m outputs,
    backward, clip, Adam step. Deterministic for a fixed seed when run
    single-threaded.

    ``on_epoch(epoch_index, model, breakdown)`` runs after every epoch, for
    checkpointing.
    """
    if not pairs:
        raise EmptyDataset("no training pairs")
    model.cfg.dropout = h.dropout
    n = model.cfg.n_seed_poses
    m = model.cfg.n_output_poses
    for p in pairs:
        if p.target_poses.shape[0] != n + m:
            raise LengthMismatch(f"pair has {p.target_poses.shape[0]} poses, expected {n + m}")

    embedded = [np.stack([table.lookup(w) for w in p.words]) for p in pairs]
    lengths = [e.shape[0] for e in embedded]
    rng = np.random.default_rng(h.seed)
    state = AdamState(model.store)
    history = []

    for epoch in range(h.epochs):
        perm = rng.permutation(len(pairs))
        sums = np.zeros(4)
        for bstart in range(0, len(perm), h.batch_size):
            batch = list(perm[bstart : bstart + h.batch_size])
            model.store.zero_grads()
            batch_total = None
            batch_sums = np.zeros(4)
            for group in _length_groups(batch, lengths):
                emb = np.stack([embedded[i] for i in group])
                seeds = np.stack([pairs[i].target_poses[:n] for i in group])
                targets = np.stack([pairs[i].target_poses[n:] for i in group])
                rollout = forward_graph(model, emb, seeds, train=True, rng=rng)
                breakdown, total = compute_loss_graph(rollout.poses, targets, h)
                weight = len(group) / len(batch)
                weighted = ad.mul(total, weight)
                batch_total = weighted if batch_total is None else ad.add(batch_total, weighted)
                batch_sums += weight * np.array(
                    [breakdown.mse, breakdown.continuity, breakdown.variance, breakdown.total]
                )
            backward(model, batch_total)
            clip_gradients(model.store, h.clip_lo, h.clip_hi)
            adam_step(model.store, state, h.lr)
            sums += batch_sums * len(batch)
        means = sums / len(pairs)
        breakdown = LossBreakdown(
            mse=float(means[0]), continuity=float(means[1]), variance=float(means[2]), total=float(means[3])
        )
        history.append(breakdown)
        if on_epoch is not None:
            on_epoch(epoch, model, breakdown)
    return TrainResult(model=model, history=history)


def write_history_csv(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,mse,continuity,variance,total\n")
        for i, b in enumerate(history):
            fh.write(f"{i},{b.mse!r},{b.continuity!r},{b.variance!r},{b.total!r}\n")
