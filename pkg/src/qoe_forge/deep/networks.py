"""Trainable networks: plain MLP, feature-gating AttentionMLP, and TabNet-lite.

Targets are standardized internally during training (predictions are mapped
back to the MOS scale), so the published learning rates work at their stated
values. All training is sequential and bit-deterministic in (data, config,
seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DivergenceError, InvalidArgumentError
from .autodiff import (
    Tensor,
    add,
    dropout,
    mask_entropy,
    matmul,
    mse,
    mul,
    relu,
    scale,
    sigmoid,
    sparsemax,
)
from .layers import Adam, GhostBatchNorm, Linear


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple[int, ...] = (256, 128, 64)
    attention_hidden: int = 128
    dropout: float = 0.2
    learning_rate: float = 0.001
    batch_size: int = 256
    epochs: int = 40

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise InvalidArgumentError("dropout must be in [0,1)")
        if min(self.hidden) <= 0 or self.batch_size <= 0 or self.epochs <= 0:
            raise InvalidArgumentError("hidden sizes, batch size, epochs must be positive")


@dataclass(frozen=True)
class TabNetConfig:
    n_steps: int = 3
    relaxation: float = 1.3
    sparsity: float = 1e-3
    step_dim: int = 32
    batch_size: int = 256
    virtual_batch: int = 128
    max_epochs: int = 120
    patience: int = 30
    learning_rate: float = 0.02
    validation_fraction: float = 0.15

    def __post_init__(self):
        if self.n_steps < 1:
            raise InvalidArgumentError("n_steps must be >= 1")
        if self.relaxation < 1.0:
            raise InvalidArgumentError("relaxation must be >= 1")
        if self.virtual_batch > self.batch_size:
            raise InvalidArgumentError("virtual batch must be <= batch size")


class _TargetScaler:
    """Standardizes y for training; inverse-transforms predictions."""

    def __init__(self, y: np.ndarray | None = None):
        if y is not None:
            self.mean = float(np.mean(y))
            sd = float(np.std(y))
            self.std = sd if sd > 0 else 1.0

    def forward(self, y):
        return (y - self.mean) / self.std

    def inverse(self, y):
        return y * self.std + self.mean


class MlpNet:
    """Plain fully connected regressor: hidden ReLU/dropout stack + linear head."""

    kind = "mlp"

    def __init__(self, n_features: int, cfg: MlpConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.n_features = n_features
        sizes = [n_features, *cfg.hidden]
        self.hidden_layers = [
            Linear(sizes[i], sizes[i + 1], rng) for i in range(len(sizes) - 1)
        ]
        self.head = Linear(sizes[-1], 1, rng)
        self.target_scaler = _TargetScaler.__new__(_TargetScaler)

    def parameters(self) -> list[Tensor]:
        out = []
        for layer in self.hidden_layers:
            out.extend(layer.parameters())
        out.extend(self.head.parameters())
        return out

    def param_entries(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, layer in enumerate(self.hidden_layers):
            out += [(f"hidden{i}.W", layer.W), (f"hidden{i}.b", layer.b)]
        out += [("head.W", self.head.W), ("head.b", self.head.b)]
        return out

    def norm_layers(self) -> list[tuple[str, GhostBatchNorm]]:
        return []

    def forward(self, x: Tensor, training: bool, rng: np.random.Generator) -> Tensor:
        h = x
        for layer in self.hidden_layers:
            h = dropout(relu(layer(h)), self.cfg.dropout, rng, training)
        return self.head(h)

    def loss(self, x: Tensor, y: np.ndarray, training: bool,
             rng: np.random.Generator) -> Tensor:
        return mse(self.forward(x, training, rng), y)

    def predict(self, X) -> np.ndarray:
        out = self.forward(Tensor(np.asarray(X, dtype=np.float64)), False, _NULL_RNG)
        return self.target_scaler.inverse(out.data[:, 0])


class AttentionMlpNet(MlpNet):
    """MLP with a learned sigmoid feature gate applied before the stack."""

    kind = "attention_mlp"

    def __init__(self, n_features: int, cfg: MlpConfig, rng: np.random.Generator):
        # Gate layers are created first so the MLP stack sees the same rng
        # stream regardless of subclass; order is fixed for determinism.
        self.gate_in = Linear(n_features, cfg.attention_hidden, rng)
        self.gate_out = Linear(cfg.attention_hidden, n_features, rng)
        super().__init__(n_features, cfg, rng)

    def parameters(self) -> list[Tensor]:
        return (
            self.gate_in.parameters()
            + self.gate_out.parameters()
            + super().parameters()
        )

    def param_entries(self) -> list[tuple[str, Tensor]]:
        gate = [
            ("gate_in.W", self.gate_in.W),
            ("gate_in.b", self.gate_in.b),
            ("gate_out.W", self.gate_out.W),
            ("gate_out.b", self.gate_out.b),
        ]
        return gate + super().param_entries()

    def gate(self, x: Tensor) -> Tensor:
        return sigmoid(self.gate_out(relu(self.gate_in(x))))

    def forward(self, x: Tensor, training: bool, rng: np.random.Generator) -> Tensor:
        gated = mul(x, self.gate(x))
        h = gated
        for layer in self.hidden_layers:
            h = dropout(relu(layer(h)), self.cfg.dropout, rng, training)
        return self.head(h)

    def mean_gate(self, X) -> np.ndarray:
        """Mean attention gate over a dataset; feature-importance readout."""
        alpha = self.gate(Tensor(np.asarray(X, dtype=np.float64)))
        return alpha.data.mean(axis=0)


class TabNetLite:
    """Sequential sparsemax feature masks with ghost batch normalization.

    Each decision step masks the input with a sparsemax attention vector
    (relaxed by the prior of earlier steps), runs a two-block feature
    transformer, and contributes a ReLU'd vector to the summed decision
    output. Loss adds a mask-entropy sparsity term.
    """

    kind = "tabnet"

    def __init__(self, n_features: int, cfg: TabNetConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.n_features = n_features
        vb = cfg.virtual_batch
        self.attentive = []
        self.transform1 = []
        self.transform2 = []
        for _ in range(cfg.n_steps):
            self.attentive.append((Linear(n_features, n_features, rng),
                                   GhostBatchNorm(n_features, vb)))
            self.transform1.append((Linear(n_features, cfg.step_dim, rng),
                                    GhostBatchNorm(cfg.step_dim, vb)))
            self.transform2.append((Linear(cfg.step_dim, cfg.step_dim, rng),
                                    GhostBatchNorm(cfg.step_dim, vb)))
        self.head = Linear(cfg.step_dim, 1, rng)
        self.target_scaler = _TargetScaler.__new__(_TargetScaler)

    def parameters(self) -> list[Tensor]:
        out = []
        for group in (self.attentive, self.transform1, self.transform2):
            for lin, bn in group:
                out.extend(lin.parameters())
                out.extend(bn.parameters())
        out.extend(self.head.parameters())
        return out

    def param_entries(self) -> list[tuple[str, Tensor]]:
        out = []
        for gname, group in (
            ("attentive", self.attentive),
            ("transform1", self.transform1),
            ("transform2", self.transform2),
        ):
            for t, (lin, bn) in enumerate(group):
                out += [
                    (f"{gname}{t}.W", lin.W),
                    (f"{gname}{t}.b", lin.b),
                    (f"{gname}{t}.gamma", bn.gamma),
                    (f"{gname}{t}.beta", bn.beta),
                ]
        out += [("head.W", self.head.W), ("head.b", self.head.b)]
        return out

    def norm_layers(self) -> list[tuple[str, GhostBatchNorm]]:
        out = []
        for gname, group in (
            ("attentive", self.attentive),
            ("transform1", self.transform1),
            ("transform2", self.transform2),
        ):
            for t, (_, bn) in enumerate(group):
                out.append((f"{gname}{t}", bn))
        return out

    def set_frozen_norm(self, frozen: bool) -> None:
        for _, bn in self.norm_layers():
            bn.frozen = frozen

    def _steps(self, x: Tensor, training: bool):
        n, d = x.shape
        prior = Tensor(np.ones((n, d)))
        masks = []
        contribs = []
        total = None
        for t in range(self.cfg.n_steps):
            lin_a, bn_a = self.attentive[t]
            scores = mul(prior, bn_a(lin_a(x), training))
            mask = sparsemax(scores)
            masks.append(mask)
            relaxed = add(scale(mask, -1.0), Tensor(np.full((n, d), self.cfg.relaxation)))
            prior = mul(prior, relaxed)

            lin1, bn1 = self.transform1[t]
            lin2, bn2 = self.transform2[t]
            h = relu(bn1(lin1(mul(x, mask)), training))
            h = relu(bn2(lin2(h), training))
            contrib = relu(h)
            contribs.append(contrib)
            total = contrib if total is None else add(total, contrib)
        return total, masks, contribs

    def forward(self, x: Tensor, training: bool,
                rng: np.random.Generator | None = None) -> Tensor:
        total, _, _ = self._steps(x, training)
        return self.head(total)

    def loss(self, x: Tensor, y: np.ndarray, training: bool,
             rng: np.random.Generator | None = None) -> Tensor:
        total, masks, _ = self._steps(x, training)
        out = mse(self.head(total), y)
        penalty = None
        for mask in masks:
            term = mask_entropy(mask)
            penalty = term if penalty is None else add(penalty, term)
        return add(out, scale(penalty, self.cfg.sparsity / self.cfg.n_steps))

    def predict(self, X) -> np.ndarray:
        out = self.forward(Tensor(np.asarray(X, dtype=np.float64)), False)
        return self.target_scaler.inverse(out.data[:, 0])

    def feature_importances(self, X) -> np.ndarray:
        """Masks aggregated over steps, weighted by step contribution magnitude.

        A step's magnitude for a sample is the absolute size of its share of
        the final prediction (its output through the linear head), so steps
        that barely influence the decision barely influence the importances.
        """
        x = Tensor(np.asarray(X, dtype=np.float64))
        _, masks, contribs = self._steps(x, False)
        head_w = self.head.W.data[:, 0]
        agg = np.zeros(x.shape[1])
        for mask, contrib in zip(masks, contribs):
            weight = np.abs(contrib.data @ head_w)[:, None]
            agg += (mask.data * weight).sum(axis=0)
        total = agg.sum()
        return agg / total if total > 0 else np.full(x.shape[1], 1.0 / x.shape[1])


_NULL_RNG = np.random.default_rng(0)  # never consulted: dropout off in eval


def _epoch_batches(n: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def train_mlp(X, y, cfg: MlpConfig, seed: int) -> MlpNet:
    return _train_fixed_epochs(MlpNet, X, y, cfg, seed)


def train_attention_mlp(X, y, cfg: MlpConfig, seed: int) -> AttentionMlpNet:
    return _train_fixed_epochs(AttentionMlpNet, X, y, cfg, seed)


def _train_fixed_epochs(net_cls, X, y, cfg: MlpConfig, seed: int):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(seed)
    net = net_cls(X.shape[1], cfg, rng)
    net.target_scaler = _TargetScaler(y)
    yt = net.target_scaler.forward(y)[:, None]
    opt = Adam(net.parameters(), lr=cfg.learning_rate)
    net.loss_curve = []
    for epoch in range(cfg.epochs):
        losses = []
        for idx in _epoch_batches(len(y), cfg.batch_size, rng):
            loss = net.loss(Tensor(X[idx]), yt[idx], True, rng)
            if not np.isfinite(loss.data):
                raise DivergenceError(epoch + 1)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
        net.loss_curve.append(float(np.mean(losses)))
    return net


def train_tabnet_lite(X, y, cfg: TabNetConfig, seed: int) -> TabNetLite:
    """Adam training with early stopping on a held-out validation fraction."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = np.random.default_rng(seed)
    net = TabNetLite(X.shape[1], cfg, rng)
    net.target_scaler = _TargetScaler(y)
    yt = net.target_scaler.forward(y)[:, None]

    n = len(y)
    n_val = max(1, round(n * cfg.validation_fraction)) if n >= 4 else 0
    perm = rng.permutation(n)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    Xtr, ytr = X[train_idx], yt[train_idx]
    Xval, yval = X[val_idx], yt[val_idx]

    opt = Adam(net.parameters(), lr=cfg.learning_rate)
    best_val = np.inf
    best_state = None
    stale = 0
    net.loss_curve = []
    net.epochs_run = 0
    for epoch in range(cfg.max_epochs):
        losses = []
        for idx in _epoch_batches(len(ytr), cfg.batch_size, rng):
            loss = net.loss(Tensor(Xtr[idx]), ytr[idx], True)
            if not np.isfinite(loss.data):
                raise DivergenceError(epoch + 1)
            opt.zero_grad()
            loss.backward()
            opt.step()
            losses.append(float(loss.data))
        net.loss_curve.append(float(np.mean(losses)))
        net.epochs_run = epoch + 1

        if n_val:
            val_pred = net.forward(Tensor(Xval), False).data
            val_mse = float(np.mean((val_pred - yval) ** 2))
        else:
            val_mse = net.loss_curve[-1]
        if val_mse < best_val:
            best_val = val_mse
            best_state = _snapshot(net)
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    if best_state is not None:
        _restore(net, best_state)
    return net


def _snapshot(net) -> dict:
    return {
        "params": [p.data.copy() for p in net.parameters()],
        "norm": [(bn.running_mean.copy(), bn.running_var.copy())
                 for _, bn in net.norm_layers()],
    }


def _restore(net, state: dict) -> None:
    for p, data in zip(net.parameters(), state["params"]):
        p.data = data.copy()
    for (_, bn), (mean, var) in zip(net.norm_layers(), state["norm"]):
        bn.running_mean = mean.copy()
        bn.running_var = var.copy()
