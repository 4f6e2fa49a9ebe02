"""Versioned JSON model documents: train/evaluate separation for every model kind."""

from __future__ import annotations

import json

import numpy as np

from . import classical
from .deep.networks import (
    AttentionMlpNet,
    MlpConfig,
    MlpNet,
    TabNetConfig,
    TabNetLite,
    _TargetScaler,
    train_attention_mlp,
    train_mlp,
    train_tabnet_lite,
)
from .errors import InvalidArgumentError
from .preprocessing import FittedPreprocessor

SCHEMA_VERSION = 1

CLASSICAL_KINDS = (
    "linear_regression",
    "decision_tree",
    "random_forest",
    "gradient_boosting",
    "knn",
)
DEEP_KINDS = ("mlp", "attention_mlp", "tabnet")
ALL_KINDS = CLASSICAL_KINDS + DEEP_KINDS


def train_model(kind: str, X, y, params: dict | None = None, seed: int = 0):
    """Fit a model of the given kind; ``params`` override the defaults."""
    params = dict(params or {})
    if kind == "linear_regression":
        return classical.fit_linear(X, y, **params)
    if kind == "decision_tree":
        return classical.fit_tree(X, y, **params)
    if kind == "random_forest":
        params.setdefault("seed", seed)
        return classical.fit_forest(X, y, **params)
    if kind == "gradient_boosting":
        return classical.fit_boosted(X, y, **params)
    if kind == "knn":
        return classical.fit_knn(X, y, **params)
    if kind == "mlp":
        return train_mlp(X, y, MlpConfig(**params), seed)
    if kind == "attention_mlp":
        return train_attention_mlp(X, y, MlpConfig(**params), seed)
    if kind == "tabnet":
        return train_tabnet_lite(X, y, TabNetConfig(**params), seed)
    raise InvalidArgumentError(f"unknown model kind {kind!r}")


def _net_state(net) -> dict:
    return {
        "params": {
            name: {"shape": list(p.data.shape), "data": p.data.reshape(-1).tolist()}
            for name, p in net.param_entries()
        },
        "norm": {name: bn.state() for name, bn in net.norm_layers()},
        "target_scaler": {
            "mean": net.target_scaler.mean,
            "std": net.target_scaler.std,
        },
    }


def _load_net_state(net, state: dict) -> None:
    for name, p in net.param_entries():
        entry = state["params"][name]
        p.data = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
    for name, bn in net.norm_layers():
        bn.load_state(state["norm"][name])
    scaler = _TargetScaler.__new__(_TargetScaler)
    scaler.mean = float(state["target_scaler"]["mean"])
    scaler.std = float(state["target_scaler"]["std"])
    net.target_scaler = scaler


def model_to_doc(kind: str, model, preprocessor: FittedPreprocessor | None = None) -> dict:
    doc: dict = {"schema_version": SCHEMA_VERSION, "kind": kind}
    if kind in CLASSICAL_KINDS:
        doc["state"] = model.to_doc()
    elif kind in ("mlp", "attention_mlp"):
        doc["config"] = {
            "hidden": list(model.cfg.hidden),
            "attention_hidden": model.cfg.attention_hidden,
            "dropout": model.cfg.dropout,
            "learning_rate": model.cfg.learning_rate,
            "batch_size": model.cfg.batch_size,
            "epochs": model.cfg.epochs,
        }
        doc["n_features"] = model.n_features
        doc["state"] = _net_state(model)
    elif kind == "tabnet":
        doc["config"] = {
            "n_steps": model.cfg.n_steps,
            "relaxation": model.cfg.relaxation,
            "sparsity": model.cfg.sparsity,
            "step_dim": model.cfg.step_dim,
            "batch_size": model.cfg.batch_size,
            "virtual_batch": model.cfg.virtual_batch,
            "max_epochs": model.cfg.max_epochs,
            "patience": model.cfg.patience,
            "learning_rate": model.cfg.learning_rate,
            "validation_fraction": model.cfg.validation_fraction,
        }
        doc["n_features"] = model.n_features
        doc["state"] = _net_state(model)
    else:
        raise InvalidArgumentError(f"unknown model kind {kind!r}")
    if preprocessor is not None:
        doc["preprocessor"] = preprocessor.to_doc()
    return doc


def model_from_doc(doc: dict):
    """Returns (kind, model, preprocessor or None)."""
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InvalidArgumentError(
            f"unsupported model document version {doc.get('schema_version')!r}"
        )
    kind = doc["kind"]
    rng = np.random.default_rng(0)  # init is overwritten below
    if kind == "linear_regression":
        model = classical.LinearModel.from_doc(doc["state"])
    elif kind == "decision_tree":
        model = classical.TreeModel.from_doc(doc["state"])
    elif kind == "random_forest":
        model = classical.ForestModel.from_doc(doc["state"])
    elif kind == "gradient_boosting":
        model = classical.BoostedModel.from_doc(doc["state"])
    elif kind == "knn":
        model = classical.KnnModel.from_doc(doc["state"])
    elif kind in ("mlp", "attention_mlp"):
        cfg_doc = dict(doc["config"])
        cfg_doc["hidden"] = tuple(cfg_doc["hidden"])
        cfg = MlpConfig(**cfg_doc)
        cls = MlpNet if kind == "mlp" else AttentionMlpNet
        model = cls(int(doc["n_features"]), cfg, rng)
        _load_net_state(model, doc["state"])
    elif kind == "tabnet":
        cfg = TabNetConfig(**doc["config"])
        model = TabNetLite(int(doc["n_features"]), cfg, rng)
        _load_net_state(model, doc["state"])
    else:
        raise InvalidArgumentError(f"unknown model kind {kind!r}")
    pre = (
        FittedPreprocessor.from_doc(doc["preprocessor"])
        if "preprocessor" in doc
        else None
    )
    return kind, model, pre


def save_model(path, kind: str, model, preprocessor=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_doc(kind, model, preprocessor), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_doc(json.load(fh))
