"""Trainable fusion: epsilon-SVR with RBF kernel mapping pooled features to a
0-100 quality score.

The dual is solved by sequential minimal optimization with most-violating-pair
selection, which is deterministic for a fixed row order (train() pre-sorts by
clip id) and small enough to audit against a dense reference on tiny
instances. Models serialize to versioned JSON.
"""

import itertools
import json
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .features import DEFAULT_CONFIG, FEATURE_NAMES, FeatureVector

MODEL_SCHEMA_VERSION = "tovqa-svr-1"
SCORE_RANGE = (0.0, 100.0)

DEFAULT_GRID = {
    "c": (1.0, 4.0, 16.0, 64.0),
    "gamma": (0.25, 0.5, 1.0, 2.0),
    "epsilon": (1.0, 2.5),
}


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, kkt_violation: float):
        super().__init__(message)
        self.kkt_violation = kkt_violation


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SvrHyperparams:
    c: float = 4.0
    gamma: float = 0.5
    epsilon: float = 1.0
    tol: float = 1e-6
    max_iter: int = 200_000

    def __post_init__(self):
        if self.gamma <= 0 or self.c <= 0 or self.epsilon < 0 or self.tol <= 0:
            raise ValueError(f"invalid hyperparameters: {self}")


@dataclass(frozen=True)
class TrainingRow:
    clip_id: str
    features: FeatureVector
    label: float

    def __post_init__(self):
        if not math.isfinite(self.label) or not 0.0 <= self.label <= 100.0:
            raise ValueError(f"label must be finite in [0, 100], got {self.label}")


@dataclass(frozen=True)
class TrainingSet:
    rows: Tuple[TrainingRow, ...]

    def __post_init__(self):
        ids = [r.clip_id for r in self.rows]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate clip identifiers: {dupes}")

    @classmethod
    def from_rows(cls, rows: Sequence[TrainingRow]) -> "TrainingSet":
        return cls(rows=tuple(rows))

    def feature_matrix(self) -> np.ndarray:
        return np.stack([r.features.as_array() for r in self.rows])

    def labels(self) -> np.ndarray:
        return np.array([r.label for r in self.rows], dtype=np.float64)

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class FeatureScaler:
    mins: Tuple[float, ...]
    maxs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs):
            raise ValueError("min/max length mismatch")
        if any(mx < mn for mn, mx in zip(self.mins, self.maxs)):
            raise ValueError("max < min for some feature")

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        mins = np.array(self.mins)
        span = np.array(self.maxs) - mins
        out = np.empty_like(x)
        const = span == 0.0
        out[:, const] = 0.5
        out[:, ~const] = (x[:, ~const] - mins[~const]) / span[~const]
        return out


def fit_scaler(training_set: TrainingSet) -> FeatureScaler:
    """Per-feature min/max on the training rows; constant features map to 0.5."""
    if len(training_set) == 0:
        raise ValueError("empty training set")
    if len(training_set) < 2:
        raise ValueError("need >= 2 rows to fit a scaler")
    m = training_set.feature_matrix()
    return FeatureScaler(
        mins=tuple(float(v) for v in m.min(axis=0)),
        maxs=tuple(float(v) for v in m.max(axis=0)),
    )


def rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def smo_solve(
    kernel: np.ndarray,
    y: np.ndarray,
    c: float,
    epsilon: float,
    tol: float,
    max_iter: int,
    track_objective: bool = False,
) -> dict:
    """Epsilon-SVR dual via pairwise coordinate updates on the 2n-variable
    box QP with most-violating-pair selection.

    Returns beta (alpha - alpha*), bias, dual objective, iteration count and
    the final KKT violation.
    """
    n = len(y)
    two_n = 2 * n
    s = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([epsilon - y, epsilon + y])
    kbig = np.tile(kernel, (2, 2))
    q = np.outer(s, s) * kbig
    theta = np.zeros(two_n)
    grad = p.copy()

    iterations = 0
    violation = math.inf
    neg_inf = -math.inf
    history = []
    for iterations in range(1, max_iter + 1):
        if track_objective:
            history.append(float(0.5 * theta @ (q @ theta) + p @ theta))
        crit = -s * grad
        up = ((s > 0) & (theta < c)) | ((s < 0) & (theta > 0))
        low = ((s < 0) & (theta < c)) | ((s > 0) & (theta > 0))
        i = int(np.argmax(np.where(up, crit, neg_inf)))
        j = int(np.argmin(np.where(low, crit, math.inf)))
        m_up = crit[i]
        m_low = crit[j]
        violation = m_up - m_low
        if violation <= tol:
            break
        base_i, base_j = i % n, j % n
        eta = kernel[base_i, base_i] + kernel[base_j, base_j] - 2.0 * kernel[base_i, base_j]
        cap_i = (c - theta[i]) if s[i] > 0 else theta[i]
        cap_j = theta[j] if s[j] > 0 else (c - theta[j])
        lam_max = min(cap_i, cap_j)
        lam = lam_max if eta <= 1e-15 else min(violation / eta, lam_max)
        theta[i] += s[i] * lam
        theta[j] -= s[j] * lam
        theta[i] = min(max(theta[i], 0.0), c)
        theta[j] = min(max(theta[j], 0.0), c)
        grad += lam * (s[i] * q[:, i] - s[j] * q[:, j])
    else:
        raise ConvergenceError(
            f"SMO did not converge in {max_iter} iterations "
            f"(KKT violation {violation:.3e} > tol {tol:.3e})",
            kkt_violation=float(violation),
        )

    violation = max(violation, 0.0)
    crit = -s * grad
    free = (theta > 1e-12 * c) & (theta < c * (1.0 - 1e-12))
    if free.any():
        bias = float(np.mean(crit[free]))
    else:
        up = ((s > 0) & (theta < c)) | ((s < 0) & (theta > 0))
        low = ((s < 0) & (theta < c)) | ((s > 0) & (theta > 0))
        lo = float(np.max(crit[up])) if up.any() else -math.inf
        hi = float(np.min(crit[low])) if low.any() else math.inf
        bias = (lo + hi) / 2.0
    beta = theta[:n] - theta[n:]
    objective = float(0.5 * theta @ (q @ theta) + p @ theta)
    result = {
        "beta": beta,
        "bias": bias,
        "objective": objective,
        "iterations": iterations,
        "kkt_violation": float(violation),
    }
    if track_objective:
        history.append(objective)
        result["objective_history"] = history
    return result


@dataclass(frozen=True)
class SvrModel:
    support_vectors: np.ndarray  # (n_sv, n_features), scaled space
    coefficients: np.ndarray  # dual coefficients (alpha - alpha*)
    bias: float
    hyperparams: SvrHyperparams
    scaler: FeatureScaler
    feature_config_version: str = DEFAULT_CONFIG.version
    clip_range: Tuple[float, float] = SCORE_RANGE
    training_info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if len(self.support_vectors) != len(self.coefficients):
            raise ValueError("support vector / coefficient count mismatch")
        if np.any(np.abs(self.coefficients) > self.hyperparams.c * (1 + 1e-9)):
            raise ValueError("dual coefficient exceeds the box bound")


def train(
    training_set: TrainingSet,
    hyperparams: SvrHyperparams = SvrHyperparams(),
    feature_config_version: str = DEFAULT_CONFIG.version,
) -> SvrModel:
    """Fit the fusion model. Rows are pre-sorted by clip id so the result is
    invariant to input ordering."""
    if len(training_set) < 4:
        raise ValueError(f"need >= 4 training rows, got {len(training_set)}")
    rows = sorted(training_set.rows, key=lambda r: r.clip_id)
    ordered = TrainingSet.from_rows(rows)
    x = ordered.feature_matrix()
    y = ordered.labels()
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature values in training set")
    scaler = fit_scaler(ordered)
    xs = scaler.transform(x)
    k = rbf_kernel(xs, xs, hyperparams.gamma)
    result = smo_solve(
        k, y, hyperparams.c, hyperparams.epsilon, hyperparams.tol, hyperparams.max_iter
    )
    beta = result["beta"]
    sv_mask = beta != 0.0
    return SvrModel(
        support_vectors=xs[sv_mask].copy(),
        coefficients=beta[sv_mask].copy(),
        bias=result["bias"],
        hyperparams=hyperparams,
        scaler=scaler,
        feature_config_version=feature_config_version,
        training_info={
            "n_rows": len(ordered),
            "iterations": result["iterations"],
            "kkt_violation": result["kkt_violation"],
            "dual_objective": result["objective"],
        },
    )


def predict(model: SvrModel, features, feature_config_version: Optional[str] = None) -> float:
    """Score one pooled feature vector with the trained model."""
    if feature_config_version is not None and (
        feature_config_version != model.feature_config_version
    ):
        raise ValueError(
            f"feature config mismatch: model has {model.feature_config_version!r}, "
            f"input has {feature_config_version!r}"
        )
    if isinstance(features, FeatureVector):
        x = features.as_array()
    else:
        x = np.asarray(features, dtype=np.float64)
    if x.shape != (len(FEATURE_NAMES),):
        raise ValueError(f"expected {len(FEATURE_NAMES)} features, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite feature values")
    xs = model.scaler.transform(x)
    raw = model.bias
    if len(model.support_vectors):
        kv = rbf_kernel(xs, model.support_vectors, model.hyperparams.gamma)[0]
        raw = float(kv @ model.coefficients) + model.bias
    lo, hi = model.clip_range
    return min(max(raw, lo), hi)


def predict_many(model: SvrModel, feature_rows) -> np.ndarray:
    return np.array([predict(model, f) for f in feature_rows])


def _rmse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((a - b) ** 2)))


def grid_search(
    training_set: TrainingSet,
    folds: Sequence[Sequence[str]],
    grid: Optional[Dict[str, Sequence[float]]] = None,
    tol: float = 1e-6,
    max_iter: int = 200_000,
) -> SvrHyperparams:
    """Pick (C, gamma, epsilon) minimizing mean fold RMSE over scene-disjoint
    folds; ties break toward smaller C, then gamma, then epsilon."""
    grid = grid or DEFAULT_GRID
    if len(folds) < 2:
        raise ValueError(f"need >= 2 folds, got {len(folds)}")
    fold_sets = [frozenset(f) for f in folds]
    for a, b in itertools.combinations(fold_sets, 2):
        if a & b:
            raise ValueError(f"folds overlap: {sorted(a & b)}")
    by_id = {r.clip_id: r for r in training_set.rows}
    for f in fold_sets:
        fold_rows = [by_id[i] for i in f if i in by_id]
        if len(fold_rows) < 1:
            raise ValueError("fold with no training rows")

    best = None
    for c in sorted(grid["c"]):
        for gamma in sorted(grid["gamma"]):
            for epsilon in sorted(grid["epsilon"]):
                hp = SvrHyperparams(
                    c=c, gamma=gamma, epsilon=epsilon, tol=tol, max_iter=max_iter
                )
                fold_rmses = []
                for fold in fold_sets:
                    train_rows = [r for r in training_set.rows if r.clip_id not in fold]
                    val_rows = [r for r in training_set.rows if r.clip_id in fold]
                    model = train(TrainingSet.from_rows(train_rows), hp)
                    preds = predict_many(model, [r.features for r in val_rows])
                    fold_rmses.append(_rmse(preds, np.array([r.label for r in val_rows])))
                key = (float(np.mean(fold_rmses)), c, gamma, epsilon)
                if best is None or key < best[0]:
                    best = (key, hp)
    return best[1]


def save_model(model: SvrModel) -> bytes:
    doc = {
        "schema_version": MODEL_SCHEMA_VERSION,
        "feature_config": model.feature_config_version,
        "scaler": {"mins": list(model.scaler.mins), "maxs": list(model.scaler.maxs)},
        "hyperparams": {
            "c": model.hyperparams.c,
            "gamma": model.hyperparams.gamma,
            "epsilon": model.hyperparams.epsilon,
            "tol": model.hyperparams.tol,
            "max_iter": model.hyperparams.max_iter,
        },
        "support_vectors": [list(map(float, row)) for row in model.support_vectors],
        "coefficients": [float(v) for v in model.coefficients],
        "bias": model.bias,
        "clip_range": list(model.clip_range),
        "training_info": model.training_info,
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()


def load_model(payload: bytes) -> SvrModel:
    try:
        doc = json.loads(payload.decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupted model payload: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = doc.get("schema_version")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"unsupported model schema {version!r} (expected {MODEL_SCHEMA_VERSION!r})"
        )
    try:
        n_feat = len(FEATURE_NAMES)
        sv = np.array(doc["support_vectors"], dtype=np.float64).reshape(-1, n_feat)
        return SvrModel(
            support_vectors=sv,
            coefficients=np.array(doc["coefficients"], dtype=np.float64),
            bias=float(doc["bias"]),
            hyperparams=SvrHyperparams(**doc["hyperparams"]),
            scaler=FeatureScaler(
                mins=tuple(doc["scaler"]["mins"]), maxs=tuple(doc["scaler"]["maxs"])
            ),
            feature_config_version=doc["feature_config"],
            clip_range=tuple(doc["clip_range"]),
            training_info=doc.get("training_info", {}),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupted model payload: {exc}") from exc


def load_default_model() -> SvrModel:
    """The frozen generic baseline shipped with the package (analogous to a
    stock pretrained model)."""
    from importlib import resources

    data = resources.files("tovqa").joinpath("models/default_model.json").read_bytes()
    return load_model(data)


def with_retrained_info(model: SvrModel, **info) -> SvrModel:
    return replace(model, training_info={**model.training_info, **info})
