"""Model-human agreement metrics and residual/outlier reporting.

Residual sign convention is delta = mos - prediction: negative means the
model overestimated perceived quality.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np


@dataclass(frozen=True)
class AlignmentReport:
    mad: float
    mse: float
    rmse: float
    pearson_r: float
    spearman_rho: float
    n: int
    residuals: Dict[str, float]  # asset -> prediction - mos
    correlation_defined: bool = True

    def __post_init__(self):
        if abs(self.rmse - math.sqrt(self.mse)) > 1e-9:
            raise ValueError("rmse must equal sqrt(mse)")
        if self.n != len(self.residuals):
            raise ValueError("n must equal residual count")

    def to_dict(self) -> dict:
        return {
            "mad": self.mad,
            "mse": self.mse,
            "rmse": self.rmse,
            "pearson_r": self.pearson_r,
            "spearman_rho": self.spearman_rho,
            "n": self.n,
            "correlation_defined": self.correlation_defined,
            "residuals": dict(sorted(self.residuals.items())),
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    sv = values[order]
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    da = a - a.mean()
    db = b - b.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        return math.nan
    return float(da @ db) / denom


def evaluate(predictions: Dict[str, float], labels: Dict[str, float]) -> AlignmentReport:
    """MAD/MSE/RMSE plus Pearson and tie-aware Spearman correlations."""
    if set(predictions) != set(labels):
        missing = set(predictions) ^ set(labels)
        raise KeyError(f"prediction/label key sets differ: {sorted(missing)[:5]}")
    keys = sorted(predictions)
    if len(keys) < 3:
        raise ValueError(f"need n >= 3 pairs, got {len(keys)}")
    p = np.array([predictions[k] for k in keys], dtype=np.float64)
    m = np.array([labels[k] for k in keys], dtype=np.float64)
    resid = p - m
    mse = float(np.mean(resid ** 2))
    r = _pearson(p, m)
    rho = _pearson(_average_ranks(p), _average_ranks(m))
    defined = not (math.isnan(r) or math.isnan(rho))
    return AlignmentReport(
        mad=float(np.mean(np.abs(resid))),
        mse=mse,
        rmse=math.sqrt(mse),
        pearson_r=r,
        spearman_rho=rho,
        n=len(keys),
        residuals={k: float(v) for k, v in zip(keys, resid)},
        correlation_defined=defined,
    )


def compare_models(report_a: AlignmentReport, report_b: AlignmentReport) -> dict:
    """Per-metric deltas (a = old/baseline, b = new); improvement is
    (old - new) / old."""
    if set(report_a.residuals) != set(report_b.residuals):
        raise KeyError("reports cover different asset sets")
    out = {}
    for metric in ("mad", "mse", "rmse", "pearson_r", "spearman_rho"):
        old = getattr(report_a, metric)
        new = getattr(report_b, metric)
        entry = {"old": old, "new": new, "delta": new - old}
        if metric in ("mad", "mse", "rmse") and old != 0.0:
            entry["improvement_pct"] = (old - new) / old * 100.0
        out[metric] = entry
    return out


def outlier_report(
    report: AlignmentReport, k: int
) -> List[Tuple[str, float]]:
    """The k assets with the largest |residual|, reported as
    (asset, delta = mos - prediction), sorted by descending magnitude."""
    if k > report.n:
        raise ValueError(f"k={k} exceeds n={report.n}")
    deltas = [(a, -r) for a, r in report.residuals.items()]
    deltas.sort(key=lambda t: (-abs(t[1]), t[0]))
    return deltas[:k]
