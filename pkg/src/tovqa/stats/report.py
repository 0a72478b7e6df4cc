"""Structured analysis reports: compression effects across CRF levels and
environmental-category effects, following the study's decision tree
(normality gate, then parametric or rank-based battery)."""

import itertools
from typing import Dict, List, Sequence

import numpy as np

from . import inference

ALPHA_DEFAULT = 0.05


def _group_summary(key, values, min_shapiro_n: int = 3) -> dict:
    arr = np.asarray(values, dtype=np.float64)
    entry = {
        "group": key,
        "n": int(len(arr)),
        "mean": float(arr.mean()),
        "std": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
        "shapiro": None,
    }
    if len(arr) >= min_shapiro_n and arr.min() != arr.max():
        sw = inference.shapiro_wilk(arr)
        entry["shapiro"] = sw.to_dict()
    return entry


def compression_effect_report(
    labels_by_crf: Dict[int, Sequence[float]], alpha: float = ALPHA_DEFAULT
) -> dict:
    """Omnibus plus pairwise comparisons of MOS labels across CRF levels.

    If every CRF group passes Shapiro-Wilk normality, runs ANOVA with Tukey
    HSD; otherwise Kruskal-Wallis with Holm-adjusted pairwise Mann-Whitney.
    Cliff's delta is reported for every pair regardless of branch.
    """
    if len(labels_by_crf) < 2:
        raise ValueError(f"need >= 2 CRF groups, got {len(labels_by_crf)}")
    crfs = sorted(labels_by_crf)
    groups = [np.asarray(labels_by_crf[c], dtype=np.float64) for c in crfs]
    summaries = [_group_summary(c, g) for c, g in zip(crfs, groups)]

    pooled = np.concatenate(groups)
    degenerate = pooled.min() == pooled.max()

    normality_ok = all(
        s["shapiro"] is not None and s["shapiro"]["p_value"] > alpha
        for s in summaries
    )

    pairs = list(itertools.combinations(range(len(crfs)), 2))
    pairwise: List[dict] = []

    if degenerate:
        method = "degenerate"
        omnibus = {"statistic": "H", "value": 0.0, "p_value": 1.0}
        for i, j in pairs:
            pairwise.append(
                {
                    "pair": [crfs[i], crfs[j]],
                    "adjacent": j == i + 1,
                    "statistic": None,
                    "p_raw": 1.0,
                    "p_adjusted": 1.0,
                    "significant": False,
                    "cliffs_delta": 0.0,
                }
            )
    elif normality_ok:
        method = "anova_tukey"
        omnibus = inference.anova_oneway(groups).to_dict()
        tukey = inference.tukey_hsd(groups)
        by_pair = {t.detail["pair"]: t for t in tukey}
        for i, j in pairs:
            t = by_pair[(i, j)]
            d = inference.cliffs_delta(groups[i], groups[j]).value
            pairwise.append(
                {
                    "pair": [crfs[i], crfs[j]],
                    "adjacent": j == i + 1,
                    "statistic": {"name": "q", "value": t.value},
                    "p_raw": t.p_value,
                    "p_adjusted": t.p_value,  # Tukey is already family-wise
                    "significant": t.p_value < alpha,
                    "cliffs_delta": d,
                }
            )
    else:
        method = "kruskal_mannwhitney"
        omnibus = inference.kruskal_wallis(groups).to_dict()
        raw = []
        for i, j in pairs:
            mw = inference.mann_whitney(groups[i], groups[j])
            raw.append(mw)
        adjusted = inference.holm_adjust([m.p_value for m in raw])
        for (i, j), mw, p_adj in zip(pairs, raw, adjusted):
            d = inference.cliffs_delta(groups[i], groups[j]).value
            pairwise.append(
                {
                    "pair": [crfs[i], crfs[j]],
                    "adjacent": j == i + 1,
                    "statistic": {"name": "U", "value": mw.value},
                    "p_raw": mw.p_value,
                    "p_adjusted": p_adj,
                    "significant": p_adj < alpha,
                    "cliffs_delta": d,
                }
            )

    return {
        "report": "compression_effect",
        "unit_of_analysis": "per-asset MOS",
        "alpha": alpha,
        "method": method,
        "groups": summaries,
        "omnibus": omnibus,
        "pairwise": pairwise,
    }


def environment_effect_report(
    labels_by_category: Dict[str, Sequence[float]], alpha: float = ALPHA_DEFAULT
) -> dict:
    """Kruskal-Wallis across the environment categories plus Welch's t-tests
    on the weather (good vs bad) and daytime (day vs night) splits."""
    if len(labels_by_category) < 2:
        raise ValueError("need >= 2 categories")
    cats = sorted(labels_by_category)
    groups = {c: np.asarray(labels_by_category[c], dtype=np.float64) for c in cats}
    summaries = [_group_summary(c, g) for c, g in groups.items()]

    omnibus = inference.kruskal_wallis([groups[c] for c in cats]).to_dict()

    def merged(keys):
        present = [groups[k] for k in keys if k in groups]
        return np.concatenate(present) if present else np.array([])

    contrasts = {}
    good = merged(["day_good", "night_good"])
    bad = merged(["day_bad"])
    if len(good) >= 2 and len(bad) >= 2:
        contrasts["weather_good_vs_bad"] = inference.welch_t(good, bad).to_dict()
    day = merged(["day_good", "day_bad"])
    night = merged(["night_good"])
    if len(day) >= 2 and len(night) >= 2:
        contrasts["day_vs_night"] = inference.welch_t(day, night).to_dict()

    return {
        "report": "environment_effect",
        "unit_of_analysis": "per-asset MOS",
        "alpha": alpha,
        "groups": summaries,
        "omnibus": omnibus,
        "contrasts": contrasts,
    }
