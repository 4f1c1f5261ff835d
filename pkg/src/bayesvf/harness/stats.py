"""Final-score statistics: standard errors and Welch's two-sample t-test."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.special import betainc


class DegenerateVarianceError(ValueError):
    """Both samples have zero variance, so the t statistic is undefined."""


def standard_error(values: Sequence[float]) -> float:
    """Sample standard deviation (ddof=1) over sqrt(n)."""
    x = np.asarray(values, dtype=np.float64)
    if x.size < 2:
        raise ValueError("standard error needs at least two values")
    return float(np.std(x, ddof=1) / np.sqrt(x.size))


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided tail probability of Student's t via the regularized incomplete beta."""
    return float(min(1.0, betainc(0.5 * df, 0.5, df / (df + t * t))))


def welch_ttest(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float, float]:
    """Welch's unequal-variance t-test: ``(t, Welch-Satterthwaite df, two-sided p)``.

    ``t`` is positive when ``sample_a`` has the larger mean.
    """
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two elements")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    if va + vb == 0.0:
        raise DegenerateVarianceError("both samples have zero variance")
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return float(t), float(df), t_sf_two_sided(float(t), float(df))


@dataclass
class VariantSummary:
    n_seeds: int
    mean: float
    stderr: float
    scores: dict[int, float]


@dataclass
class Comparison:
    variant: str
    baseline: str
    difference: float
    t: Optional[float]
    df: Optional[float]
    p: Optional[float]
    significant: bool


@dataclass
class ComparisonReport:
    variants: dict[str, VariantSummary]
    baseline: Optional[str] = None
    comparisons: list[Comparison] = field(default_factory=list)
    alpha_level: float = 0.05

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        lines = [f"{'variant':<16} {'n':>3} {'mean':>12} {'stderr':>10} {'t':>8} {'p':>8} sig"]
        cmp = {c.variant: c for c in self.comparisons}
        for name, v in self.variants.items():
            c = cmp.get(name)
            t = "" if c is None or c.t is None else f"{c.t:8.3f}"
            p = "" if c is None or c.p is None else f"{c.p:8.4f}"
            sig = "*" if c is not None and c.significant else ""
            lines.append(f"{name:<16} {v.n_seeds:>3} {v.mean:>12.3f} {v.stderr:>10.3f} {t:>8} {p:>8} {sig}")
        return "\n".join(lines)


def summarize(final_scores: Mapping[str, Mapping[int, float]], baseline: Optional[str] = "deterministic",
              alpha_level: float = 0.05) -> ComparisonReport:
    """Mean +- standard error per variant and Welch tests against ``baseline``.

    ``final_scores`` maps variant name -> {seed: final score}. The baseline
    comparison is skipped when only one variant is present.
    """
    if not final_scores:
        raise ValueError("no variants to summarize")
    variants = {}
    for name, scores in final_scores.items():
        vals = [float(scores[s]) for s in sorted(scores)]
        if len(vals) < 2:
            raise ValueError(f"variant {name!r} has {len(vals)} seed(s); need at least 2")
        variants[name] = VariantSummary(len(vals), float(np.mean(vals)), standard_error(vals),
                                        {int(s): float(scores[s]) for s in sorted(scores)})
    report = ComparisonReport(variants, alpha_level=alpha_level)
    if len(variants) == 1:
        return report
    if baseline not in variants:
        raise ValueError(f"baseline variant {baseline!r} missing; have {sorted(variants)}")
    report.baseline = baseline
    base = variants[baseline]
    for name, v in variants.items():
        if name == baseline:
            continue
        diff = v.mean - base.mean
        try:
            t, df, p = welch_ttest(list(v.scores.values()), list(base.scores.values()))
        except DegenerateVarianceError:
            t = df = p = None
            if diff == 0.0:
                t, p = 0.0, 1.0
        report.comparisons.append(Comparison(name, baseline, diff, t, df, p, p is not None and p < alpha_level))
    return report
