"""Savings records, rank correlation and bootstrap intervals."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

QUANTILES = tuple(range(1, 100))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("spearman needs two equal-length vectors of length >= 2")
    rx = rankdata(x) - (x.size + 1) / 2
    ry = rankdata(y) - (y.size + 1) / 2
    denom = np.sqrt(np.dot(rx, rx) * np.dot(ry, ry))
    if denom == 0:
        raise ValueError("rank variance is zero")
    return float(np.clip(np.dot(rx, ry) / denom, -1.0, 1.0))


def bootstrap_ci(daily, n_boot: int = 1000, alpha: float = 0.05, seed: int = 0) -> tuple[float, float]:
    """Percentile interval for an annual total resampled over days."""
    daily = np.asarray(daily, dtype=float)
    if daily.size < 2:
        raise ValueError("need at least two days")
    if n_boot < 1:
        raise ValueError("n_boot must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, daily.size, size=(n_boot, daily.size))
    totals = daily[idx].sum(axis=1)
    lo, hi = np.quantile(totals, [alpha / 2, 1 - alpha / 2])
    return float(lo), float(hi)


@dataclass(frozen=True)
class SavingsRecord:
    household_id: str
    policy: str
    z: float
    b_bl: float
    b_n: float
    s_a_lo: float = float("nan")
    s_a_hi: float = float("nan")

    @property
    def s_a(self) -> float:
        return self.b_bl - self.b_n

    @property
    def s_n(self) -> float:
        return self.s_a / self.z

    @property
    def s_n_lo(self) -> float:
        return self.s_a_lo / self.z

    @property
    def s_n_hi(self) -> float:
        return self.s_a_hi / self.z


def savings_table(bills: dict, policy: str, *, n_boot: int = 1000, alpha: float = 0.05,
                  seed: int = 0) -> list[SavingsRecord]:
    """One record per household, sorted by id, with bootstrap intervals.

    ``bills`` maps household id to :class:`~dervalue.household.Bill`. Days
    are resampled jointly for the baseline and with-technology bills.
    """
    out = []
    for hid in sorted(bills):
        b = bills[hid]
        lo = hi = float("nan")
        if n_boot:
            lo, hi = bootstrap_ci(b.baseline_daily - b.result.daily_costs, n_boot, alpha, seed)
        out.append(SavingsRecord(hid, str(policy), b.z, b.baseline, b.with_tech, lo, hi))
    return out


def ranked(records, metric: str = "s_n") -> list[SavingsRecord]:
    """Records in decreasing order of ``metric``."""
    return sorted(records, key=lambda r: (-getattr(r, metric), r.household_id))


def savings_quantiles(records, metric: str, qs=QUANTILES) -> list[tuple[int, float]]:
    vals = np.array([getattr(r, metric) for r in records])
    return list(zip(qs, np.percentile(vals, qs).tolist()))


def correlation_matrix(by_policy: dict, metrics=("s_n", "s_a")) -> list[tuple[str, str, str, float]]:
    """Spearman ``r_s`` for every pair of policies and each metric.

    Also reports absolute vs normalized savings within each policy (metric
    ``s_a_vs_s_n``). Households must match across policies.
    """
    rows = []
    policies = sorted(by_policy)
    for metric in metrics:
        for px, py in itertools.combinations(policies, 2):
            x = {r.household_id: getattr(r, metric) for r in by_policy[px]}
            y = {r.household_id: getattr(r, metric) for r in by_policy[py]}
            ids = sorted(set(x) & set(y))
            rows.append((px, py, metric, spearman([x[i] for i in ids], [y[i] for i in ids])))
    for p in policies:
        recs = by_policy[p]
        rows.append((p, p, "s_a_vs_s_n", spearman([r.s_a for r in recs], [r.s_n for r in recs])))
    return rows
