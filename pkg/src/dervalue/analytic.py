"""One-period, two-type closed-form model of the value of coordination.

Every adopter generates ``e > 1``. Type A households consume ``e - 1`` and
type B consume ``e + 1``; a fraction ``p_a`` are type A and a fraction ``f``
of each type has adopted. Energy is bought at ``q`` and sold at ``r < q``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass


@dataclass(frozen=True)
class ToyParams:
    e: float
    p_a: float
    q: float
    r: float
    n: int
    f: float = 0.0

    def __post_init__(self):
        if not self.e > 1:
            raise ValueError("generation e must exceed 1")
        if not 0 <= self.p_a <= 1:
            raise ValueError("p_a must lie in [0, 1]")
        if not self.q > self.r >= 0:
            raise ValueError("prices must satisfy q > r >= 0")
        if not 0 <= self.f <= 1:
            raise ValueError("adoption fraction f must lie in [0, 1]")
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.p_a <= 0.5:
            warnings.warn(
                "p_a <= 1/2: the group never has a net surplus; only the brute-force "
                "enumeration is authoritative",
                stacklevel=2,
            )

    @property
    def f_star(self) -> float:
        """Adoption level where adopters' generation equals total load."""
        return (1 + self.e - 2 * self.p_a) / self.e

    @property
    def baseline(self) -> float:
        return self.n * self.q * (1 + self.e - 2 * self.p_a)

    def at(self, f: float) -> "ToyParams":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return ToyParams(self.e, self.p_a, self.q, self.r, self.n, f)


def toy_cost_separate(p: ToyParams) -> float:
    f, n, q, r, e, pa = p.f, p.n, p.q, p.r, p.e, p.p_a
    return (1 - f) * n * q * (e + 1 - 2 * pa) + f * n * ((1 - pa) * q - pa * r)


def toy_cost_coordinated(p: ToyParams) -> float:
    net = (1 + p.e - 2 * p.p_a - p.f * p.e) * p.n
    return net * (p.q if p.f <= p.f_star else p.r)


def regime(p: ToyParams) -> str:
    return "deficit" if p.f <= p.f_star else "surplus"


def toy_vca(p: ToyParams) -> tuple[float, float]:
    """Value of coordinated action in dollars and as a fraction of baseline."""
    f, n, q, r, e, pa = p.f, p.n, p.q, p.r, p.e, p.p_a
    if f <= p.f_star:
        dollars = f * n * pa * (q - r)
        frac = f * pa / (1 + e - 2 * pa) * (1 - r / q)
    else:
        dollars = n * (1 + e - 2 * pa - f * (e - pa)) * (q - r)
        frac = (1 - f * (e - pa) / (1 + e - 2 * pa)) * (1 - r / q)
    return dollars, frac


def _count(x: float, what: str) -> int:
    k = round(x)
    if abs(x - k) > 1e-9:
        raise ValueError(f"{what} = {x} is not a whole number of households")
    return k


def toy_brute(p: ToyParams) -> tuple[float, float]:
    """``(C_S, C_C)`` by pricing every household's bill one by one.

    Adopters are drawn proportionally from both types, so ``f*N*p_a`` and
    ``f*N`` must be whole numbers.
    """
    n_a = _count(p.n * p.p_a, "N*p_a")
    adopt_a = _count(p.f * p.n * p.p_a, "f*N*p_a")
    adopt = _count(p.f * p.n, "f*N")
    adopt_b = adopt - adopt_a
    households = (
        [("A", True)] * adopt_a
        + [("A", False)] * (n_a - adopt_a)
        + [("B", True)] * adopt_b
        + [("B", False)] * (p.n - n_a - adopt_b)
    )
    separate = 0.0
    net_total = 0.0
    for kind, adopted in households:
        load = p.e - 1 if kind == "A" else p.e + 1
        net = load - (p.e if adopted else 0.0)
        net_total += net
        separate += p.q * net if net >= 0 else p.r * net
    coordinated = p.q * net_total if net_total >= 0 else p.r * net_total
    return separate, coordinated


def vca_table(base: ToyParams, steps: int = 100):
    """Rows ``(f, vca, vca_frac, regime)`` on an even grid of ``f``."""
    rows = []
    for k in range(steps + 1):
        p = base.at(k / steps)
        dollars, frac = toy_vca(p)
        rows.append((p.f, dollars, frac, regime(p)))
    return rows

