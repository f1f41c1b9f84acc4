"""Muckenhoupt-type weight functionals on the grid: A_p characteristics,
the Fujii-Wilson A_infty functional, power-weight families with exact cell
averages, and weighted L^p norms.

The supremum in every characteristic runs over the fixed test family of
grid-aligned intervals of dyadic length (2^m cells, any position); the full
O(N^2) enumeration over all grid intervals is kept available as an oracle
for small N.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sharpwt.gridfn import GridFunction

DYADIC_TEST_FAMILY = "grid-aligned intervals of dyadic length, any position"


@dataclass(frozen=True)
class PowerWeightSpec:
    """Closed-form family coeff * |x - center|^exponent, exponent > -1;
    evaluation is by exact cell averages, never midpoint samples, so cells
    containing the singularity carry their exact finite mass."""

    exponent: float
    center: float = 0.0
    coeff: float = 1.0

    def __post_init__(self):
        if self.exponent <= -1:
            raise ValueError("|x|^a is locally integrable only for a > -1")
        if self.coeff <= 0:
            raise ValueError("coefficient must be positive")

    def cell_averages(self, edges: np.ndarray) -> np.ndarray:
        return self.coeff * power_cell_averages(edges, self.exponent, self.center)

    def dual(self, p: float) -> "PowerWeightSpec | None":
        """The family of w^(-1/(p-1)), when it is again locally integrable."""
        a = -self.exponent / (p - 1.0)
        if a <= -1:
            return None
        return PowerWeightSpec(a, self.center, self.coeff ** (-1.0 / (p - 1.0)))

    def scaled(self, c: float) -> "PowerWeightSpec":
        return PowerWeightSpec(self.exponent, self.center, self.coeff * c)


class Weight:
    """Strictly positive grid function with cached prefix sums of w and of
    w^(-1/(p-1)) for every requested p.

    For a generic weight the dual side is formed cell-wise from the stored
    step values.  A weight declared through a PowerWeightSpec keeps its
    closed form, and the dual-exponent cell averages are then exact as well.
    """

    def __init__(self, base: GridFunction, power: PowerWeightSpec | None = None):
        if np.any(base.values <= 0):
            raise ValueError("weights must be strictly positive")
        self.base = base
        self.power = power
        self._prefix = np.concatenate(([0.0], np.cumsum(base.values)))
        self._sigma_prefix: dict[float, np.ndarray] = {}

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    @property
    def ncells(self) -> int:
        return self.base.ncells

    def mass(self, a: int, b: int) -> float:
        """w(Q) = integral of w over the cell range [a, b)."""
        return float(self.base.cell_width) * (self._prefix[b] - self._prefix[a])

    def scaled(self, c: float) -> "Weight":
        return Weight(
            self.base.with_values(c * self.values),
            self.power.scaled(c) if self.power is not None else None,
        )

    def sigma_values(self, p: float) -> np.ndarray:
        if self.power is not None:
            dual = self.power.dual(p)
            if dual is not None:
                return dual.cell_averages(self.base.cell_edges())
        return self.values ** (-1.0 / (p - 1.0))

    def sigma_prefix(self, p: float) -> np.ndarray:
        key = float(p)
        if key not in self._sigma_prefix:
            self._sigma_prefix[key] = np.concatenate(([0.0], np.cumsum(self.sigma_values(key))))
        return self._sigma_prefix[key]


def _dyadic_lengths(ncells: int):
    ln = 1
    while ln <= ncells:
        yield ln
        ln *= 2


def ap_characteristic(w: Weight, p: float) -> float:
    """sup over the test family of (avg_Q w) (avg_Q w^(-1/(p-1)))^(p-1)."""
    if p <= 1:
        raise ValueError("A_p requires p > 1")
    pw = w._prefix
    ps = w.sigma_prefix(p)
    best = 1.0
    for ln in _dyadic_lengths(w.ncells):
        avg_w = (pw[ln:] - pw[:-ln]) / ln
        avg_s = (ps[ln:] - ps[:-ln]) / ln
        best = max(best, float(np.max(avg_w * avg_s ** (p - 1.0))))
    return best


def ap_characteristic_full(w: Weight, p: float) -> float:
    """O(N^2) oracle: the same supremum over ALL grid-aligned intervals."""
    if p <= 1:
        raise ValueError("A_p requires p > 1")
    pw = w._prefix
    ps = w.sigma_prefix(p)
    best = 1.0
    for ln in range(1, w.ncells + 1):
        avg_w = (pw[ln:] - pw[:-ln]) / ln
        avg_s = (ps[ln:] - ps[:-ln]) / ln
        best = max(best, float(np.max(avg_w * avg_s ** (p - 1.0))))
    return best


def ainfty_fujii(w: Weight) -> float:
    """Fujii-Wilson functional: sup_Q (1/w(Q)) int_Q M(w chi_Q)."""
    from sharpwt.operators import maximal  # deferred: operators imports this module

    base = w.base
    h = float(base.cell_width)
    best = 0.0
    for ln in _dyadic_lengths(base.ncells):
        for a in range(0, base.ncells - ln + 1):
            chopped = np.zeros(base.ncells)
            chopped[a : a + ln] = base.values[a : a + ln]
            mf = maximal(base.with_values(chopped))
            ratio = h * float(np.sum(mf.values[a : a + ln])) / w.mass(a, a + ln)
            best = max(best, ratio)
    return best


def weighted_lp_norm(f: GridFunction, w: Weight, p: float) -> float:
    """(sum |f_i|^p w_i h)^(1/p) over the common grid."""
    if p < 1:
        raise ValueError("p must be >= 1")
    base = w.base
    if (
        f.level_L != base.level_L
        or f.resolution_s != base.resolution_s
        or f.origin != base.origin
    ):
        raise ValueError("function and weight live on different grids")
    h = float(f.cell_width)
    return float(np.sum(np.abs(f.values) ** p * w.values) * h) ** (1.0 / p)


def power_cell_averages(edges: np.ndarray, a: float, center: float = 0.0) -> np.ndarray:
    """Exact cell averages of |x - center|^a (a > -1) between consecutive edges.

    Cells straddling the singularity get the exact finite average, so power
    weights stay resolution-honest near the origin.
    """
    if a <= -1:
        raise ValueError("|x|^a is locally integrable only for a > -1")
    u = np.asarray(edges, dtype=float) - center
    anti = np.sign(u) * np.abs(u) ** (a + 1.0) / (a + 1.0)
    return np.diff(anti) / np.diff(edges)


def power_weight(level_L: int, resolution_s: int, a: float, origin=0, center: float = 0.0) -> Weight:
    """Weight with exact cell averages of |x - center|^a."""
    spec = PowerWeightSpec(a, center)
    probe = GridFunction(level_L, resolution_s, np.zeros(2 ** (level_L + resolution_s)), origin)
    return Weight(probe.with_values(spec.cell_averages(probe.cell_edges())), power=spec)
