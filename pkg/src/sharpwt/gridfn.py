"""Piecewise-constant functions on uniform grids over a dyadic interval,
with exact rearrangement, weighted median, local mean oscillation and the
dyadic local sharp maximal function.

Conventions: cells are half-open [x_i, x_i + h) of width h = 2^-s, the grid
origin is an integer multiple of h, and every function is extended by zero
outside its domain.  All measure-threshold comparisons are done in integer
cell counts (thresholds converted through Fraction), so strict-vs-non-strict
decisions in rearrangements are exact, never floating point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from sharpwt.dyadic import DyadicCube


@dataclass(frozen=True)
class MassPoint:
    """One entry of a mass distribution: a value carrying cellwidth*multiplicity."""

    value: float
    mass: float


class GridFunction:
    """Step function on [origin, origin + 2^L) with 2^(L+s) cells of width 2^-s."""

    def __init__(self, level_L: int, resolution_s: int, values, origin=0):
        if resolution_s < -level_L:
            raise ValueError("resolution must not be coarser than the domain")
        self.level_L = int(level_L)
        self.resolution_s = int(resolution_s)
        self.origin = Fraction(origin)
        ncells = 2 ** (level_L + resolution_s)
        vals = np.asarray(values, dtype=float)
        if vals.shape != (ncells,):
            raise ValueError(f"expected {ncells} cell values, got {vals.shape}")
        if (self.origin / self.cell_width).denominator != 1:
            raise ValueError("origin must be an integer multiple of the cell width")
        self.values = vals
        self.values.setflags(write=False)
        # eager prefix sums of f and |f|; integral over cells [a,b) is
        # h * (prefix[b] - prefix[a])
        self._prefix = np.concatenate(([0.0], np.cumsum(vals)))
        self._prefix_abs = np.concatenate(([0.0], np.cumsum(np.abs(vals))))

    # ---- geometry ----

    @property
    def ncells(self) -> int:
        return self.values.size

    @property
    def cell_width(self) -> Fraction:
        s = self.resolution_s
        return Fraction(1, 2**s) if s >= 0 else Fraction(2**-s)

    @property
    def domain_length(self) -> Fraction:
        L = self.level_L
        return Fraction(2**L) if L >= 0 else Fraction(1, 2**-L)

    @property
    def domain_end(self) -> Fraction:
        return self.origin + self.domain_length

    def cell_edges(self) -> np.ndarray:
        h = float(self.cell_width)
        return float(self.origin) + h * np.arange(self.ncells + 1)

    def cell_centers(self) -> np.ndarray:
        h = float(self.cell_width)
        return float(self.origin) + h * (np.arange(self.ncells) + 0.5)

    def cell_range(self, cube) -> tuple[int, int]:
        """Cell index range [a, b) of a resolution-aligned subinterval.

        `cube` may be a DyadicCube (n=1), an (a, b) index pair, or None for
        the whole domain.
        """
        if cube is None:
            return 0, self.ncells
        if isinstance(cube, DyadicCube):
            if cube.dim != 1:
                raise ValueError("grid functions are one-dimensional")
            lo, hi = cube.lower()[0], cube.upper()[0]
        elif isinstance(cube, tuple) and len(cube) == 2 and all(isinstance(v, (int, np.integer)) for v in cube):
            a, b = int(cube[0]), int(cube[1])
            if not 0 <= a < b <= self.ncells:
                raise ValueError(f"cell range ({a}, {b}) outside domain")
            return a, b
        else:
            raise TypeError(f"cannot interpret {cube!r} as a subinterval")
        h = self.cell_width
        a = (lo - self.origin) / h
        b = (hi - self.origin) / h
        if a.denominator != 1 or b.denominator != 1:
            raise ValueError(f"{cube} is not aligned to the grid")
        a, b = int(a), int(b)
        if not 0 <= a < b <= self.ncells:
            raise ValueError(f"{cube} is not contained in the domain")
        return a, b

    def cube_of_range(self, a: int, b: int) -> tuple[Fraction, Fraction]:
        """Real endpoints of the cell range [a, b)."""
        h = self.cell_width
        return self.origin + a * h, self.origin + b * h

    # ---- integrals ----

    def integral(self, a: int, b: int) -> float:
        return float(self.cell_width) * (self._prefix[b] - self._prefix[a])

    def integral_abs(self, a: int, b: int) -> float:
        return float(self.cell_width) * (self._prefix_abs[b] - self._prefix_abs[a])

    def average(self, cube=None) -> float:
        a, b = self.cell_range(cube)
        return (self._prefix[b] - self._prefix[a]) / (b - a)

    def mass_points(self, cube=None) -> list[MassPoint]:
        a, b = self.cell_range(cube)
        h = float(self.cell_width)
        vals, counts = np.unique(self.values[a:b], return_counts=True)
        return [MassPoint(float(v), h * int(c)) for v, c in zip(vals, counts)]

    # ---- serialization ----

    def to_json(self) -> dict:
        return {
            "level_L": self.level_L,
            "resolution_s": self.resolution_s,
            "origin": str(self.origin),
            "values": self.values.tolist(),
        }

    @staticmethod
    def from_json(obj: dict) -> "GridFunction":
        return GridFunction(
            obj["level_L"], obj["resolution_s"], obj["values"], Fraction(obj["origin"])
        )

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @staticmethod
    def load(path) -> "GridFunction":
        with open(path) as fh:
            return GridFunction.from_json(json.load(fh))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.level_L, self.resolution_s, values, self.origin)

    def to_csv_rows(self):
        h = float(self.cell_width)
        x0 = float(self.origin)
        for i, v in enumerate(self.values):
            yield x0 + (i + 0.5) * h, float(v)


def rearrangement_value(f: GridFunction, cube, t) -> float:
    """(f chi_Q)*(t) = inf{tau >= 0 : |{x in Q : |f(x)| > tau}| <= t}."""
    a, b = f.cell_range(cube)
    m = b - a
    tf = Fraction(t)
    if tf <= 0 or tf > (b - a) * f.cell_width:
        raise ValueError(f"t={t} outside (0, |Q|]")
    allowed = int(tf / f.cell_width)  # floor of a nonnegative Fraction
    if allowed >= m:
        return 0.0
    d = np.sort(np.abs(f.values[a:b]))[::-1]
    return float(d[allowed])


def median(f: GridFunction, cube=None) -> float:
    """Weighted median: a cell value m on Q with
    max(|{f > m}|, |{f < m}|) <= |Q|/2.

    The valid values are the lower and upper mid order statistics; we return
    the one of smaller absolute value (ties toward the lower).  This choice
    is deterministic and always satisfies |m| <= (f chi_Q)*(|Q|/2), which
    the one-sided tie-breaks do not.
    """
    a, b = f.cell_range(cube)
    m = b - a
    v = np.sort(f.values[a:b])
    lo, hi = float(v[(m + 1) // 2 - 1]), float(v[m // 2])
    return lo if abs(lo) <= abs(hi) else hi


def _osc_sorted(v: np.ndarray, k_min: int) -> float:
    # minimal half-width window over sorted values capturing >= k_min cells
    if k_min <= 1:
        return 0.0
    return float(np.min(v[k_min - 1 :] - v[: v.size - k_min + 1]) / 2.0)


def _window_count(lam, m: int) -> int:
    """ceil((1 - lam) * m) via exact Fraction arithmetic."""
    need = (1 - Fraction(lam)) * m
    k = int(need)
    if k < need:
        k += 1
    return k


def local_osc(f: GridFunction, cube, lam) -> float:
    """Local mean oscillation: inf_c ((f - c) chi_Q)*(lam |Q|).

    For a step function this equals half the width of the shortest value
    window capturing at least (1 - lam)|Q| of the mass.
    """
    lam = Fraction(lam)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    a, b = f.cell_range(cube)
    v = np.sort(f.values[a:b])
    return _osc_sorted(v, _window_count(lam, b - a))


def local_sharp_max_dyadic(f: GridFunction, cube=None, lam=Fraction(1, 4)) -> GridFunction:
    """M^{#,d}_{lam;Q0} f: per cell, the max of local_osc over the dyadic
    subcubes of Q0 containing the cell."""
    lam = Fraction(lam)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    a, b = f.cell_range(cube)
    m = b - a
    if m & (m - 1):
        raise ValueError("Q0 must contain a power-of-two number of cells")
    out = np.zeros(f.ncells)
    size = 2
    while size <= m:
        blocks = np.sort(f.values[a:b].reshape(m // size, size), axis=1)
        k = _window_count(lam, size)
        if k > 1:
            osc = (blocks[:, k - 1 :] - blocks[:, : size - k + 1]).min(axis=1) / 2.0
            np.maximum(out[a:b], np.repeat(osc, size), out=out[a:b])
        size *= 2
    return f.with_values(out)
