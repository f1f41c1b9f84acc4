"""The intrinsic square function machinery: the sup over a discretized
Hölder class evaluated per upper-half-plane node by a small linear program
(or a fixed feasible dictionary giving certified lower bounds), one shared
Carleson-box quadrature, and the cone / box aggregations built on it.

The discrete class: piecewise-linear kernels on q uniform nodes in [-1, 1],
pinned to zero at both endpoints, mean-zero in the exact trapezoid sense
(which is the exact integral of the interpolant), with the Hölder bound
enforced on all node pairs.  The objective f * phi_t(y) is linear in the
node values with coefficients given by exact integrals of the transported
hat basis against the step function f.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog

from sharpwt.gridfn import GridFunction


@dataclass(frozen=True)
class HolderKernel:
    """A feasible member of the discretized Hölder class."""

    alpha: float
    samples: np.ndarray  # length q, endpoints zero

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def q(self) -> int:
        return self.samples.size

    def nodes(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.q)

    def holder_excess(self) -> float:
        """max over node pairs of |phi_u - phi_v| - |u - v|^alpha (<= 0 iff feasible)."""
        u = self.nodes()
        worst = -np.inf
        for lag in range(1, self.q):
            gap = (u[lag] - u[0]) ** self.alpha
            worst = max(worst, float(np.max(np.abs(self.samples[lag:] - self.samples[:-lag]))) - gap)
        return worst

    def trapezoid_mean(self) -> float:
        w = _trapezoid_weights(self.q)
        return float(np.dot(w, self.samples))


def _trapezoid_weights(q: int) -> np.ndarray:
    h = 2.0 / (q - 1)
    w = np.full(q, h)
    w[0] = w[-1] = h / 2.0
    return w


class HolderClass:
    """Constraint system for the discretized class at fixed (alpha, q), with
    an exact LP evaluator and an 8-kernel feasible dictionary."""

    def __init__(self, alpha: float, q: int):
        if not 0 < alpha <= 1:
            raise ValueError("alpha must lie in (0, 1]")
        if q < 3:
            raise ValueError("need at least 3 sample nodes")
        self.alpha = float(alpha)
        self.q = int(q)
        self.nodes = np.linspace(-1.0, 1.0, q)
        rows, rhs = [], []
        for i in range(q):
            for j in range(i + 1, q):
                bound = (self.nodes[j] - self.nodes[i]) ** self.alpha
                row = np.zeros(q)
                row[i], row[j] = 1.0, -1.0
                rows.append(row.copy())
                rhs.append(bound)
                rows.append(-row)
                rhs.append(bound)
        self._a_ub = np.array(rows)
        self._b_ub = np.array(rhs)
        self._a_eq = _trapezoid_weights(q)[None, :]
        self._bounds = [(0.0, 0.0)] + [(-2.0, 2.0)] * (q - 2) + [(0.0, 0.0)]
        self._dictionary: np.ndarray | None = None

    def lp_sup(self, c: np.ndarray) -> float:
        """Exact max of |c . phi| over the class (the feasible set is
        symmetric under negation, so one LP suffices)."""
        scale = float(np.max(np.abs(c)))
        if scale == 0.0:
            return 0.0
        res = linprog(
            -np.asarray(c, dtype=float) / scale,
            A_ub=self._a_ub,
            b_ub=self._b_ub,
            A_eq=self._a_eq,
            b_eq=[0.0],
            bounds=self._bounds,
            method="highs",
            options={
                "primal_feasibility_tolerance": 1e-10,
                "dual_feasibility_tolerance": 1e-10,
            },
        )
        if res.status != 0:
            raise RuntimeError(f"holder-class LP failed: {res.message}")
        return max(-res.fun * scale, 0.0)

    def dictionary(self) -> np.ndarray:
        """8 precomputed feasible kernels: scaled odd sine bumps and
        mean-zero differences of even ones; values are certified lower
        bounds for the class supremum by feasibility."""
        if self._dictionary is None:
            u = self.nodes
            raw = [np.sin(k * np.pi * u) for k in (1, 2, 3, 4)]
            evens = {k: np.sin(k * np.pi * u) ** 2 for k in (1, 2, 3, 4)}
            for a, b in ((1, 2), (1, 3), (2, 3), (1, 4)):
                raw.append(evens[a] - evens[b])
            w = _trapezoid_weights(self.q)
            ref = evens[1]
            entries = []
            for v in raw:
                v = v.astype(float)
                v[0] = v[-1] = 0.0  # np.sin(k pi) is only zero to rounding
                for _ in range(2):  # drive the trapezoid mean to rounding level
                    v = v - (np.dot(w, v) / np.dot(w, ref)) * ref
                v[0] = v[-1] = 0.0
                rho = max(
                    float(np.max(np.abs(v[lag:] - v[:-lag]))) / (u[lag] - u[0]) ** self.alpha
                    for lag in range(1, self.q)
                )
                entries.append(v / rho)
            self._dictionary = np.array(entries)
        return self._dictionary

    def dictionary_kernels(self) -> list[HolderKernel]:
        return [HolderKernel(self.alpha, row) for row in self.dictionary()]

    def dict_sup(self, c: np.ndarray) -> float:
        return float(np.max(np.abs(self.dictionary() @ c)))


@lru_cache(maxsize=8)
def _holder_class(alpha: float, q: int) -> HolderClass:
    return HolderClass(alpha, q)


def _hat_cdf(xi: np.ndarray) -> np.ndarray:
    """CDF of the unit hat max(0, 1-|x|), clamped outside [-1, 1]."""
    xi = np.clip(xi, -1.0, 1.0)
    return np.where(xi <= 0, (1.0 + xi) ** 2 / 2.0, 1.0 - (1.0 - xi) ** 2 / 2.0)


def hat_coefficients(f: GridFunction, y: float, t: float, q: int) -> np.ndarray:
    """c_i = int f(y - t u) B_i(u) du for the piecewise-linear hat basis;
    exact for step f (hat CDF evaluated at transported cell edges)."""
    h_node = 2.0 / (q - 1)
    wh = t * h_node
    edges = f.cell_edges()
    a = max(int(np.searchsorted(edges, y - t - wh, "right")) - 1, 0)
    b = min(int(np.searchsorted(edges, y + t + wh, "left")), f.ncells)
    if b <= a:
        return np.zeros(q)
    z_centers = y - t * np.linspace(-1.0, 1.0, q)
    xi = (edges[None, a : b + 1] - z_centers[:, None]) / wh
    cdf = _hat_cdf(xi)
    return h_node * (np.diff(cdf, axis=1) @ f.values[a:b])


def holder_sup(f: GridFunction, y: float, t: float, alpha: float = 0.5, q: int = 17, mode: str = "lp") -> float:
    """A_alpha(f)(y, t): the class supremum of |f * phi_t(y)|."""
    if t <= 0:
        raise ValueError("t must be positive")
    cls = _holder_class(float(alpha), int(q))
    c = hat_coefficients(f, y, t, q)
    return cls.lp_sup(c) if mode == "lp" else cls.dict_sup(c)


# ---------------------------------------------------------------------------
# Carleson-box quadrature shared by every cone-type operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConeQuadrature:
    """Nodes (y, t) in the boxes T(Q) = Q x [l(Q)/2, l(Q)), one box per
    dyadic interval whose triple meets the domain, levels spanning the
    t-ladder [2^-s, 2^L).  nodes_per_box is the per-axis subdivision count
    (m gives m^2 midpoint nodes, weights summing to |T(Q)| = l^2/2)."""

    levels: tuple[int, ...]          # k values; box side = 2^-k
    box_ranges: tuple[tuple[int, int], ...]  # per level: j in [j_lo, j_hi]
    nodes_per_box: int = 1

    @staticmethod
    def for_grid(f: GridFunction, nodes_per_box: int = 1,
                 t_min_level: int | None = None, t_max_level: int | None = None) -> "ConeQuadrature":
        k_fine = f.resolution_s - 1 if t_min_level is None else t_min_level
        k_coarse = -f.level_L if t_max_level is None else t_max_level
        levels, ranges = [], []
        for k in range(k_coarse, k_fine + 1):
            side = 2.0**-k
            # 3Q = [(j-1) side, (j+2) side) must meet [origin, origin + 2^L)
            j_lo = int(np.floor(float(f.origin) / side)) - 1
            j_hi = int(np.ceil(float(f.domain_end) / side))
            while (j_lo + 2) * side <= float(f.origin):
                j_lo += 1
            while (j_hi - 1) * side >= float(f.domain_end):
                j_hi -= 1
            levels.append(k)
            ranges.append((j_lo, j_hi))
        return ConeQuadrature(tuple(levels), tuple(ranges), nodes_per_box)

    def refined(self, factor: int = 2) -> "ConeQuadrature":
        return ConeQuadrature(self.levels, self.box_ranges, self.nodes_per_box * factor)

    def level_nodes(self, k: int) -> tuple[np.ndarray, np.ndarray, float]:
        """Per-box node offsets (dy from the box's left edge), t values and
        the common weight; identical for every box of the level."""
        side = 2.0**-k
        m = self.nodes_per_box
        off = (np.arange(m) + 0.5) / m
        dy = off * side
        ts = side / 2.0 * (1.0 + off)
        weight = side * (side / 2.0) / (m * m)
        return dy, ts, weight

    def n_boxes(self) -> int:
        return sum(j_hi - j_lo + 1 for j_lo, j_hi in self.box_ranges)


class SquareFunctionEngine:
    """Evaluates a node functional once per quadrature node and aggregates
    it into the cone version (aperture beta, open or closed) and the box
    version sum_Q gamma_Q^2 chi_3Q; both use the identical node set, which
    makes the discrete sandwich G(beta=1) <= G~ <= G(beta=4, closed) exact.
    """

    def __init__(self, f: GridFunction, quad: ConeQuadrature, node_eval):
        self.f = f
        self.quad = quad
        # per level: arrays of y, t, weight, value
        self._levels: list[dict] = []
        for k, (j_lo, j_hi) in zip(quad.levels, quad.box_ranges):
            side = 2.0**-k
            dy, ts, weight = quad.level_nodes(k)
            boxes = np.arange(j_lo, j_hi + 1)
            ys = boxes[:, None] * side + dy[None, :]          # (nboxes, m)
            vals = np.empty((boxes.size, ts.size, ts.size))   # (box, iy, it)
            for bi in range(boxes.size):
                for iy in range(ts.size):
                    for it in range(ts.size):
                        vals[bi, iy, it] = node_eval(float(ys[bi, iy]), float(ts[it]))
            self._levels.append(
                {"k": k, "side": side, "j_lo": j_lo, "ys": ys, "ts": ts,
                 "weight": weight, "vals": vals}
            )

    def gamma_sq(self) -> list[tuple[int, int, float]]:
        """(level k, index j, gamma_Q^2) for every box."""
        out = []
        for lev in self._levels:
            contrib = (lev["vals"] ** 2 * (lev["weight"] / lev["ts"][None, None, :] ** 2)).sum(axis=(1, 2))
            for i, g2 in enumerate(contrib):
                out.append((lev["k"], lev["j_lo"] + i, float(g2)))
        return out

    def g_tilde(self) -> GridFunction:
        centers = self.f.cell_centers()
        acc = np.zeros(self.f.ncells + 1)
        for k, j, g2 in self.gamma_sq():
            side = 2.0**-k
            lo = (j - 1) * side
            hi = (j + 2) * side
            a = int(np.searchsorted(centers, lo, "left"))
            b = int(np.searchsorted(centers, hi, "left"))
            if b > a:
                acc[a] += g2
                acc[b] -= g2
        return self.f.with_values(np.sqrt(np.maximum(np.cumsum(acc[:-1]), 0.0)))

    def g_cone(self, beta: float, closed: bool = False) -> GridFunction:
        centers = self.f.cell_centers()
        acc = np.zeros(self.f.ncells + 1)
        lo_side = "left" if closed else "right"
        hi_side = "right" if closed else "left"
        for lev in self._levels:
            ys, ts, weight, vals = lev["ys"], lev["ts"], lev["weight"], lev["vals"]
            for bi in range(ys.shape[0]):
                for iy in range(ts.size):
                    y = ys[bi, iy]
                    for it in range(ts.size):
                        v = vals[bi, iy, it]
                        if v == 0.0:
                            continue
                        reach = beta * ts[it]
                        a = int(np.searchsorted(centers, y - reach, lo_side))
                        b = int(np.searchsorted(centers, y + reach, hi_side))
                        if b > a:
                            contrib = v * v * weight / ts[it] ** 2
                            acc[a] += contrib
                            acc[b] -= contrib
        return self.f.with_values(np.sqrt(np.maximum(np.cumsum(acc[:-1]), 0.0)))


def _lp_engine(f: GridFunction, quad: ConeQuadrature, alpha: float, q: int, mode: str) -> SquareFunctionEngine:
    cls = _holder_class(float(alpha), int(q))
    sup = cls.lp_sup if mode == "lp" else cls.dict_sup

    def node_eval(y: float, t: float) -> float:
        return sup(hat_coefficients(f, y, t, q))

    return SquareFunctionEngine(f, quad, node_eval)


def intrinsic_engine(f: GridFunction, alpha: float = 0.5, q: int = 17, quad: ConeQuadrature | None = None,
                     mode: str = "lp") -> SquareFunctionEngine:
    """Engine whose node functional is the Hölder-class supremum A_alpha."""
    if mode not in ("lp", "dictionary"):
        raise ValueError("mode must be 'lp' or 'dictionary'")
    if quad is None:
        quad = ConeQuadrature.for_grid(f)
    return _lp_engine(f, quad, alpha, q, mode)


def g_cone(f: GridFunction, alpha: float = 0.5, beta: float = 1.0, quad: ConeQuadrature | None = None,
           q: int = 17, mode: str = "lp", closed: bool = False) -> GridFunction:
    """Intrinsic square function over the aperture-beta cone."""
    return intrinsic_engine(f, alpha, q, quad, mode).g_cone(beta, closed=closed)


def g_tilde(f: GridFunction, alpha: float = 0.5, quad: ConeQuadrature | None = None,
            q: int = 17, mode: str = "lp") -> GridFunction:
    """Carleson-box variant: sum over boxes of gamma_Q^2 chi_3Q, same nodes."""
    return intrinsic_engine(f, alpha, q, quad, mode).g_tilde()
