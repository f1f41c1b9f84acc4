"""Classical operators on grid functions: Hardy-Littlewood and weighted
centered maximal functions, the dyadic (martingale) square function, the
continuous square functions built on a fixed polynomial bump, and truncated
/ maximal Hilbert transforms.

Every operator evaluates at cell centers.  Convolutions against the step
function are exact closed forms (polynomial antiderivatives, log terms), and
translation invariance of the grid turns them into single np.convolve calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from sharpwt.gridfn import GridFunction


# ---------------------------------------------------------------------------
# sliding-window machinery for maximal functions
# ---------------------------------------------------------------------------


def _trailing_max(s: np.ndarray, w: int) -> np.ndarray:
    """out[x] = max(s[max(0, x-w+1) : x+1]), block prefix/suffix trick."""
    n = s.size
    if w <= 1:
        return s.copy()
    nblocks = -(-n // w)
    padded = np.concatenate([s, np.full(nblocks * w - n, -np.inf)])
    a = padded.reshape(nblocks, w)
    left = np.maximum.accumulate(a, axis=1).ravel()[:n]
    right = np.maximum.accumulate(a[:, ::-1], axis=1)[:, ::-1].ravel()
    out = left.copy()
    idx = np.arange(w - 1, n)
    if idx.size:
        out[idx] = np.maximum(left[idx], right[idx - w + 1])
    return out


def maximal(f: GridFunction) -> GridFunction:
    """Grid Hardy-Littlewood maximal function: per cell, the sup of averages
    of |f| over grid-aligned dyadic-length intervals containing the cell."""
    v = np.abs(f.values)
    n = v.size
    out = v.copy()
    prefix = np.concatenate(([0.0], np.cumsum(v)))
    w = 2
    while w <= n:
        sums = (prefix[w:] - prefix[:-w]) / w
        ext = np.concatenate([sums, np.full(w - 1, -np.inf)])
        np.maximum(out, _trailing_max(ext, w), out=out)
        w *= 2
    return f.with_values(out)


def maximal_centered(f: GridFunction, nu) -> GridFunction:
    """M^c_nu f: per cell, sup over windows centered at the cell (dyadic
    radii, clipped to the domain) of (1/nu(Q)) int_Q |f| nu."""
    n = f.ncells
    num_pre = np.concatenate(([0.0], np.cumsum(np.abs(f.values) * nu.values)))
    den_pre = np.concatenate(([0.0], np.cumsum(nu.values)))
    idx = np.arange(n)
    out = np.abs(f.values).copy()  # radius 0
    r = 1
    while r < n:
        lo = np.clip(idx - r, 0, n)
        hi = np.clip(idx + r + 1, 0, n)
        np.maximum(out, (num_pre[hi] - num_pre[lo]) / (den_pre[hi] - den_pre[lo]), out=out)
        r *= 2
    return f.with_values(out)


def dyadic_square(f: GridFunction) -> GridFunction:
    """Martingale square function on the dyadic tree of the domain, root
    term included: S_d f(x)^2 = (avg f)^2 + sum (avg_Q f - avg_Qhat f)^2."""
    v = f.values
    n = v.size
    acc = np.full(n, float(np.mean(v)) ** 2)
    parent = np.full(1, np.mean(v))
    size = n // 2
    while size >= 1:
        avg = v.reshape(n // size, size).mean(axis=1)
        diff = avg - np.repeat(parent, 2)
        acc += np.repeat(diff * diff, size)
        parent = avg
        size //= 2
    return f.with_values(np.sqrt(acc))


# ---------------------------------------------------------------------------
# the fixed polynomial bump and its square functions
# ---------------------------------------------------------------------------


def _even_poly_integral(m: int) -> Fraction:
    """int_{-1}^{1} (1-x^2)^m dx as an exact rational."""
    # expand (1-x^2)^m by the binomial theorem; int x^{2j} = 2/(2j+1)
    from math import comb

    return sum(Fraction((-1) ** j * comb(m, j) * 2, 2 * j + 1) for j in range(m + 1))


@dataclass(frozen=True)
class PsiKernel:
    """psi(x) = (1-x^2)^2 - kappa (1-x^2)^3 on [-1,1], kappa fixed at build
    time so that the mean vanishes exactly (kappa = (16/15)/(32/35) = 7/6)."""

    kappa: Fraction = field(default_factory=lambda: _even_poly_integral(2) / _even_poly_integral(3))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = float(self.kappa)
        y = 1.0 - x * x
        out = y * y - k * y * y * y
        return np.where(np.abs(x) <= 1.0, out, 0.0)

    def cumulative(self, x) -> np.ndarray:
        """int_{-1}^{clamp(x)} psi; vanishes at both ends (zero mean)."""
        x = np.clip(np.asarray(x, dtype=float), -1.0, 1.0)
        k = float(self.kappa)
        # psi = (1-k) + (3k-2) x^2 + (1-3k) x^4 + k x^6
        c0, c2, c4, c6 = 1.0 - k, 3.0 * k - 2.0, 1.0 - 3.0 * k, k
        anti = c0 * x + c2 * x**3 / 3.0 + c4 * x**5 / 5.0 + c6 * x**7 / 7.0
        at_m1 = -(c0 + c2 / 3.0 + c4 / 5.0 + c6 / 7.0)
        return anti - at_m1

    def holder_seminorm(self, alpha: float, samples: int = 4001) -> float:
        """Numerical sup of |psi(u)-psi(v)| / |u-v|^alpha on a dense grid."""
        u = np.linspace(-1.0, 1.0, samples)
        vals = self(u)
        best = 0.0
        for lag in range(1, samples):
            num = np.abs(vals[lag:] - vals[:-lag])
            best = max(best, float(np.max(num)) / (u[lag] - u[0]) ** alpha)
        return best


PSI = PsiKernel()


def psi_convolve_at(f: GridFunction, y: float, t: float, psi: PsiKernel = PSI) -> float:
    """Exact f * psi_t(y) for step f, psi_t(x) = t^-1 psi(x/t)."""
    edges = f.cell_edges()
    a = max(int(np.searchsorted(edges, y - t, "right")) - 1, 0)
    b = min(int(np.searchsorted(edges, y + t, "left")), f.ncells)
    if b <= a:
        return 0.0
    w = psi.cumulative((y - edges[a : b + 1]) / t)
    return float(np.dot(f.values[a:b], -np.diff(w)))


def psi_convolve_grid(f: GridFunction, t: float, psi: PsiKernel = PSI) -> np.ndarray:
    """f * psi_t at every cell center, via one translation-invariant kernel."""
    h = float(f.cell_width)
    reach = int(np.ceil(t / h)) + 1
    d = np.arange(-reach, reach + 1)
    w = psi.cumulative((d[:, None] + np.array([0.5, -0.5])[None, :]) * h / t)
    return _conv_wide(f.values, w[:, 0] - w[:, 1])


def _conv_wide(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    if values.size > 4096:  # FFT path for large grids, direct sum below
        from scipy.signal import fftconvolve

        full = fftconvolve(values, kernel)
    else:
        full = np.convolve(values, kernel)
    start = (kernel.size - 1) // 2
    return full[start : start + values.size]


def s_psi(f: GridFunction, beta: float, quad, psi: PsiKernel = PSI, closed: bool = False) -> GridFunction:
    """Continuous square function over the cone of aperture beta, using the
    shared Carleson-box quadrature."""
    from sharpwt.intrinsic import SquareFunctionEngine

    engine = SquareFunctionEngine(f, quad, lambda y, t: abs(psi_convolve_at(f, y, t, psi)))
    return engine.g_cone(beta, closed=closed)


def g_psi(f: GridFunction, psi: PsiKernel = PSI, t_levels: tuple[int, int] | None = None) -> GridFunction:
    """Vertical square function g_psi: log-midpoint quadrature of
    int |f * psi_t(x)|^2 dt/t over the dyadic t-ladder."""
    if t_levels is None:
        t_levels = (-f.level_L, f.resolution_s)
    k_top, k_bot = t_levels
    acc = np.zeros(f.ncells)
    ln2 = np.log(2.0)
    for k in range(k_top, k_bot):  # octave [2^-k-1?, ...): t in [2^-k-1 .. ]
        t = float(np.sqrt(2.0) * 0.5**(k + 1))  # log-midpoint of [2^-(k+1), 2^-k)
        conv = psi_convolve_grid(f, t, psi)
        acc += conv * conv * ln2
    return f.with_values(np.sqrt(acc))


# ---------------------------------------------------------------------------
# Hilbert transform with truncated kernels
# ---------------------------------------------------------------------------


def truncation_ladder(f: GridFunction, extra_octaves: int = 1) -> list[Fraction]:
    """delta values: cell-width multiples h * 2^m spanning the domain."""
    h = f.cell_width
    return [h * 2**m for m in range(f.level_L + f.resolution_s + 1 + extra_octaves)]


def _hilbert_kernel(n: int, h: float, delta: float) -> np.ndarray:
    """k[d] = int over u in [(d-1/2)h, (d+1/2)h], |u|>delta, of du/u."""
    d = np.arange(-n, n + 1, dtype=float)
    a = (d - 0.5) * h
    b = (d + 0.5) * h
    out = np.zeros(d.size)
    # negative piece [a, min(b, -delta)]
    hi = np.minimum(b, -delta)
    m = a < hi
    out[m] += np.log(-hi[m]) - np.log(-a[m])
    # positive piece [max(a, delta), b]
    lo = np.maximum(a, delta)
    m = lo < b
    out[m] += np.log(b[m]) - np.log(lo[m])
    return out


def hilbert_truncated(f: GridFunction, delta) -> GridFunction:
    """Exact convolution of step f with (1/x) chi_{|x|>delta} at cell centers."""
    delta = float(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    h = float(f.cell_width)
    kernel = _hilbert_kernel(f.ncells, h, delta)
    return f.with_values(_conv_wide(f.values, kernel))


def hilbert(f: GridFunction) -> GridFunction:
    """Principal value resolved at grid scale: truncation at one cell width."""
    return hilbert_truncated(f, float(f.cell_width))


def hilbert_max(f: GridFunction) -> GridFunction:
    """T* f: max of |truncated transforms| over the delta ladder."""
    out = np.zeros(f.ncells)
    for delta in truncation_ladder(f):
        np.maximum(out, np.abs(hilbert_truncated(f, float(delta)).values), out=out)
    return f.with_values(out)
