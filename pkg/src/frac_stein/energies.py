"""Discrete energy functionals: L2(mu), H1, and fractional double-integral
seminorms with kernel |t-s|^(-(p*alpha+1)).

Two discretizations of the fractional energy are supported for grid paths:

* piecewise-constant: the path is frozen at the left node of each cell and the
  kernel is integrated exactly over cell pairs (valid for alpha < 1/p, where
  touching-cell weights stay finite);
* piecewise-linear: the path is interpolated linearly and the energy of the
  interpolant is integrated with tolerance-controlled quadrature; the
  same-cell blocks have closed forms and cross-cell blocks reduce to 1-D
  integrals in u = t - s.

The cell-pair moment integrals assembled here are shared by the shrinkage
operator construction, so one quadrature engine backs both.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from math import comb, factorial
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.linalg import toeplitz
from scipy.special import gammaln

from .processes import RealPath, TimeGrid

__all__ = [
    "MeasureSpec",
    "EnergySpec",
    "l2_energy",
    "h1_energy",
    "kernel_cell_weight",
    "kernel_double_integral",
    "gaussian_abs_moment",
    "fractional_energy",
    "pair_weight_matrix",
    "fractional_energy_batch",
    "pc_energy_batch",
    "pc_cross_batch",
    "pl_energy_batch",
    "l2_energy_batch",
    "h1_energy_batch",
    "energy_batch",
    "slope_gram",
    "brownian_pc_expectation",
    "brownian_pl_expectation",
]


@dataclass(frozen=True)
class MeasureSpec:
    """Finite Borel measure on [0, T]: Lebesgue, or a list of weighted atoms."""

    kind: str = "lebesgue"
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("lebesgue", "discrete"):
            raise ValueError(f"unknown measure kind: {self.kind!r}")
        if self.kind == "discrete":
            if not self.atoms:
                raise ValueError("discrete measure needs at least one atom")
            if any(w < 0 for _, w in self.atoms):
                raise ValueError("atom weights must be nonnegative")

    @classmethod
    def lebesgue(cls) -> "MeasureSpec":
        return cls("lebesgue")

    @classmethod
    def discrete(cls, atoms) -> "MeasureSpec":
        return cls("discrete", tuple((float(t), float(w)) for t, w in atoms))


@dataclass(frozen=True)
class EnergySpec:
    """Which risk functional to evaluate on grid paths."""

    kind: str
    alpha: Optional[float] = None
    p: Optional[float] = None
    regime: Optional[str] = None
    measure: MeasureSpec = MeasureSpec()

    def __post_init__(self):
        if self.kind not in ("l2", "h1", "wfrac"):
            raise ValueError(f"unknown energy kind: {self.kind!r}")
        if self.kind == "wfrac":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("alpha must lie in (0, 1)")
            if self.p is None or not self.p > 1.0:
                raise ValueError("p must lie in (1, inf)")
            if self.regime not in ("piecewise-constant", "piecewise-linear"):
                raise ValueError(
                    "regime must be piecewise-constant or piecewise-linear"
                )
            if self.regime == "piecewise-constant" and not self.alpha < 1.0 / self.p:
                raise ValueError(
                    "piecewise-constant regime requires alpha < 1/p"
                )

    @property
    def beta(self) -> float:
        return self.p * self.alpha + 1.0


def _trapezoid_weights(grid: TimeGrid) -> np.ndarray:
    w = np.zeros(grid.cells + 1)
    widths = grid.widths
    w[:-1] += 0.5 * widths
    w[1:] += 0.5 * widths
    return w


def l2_energy(diff: RealPath, measure: MeasureSpec = MeasureSpec()) -> float:
    """int |diff|^2 dmu: trapezoid for Lebesgue, interpolated point masses else."""
    return float(l2_energy_batch(diff.values[None, :], diff.grid, measure)[0])


def l2_energy_batch(
    values: np.ndarray, grid: TimeGrid, measure: MeasureSpec = MeasureSpec()
) -> np.ndarray:
    if measure.kind == "lebesgue":
        return (values * values) @ _trapezoid_weights(grid)
    times = np.array([t for t, _ in measure.atoms])
    weights = np.array([w for _, w in measure.atoms])
    if np.any(times < 0) or np.any(times > grid.horizon):
        raise ValueError("atom times must lie in [0, T]")
    # linear interpolation of the path at the atom times
    idx = np.clip(np.searchsorted(grid.nodes, times, side="right") - 1, 0, grid.cells - 1)
    frac = (times - grid.nodes[idx]) / grid.widths[idx]
    at_atoms = values[:, idx] * (1 - frac) + values[:, idx + 1] * frac
    return (at_atoms * at_atoms) @ weights


def h1_energy(path: RealPath) -> float:
    """Squared H1 seminorm of the piecewise-linear interpolant."""
    return float(h1_energy_batch(path.values[None, :], path.grid)[0])


def h1_energy_batch(values: np.ndarray, grid: TimeGrid) -> np.ndarray:
    increments = np.diff(values, axis=1)
    return (increments * increments) @ (1.0 / grid.widths)


def kernel_cell_weight(cell_s, cell_t, beta: float) -> float:
    """Exact int_a^b int_c^d (t-s)^(-beta) dt ds for cells [a,b], [c,d], b <= c.

    Touching cells (b == c) return +inf when beta >= 2 (non-integrable corner).
    beta = 2 uses the logarithmic antiderivative.
    """
    a, b = map(float, cell_s)
    c, d = map(float, cell_t)
    if not (a <= b and c <= d):
        raise ValueError("cells must be nondecreasing intervals")
    if b > c:
        raise ValueError("cells must be disjoint with the s-cell on the left")
    if not (1.0 < beta < 3.0):
        raise ValueError("kernel exponent must lie in (1, 3)")
    if a == b or c == d:
        return 0.0
    if b == c and beta >= 2.0:
        return math.inf
    if beta == 2.0:
        return math.log((c - a) * (d - b) / ((c - b) * (d - a)))
    expo = 2.0 - beta
    denom = (1.0 - beta) * (2.0 - beta)
    return ((d - a) ** expo - (d - b) ** expo - (c - a) ** expo + (c - b) ** expo) / denom


def kernel_double_integral(horizon: float, alpha: float) -> float:
    """int_0^T int_0^T |t-s|^(-2 alpha) dt ds; +inf for alpha >= 1/2."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    if alpha >= 0.5:
        return math.inf
    return 2.0 * horizon ** (2.0 - 2.0 * alpha) / ((1.0 - 2.0 * alpha) * (2.0 - 2.0 * alpha))


def gaussian_abs_moment(q: float) -> float:
    """E|Y|^q for standard normal Y: 2^(q/2) Gamma((q+1)/2) / sqrt(pi)."""
    if not q > 0:
        raise ValueError("moment order must be positive")
    return math.exp(0.5 * q * math.log(2.0) + gammaln((q + 1.0) / 2.0) - 0.5 * math.log(math.pi))


# ---------------------------------------------------------------------------
# cell-pair moment engine
# ---------------------------------------------------------------------------


def _phi_section(u: np.ndarray, i: int, j: int, h_x: float, h_y: float) -> np.ndarray:
    """int x^i (u-x)^j dx over x in [max(0, u-h_y), min(u, h_x)], vectorized."""
    u = np.asarray(u, dtype=float)
    lo = np.maximum(0.0, u - h_y)
    hi = np.minimum(u, h_x)
    acc = np.zeros_like(u)
    for b in range(j + 1):
        k = i + b + 1
        acc += comb(j, b) * ((-1.0) ** b) * u ** (j - b) * (hi**k - lo**k) / k
    return np.where(hi > lo, acc, 0.0)


@lru_cache(maxsize=200_000)
def _cross_moment(i: int, j: int, h_x: float, h_y: float, gap: float, beta: float) -> float:
    """int_0^{h_x} int_0^{h_y} x^i y^j (x + y + gap)^(-beta) dy dx.

    Divergent corner (gap == 0 and beta >= i + j + 2) returns +inf; callers
    must pair such moments with exactly-zero coefficients.
    """
    if gap == 0.0 and beta >= i + j + 2.0:
        return math.inf

    def integrand(u):
        return _phi_section(np.asarray(u), i, j, h_x, h_y) * (u + gap) ** (-beta)

    top = h_x + h_y
    breaks = sorted({min(h_x, h_y), max(h_x, h_y)} - {0.0, top})
    value, _ = integrate.quad(
        integrand, 0.0, top, points=breaks or None, limit=200, epsabs=1e-14, epsrel=1e-11
    )
    return value


def _signed_power_integral(lo: float, hi: float, a0: float, b0: float, p: float) -> float:
    """int_lo^hi |a0 + b0 x|^p dx (closed form, valid across sign changes)."""
    if b0 == 0.0:
        return abs(a0) ** p * (hi - lo)

    def anti(z):
        return math.copysign(abs(z) ** (p + 1.0), z) / (p + 1.0)

    return (anti(a0 + b0 * hi) - anti(a0 + b0 * lo)) / b0


def _pair_energy_quad(
    c0: float, s_left: float, s_right: float, h_x: float, h_y: float,
    gap: float, p: float, beta: float,
) -> float:
    """int over [0,h_x]x[0,h_y] of |c0 + s_left x + s_right y|^p (x+y+gap)^(-beta).

    Reduced to one dimension along u = x + y: the inner integral over the
    section is elementary for every p > 1.
    """
    b0 = s_left - s_right

    def inner(u_arr):
        u_arr = np.atleast_1d(np.asarray(u_arr, dtype=float))
        out = np.empty_like(u_arr)
        for k, u in enumerate(u_arr):
            lo = max(0.0, u - h_y)
            hi = min(u, h_x)
            if hi <= lo:
                out[k] = 0.0
                continue
            out[k] = _signed_power_integral(lo, hi, c0 + s_right * u, b0, p)
        return out * (u_arr + gap) ** (-beta)

    top = h_x + h_y
    breaks = sorted({min(h_x, h_y), max(h_x, h_y)} - {0.0, top})
    value, _ = integrate.quad(
        inner, 0.0, top, points=breaks or None, limit=200, epsabs=1e-13, epsrel=1e-10
    )
    return value


def _same_cell_constant(h: float, p: float, beta: float) -> float:
    """2 * int_{a<s<t<a+h} (t-s)^(p-beta) dt ds, the same-cell block up to |slope|^p."""
    expo = p - beta
    return 2.0 * h ** (expo + 2.0) / ((expo + 1.0) * (expo + 2.0))


# ---------------------------------------------------------------------------
# piecewise-constant machinery
# ---------------------------------------------------------------------------

_PAIR_WEIGHT_CACHE: dict = {}


def pair_weight_matrix(grid: TimeGrid, beta: float) -> np.ndarray:
    """Symmetric matrix of one-ordering kernel integrals over distinct cell pairs.

    Entry (k, l) is kernel_cell_weight(cell_k, cell_l, beta) for k < l, mirrored
    below the diagonal; the diagonal is zero.  Requires beta < 2 so that
    touching-cell entries are finite.
    """
    key = (grid.nodes.tobytes(), float(beta))
    cached = _PAIR_WEIGHT_CACHE.get(key)
    if cached is not None:
        return cached
    if not (1.0 < beta < 2.0):
        raise ValueError("pair weights need beta in (1, 2)")
    nodes = grid.nodes
    left = nodes[:-1]
    right = nodes[1:]
    expo = 2.0 - beta
    denom = (1.0 - beta) * (2.0 - beta)

    def g(x):
        return np.where(x > 0.0, np.power(x, expo, where=x > 0.0), 0.0) / denom

    # for cells k < l: a = left[k], b = right[k], c = left[l], d = right[l]
    d_a = right[None, :] - left[:, None]
    d_b = right[None, :] - right[:, None]
    c_a = left[None, :] - left[:, None]
    c_b = left[None, :] - right[:, None]
    with np.errstate(invalid="ignore"):
        omega = g(d_a) - g(d_b) - g(c_a) + g(c_b)
    omega = np.triu(omega, k=1)
    omega = omega + omega.T
    omega.setflags(write=False)
    _PAIR_WEIGHT_CACHE[key] = omega
    return omega


def pc_energy_batch(values: np.ndarray, grid: TimeGrid, alpha: float, p: float) -> np.ndarray:
    """Piecewise-constant fractional energy of each row: sum over ordered
    distinct cell pairs of |v_k - v_l|^p times the exact kernel integral."""
    beta = p * alpha + 1.0
    cell_values = values[:, :-1]  # left-node convention
    m = grid.cells
    if p == 2.0 and grid.is_uniform and m >= 256:
        return _pc_energy_uniform_p2(cell_values, grid, beta)
    omega = pair_weight_matrix(grid, beta)
    if p == 2.0:
        col = omega.sum(axis=1)
        t1 = (cell_values * cell_values) @ col
        t2 = np.einsum("rk,rk->r", cell_values @ omega, cell_values)
        return 2.0 * (t1 - t2)
    out = np.empty(values.shape[0])
    for r in range(values.shape[0]):
        diffs = np.abs(cell_values[r][:, None] - cell_values[r][None, :])
        out[r] = np.sum(diffs**p * omega)
    return out


def _pc_energy_uniform_p2(cell_values: np.ndarray, grid: TimeGrid, beta: float) -> np.ndarray:
    """FFT autocorrelation path: energy = 2 sum_d w_d sum_k (v_k - v_{k+d})^2."""
    m = grid.cells
    h = grid.horizon / m
    w = _uniform_pc_weights(m, h, beta)  # w[d], d = 1..m-1
    v2 = cell_values * cell_values
    prefix = np.cumsum(v2, axis=1)
    total = prefix[:, -1]
    n_fft = 1 << int(math.ceil(math.log2(2 * m)))
    spec = np.fft.rfft(cell_values, n=n_fft, axis=1)
    corr = np.fft.irfft(spec * np.conj(spec), n=n_fft, axis=1)[:, :m]
    d = np.arange(1, m)
    # sum_{k=1}^{m-d} v_k^2 = prefix[m-d-1]; sum v_{k+d}^2 = total - prefix[d-1]
    sq = prefix[:, m - d - 1] + (total[:, None] - prefix[:, d - 1])
    return 2.0 * (sq - 2.0 * corr[:, 1:]) @ w


@lru_cache(maxsize=256)
def _uniform_pc_weights_key(m: int, h: float, beta: float) -> bytes:
    d = np.arange(1, m, dtype=float)
    expo = 2.0 - beta
    denom = (1.0 - beta) * (2.0 - beta)
    w = ((d + 1) ** expo - 2.0 * d**expo + np.where(d > 1, (d - 1) ** expo, 0.0)) / denom
    return (w * h**expo).tobytes()


def _uniform_pc_weights(m: int, h: float, beta: float) -> np.ndarray:
    return np.frombuffer(_uniform_pc_weights_key(m, float(h), float(beta)))


def pc_cross_batch(
    a_values: np.ndarray, b_values: np.ndarray, grid: TimeGrid, alpha: float
) -> np.ndarray:
    """Piecewise-constant bilinear form sum_{k!=l} (a_k-a_l)(b_k-b_l) w_kl."""
    e_ab = pc_energy_batch(a_values + b_values, grid, alpha, 2.0)
    e_a = pc_energy_batch(a_values, grid, alpha, 2.0)
    e_b = pc_energy_batch(b_values, grid, alpha, 2.0)
    return 0.5 * (e_ab - e_a - e_b)


# ---------------------------------------------------------------------------
# piecewise-linear machinery
# ---------------------------------------------------------------------------

_PL_TABLE_CACHE: dict = {}


def _pl_moment_tables(m: int, h: float, beta: float, p: int) -> dict:
    """Distance tables M_ij[d] of cross-cell moments on a uniform grid.

    Entries at d = 1 that multiply a power of the (identically zero) adjacent
    node gap are stored as 0; that is exact for contiguous interpolants and
    removes the divergent corner moments.
    """
    key = (m, float(h), float(beta), int(p))
    cached = _PL_TABLE_CACHE.get(key)
    if cached is not None:
        return cached
    tables: dict = {}
    for i in range(p + 1):
        for j in range(p + 1 - i):
            if (j, i) in tables:
                arr = tables[(j, i)]
            else:
                arr = np.zeros(m)
                q = p - i - j
                for d in range(1, m):
                    if d == 1 and q >= 1:
                        continue
                    arr[d] = _cross_moment(i, j, h, h, (d - 1.0) * h, beta)
                arr.setflags(write=False)
            tables[(i, j)] = arr
    _PL_TABLE_CACHE[key] = tables
    return tables


def _strict_upper_toeplitz(table: np.ndarray) -> np.ndarray:
    m = table.size
    row = np.zeros(m)
    row[1:] = table[1:]
    return np.triu(toeplitz(np.zeros(m), row), k=1)


def pl_energy_batch(values: np.ndarray, grid: TimeGrid, alpha: float, p: float) -> np.ndarray:
    """Piecewise-linear fractional energy of each row on a uniform grid.

    Fast path for even integer p: the cross-cell integrals expand into
    polynomial moments, and every term reduces to a matrix product against a
    distance-Toeplitz weight.
    """
    if not grid.is_uniform:
        raise ValueError("batch piecewise-linear energies need a uniform grid")
    p_int = int(round(p))
    if p_int != p or p_int % 2 != 0 or p_int < 2:
        raise ValueError("batch piecewise-linear energies need even integer p")
    beta = p * alpha + 1.0
    m = grid.cells
    h = grid.horizon / m
    slopes = np.diff(values, axis=1) / h
    right = values[:, 1:]  # right node of cell k (the c0 origin side)
    left = values[:, :-1]  # left node of cell l
    tables = _pl_moment_tables(m, h, beta, p_int)

    same = _same_cell_constant(h, float(p_int), beta) * np.sum(
        np.abs(slopes) ** p_int, axis=1
    )
    cross = np.zeros(values.shape[0])
    for i in range(p_int + 1):
        for j in range(p_int + 1 - i):
            q = p_int - i - j
            coeff = factorial(p_int) // (factorial(i) * factorial(j) * factorial(q))
            w = _strict_upper_toeplitz(tables[(i, j)])
            si = slopes**i if i else np.ones_like(slopes)
            sj = slopes**j if j else np.ones_like(slopes)
            for e in range(q + 1):
                c = coeff * comb(q, e) * ((-1.0) ** (q - e))
                f = si * (right ** (q - e) if q - e else 1.0)
                g = sj * (left**e if e else 1.0)
                cross += c * np.einsum("rk,rk->r", f @ w, g)
    return same + 2.0 * cross


def _pl_energy_single_quad(values: np.ndarray, grid: TimeGrid, alpha: float, p: float) -> float:
    """Reference piecewise-linear energy for one path on any grid and any p > 1."""
    beta = p * alpha + 1.0
    nodes = grid.nodes
    widths = grid.widths
    slopes = np.diff(values) / widths
    total = float(np.sum(np.abs(slopes) ** p * _same_cell_constant_vec(widths, p, beta)))
    m = grid.cells
    for k in range(m):
        for l in range(k + 1, m):
            c0 = values[l] - values[k + 1]
            gap = nodes[l] - nodes[k + 1]
            total += 2.0 * _pair_energy_quad(
                c0, slopes[k], slopes[l], widths[k], widths[l], gap, p, beta
            )
    return total


def _same_cell_constant_vec(h: np.ndarray, p: float, beta: float) -> np.ndarray:
    expo = p - beta
    return 2.0 * h ** (expo + 2.0) / ((expo + 1.0) * (expo + 2.0))


def fractional_energy(
    path: RealPath, alpha: float, p: float, regime: str
) -> float:
    """Fractional seminorm (to the p-th power) of a grid path.

    piecewise-constant requires alpha < 1/p; piecewise-linear accepts any
    alpha in (0, 1) and evaluates the interpolant's energy to roughly 1e-6
    relative accuracy.
    """
    spec = EnergySpec("wfrac", alpha=alpha, p=p, regime=regime)
    values = path.values[None, :]
    if spec.regime == "piecewise-constant":
        return float(pc_energy_batch(values, path.grid, alpha, p)[0])
    p_int = int(round(p))
    if p_int == p and p_int % 2 == 0 and path.grid.is_uniform:
        return float(pl_energy_batch(values, path.grid, alpha, p)[0])
    return _pl_energy_single_quad(path.values, path.grid, alpha, p)


def fractional_energy_batch(
    values: np.ndarray, grid: TimeGrid, alpha: float, p: float, regime: str
) -> np.ndarray:
    if regime == "piecewise-constant":
        return pc_energy_batch(values, grid, alpha, p)
    return pl_energy_batch(values, grid, alpha, p)


def energy_batch(values: np.ndarray, grid: TimeGrid, spec: EnergySpec) -> np.ndarray:
    """Dispatch a stack of difference paths to the requested energy."""
    if spec.kind == "l2":
        return l2_energy_batch(values, grid, spec.measure)
    if spec.kind == "h1":
        return h1_energy_batch(values, grid)
    return fractional_energy_batch(values, grid, spec.alpha, spec.p, spec.regime)


# ---------------------------------------------------------------------------
# quadratic form of the piecewise-linear energy in slope coordinates
# ---------------------------------------------------------------------------


def slope_gram(nodes: np.ndarray, alpha: float) -> np.ndarray:
    """Matrix A with <A v, v> = piecewise-linear fractional energy (p = 2) of
    the path with slope v_k on cell k.

    Assembled per cell pair from the same moment integrals that back the
    energy quadrature; entries are symmetric by construction.
    """
    nodes = np.asarray(nodes, dtype=float)
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    beta = 2.0 * alpha + 1.0
    widths = np.diff(nodes)
    n = widths.size
    a = np.zeros((n, n))
    a[np.diag_indices(n)] = _same_cell_constant_vec(widths, 2.0, beta)
    for k in range(n):
        for l in range(k + 1, n):
            gap = nodes[l] - nodes[k + 1]
            h_x, h_y = widths[k], widths[l]
            m00 = _cross_moment(0, 0, h_x, h_y, gap, beta) if l > k + 1 else 0.0
            m10 = _cross_moment(1, 0, h_x, h_y, gap, beta) if l > k + 1 else 0.0
            m01 = _cross_moment(0, 1, h_x, h_y, gap, beta) if l > k + 1 else 0.0
            m20 = _cross_moment(2, 0, h_x, h_y, gap, beta)
            m02 = _cross_moment(0, 2, h_x, h_y, gap, beta)
            m11 = _cross_moment(1, 1, h_x, h_y, gap, beta)
            w = np.zeros(n)
            w[k + 1 : l] = widths[k + 1 : l]  # node gap = sum of interior increments
            a += 2.0 * m00 * np.outer(w, w)
            a[k, k] += 2.0 * m20
            a[l, l] += 2.0 * m02
            a[k, :] += 2.0 * m10 * w
            a[:, k] += 2.0 * m10 * w
            a[l, :] += 2.0 * m01 * w
            a[:, l] += 2.0 * m01 * w
            a[k, l] += 2.0 * m11
            a[l, k] += 2.0 * m11
    return a


# ---------------------------------------------------------------------------
# exact Brownian expectations of the discrete energies (test oracles and
# discretization offsets)
# ---------------------------------------------------------------------------


def brownian_pc_expectation(grid: TimeGrid, alpha: float) -> float:
    """Exact expectation of the piecewise-constant W^{alpha,2} energy of a
    Brownian path: sum over distinct cell pairs of |left-node gap| x weight."""
    omega = pair_weight_matrix(grid, 2.0 * alpha + 1.0)
    left = grid.nodes[:-1]
    gaps = np.abs(left[:, None] - left[None, :])
    return float(np.sum(gaps * omega))


def brownian_pl_expectation(grid: TimeGrid, alpha: float, p: float = 2.0) -> float:
    """Exact expectation of the piecewise-linear W^{alpha,p} energy (p = 2 or 4)
    of a Brownian interpolant on a uniform grid."""
    if not grid.is_uniform:
        raise ValueError("expectation formula needs a uniform grid")
    p_int = int(round(p))
    if p_int not in (2, 4):
        raise ValueError("p must be 2 or 4")
    beta = p * alpha + 1.0
    m = grid.cells
    h = grid.horizon / m
    tables = _pl_moment_tables(m, h, beta, p_int)
    d = np.arange(1, m)
    counts = (m - d).astype(float)
    gaps = (d - 1.0) * h
    # cross-cell pairs: slopes and the gap increment are independent centred
    # Gaussians, so odd moments drop and E c0^2 = gap, E s^2 = 1/h, E s^4 = 3/h^2
    if p_int == 2:
        cross = counts @ (
            gaps * tables[(0, 0)][1:]
            + (tables[(2, 0)][1:] + tables[(0, 2)][1:]) / h
        )
        same = m * _same_cell_constant(h, 2.0, beta) / h
    else:
        cross = 3.0 * counts @ (
            gaps**2 * tables[(0, 0)][1:]
            + 2.0 * gaps * (tables[(2, 0)][1:] + tables[(0, 2)][1:]) / h
            + (tables[(4, 0)][1:] + tables[(0, 4)][1:]) / h**2
            + 2.0 * tables[(2, 2)][1:] / h**2
        )
        same = m * 3.0 * _same_cell_constant(h, 4.0, beta) / h**2
    return float(same + 2.0 * cross)
