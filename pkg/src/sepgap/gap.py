"""
Quantitative lower bound on the separable-versus-LOCC gap.

Everything here lives on the (x, y) plane of diagonal POVM parameters.
``gamma_pm`` defines the regions R+ and R-, ``delta`` the pointwise loss
relative to the separable optimum, and ``delta_low`` the resulting gap for
the conversion measure E_Q with the slope ``mu`` chosen at the star point.
``optimize_gap`` and ``sweep_figure2`` pick (r, alpha) to maximize it.
"""

import concurrent.futures
import functools
import io
import math
from dataclasses import dataclass

import numpy as np

from .measures import EQMeasure
from .separable import RAY_GUARD, SeparableElement, c_bound

FEASIBILITY_MARGIN = 1e-9
STAR_RESIDUAL = 1e-12
DEFAULT_GRID = 2001
SWEEP_Q = tuple(k / 20 for k in range(1, 20))

_Z = np.diag([1.0, -1.0])


class InfeasibleParameters(ValueError):
    pass


def r_min(q):
    return math.sqrt(q / (2.0 - q))


def alpha_max(q, r):
    return ((2.0 - q) * r * r - q) / 2.0


def check_feasible(q, r, alpha):
    """Raise :class:`InfeasibleParameters` naming the first violated constraint."""
    m = FEASIBILITY_MARGIN
    if not 0.0 < q < 1.0:
        raise InfeasibleParameters(f"Q must lie in (0, 1), got {q!r}")
    if not r > r_min(q) + m:
        raise InfeasibleParameters(f"r = {r!r} must exceed sqrt(Q/(2-Q)) = {r_min(q)!r}")
    if not r < 1.0 - m:
        raise InfeasibleParameters(f"r = {r!r} must be below 1")
    if not alpha > m:
        raise InfeasibleParameters(f"alpha = {alpha!r} must be positive")
    if not alpha < alpha_max(q, r) - m:
        raise InfeasibleParameters(
            f"alpha = {alpha!r} must be below ((2-Q) r^2 - Q)/2 = {alpha_max(q, r)!r}"
        )


def is_feasible(q, r, alpha):
    try:
        check_feasible(q, r, alpha)
    except InfeasibleParameters:
        return False
    return True


def gamma_pm(x, y, r, sign):
    """(x - r)(y + r) for sign=+1, (x + r)(y - r) for sign=-1."""
    if sign > 0:
        return (x - r) * (y + r)
    return (x + r) * (y - r)


def f_pm(g, r, sign):
    """Linear functional Tr[F G] / 4 with F = (Z -+ r) (x) (Z +- r).

    ``g`` is a :class:`SeparableElement` or a 4x4 matrix.
    """
    if isinstance(g, SeparableElement):
        g = g.matrix()
    s = 1.0 if sign > 0 else -1.0
    f = np.kron(_Z - s * r * np.eye(2), _Z + s * r * np.eye(2))
    return float(np.real(np.trace(f @ np.asarray(g)))) / 4.0


def in_enlarged_region(x, y, r, alpha, sign):
    return gamma_pm(x, y, r, sign) >= -alpha * (1.0 + x * y)


def in_enlarged_union(x, y, r, alpha):
    return in_enlarged_region(x, y, r, alpha, +1) | in_enlarged_region(x, y, r, alpha, -1)


def p_lower_prefactor(r, alpha):
    """Fraction of Q guaranteed to land in the enlarged regions."""
    return 2.0 * alpha / (1.0 - r * r + 2.0 * alpha) * (1.0 - r) / (1.0 + r)


def delta(x, y, m, q, mu):
    """Pointwise loss E(1-Q) - E(C(x,y)) - mu (1 - Q - (1-xy)/(1+xy)).

    Elementwise on arrays; raises on the ray 1 + xy = 0.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xy = x * y
    if np.any(1.0 + xy <= RAY_GUARD):
        raise ValueError("delta undefined where 1 + x*y vanishes")
    out = m(1.0 - q) - np.asarray(m(c_bound(x, y))) - mu * (1.0 - q - (1.0 - xy) / (1.0 + xy))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GapParams:
    q: float
    r: float
    alpha: float
    mu: float


@dataclass(frozen=True)
class StarPoint:
    x_star: float
    y_star: float
    mu_star: float


@dataclass(frozen=True)
class GapResult:
    params: GapParams
    star: StarPoint
    delta_min: float
    delta_low: float


def _boundary_y(x, r, alpha):
    """y on the branch x < r/(1+alpha) of gamma_+(x, y) = -alpha (1 + x y)."""
    return -(r * x - r * r + alpha) / (x * (1.0 + alpha) - r)


def _boundary_x(y, r, alpha):
    """Inverse of :func:`_boundary_y` on the same branch."""
    return (r * (y + r) - alpha) / (y * (1.0 + alpha) + r)


def _star_bracket(r, alpha):
    # y where the boundary meets y = -x and y = x inside the wedge -x <= y <= x
    x_anti = (r - np.sqrt(alpha * (1.0 + alpha - r * r))) / (1.0 + alpha)
    x_diag = np.sqrt((r * r - alpha) / (1.0 + alpha))
    return -x_anti, x_diag


def _star_residual(y, q, r, alpha):
    x = _boundary_x(y, r, alpha)
    num = np.sqrt(np.clip((1.0 - x) * (1.0 + x) * (1.0 - y) * (1.0 + y), 0.0, None))
    return num / (1.0 + x * y) - (1.0 - q)


def _bisect_star(q, r, alpha, max_iter=200):
    """Vectorized bisection of C = 1 - Q along the enlarged boundary.

    The boundary is parametrized by y; near Q -> 1 the x parametrization
    has a pole next to the root and loses precision.
    Returns the star point's (x, y).
    """
    lo, hi = _star_bracket(np.asarray(r, dtype=float), np.asarray(alpha, dtype=float))
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.astype(float).copy(), hi.astype(float).copy()
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        moved = (mid != lo) & (mid != hi)
        if not np.any(moved):
            break
        pos = _star_residual(mid, q, r, alpha) > 0.0
        lo = np.where(pos & moved, mid, lo)
        hi = np.where(~pos & moved, mid, hi)
    r_lo = np.abs(_star_residual(lo, q, r, alpha))
    r_hi = np.abs(_star_residual(hi, q, r, alpha))
    y = np.where(r_lo <= r_hi, lo, hi)
    return _boundary_x(y, r, alpha), y


def solve_star_point(q, r, alpha) -> StarPoint:
    """Point of the enlarged R+ boundary where the concurrence bound equals 1 - Q."""
    check_feasible(q, r, alpha)
    lo, hi = _star_bracket(r, alpha)
    if not (_star_residual(lo, q, r, alpha) > 0.0 > _star_residual(hi, q, r, alpha)):
        raise ArithmeticError(f"no sign change for the star point at Q={q}, r={r}, alpha={alpha}")
    x, y = (float(v) for v in _bisect_star(q, r, alpha))
    if abs(float(c_bound(x, y)) - (1.0 - q)) > STAR_RESIDUAL:
        raise ArithmeticError("star point bisection did not reach the residual tolerance")
    xy = x * y
    return StarPoint(x, y, (1.0 + xy) / (1.0 - xy))


def delta_min_analytic(q, r, alpha):
    """Minimum of delta over the enlarged regions, attained at the star point."""
    star = solve_star_point(q, r, alpha)
    return delta(star.x_star, star.y_star, EQMeasure(q), q, star.mu_star)


def delta_min_grid(q, r, alpha, mu=None, n=DEFAULT_GRID, measure=None, wedge=False):
    """Brute-force minimum of delta over grid points of [-1, 1]^2 in the enlarged regions.

    ``mu`` defaults to the star-point slope and ``measure`` to E_Q. With
    ``wedge=True`` only points with -x <= y <= x are kept.
    """
    if n < 101:
        raise ValueError("grid size must be at least 101")
    check_feasible(q, r, alpha)
    measure = measure or EQMeasure(q)
    if mu is None:
        mu = solve_star_point(q, r, alpha).mu_star
    axis = np.linspace(-1.0, 1.0, n)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    mask = in_enlarged_union(x, y, r, alpha) & (1.0 + x * y > RAY_GUARD)
    if wedge:
        mask &= (-x <= y) & (y <= x)
    if not mask.any():
        raise InfeasibleParameters("enlarged regions contain no grid point")
    return float(np.min(delta(x[mask], y[mask], measure, q, mu)))


def _delta_low_value(q, r, alpha, delta_min):
    return p_lower_prefactor(r, alpha) * q * delta_min


def delta_low(q, r, alpha) -> GapResult:
    """Gap lower bound for E_Q at the given (r, alpha)."""
    return _delta_low_cached(float(q), float(r), float(alpha))


@functools.lru_cache(maxsize=256)
def _delta_low_cached(q, r, alpha):
    star = solve_star_point(q, r, alpha)
    dmin = delta(star.x_star, star.y_star, EQMeasure(q), q, star.mu_star)
    return GapResult(GapParams(q, r, alpha, star.mu_star), star, dmin,
                     _delta_low_value(q, r, alpha, dmin))


def _delta_low_batch(q, r, alpha):
    """delta_low over arrays of feasible (r, alpha); uses delta_min = 1 - mu* (1 - Q)."""
    x, y = _bisect_star(q, r, alpha)
    xy = x * y
    mu = (1.0 + xy) / (1.0 - xy)
    return _delta_low_value(q, r, alpha, 1.0 - mu * (1.0 - q))


def _uv_to_ra(q, u, v):
    rm = r_min(q)
    r = rm + u * (1.0 - rm)
    return r, v * alpha_max(q, r)


def _objective(q, u, v):
    if not (0.0 < u < 1.0 and 0.0 < v < 1.0):
        return -math.inf
    r, alpha = _uv_to_ra(q, u, v)
    if not is_feasible(q, r, alpha):
        return -math.inf
    return float(_delta_low_batch(q, r, alpha))


def optimize_gap(q, grid=200, phase=0.5, step_tol=1e-12) -> GapResult:
    """Maximize delta_low over feasible (r, alpha).

    A ``grid`` x ``grid`` scan of the feasible set (offset by ``phase``
    cells) seeds a compass search that halves its step until it drops
    below ``step_tol``. The result is a local optimum.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"Q must lie in (0, 1), got {q!r}")
    if not 0.0 < phase < 1.0:
        raise ValueError("phase must lie strictly between 0 and 1")
    ticks = (np.arange(grid) + phase) / grid
    u, v = np.meshgrid(ticks, ticks, indexing="ij")
    r, alpha = _uv_to_ra(q, u, v)
    margin = FEASIBILITY_MARGIN
    ok = (r > r_min(q) + margin) & (r < 1 - margin) & (alpha > margin) & (alpha < alpha_max(q, r) - margin)
    vals = np.full(u.shape, -np.inf)
    vals[ok] = _delta_low_batch(q, r[ok], alpha[ok])
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best_u, best_v, best = float(u[i, j]), float(v[i, j]), float(vals[i, j])

    step = 1.0 / grid
    while step >= step_tol:
        moved = False
        for du, dv in ((step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)):
            f = _objective(q, best_u + du, best_v + dv)
            if f > best:
                best_u, best_v, best = best_u + du, best_v + dv, f
                moved = True
                break
        if not moved:
            step /= 2.0
    r_opt, a_opt = _uv_to_ra(q, best_u, best_v)
    return delta_low(q, r_opt, a_opt)


@dataclass(frozen=True)
class Figure2Row:
    q: float
    delta_low: float
    r_opt: float
    alpha_opt: float


def _sweep_one(args):
    q, grid, phase = args
    res = optimize_gap(q, grid=grid, phase=phase)
    return Figure2Row(q, res.delta_low, res.params.r, res.params.alpha)


def sweep_figure2(q_values=SWEEP_Q, grid=200, phase=0.5, workers=None):
    """Optimized gap for each Q, in input order.

    ``workers > 1`` spreads Q values over processes; results are identical
    to the serial run.
    """
    q_values = [float(q) for q in q_values]
    for q in q_values:
        if not 0.0 < q < 1.0:
            raise ValueError(f"Q must lie in (0, 1), got {q!r}")
    jobs = [(q, grid, phase) for q in q_values]
    if workers and workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


def figure2_csv(rows):
    buf = io.StringIO()
    buf.write("Q,delta_low,r_opt,alpha_opt\n")
    for row in rows:
        buf.write(
            f"{row.q:.17g},{row.delta_low:.17g},{row.r_opt:.17g},{row.alpha_opt:.17g}\n"
        )
    return buf.getvalue()
