"""Young-function families, factorizations, and structural-condition checkers.

The built-in families all factor as f(t) * phi_part(t) with f(t) = t^p:

    power       t^p
    power_log   t^p * log(e+t)^theta
    exp_log     t^p * exp(log(e+t)^theta)
    exp_loglog  t^p * log(c0+t)^theta * exp(loglog(c0+t)^gamma)

A companion weight is derived as psi_part(t) = 1 / phi_part(1/t), so that
Psi(t) = f(t) * psi_part(t).  Condition checkers sample geometric grids and
report the empirical constant plus a bounded/growing verdict for the trend
at the grid ends (a supremum over (0, inf) is not computable; the
conditions are asymptotic, so monotone growth toward a grid end is the
numerical signature of failure).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

E_E = math.exp(math.e)  # smallest admissible additive constant for exp_loglog

FAMILIES = ("power", "power_log", "exp_log", "exp_loglog", "custom_table")


@dataclass(frozen=True)
class YoungSpec:
    """Parametric Young function.  Use the module constructors below."""

    family: str
    p: float = 2.0
    theta: float = 0.0
    gamma: float = 0.0
    c0: float = E_E
    table: Optional[tuple] = None  # ((t, Phi(t)), ...) for custom_table

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown family {self.family!r}")
        if self.family == "custom_table":
            if not self.table or len(self.table) < 2:
                raise ConfigurationError("custom_table needs at least 2 knots")
            ts = np.array([k[0] for k in self.table], dtype=float)
            vs = np.array([k[1] for k in self.table], dtype=float)
            if np.any(ts < 0) or np.any(vs < 0):
                raise ConfigurationError("table knots must be nonnegative")
            if np.any(np.diff(ts) <= 0):
                raise ConfigurationError("table abscissae must be strictly increasing")
            if np.any(np.diff(vs) <= 0):
                raise ConfigurationError("table values must be strictly increasing")
            return
        if not self.p > 1.0:
            raise ConfigurationError(f"exponent p must exceed 1, got {self.p}")
        if self.theta < 0:
            raise ConfigurationError("theta must be nonnegative")
        if self.family == "exp_log" and not (0.0 <= self.theta < 1.0):
            raise ConfigurationError("exp_log requires theta in [0, 1)")
        if self.family == "exp_loglog":
            if not (0.0 <= self.theta <= self.p - 1.0):
                raise ConfigurationError("exp_loglog requires theta in [0, p-1]")
            if not (0.0 <= self.gamma < 1.0):
                raise ConfigurationError("exp_loglog requires gamma in [0, 1)")
            if self.c0 < E_E:
                raise ConfigurationError(f"c0 must be at least e^e ~ {E_E:.4f}")

    @property
    def tag(self) -> str:
        if self.family == "power":
            return f"power(p={self.p:g})"
        if self.family == "power_log":
            return f"power_log(p={self.p:g},theta={self.theta:g})"
        if self.family == "exp_log":
            return f"exp_log(p={self.p:g},theta={self.theta:g})"
        if self.family == "exp_loglog":
            return (f"exp_loglog(p={self.p:g},theta={self.theta:g},"
                    f"gamma={self.gamma:g},c0={self.c0:g})")
        return f"custom_table({len(self.table)} knots)"


def power(p: float) -> YoungSpec:
    return YoungSpec("power", p=p)


def power_log(p: float, theta: float) -> YoungSpec:
    return YoungSpec("power_log", p=p, theta=theta)


def exp_log(p: float, theta: float) -> YoungSpec:
    return YoungSpec("exp_log", p=p, theta=theta)


def exp_loglog(p: float, theta: float = 0.0, gamma: float = 0.0,
               c0: float = E_E) -> YoungSpec:
    return YoungSpec("exp_loglog", p=p, theta=theta, gamma=gamma, c0=c0)


def custom_table(points) -> YoungSpec:
    return YoungSpec("custom_table", table=tuple((float(t), float(v)) for t, v in points))


def load_table_csv(path) -> YoungSpec:
    """Read a (t, Phi(t)) CSV with monotone t into a custom_table spec."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    if data.shape[1] != 2:
        raise ConfigurationError("table CSV must have exactly two columns")
    return custom_table(data)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _table_eval(spec: YoungSpec, t: np.ndarray) -> np.ndarray:
    """Log-linear interpolation between knots; +inf beyond the table.

    Values below the first knot scale linearly through (0, 0) so that the
    interpolant is still a function vanishing at zero.
    """
    ts = np.array([k[0] for k in spec.table])
    vs = np.array([k[1] for k in spec.table])
    if ts[0] == 0.0:
        ts, vs = ts[1:], vs[1:]
    out = np.empty_like(t, dtype=float)
    below = t < ts[0]
    above = t > ts[-1]
    mid = ~(below | above)
    out[below] = vs[0] * t[below] / ts[0]
    out[above] = np.inf
    out[mid] = np.exp(np.interp(t[mid], ts, np.log(vs)))
    return out


def _table_prime(spec: YoungSpec, t: np.ndarray) -> np.ndarray:
    ts = np.array([k[0] for k in spec.table])
    vs = np.array([k[1] for k in spec.table])
    if ts[0] == 0.0:
        ts, vs = ts[1:], vs[1:]
    logv = np.log(vs)
    slopes = np.diff(logv) / np.diff(ts)
    idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(slopes) - 1)
    out = _table_eval(spec, t) * slopes[idx]
    below = t < ts[0]
    out[below] = vs[0] / ts[0]
    out[t > ts[-1]] = np.inf
    return out


def eval_phi(spec: YoungSpec, t):
    """Value of the Young function at t >= 0 (scalar or array)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("Young functions are evaluated on t >= 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    with np.errstate(over="ignore"):
        if spec.family == "power":
            out = arr ** spec.p
        elif spec.family == "power_log":
            out = arr ** spec.p * np.log(np.e + arr) ** spec.theta
        elif spec.family == "exp_log":
            out = arr ** spec.p * np.exp(np.log(np.e + arr) ** spec.theta)
        elif spec.family == "exp_loglog":
            m = np.log(spec.c0 + arr)
            out = arr ** spec.p * m ** spec.theta * np.exp(np.log(m) ** spec.gamma)
        else:
            out = _table_eval(spec, arr)
    return float(out[0]) if scalar else out


def eval_phi_prime(spec: YoungSpec, t):
    """Closed-form derivative (the density of the Young function)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("the density is evaluated on t >= 0")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    p, th, ga = spec.p, spec.theta, spec.gamma
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.family == "power":
            out = p * arr ** (p - 1.0)
        elif spec.family == "power_log":
            L = np.log(np.e + arr)
            out = arr ** (p - 1.0) * L ** (th - 1.0) * (p * L + th * arr / (np.e + arr))
        elif spec.family == "exp_log":
            L = np.log(np.e + arr)
            out = (np.exp(L ** th) * arr ** (p - 1.0)
                   * (p + th * arr * L ** (th - 1.0) / (np.e + arr)))
        elif spec.family == "exp_loglog":
            m = np.log(spec.c0 + arr)
            g = np.log(m)
            extra = th / ((spec.c0 + arr) * m)
            if ga > 0:
                extra = extra + ga * g ** (ga - 1.0) / ((spec.c0 + arr) * m)
            out = arr ** (p - 1.0) * m ** th * np.exp(g ** ga) * (p + arr * extra)
        else:
            out = _table_prime(spec, arr)
    out = np.where(arr == 0.0, 0.0, out)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Factorization Phi = f * phi_part, Psi = f * psi_part
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FactoredPair:
    """Factor handles; all vectorized over positive arguments."""

    f_part: Callable
    phi_part: Callable
    psi_part: Callable
    phi_part_prime: Optional[Callable] = None
    p: Optional[float] = None  # set when f_part(t) = t^p
    tag: str = "custom"

    def phi(self, t):
        return self.f_part(np.asarray(t, dtype=float)) * self.phi_part(np.asarray(t, dtype=float))

    def psi(self, t):
        arr = np.asarray(t, dtype=float)
        return self.f_part(arr) * self.psi_part(arr)


def derive_psi(phi_part: Callable) -> Callable:
    """Companion weight t -> 1 / phi_part(1/t), defined for t > 0."""

    def psi(t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr <= 0):
            raise ValueError("derived psi is defined for t > 0")
        vals = phi_part(1.0 / arr)
        if np.any(vals <= 0):
            raise ValueError("phi_part vanishes; cannot invert")
        return 1.0 / vals

    return psi


def factored(spec: YoungSpec) -> FactoredPair:
    """Canonical factorization t^p * phi_part for the built-in families."""
    if spec.family == "custom_table":
        raise ConfigurationError("custom tables carry no canonical factorization")
    p, th, ga, c0 = spec.p, spec.theta, spec.gamma, spec.c0

    def f_part(t):
        return np.asarray(t, dtype=float) ** p

    if spec.family == "power":
        phi_part = lambda t: np.ones_like(np.asarray(t, dtype=float))
        phi_prime = lambda t: np.zeros_like(np.asarray(t, dtype=float))
    elif spec.family == "power_log":
        phi_part = lambda t: np.log(np.e + np.asarray(t, dtype=float)) ** th
        phi_prime = lambda t: (th * np.log(np.e + np.asarray(t, dtype=float)) ** (th - 1.0)
                               / (np.e + np.asarray(t, dtype=float)))
    elif spec.family == "exp_log":
        def phi_part(t):
            return np.exp(np.log(np.e + np.asarray(t, dtype=float)) ** th)

        def phi_prime(t):
            arr = np.asarray(t, dtype=float)
            L = np.log(np.e + arr)
            return np.exp(L ** th) * th * L ** (th - 1.0) / (np.e + arr)
    else:  # exp_loglog
        def phi_part(t):
            m = np.log(c0 + np.asarray(t, dtype=float))
            return m ** th * np.exp(np.log(m) ** ga)

        def phi_prime(t):
            arr = np.asarray(t, dtype=float)
            m = np.log(c0 + arr)
            g = np.log(m)
            coef = th + (ga * g ** (ga - 1.0) if ga > 0 else 0.0)
            return m ** th * np.exp(g ** ga) * coef / ((c0 + arr) * m)

    return FactoredPair(f_part=f_part, phi_part=phi_part,
                        psi_part=derive_psi(phi_part),
                        phi_part_prime=phi_prime, p=p, tag=spec.tag)


# ---------------------------------------------------------------------------
# Condition checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Geometric sample grid used by the checkers."""

    t_min: float = 1e-8
    t_max: float = 1e8
    per_decade: int = 64

    def points(self) -> np.ndarray:
        decades = math.log10(self.t_max / self.t_min)
        n = int(round(decades * self.per_decade)) + 1
        return np.geomspace(self.t_min, self.t_max, n)

    @property
    def decades(self) -> float:
        return math.log10(self.t_max / self.t_min)


DEFAULT_GRID = GridSpec()


@dataclass
class ConditionReport:
    condition: str
    c_emp: float
    worst_point: tuple
    passed: bool
    growing: bool
    truncated: bool = False
    ceiling: float = math.inf
    grid: GridSpec = field(default_factory=GridSpec)
    details: dict = field(default_factory=dict)


def _decade_maxima(t: np.ndarray, values: np.ndarray):
    """Max of `values` per decade of t, in increasing-decade order."""
    dec = np.floor(np.log10(t)).astype(int)
    out_d, out_m = [], []
    for d in range(dec.min(), dec.max() + 1):
        sel = dec == d
        if np.any(sel):
            out_d.append(d)
            out_m.append(values[sel].max())
    return np.array(out_d), np.array(out_m)


def _growing(maxima: np.ndarray, tail: int = 3, rel: float = 0.10) -> bool:
    """Detect unbounded growth at either grid end.

    A sequence converging to a finite limit is also monotone, so strict
    increase alone is not evidence of divergence; require the maxima over
    the last `tail` decades to increase strictly and gain more than `rel`
    in total.  On the default 16-decade grid the genuinely divergent cases
    (exponential, power-law, even logarithmic) gain upwards of 35% over
    three decades, while saturating bounded ratios stay under ~5%.
    """
    if len(maxima) < tail:
        return False
    for end in (maxima[-tail:], maxima[:tail][::-1]):
        if np.all(np.diff(end) > 0) and end[-1] > (1.0 + rel) * end[0] > 0:
            return True
    return False


def check_delta2(spec: YoungSpec, grid: GridSpec = DEFAULT_GRID,
                 ceiling: float = math.inf) -> ConditionReport:
    """Doubling ratio Phi(2t)/Phi(t) over a geometric grid."""
    if grid.decades < 12:
        raise ConfigurationError("delta2 grid must span at least 12 decades")
    t = grid.points()
    with np.errstate(over="ignore", invalid="ignore"):
        lo = eval_phi(spec, t)
        hi = eval_phi(spec, 2.0 * t)
        ratio = hi / lo
    ok = np.isfinite(ratio) & (lo > 0)
    truncated = bool(np.any(~ok))
    t, ratio = t[ok], ratio[ok]
    if len(t) == 0:
        return ConditionReport("delta2", math.inf, (math.nan, math.nan), False,
                               True, True, ceiling, grid)
    i = int(np.argmax(ratio))
    _, maxima = _decade_maxima(t, ratio)
    growing = _growing(maxima)
    c_emp = float(ratio[i])
    passed = (not growing) and c_emp <= ceiling
    return ConditionReport("delta2", c_emp, (float(t[i]), float(2 * t[i])),
                           passed, growing, truncated, ceiling, grid)


def check_delta2_plus(spec_or_pair, grid: GridSpec = DEFAULT_GRID) -> ConditionReport:
    """Growth conditions on the factor phi of Phi(t) = t^p * phi(t).

    Four sub-criteria: bounded elasticity t*phi'/phi with a gap below p,
    bounded phi', two-sided bound on phi(t^2)/phi(t), and an elasticity
    tail that decreases toward zero at the top of the grid.
    """
    if isinstance(spec_or_pair, YoungSpec):
        pair = factored(spec_or_pair)
    else:
        pair = spec_or_pair
    if pair.p is None:
        raise ConfigurationError("delta2+ needs a t^p * phi(t) factorization")
    t = grid.points()
    phi = np.asarray(pair.phi_part(t), dtype=float)
    if pair.phi_part_prime is not None:
        phip = np.asarray(pair.phi_part_prime(t), dtype=float)
    else:
        h = t * 1e-6
        phip = (np.asarray(pair.phi_part(t + h)) - np.asarray(pair.phi_part(t - h))) / (2 * h)
    if np.any(phi <= 0):
        raise ConfigurationError("phi factor must be positive")

    elas = t * phip / phi
    sq_ratio = np.asarray(pair.phi_part(t ** 2), dtype=float) / phi

    elas_sup = float(elas.max())
    gap = pair.p - elas_sup
    _, elas_max = _decade_maxima(t, elas)
    tail3 = elas_max[-3:]
    tail_ok = bool(np.all(np.diff(tail3) <= 1e-12 + 1e-9 * np.abs(tail3[:-1]))
                   and (elas_sup <= 1e-12 or tail3[-1] <= 0.9 * elas_sup))

    _, phip_max = _decade_maxima(t, phip)
    phip_bounded = not _growing(phip_max)
    _, sq_max = _decade_maxima(t, sq_ratio)
    _, sq_min = _decade_maxima(t, -sq_ratio)
    sq_bounded = (not _growing(sq_max)) and (not _growing(sq_min)) and sq_ratio.min() > 0

    passed = (gap > 0) and phip_bounded and sq_bounded and tail_ok
    growing = not (phip_bounded and sq_bounded)
    i = int(np.argmax(elas))
    return ConditionReport(
        "delta2_plus", elas_sup, (float(t[i]), float(t[i])), passed, growing,
        False, math.inf, grid,
        details={
            "elasticity_sup": elas_sup,
            "elasticity_gap": gap,
            "elasticity_tail": [float(v) for v in tail3],
            "elasticity_tail_ok": tail_ok,
            "phi_prime_sup": float(phip.max()),
            "phi_prime_bounded": phip_bounded,
            "squaring_max": float(sq_ratio.max()),
            "squaring_min": float(sq_ratio.min()),
            "squaring_bounded": sq_bounded,
        })


def _ratio_report(condition: str, num: Callable, den: Callable,
                  grid: GridSpec, ceiling: float) -> ConditionReport:
    """2-D grid search for sup num(s,t)/den(s,t)."""
    pts = grid.points()
    s = pts[:, None]
    t = pts[None, :]
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        numer = num(s, t)
        denom = den(s, t)
        ratio = numer / denom
    bad = (denom == 0) & (numer > 0)
    if np.any(bad):
        i, j = np.unravel_index(int(np.argmax(bad)), bad.shape)
        return ConditionReport(condition, math.inf, (float(pts[i]), float(pts[j])),
                               False, True, False, ceiling, grid,
                               details={"denominator_vanishes": True})
    ok = np.isfinite(ratio)
    truncated = bool(np.any(~ok))
    ratio = np.where(ok, ratio, -np.inf)
    i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
    c_emp = float(ratio[i, j])
    # trend along each axis: decade maxima of max over the other variable
    col_max = ratio.max(axis=0)
    row_max = ratio.max(axis=1)
    _, m_t = _decade_maxima(pts, col_max)
    _, m_s = _decade_maxima(pts, row_max)
    growing = _growing(m_t) or _growing(m_s)
    passed = (not growing) and c_emp <= ceiling
    return ConditionReport(condition, c_emp, (float(pts[i]), float(pts[j])),
                           passed, growing, truncated, ceiling, grid)


def check_submultiplicative_f(f: Callable, grid: GridSpec = DEFAULT_GRID,
                              ceiling: float = math.inf) -> ConditionReport:
    """sup f(s) f(t) / f(st) over a 2-D geometric grid."""
    return _ratio_report("submultiplicative_f",
                         lambda s, t: f(s) * f(t),
                         lambda s, t: f(s * t), grid, ceiling)


def check_pairing(phi_part: Callable, psi_part: Callable,
                  grid: GridSpec = DEFAULT_GRID,
                  ceiling: float = math.inf) -> ConditionReport:
    """sup phi(s) psi(t) / phi(st) over a 2-D geometric grid."""
    return _ratio_report("pairing",
                         lambda s, t: phi_part(s) * psi_part(t + 0 * s),
                         lambda s, t: phi_part(s * t), grid, ceiling)
