"""Orlicz modular and Luxemburg norm of grid functions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .grid import GridDomain, GridFunction, integrate
from .young import YoungSpec, eval_phi


@dataclass(frozen=True)
class ModularValue:
    value: float
    spec: YoungSpec
    domain: GridDomain

    def __float__(self):
        return self.value


def modular(u: GridFunction, spec: YoungSpec) -> ModularValue:
    """Integral of Phi(|u|) over the ball."""
    val = integrate(eval_phi(spec, np.abs(u.values)), u.domain)
    return ModularValue(val, spec, u.domain)


def _modular_scaled(u: GridFunction, spec: YoungSpec, s: float) -> float:
    return integrate(eval_phi(spec, np.abs(u.values) / s), u.domain)


def luxemburg_norm(u: GridFunction, spec: YoungSpec, rel_tol: float = 1e-12,
                   max_doublings: int = 200) -> float:
    """inf{ s : modular(u/s) <= 1 } by bracketing plus bisection.

    s -> modular(u/s) is strictly decreasing where positive, so the root of
    modular(u/s) = 1 is simple and bisection is globally convergent.
    """
    peak = u.max_abs()
    if peak == 0.0:
        return 0.0
    hi = peak * max(integrate(np.ones(u.domain.shape), u.domain), 1.0)
    hi = max(hi, 1e-300)
    n = 0
    while _modular_scaled(u, spec, hi) > 1.0:
        hi *= 2.0
        n += 1
        if n > max_doublings:
            raise NumericalError("no upper bracket for the Luxemburg norm")
    lo = hi
    while _modular_scaled(u, spec, lo) <= 1.0:
        lo *= 0.5
        n += 1
        if n > max_doublings:
            raise NumericalError("no lower bracket for the Luxemburg norm")
    # invariant: modular(u/lo) > 1 >= modular(u/hi)
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _modular_scaled(u, spec, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def phi_inverse(spec: YoungSpec, y: float, rel_tol: float = 1e-12) -> float:
    """Inverse of the Young function by the same bracketing machinery."""
    if y < 0:
        raise ValueError("Young functions are nonnegative")
    if y == 0.0:
        return 0.0
    hi = 1.0
    n = 0
    while eval_phi(spec, hi) < y:
        hi *= 2.0
        n += 1
        if n > 200:
            raise NumericalError("no bracket for the Young inverse")
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if eval_phi(spec, mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
