"""Closed-form oracles: the 1D square well and the hydrogen spectrum."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .exceptions import IndefiniteOperatorError


def _bisect(f, lo, hi, tol=1e-12, max_iter=400):
    flo = f(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def squarewell_E0(eps, delta):
    """Ground-state energy of ``-d²/dx² - eps 1_(-delta, delta)``.

    Solves ``x (1 + tan(sqrt(x) delta)^2) = eps`` for the smallest positive
    root ``x*`` and returns ``x* - eps``.
    """
    if not (eps > 0 and delta > 0):
        raise ValueError("eps and delta must be positive")
    x_max = min(eps, (math.pi / (2 * delta)) ** 2)
    F = lambda x: x * (1.0 + math.tan(math.sqrt(x) * delta) ** 2) - eps
    # F(0) = -eps < 0; F grows without bound towards the tan pole
    hi = x_max
    if F(hi) <= 0 or not math.isfinite(F(hi)):
        hi = math.nextafter(x_max, 0.0)
    x_star = _bisect(F, 0.0, hi, tol=1e-15)
    return x_star - eps


@dataclass(frozen=True)
class SquareWellClosedForm:
    """Even bounded solution of ``(-d²/dx² - eps 1_(|x|<delta) + M) u = 1``."""

    eps: float
    delta: float
    M: float

    def __post_init__(self):
        E0 = squarewell_E0(self.eps, self.delta)
        if not self.M > -E0:
            raise IndefiniteOperatorError(f"M={self.M} is not above -E0={-E0}", count=1)

    @property
    def regime(self):
        if self.M > self.eps:
            return "above"
        if self.M == self.eps:
            return "critical"
        return "below"

    def coefficients(self):
        """``(inner, outer)``: inner amplitude and outer decay coefficient."""
        eps, delta, M = self.eps, self.delta, self.M
        sM = math.sqrt(M)
        if self.regime == "above":
            k = math.sqrt(M - eps)
            a2 = (1 / M - 1 / (M - eps)) / (math.cosh(k * delta) + k / sM * math.sinh(k * delta))
            b1 = -k / sM * math.sinh(k * delta) * math.exp(sM * delta) * a2
            return a2, b1
        if self.regime == "critical":
            # inner: c - x²/2
            b = delta / sM * math.exp(sM * delta)
            c = 1 / M + delta / sM + delta**2 / 2
            return c, b
        k = math.sqrt(eps - M)
        a = (1 / M - 1 / (M - eps)) / (math.cos(k * delta) - k / sM * math.sin(k * delta))
        b = k / sM * math.sin(k * delta) * math.exp(sM * delta) * a
        return a, b

    def __call__(self, x):
        x = np.abs(np.asarray(x, dtype=float))
        eps, delta, M = self.eps, self.delta, self.M
        inner_amp, outer = self.coefficients()
        out = 1 / M + outer * np.exp(-math.sqrt(M) * x)
        if self.regime == "above":
            k = math.sqrt(M - eps)
            inside = 1 / (M - eps) + inner_amp * np.cosh(k * x)
        elif self.regime == "critical":
            inside = inner_amp - x**2 / 2
        else:
            k = math.sqrt(eps - M)
            inside = 1 / (M - eps) + inner_amp * np.cos(k * x)
        return np.where(x < delta, inside, out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        s = np.sign(x)
        ax = np.abs(x)
        eps, delta, M = self.eps, self.delta, self.M
        inner_amp, outer = self.coefficients()
        out = -math.sqrt(M) * outer * np.exp(-math.sqrt(M) * ax)
        if self.regime == "above":
            k = math.sqrt(M - eps)
            inside = inner_amp * k * np.sinh(k * ax)
        elif self.regime == "critical":
            inside = -ax
        else:
            k = math.sqrt(eps - M)
            inside = -inner_amp * k * np.sin(k * ax)
        return s * np.where(ax < delta, inside, out)

    def matching_residual(self):
        """Jumps of u and u' across ``|x| = delta`` (both should vanish)."""
        lo = np.nextafter(self.delta, 0.0)
        hi = np.nextafter(self.delta, np.inf)
        du = float(self(hi) - self(lo))
        ddu = float(self.derivative(hi) - self.derivative(lo))
        return du, ddu


def squarewell_landscape(eps, delta, M, x):
    return SquareWellClosedForm(eps, delta, M)(x)


class InfEffective(NamedTuple):
    value: float
    closed_form: bool


def squarewell_inf_effective(eps, delta, M):
    """``inf_x (1/u(x) - M)`` for the square-well landscape.

    For ``M >= eps`` the infimum sits at the origin and follows from the
    closed form (for ``M = eps`` it is the rational expression in
    ``delta sqrt(eps)``).  Below that the value is located numerically on the
    closed-form branch and flagged as not closed form.
    """
    cf = SquareWellClosedForm(eps, delta, M)
    if M == eps:
        s = delta * math.sqrt(eps)
        value = (-delta * eps**1.5 - delta**2 * eps**2 / 2) / (1 + s + s * s / 2)
        return InfEffective(value, True)
    if M > eps:
        return InfEffective(float(1.0 / cf(0.0) - M), True)
    x = np.linspace(0.0, 4 * delta, 40001)
    vals = 1.0 / cf(x) - M
    return InfEffective(float(vals.min()), False)


def hydrogen_level(n):
    """Level ``n`` of ``-Δ - 1/|x|`` in R^3."""
    return -1.0 / (4.0 * n * n)


def hydrogen_count(mu):
    """Eigenvalues ``<= mu`` of ``-Δ - 1/|x|`` counted with multiplicity ``n²``."""
    if not mu < 0:
        raise ValueError("the hydrogen count is finite only for mu < 0")
    n_max = int(math.floor(1.0 / (2.0 * math.sqrt(-mu))))
    # guard the floor against rounding at exact levels
    while hydrogen_level(n_max + 1) <= mu:
        n_max += 1
    while n_max > 0 and hydrogen_level(n_max) > mu:
        n_max -= 1
    return n_max * (n_max + 1) * (2 * n_max + 1) // 6


def hydrogen_midpoint(n):
    """Energy halfway between levels ``n`` and ``n + 1``."""
    return 0.5 * (hydrogen_level(n) + hydrogen_level(n + 1))
