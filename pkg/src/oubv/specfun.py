"""Series kernels: hypergeometric, Bessel and the switching-count helpers.

All series use compensated (Neumaier) accumulation and a shared truncation
policy: summation stops once two consecutive terms fall below ``rel_tol``
times the running sum, and fails after ``max_terms`` terms.  The two-term
rule guards against false convergence of alternating series, which occur
here whenever the band coordinate is negative.

Arguments below the series' natural domain are reached by transformation
rather than analytic continuation machinery: the Gauss series for negative
arguments goes through the Pfaff transformation (whose transformed argument
lies in [0, 1)), the Kummer series through the reflection
``Phi(alpha, beta; z) = exp(z) * Phi(beta - alpha, beta; -z)``, which keeps
every summand nonnegative for the parameter patterns used in this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import ModelParams


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for all series evaluations."""

    rel_tol: float = 1e-12
    max_terms: int = 10000

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")


DEFAULT_CONTROL = SeriesControl()


class SeriesConvergenceError(RuntimeError):
    """A series failed to meet rel_tol within max_terms terms."""


class _Accumulator:
    """Neumaier compensated summation."""

    __slots__ = ("total", "comp")

    def __init__(self, first: float = 0.0) -> None:
        self.total = first
        self.comp = 0.0

    def add(self, term: float) -> None:
        s = self.total + term
        if abs(self.total) >= abs(term):
            self.comp += (self.total - s) + term
        else:
            self.comp += (term - s) + self.total
        self.total = s

    @property
    def value(self) -> float:
        return self.total + self.comp


def _converged(term: float, running: float, rel_tol: float) -> bool:
    return abs(term) <= rel_tol * max(abs(running), 1e-300)


def _check_finite(term: float, label: str) -> None:
    if not math.isfinite(term):
        raise SeriesConvergenceError(f"{label} series overflowed")


def _check_beta(beta: float, name: str = "beta") -> None:
    if beta <= 0 and beta == round(beta):
        raise ValueError(f"{name} must not be zero or a negative integer")


def pochhammer(b: float, n: int) -> float:
    """Rising factorial b (b+1) ... (b+n-1); empty product for n = 0."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    out = 1.0
    for k in range(n):
        out *= b + k
    return out


def _gauss_series(b0: float, b1: float, beta: float, z: float,
                  ctl: SeriesControl) -> float:
    # Direct series; caller guarantees 0 <= z < 1.
    acc = _Accumulator(1.0)
    term = 1.0
    small = 0
    for n in range(ctl.max_terms):
        term *= (b0 + n) * (b1 + n) / ((beta + n) * (n + 1.0)) * z
        _check_finite(term, "Gauss")
        acc.add(term)
        small = small + 1 if _converged(term, acc.value, ctl.rel_tol) else 0
        if small >= 2:
            return acc.value
    raise SeriesConvergenceError(
        f"Gauss series did not converge in {ctl.max_terms} terms (z={z})")


def gauss_2f1(b0: float, b1: float, beta: float, z: float,
              ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Gauss hypergeometric F(b0, b1; beta; z) for z < 1.

    Direct series on [0, 1); Pfaff-transformed series for z < 0, so the
    effective argument always lies in [0, 1).
    """
    _check_beta(beta)
    if z >= 1.0:
        raise ValueError("argument must satisfy z < 1")
    if z >= 0.0:
        return _gauss_series(b0, b1, beta, z, ctl)
    w = z / (z - 1.0)
    return (1.0 - z) ** (-b0) * _gauss_series(b0, beta - b1, beta, w, ctl)


def kummer_phi(alpha: float, beta: float, z: float,
               ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Confluent hypergeometric Phi(alpha, beta; z).

    Negative arguments are routed through the Kummer reflection to avoid
    cancellation between alternating terms.
    """
    _check_beta(beta)
    if alpha == 0.0:
        return 1.0
    if z < 0.0:
        return math.exp(z) * kummer_phi(beta - alpha, beta, -z, ctl)
    acc = _Accumulator(1.0)
    term = 1.0
    small = 0
    for n in range(ctl.max_terms):
        term *= (alpha + n) / ((beta + n) * (n + 1.0)) * z
        _check_finite(term, "Kummer")
        acc.add(term)
        small = small + 1 if _converged(term, acc.value, ctl.rel_tol) else 0
        if small >= 2:
            return acc.value
    raise SeriesConvergenceError(
        f"Kummer series did not converge in {ctl.max_terms} terms (z={z})")


def bessel_i(order: int, z: float, ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Modified Bessel function I_0 or I_1 by power series, z >= 0."""
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    if z < 0:
        raise ValueError("z must be nonnegative")
    half_sq = (z / 2.0) * (z / 2.0)
    if order == 0:
        term = 1.0
        acc = _Accumulator(1.0)
        ratio = lambda n: half_sq / ((n + 1.0) * (n + 1.0))
    else:
        term = z / 2.0
        acc = _Accumulator(term)
        ratio = lambda n: half_sq / ((n + 1.0) * (n + 2.0))
    small = 0
    for n in range(ctl.max_terms):
        term *= ratio(n)
        _check_finite(term, "Bessel")
        acc.add(term)
        small = small + 1 if _converged(term, acc.value, ctl.rel_tol) else 0
        if small >= 2:
            return acc.value
    raise SeriesConvergenceError(
        f"Bessel series did not converge in {ctl.max_terms} terms (z={z})")


def psi_pair(t: float, z: float, params: ModelParams,
             ctl: SeriesControl = DEFAULT_CONTROL) -> tuple[float, float]:
    """The two switching-count series driving the regime occupation laws.

    Returns ``(psi0, psi1)`` where::

        psi0(t, z) = sum_{n>=1} (l0 l1)^n     t^(2n)   / (2n)!   Phi(n, 2n+1; z)
        psi1(t, z) = sum_{n>=1} (l0 l1)^(n-1) t^(2n-1) / (2n-1)! Phi(n, 2n;   z)

    psi0 collects even switching counts, psi1 odd ones.  Both vanish at
    t = 0; psi0 vanishes identically when either rate is zero.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    ll = params.lambda0 * params.lambda1
    if t == 0.0:
        return (0.0, 0.0)
    acc0 = _Accumulator()
    acc1 = _Accumulator()
    c0 = ll * t * t / 2.0          # n = 1 prefactor of psi0
    c1 = t                         # n = 1 prefactor of psi1
    small = 0
    for n in range(1, ctl.max_terms + 1):
        term0 = c0 * kummer_phi(n, 2 * n + 1, z, ctl)
        term1 = c1 * kummer_phi(n, 2 * n, z, ctl)
        _check_finite(term0, "switching-count")
        _check_finite(term1, "switching-count")
        acc0.add(term0)
        acc1.add(term1)
        done0 = _converged(term0, acc0.value, ctl.rel_tol)
        done1 = _converged(term1, acc1.value, ctl.rel_tol)
        small = small + 1 if (done0 and done1) else 0
        if small >= 2:
            return (acc0.value, acc1.value)
        c0 *= ll * t * t / ((2 * n + 1.0) * (2 * n + 2.0))
        c1 *= ll * t * t / ((2 * n) * (2 * n + 1.0))
    raise SeriesConvergenceError(
        f"switching-count series did not converge in {ctl.max_terms} terms")


_GH_KINDS = ("G1", "H1", "G2", "H2")


def gh_coefficient(kind: str, n: int, t: float, params: ModelParams,
                   ctl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Kummer-function combinations entering the telegraph moment series.

    The argument of every Kummer factor is ``(lambda0 - lambda1) * t``; the
    mirrored starting regime is reached by passing ``-t``.  When the rates
    agree the combinations collapse to 1/(2n+1), 0, 1/(2n+1), 1/(2n+3) for
    G1, H1, G2, H2 respectively.
    """
    if kind not in _GH_KINDS:
        raise ValueError(f"kind must be one of {_GH_KINDS}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    arg = (params.lambda0 - params.lambda1) * t
    phi = lambda a, b: kummer_phi(a, b, arg, ctl)
    if kind == "G1":
        return phi(n, 2 * n + 1) - (2.0 * n / (2 * n + 1.0)) * phi(n + 1, 2 * n + 2)
    if kind == "H1":
        return phi(n + 1, 2 * n + 2) - phi(n + 2, 2 * n + 3)
    if kind == "G2":
        return ((2.0 * n / (2 * n + 1.0)) * phi(n + 2, 2 * n + 3)
                - (4.0 * n / (2 * n + 1.0)) * phi(n + 1, 2 * n + 2)
                + phi(n, 2 * n + 1))
    return ((2.0 * n + 4.0) / (2 * n + 3.0) * phi(n + 3, 2 * n + 4)
            - 2.0 * phi(n + 2, 2 * n + 3)
            + phi(n + 1, 2 * n + 2))
