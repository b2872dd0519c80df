"""Exponent algebra for spectral cluster and resolvent estimates.

Lebesgue exponents are kept as exact rationals (`fractions.Fraction`, with
``math.inf`` as the sentinel for q = infinity) so that breakpoint matching in
piecewise-linear profiles is exact; conversion to float happens only when a
numerical value is returned.

Conventions used throughout the package:

* ``sigma(n, q)`` is the cluster growth exponent: the larger of
  n(1/2 - 1/q) - 1/2 and ((n-1)/2)(1/2 - 1/q).  The two branches cross at
  the critical exponent q_n = 2(n+1)/(n-1) with common value 1/q_n.
* ``bracket(x)`` denotes the Japanese bracket <x> = 2 + |x|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

QLike = Union[int, float, Fraction]

INF = math.inf

#: finite stand-in for the Sobolev exponent 2n/(n-2) when n = 2
_SOBOLEV_STANDIN_2D = Fraction(100)


def bracket(x: float) -> float:
    """Japanese bracket <x> = 2 + |x| (bounded away from zero, ~|x| at infinity)."""
    return 2.0 + abs(x)


def set_sobolev_standin_2d(q: QLike) -> None:
    """Configure the finite stand-in used for the n=2 Sobolev exponent.

    All range checks involving the Sobolev exponent use this value uniformly
    when n = 2.  Default is 100.
    """
    global _SOBOLEV_STANDIN_2D
    qr = as_exponent(q)
    if qr == INF or qr <= 2:
        raise ValueError("n=2 Sobolev stand-in must be finite and > 2")
    _SOBOLEV_STANDIN_2D = qr


def get_sobolev_standin_2d() -> Fraction:
    return _SOBOLEV_STANDIN_2D


def as_exponent(q: QLike) -> Union[Fraction, float]:
    """Normalize a Lebesgue exponent to an exact Fraction or the inf sentinel."""
    if q == INF:
        return INF
    if isinstance(q, Fraction):
        return q
    if isinstance(q, int):
        return Fraction(q)
    if isinstance(q, float):
        if math.isnan(q):
            raise ValueError("exponent must not be NaN")
        return Fraction(q)
    raise TypeError(f"cannot interpret {q!r} as a Lebesgue exponent")


def inv_exponent(q: QLike) -> Fraction:
    """1/q as an exact Fraction, with 1/inf = 0."""
    qr = as_exponent(q)
    if qr == INF:
        return Fraction(0)
    if qr == 0:
        raise ValueError("exponent must be nonzero")
    return 1 / qr


def dual_exponent(q: QLike) -> Union[Fraction, float]:
    """Hoelder dual q' with 1/q + 1/q' = 1 (dual of inf is 1, dual of 1 is inf)."""
    qr = as_exponent(q)
    if qr == INF:
        return Fraction(1)
    if qr < 1:
        raise ValueError("dual exponent requires q >= 1")
    if qr == 1:
        return INF
    return qr / (qr - 1)


def _check_dimension(n) -> int:
    if isinstance(n, float):
        if not n.is_integer():
            raise ValueError(f"dimension must be an integer >= 2, got {n}")
        n = int(n)
    if not isinstance(n, int) or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n!r}")
    return n


def _check_q(q: QLike, *, minimum: QLike = 2) -> Union[Fraction, float]:
    qr = as_exponent(q)
    if qr != INF and qr < as_exponent(minimum):
        raise ValueError(f"exponent q must satisfy q >= {minimum}, got {q}")
    return qr


#: slack on the 1/q scale for range checks, so float inputs that round a hair
#: outside an exact rational endpoint are clamped instead of rejected
_X_TOL = Fraction(1, 10**12)


def _clamp_inv_q(x: Fraction, lo: Fraction, hi: Fraction, what: str) -> Fraction:
    if x < lo - _X_TOL or x > hi + _X_TOL:
        raise ValueError(what)
    return min(max(x, lo), hi)


def sigma(n: int, q: QLike) -> float:
    """Cluster growth exponent: max of n(1/2-1/q)-1/2 and ((n-1)/2)(1/2-1/q).

    Continuous and nondecreasing in q on [2, inf]; the branches agree at the
    critical exponent q_n = 2(n+1)/(n-1) where the common value is 1/q_n.
    """
    n = _check_dimension(n)
    _check_q(q)
    x = inv_exponent(q)  # 1/q, in [0, 1/2]
    half = Fraction(1, 2)
    wave = n * (half - x) - half
    kinematic = Fraction(n - 1, 2) * (half - x)
    return float(max(wave, kinematic))


def critical_q(n: int) -> Fraction:
    """The critical exponent q_n = 2(n+1)/(n-1), exact."""
    n = _check_dimension(n)
    return Fraction(2 * (n + 1), n - 1)


def sobolev_q(n: int) -> Fraction:
    """The Sobolev exponent 2n/(n-2) for n >= 3; the configured stand-in for n=2."""
    n = _check_dimension(n)
    if n == 2:
        return _SOBOLEV_STANDIN_2D
    return Fraction(2 * n, n - 2)


def s_of_q(n: int, q: QLike) -> float:
    """Smoothing order s(q) = 1 - n(1/2 - 1/q), valid for q_n <= q <= 2*.

    Equals 1/2 - sigma(q) throughout the valid range; both formulas are
    evaluated and cross-checked internally.
    """
    n = _check_dimension(n)
    qr = _check_q(q)
    qn = critical_q(n)
    qs = sobolev_q(n)
    if qr == INF:
        raise ValueError(f"s(q) requires q_n <= q <= 2* (n={n}), got q=inf")
    x = _clamp_inv_q(
        inv_exponent(qr),
        1 / qs,
        1 / qn,
        f"s(q) requires {qn} = q_n <= q <= 2* = {qs} (n={n}), got q={q}",
    )
    value = 1 - n * (Fraction(1, 2) - x)
    alt = 0.5 - sigma(n, 1 / x)
    if abs(float(value) - alt) > 1e-12:
        raise AssertionError("s(q) cross-check 1/2 - sigma(q) failed")
    return float(value)


def rho_of_s(s: float) -> float:
    """Spectral-region exponent rho = (2-s)/(2+s) for metric regularity s in [0,2]."""
    if not 0 <= s <= 2:
        raise ValueError(f"metric regularity s must lie in [0, 2], got {s}")
    return (2.0 - s) / (2.0 + s)


@dataclass(frozen=True)
class SpectralRegion:
    """Region |mu| <= constant * lambda^rho, lambda >= lambda_min, in the z=(lambda+i*mu)^2 parametrization."""

    rho: float  # region exponent in [0, 1]
    constant: float = 1.0  # implied constant in |mu| <= C * lambda^rho
    lambda_min: float = 1.0  # lower lambda cutoff

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"region exponent rho must lie in [0,1], got {self.rho}")
        if not self.constant > 0:
            raise ValueError(f"region constant must be positive, got {self.constant}")


def region_contains(lam: float, mu: float, region: SpectralRegion) -> bool:
    """True iff lambda >= lambda_min and |mu| <= constant * lambda^rho."""
    return lam >= region.lambda_min and abs(mu) <= region.constant * lam ** region.rho


@dataclass(frozen=True)
class ExponentProfile:
    """A growth-exponent profile gamma(q), piecewise linear in 1/q.

    ``breakpoints`` is a tuple of (1/q, value) pairs, strictly decreasing in
    1/q; evaluation at a breakpoint returns the stored value exactly.
    ``log_power`` is the power of ln<lambda> multiplying the power law.
    ``epsilon_schedule`` optionally records a spectral-window width schedule
    attached to the profile (e.g. "1/log" for width 1/ln<lambda>).
    """

    breakpoints: tuple  # ((Fraction 1/q, float value), ...)
    log_power: int = 0
    label: str = ""
    epsilon_schedule: Optional[str] = None

    def __post_init__(self):
        if len(self.breakpoints) < 2:
            raise ValueError("profile needs at least two breakpoints")
        xs = [bp[0] for bp in self.breakpoints]
        if any(x1 <= x2 for x1, x2 in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be strictly decreasing in 1/q")

    @property
    def q_min(self) -> Union[Fraction, float]:
        x = self.breakpoints[0][0]
        return 1 / x if x > 0 else INF

    @property
    def q_max(self) -> Union[Fraction, float]:
        x = self.breakpoints[-1][0]
        return 1 / x if x > 0 else INF

    def __call__(self, q: QLike) -> float:
        return self.evaluate(q)

    def evaluate(self, q: QLike) -> float:
        """Evaluate the profile at exponent q (piecewise linear in 1/q)."""
        xs = [bp[0] for bp in self.breakpoints]
        x = _clamp_inv_q(
            inv_exponent(_check_q(q, minimum=1)),
            xs[-1],
            xs[0],
            f"q={q} outside the profile domain [{self.q_min}, {self.q_max}]",
        )
        for bx, bv in self.breakpoints:
            if x == bx:
                return float(bv)
        for (x1, v1), (x2, v2) in zip(self.breakpoints, self.breakpoints[1:]):
            if x2 < x < x1:
                t = (x - x2) / (x1 - x2)
                return float(v2) + float(t) * (float(v1) - float(v2))
        raise AssertionError("unreachable: breakpoint bracketing failed")

    def to_dict(self) -> dict:
        """JSON-friendly form used by the report writer."""
        return {
            "label": self.label,
            "log_power": self.log_power,
            "epsilon_schedule": self.epsilon_schedule,
            "breakpoints": [
                {"inv_q": str(x), "value": float(v)} for x, v in self.breakpoints
            ],
        }


def _profile_from_inv_qs(xs, value_fn, **kwargs) -> ExponentProfile:
    pts = tuple((x, float(value_fn(x))) for x in xs)
    return ExponentProfile(breakpoints=pts, **kwargs)


def gamma_catalog(setting: str, n: int, s: Optional[float] = None) -> ExponentProfile:
    """Catalog of cluster growth-exponent profiles gamma(q) by geometric setting.

    Keys:

    * ``smooth`` — gamma = sigma on [2, inf]: the universal smooth-metric profile.
    * ``Cs`` — gamma(q) = sigma(q) + (1/q)(2-s)/(2+s) for metrics of Hoelder
      regularity ``s`` in [0, 2], on [2, q_s] where
      q_s = (2n(s+2)+s-2)/((n-2)(s+2)) (n=2 uses the configured stand-in).
      At s = 2 this coincides with ``smooth``.
    * ``boundary-smith-sogge`` — the boundary-case cluster profile:
      (4/3) sigma(q) up to the critical exponent q_n, then
      sigma(q) + (1/3) * max(0, 1/q - eps(q)) with
      eps(q) = (n-1)(1/2-1/q) - 2/q, on [q_n, 2*].  The correction vanishes
      for q >= 2(n+2)/(n-1) (the perfect range).  Cluster-scale values; the
      generic transfer to resolvent bounds may add one ln<lambda> power,
      which consumers record through ``log_power``.
    * ``improved-log`` — gamma = sigma on [q_n, 2*], valid for spectral
      windows of shrinking width 1/ln<lambda>; the schedule is carried in
      ``epsilon_schedule``.
    """
    n = _check_dimension(n)
    half = Fraction(1, 2)
    qn = critical_q(n)
    qs_sob = sobolev_q(n)

    def sig(x: Fraction) -> Fraction:
        return max(n * (half - x) - half, Fraction(n - 1, 2) * (half - x))

    if setting == "smooth":
        xs = (half, 1 / qn, Fraction(0))
        return _profile_from_inv_qs(xs, sig, label="smooth")

    if setting == "Cs":
        if s is None or not 0 <= s <= 2:
            raise ValueError("Cs profile requires metric regularity s in [0, 2]")
        rho = Fraction(2 - Fraction(s)) / Fraction(2 + Fraction(s))
        if n == 2:
            q_top = _SOBOLEV_STANDIN_2D
        else:
            sp2 = Fraction(s) + 2
            q_top = (2 * n * sp2 + Fraction(s) - 2) / ((n - 2) * sp2)
        xs = [half]
        if 1 / q_top < 1 / qn < half:
            xs.append(1 / qn)
        xs.append(1 / q_top)
        return _profile_from_inv_qs(
            xs, lambda x: sig(x) + x * rho, label=f"Cs(s={s})"
        )

    if setting == "boundary-smith-sogge":
        q_top = qs_sob
        q_perfect = Fraction(2 * (n + 2), n - 1)  # loss term vanishes beyond here

        def gam(x: Fraction) -> Fraction:
            if x >= 1 / qn:  # 2 <= q <= q_n
                return Fraction(4, 3) * sig(x)
            eps = (n - 1) * (half - x) - 2 * x
            return sig(x) + Fraction(1, 3) * max(Fraction(0), x - eps)

        xs = [half, 1 / qn]
        if 1 / q_top < 1 / q_perfect < 1 / qn:
            xs.append(1 / q_perfect)
        if 1 / q_top < xs[-1]:
            xs.append(1 / q_top)
        return _profile_from_inv_qs(xs, gam, label="boundary-smith-sogge")

    if setting == "improved-log":
        xs = (1 / qn, 1 / qs_sob)
        return _profile_from_inv_qs(
            xs, sig, label="improved-log", epsilon_schedule="1/log"
        )

    raise ValueError(f"unknown catalog setting {setting!r}")


def interpolate_with_trivial(n: int, q1: QLike, e1: float, q: QLike) -> float:
    """Interpolate a resolvent exponent linearly in 1/q with the trivial q=2 bound.

    The line passes through (1/2, -1) — the trivial exponent at q = 2 with
    unit imaginary shift — and (1/q1, e1); returns its value at 1/q.
    Requires 2 <= q <= q1.
    """
    _check_dimension(n)
    q1r = _check_q(q1)
    qr = _check_q(q)
    x1 = inv_exponent(q1r)
    x = _clamp_inv_q(
        inv_exponent(qr),
        x1,
        Fraction(1, 2),
        f"interpolation requires 2 <= q <= q1, got q={q}, q1={q1}",
    )
    if x1 == Fraction(1, 2):
        return -1.0
    t = float((x - x1) / (Fraction(1, 2) - x1))
    return float(e1) + t * (-1.0 - float(e1))


def embed_up(n: int, q1: QLike, e1: float, q2: QLike) -> float:
    """Transfer an exponent upward in q by Sobolev embedding: e1 + 2n(1/q1 - 1/q2).

    Requires q_n <= q1 <= q2 <= 2*.  Seeded at the critical exponent with
    e1 = 2 sigma(q_n) - 1 this reproduces 2 sigma(q) - 1 on [q_n, 2*].
    """
    n = _check_dimension(n)
    q1r = _check_q(q1)
    q2r = _check_q(q2)
    qn = critical_q(n)
    qs = sobolev_q(n)
    msg = f"embedding requires q_n <= q1 <= q2 <= 2*, got q1={q1}, q2={q2} (n={n})"
    x1 = _clamp_inv_q(inv_exponent(q1r), 1 / qs, 1 / qn, msg)
    x2 = _clamp_inv_q(inv_exponent(q2r), 1 / qs, 1 / qn, msg)
    if x2 > x1:
        raise ValueError(msg)
    return float(e1) + float(2 * n * (x1 - x2))
