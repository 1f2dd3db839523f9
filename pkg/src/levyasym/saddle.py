"""Solve the saddle equation C'(b) = u and package the solved quantities.

C' is strictly increasing (C'' > 0 everywhere), so a bracketed, safeguarded
Newton iteration converges globally.  The iteration runs on
s(b) = log C'(b) - log u, which is scale-free and immune to overflow for
arbitrarily large targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .cumulant import cumulant_triple, log_tilted_moments
from .density import LevyDensitySpec
from .errors import ConvergenceError, RangeError
from .special import scaled_to_float

_BETA_FLOOR = -2048.0
_MAX_ITER = 200
_REL_TOL = 1e-11


@dataclass(frozen=True)
class SaddlePoint:
    """The solved tilt for a target mean u, plus the derived quantities."""

    u: float
    beta: float
    c_at_beta: float
    sigma2: float
    beta_prime: float
    log_prefactor: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)


@dataclass(frozen=True)
class GrowthRow:
    u: float
    beta: float
    exp_beta_over_u: float
    exp_beta_over_u_pow: float
    sigma2_over_u: float


def _log_mean(spec: LevyDensitySpec, beta: float) -> float:
    return log_tilted_moments(spec, beta).log_c1


def solve_saddle(spec: LevyDensitySpec, u: float) -> SaddlePoint:
    """Solve C'(beta) = u to relative tolerance 1e-11.

    Raises RangeError when u is below the infimum of C' over the solver
    window [-2048, inf) (possible only for supports bounded away from 0 and
    very small u), and ConvergenceError after 200 iterations.
    """
    if not (u > 0.0 and math.isfinite(u)):
        raise RangeError(f"target mean {u} must be a positive finite real")
    log_u = math.log(u)

    # bracket
    lo, hi = _BETA_FLOOR, None
    b = math.log(u * (1.0 + math.log1p(u))) if u > math.e else 0.0
    s_b = _log_mean(spec, b) - log_u
    if s_b == 0.0:
        return _package(spec, u, b)
    if s_b > 0.0:
        hi = b
        step = 1.0
        while True:
            cand = max(lo, hi - step)
            s = _log_mean(spec, cand) - log_u
            if s <= 0.0:
                lo = cand
                break
            hi = cand
            if cand == _BETA_FLOOR:
                raise RangeError(
                    f"target mean {u} below inf C' over [{_BETA_FLOOR}, inf)"
                )
            step *= 2.0
    else:
        lo = b
        step = 1.0
        while True:
            cand = lo + step
            s = _log_mean(spec, cand) - log_u
            if s >= 0.0:
                hi = cand
                break
            lo = cand
            step *= 2.0
            if step > 2.0 ** 40:  # pragma: no cover - unreachable for valid specs
                raise ConvergenceError("bracket growth failed")

    # safeguarded Newton on s(b) = log C'(b) - log u; s'(b) = C''/C'
    for _ in range(_MAX_ITER):
        mid = 0.5 * (lo + hi)
        ct = None
        b = mid
        try:
            ct = cumulant_triple(spec, mid)
            s = math.log(ct.c1) - log_u if ct.c1 > 0 else -math.inf
        except OverflowError:
            lm = log_tilted_moments(spec, mid)
            s = lm.log_c1 - log_u
        if s == 0.0 or abs(math.expm1(s)) <= _REL_TOL:
            return _package(spec, u, mid)
        if s > 0.0:
            hi = mid
        else:
            lo = mid
        if ct is not None and ct.c2 > 0.0 and math.isfinite(s):
            newton = mid - s * ct.c1 / ct.c2
            if lo < newton < hi:
                try:
                    s_n = _log_mean(spec, newton) - log_u
                except OverflowError:  # pragma: no cover
                    continue
                if s_n == 0.0 or abs(math.expm1(s_n)) <= _REL_TOL:
                    return _package(spec, u, newton)
                if s_n > 0.0:
                    hi = newton
                else:
                    lo = newton
    raise ConvergenceError(
        f"saddle iteration for u = {u} did not converge in {_MAX_ITER} steps"
    )


def _package(spec: LevyDensitySpec, u: float, beta: float) -> SaddlePoint:
    ct = cumulant_triple(spec, beta)
    return SaddlePoint(
        u=u,
        beta=beta,
        c_at_beta=ct.c0,
        sigma2=ct.c2,
        beta_prime=1.0 / ct.c2,
        log_prefactor=ct.c0 - u * beta,
    )


def saddle_growth_report(spec: LevyDensitySpec, u_list) -> list[GrowthRow]:
    """Rows (u, beta, e^b/u, e^b/u^1.1, sigma^2/u) for trend inspection."""
    u_list = list(u_list)
    if any(b <= a for a, b in zip(u_list, u_list[1:])):
        raise RangeError("u_list must be strictly increasing")
    rows = []
    for u in u_list:
        sp = solve_saddle(spec, u)
        rows.append(GrowthRow(
            u=u,
            beta=sp.beta,
            exp_beta_over_u=math.exp(sp.beta - math.log(u)),
            exp_beta_over_u_pow=math.exp(sp.beta - 1.1 * math.log(u)),
            sigma2_over_u=sp.sigma2 / u,
        ))
    return rows
