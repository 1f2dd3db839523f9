"""The cumulant generating function C(b) of an arrival sum and its relatives.

For a spec with density g on (0, 1],

    C(b)   = int (e^(b x) - 1) g(x) dx          (log mgf of the arrival sum)
    C'(b)  = int x e^(b x) g(x) dx              (tilted mean)
    C''(b) = int x^2 e^(b x) g(x) dx            (tilted variance)

plus the complex extension C(b + i tau), the oscillation deficit
H(tau) = C(b) - Re C(b + i tau) >= 0, and the atom mass exp(-int e^(bx) g).

Everything that grows like e^b is assembled from (mantissa, log_scale)
pairs; public functions return plain floats and raise OverflowError past the
double range, with log-domain accessors alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import special as spfn
from .density import DensityPiece, LevyDensitySpec
from .errors import DomainError
from .special import (
    ScaledValue,
    e1in,
    e1in_complex,
    e1in_diff,
    exp_poly_moment,
    scaled_log,
    scaled_sum,
    scaled_to_float,
)

_COMPLEX_BETA_MAX = 690.0


@dataclass(frozen=True)
class CumulantTriple:
    """C, C' and C'' at a common tilt."""

    c0: float
    c1: float
    c2: float


@dataclass(frozen=True)
class LogMoments:
    """Log-domain companions; log_c0 is nan where C(b) <= 0 (b <= 0)."""

    log_c0: float
    log_c1: float
    log_c2: float


@dataclass(frozen=True)
class ComplexCumulant:
    re: float
    im: float


def _expm1_poly_moment(k: int, a: float, b: float, beta: float) -> ScaledValue:
    """int_a^b (e^(beta x) - 1) x^k dx, cancellation-free in every regime."""
    if beta == 0.0:
        return (0.0, 0.0)
    zb = beta * b
    if (0.0 < zb <= 30.0) or (-3.0 <= zb < 0.0):
        s = 0.0
        term = 1.0
        m = 1
        while True:
            term *= beta / m
            inc = term * (b ** (k + m + 1) - a ** (k + m + 1)) / (k + m + 1)
            s += inc
            m += 1
            if abs(term) * max(b, a) ** (k + m) <= 1e-18 * max(abs(s), 1e-300) and m > 4:
                break
            if m > 300:  # pragma: no cover
                break
        return (s, 0.0)
    zero = (b ** (k + 1) - a ** (k + 1)) / (k + 1)
    return scaled_sum([exp_poly_moment(k, a, b, beta), (-zero, 0.0)])


def _c0_scaled(spec: LevyDensitySpec, beta: float) -> ScaledValue:
    terms = []
    for p in spec.pieces:
        if p.inv_coeff:
            m, ell = e1in_diff(p.lo, p.hi, beta)
            terms.append((p.inv_coeff * m, ell))
        for k, c in enumerate(p.poly):
            if c:
                m, ell = _expm1_poly_moment(k, p.lo, p.hi, beta)
                terms.append((c * m, ell))
    return scaled_sum(terms)


def _moment_scaled(spec: LevyDensitySpec, beta: float, order: int) -> ScaledValue:
    """int x^order e^(beta x) g(x) dx for order >= 1 (inv part regularizes)."""
    terms = []
    for p in spec.pieces:
        if p.inv_coeff:
            m, ell = exp_poly_moment(order - 1, p.lo, p.hi, beta)
            terms.append((p.inv_coeff * m, ell))
        for k, c in enumerate(p.poly):
            if c:
                m, ell = exp_poly_moment(k + order, p.lo, p.hi, beta)
                terms.append((c * m, ell))
    return scaled_sum(terms)


def cumulant_triple(spec: LevyDensitySpec, beta: float) -> CumulantTriple:
    """(C(b), C'(b), C''(b)) as plain floats; OverflowError past 1e308."""
    c0 = scaled_to_float(_c0_scaled(spec, beta))
    c1 = scaled_to_float(_moment_scaled(spec, beta, 1))
    c2 = scaled_to_float(_moment_scaled(spec, beta, 2))
    return CumulantTriple(c0=c0, c1=c1, c2=c2)


def log_tilted_moments(spec: LevyDensitySpec, beta: float) -> LogMoments:
    """Log-domain accessors valid for arbitrarily large tilts."""
    m0, l0 = _c0_scaled(spec, beta)
    log_c0 = math.nan if m0 <= 0.0 else l0 + math.log(m0)
    return LogMoments(
        log_c0=log_c0,
        log_c1=scaled_log(_moment_scaled(spec, beta, 1)),
        log_c2=scaled_log(_moment_scaled(spec, beta, 2)),
    )


def tilted_mass(spec: LevyDensitySpec, beta: float) -> float:
    """lambda(b) = int e^(b x) g(x) dx; inf for infinite-mass specs."""
    if math.isinf(spec.mass):
        return math.inf
    val = scaled_sum([_c0_scaled(spec, beta), (spec.mass, 0.0)])
    return scaled_to_float(val)


def tilted_mass_upto(spec: LevyDensitySpec, beta: float, x: float) -> float:
    """int over (0, min(x, 1)] of e^(b t) g(t) dt (inf if singular at 0)."""
    if x <= spec.support_lo:
        return 0.0
    terms = []
    for p in spec.pieces:
        hi = min(p.hi, x)
        if hi <= p.lo:
            continue
        if p.inv_coeff:
            if p.lo == 0.0:
                return math.inf
            mlog = p.inv_coeff * math.log(hi / p.lo)
            m, ell = e1in_diff(p.lo, hi, beta)
            terms.append((p.inv_coeff * m, ell))
            terms.append((mlog, 0.0))
        for k, c in enumerate(p.poly):
            if c:
                m, ell = exp_poly_moment(k, p.lo, hi, beta)
                terms.append((c * m, ell))
    return scaled_to_float(scaled_sum(terms))


def atom_mass(spec: LevyDensitySpec, beta: float) -> float:
    """P(arrival sum = 0) = exp(-lambda(b)); 0 for infinite-mass specs."""
    if math.isinf(spec.mass):
        return 0.0
    lam = scaled_sum([_c0_scaled(spec, beta), (spec.mass, 0.0)])
    log_lam = scaled_log(lam) if lam[0] > 0 else -math.inf
    if log_lam > 700.0:
        return 0.0
    return math.exp(-scaled_to_float(lam))


def log_atom_mass(spec: LevyDensitySpec, beta: float) -> float:
    """log P(arrival sum = 0) = -lambda(b); -inf for infinite mass."""
    if math.isinf(spec.mass):
        return -math.inf
    lam = scaled_sum([_c0_scaled(spec, beta), (spec.mass, 0.0)])
    log_lam = scaled_log(lam) if lam[0] > 0 else -math.inf
    if log_lam > 700.0:
        return -math.inf
    return -scaled_to_float(lam)


def complex_cumulant_many(spec: LevyDensitySpec, beta: float,
                          taus: np.ndarray) -> np.ndarray:
    """C(b + i tau) for an array of nonnegative tau, as plain complex."""
    if abs(beta) > _COMPLEX_BETA_MAX:
        raise OverflowError(
            f"complex cumulant not representable at tilt {beta}; "
            "use the deficit/phase form"
        )
    taus = np.asarray(taus, dtype=float)
    zeta = beta + 1j * taus
    out = np.zeros(taus.shape, dtype=complex)
    for p in spec.pieces:
        if p.inv_coeff:
            vb = e1in_complex(zeta * p.hi)
            va = e1in_complex(zeta * p.lo) if p.lo > 0 else 0.0
            out += p.inv_coeff * (vb - va)
        for k, c in enumerate(p.poly):
            if c:
                jk = spfn.complex_poly_exp_moment(k, p.lo, p.hi, zeta, 0.0)
                jk0 = (p.hi ** (k + 1) - p.lo ** (k + 1)) / (k + 1)
                out += c * (jk - jk0)
    return out


def complex_cumulant(spec: LevyDensitySpec, beta: float,
                     tau: float) -> ComplexCumulant:
    """C(b + i tau); conjugate symmetry is exact by construction."""
    if tau == 0.0:
        return ComplexCumulant(re=scaled_to_float(_c0_scaled(spec, beta)), im=0.0)
    val = complex(complex_cumulant_many(spec, beta, np.array([abs(tau)]))[0])
    if tau < 0.0:
        val = val.conjugate()
    return ComplexCumulant(re=val.real, im=val.imag)


def oscillation_deficit(spec: LevyDensitySpec, beta: float,
                        tau: float) -> float:
    """H(tau) = C(b) - Re C(b + i tau) = int e^(bx)(1 - cos(tau x)) g >= 0."""
    if tau == 0.0:
        return 0.0
    c0 = scaled_to_float(_c0_scaled(spec, beta))
    re = complex_cumulant(spec, beta, tau).re
    return max(0.0, c0 - re)


def dickman_saddle_mean(beta: float) -> float:
    """C'(b) = (e^b - 1)/b for the pure 1/x density, stable near 0."""
    if beta == 0.0:
        return 1.0
    if abs(beta) < 1e-5:
        return 1.0 + beta / 2.0 + beta * beta / 6.0
    return math.expm1(beta) / beta
