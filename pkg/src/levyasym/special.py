"""Scaled exponential-moment kernels used by the cumulant machinery.

All integrals here are over subintervals of [0, 1] against weights x^k e^(b x).
For large tilts b these scale like e^b, so every routine returns or consumes
(mantissa, log_scale) pairs with value = mantissa * exp(log_scale).  Mantissas
stay O(1) for any representable tilt; callers convert to plain floats only at
the API boundary.

Branch structure (chosen for zero-cancellation in every regime):

* m_tilde(j, z) = exp(-max(z,0)) * int_0^1 t^j e^(z t) dt
    z < 0   -> regularized lower incomplete gamma,
    0<=z<=60 -> all-positive power series,
    z > 60  -> downward-stable linear recurrence.
* e1in(z) = int_0^z (e^t - 1)/t dt (entire), via series / expi / scaled
  asymptotics depending on z.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sps

EULER_GAMMA = 0.57721566490153286061

# value = mantissa * exp(log_scale)
ScaledValue = tuple[float, float]

_LOG_MAX = 709.0


def scaled_to_float(value: ScaledValue) -> float:
    """Convert a scaled value to a plain float, raising on overflow."""
    m, ell = value
    if m == 0.0:
        return 0.0
    lg = ell + math.log(abs(m))
    if lg > _LOG_MAX:
        raise OverflowError(
            f"value exp({lg:.3f}) exceeds the double range; use log accessors"
        )
    return math.copysign(math.exp(lg), m)


def scaled_log(value: ScaledValue) -> float:
    """log of a positive scaled value (-inf for zero)."""
    m, ell = value
    if m < 0.0:
        raise ValueError("scaled_log of a negative value")
    if m == 0.0:
        return -math.inf
    return ell + math.log(m)


def scaled_sum(terms) -> ScaledValue:
    """Sum (mantissa, log_scale) terms without overflow."""
    terms = [(m, ell) for (m, ell) in terms if m != 0.0]
    if not terms:
        return (0.0, 0.0)
    lmax = max(ell for _, ell in terms)
    if lmax == -math.inf:
        return (0.0, 0.0)
    total = 0.0
    for m, ell in terms:
        total += m * math.exp(ell - lmax)
    return (total, lmax)


def _m_tilde_series(j: int, z: float) -> float:
    # exp(-max(z,0)) * sum_m z^m / (m! (j+m+1)); all terms positive for z >= 0.
    s = 0.0
    term = 1.0
    m = 0
    while True:
        s += term / (j + m + 1)
        m += 1
        term *= z / m
        if abs(term) <= 1e-18 * abs(s) * (j + m + 1) and m > 4:
            break
        if m > 400:  # pragma: no cover - series always converges long before
            break
    return s * math.exp(-max(z, 0.0))


def m_tilde(j: int, z: float) -> float:
    """exp(-max(z,0)) * int_0^1 t^j exp(z t) dt, accurate for all real z."""
    if z == 0.0:
        return 1.0 / (j + 1)
    if z < 0.0:
        w = -z
        if w < 1e-3:
            return _m_tilde_series(j, z)
        # int_0^1 t^j e^{-wt} dt = gamma(j+1) P(j+1, w) / w^{j+1}
        p = sps.gammainc(j + 1, w)
        if p == 0.0:  # pragma: no cover - only for absurdly small w
            return _m_tilde_series(j, z)
        return math.exp(sps.gammaln(j + 1) + math.log(p) - (j + 1) * math.log(w))
    if z <= 60.0:
        return _m_tilde_series(j, z)
    # z > 60: n_j = (1 - j n_{j-1})/z contracts errors by j/z < 1.
    n = -math.expm1(-z) / z
    for i in range(1, j + 1):
        n = (1.0 - i * n) / z
    return n


def exp_poly_moment(k: int, a: float, b: float, beta: float) -> ScaledValue:
    """int_a^b x^k e^(beta x) dx as a scaled value, [a, b] within [0, 1]."""
    if b <= a:
        return (0.0, 0.0)
    w = b - a
    z = beta * w
    scale = max(beta * a, beta * b)
    # x = a + w t; binomial expansion keeps every term nonnegative.
    acc = 0.0
    for j in range(k + 1):
        acc += math.comb(k, j) * a ** (k - j) * w**j * m_tilde(j, z)
    return (w * acc, scale)


def _e1in_series(z: float) -> float:
    s = 0.0
    term = 1.0
    k = 1
    while True:
        term *= z / k
        s += term / k
        k += 1
        if abs(term) <= 1e-18 * max(abs(s), 1e-300) * k:
            break
        if k > 500:  # pragma: no cover
            break
    return s


def e1in(z: float) -> ScaledValue:
    """int_0^z (e^t - 1)/t dt as a scaled value (entire function of z)."""
    if z == 0.0:
        return (0.0, 0.0)
    if -3.0 <= z <= 30.0:
        return (_e1in_series(z), 0.0)
    if z < -3.0:
        # Ei(z) - gamma - log|z| with Ei(z) = -E1(-z) for z < 0.
        return (-sps.exp1(-z) - EULER_GAMMA - math.log(-z), 0.0)
    if z <= 700.0:
        return (sps.expi(z) - EULER_GAMMA - math.log(z), 0.0)
    # z > 700: asymptotic Ei(z) ~ e^z/z * sum k!/z^k, gamma+log z negligible.
    s = 0.0
    term = 1.0 / z
    for k in range(0, 40):
        if k > 0:
            term *= k / z
        s += term
        if term < 1e-20 * s:
            break
    return (s, z)


_GL64_NODES, _GL64_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _exp_integrand_panels(f, a: float, b: float, n_panels: int):
    """Gauss-Legendre 64 on n_panels equal panels; f maps ndarray->ndarray."""
    edges = np.linspace(a, b, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    x = (mid + half * _GL64_NODES[None, :]).ravel()
    vals = f(x).reshape(n_panels, 64)
    return float(np.sum(vals * _GL64_WEIGHTS[None, :] * half))


def e1in_diff(a: float, b: float, beta: float) -> ScaledValue:
    """int_a^b (e^(beta x) - 1)/x dx as a scaled value, 0 <= a < b <= 1.

    Valid for a = 0 (the integrand extends continuously).
    """
    if beta == 0.0 or b <= a:
        return (0.0, 0.0)
    zb = beta * b
    za = beta * a
    if 0.0 < beta and zb <= 30.0:
        # Homogeneous-difference series: all terms positive.
        s = 0.0
        pa, pb = 1.0, 1.0
        k = 1
        fact = 1.0
        while True:
            pa *= za
            pb *= zb
            fact *= k
            term = (pb - pa) / (k * fact)
            s += term
            k += 1
            if term <= 1e-18 * s and k > 4:
                break
            if k > 200:  # pragma: no cover
                break
        return (s, 0.0)
    # General case: scaled Gauss-Legendre panels; integrand bounded by 1/x of
    # mass near the upper (beta>0) or lower (beta<0) endpoint.
    scale = max(za, zb, 0.0)

    def f(x):
        t = beta * x
        out = np.empty_like(x)
        small = np.abs(t) < 1e-4
        ts = t[small]
        out[small] = beta * (1.0 + ts / 2.0 + ts * ts / 6.0) * np.exp(-scale)
        xl = x[~small]
        tl = t[~small]
        out[~small] = (np.exp(tl - scale) - np.exp(-scale)) / xl
        return out

    n_panels = int(abs(zb - za) / 20.0) + 2
    # refine toward the dominant endpoint for accuracy of the 1/x factor
    if a == 0.0:
        val = _exp_integrand_panels(f, 0.0, b / 8, 2 * n_panels)
        val += _exp_integrand_panels(f, b / 8, b, 4 * n_panels)
    else:
        val = _exp_integrand_panels(f, a, b, 4 * n_panels)
    return (val, scale)


def e1in_complex(z: np.ndarray) -> np.ndarray:
    """int_0^z (e^t - 1)/t dt for complex z with |Re z| <= ~700, vectorized."""
    z = np.asarray(z, dtype=complex)
    out = np.empty_like(z)
    small = np.abs(z) <= 8.0
    if np.any(small):
        zs = z[small]
        s = np.zeros_like(zs)
        term = np.ones_like(zs)
        for k in range(1, 60):
            term = term * zs / k
            s += term / k
        out[small] = s
    if np.any(~small):
        zl = z[~small]
        # E1in(z) = -gamma - log(-z) - E1(-z), principal branch.
        out[~small] = -EULER_GAMMA - np.log(-zl) - sps.exp1(-zl)
    return out


def complex_poly_exp_moment(k: int, a: float, b: float, zeta: np.ndarray,
                            scale: float) -> np.ndarray:
    """int_a^b x^k e^(zeta x) dx * e^(-scale) for an array of complex zeta.

    Stable for |zeta (b-a)| <= 8 via series and for larger moduli via the
    integration-by-parts recurrence (error contraction j/|z| with j <= k).
    For intermediate moduli with high k, falls back to panel quadrature.
    """
    zeta = np.asarray(zeta, dtype=complex)
    w = b - a
    z = zeta * w
    absz = np.abs(z)
    out = np.empty_like(zeta)

    # m_j(z) = int_0^1 t^j e^{z t} dt for j = 0..k, then binomial recombine.
    def recombine(mj_rows, idx):
        acc = np.zeros_like(mj_rows[0])
        for j in range(k + 1):
            acc += math.comb(k, j) * a ** (k - j) * w**j * mj_rows[j]
        pref = np.exp(zeta[idx] * a - scale)
        return w * pref * acc

    small = absz <= 8.0
    if np.any(small):
        zs = z[small]
        rows = []
        for j in range(k + 1):
            s = np.zeros_like(zs)
            term = np.ones_like(zs)
            s += term / (j + 1)
            for m in range(1, 45):
                term = term * zs / m
                s += term / (j + m + 1)
            rows.append(s)
        out[small] = recombine(rows, small)
    big = ~small
    if np.any(big):
        safe = big & (absz >= 2.0 * max(k, 1))
        hard = big & ~safe
        if np.any(safe):
            zs = z[safe]
            # scaled recurrence on m~_j = e^{-s} m_j with s = max(Re z, 0)
            s0 = np.maximum(zs.real, 0.0)
            ez = np.exp(zs - s0)
            e0 = np.exp(-s0)
            mj = (ez - e0) / zs
            rows = [mj]
            for j in range(1, k + 1):
                mj = (ez - j * mj) / zs
                rows.append(mj)
            pref = np.exp(zeta[safe] * a - scale + s0 / w * w)
            # recombine manually since scaling differs from `recombine`
            acc = np.zeros_like(rows[0])
            for j in range(k + 1):
                acc += math.comb(k, j) * a ** (k - j) * w**j * rows[j]
            out[safe] = w * np.exp(zeta[safe] * a + s0 - scale) * acc
        if np.any(hard):
            idx = np.nonzero(hard)[0]
            for i in idx:
                zt = complex(zeta[i])
                n_panels = int(abs(z[i]) / 4.0) + 2
                nodes_acc = 0.0 + 0.0j
                edges = np.linspace(a, b, n_panels + 1)
                for lo, hi in zip(edges[:-1], edges[1:]):
                    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
                    x = mid + half * _GL64_NODES
                    nodes_acc += half * np.sum(
                        _GL64_WEIGHTS * x**k * np.exp(zt * x - scale)
                    )
                out[i] = nodes_acc
    return out
