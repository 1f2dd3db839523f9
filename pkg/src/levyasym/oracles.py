"""Reference densities by two methods independent of the saddle machinery.

* Volterra marching: the size-bias identity gives

      t f(t) = P0 t g(t) + int_0^min(1,t) z g(z) f(t - z) dz,

  which a forward trapezoid march solves on a uniform grid.  The P0 forcing
  term is the exactly-one-extra-arrival contribution present when the total
  mass is finite.  For the pure 1/x density the equation is homogeneous and
  the known constant seed exp(-gamma) on (0, 1) starts the march.

* Fourier inversion: the tilted characteristic function
  exp(C(b + i tau) - C(b)) minus the tilted atom is inverted at the saddle
  tilt and untilted via f(t) = exp(C(b) - b t) f_b(t).  Beyond the numeric
  window the integrand is either certified negligible (Gaussian-scale decay
  of the oscillation deficit) or integrated analytically from the two-term
  boundary asymptotics of the transform.

Densities of finite-mass specs jump exactly where g does, with jump sizes
P0 * (g jump); the convolution quadrature splits cells at those points and
uses one-sided values, keeping the march uniformly second order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .cumulant import atom_mass, complex_cumulant_many, cumulant_triple
from .density import (
    LevyDensitySpec,
    MassKind,
    classify,
    eval_g_many,
    g_jumps,
    g_one_sided,
    is_exact_dickman,
)
from .errors import DomainError, ModeError, StepError, TailBoundError
from .saddle import solve_saddle
from .special import EULER_GAMMA

_RICHARDSON_LIMIT = 1e-6
_TG_FACTOR = 8.0 * math.sqrt(math.log(1e14))  # standardized cutoff ~45.42


class GridMethod(Enum):
    VOLTERRA = "volterra"
    FOURIER = "fourier"


@dataclass(frozen=True)
class DensityGrid:
    """Uniform grid of density values f(k h), k = 0..t_max/h.

    `jumps` records the discontinuities of f as (location, f(d+) - f(d-));
    grid nodes landing exactly on a jump store the two-sided average, so
    plain trapezoid sums through them stay second order.  Off-grid jumps
    are handled by the cell corrections inside `integral`.
    """

    h: float
    t_max: float
    values: np.ndarray
    atom: float
    method: GridMethod
    err_bound: float
    jumps: tuple[tuple[float, float], ...] = ()

    def value_at(self, t: float) -> float:
        """Linear interpolation of the grid (caller avoids jump points)."""
        if t < 0.0 or t > self.t_max + 1e-12:
            raise DomainError(f"t = {t} outside grid [0, {self.t_max}]")
        x = t / self.h
        j = min(int(x), len(self.values) - 2)
        r = x - j
        return float((1.0 - r) * self.values[j] + r * self.values[j + 1])

    def integral(self, lo: float = 0.0) -> float:
        """Jump-corrected trapezoid of the grid over [lo, t_max]."""
        h = self.h
        k0 = int(math.ceil(lo / h - 1e-9))
        total = float(np.trapezoid(self.values[k0:], dx=h))
        t0 = k0 * h
        if t0 > lo + 1e-15:
            total += 0.5 * (t0 - lo) * (self.value_at(lo)
                                        + float(self.values[k0]))
        for d, delta in self.jumps:
            if not (lo < d < self.t_max):
                continue
            z_l = math.floor(d / h + 1e-9) * h
            if abs(d - z_l) <= 1e-12:
                continue  # aligned nodes already hold the two-sided average
            total -= (d - z_l - 0.5 * h) * delta
        return total

    def probability_mass(self) -> float:
        """atom + integral of the density over the whole grid."""
        return self.atom + self.integral(0.0)

    def to_csv(self, stream) -> None:
        close = False
        if isinstance(stream, (str, bytes)):
            stream = open(stream, "w")
            close = True
        try:
            stream.write(f"# h={self.h!r}\n")
            stream.write(f"# atom={self.atom!r}\n")
            stream.write(f"# method={self.method.value}\n")
            stream.write(f"# err_bound={self.err_bound!r}\n")
            jtxt = ";".join(f"{d!r}:{delta!r}" for d, delta in self.jumps)
            stream.write(f"# jumps={jtxt}\n")
            stream.write("t,f\n")
            for k, v in enumerate(self.values):
                stream.write(f"{k * self.h!r},{v!r}\n")
        finally:
            if close:
                stream.close()

    @staticmethod
    def from_csv(stream) -> "DensityGrid":
        close = False
        if isinstance(stream, (str, bytes)):
            stream = open(stream)
            close = True
        try:
            meta = {}
            values = []
            last_t = 0.0
            for line in stream:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    meta[key.strip()] = val.strip()
                    continue
                if line.startswith("t,"):
                    continue
                t_str, f_str = line.split(",")
                last_t = float(t_str)
                values.append(float(f_str))
            jumps = []
            for entry in meta.get("jumps", "").split(";"):
                if entry:
                    d_str, _, delta_str = entry.partition(":")
                    jumps.append((float(d_str), float(delta_str)))
            return DensityGrid(
                h=float(meta["h"]),
                t_max=last_t,
                values=np.asarray(values),
                atom=float(meta["atom"]),
                method=GridMethod(meta["method"]),
                err_bound=float(meta["err_bound"]),
                jumps=tuple(jumps),
            )
        finally:
            if close:
                stream.close()


def _check_step(h: float) -> int:
    """h must be a power of two <= 2^-8; returns 1/h as an exact integer."""
    if not (0.0 < h <= 2.0 ** -8):
        raise DomainError(f"step {h} must be positive and at most 2^-8")
    m = round(1.0 / h)
    if m & (m - 1) or m * h != 1.0:
        raise DomainError(f"step {h} must be a power of two")
    return m


# ---------------------------------------------------------------------------
# Volterra marching
# ---------------------------------------------------------------------------


def _march_dickman(n_steps: int, m: int, h: float) -> np.ndarray:
    """March t f(t) = int_{t-1}^t f with seed f = exp(-gamma) on [0, 1]."""
    f = np.empty(n_steps + 1)
    f[: m + 1] = math.exp(-EULER_GAMMA)
    if n_steps <= m:
        return f
    window_sum = (m - 1) * math.exp(-EULER_GAMMA)
    fl = f.tolist()
    for k in range(m + 1, n_steps + 1):
        t = k * h
        fk = h * (window_sum + 0.5 * fl[k - m]) / (t - 0.5 * h)
        fl[k] = fk
        window_sum += fk - fl[k - m + 1]
        if k % 256 == 0:
            window_sum = math.fsum(fl[k - m + 2 : k + 1])
    return np.asarray(fl)


class _GeneralMarcher:
    """Finite-mass forward march with jump-aware convolution cells."""

    def __init__(self, spec: LevyDensitySpec, n_steps: int, m: int, h: float):
        self.spec = spec
        self.h = h
        self.m = m
        self.n_steps = n_steps
        self.p0 = atom_mass(spec, 0.0)
        grid_z = np.arange(m + 1) * h
        gz = eval_g_many(spec, grid_z)
        gz[0] = 0.0
        self.zg = grid_z * gz
        self.zg_rev = self.zg[::-1].copy()
        t_grid = np.arange(n_steps + 1) * h
        g_t = eval_g_many(spec, np.minimum(t_grid, 1.0))
        g_t[t_grid > 1.0] = 0.0
        g_t[0] = 0.0
        self.forcing = self.p0 * t_grid * g_t
        # (location, g jump, f jump, g(d-), g(d+), stored-side flag); the
        # stored grid value at a node on the jump is the right limit except
        # at d = 1, where the canonical evaluation g(1) is the left limit.
        self.jumps = [(d, delta, self.p0 * delta, g_one_sided(spec, d, -1),
                       g_one_sided(spec, d, +1), +1 if d < 1.0 - 1e-12 else -1)
                      for d, delta in g_jumps(spec)]
        width_floor = 8.0 * h
        for p in spec.pieces:
            if p.hi - p.lo < width_floor:
                raise DomainError(
                    f"piece [{p.lo}, {p.hi}] narrower than 8 h; refine h"
                )
        if 0.0 < spec.support_lo < width_floor:
            raise DomainError("support_lo below 8 h; refine h")
        self.f = np.zeros(n_steps + 1)
        if spec.support_lo == 0.0:
            # f(0+) = P0 g(0+), the single-arrival value at the origin
            self.f[0] = self.p0 * float(spec.pieces[0](np.asarray(0.0)))

    def _f_branch_offset(self, t_node: float, w_eff: float) -> float:
        """Exact offset moving the stored node value onto the branch of w_eff."""
        s = 0.0
        for d, _, fdelta, _, _, node_side in self.jumps:
            pos = t_node
            if abs(t_node - d) <= 1e-12:
                pos = t_node + (1e-11 if node_side > 0 else -1e-11)
            if pos < d <= w_eff:
                s += fdelta
            elif w_eff < d <= pos:
                s -= fdelta
        return s

    def _f_sided(self, w: float, side: int, k: int) -> float:
        """One-sided density value at w from the grid, O(h^2) accurate.

        Within reach of a jump the two interpolation nodes are taken from
        w's own branch (extrapolating linearly), so branch slopes are
        respected; away from jumps this is plain linear interpolation.
        """
        h, f = self.h, self.f
        w_eff = w + (1e-9 * h if side > 0 else -1e-9 * h)
        near = None
        for d, _, _, _, _, node_side in self.jumps:
            if abs(w - d) <= 2.5 * h:
                near = (d, node_side)
                break
        j = int(math.floor(w / h + 1e-9))
        if near is None:
            if abs(w - j * h) <= 1e-12 and j <= k - 1:
                return f[j]
            j1 = min(j + 1, k - 1)
            j0 = j1 - 1
            if j0 < 0:
                return f[0]
            return f[j0] + (w - j0 * h) * (f[j1] - f[j0]) / h
        d, node_side = near
        base = int(math.floor(d / h + 1e-9))
        aligned = abs(d - base * h) <= 1e-12
        if w_eff > d:
            j0 = base if (aligned and node_side > 0) else base + 1
            j1 = j0 + 1
            if j1 <= k - 1:
                return f[j0] + (w - j0 * h) * (f[j1] - f[j0]) / h
            # frontier: same-side nodes not marched yet; exact-offset fallback
            j1 = min(j + 1, k - 1)
            j0 = j1 - 1
            if j0 < 0:
                return f[0]
            v0 = f[j0] + self._f_branch_offset(j0 * h, w_eff)
            v1 = f[j1] + self._f_branch_offset(j1 * h, w_eff)
            return v0 + (w - j0 * h) * (v1 - v0) / h
        j1 = base - 1 if (aligned and node_side > 0) else base
        j1 = min(j1, k - 1)
        j0 = j1 - 1
        if j0 < 0:
            return f[max(j1, 0)]
        return f[j0] + (w - j0 * h) * (f[j1] - f[j0]) / h

    def _zg_sided(self, z: float, side: int) -> float:
        for d, _, _, gm, gp, _ in self.jumps:
            if abs(z - d) <= 1e-12:
                return z * (gp if side > 0 else gm)
        j = z / self.h
        jr = round(j)
        if abs(j - jr) < 1e-9:
            return float(self.zg[int(jr)])
        return z * float(eval_g_many(self.spec, np.asarray([z]))[0])

    def _cell_value(self, c: int, interior: list[float], t: float,
                    k: int) -> float:
        h = self.h
        z0, z1 = c * h, (c + 1) * h
        pts = [z0] + sorted(x for x in interior if z0 < x < z1) + [z1]
        total = 0.0
        for s0, s1 in zip(pts[:-1], pts[1:]):
            w_lo = self._zg_sided(s0, +1) * self._f_sided(t - s0, -1, k)
            w_hi = self._zg_sided(s1, -1) * self._f_sided(t - s1, +1, k)
            total += 0.5 * (s1 - s0) * (w_lo + w_hi)
        return total

    def run(self) -> np.ndarray:
        h, m, f = self.h, self.m, self.f
        zg, zg_rev = self.zg, self.zg_rev
        mm = len(zg) - 1
        jump_ds = [d for d, *_ in self.jumps]
        for k in range(1, self.n_steps + 1):
            t = k * h
            mk = min(k, m)
            if mk >= 2:
                core = h * float(np.dot(zg_rev[mm - mk + 1 : mm],
                                        f[k - mk + 1 : k]))
            else:
                core = 0.0
            w_end = t - mk * h
            f_end = f[k - mk]
            if any(abs(w_end - d) <= 1e-12 for d in jump_ds):
                # the window endpoint sits on a density jump; the integrand
                # approaches it from z < mk h, i.e. from w above
                f_end = self._f_sided(w_end, +1, k)
            core += 0.5 * h * zg[mk] * f_end
            # jump-aware corrections
            cells = {}
            for d in jump_ds:
                for z_star in (d, t - d):
                    if not (1e-15 < z_star < mk * h - 1e-15):
                        continue
                    x = z_star / h
                    lo_cell = int(math.floor(x - 1e-9))
                    hi_cell = int(math.floor(x + 1e-9))
                    for c in {lo_cell, hi_cell}:
                        if 0 <= c <= mk - 1:
                            cells.setdefault(c, []).append(z_star)
            for c, pts in cells.items():
                plain = 0.5 * h * (zg[c] * f[k - c]
                                   + zg[c + 1] * f[k - c - 1])
                core += self._cell_value(c, pts, t, k) - plain
            f[k] = (self.forcing[k] + core) / t
        return f


def _run_march(spec: LevyDensitySpec, n_steps: int, m: int, h: float):
    """Returns (values, f_jumps); aligned jump nodes hold side averages."""
    if math.isinf(spec.mass):
        return _march_dickman(n_steps, m, h), []
    marcher = _GeneralMarcher(spec, n_steps, m, h)
    values = marcher.run()
    jumps = []
    for d, _, fdelta, *_rest, node_side in marcher.jumps:
        jumps.append((d, fdelta))
        j = d / h
        jr = int(round(j))
        if abs(j - jr) < 1e-9 and jr <= n_steps:
            # stored one-sided value -> two-sided average for the output
            values[jr] -= node_side * 0.5 * fdelta
    return values, jumps


def volterra_density(spec: LevyDensitySpec, t_max: float,
                     h: float) -> DensityGrid:
    """Forward-marched density grid with a Richardson error estimate.

    Supports finite-mass specs and the exact 1/x spec (seeded by the known
    constant).  Other infinite-mass specs raise ModeError; use the Fourier
    oracle for those.  StepError if the h vs 2h difference exceeds 1e-6.
    """
    m = _check_step(h)
    if t_max < 2.0:
        raise DomainError(f"t_max = {t_max} must be at least 2")
    if math.isinf(spec.mass) and not is_exact_dickman(spec):
        raise ModeError(
            "infinite-mass Volterra march is seeded only for the exact 1/x "
            "density; use fourier_density"
        )
    n_steps = int(round(t_max / h))
    fine, jumps = _run_march(spec, n_steps, m, h)
    coarse, _ = _run_march(spec, n_steps // 2, m // 2, 2.0 * h)
    err = float(np.max(np.abs(fine[::2] - coarse)))
    if err > _RICHARDSON_LIMIT:
        raise StepError(
            f"Richardson estimate {err:.3e} above {_RICHARDSON_LIMIT:.0e}; "
            "refine h"
        )
    return DensityGrid(
        h=h,
        t_max=n_steps * h,
        values=fine,
        atom=atom_mass(spec, 0.0),
        method=GridMethod.VOLTERRA,
        err_bound=err,
        jumps=tuple(jumps),
    )


# ---------------------------------------------------------------------------
# The classic delay march for the 1/x arrival-sum scaled density
# ---------------------------------------------------------------------------


def _march_rho(u_max: float, h: float) -> np.ndarray:
    m = round(1.0 / h)
    n = int(round(u_max / h))
    rho = np.ones(n + 1)
    rl = rho.tolist()

    def delayed_mid(idx: int) -> float:
        # cubic interpolation of rho at (idx + 1/2) h from 4 neighbours;
        # the stencil stays inside one integer block, where rho is smooth
        # (the delay equation kinks exactly at the integers, which are
        # grid-aligned because 1/h is an integer)
        block_start = (idx // m) * m
        i0 = min(max(idx - 1, block_start), block_start + m - 3, n - 3)
        s = idx + 0.5 - i0
        w = [
            -(s - 1) * (s - 2) * (s - 3) / 6.0,
            s * (s - 2) * (s - 3) / 2.0,
            -s * (s - 1) * (s - 3) / 2.0,
            s * (s - 1) * (s - 2) / 6.0,
        ]
        return sum(w[j] * rl[i0 + j] for j in range(4))

    for k in range(m, n):
        u = k * h
        s0 = rl[k - m]
        s_mid = delayed_mid(k - m)
        s1 = rl[k - m + 1]
        k1 = -s0 / u
        k2 = -s_mid / (u + 0.5 * h)
        k3 = k2
        k4 = -s1 / (u + h)
        rl[k + 1] = rl[k] + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return np.asarray(rl)


def dickman_rho(u_max: float, h: float) -> DensityGrid:
    """The delay-equation solution with rho = 1 on [0, 1], marched 4th order.

    Relates to volterra_density of the 1/x spec by the exact factor
    exp(-gamma).
    """
    _check_step(h)
    if u_max < 2.0:
        raise DomainError(f"u_max = {u_max} must be at least 2")
    n = int(round(u_max / h))
    fine = _march_rho(u_max, h)
    coarse = _march_rho((n // 2) * 2 * h, 2.0 * h)
    err = float(np.max(np.abs(fine[::2][: len(coarse)] - coarse)))
    if err > _RICHARDSON_LIMIT:
        raise StepError(f"Richardson estimate {err:.3e}; refine h")
    return DensityGrid(
        h=h,
        t_max=n * h,
        values=fine,
        atom=0.0,
        method=GridMethod.VOLTERRA,
        err_bound=err,
    )


# ---------------------------------------------------------------------------
# Fourier inversion of the tilted characteristic function
# ---------------------------------------------------------------------------


def _poch(p: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= p + i
    return out


def _tail_kernel(p: float, v: float, t_cut: float, beta: float) -> complex:
    """int_{t_cut}^inf e^(i tau v) (beta + i tau)^(-p) d tau for v <= 0."""
    if v > 1e-12:
        raise ValueError("tail kernel requires v <= 0")
    if abs(v) <= 1e-12:
        if p <= 1.0:
            raise ValueError("divergent tail kernel")
        return (beta + 1j * t_cut) ** (1.0 - p) / (1j * (p - 1.0))
    av = -v
    z0 = av * (beta + 1j * t_cut)
    if abs(z0) >= 30.0:
        s = 1.0 + 0.0j
        term = 1.0 + 0.0j
        for k in range(1, 40):
            new = term * (-(p + k - 1) / z0)
            if abs(new) > abs(term):
                break
            term = new
            s += term
            if abs(term) <= 1e-17 * abs(s):
                break
        return -1j * np.exp(-1j * av * t_cut) * av ** (p - 1.0) \
            * z0 ** (-p) * s
    import mpmath as mp

    gam = mp.gammainc(1.0 - p, mp.mpc(z0.real, z0.imag))
    val = -1j * mp.e ** (av * beta) * av ** (p - 1.0) * gam
    return complex(val)


def _panel_edges(lo: float, hi: float, spacing: float) -> np.ndarray:
    n = max(1, int(math.ceil((hi - lo) / spacing)))
    return np.linspace(lo, hi, n + 1)


def _integrate_panels(f, edges: np.ndarray, tol: float):
    """GK15 over fixed panels with up to 4 halving refinements."""
    from .quadrature import fixed_panels

    val, est = fixed_panels(f, edges)
    for _ in range(4):
        if est <= tol:
            break
        edges = np.sort(np.concatenate([edges,
                                        0.5 * (edges[:-1] + edges[1:])]))
        val, est = fixed_panels(f, edges)
    return val, est


class _TailModel:
    """Two-term boundary asymptotics of the tilted transform.

    phi(tau) ~ A zeta^(-c) exp(S(zeta)),  zeta = beta + i tau,
    S = (1/zeta) sum J_a e^(zeta a) - (1/zeta^2) sum J'_a e^(zeta a),

    where J_a, J'_a are the jumps of g and g' at the piece breakpoints and
    c is the 1/x coefficient at zero (0 for finite mass, when A equals the
    atom mass).
    """

    def __init__(self, spec: LevyDensitySpec, beta: float, c0: float):
        first = spec.pieces[0]
        self.c = first.inv_coeff if first.lo == 0.0 else 0.0
        self.beta = beta
        poly_mass = 0.0
        for p in spec.pieces:
            for k, coef in enumerate(p.poly):
                poly_mass += coef * (p.hi ** (k + 1) - p.lo ** (k + 1)) / (k + 1)
        if self.c > 0.0:
            k0 = -self.c * (EULER_GAMMA + math.log(first.hi)) - poly_mass
        else:
            k0 = -spec.mass
        self.log_amp = k0 - c0
        # branch factor: the transform behaves like (-zeta)^(-c) on tau > 0
        self.phase = complex(np.exp(1j * math.pi * self.c))
        # breakpoint jumps of g and g' (poly-only at x = 0)
        points = sorted({p.lo for p in spec.pieces} | {1.0})
        self.terms = []  # (a, J, Jp)
        for a in points:
            if a == 0.0:
                poly0 = spec.pieces[0].poly
                j = -(poly0[0] if poly0 else 0.0)
                jp = -(poly0[1] if len(poly0) > 1 else 0.0)
            else:
                j = g_one_sided(spec, a, -1) - g_one_sided(spec, a, +1)
                jm = _g_prime_one_sided(spec, a, -1)
                jpp = _g_prime_one_sided(spec, a, +1)
                jp = jm - jpp
            if j != 0.0 or jp != 0.0:
                self.terms.append((a, j, jp))

    def phi_model(self, tau: float) -> complex:
        zeta = self.beta + 1j * tau
        s = 0.0 + 0.0j
        for a, j, jp in self.terms:
            e = np.exp(zeta * a)
            s += j * e / zeta - jp * e / zeta**2
        amp = math.exp(self.log_amp) if self.log_amp > -700.0 else 0.0
        return amp * self.phase * zeta ** (-self.c) * (1.0 + s + 0.5 * s * s)

    def analytic_tail(self, t_eval: float, t_cut: float) -> float:
        """(1/pi) Re int_{t_cut}^inf e^(-i tau t) (phi_model - P0) d tau."""
        if self.log_amp <= -700.0:
            return 0.0
        amp = math.exp(self.log_amp)
        beta = self.beta
        total = 0.0 + 0.0j
        if self.c > 0.0:
            total += _tail_kernel(self.c, -t_eval, t_cut, beta)
        for a, j, jp in self.terms:
            coef1 = j * math.exp(beta * a)
            coef2 = -jp * math.exp(beta * a)
            if coef1 != 0.0:
                total += coef1 * _tail_kernel(self.c + 1.0, a - t_eval,
                                              t_cut, beta)
            if coef2 != 0.0:
                total += coef2 * _tail_kernel(self.c + 2.0, a - t_eval,
                                              t_cut, beta)
        for a1, j1, _ in self.terms:
            for a2, j2, _ in self.terms:
                coef = 0.5 * j1 * j2 * math.exp(beta * (a1 + a2))
                if coef != 0.0:
                    total += coef * _tail_kernel(self.c + 2.0,
                                                 a1 + a2 - t_eval,
                                                 t_cut, beta)
        return amp * (self.phase * total).real / math.pi


def _g_prime_one_sided(spec: LevyDensitySpec, x: float, side: int) -> float:
    if side >= 0:
        if x >= 1.0:
            return 0.0
        for p in spec.pieces:
            if p.lo <= x < p.hi:
                return float(p.derivative(np.asarray(x)))
        return 0.0
    if x <= spec.support_lo or x > 1.0:
        return 0.0
    for p in spec.pieces:
        if p.lo < x <= p.hi:
            return float(p.derivative(np.asarray(x)))
    return 0.0


def _invert_tilted(spec: LevyDensitySpec, beta: float, t_eval: float,
                   abs_tol: float) -> tuple[float, float]:
    """Tilted density f_b(t_eval) by inverting its characteristic function.

    Returns (value, err_bound).  Uses the closed complex-cumulant route for
    moderate tilts and a positive-integrand deficit/phase route for large
    ones (where forming C(b) - Re C(b+i tau) by subtraction would lose the
    deficit in rounding).
    """
    ct = cumulant_triple(spec, beta)
    sigma = math.sqrt(ct.c2)
    if beta > 20.0:
        return _invert_large_beta(spec, beta, t_eval, ct, abs_tol)
    c0 = ct.c0
    p0 = atom_mass(spec, beta)
    tg = _TG_FACTOR / sigma

    def integrand(taus):
        cz = complex_cumulant_many(spec, beta, taus)
        return np.real(np.exp(cz - c0 - 1j * taus * t_eval)
                       - p0 * np.exp(-1j * taus * t_eval))

    def psi_exact(tau):
        cz = complex_cumulant_many(spec, beta, np.asarray([tau]))[0]
        return np.exp(cz - c0) - p0

    spacing_core = min(0.5 / sigma, math.pi / (2.0 * (abs(t_eval) + 1.0)))
    err = 0.0
    t_num = tg
    if tg < math.pi:
        # Gaussian-scale certificate covers [tg, pi]
        a_coef = 2.0 * ct.c2 / math.pi**2
        err += math.exp(-a_coef * tg * tg) / (2.0 * a_coef * tg) / math.pi
        beyond = math.pi
    else:
        beyond = tg

    # probe the transform past the certified window
    ladder = beyond * np.array([1.0, 1.45, 2.1, 3.1, 4.6, 6.8, 10.0,
                                15.0, 22.0, 33.0, 50.0])
    psis = np.abs(np.exp(complex_cumulant_many(spec, beta, ladder) - c0) - p0)
    zone_raw = float(np.sum(np.diff(ladder) * np.maximum(psis[:-1], psis[1:])))
    zone_raw += psis[-1] * ladder[-1]
    tail_est = 0.0
    tail_val = 0.0
    if zone_raw / math.pi <= 0.3 * abs_tol:
        err += zone_raw / math.pi
        edges = _panel_edges(0.0, t_num, spacing_core)
        val, quad_est = _integrate_panels(integrand, edges, 0.2 * abs_tol)
    else:
        # slow decay: integrate further and close with the analytic tail
        model = _TailModel(spec, beta, c0) if t_eval >= 2.0 else None
        spacing_ext = math.pi / (2.0 * (abs(t_eval) + 1.0))
        t_cut = None
        for mult in (1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0):
            cand = max(beyond * 2.0, 32.0) * mult
            if model is not None:
                samples = cand * np.array([1.02, 1.31, 1.72, 2.2])
                resid = max(
                    abs(psi_exact(s) - model.phi_model(s) + p0)
                    * s ** (model.c + 3.0)
                    for s in samples
                )
                gap = max(t_eval - 3.0, 0.35)
                est = 3.0 * resid / (gap * cand ** (model.c + 2.0)) / math.pi
            else:
                est = 4.0 * abs(psi_exact(cand)) / (
                    max(t_eval, 0.05) * math.pi)
            if est <= 0.3 * abs_tol or mult == 128.0:
                t_cut = cand
                tail_est = est
                break
        if tail_est > max(0.3 * abs_tol, 1e-4):
            raise TailBoundError(
                f"cannot certify the inversion tail at tilt {beta:.4g} "
                f"(estimate {tail_est:.2e}); no certified decay past "
                f"tau = {t_cut:.4g}"
            )
        err += tail_est
        edges = np.concatenate([
            _panel_edges(0.0, t_num, spacing_core),
            _panel_edges(t_num, t_cut, spacing_ext)[1:],
        ])
        val, quad_est = _integrate_panels(integrand, edges, 0.2 * abs_tol)
        if model is not None:
            tail_val = model.analytic_tail(t_eval, t_cut)
    err += quad_est
    f_b = val / math.pi + tail_val
    return f_b, err


def _invert_large_beta(spec: LevyDensitySpec, beta: float, t_eval: float,
                       ct, abs_tol: float) -> tuple[float, float]:
    """Deficit/phase route: integrand exp(-H) cos(Theta) with

    H = tau^2 sum A_q K2(tau x_q),  Theta = tau^3 sum B_q K3(tau x_q)
        - tau (t_eval - C'),

    assembled from positive Gauss-Legendre node weights; no cancellation in
    H even when C(b) dwarfs it.
    """
    if beta > 690.0:
        raise OverflowError("tilt too large for the inversion route")
    sigma = math.sqrt(ct.c2)
    nodes_x = []
    nodes_w = []
    gl_x, gl_w = np.polynomial.legendre.leggauss(32)
    for p in spec.pieces:
        lo_eff = max(p.lo, p.hi - 200.0 / beta)
        edges = [p.lo] if lo_eff > p.lo else []
        edges += list(np.linspace(lo_eff, p.hi,
                                  max(2, int((p.hi - lo_eff) * beta / 2.5) + 2)))
        for a, b in zip(edges[:-1], edges[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            x = mid + half * gl_x
            w = half * gl_w * eval_g_many(spec, x) * np.exp(beta * x)
            nodes_x.append(x)
            nodes_w.append(w)
    x_q = np.concatenate(nodes_x)
    w_q = np.concatenate(nodes_w)
    a_q = w_q * x_q * x_q
    b_q = w_q * x_q**3

    def k2(theta):
        out = np.empty_like(theta)
        small = np.abs(theta) < 1e-4
        ts = theta[small]
        out[small] = 0.5 - ts * ts / 24.0
        tl = theta[~small]
        s = np.sin(0.5 * tl)
        out[~small] = 2.0 * s * s / (tl * tl)
        return out

    def k3(theta):
        out = np.empty_like(theta)
        small = np.abs(theta) < 1e-2
        ts = theta[small]
        out[small] = -1.0 / 6.0 + ts * ts / 120.0
        tl = theta[~small]
        out[~small] = (np.sin(tl) - tl) / tl**3
        return out

    drift = t_eval - ct.c1

    def integrand(taus):
        theta_m = taus[:, None] * x_q[None, :]
        h_vals = taus**2 * (k2(theta_m) @ a_q)
        s3 = taus**3 * (k3(theta_m) @ b_q)
        return np.exp(-h_vals) * np.cos(s3 - taus * drift)

    tg = _TG_FACTOR / sigma
    # certificate past tg: H >= 2 sigma^2 tau^2 / pi^2 on [tg, pi], and the
    # deficit evaluated directly on a ladder beyond pi
    a_coef = 2.0 * ct.c2 / math.pi**2
    err = math.exp(-a_coef * tg * tg) / (2.0 * a_coef * tg) / math.pi
    ladder = np.array([math.pi, 2 * math.pi, 4 * math.pi, 16 * math.pi,
                       64 * math.pi, 256 * math.pi])
    h_ladder = ladder**2 * (k2(ladder[:, None] * x_q[None, :]) @ a_q)
    if float(np.min(h_ladder)) < 60.0:
        raise TailBoundError(
            f"deficit not certified past pi at tilt {beta:.4g}"
        )
    edges = _panel_edges(0.0, min(tg, math.pi), min(0.5 / sigma, 0.5))
    val, quad_est = _integrate_panels(integrand, edges, 0.2 * abs_tol)
    return val / math.pi + 0.0, err + quad_est


def fourier_density(spec: LevyDensitySpec, u: float, *,
                    beta: float | None = None,
                    abs_tol: float = 2e-7) -> tuple[float, float]:
    """Untilted density f(u) via tilted inversion: (value, err_bound).

    The tilt defaults to the saddle beta(u); passing beta overrides it
    (the reconstruction is tilt-invariant).  Accuracy is guaranteed for
    u >= 2, where the density is continuously differentiable; smaller u is
    best-effort with an honest error bound.
    """
    if u <= 0.0:
        raise DomainError(f"u = {u} must be positive")
    if beta is None:
        beta = solve_saddle(spec, u).beta
    ct = cumulant_triple(spec, beta)
    log_pf = ct.c0 - beta * u
    pf = math.exp(log_pf) if log_pf < 700.0 else math.inf
    peak = 0.4 / math.sqrt(ct.c2)
    # cap the tilted tolerance so the untilted value keeps relative meaning,
    # but let an explicitly loosened abs_tol through (best-effort small u)
    cap = max(3e-6 * max(peak, 1e-6), abs_tol)
    tol_b = min(abs_tol / pf if pf > 0 else math.inf, cap)
    tol_b = max(tol_b, 1e-13)
    f_b, err_b = _invert_tilted(spec, beta, u, tol_b)
    f_b = max(f_b, 0.0)
    if pf == math.inf:  # pragma: no cover - huge negative tilt regime
        raise OverflowError("untilting factor overflows; use smaller |beta|")
    return pf * f_b, pf * err_b


def fourier_tilted_standardized(spec: LevyDensitySpec, beta: float,
                                y: float,
                                abs_tol: float = 1e-7) -> tuple[float, float]:
    """Density of (T_b - E T_b)/sd(T_b) at y, via Fourier inversion."""
    ct = cumulant_triple(spec, beta)
    sigma = math.sqrt(ct.c2)
    t_eval = ct.c1 + sigma * y
    if t_eval <= 0.0:
        return 0.0, 0.0
    f_b, err = _invert_tilted(spec, beta, t_eval, abs_tol / sigma)
    return sigma * f_b, sigma * err


# ---------------------------------------------------------------------------
# Tail integration of a density grid
# ---------------------------------------------------------------------------


def oracle_tail(grid: DensityGrid, u: float, spec: LevyDensitySpec) -> float:
    """P(T >= u) from the grid: trapezoid over [u, t_max].

    Requires u <= t_max - 10 sd(beta(u)) so the mass beyond the grid is
    negligible at the grid's accuracy (the analytic remainder there is
    below the asymptotic tail value at t_max).
    """
    sp = solve_saddle(spec, u)
    if u > grid.t_max - 10.0 * math.sqrt(sp.sigma2):
        raise DomainError(
            f"u = {u} too close to t_max = {grid.t_max} for the remainder "
            "to be negligible"
        )
    return grid.integral(u)
