"""Piecewise intensity densities on (0, 1]: parsing, validation, classification.

A density g is represented by contiguous pieces, each of the form

    g(x) = inv_coeff / x + p0 + p1 x + p2 x^2 + ...     on [lo, hi),

with the last piece closed at 1.  This family covers the scale-invariant
1/x density, its truncations, and bounded piecewise-polynomial densities,
while keeping every moment integral in closed form.  An unbounded singularity
(inv_coeff > 0 with lo = 0) is permitted only on the first piece; it is what
separates the infinite-mass class from the finite-mass one.

Specs are immutable after construction and all operations here are pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InvariantError, SchemaError

_MAX_POLY_DEGREE = 24
_EPS_FLOOR_MIN_EXP = 20  # scan eps over 2^-2 .. 2^-20


class MassKind(Enum):
    FINITE = "finite"
    INFINITE = "infinite"


class Applicability(Enum):
    """Which asymptotic regime a spec falls in.

    FINITE_MASS: bounded density, atom at 0, relative error order 1/u.
    INFINITE_MASS: proper density with bounded x*g(x), error order 1/sqrt(u).
    REJECTED: parsed but outside the supported asymptotic classes.
    """

    FINITE_MASS = "finite-mass"
    INFINITE_MASS = "infinite-mass"
    REJECTED = "rejected"


class EpsFloor(NamedTuple):
    eps: float
    verified: bool


@dataclass(frozen=True)
class DensityPiece:
    """One piece g(x) = inv_coeff/x + poly(x) on [lo, hi)."""

    lo: float
    hi: float
    inv_coeff: float = 0.0
    poly: tuple[float, ...] = ()

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        val = np.zeros_like(x)
        if self.poly:
            val = np.polynomial.polynomial.polyval(x, self.poly)
        if self.inv_coeff:
            val = val + self.inv_coeff / x
        return val

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        val = np.zeros_like(x)
        if len(self.poly) > 1:
            dcoef = np.polynomial.polynomial.polyder(self.poly)
            val = np.polynomial.polynomial.polyval(x, dcoef)
        if self.inv_coeff:
            val = val - self.inv_coeff / (x * x)
        return val

    def critical_points(self, a: float, b: float) -> list[float]:
        """Real roots of g' inside (a, b): roots of x^2 poly'(x) - inv_coeff."""
        coeffs = [-self.inv_coeff, 0.0]
        if len(self.poly) > 1:
            dcoef = np.polynomial.polynomial.polyder(self.poly)
            coeffs = np.polynomial.polynomial.polyadd(
                coeffs, np.polynomial.polynomial.polymulx(
                    np.polynomial.polynomial.polymulx(dcoef))
            ).tolist()
        coeffs = np.trim_zeros(np.asarray(coeffs, dtype=float), "b")
        if len(coeffs) < 2:
            return []
        roots = np.polynomial.polynomial.polyroots(coeffs)
        out = []
        for r in roots:
            if abs(r.imag) < 1e-12 and a < r.real < b:
                out.append(float(r.real))
        return out

    def min_on(self, a: float, b: float, samples: int = 64) -> float:
        """Minimum of g over [a, b] via endpoints, critical points, sampling."""
        a = max(a, self.lo if self.lo > 0 else max(a, 1e-300))
        xs = [a, b] + self.critical_points(a, b)
        if samples:
            xs.extend(np.linspace(a, b, samples + 2)[1:-1].tolist())
        return float(np.min(self(np.asarray(xs))))


@dataclass(frozen=True)
class LevyDensitySpec:
    """A validated piecewise density with precomputed derived quantities."""

    pieces: tuple[DensityPiece, ...]
    support_lo: float
    mass: float
    first_moment: float
    sup_xg: float
    eps_floor: EpsFloor
    label: str = ""

    def g(self, x: float) -> float:
        return eval_g(self, x)


def _piece_mass(p: DensityPiece) -> float:
    if p.inv_coeff and p.lo == 0.0:
        return math.inf
    m = 0.0
    if p.inv_coeff:
        m += p.inv_coeff * math.log(p.hi / p.lo)
    for k, c in enumerate(p.poly):
        m += c * (p.hi ** (k + 1) - p.lo ** (k + 1)) / (k + 1)
    return m


def _piece_first_moment(p: DensityPiece) -> float:
    m = p.inv_coeff * (p.hi - p.lo)
    for k, c in enumerate(p.poly):
        m += c * (p.hi ** (k + 2) - p.lo ** (k + 2)) / (k + 2)
    return m


def _piece_sup_xg(p: DensityPiece) -> float:
    """sup of x*g(x) = inv_coeff + x*poly(x) over [lo, hi]."""
    coeffs = np.polynomial.polynomial.polymulx(p.poly or (0.0,))
    xs = [p.lo, p.hi]
    if len(coeffs) > 1:
        dcoef = np.polynomial.polynomial.polyder(coeffs)
        dcoef = np.trim_zeros(np.asarray(dcoef, dtype=float), "b")
        if len(dcoef) >= 2:
            for r in np.polynomial.polynomial.polyroots(dcoef):
                if abs(r.imag) < 1e-12 and p.lo < r.real < p.hi:
                    xs.append(float(r.real))
    vals = np.polynomial.polynomial.polyval(np.asarray(xs), coeffs)
    return float(p.inv_coeff + np.max(vals))


def _check_nonnegative(p: DensityPiece, index: int) -> None:
    lo_eval = p.lo if p.lo > 0 else min(1e-12, p.hi / 2)
    floor = p.min_on(lo_eval, p.hi, samples=64)
    scale = 1.0 + abs(p.inv_coeff) + sum(abs(c) for c in p.poly)
    if floor < -1e-12 * scale:
        raise InvariantError(
            f"negative density: piece {index} attains {floor:.6g} "
            f"on [{p.lo}, {p.hi}]"
        )


def _eps_floor(pieces: tuple[DensityPiece, ...]) -> EpsFloor:
    """Largest eps <= 1/4 on a dyadic grid with g >= eps on [1-eps, 1]."""
    for k in range(2, _EPS_FLOOR_MIN_EXP + 1):
        eps = 2.0 ** -k
        lo = 1.0 - eps
        floor = math.inf
        for p in pieces:
            a, b = max(p.lo, lo), p.hi
            if b <= a:
                continue
            floor = min(floor, p.min_on(a, b, samples=64))
        if floor != math.inf and floor >= eps:
            return EpsFloor(eps, True)
    raise InvariantError(
        "density floor near 1 not verifiable: no eps <= 1/4 with "
        "g >= eps on [1-eps, 1]"
    )


def _build_spec(pieces: tuple[DensityPiece, ...], label: str) -> LevyDensitySpec:
    mass = sum(_piece_mass(p) for p in pieces)
    first_moment = sum(_piece_first_moment(p) for p in pieces)
    if not (first_moment > 0.0 and math.isfinite(first_moment)):
        raise InvariantError(f"first moment {first_moment} outside (0, inf)")
    sup_xg = max(_piece_sup_xg(p) for p in pieces)
    eps_floor = _eps_floor(pieces)
    return LevyDensitySpec(
        pieces=pieces,
        support_lo=pieces[0].lo,
        mass=mass,
        first_moment=first_moment,
        sup_xg=sup_xg,
        eps_floor=eps_floor,
        label=label,
    )


def parse_spec(document) -> LevyDensitySpec:
    """Parse and validate a density-spec document.

    Accepts a JSON string or an already-decoded dict of the form
    {"pieces": [{"lo": x, "hi": y, "inv_coeff": c, "poly": [...]}, ...],
     "label": "..."}.  Pieces must be pre-sorted by lo and contiguous up
    to hi = 1.  Raises SchemaError for malformed documents and
    InvariantError for well-formed documents violating a model invariant.
    """
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(document, dict):
        raise SchemaError("document must be a JSON object")
    unknown = set(document) - {"pieces", "label"}
    if unknown:
        raise SchemaError(f"unknown top-level keys: {sorted(unknown)}")
    raw_pieces = document.get("pieces")
    if not isinstance(raw_pieces, list) or not raw_pieces:
        raise SchemaError("'pieces' must be a non-empty list")
    label = document.get("label", "")
    if not isinstance(label, str):
        raise SchemaError("'label' must be a string")

    pieces = []
    for i, entry in enumerate(raw_pieces):
        if not isinstance(entry, dict):
            raise SchemaError(f"piece {i} is not an object")
        unknown = set(entry) - {"lo", "hi", "inv_coeff", "poly"}
        if unknown:
            raise SchemaError(f"piece {i} has unknown keys: {sorted(unknown)}")
        try:
            lo = float(entry["lo"])
            hi = float(entry["hi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"piece {i} needs numeric 'lo' and 'hi'") from exc
        inv = float(entry.get("inv_coeff", 0.0))
        poly_raw = entry.get("poly", [])
        if not isinstance(poly_raw, list):
            raise SchemaError(f"piece {i} 'poly' must be a list of numbers")
        try:
            poly = tuple(float(c) for c in poly_raw)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"piece {i} 'poly' must be numeric") from exc
        if len(poly) > _MAX_POLY_DEGREE + 1:
            raise SchemaError(
                f"piece {i} polynomial degree above {_MAX_POLY_DEGREE}"
            )
        pieces.append(DensityPiece(lo=lo, hi=hi, inv_coeff=inv,
                                   poly=tuple(np.trim_zeros(poly, "b"))))

    for i, p in enumerate(pieces):
        if not (0.0 <= p.lo < p.hi <= 1.0):
            raise InvariantError(
                f"piece {i} bounds [{p.lo}, {p.hi}] not within [0, 1] "
                f"with lo < hi"
            )
        if p.inv_coeff < 0.0:
            raise InvariantError(f"piece {i} inv_coeff {p.inv_coeff} negative")
        if i > 0 and p.inv_coeff != 0.0:
            raise InvariantError(
                "inv_coeff may be nonzero only on the first piece"
            )
        if i > 0 and p.lo != pieces[i - 1].hi:
            raise InvariantError(
                f"gap between pieces {i - 1} and {i}: "
                f"{pieces[i - 1].hi} != {p.lo}"
            )
    if pieces[-1].hi != 1.0:
        raise InvariantError("last piece must end at 1")
    for i, p in enumerate(pieces):
        _check_nonnegative(p, i)
    return _build_spec(tuple(pieces), label)


def serialize(spec: LevyDensitySpec) -> dict:
    """Inverse of parse_spec on all stored fields."""
    return {
        "pieces": [
            {"lo": p.lo, "hi": p.hi, "inv_coeff": p.inv_coeff,
             "poly": list(p.poly)}
            for p in spec.pieces
        ],
        "label": spec.label,
    }


def eval_g(spec: LevyDensitySpec, x: float) -> float:
    """Evaluate g at x in (0, 1]; right limits at interior breakpoints."""
    if not (0.0 < x <= 1.0):
        raise DomainError(f"x = {x} outside (0, 1]")
    return float(eval_g_many(spec, np.asarray([x]))[0])


def eval_g_many(spec: LevyDensitySpec, x: np.ndarray) -> np.ndarray:
    """Vectorized eval_g without domain checks; zero outside the support."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i, p in enumerate(spec.pieces):
        if i == len(spec.pieces) - 1:
            sel = (x >= p.lo) & (x <= p.hi)
        else:
            sel = (x >= p.lo) & (x < p.hi)
        if np.any(sel):
            out[sel] = p(x[sel])
    return out


def g_one_sided(spec: LevyDensitySpec, x: float, side: int) -> float:
    """One-sided limit of g at x: side=+1 from above, -1 from below."""
    if side >= 0:
        if x >= 1.0:
            return 0.0
        for p in spec.pieces:
            if p.lo <= x < p.hi:
                return float(p(x))
        return 0.0
    if x <= spec.support_lo or x > 1.0:
        return 0.0
    for p in spec.pieces:
        if p.lo < x <= p.hi:
            return float(p(x))
    return 0.0


def g_jumps(spec: LevyDensitySpec) -> list[tuple[float, float]]:
    """Discontinuities of g as (location, jump g(x+) - g(x-)), ascending."""
    points = {p.lo for p in spec.pieces} | {1.0}
    out = []
    for x in sorted(points):
        if x == 0.0:
            continue
        delta = g_one_sided(spec, x, +1) - g_one_sided(spec, x, -1)
        if delta != 0.0:
            out.append((x, delta))
    return out


@dataclass(frozen=True)
class SpecClass:
    """Classification of a spec for the asymptotic formulas."""

    kind: MassKind
    regime: Applicability
    atom_mass_at_beta0: float
    note: str = ""


def classify(spec: LevyDensitySpec) -> SpecClass:
    """Sort a spec into the finite-mass / infinite-mass / rejected classes.

    Finite total mass gives an atom exp(-mass) at zero and the sharper
    relative error order.  Infinite mass requires the 1/x coefficient at
    zero to be at least 1: below that the density of the arrival sum (and
    every tilt of it) is unbounded near 0, which breaks the uniform local
    limit the formulas rest on.
    """
    if math.isfinite(spec.mass):
        return SpecClass(
            kind=MassKind.FINITE,
            regime=Applicability.FINITE_MASS,
            atom_mass_at_beta0=math.exp(-spec.mass),
        )
    c = spec.pieces[0].inv_coeff
    if c < 1.0:
        return SpecClass(
            kind=MassKind.INFINITE,
            regime=Applicability.REJECTED,
            atom_mass_at_beta0=0.0,
            note=(
                f"1/x coefficient {c} < 1 at zero: the arrival-sum density "
                f"behaves like x^{c - 1:.3g} near 0, so the tilted "
                "standardized density is unbounded and the uniform local "
                "limit fails"
            ),
        )
    return SpecClass(
        kind=MassKind.INFINITE,
        regime=Applicability.INFINITE_MASS,
        atom_mass_at_beta0=0.0,
    )


def is_exact_dickman(spec: LevyDensitySpec) -> bool:
    """True iff g is exactly 1/x on (0, 1]."""
    return (
        len(spec.pieces) == 1
        and spec.pieces[0].lo == 0.0
        and spec.pieces[0].hi == 1.0
        and spec.pieces[0].inv_coeff == 1.0
        and not any(spec.pieces[0].poly)
    )


def builtin(name: str, a: float | None = None) -> LevyDensitySpec:
    """Built-in specs: 'dickman', 'truncated' (g=1/x on (a,1]), 'uniform'.

    'truncated' requires a in (0, 1); 'uniform' allows a in [0, 1).
    """
    if name == "dickman":
        return _build_spec(
            (DensityPiece(lo=0.0, hi=1.0, inv_coeff=1.0),), "dickman"
        )
    if name == "truncated":
        if a is None or not (0.0 < a < 1.0):
            raise DomainError(f"truncated requires a in (0, 1), got {a}")
        return _build_spec(
            (DensityPiece(lo=a, hi=1.0, inv_coeff=1.0),), f"truncated({a:g})"
        )
    if name == "uniform":
        if a is None:
            a = 0.0
        if not (0.0 <= a < 1.0):
            raise DomainError(f"uniform requires a in [0, 1), got {a}")
        return _build_spec(
            (DensityPiece(lo=a, hi=1.0, poly=(1.0,)),), f"uniform({a:g})"
        )
    raise DomainError(f"unknown builtin '{name}'")


def restrict(spec: LevyDensitySpec, a: float) -> LevyDensitySpec:
    """The spec restricted to [a, 1]; used for split sampling and tilts."""
    if not (0.0 < a < 1.0):
        raise DomainError(f"restriction point {a} outside (0, 1)")
    pieces = []
    for p in spec.pieces:
        lo, hi = max(p.lo, a), p.hi
        if hi <= lo:
            continue
        pieces.append(DensityPiece(lo=lo, hi=hi, inv_coeff=p.inv_coeff,
                                   poly=p.poly))
    if not pieces:
        raise DomainError(f"empty support after restriction to [{a}, 1]")
    # inv_coeff lives on the first surviving piece by construction
    return _build_spec(tuple(pieces), f"{spec.label}|[{a:g},1]")
