"""Command-line front-end producing reproducible CSV reports.

Commands: cumulants, compare, simulate, rho, accept.  Every CSV starts with
comment headers recording the tool version, the sha256 of the spec document,
and the full argument list, so outputs are byte-stable given identical
arguments (including seeds and LEVYASYM_THREADS).

Exit codes: 0 ok, 2 input/spec error, 3 numeric error, 4 acceptance failure.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys

from . import __version__
from .asymptotics import ErrorOrder, density_asymptote
from .cumulant import atom_mass, cumulant_triple
from .density import (
    Applicability,
    LevyDensitySpec,
    classify,
    is_exact_dickman,
    parse_spec,
)
from .errors import DomainError, LevyAsymError, SchemaError, InvariantError
from .montecarlo import sample_dickman, sample_finite, sample_split
from .oracles import dickman_rho, fourier_density, oracle_tail, volterra_density
from .saddle import solve_saddle

_EXIT_INPUT = 2
_EXIT_NUMERIC = 3
_EXIT_ACCEPT = 4


def _load_spec(path: str) -> tuple[LevyDensitySpec, str]:
    with open(path, "rb") as fh:
        raw = fh.read()
    digest = hashlib.sha256(raw).hexdigest()
    return parse_spec(raw.decode("utf-8")), digest


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w"), True


def _emit_header(out, spec_hash: str, argv: list[str]) -> None:
    out.write(f"# levyasym {__version__}\n")
    out.write(f"# spec-sha256: {spec_hash}\n")
    out.write(f"# args: {' '.join(argv)}\n")


def _parse_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_cumulants(args, argv) -> int:
    spec, digest = _load_spec(args.spec)
    out, close = _open_out(args.out)
    try:
        _emit_header(out, digest, argv)
        out.write("beta,c0,c1,c2,atom_mass\n")
        for beta in _parse_list(args.beta):
            ct = cumulant_triple(spec, beta)
            out.write(f"{beta!r},{ct.c0!r},{ct.c1!r},{ct.c2!r},"
                      f"{atom_mass(spec, beta)!r}\n")
    finally:
        if close:
            out.close()
    return 0


def _oracle_grid(spec, u_max: float, h: float, t_max_extra: float):
    sp = solve_saddle(spec, u_max)
    t_max = u_max + t_max_extra * math.sqrt(sp.sigma2) + 1.0
    return volterra_density(spec, t_max, h)


def cmd_compare(args, argv) -> int:
    spec, digest = _load_spec(args.spec)
    u_list = _parse_list(args.u)
    if any(b <= a for a, b in zip(u_list, u_list[1:])):
        raise DomainError("u list must be strictly increasing")
    oracle = args.oracle
    if oracle == "auto":
        use_volterra = math.isfinite(spec.mass) or is_exact_dickman(spec)
    else:
        use_volterra = oracle == "volterra"
    grid = None
    if use_volterra:
        h = args.h if args.h else 2.0 ** -12
        t_max = args.tmax if args.tmax else None
        if t_max is None:
            sp = solve_saddle(spec, max(u_list))
            t_max = max(u_list) + 12.0 * math.sqrt(sp.sigma2) + 1.0
        grid = volterra_density(spec, t_max, h)
    order = classify(spec).regime
    out, close = _open_out(args.out)
    n_fail = 0
    try:
        _emit_header(out, digest, argv)
        out.write("u,beta,f_asym,f_oracle,rel_err,scaled_err,"
                  "tail_asym,tail_oracle,tail_rel_err\n")
        max_scaled = 0.0
        for u in u_list:
            try:
                est = density_asymptote(spec, u)
                if grid is not None:
                    f_oracle = grid.value_at(u)
                    tail_oracle = oracle_tail(grid, u, spec)
                else:
                    f_oracle, _ = fourier_density(spec, u)
                    tail_oracle = math.nan
                rel = abs(est.f_hat / f_oracle - 1.0)
                scale = u if est.claimed_rel_error_order is ErrorOrder.ONE_OVER_U \
                    else math.sqrt(u)
                scaled = rel * scale
                max_scaled = max(max_scaled, scaled)
                tail_rel = abs(est.tail_hat / tail_oracle - 1.0) \
                    if tail_oracle == tail_oracle else math.nan
                out.write(
                    f"{u!r},{est.beta!r},{est.f_hat!r},{f_oracle!r},"
                    f"{rel!r},{scaled!r},{est.tail_hat!r},{tail_oracle!r},"
                    f"{tail_rel!r}\n"
                )
            except LevyAsymError as exc:
                n_fail += 1
                out.write(f"{u!r},nan,nan,nan,nan,nan,nan,nan,nan"
                          f"  # {type(exc).__name__}: {exc}\n")
        out.write(f"# max_scaled_err: {max_scaled!r}\n")
    finally:
        if close:
            out.close()
    return 0 if n_fail < len(u_list) else _EXIT_NUMERIC


def cmd_simulate(args, argv) -> int:
    spec, digest = _load_spec(args.spec)
    beta = args.beta_single
    if math.isfinite(spec.mass):
        batch = sample_finite(spec, beta, args.n, args.seed)
    elif is_exact_dickman(spec) and beta == 0.0:
        batch = sample_dickman(args.n, args.seed)
    else:
        batch = sample_split(spec, 0.25, beta, args.n, args.seed)
    out, close = _open_out(args.out)
    try:
        _emit_header(out, digest, argv)
        batch.to_csv(out)
    finally:
        if close:
            out.close()
    return 0


def cmd_rho(args, argv) -> int:
    grid = dickman_rho(args.umax, args.h if args.h else 2.0 ** -10)
    out, close = _open_out(args.out)
    try:
        _emit_header(out, "-", argv)
        grid.to_csv(out)
    finally:
        if close:
            out.close()
    return 0


def cmd_accept(args, argv) -> int:
    from .acceptance import run_all

    results = run_all()
    width = max(len(r.name) for r in results)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  [{r.seconds:7.2f}s]  {r.detail}")
        ok &= r.passed
    return 0 if ok else _EXIT_ACCEPT


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="levyasym",
        description="Saddle-point asymptotics for arrival sums on (0, 1] "
                    "with Volterra, Fourier and Monte Carlo oracles",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("cumulants", help="tabulate C, C', C'' and atom mass")
    c.add_argument("--spec", required=True)
    c.add_argument("--beta", required=True, help="comma-separated tilts")
    c.add_argument("--out", default=None)
    c.set_defaults(fn=cmd_cumulants)

    c = sub.add_parser("compare", help="asymptote vs oracle comparison table")
    c.add_argument("--spec", required=True)
    c.add_argument("--u", required=True, help="comma-separated targets")
    c.add_argument("--oracle", choices=["volterra", "fourier", "auto"],
                   default="auto")
    c.add_argument("--h", type=float, default=None)
    c.add_argument("--tmax", type=float, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(fn=cmd_compare)

    c = sub.add_parser("simulate", help="draw an arrival-sum sample batch")
    c.add_argument("--spec", required=True)
    c.add_argument("--beta", dest="beta_single", type=float, default=0.0)
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--seed", type=int, required=True)
    c.add_argument("--out", default=None)
    c.set_defaults(fn=cmd_simulate)

    c = sub.add_parser("rho", help="march the delay-equation grid")
    c.add_argument("--umax", type=float, required=True)
    c.add_argument("--h", type=float, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(fn=cmd_rho)

    c = sub.add_parser("accept", help="run the acceptance suite")
    c.set_defaults(fn=cmd_accept)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, argv)
    except (SchemaError, InvariantError, FileNotFoundError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return _EXIT_INPUT
    except (LevyAsymError, OverflowError) as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
