"""
Command-line front end: ``unicp {phases,verify,search,scan,correlated,echo}``.

Angles are given in degrees and frequencies in Hz or kHz (cycles per second);
conversion to radians and rad/s happens here. Every output carries a
``# config:`` line with the fully resolved arguments. Re-running that line
reproduces the output byte for byte; worker count and output path are left
out because they do not affect the content.

Exit codes: 0 ok, 1 usage or invalid input, 2 verification failed,
3 numerical non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import os
import shlex
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__, dynamics, echo, scanner, series
from .errors import ConvergenceError, DomainError, ResourceLimitError, UnknownSequenceError
from .sequences import (
    CATALOG,
    PhaseLaw,
    catalog_lookup,
    format_pi,
    format_pi_tuple,
    from_degrees,
    get_entry,
    parse_pi_tuple,
    phases_from_law,
    read_sequence,
    to_degrees,
    write_sequence,
)

EXIT_USAGE, EXIT_VERIFY, EXIT_CONVERGENCE, EXIT_IO = 1, 2, 3, 4
TWO_PI = 2.0 * np.pi

# flags that never change an output's content
_NOT_ECHOED = {"output", "workers", "command", "func"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# Argument groups


def _add_sequence(p, positional=True):
    if positional:
        p.add_argument("seq", nargs="?", default=None,
                       help="catalog name (single, U3, U5, U7, U13, U25) or sequence file")
    p.add_argument("--phi2-deg", type=float, default=None,
                   help="free phase phi2 [deg]; default: variant 'a' of the catalog entry")
    p.add_argument("--variant", choices=["a", "b"], default=None,
                   help="named catalog variant instead of --phi2-deg")
    p.add_argument("--law", default=None,
                   help="second differences Phi as multiples of pi, e.g. '(2,3,2)π/3' or 'pi'")
    p.add_argument("--n", type=int, default=None,
                   help="pulse count for --law [count]")


def _add_pulse(p, grid=False):
    p.add_argument("--rabi-khz", type=float, default=scanner.DEFAULT_RABI_HZ / 1e3,
                   help="peak Rabi frequency Omega/2pi [kHz] (default %(default)s)")
    p.add_argument("--shape", default="rectangular",
                   help="envelope: rectangular, gaussian, or a two-column file (time_s, amplitude)")
    p.add_argument("--chirp-hz-per-s", type=float, default=0.0,
                   help="linear detuning ramp d(Delta/2pi)/dt [Hz/s] (default 0)")
    p.add_argument("--stark-coeff", type=float, default=0.0,
                   help="Stark shift per unit Rabi frequency [dimensionless] (default 0)")
    p.add_argument("--tolerance", type=float, default=dynamics.DEFAULT_TOLERANCE,
                   help="propagator convergence tolerance [dimensionless] (default %(default)g)")
    if grid:
        lo, hi, nd = scanner.DEFAULT_DETUNING_HZ
        tlo, thi, nt = scanner.DEFAULT_DURATION_S
        p.add_argument("--detuning-range-khz", type=float, nargs=2, metavar=("MIN", "MAX"),
                       default=[lo / 1e3, hi / 1e3],
                       help="detuning axis Delta/2pi [kHz] (default %(default)s)")
        p.add_argument("--detuning-points", type=int, default=nd,
                       help="detuning axis points [count] (default %(default)s)")
        p.add_argument("--duration-range-us", type=float, nargs=2, metavar=("MIN", "MAX"),
                       default=[tlo * 1e6, thi * 1e6],
                       help="constituent-pulse duration axis [us] (default %(default)s)")
        p.add_argument("--duration-points", type=int, default=nt,
                       help="duration axis points [count] (default %(default)s)")
    else:
        p.add_argument("--detuning-khz", type=float, default=0.0,
                       help="static detuning Delta/2pi [kHz] (default 0)")
        p.add_argument("--duration-us", type=float, default=None,
                       help="constituent-pulse duration [us]; default: pi pulse 1/(2 Omega/2pi)")


def _add_workers(p):
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="process pool size [count]; never changes results (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unicp", description="Universal composite pulse engine.")
    parser.add_argument("--version", action="version", version=f"unicp {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("phases", help="per-pulse phases of a catalog entry or phase law")
    _add_sequence(p)
    p.add_argument("-o", "--output", help="write a sequence file")
    p.set_defaults(func=cmd_phases)

    p = sub.add_parser("verify", help="series check of universality up to order j0")
    _add_sequence(p)
    p.add_argument("--j0", type=int, default=None,
                   help="claimed nullified order [count]; default: catalog value")
    p.add_argument("--verify-tolerance", type=float, default=series.UNIVERSAL_TOL,
                   help="max harmonic amplitude counted as zero [dimensionless] (default %(default)g)")
    p.add_argument("-o", "--output", help="write the report to a file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("search", help="multi-start search for universal Phi sets")
    p.add_argument("--n", type=int, required=True, help="pulse count, odd >= 3 [count]")
    p.add_argument("--j0", type=int, required=True, help="orders to nullify [count]")
    p.add_argument("--anagram", action="store_true", help="impose Phi_k = Phi_{n-k-1}")
    p.add_argument("--restarts", type=int, default=64, help="Sobol starting points [count] (default 64)")
    p.add_argument("--seed", type=int, default=0, help="Sobol scrambling seed [integer] (default 0)")
    p.add_argument("--weight", type=float, default=1e-3,
                   help="weight of order j0+1 in the objective [dimensionless] (default 1e-3)")
    p.add_argument("--search-tolerance", type=float, default=1e-9,
                   help="residual accepted as a solution [dimensionless] (default 1e-9)")
    _add_workers(p)
    p.add_argument("-o", "--output", help="write candidates to a file")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("scan", help="transition-probability grid over detuning and duration")
    _add_sequence(p)
    _add_pulse(p, grid=True)
    p.add_argument("--threshold", type=float, default=0.95,
                   help="level for the reported high-fidelity area [probability] (default 0.95)")
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="output format; default from the -o suffix, else csv")
    _add_workers(p)
    p.add_argument("-o", "--output", help="output file (default: standard output)")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("correlated", help="scan along a correlated Rabi/detuning error line")
    _add_sequence(p)
    _add_pulse(p)
    p.add_argument("--kappa", type=float, required=True,
                   help="detuning error per unit Rabi error, in units of Omega [dimensionless]")
    p.add_argument("--span", type=float, nargs=2, default=[-0.2, 0.2], metavar=("MIN", "MAX"),
                   help="fractional Rabi error range [dimensionless] (default -0.2 0.2)")
    p.add_argument("--count", type=int, default=41, help="points on the line [count] (default 41)")
    p.add_argument("-o", "--output", help="output CSV (default: standard output)")
    p.set_defaults(func=cmd_correlated)

    p = sub.add_parser("echo", help="CPMG rephasing efficiency, scalar or map")
    p.add_argument("--seq", default="single",
                   help="inversion sequence: catalog name or sequence file (default single)")
    _add_sequence(p, positional=False)
    _add_pulse(p, grid=True)
    p.add_argument("--detuning-khz", type=float, default=0.0,
                   help="scalar mode: static pulse detuning Delta/2pi [kHz] (default 0)")
    p.add_argument("--duration-us", type=float, default=None,
                   help="scalar mode: constituent-pulse duration [us]; default pi pulse")
    p.add_argument("--storage-us", type=float, default=echo.DEFAULT_STORAGE_TIME * 1e6,
                   help="storage time [us] (default %(default)s)")
    p.add_argument("--inversions", type=int, default=2,
                   help="number of inversion blocks, even [count] (default 2)")
    p.add_argument("--decoherence-us", type=float, default=echo.DEFAULT_DECOHERENCE_TIME * 1e6,
                   help="exponential decoherence time [us]; 0 disables (default %(default)s)")
    p.add_argument("--detuning-sigma-khz", type=float,
                   default=round(echo.DEFAULT_DETUNING_SIGMA / TWO_PI / 1e3, 9),
                   help="Gaussian spread of member detunings sigma/2pi [kHz] (default %(default)s)")
    p.add_argument("--rabi-sigma", type=float, default=echo.DEFAULT_RABI_SIGMA,
                   help="relative Gaussian spread of the Rabi frequency [dimensionless] (default %(default)s)")
    p.add_argument("--members", type=int, default=256, help="Monte-Carlo ensemble size [count] (default 256)")
    p.add_argument("--seed", type=int, default=0, help="ensemble sampling seed [integer] (default 0)")
    p.add_argument("--delta-ensemble", action="store_true",
                   help="identical pulses for all members; free precession averaged exactly")
    p.add_argument("--map", action="store_true", help="scan the (detuning, duration) grid")
    p.add_argument("--normalized", action="store_true", help="map mode: divide by the map maximum")
    p.add_argument("--format", choices=["csv", "json"], default=None,
                   help="map output format; default from the -o suffix, else csv")
    _add_workers(p)
    p.add_argument("-o", "--output", help="output file (default: standard output)")
    p.set_defaults(func=cmd_echo)
    return parser


# --------------------------------------------------------------------------
# Resolution helpers


def _config_line(parser, args) -> str:
    """Canonical command line reproducing this run's output."""
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[args.command]
    words = ["unicp", args.command]
    for action in subparser._actions:
        dest = action.dest
        if dest in _NOT_ECHOED or dest == "help" or not hasattr(args, dest):
            continue
        value = getattr(args, dest)
        if value is None or value is False:
            continue
        if not action.option_strings:
            words.append(str(value))
            continue
        flag = max(action.option_strings, key=len)
        if value is True:
            words.append(flag)
        elif isinstance(value, (list, tuple)):
            words.append(flag)
            words.extend(repr(v) for v in value)
        else:
            words.extend([flag, repr(value) if isinstance(value, float) else str(value)])
    return shlex.join(words)


def _resolve_sequence(args, name_attr="seq"):
    """CompositeSequence and PhaseLaw (or None) from the sequence flags."""
    name = getattr(args, name_attr)
    phi2 = from_degrees(args.phi2_deg) if args.phi2_deg is not None else None
    if args.law is not None:
        if name is not None and not (args.command == "echo" and name == "single"):
            raise UsageError("give either a sequence name or --law, not both")
        big_phi = parse_pi_tuple(args.law)
        if args.n is not None and args.n != len(big_phi) + 2:
            raise UsageError(f"--n {args.n} does not match {len(big_phi)} Phi values")
        if args.variant is not None:
            raise UsageError("--variant needs a catalog name")
        law = PhaseLaw(big_phi, phi2 if phi2 is not None else 0)
        return phases_from_law(law, f"law{format_pi_tuple(big_phi)}"), law
    if name is None:
        raise UsageError("a sequence name, file or --law is required")
    if args.phi2_deg is not None and args.variant is not None:
        raise UsageError("give either --phi2-deg or --variant")
    if name in CATALOG or name in ("single", "U1"):
        seq = catalog_lookup(name, phi2 if phi2 is not None else args.variant)
        law = seq.law() if seq.n >= 3 else None
        return seq, law
    path = Path(name)
    if not path.exists():
        raise UnknownSequenceError(f"{name!r} is neither a catalog name nor an existing file")
    seq, law = read_sequence(path)
    law = law if law is not None else (seq.law() if seq.n >= 3 else None)
    if phi2 is not None:
        if law is None:
            raise UsageError("--phi2-deg needs a sequence of at least 3 pulses")
        law = law.with_phi2(phi2)
        seq = phases_from_law(law, seq.name)
    return seq, law


def _shape(spec: str):
    if spec == "rectangular":
        return dynamics.RECTANGULAR
    if spec == "gaussian":
        return dynamics.GAUSSIAN
    return dynamics.read_envelope(spec)


def _base_pulse(args) -> dynamics.PulseSpec:
    omega = TWO_PI * args.rabi_khz * 1e3
    if args.rabi_khz <= 0:
        raise UsageError("--rabi-khz must be positive")
    dur = getattr(args, "duration_us", None)
    duration = dur * 1e-6 if dur is not None else 0.5 / (args.rabi_khz * 1e3)
    return dynamics.PulseSpec(
        omega_peak=omega,
        duration=duration,
        detuning0=TWO_PI * getattr(args, "detuning_khz", 0.0) * 1e3,
        chirp=TWO_PI * args.chirp_hz_per_s,
        stark_coeff=args.stark_coeff,
        shape=_shape(args.shape),
    )


def _grid(args, base) -> scanner.GridSpec:
    dlo, dhi = args.detuning_range_khz
    tlo, thi = args.duration_range_us
    return scanner.GridSpec(
        (TWO_PI * dlo * 1e3, TWO_PI * dhi * 1e3, args.detuning_points),
        (tlo * 1e-6, thi * 1e-6, args.duration_points),
        base,
    )


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _format_for(args):
    if args.format:
        return args.format
    if args.output and args.output.lower().endswith(".json"):
        return "json"
    return "csv"


def _grid_text(grid: scanner.ProfileGrid, config: str, fmt: str) -> str:
    if fmt == "json":
        grid = scanner.ProfileGrid(grid.values, grid.detunings, grid.durations, grid.sequence,
                                   grid.phases, dict(grid.provenance, config=config))
        return grid.to_json()
    return grid.to_csv(extra_header=[f"config: {config}"])


# --------------------------------------------------------------------------
# Subcommands


def cmd_phases(args, config):
    seq, law = _resolve_sequence(args)
    deg = ", ".join(f"{to_degrees(p):.12g}" for p in seq.phases)
    lines = [f"# config: {config}", f"name: {seq.name}", f"n: {seq.n}",
             f"phases: {seq}", f"phases_deg: {deg}"]
    if law is not None:
        lines += [f"Phi: {format_pi_tuple(law.big_phi)}", f"phi2: {format_pi(law.phi2)}"]
    print("\n".join(lines))
    if args.output:
        write_sequence(args.output, seq, law)
    return 0


def cmd_verify(args, config):
    seq, law = _resolve_sequence(args)
    if law is None:
        raise UsageError("verify needs a sequence of at least 3 pulses")
    j0 = args.j0
    if j0 is None:
        name = args.seq if args.seq in CATALOG else None
        if name is None:
            raise UsageError("--j0 is required for sequences outside the catalog")
        j0 = get_entry(name).j0
    big_phi = [np.pi * float(x) for x in law.big_phi]
    report = series.verify_universal(big_phi, j0, tolerance=args.verify_tolerance)
    text = f"# config: {config}\nsequence: {seq.name}\nPhi: {format_pi_tuple(law.big_phi)}\n"
    text += report.to_text()
    _emit(text, args.output)
    if args.output:
        sys.stdout.write(text)
    return 0 if report.passed else EXIT_VERIFY


def cmd_search(args, config):
    result = series.search_phases(
        args.n, args.j0, anagram=args.anagram, restarts=args.restarts, rng_seed=args.seed,
        weight=args.weight, tolerance=args.search_tolerance, workers=args.workers,
    )
    lines = [f"# config: {config}",
             f"# n={result.n} j0={result.target_j0} restarts={result.restarts} "
             f"best_residual={result.best_residual:.3e} found={len(result.candidates)}",
             "# residual Phi lead_magnitude"]
    for c in result.candidates:
        lines.append(f"{c.residual:.3e} {c.label()} {c.leading_magnitude:.12g}")
    text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    if args.output:
        sys.stdout.write(text)
    if not result.candidates:
        print(f"no solution below {args.search_tolerance:g}; best residual "
              f"{result.best_residual:.3e}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return 0


def cmd_scan(args, config):
    if not 0.0 < args.threshold < 1.0:
        raise UsageError("--threshold must lie in (0, 1)")
    seq, _ = _resolve_sequence(args)
    grid = _grid(args, _base_pulse(args))
    prof = scanner.scan_profile(seq, grid, tolerance=args.tolerance, workers=args.workers)
    _emit(_grid_text(prof, config, _format_for(args)), args.output)
    if args.output:
        det, dur = prof.argmax()
        area = scanner.high_fidelity_area(prof, args.threshold)
        print(f"{prof.sequence}: max p12={prof.values.max():.12g} at "
              f"detuning={det / TWO_PI:.6g} Hz duration={dur:.6g} s; "
              f"area(p12>={args.threshold:g})={area:.12g}")
    return 0


def cmd_correlated(args, config):
    seq, _ = _resolve_sequence(args)
    base = _base_pulse(args)
    path = scanner.CorrelationPath(args.kappa, tuple(args.span), args.count)
    rows = scanner.scan_correlated(seq, path, base, tolerance=args.tolerance)
    phi2 = seq.law().phi2 if seq.n >= 3 else 0
    lines = [f"# seq={seq.name or 'custom'} phi2={to_degrees(phi2):.12g} "
             f"omega_hz={base.omega_peak / TWO_PI:.12g} kappa={args.kappa!r} phases={seq}",
             f"# config: {config}", "rabi_error,p12"]
    lines += [f"{e:.12g},{p:.12g}" for e, p in rows]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def cmd_echo(args, config):
    seq, _ = _resolve_sequence(args)
    if args.members < 1:
        raise UsageError("--members must be >= 1")
    if args.decoherence_us < 0:
        raise UsageError("--decoherence-us must be >= 0")
    if args.delta_ensemble:
        ens = echo.EnsembleSpec(detuning_sigma=TWO_PI * args.detuning_sigma_khz * 1e3,
                                rabi_sigma=0.0, member_count=1, rng_seed=args.seed,
                                correlated=False)
    else:
        ens = echo.EnsembleSpec(detuning_sigma=TWO_PI * args.detuning_sigma_khz * 1e3,
                                rabi_sigma=args.rabi_sigma, member_count=args.members,
                                rng_seed=args.seed)
    base = _base_pulse(args)
    t_dec = args.decoherence_us * 1e-6 if args.decoherence_us > 0 else None
    if args.map:
        grid = _grid(args, base)
        proto = echo.EchoProtocol(seq, grid.base_pulse.with_(duration=grid.durations[0]),
                                  args.storage_us * 1e-6, args.inversions, t_dec)
        emap = echo.efficiency_map(proto, ens, grid, normalized=args.normalized,
                                   tolerance=args.tolerance, workers=args.workers)
        _emit(_grid_text(emap, config, _format_for(args)), args.output)
        if args.output:
            det, dur = emap.argmax()
            print(f"{emap.sequence}: max efficiency={emap.values.max():.12g} at "
                  f"detuning={det / TWO_PI:.6g} Hz duration={dur:.6g} s")
        return 0
    proto = echo.EchoProtocol(seq, base, args.storage_us * 1e-6, args.inversions, t_dec)
    eff = echo.rephasing_efficiency(proto, ens, tolerance=args.tolerance)
    text = (f"# seq={seq.name or 'custom'} phases={seq}\n# config: {config}\n"
            f"efficiency: {eff:.12g}\n")
    _emit(text, args.output)
    if args.output:
        sys.stdout.write(text)
    return 0


# --------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        config = _config_line(parser, args)
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args, config)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as err:
        print(f"non-convergence: {err} (residual {err.residual:.3e})", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ResourceLimitError, UnknownSequenceError, ValueError, KeyError) as err:
        print(f"invalid input: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
