"""Command-line front end.

Subcommands: ``optimize``, ``sweep``, ``compare`` and ``trajectory``.
Frequencies on the command line are in Hz (chirp in Hz/us); everything
inside the library is angular.

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .fidelity import FidelityConfig, analytic_fidelity
from .optimize import (
    CONTROL_PER_RABI,
    OptimizationConfig,
    SolverError,
    energy_ratio,
    solve_gate_parameters,
    square_pulse_at_peak,
)
from .phase_space import DEFAULT_CHIRP_DURATION, ErrorConfig, endpoint, integrate_trajectory, square_pulse
from .pulsefile import PulseFile, PulseFileError, atomic_write_text, read_pulse_file, write_pulse_file

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_IO = 4
WORKERS_ENV = "MSPULSE_MAX_WORKERS"
TWO_PI = 2.0 * math.pi


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _max_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit_table(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(out, text)


def _parse_range(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise _UsageError(f"expected START:STOP:STEP, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise _UsageError(f"bad range {text!r}") from exc
    if step <= 0 or stop < start:
        raise _UsageError("range needs STEP > 0 and STOP >= START")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def _optimization_config(args) -> OptimizationConfig:
    try:
        return OptimizationConfig(loops=args.loops, c=args.c, n=args.n)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _cmd_optimize(args) -> int:
    if args.loops < 1:
        raise _UsageError("--loops must be >= 1")
    if not args.rabi_max_hz > 0:
        raise _UsageError("--rabi-max-hz must be positive")
    config = _optimization_config(args)
    omega_max = TWO_PI * args.rabi_max_hz
    params, result = solve_gate_parameters(args.loops, omega_max, config)
    square = square_pulse_at_peak(args.loops, omega_max)
    ratio = energy_ratio(result, square)
    if args.out:
        provenance = {
            "library_version": __version__,
            "solver": {
                "method": "reduced pencil, Cholesky + symmetric eigensolver",
                "quad_order": config.quad_order,
                "area_target": config.area_target,
                "rabi_max_hz": float(args.rabi_max_hz),
                "lambda_max": result.lambda_max,
            },
        }
        write_pulse_file(PulseFile.from_pulse(result.pulse, provenance), args.out)
    lines = [
        ("loops", params.loops),
        ("tau_us", params.tau * 1e6),
        ("delta_over_2pi_khz", params.delta / TWO_PI / 1e3),
        ("peak_rabi_khz", result.pulse.peak / CONTROL_PER_RABI / TWO_PI / 1e3),
        ("energy_rad2_per_s", result.energy),
        ("square_energy_rad2_per_s", square.energy),
        ("energy_ratio", ratio),
        ("lambda_max", result.lambda_max),
        ("orientation", result.pulse.orientation),
    ]
    for key, value in lines:
        print(f"{key}: {_fmt(value)}")
    return EXIT_OK


def _load_pulse(args):
    if args.square:
        if args.loops is None or args.tau_us is None:
            raise _UsageError("--square needs --loops and --tau-us")
        if args.loops < 1 or not args.tau_us > 0:
            raise _UsageError("--loops must be >= 1 and --tau-us positive")
        return square_pulse(args.loops, args.tau_us * 1e-6)
    if not args.pulse:
        raise _UsageError("give --pulse FILE or --square")
    return _read_pulse(args.pulse)


def _read_pulse(path):
    pf = read_pulse_file(path)
    try:
        return pf.to_pulse()
    except ValueError as exc:
        raise PulseFileError(f"inconsistent pulse file {path}: {exc}") from exc


def _cmd_sweep(args) -> int:
    offsets_hz = _parse_range(args.offsets_hz)
    if args.nbar < 0:
        raise _UsageError("--nbar must be non-negative")
    pulse = _load_pulse(args)

    def row(off_hz):
        err = ErrorConfig(
            detuning_offset=TWO_PI * off_hz,
            chirp_rate=args.chirp_hz_per_us,
            chirp_duration=args.chirp_duration_us * 1e-6,
        )
        alpha, area = endpoint(pulse, err)
        fid = analytic_fidelity(pulse, FidelityConfig(nbar=args.nbar, err=err)).fidelity
        return (off_hz, abs(alpha), area, fid)

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        rows = list(pool.map(row, offsets_hz))
    _emit_table(_csv_text(["offset_hz", "closure_residual", "area", "fidelity"], rows), args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    try:
        loops_list = [int(k) for k in args.loops_list.split(",") if k.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad --loops-list {args.loops_list!r}") from exc
    if not loops_list or min(loops_list) < 1:
        raise _UsageError("--loops-list needs positive integers")
    if not args.rabi_max_hz > 0:
        raise _UsageError("--rabi-max-hz must be positive")
    omega_max = TWO_PI * args.rabi_max_hz
    configs = []
    for k in loops_list:
        try:
            configs.append(OptimizationConfig(loops=k, c=args.c, n=args.n))
        except ValueError as exc:
            raise _UsageError(str(exc)) from exc

    def solve(config):
        params, result = solve_gate_parameters(config.loops, omega_max, config)
        square = square_pulse_at_peak(config.loops, omega_max)
        return params, result, square

    with ThreadPoolExecutor(max_workers=_max_workers()) as pool:
        solved = list(pool.map(solve, configs))
    norm = max(max(sq.energy, res.energy) for _, res, sq in solved)
    rows = []
    for params, result, square in solved:
        rows.append(
            (
                params.loops,
                params.delta * params.tau / math.pi,
                params.tau * 1e6,
                square.energy,
                result.energy,
                energy_ratio(result, square),
                square.energy / norm,
                result.energy / norm,
            )
        )
    header = [
        "K",
        "delta_tau_over_pi",
        "tau_us",
        "E_square",
        "E_optimized",
        "ratio",
        "E_square_normalized",
        "E_optimized_normalized",
    ]
    _emit_table(_csv_text(header, rows), args.out)
    return EXIT_OK


def _cmd_trajectory(args) -> int:
    if args.samples_per_segment < 1:
        raise _UsageError("--samples-per-segment must be >= 1")
    pulse = _read_pulse(args.pulse)
    traj = integrate_trajectory(pulse, samples_per_segment=args.samples_per_segment)
    rabi_hz = pulse(traj.t) / CONTROL_PER_RABI / TWO_PI
    rows = zip(traj.t * 1e6, rabi_hz, traj.q, traj.p)
    _emit_table(_csv_text(["t_us", "omega_hz", "q", "p"], rows), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mspulse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", help="synthesize an optimal pulse")
    p.add_argument("--loops", type=int, required=True)
    p.add_argument("--rabi-max-hz", type=float, required=True, help="peak gate Rabi rate / 2pi")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--out", help="pulse file to write")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep", help="closure, area and fidelity versus detuning offset")
    p.add_argument("--pulse")
    p.add_argument("--square", action="store_true", help="use a square gate instead of a file")
    p.add_argument("--loops", type=int)
    p.add_argument("--tau-us", type=float)
    p.add_argument("--offsets-hz", required=True, help="START:STOP:STEP, inclusive")
    p.add_argument("--chirp-hz-per-us", type=float, default=0.0)
    p.add_argument("--chirp-duration-us", type=float, default=DEFAULT_CHIRP_DURATION * 1e6)
    p.add_argument("--nbar", type=float, default=0.4)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="energy of square vs optimized gates")
    p.add_argument("--loops-list", default="3,5,9,12,18")
    p.add_argument("--rabi-max-hz", type=float, default=1180.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("trajectory", help="pulse shape and phase-space path")
    p.add_argument("--pulse", required=True)
    p.add_argument("--samples-per-segment", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_trajectory)
    return parser


_NEG_VALUE = re.compile(r"^-[\d.]")


def _join_negative_ranges(argv):
    """Let ``--offsets-hz -20:20:5`` through argparse."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--offsets-hz" and i + 1 < len(argv) and _NEG_VALUE.match(argv[i + 1]):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_ranges(argv))
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"mspulse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"mspulse: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, PulseFileError) as exc:
        print(f"mspulse: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
