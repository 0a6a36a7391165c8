"""Command-line front end: simulations, longevity sweeps, scaling fits, MRFM estimate.

Exit codes: 0 success, 2 invalid arguments, 3 censored or degenerate result.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

import numpy as np

from . import directional, longevity, phase

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CENSORED = 3


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(stream, header, rows) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dump_json(stream, payload) -> None:
    json.dump(_jsonable(payload), stream, sort_keys=True, indent=2, ensure_ascii=False)
    stream.write("\n")


def _records_output(args, header, rows, extra=None) -> str:
    buf = io.StringIO()
    if args.format == "csv":
        write_csv(buf, header, rows)
    else:
        payload = {"records": [dict(zip(header, r)) for r in rows]}
        if extra:
            payload.update(extra)
        dump_json(buf, payload)
    return buf.getvalue()


def _emit(args, text: str) -> None:
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _two_j(args) -> int:
    if (args.two_j is None) == (args.j is None):
        raise UsageError("give exactly one of --two-j or --j")
    if args.j is not None:
        if 2 * args.j != int(2 * args.j) or args.j <= 0:
            raise UsageError(f"--j must be a positive multiple of 1/2, got {args.j}")
        return int(2 * args.j)
    if args.two_j <= 0:
        raise UsageError(f"--two-j must be positive, got {args.two_j}")
    return args.two_j


def cmd_direction_sim(args) -> int:
    two_j = _two_j(args)
    if args.steps < 0:
        raise UsageError("--steps must be non-negative")
    if args.state == "optimal":
        state = directional.optimal_directional_state(two_j)
    else:
        state = directional.SpinRFState.maximally_mixed(two_j)
    trace = directional.simulate_directional(state, args.steps)
    rows = list(zip(trace.steps.tolist(), trace.success_probability.tolist()))
    _emit(args, _records_output(args, ["n", "p_success"], rows))
    return EXIT_OK


def cmd_phase_sim(args) -> int:
    if args.steps < 0:
        raise UsageError("--steps must be non-negative")
    if args.state == "optimal":
        if args.alpha is not None:
            raise UsageError("--alpha is only valid with --state coherent")
        if args.n_max is None or args.n_max < 0:
            raise UsageError("--state optimal needs --n-max >= 0")
        initial = phase.optimal_phase_state(args.n_max)
    else:
        if args.n_max is not None:
            raise UsageError("--n-max is only valid with --state optimal")
        if args.alpha is None or args.alpha < 0:
            raise UsageError("--state coherent needs --alpha >= 0")
        if not 0 < args.tail_tolerance <= 1e-6:
            raise UsageError("--tail-tolerance must lie in (0, 1e-6]")
        initial = phase.coherent_state(args.alpha, args.tail_tolerance)
    if args.cutoff_mode == "exact":
        probs = phase.simulate_phase(initial, args.steps)
    else:
        probs = [phase.success_probability_phase(initial)]
        state = initial
        for _ in range(args.steps):
            state = phase.update_phase(state)
            probs.append(phase.success_probability_phase(state))
    rows = [(n, float(p)) for n, p in enumerate(probs)]
    _emit(args, _records_output(args, ["n", "p_success"], rows))
    return EXIT_OK


def _check_family_sizes(args):
    if not args.epsilon:
        raise UsageError("--epsilon needs at least one value")
    for e in args.epsilon:
        if not 0 < e < 1:
            raise UsageError(f"--epsilon values must lie in (0, 1), got {e}")
    if not args.sizes:
        raise UsageError("--sizes needs at least one value")
    try:
        for s in args.sizes:
            if s <= 0:
                raise UsageError(f"--sizes values must be positive, got {s}")
            longevity.family_kind(args.family, s)
    except ValueError as exc:
        raise UsageError(f"--sizes: {exc}") from None


def cmd_longevity(args) -> int:
    _check_family_sizes(args)
    if args.method == "analytic" and args.family != "direction":
        raise UsageError("--method analytic is only valid with --family direction")
    rows = []
    flagged = False
    for eps in sorted(args.epsilon):
        for size in sorted(args.sizes):
            kind = longevity.family_kind(args.family, size)
            if args.method == "analytic":
                res = longevity.longevity_analytic_directional(kind.two_j, eps)
            elif args.method == "decay-formula":
                if args.family != "direction":
                    raise UsageError("--method decay-formula is only valid with --family direction")
                res = longevity.decay_crossing_directional(kind.two_j, eps, args.max_steps)
            else:
                res = longevity.longevity_simulated(kind, eps, args.max_steps)
            if res.censored:
                print(f"warning: epsilon={eps} size={size}: no crossing within {args.max_steps} steps",
                      file=sys.stderr)
            if res.initial_error_exceeds:
                print(f"warning: epsilon={eps} size={size}: initial error already above epsilon",
                      file=sys.stderr)
            flagged |= res.censored or res.initial_error_exceeds
            rows.append((eps, size, res.n_uses))
    _emit(args, _records_output(args, ["epsilon", "size", "longevity"], rows))
    return EXIT_CENSORED if flagged else EXIT_OK


def cmd_scaling(args) -> int:
    _check_family_sizes(args)
    if len(set(args.sizes)) < 2:
        raise UsageError("--sizes needs at least two distinct values")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = longevity.scaling_experiment(
            args.family, args.epsilon, args.sizes, max_steps=args.max_steps, workers=args.workers
        )
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    rows = []
    fits = []
    degenerate = False
    for res in results:
        rows.extend((res.epsilon, float(s), int(n)) for s, n in zip(res.sizes, res.longevities))
        fit = res.loglog_fit
        degenerate |= fit is None
        fits.append(
            {
                "epsilon": res.epsilon,
                "slope": None if fit is None else fit.slope,
                "intercept": None if fit is None else fit.intercept,
                "residual_rms": None if fit is None else fit.residual_rms,
                "point_count": 0 if fit is None else fit.point_count,
                "excluded_sizes": list(res.excluded_sizes),
            }
        )
    header = ["epsilon", "size", "longevity"]
    extra = {"family": args.family, "fits": fits}
    _emit(args, _records_output(args, header, rows, extra))
    if args.fit_out:
        with open(args.fit_out, "w", encoding="utf-8", newline="") as fh:
            dump_json(fh, extra)
    return EXIT_CENSORED if degenerate else EXIT_OK


def cmd_mrfm(args) -> int:
    if args.spins < 1:
        raise UsageError("--spins must be at least 1")
    if not 0 < args.epsilon < 1:
        raise UsageError("--epsilon must lie in (0, 1)")
    res = longevity.mrfm_estimate(args.spins, args.epsilon, convention=args.convention)
    rows = [(args.epsilon, args.spins, res.size_metric, res.n_uses)]
    _emit(args, _records_output(args, ["epsilon", "spins", "j", "longevity"], rows, {"convention": args.convention}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rflongevity",
        description="Degradation and longevity of quantum reference frames.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, default_format="csv"):
        p.add_argument("-o", "--output", default="-", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=default_format, help="output format")

    p = sub.add_parser("direction-sim", help="success probability of a spin-j frame per use")
    p.add_argument("--two-j", type=int, help="twice the frame spin, 2j")
    p.add_argument("--j", type=float, help="frame spin j (multiple of 1/2)")
    p.add_argument("--steps", type=int, required=True, help="number of uses to simulate")
    p.add_argument("--state", choices=("optimal", "mixed"), default="optimal", help="initial state")
    common(p)
    p.set_defaults(func=cmd_direction_sim)

    p = sub.add_parser("phase-sim", help="success probability of a phase frame per use")
    p.add_argument("--state", choices=("optimal", "coherent"), required=True, help="initial state family")
    p.add_argument("--n-max", type=int, help="photon-number bound N of the optimal state")
    p.add_argument("--alpha", type=float, help="coherent amplitude")
    p.add_argument("--tail-tolerance", type=float, default=phase.DEFAULT_TAIL_TOLERANCE,
                   help="neglected Poisson tail of the truncated coherent state")
    p.add_argument("--steps", type=int, required=True, help="number of uses to simulate")
    p.add_argument("--cutoff-mode", choices=("exact", "fixed"), default="exact",
                   help="exact: let the Fock cutoff grow; fixed: truncate at the initial support")
    common(p)
    p.set_defaults(func=cmd_phase_sim)

    for name, helptext, fmt in (
        ("longevity", "longevity per (epsilon, size)", "csv"),
        ("scaling", "longevity sweep with log-log fits", "json"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--family", choices=longevity.FAMILIES, required=True)
        p.add_argument("--epsilon", type=_float_list, required=True, help="comma-separated error thresholds")
        p.add_argument("--sizes", type=_float_list, required=True,
                       help="comma-separated sizes (j, or mean photon number)")
        p.add_argument("--max-steps", type=int, default=longevity.DEFAULT_MAX_STEPS)
        common(p, fmt)
        if name == "longevity":
            p.add_argument("--method", choices=("simulated", "decay-formula", "analytic"), default="simulated")
            p.set_defaults(func=cmd_longevity)
        else:
            p.add_argument("--fit-out", help="also write the fits as JSON to this path")
            p.add_argument("--workers", type=int, default=1, help="parallel processes for the sweep")
            p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("mrfm", help="longevity estimate for a magnet of parallel spins")
    p.add_argument("--spins", type=int, default=10**6)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--convention", choices=("j=N", "j=N/2"), default="j=N")
    common(p, "json")
    p.set_defaults(func=cmd_mrfm)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.exit(EXIT_USAGE, f"{parser.prog} {args.command}: error: {exc}\n")


if __name__ == "__main__":
    sys.exit(main())
