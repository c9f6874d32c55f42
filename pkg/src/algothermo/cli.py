"""Batch command-line front end.

Every command loads a machine (builtin name or JSON file), runs one
library operation, and writes a self-describing report: CSV for things
you plot, JSON for things you parse, plus a rendered figure next to
any file output.  Exit codes: 0 success, 2 configuration, 3 resource
limits, 4 numeric domain, 5 unsolvable targets.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import figures, reports
from .complexity import (
    algorithmic_probability,
    compression_profile,
    program_size_complexity,
)
from .ensemble import (
    build_theta,
    canonical_distribution,
    channel_law,
    channel_simulate,
    first_codeword_distribution,
    micro_canonical_deviation,
    micro_entropy_temperature,
)
from .enumeration import bits_to_hex, dovetail, hex_to_bits, kraft_sum
from .errors import (
    ConfigError,
    NumericDomainError,
    ResourceLimitError,
    UnsolvableError,
)
from .machine import BUILTIN_NAMES, StepMachine, TableMachine, load_machine, machine_hash
from .numeric import DEFAULT_PRECISION
from .thermo import (
    divergence_probe,
    geometric_cutoffs,
    parse_temp_grid,
    shannon_partial,
    sweep,
    thermo_row,
)

_EXIT = {
    ConfigError: 2,
    ResourceLimitError: 3,
    NumericDomainError: 4,
    UnsolvableError: 5,
}


def _fraction(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from exc


def _figure_path(out: str) -> str:
    base = out.rsplit(".", 1)[0] if "." in out.rsplit("/", 1)[-1] else out
    return base + ".png"


def _emit(args, text: str) -> None:
    if args.out:
        reports.atomic_write(args.out, text.encode())
    else:
        sys.stdout.write(text)


def _want_figure(args) -> bool:
    return bool(args.out) and not args.no_figure


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_machines(args) -> int:
    rows = []
    for name in BUILTIN_NAMES:
        m = load_machine(name)
        rows.append({"name": name, "hash": machine_hash(m), **m.describe()})
    if args.format == "json":
        payload = {
            "meta": reports.meta_header("machines", "builtin", "-"),
            "machines": rows,
        }
        if args.out:
            reports.write_json(args.out, payload)
        else:
            import json

            sys.stdout.write(json.dumps(reports.render_value(payload), indent=2) + "\n")
        return 0
    lines = [
        f"{r['name']:<16} kind={r['kind']:<6} hash={r['hash']}" for r in rows
    ]
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_enumerate(args) -> int:
    machine = load_machine(args.machine)
    records = dovetail(
        machine,
        rounds=args.rounds,
        cap=args.fuel_cap,
        round_budget=args.round_budget,
        checkpoint=args.checkpoint,
        resume=args.resume,
    )
    meta = reports.meta_header(
        "enumerate",
        args.machine,
        machine_hash(machine),
        rounds=args.rounds,
        fuel_cap=args.fuel_cap,
        round_budget=args.round_budget,
        kraft=str(kraft_sum(r.program for r in records)),
    )
    rows = [
        {
            "index": r.index,
            "round": r.round,
            "length": r.length,
            "program": r.program,
            "output_hex": bits_to_hex(r.output),
            "steps": r.steps,
        }
        for r in records
    ]
    fields = ["index", "round", "length", "program", "output_hex", "steps"]
    if args.format == "json":
        payload = {"meta": meta, "records": rows}
        if args.out:
            reports.write_json(args.out, payload)
        else:
            import json

            sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    else:
        _emit(args, reports.csv_text(meta, fields, rows))
    if _want_figure(args):
        acc = Fraction(0)
        points = []
        for r in records:
            acc += Fraction(1, 1 << r.length)
            points.append((r.index + 1, float(acc)))
        if points:
            figures.kraft_figure(points, _figure_path(args.out))
    return 0


def cmd_sweep(args) -> int:
    machine = load_machine(args.machine)
    temps = parse_temp_grid(args.t_grid)
    rows, errors = sweep(
        machine, temps, prec=args.precision, l_cut=args.cutoff, rounds=args.rounds
    )
    for t, msg in errors:
        sys.stderr.write(f"warning: T={t}: {msg}\n")
    meta = reports.meta_header(
        "sweep",
        args.machine,
        machine_hash(machine),
        precision=args.precision,
        t_grid=args.t_grid,
        cutoff=args.cutoff,
        rounds=args.rounds,
    )
    out_rows = []
    for r in rows:
        row = {
            "temp": str(r.temp),
            "n": r.n,
            "cutoff": "" if r.cutoff is None else r.cutoff,
            "tail_bounded": int(r.tail_bounded),
        }
        for key, iv in (("z", r.z), ("f", r.f), ("e", r.e), ("s", r.s), ("c", r.c)):
            lo, hi = reports.interval_fields(iv)
            row[f"{key}_lo"], row[f"{key}_hi"] = lo, hi
        out_rows.append(row)
    fields = ["temp", "n", "cutoff", "tail_bounded"] + [
        f"{k}_{side}" for k in ("z", "f", "e", "s", "c") for side in ("lo", "hi")
    ]
    _emit(args, reports.csv_text(meta, fields, out_rows))
    if _want_figure(args) and rows:
        figures.sweep_figure(rows, _figure_path(args.out))
    return 0


def cmd_solve_temp(args) -> int:
    machine = load_machine(args.machine)
    if not isinstance(machine, TableMachine):
        raise ConfigError("solve-temp needs a spectrum machine")
    target = _fraction(args.target, "target")
    from .thermo import solve_temperature

    solve = solve_temperature(machine, target, prec=args.precision)
    z_lo = thermo_row(machine, solve.lo.as_fraction(), prec=args.precision).z
    z_hi = thermo_row(machine, solve.hi.as_fraction(), prec=args.precision).z
    payload = {
        "meta": reports.meta_header(
            "solve-temp",
            args.machine,
            machine_hash(machine),
            precision=args.precision,
            target=str(target),
        ),
        "temperature": solve,
        "width": str(solve.width().as_fraction()),
        "z_at_endpoints": {"lo": z_lo, "hi": z_hi},
        "target_contained": bool(
            z_lo.lo.as_fraction() <= target <= z_hi.hi.as_fraction()
        ),
    }
    if args.out:
        reports.write_json(args.out, payload)
    else:
        import json

        sys.stdout.write(json.dumps(reports.render_value(payload), indent=2) + "\n")
    return 0


def cmd_probe(args) -> int:
    machine = load_machine(args.machine)
    temp = _fraction(args.temp, "temperature")
    cutoffs = (
        [int(c) for c in args.cutoffs.split(",")]
        if args.cutoffs
        else geometric_cutoffs(args.limit)
    )
    rows = divergence_probe(
        machine, temp, args.weight, cutoffs, prec=args.precision, rounds=args.rounds
    )
    meta = reports.meta_header(
        "probe-divergence",
        args.machine,
        machine_hash(machine),
        precision=args.precision,
        temp=str(temp),
        weight=args.weight,
        schedule=",".join(str(c) for c in cutoffs),
    )
    out_rows = []
    for r in rows:
        row = {"cutoff": r.cutoff, "n": "" if r.n is None else r.n}
        for key, iv in (("series", r.series), ("z", r.z), ("ratio", r.ratio)):
            lo, hi = reports.interval_fields(iv)
            row[f"{key}_lo"], row[f"{key}_hi"] = lo, hi
        out_rows.append(row)
    fields = ["cutoff", "n"] + [
        f"{k}_{side}" for k in ("series", "z", "ratio") for side in ("lo", "hi")
    ]
    _emit(args, reports.csv_text(meta, fields, out_rows))
    if _want_figure(args):
        figures.probe_figure(rows, _figure_path(args.out), threshold=args.threshold)
    return 0


def cmd_complexity(args) -> int:
    machine = load_machine(args.machine)
    if args.profile:
        if args.alpha is None:
            raise ConfigError("--profile needs --alpha bits")
        grid = [int(n) for n in args.profile.split(",")]
        rows = compression_profile(
            machine, args.alpha, grid, l_max=args.lmax, fuel=args.fuel
        )
        payload = {
            "meta": reports.meta_header(
                "complexity",
                args.machine,
                machine_hash(machine),
                lmax=args.lmax,
                fuel=args.fuel,
                alpha=args.alpha,
                grid=args.profile,
            ),
            "profile": [
                {
                    "n": r.n,
                    "exact": r.result.exact,
                    "value": r.result.value,
                    "witness": r.result.witness,
                    "ratio_lower": str(r.ratio_lower),
                    "ratio_upper": None if r.ratio_upper is None else str(r.ratio_upper),
                }
                for r in rows
            ],
        }
        if args.out:
            reports.write_json(args.out, payload)
            if not args.no_figure:
                figures.profile_figure(
                    [(r.n, float(r.ratio_lower), r.result.exact) for r in rows],
                    _figure_path(args.out),
                )
        else:
            import json

            sys.stdout.write(json.dumps(payload, indent=2) + "\n")
        return 0
    if args.target_bits is not None:
        target = args.target_bits
    elif args.target_hex is not None:
        target = hex_to_bits(args.target_hex)
    else:
        raise ConfigError("complexity needs --target-bits, --target-hex, or --profile")
    res = program_size_complexity(machine, target, l_max=args.lmax, fuel=args.fuel)
    prob = algorithmic_probability(machine, target, l_max=args.lmax, fuel=args.fuel)
    payload = {
        "meta": reports.meta_header(
            "complexity",
            args.machine,
            machine_hash(machine),
            lmax=args.lmax,
            fuel=args.fuel,
        ),
        "target": target,
        "target_hex": bits_to_hex(target),
        "exact": res.exact,
        "value": res.value,
        "witness": res.witness,
        "undecided_shorter": res.undecided_shorter,
        "probability": str(prob.value),
        "probability_exact": prob.exact,
        "programs_found": prob.n_programs,
        "min_weight_le_probability": (
            Fraction(1, 1 << res.value) <= prob.value if res.exact else None
        ),
    }
    if args.out:
        reports.write_json(args.out, payload)
    else:
        import json

        sys.stdout.write(json.dumps(payload, indent=2) + "\n")
    return 0


def cmd_ensemble(args) -> int:
    machine = load_machine(args.machine)
    if not isinstance(machine, TableMachine) or machine.max_length() is None:
        raise ConfigError("ensembles need a finite table machine")
    l_table = args.table_length or (args.L + args.deltaL + 1)
    table = build_theta(machine, n_max=args.N, l_max=l_table, delta_l=args.deltaL)
    rep = micro_canonical_deviation(table, args.L, args.N, prec=args.precision)
    point = micro_entropy_temperature(table, args.L, args.N, prec=args.precision)
    payload = {
        "meta": reports.meta_header(
            "ensemble",
            args.machine,
            machine_hash(machine),
            precision=args.precision,
            seed=args.seed if args.mc_samples else None,
            N=args.N,
            L=args.L,
            deltaL=args.deltaL,
            mc_samples=args.mc_samples,
            shards=args.shards,
        ),
        "theta_digest": table.digest(),
        "theta": table.theta(args.L, args.N),
        "entropy": rep.entropy,
        "infinite_temperature": point.infinite_temperature,
        "temperature_table": rep.table_temperature,
        "temperature_matched": rep.matched_temperature,
        "matched_unsolvable": rep.matched_unsolvable,
        "energy_micro": str(rep.energy_micro),
        "free_energy": rep.free_energy,
        "micro": {str(l): str(m) for l, m in sorted(rep.micro.items())},
        "deviation_at_table_t": rep.deviation_at_table_t,
        "deviation_at_matched_t": rep.deviation_at_matched_t,
    }
    canon = None
    if rep.table_temperature is not None:
        canon = canonical_distribution(
            table.counts, rep.table_temperature, args.precision
        )
        payload["canonical_at_table_t"] = {str(l): canon[l] for l in sorted(canon)}
    channel = None
    if args.mc_samples:
        channel = channel_simulate(
            machine,
            n_words=args.N,
            length=args.L,
            samples=args.mc_samples,
            seed=args.seed,
            delta_l=args.deltaL,
            shards=args.shards,
        )
        law = channel_law(table, args.L, args.N)
        payload["channel"] = {
            "generator": channel.generator,
            "generator_version": channel.generator_version,
            "samples": channel.samples,
            "accepted": channel.accepted,
            "acceptance_rate": channel.acceptance_rate,
            "tallies": {str(l): c for l, c in sorted(channel.tallies.items())},
            "empirical": {str(l): v for l, v in sorted(channel.empirical.items())},
            "coin_law": {str(l): str(m) for l, m in sorted(law.items())},
            "warning": channel.warning,
        }
    if args.out:
        reports.write_json(args.out, payload)
        if not args.no_figure:
            canon_pairs = {}
            if canon:
                for l, iv in canon.items():
                    canon_pairs[l] = (
                        float(iv.lo.as_fraction()),
                        float(iv.hi.as_fraction()),
                    )
            figures.ensemble_figure(
                rep.micro,
                canon_pairs,
                _figure_path(args.out),
                empirical=channel.empirical if channel else None,
            )
    else:
        import json

        sys.stdout.write(json.dumps(reports.render_value(payload), indent=2) + "\n")
    return 0


def cmd_entropy_partial(args) -> int:
    machine = load_machine(args.machine)
    schedule = geometric_cutoffs(args.cutoff)
    points = []
    for cut in schedule:
        b = shannon_partial(
            machine, args.weighting, cut, prec=args.precision, rounds=args.rounds
        )
        points.append((cut, b))
    meta = reports.meta_header(
        "entropy-partial",
        args.machine,
        machine_hash(machine),
        precision=args.precision,
        weighting=args.weighting,
        schedule=",".join(str(c) for c in schedule),
        rounds=args.rounds,
    )
    rows = [
        {
            "cutoff": cut,
            "outputs": "" if b.outputs is None else b.outputs,
            "lower_bound": format(float(b.lower.as_fraction()), ".17g"),
        }
        for cut, b in points
    ]
    _emit(args, reports.csv_text(meta, ["cutoff", "outputs", "lower_bound"], rows))
    if _want_figure(args):
        figures.entropy_figure(
            [(c, float(b.lower.as_fraction())) for c, b in points], _figure_path(args.out)
        )
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, machine: bool = True) -> None:
    if machine:
        p.add_argument("--machine", required=True, help="builtin name or machine JSON path")
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--no-figure", action="store_true", help="skip the rendered figure")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="algothermo",
        description="Partition sums, enumeration, complexity and ensembles "
        "over prefix-free machines, with certified interval arithmetic.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("machines", help="list built-in machines")
    _add_common(p, machine=False)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_machines)

    p = sub.add_parser("enumerate", help="dovetail the halting programs")
    _add_common(p)
    p.add_argument("--rounds", type=int, required=True)
    p.add_argument("--fuel-cap", type=int, default=1 << 20)
    p.add_argument("--round-budget", type=int, default=1 << 22)
    p.add_argument("--checkpoint", help="checkpoint file to write")
    p.add_argument("--resume", action="store_true", help="continue from the checkpoint")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("sweep", help="thermodynamic quantities over a T grid")
    _add_common(p)
    p.add_argument("--t-grid", required=True, help='e.g. "1/4,1/2" or "0.1:0.9:0.1"')
    p.add_argument("--cutoff", type=int, help="spectrum length cutoff")
    p.add_argument("--rounds", type=int, help="enumeration rounds for step machines")
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("solve-temp", help="invert Z(T) = target below T = 1")
    _add_common(p)
    p.add_argument("--target", required=True)
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.set_defaults(func=cmd_solve_temp)

    p = sub.add_parser("probe-divergence", help="partial-sum growth at fixed T")
    _add_common(p)
    p.add_argument("--temp", required=True)
    p.add_argument(
        "--weight", choices=("one", "length", "length-squared"), default="one"
    )
    p.add_argument("--cutoffs", help="comma list of cutoffs")
    p.add_argument("--limit", type=int, default=64, help="auto schedule up to here")
    p.add_argument("--threshold", type=float, help="reference line for the figure")
    p.add_argument("--rounds", type=int, help="enumeration rounds for step machines")
    p.add_argument("--precision", type=int, default=64)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("complexity", help="program-size complexity and P(s)")
    _add_common(p)
    p.add_argument("--target-bits", help="target output as a bit string")
    p.add_argument("--target-hex", help="target output in sentinel-hex form")
    p.add_argument("--alpha", help="bit string for --profile")
    p.add_argument("--profile", help="comma list of prefix lengths")
    p.add_argument("--lmax", type=int, default=16)
    p.add_argument("--fuel", type=int, default=1 << 16)
    p.set_defaults(func=cmd_complexity)

    p = sub.add_parser("ensemble", help="microcanonical vs canonical comparison")
    _add_common(p)
    p.add_argument("--N", type=int, required=True, help="number of codewords")
    p.add_argument("--L", type=int, required=True, help="total length")
    p.add_argument("--deltaL", type=int, default=0)
    p.add_argument("--table-length", type=int, help="theta table length override")
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("entropy-partial", help="output-entropy lower bounds")
    _add_common(p)
    p.add_argument("--weighting", choices=("prob", "min-length"), default="prob")
    p.add_argument("--cutoff", type=int, required=True)
    p.add_argument("--rounds", type=int, help="enumeration rounds for step machines")
    p.add_argument("--precision", type=int, default=DEFAULT_PRECISION)
    p.set_defaults(func=cmd_entropy_partial)

    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except tuple(_EXIT) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return next(code for cls, code in _EXIT.items() if isinstance(exc, cls))


if __name__ == "__main__":
    sys.exit(main())
