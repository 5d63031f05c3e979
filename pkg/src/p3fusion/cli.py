"""Command-line interface.

Commands: systems list, minimal, idempotent, realize, verify.
Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor

from .biset import biset_class, brute_force_fixed_points, count_fixed_points
from .errors import P3FusionError, UnknownSystemError
from .fusion import (
    FusionSystemSpec,
    builtin_systems,
    fusion_system,
    load_spec_file,
    realizing_group_name,
    resolve_system,
)
from .idempotent import verify_idempotent_stability
from .realize import check_transitivity
from .solver import minimal_biset, verify_table

WORKERS_ENV = "P3FUSION_WORKERS"


def _print_json(data):
    print(json.dumps(data, indent=2))


def _format_table(rows, columns):
    widths = [max(len(str(col)), max((len(str(r[col])) for r in rows), default=0))
              for col in columns]
    header = "  ".join(str(col).ljust(w) for col, w in zip(columns, widths))
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append("  ".join(str(r[col]).ljust(w) for col, w in zip(columns, widths)))
    return "\n".join(lines)


def _resolve_spec(args) -> FusionSystemSpec:
    if getattr(args, "config", None):
        return load_spec_file(args.config)
    return resolve_system(args.system)


def cmd_systems_list(_args) -> int:
    rows = []
    for spec in builtin_systems():
        group = realizing_group_name(spec)
        rows.append({
            "system": spec.name,
            "p": spec.p,
            "classes": ", ".join(
                f"{sorted(c.members)} r={c.r}" for c in spec.classes),
            "group": group if group else "exotic",
        })
    print(_format_table(rows, ["system", "p", "classes", "group"]))
    return 0


def cmd_minimal(args) -> int:
    spec = _resolve_spec(args)
    system = fusion_system(spec)
    result = minimal_biset(system, certify=not args.no_certify)
    data = result.to_json()
    data.pop("wall_time_s", None)
    if args.format == "json":
        _print_json(data)
    else:
        rows = [{
            "system": result.system_name, "p": result.p, "f": result.f,
            "d0": result.d0, "d1": result.d1, "d2": result.d2, "e": result.e,
            "group_or_bound": (result.exoticity_bound_value if result.exotic
                               else realizing_group_name(spec)),
        }]
        print(_format_table(rows, ["system", "p", "f", "d0", "d1", "d2", "e",
                                   "group_or_bound"]))
        certs = data["certificates"]
        print("certificates: " + ", ".join(f"{k}={v}" for k, v in sorted(certs.items())))
    if not result.certificates_ok():
        print("certificate failure", file=sys.stderr)
        return 1
    return 0


def cmd_idempotent(args) -> int:
    spec = _resolve_spec(args)
    system = fusion_system(spec)
    report = verify_idempotent_stability(system)
    data = report.to_json()
    data.pop("wall_time_s", None)
    if args.format == "json":
        _print_json(data)
    else:
        print(f"system {report.system_name}")
        for name, value in data["coefficients"].items():
            print(f"  {name} = {value}")
        for layer, value in sorted(data["layer_sums"].items()):
            print(f"  layer {layer} coefficient sum = {value}")
        print(f"  stability: left={report.stable_left} right={report.stable_right}")
    return 0 if report.ok else 1


def cmd_realize(args) -> int:
    spec = _resolve_spec(args)
    if spec.p >= 7 and not args.big:
        print("p = 7 realization is gated behind --big", file=sys.stderr)
        return 2
    system = fusion_system(spec)
    report = check_transitivity(system)
    if args.format == "json":
        _print_json(report.to_json())
    else:
        r = report.to_json()
        print(f"system {r['system']}: |J| = {r['J_size']}, "
              f"{r['generator_count']} generators, {r['orbit_count']} orbit(s), "
              f"J0 orbits = {r['J0_orbit_count']}, regular = {r['J0_regular']}")
    return 0 if report.ok else 1


# -- verify suites ------------------------------------------------------------

def _suite_table(names) -> dict:
    systems = [fusion_system(resolve_system(n)) for n in names]
    report = verify_table(systems)
    return {"suite": "table", "ok": report.ok, "rows": report.rows,
            "mismatches": report.mismatches}


def _suite_stability(name) -> dict:
    system = fusion_system(resolve_system(name))
    res = minimal_biset(system, certify=True)
    return {"suite": "stability", "system": name, "ok": res.certificates_ok(),
            "stable_left": res.stable_left, "stable_right": res.stable_right,
            "minimal": res.minimal, "unique": res.unique}


def _suite_idempotent(name) -> dict:
    system = fusion_system(resolve_system(name))
    report = verify_idempotent_stability(system)
    return {"suite": "idempotent", "system": name, "ok": report.ok}


def _suite_realize(name) -> dict:
    system = fusion_system(resolve_system(name))
    report = check_transitivity(system)
    data = report.to_json()
    data["suite"] = "realize"
    return data


def _suite_marks(name, oracle) -> dict:
    system = fusion_system(resolve_system(name))
    reps = [biset_class(r.morphism) for r in system.all_class_reps()]
    checked = 0
    failures = []
    if oracle == "p3-exhaustive" and system.p == 3:
        pairs = [(a, b) for a in reps for b in reps]
    else:
        rng = random.Random(20100501 + system.p)
        pairs = [(rng.choice(reps), rng.choice(reps)) for _ in range(200)]
    for a, b in pairs:
        fast = count_fixed_points(a, b)
        slow = brute_force_fixed_points(a, b)
        checked += 1
        if fast != slow:
            failures.append({"pair": (repr(a), repr(b)), "fast": fast, "slow": slow})
    return {"suite": "marks", "system": name, "oracle": oracle,
            "pairs_checked": checked, "ok": not failures, "failures": failures}


_SUITE_RUNNERS = {
    "stability": _suite_stability,
    "idempotent": _suite_idempotent,
    "realize": _suite_realize,
}


def _run_system_suites(task):
    name, suites, oracle = task
    out = []
    for suite in suites:
        if suite == "marks":
            out.append(_suite_marks(name, oracle))
        else:
            out.append(_SUITE_RUNNERS[suite](name))
    return out


def cmd_verify(args) -> int:
    if args.all:
        for flag in ("table", "marks", "stability", "idempotent", "realize"):
            setattr(args, flag, True)
    wanted = [s for s in ("marks", "stability", "idempotent", "realize")
              if getattr(args, s)]
    if not wanted and not args.table:
        print("nothing selected; use --all or choose suites", file=sys.stderr)
        return 2
    if args.system or args.config:
        specs = [_resolve_spec(args)]
        names = [specs[0].name]
    else:
        names = [s.name for s in builtin_systems()]
    if not args.big:
        drop_realize = {n for n in names if resolve_system(n).p >= 7}
    else:
        drop_realize = set()
    results = []
    if args.table:
        results.append(_suite_table(names))
    tasks = []
    for name in names:
        suites = [s for s in wanted
                  if not (s == "realize" and name in drop_realize)
                  and not (s == "marks" and args.oracle == "off")
                  and not (s == "marks" and args.oracle == "p3-exhaustive"
                           and resolve_system(name).p != 3)]
        if suites:
            tasks.append((name, suites, args.oracle))
    workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(_run_system_suites, tasks):
                results.extend(chunk)
    else:
        for task in tasks:
            results.extend(_run_system_suites(task))
    ok = all(r["ok"] for r in results)
    if args.format == "json":
        _print_json({"ok": ok, "results": results})
    else:
        for r in results:
            label = r.get("system", "all")
            print(f"{r['suite']:<11s} {label:<8s} {'PASS' if r['ok'] else 'FAIL'}")
            if r["suite"] == "table":
                bad = {m["system"] for m in r["mismatches"]}
                for row in r["rows"]:
                    verdict = "FAIL" if row["system"] in bad else "PASS"
                    print(f"    {row['system']:<7s} p={row['p']} f={row['f']:<3d} "
                          f"d0={row['d0']:<3d} d1={row['d1']:<4d} d2={row['d2']:<5d} "
                          f"e={row['e']:<7d} {str(row['group_or_bound']):<9s} {verdict}")
                for miss in r["mismatches"]:
                    print(f"    MISMATCH {miss}")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="p3fusion",
        description="Minimal characteristic bisets and permutation realizations "
                    "of fusion systems on extraspecial groups of order p^3.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_systems = sub.add_parser("systems", help="list the built-in systems")
    p_systems.add_argument("action", choices=["list"])
    p_systems.set_defaults(func=cmd_systems_list)

    def add_common(p, config=True):
        p.add_argument("--system", help="built-in system name or alias")
        if config:
            p.add_argument("--config", help="path to a JSON system description")
        p.add_argument("--format", choices=["table", "json"], default="table")

    p_min = sub.add_parser("minimal", help="compute the minimal characteristic biset")
    add_common(p_min)
    p_min.add_argument("--no-certify", action="store_true",
                       help="skip the stability and uniqueness certification")
    p_min.set_defaults(func=cmd_minimal)

    p_idem = sub.add_parser("idempotent", help="idempotent coefficients, layers 0-2")
    add_common(p_idem)
    p_idem.set_defaults(func=cmd_idempotent)

    p_real = sub.add_parser("realize", help="transitivity of the realized fusion action")
    add_common(p_real)
    p_real.add_argument("--big", action="store_true", help="allow p = 7 runs")
    p_real.set_defaults(func=cmd_realize)

    p_ver = sub.add_parser("verify", help="run verification suites")
    add_common(p_ver)
    p_ver.add_argument("--all", action="store_true", help="all suites, all systems")
    p_ver.add_argument("--table", action="store_true")
    p_ver.add_argument("--marks", action="store_true")
    p_ver.add_argument("--stability", action="store_true")
    p_ver.add_argument("--idempotent", action="store_true")
    p_ver.add_argument("--realize", action="store_true")
    p_ver.add_argument("--oracle", choices=["off", "p3-exhaustive", "sampled"],
                       default="off")
    p_ver.add_argument("--big", action="store_true",
                       help="include p = 7 systems in the realization suite")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "system", None) and getattr(args, "config", None):
        parser.error("--system and --config are mutually exclusive")
    if args.command in ("minimal", "idempotent", "realize") and \
            not getattr(args, "system", None) and not getattr(args, "config", None):
        parser.error(f"{args.command} needs --system or --config")
    try:
        return args.func(args)
    except UnknownSystemError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except P3FusionError as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
