"""Command line interface: validate, session, simulate, evaluate, sensitivity, refine, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import guard
from .cycle import start_session
from .errors import RekoError
from .model import ModuleIndex, parse_module, serialize_module, validate
from .reasoning import explain
from .refine import RefinementConfig, refine_probabilities
from .sensitivity import TARGETS, stability_sweep
from .simulator import GenConfig, evaluate, generate, read_cases, write_cases


def _load_module(path: str):
    return parse_module(Path(path).read_text(encoding="utf-8"))


def _load_valid_module(path: str) -> ModuleIndex:
    module = _load_module(path)
    report = validate(module)
    if not report.ok:
        raise RekoError(
            f"module {path} failed validation:\n"
            + json.dumps(report.to_dict(), sort_keys=True, indent=2),
            code="INVALID_MODULE")
    return ModuleIndex(module)


def _emit(payload) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False))


def cmd_validate(args) -> int:
    module = _load_module(args.module)
    report = validate(module)
    _emit({"module_id": module.id, "ok": report.ok, **report.to_dict()})
    return 0 if report.ok else 1


def cmd_simulate(args) -> int:
    index = _load_valid_module(args.module)
    cases = generate(index, GenConfig(seed=args.seed, n_cases=args.cases))
    if args.out:
        write_cases(cases, args.out)
        _emit({"written": args.out, "n_cases": len(cases)})
    else:
        for case in cases:
            print(case.to_json_line())
    return 0


def cmd_evaluate(args) -> int:
    index = _load_valid_module(args.module)
    cases = read_cases(args.cases)
    report = evaluate(index, cases)
    _emit(report.to_dict())
    return 0


def cmd_sensitivity(args) -> int:
    index = _load_valid_module(args.module)
    cases = read_cases(args.cases)
    grid = [float(x) for x in args.lambdas.split(",") if x.strip()]
    report = stability_sweep(index.module, cases, grid, target=args.target)
    _emit(report.to_dict())
    return 0


def cmd_refine(args) -> int:
    index = _load_valid_module(args.module)
    cases = read_cases(args.cases)
    refined, report = refine_probabilities(index.module, cases,
                                           RefinementConfig(equivalent_sample=args.n0))
    out = Path(args.out)
    if out.resolve() == Path(args.module).resolve():
        raise RekoError("refusing to overwrite the input module; pick another --out",
                        code="BAD_OUTPUT")
    out.write_text(serialize_module(refined), encoding="utf-8")
    _emit({"written": str(out), **report.to_dict()})
    return 0


def cmd_serve(args) -> int:
    from .service import Service
    service = Service(args.modules, args.log, port=args.port, ui_dir=args.ui)
    _emit({"listening": service.port, "modules": service.registry.ids()})
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        service.shutdown()
    return 0


def _print_differential(session) -> None:
    entries = session.posterior_entries()
    ranked = sorted(entries, key=lambda nid: (-entries[nid], nid))
    guarded, verdicts = guard.check_differential(session.index, session.evidence, ranked)
    guarded_set = set(guarded)
    print(f"-- differential (step {session.step_count}) --")
    for nid in ranked:
        status = session.resolved.get(nid, "active")
        mark = "" if nid in guarded_set else "  [VETOED]"
        goal = " <- goal" if session.goal and session.goal.node_id == nid else ""
        print(f"  {entries[nid]:8.4f}  {nid:<28} {status}{mark}{goal}")
    for v in verdicts:
        print(f"  ! {v.outcome}: {v.node_id}: {v.message}")


def cmd_session(args) -> int:
    index = _load_valid_module(args.module)
    session = start_session(index)
    print(f"session on module {index.module.id!r}; commands: "
          "d=differential, r [k]=recommend, f <finding> <present|absent>, "
          "e <node>=explain, q=quit")
    _print_differential(session)
    for line in sys.stdin:
        parts = line.strip().split()
        if not parts:
            continue
        cmd = parts[0]
        try:
            if cmd == "q":
                break
            elif cmd == "d":
                _print_differential(session)
            elif cmd == "r":
                k = int(parts[1]) if len(parts) > 1 else 5
                for r in session.recommend(k):
                    print(f"  ask {r.finding_id:<28} gain={r.gain:.5f} "
                          f"cost={r.cost:g} score={r.score:.5f}")
            elif cmd == "f":
                session.ingest(parts[1], parts[2])
                _print_differential(session)
                status = session.status()
                if status.is_done:
                    print(f"-- done: {status.reason} --")
            elif cmd == "e":
                for e in explain(session.index, parts[1], session.evidence):
                    print(f"  {e.finding_id:<28} {e.state:<8} LR={e.likelihood_ratio:10.4f} "
                          f"log={e.log_lr:+.4f}")
            else:
                print(f"unknown command {cmd!r}", file=sys.stderr)
        except (RekoError, ValueError, IndexError) as exc:
            print(f"error: {exc}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rekodx",
        description="Knowledge-module tooling and sequential-diagnosis engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a module file, report every violation")
    p.add_argument("module")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("session", help="interactive diagnostic session on a module")
    p.add_argument("--module", required=True)
    p.set_defaults(func=cmd_session)

    p = sub.add_parser("simulate", help="generate synthetic ground-truth cases")
    p.add_argument("--module", required=True)
    p.add_argument("--cases", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="measure agreement against recorded cases")
    p.add_argument("--module", required=True)
    p.add_argument("--cases", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sensitivity", help="multiplicative perturbation stability sweep")
    p.add_argument("--module", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated factors, e.g. 0.5,1,2")
    p.add_argument("--target", choices=TARGETS, default="all")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("refine", help="update probabilities from recorded cases")
    p.add_argument("--module", required=True)
    p.add_argument("--cases", required=True)
    p.add_argument("--n0", type=float, required=True,
                   help="equivalent sample size of the authored values")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("serve", help="run the HTTP session service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--modules", required=True, help="directory of module files")
    p.add_argument("--log", required=True, help="directory for session event logs")
    p.add_argument("--ui", help="optional directory of static UI assets")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RekoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
