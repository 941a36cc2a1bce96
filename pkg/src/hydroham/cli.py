"""Command-line front end.

    hydroham check OPERATOR_FILE
    hydroham invert "u_t = 6*u*u_x + u_xxx" [-o system.json]
    hydroham catalog list [--n 3] [--rank 1]
    hydroham catalog show C32
    hydroham catalog verify [ID ...]
    hydroham reproduce kdv-1
    hydroham match OPERATOR_FILE [--map MAP.json ...]

Exit codes: 0 everything verified, 1 a claim or check failed, 2 usage or parse error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from . import catalog
from .files import FormatError, dump_operator_text, dump_system, dumps, load_map, load_operator
from .operators import check_full
from .reproduce import FAIL, example_ids, reproduce
from .symkernel import KernelError, ParseError, to_text
from .transform import NotInvertible, ScalarEvolutionEquation, SingularMap, invert_equation, match_catalog

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    seed: int = 0
    trials: int = 25
    degree: int = 4
    format: str = "text"

    @property
    def structured(self) -> bool:
        return self.format == "json"


def _emit(cfg: RunConfig, text: str, data: dict) -> None:
    sys.stdout.write(dumps(data) if cfg.structured else text + "\n")


def cmd_check(cfg: RunConfig, path: str) -> int:
    C = load_operator(path)
    rep = check_full(C, seed=cfg.seed, trials=cfg.trials, subject=path)
    _emit(cfg, rep.summary(), rep.to_dict())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_invert(cfg: RunConfig, equation: str, out: str | None = None) -> int:
    eq = ScalarEvolutionEquation.from_text(equation)
    system = invert_equation(eq)
    data = dump_system(system)
    if out:
        with open(out, "w") as fh:
            fh.write(dumps(data))
    _emit(cfg, "\n".join(system.equations()), data)
    return EXIT_OK


def cmd_catalog(cfg: RunConfig, action: str, ids, n=None, rank=None) -> int:
    if action == "list":
        entries = [e for k in ((n,) if n else (2, 3)) for e in catalog.enumerate(k, rank)]
        lines = [f"{e.id:<9} n={e.n} rank={e.rank} functions={','.join(e.functions) or '-'}" for e in entries]
        _emit(cfg, "\n".join(lines), {"entries": [{"id": e.id, "n": e.n, "rank": e.rank,
                                                    "functions": {k: list(v) for k, v in e.functions.items()}}
                                                   for e in entries]})
        return EXIT_OK
    if action == "show":
        out, data = [], {}
        for i in ids:
            e = catalog.get(i)
            T = e.template()
            item = {"id": e.id, "g": [[to_text(x) for x in r] for r in T.g],
                    "velocity": [[to_text(x) for x in r] for r in T.velocity()],
                    "omega": [[to_text(x) for x in r] for r in T.omega],
                    "charts": list(e.charts), "constraint": e.constraint, "note": e.note}
            data[e.id] = item
            out.append(f"# {e.id}, rank {e.rank}, functions: "
                       + (", ".join(f"{k}({','.join(a)})" for k, a in e.functions.items()) or "none"))
            out.extend(f"# chart: {c}" for c in e.charts)
            if e.constraint:
                out.append(f"# constraint: {e.constraint}")
            out.append(dump_operator_text(T, e.constants, e.surds))
        _emit(cfg, "\n".join(out).rstrip("\n"), data)
        return EXIT_OK
    # verify
    targets = [catalog.get(i).id for i in ids] if ids else list(catalog.ENTRIES)
    reports = [catalog.verify_entry(t, trials=cfg.trials, seed=cfg.seed) for t in targets]
    _emit(cfg, "\n".join(r.summary() for r in reports), {"reports": [r.to_dict() for r in reports]})
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_reproduce(cfg: RunConfig, example: str) -> int:
    rep = reproduce(example, seed=cfg.seed, trials=cfg.trials, degree=cfg.degree)
    _emit(cfg, rep.to_text(), rep.to_dict())
    return EXIT_FAIL if rep.status == FAIL else EXIT_OK


def cmd_match(cfg: RunConfig, path: str, maps=()) -> int:
    C = load_operator(path)
    extra = [(m, load_map(m)) for m in maps]
    m = match_catalog(C, extra)
    if m is None:
        _emit(cfg, "no catalog match in the restricted search", {"match": None})
        return EXIT_FAIL
    _emit(cfg, m.describe(), {"match": {"entry": m.entry, "via": m.via,
                                        "bindings": {k: to_text(v) for k, v in sorted(m.bindings.items())}}})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for randomized zero tests")
    common.add_argument("--trials", type=int, default=25, help="random trials per identity")
    common.add_argument("--degree", type=int, default=4, help="ansatz degree for density searches")
    common.add_argument("--format", choices=("text", "json"), default="text")

    ap = argparse.ArgumentParser(prog="hydroham", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", parents=[common], help="run every Hamiltonian condition on an operator file")
    p.add_argument("operator")

    p = sub.add_parser("invert", parents=[common], help="invert a scalar evolution equation")
    p.add_argument("equation")
    p.add_argument("-o", "--output", help="write the system file here")

    p = sub.add_parser("catalog", parents=[common], help="list, show or verify catalog entries")
    p.add_argument("action", choices=("list", "show", "verify"))
    p.add_argument("ids", nargs="*")
    p.add_argument("--n", type=int, choices=(2, 3))
    p.add_argument("--rank", type=int)

    p = sub.add_parser("reproduce", parents=[common], help="run a worked example end to end")
    p.add_argument("example", help=", ".join(example_ids()))

    p = sub.add_parser("match", parents=[common], help="find the catalog normal form of an operator")
    p.add_argument("operator")
    p.add_argument("--map", action="append", default=[], help="extra point map file to try first")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    cfg = RunConfig(args.command, seed=args.seed, trials=args.trials, degree=args.degree, format=args.format)
    try:
        if args.command == "check":
            return cmd_check(cfg, args.operator)
        if args.command == "invert":
            return cmd_invert(cfg, args.equation, args.output)
        if args.command == "catalog":
            if args.action == "show" and not args.ids:
                ap.error("catalog show needs at least one entry id")
            return cmd_catalog(cfg, args.action, args.ids, args.n, args.rank)
        if args.command == "reproduce":
            return cmd_reproduce(cfg, args.example)
        if args.command == "match":
            return cmd_match(cfg, args.operator, args.map)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except (ParseError, FormatError, NotInvertible, SingularMap, KernelError, KeyError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
