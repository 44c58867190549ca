"""Command-line front end: ``qenum <subcommand> [options]``.

Exit codes: 0 success, 1 bad configuration, 2 machine could not be loaded or
built, 3 the two equivalent truth definitions disagreed (internal error).
Relative ``--output`` paths are placed under ``$QENUM_OUTPUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import constructor, semantics
from .dynamics import DynamicsError, MachineRun, build_step
from .lang import LanguageError, chain, count_sentences, delta_formula, tokenize_tape
from .machines import MachineError, load_machine
from .state import EPS, dump

EXIT_CONFIG, EXIT_MACHINE, EXIT_EQUIVALENCE = 1, 2, 3
OUTPUT_ENV = "QENUM_OUTPUT_DIR"


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


@dataclass(frozen=True)
class RunConfig:
    machine: str = "builtin:blank"
    horizon: int = 10
    max_len: int | None = None
    sentences: tuple[str, ...] = ()
    m: int = 0
    epsilon: float = EPS
    output: str | None = None
    format: str = "json"
    seed: int | None = None

    def validate(self) -> None:
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not 0 < self.epsilon <= 1e-3:
            raise ConfigError("epsilon must be in (0, 1e-3]")
        if self.m < 0:
            raise ConfigError("m must be >= 0")
        if self.max_len is not None and self.max_len < 1:
            raise ConfigError("max-len must be >= 1")


def _parser() -> _Parser:
    p = _Parser(prog="qenum", description="Quantum expression enumerator simulator and semantic checker.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, machine=True):
        if machine:
            sp.add_argument("--machine", default="builtin:blank", help="spec file or builtin:<name>")
            sp.add_argument("--horizon", type=int, default=10)
            sp.add_argument("--seed", type=int, default=None, help="override the seed of random machines")
        sp.add_argument("--epsilon", type=float, default=EPS)
        sp.add_argument("--output", default=None)
        sp.add_argument("--format", choices=("json", "text", "csv"), default=None)

    sp = sub.add_parser("simulate", help="dump the state at the horizon")
    common(sp)
    sp = sub.add_parser("paths", help="expression paths at the horizon with probabilities")
    common(sp)
    sp = sub.add_parser("check", help="truth/validity/consistency/completeness report")
    common(sp)
    sp.add_argument("--max-len", type=int, default=None, help="check all base sentences up to this length")
    sp.add_argument("--sentence", action="append", default=[])
    sp = sub.add_parser("measure", help="premeasurement branches for one or two sentences")
    common(sp)
    sp.add_argument("--sentence", action="append", required=True)
    sp.add_argument("--m", type=int, default=0)
    sp = sub.add_parser("construct", help="build the scripted enumerator and verify it")
    common(sp, machine=False)
    sp.add_argument("--nmax", type=int, default=2)
    sp = sub.add_parser("qft", help="Fourier distribution of one constructor block")
    common(sp, machine=False)
    sp.add_argument("--n", type=int, required=True, help="block (argument length) to transform")
    sp = sub.add_parser("chain", help="follow PN(X) through its referents")
    common(sp, machine=False)
    sp.add_argument("--x", required=True)
    sp.add_argument("--steps", type=int, default=6)
    sp = sub.add_parser("count", help="exact sentence counts against the closed form")
    common(sp, machine=False)
    sp.add_argument("--n", type=int, action="append", default=None)
    return p


def _config(args) -> RunConfig:
    cfg = RunConfig(
        machine=getattr(args, "machine", "builtin:blank"),
        horizon=getattr(args, "horizon", 10),
        max_len=getattr(args, "max_len", None),
        sentences=tuple(getattr(args, "sentence", None) or ()),
        m=getattr(args, "m", 0),
        epsilon=args.epsilon,
        output=args.output,
        format=args.format or "json",
        seed=getattr(args, "seed", None),
    )
    cfg.validate()
    return cfg


def _machine(cfg: RunConfig) -> MachineRun:
    spec = load_machine(cfg.machine)
    if cfg.seed is not None and spec.kind in ("random", "random_internal"):
        spec = dataclasses.replace(spec, seed=cfg.seed)
    return MachineRun(build_step(spec), spec)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output is None:
        sys.stdout.write(text)
        return
    path = Path(cfg.output)
    base = os.environ.get(OUTPUT_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _round(x: float) -> float:
    return 0.0 if abs(x) < 1e-15 else float(f"{x:.15g}")


# -- subcommands --------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig) -> str:
    psi = _machine(cfg).state(cfg.horizon)
    buf = io.StringIO()
    dump(psi, buf)
    return buf.getvalue()


def cmd_paths(cfg: RunConfig) -> str:
    psi = _machine(cfg).state(cfg.horizon)
    probs: dict[str, float] = {}
    for c, a in psi.terms.items():
        key = str(tokenize_tape(c))
        probs[key] = probs.get(key, 0.0) + abs(a) ** 2
    rows = sorted(probs.items(), key=lambda kv: (-round(kv[1], 12), kv[0]))
    if cfg.format == "csv":
        return _csv(["path", "probability"], [(k, repr(_round(v))) for k, v in rows])
    if cfg.format == "text":
        return "".join(f"{_round(v):.12f}  {k}\n" for k, v in rows)
    return _json({"horizon": cfg.horizon, "paths": [{"path": k, "probability": _round(v)} for k, v in rows]})


def _report_text(rep: semantics.SemanticsReport) -> str:
    lines = [f"machine {rep.machine}  horizon {rep.horizon}"]
    for r in rep.records:
        lines.append(f"{r.sentence:<14} p={r.printability:.6g} {r.verdict:<9} "
                     f"{'valid' if r.valid else 'INVALID'} {'complete' if r.complete else 'incomplete'} "
                     f"({r.finality})")
    for c in rep.consistency:
        if not c["consistent"]:
            lines.append(f"inconsistent for X={c['argument']}: joint {c['joint']:.6g}")
    s = rep.summary
    lines.append(f"{s['valid']}/{s['sentences']} valid, {s['complete']}/{s['sentences']} complete")
    return "\n".join(lines) + "\n"


def cmd_check(cfg: RunConfig) -> str:
    machine = _machine(cfg)
    sentences = list(cfg.sentences) or None
    max_len = cfg.max_len if cfg.max_len is not None else (None if sentences else 5)
    rep = semantics.build_report(machine, cfg.horizon, sentences, max_len=max_len, eps=cfg.epsilon)
    return _report_text(rep) if cfg.format == "text" else _json(rep.to_dict())


def cmd_measure(cfg: RunConfig) -> str:
    machine = _machine(cfg)
    if len(cfg.sentences) == 1:
        out = semantics.measure(machine, cfg.sentences[0], cfg.horizon, cfg.m)
    elif len(cfg.sentences) == 2:
        out = semantics.measure_pair(machine, cfg.sentences[0], cfg.sentences[1], cfg.horizon, cfg.m)
    else:
        raise ConfigError("measure takes one or two --sentence values")
    rows = [("".join(k), _round(p)) for k, p in out.probabilities().items()]
    if cfg.format == "csv":
        return _csv(["labels", "probability"], [(k, repr(p)) for k, p in rows])
    return _json({"sentences": list(cfg.sentences), "n": cfg.horizon, "m": cfg.m,
                  "ancillas": list(out.labels), "branches": dict(rows)})


def cmd_construct(cfg: RunConfig, n_max: int) -> str:
    build = constructor.build(n_max)
    rep = constructor.verify_qucom(n_max, state=build.state)
    eff = constructor.qucom_efficiency_report(n_max)
    if cfg.format == "text":
        return _report_text(rep) + f"sentences N={eff.sentences_exact} (closed form {eff.sentences_formula:g}), " \
                                   f"script steps {eff.step_count}\n"
    return _json({"report": rep.to_dict(), "efficiency": eff.to_dict(),
                  "stage_norms": [list(x) for x in build.stage_norms]})


def cmd_qft(cfg: RunConfig, n: int) -> str:
    state = constructor.build_qucom(n)
    recs = constructor.qft_argument(state, n)
    if cfg.format == "json":
        return _json({"n": n, "distribution": [dataclasses.asdict(r) for r in recs]})
    return _csv(["Y", "branch", "probability"], [(r.y, r.branch, repr(r.probability)) for r in recs])


def cmd_chain(cfg: RunConfig, x: str, steps: int) -> str:
    ch = chain(x, steps)
    data = {"x": x, "sentences": [s.text for s in ch.sentences], "status": ch.status.value,
            "pn_counts": ch.pn_counts(), "terminal": ch.terminal.text if ch.terminal else None}
    if cfg.format == "text":
        return " -> ".join(data["sentences"]) + f"  [{data['status']}]  PN counts {data['pn_counts']}\n"
    return _json(data)


def cmd_count(cfg: RunConfig, ns) -> str:
    rows = []
    for n in ns or range(1, 10):
        c = count_sentences(n)
        rows.append((n, c.exact, str(delta_formula(n)), c.matches))
    if cfg.format == "csv":
        return _csv(["n", "exact", "formula", "match"], rows)
    if cfg.format == "text":
        return "".join(f"n={n}: exact {e}, formula {f}{'' if m else '  (differs)'}\n" for n, e, f, m in rows)
    return _json([{"n": n, "exact": e, "formula": f, "match": m} for n, e, f, m in rows])


def run(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
        cfg = _config(args)
        if args.command in ("qft",) and args.format is None:
            cfg = dataclasses.replace(cfg, format="csv")
        cmd = args.command
        if cmd == "construct":
            if not 1 <= args.nmax <= constructor.MAX_NMAX:
                raise ConfigError(f"nmax must be in [1, {constructor.MAX_NMAX}]")
            text = cmd_construct(cfg, args.nmax)
        elif cmd == "qft":
            if not 1 <= args.n <= constructor.MAX_NMAX:
                raise ConfigError(f"n must be in [1, {constructor.MAX_NMAX}]")
            text = cmd_qft(cfg, args.n)
        elif cmd == "chain":
            text = cmd_chain(cfg, args.x, args.steps)
        elif cmd == "count":
            if args.n and any(n < 1 or n > 12 for n in args.n):
                raise ConfigError("n must be in [1, 12]")
            text = cmd_count(cfg, args.n)
        else:
            text = {"simulate": cmd_simulate, "paths": cmd_paths, "check": cmd_check,
                    "measure": cmd_measure}[cmd](cfg)
        _emit(cfg, text)
        return 0
    except (MachineError, DynamicsError) as exc:
        print(f"error: machine: {exc}", file=sys.stderr)
        return EXIT_MACHINE
    except semantics.EquivalenceViolation as exc:
        print(f"error: internal equivalence check failed: {exc}", file=sys.stderr)
        return EXIT_EQUIVALENCE
    except (ConfigError, LanguageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
