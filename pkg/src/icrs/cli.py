"""Command-line interface: ``icrs {check,reduce,hc,equiv,join,props}``.

Exit status is 0 when the analysis ran (whatever the verdict), 1 for bad
input and 2 when an internal invariant broke.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .errors import TermError
from .hypercollapsing import (
    HcReading,
    SearchBudget,
    check_nf_properties,
    detect_hypercollapsing,
    hc_equiv_evidence,
    join_search,
)
from .reduction import Reduction, Strategy, reduce, run_script
from .rules import RuleSystem, analyse, parse_rules
from .syntax import parse_position, parse_term, show, show_position
from .terms import Fun, Term


class InputError(Exception):
    pass


@dataclass
class SessionConfig:
    rules_path: Path
    terms: list[str] = field(default_factory=list)
    max_steps: int = 2000
    max_depth: int = 8
    max_states: int = 500
    fuel: int = 100
    depth: int = 8
    strategy: Strategy = Strategy.LEFTMOST_OUTERMOST
    format: str = "text"
    seed: int = 0
    reading: HcReading = HcReading.PROPER

    def __post_init__(self) -> None:
        for name in ("max_steps", "max_depth", "max_states", "fuel", "depth"):
            if getattr(self, name) <= 0 and not (name in ("fuel", "depth") and getattr(self, name) == 0):
                raise InputError(f"--{name.replace('_', '-')} must be positive")

    @property
    def budget(self) -> SearchBudget:
        return SearchBudget(self.max_steps, self.max_depth, self.max_states)

    def load_rules(self, strict: bool = True) -> RuleSystem:
        try:
            text = self.rules_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot read {self.rules_path}: {exc.strerror}") from None
        return parse_rules(text, strict=strict)


class Session:
    def __init__(self, cfg: SessionConfig, sys: RuleSystem) -> None:
        self.cfg = cfg
        self.sys = sys
        self.reserved = set(sys.signature.arities)

    def show(self, t: Term) -> str:
        return show(t, self.reserved)

    def term(self, text: str) -> Term:
        return parse_term(text, self.sys.signature)

    def trace(self, red: Reduction) -> list[dict]:
        out = []
        for st in red.steps:
            d = st.to_json()
            d["target"] = self.show(st.target)
            out.append(d)
        return out

    def script(self, text: str, s: Term) -> Reduction:
        """``strategy:N`` or a list of ``rule@position`` steps."""
        text = text.strip()
        name, colon, count = text.partition(":")
        if colon and name in {x.value for x in Strategy}:
            try:
                n = int(count)
            except ValueError:
                raise InputError(f"bad step count in {text!r}") from None
            res = reduce(s, self.sys, name, n, self.cfg.depth)
            red = res.reduction
            if res.limit is not None:
                red = red.with_limit(res.limit, res.stable_depth)
            return red
        steps = []
        for item in text.replace(",", " ").split():
            rule_name, at, pos = item.partition("@")
            if not at:
                raise InputError(f"bad step {item!r}: expected rule@position")
            try:
                rule = self.sys.rule(rule_name)
            except KeyError:
                raise InputError(f"unknown rule {rule_name!r}") from None
            steps.append((parse_position(pos), rule))
        return run_script(s, steps)


# ---------------------------------------------------------------------------
# commands


def cmd_check(cfg: SessionConfig) -> dict:
    sys_ = cfg.load_rules(strict=False)
    a = analyse(sys_)
    ses = Session(cfg, sys_)
    return {
        "valid": not a.invalid_rules,
        "invalid_rules": {name: list(why) for name, why in a.invalid_rules},
        "left_linear": a.left_linear,
        "nonlinear_witnesses": [{"rule": r, "meta": z} for r, z in a.nonlinear_witnesses],
        "fully_extended": a.fully_extended,
        "extension_witnesses": [{"rule": r, "position": show_position(p)} for r, p in a.extension_witnesses],
        "orthogonal": a.orthogonal,
        "overlaps": [
            {"rules": [o.rule1.name, o.rule2.name], "position": show_position(o.position)} for o in a.overlaps
        ],
        "collapsing_rules": list(a.collapsing_rules),
        "almost_non_collapsing": a.almost_non_collapsing,
        "rules": [f"{r.name}: {ses.show(r.lhs)} -> {ses.show(r.rhs)}" for r in sys_.rules],
    }


def _one_term(cfg: SessionConfig, n: int = 1) -> None:
    if len(cfg.terms) != n:
        raise InputError(f"expected {n} --term argument{'s' if n > 1 else ''}, got {len(cfg.terms)}")


def cmd_reduce(cfg: SessionConfig) -> dict:
    _one_term(cfg)
    ses = Session(cfg, cfg.load_rules())
    s = ses.term(cfg.terms[0])
    res = reduce(s, ses.sys, cfg.strategy, cfg.fuel, cfg.depth)
    return {
        "term": ses.show(s),
        "strategy": cfg.strategy.value,
        "trace": ses.trace(res.reduction),
        "final": ses.show(res.reduction.target),
        "stable_depth": res.stable_depth,
        "stable_prefix": ses.show(res.stable_prefix),
        "fuel_exhausted": res.fuel_exhausted,
        "normal_form": res.normal_form,
        "limit": None if res.limit is None else ses.show(res.limit),
    }


def cmd_hc(cfg: SessionConfig) -> dict:
    _one_term(cfg)
    ses = Session(cfg, cfg.load_rules())
    s = ses.term(cfg.terms[0])
    v = detect_hypercollapsing(s, ses.sys, cfg.budget)
    lasso = None
    if v.witness is not None:
        lasso = {"stem": ses.trace(v.witness.stem), "cycle": ses.trace(v.witness.cycle)}
    return {"term": ses.show(s), "status": v.status.value, "lasso": lasso, "states": v.states}


def cmd_equiv(cfg: SessionConfig) -> dict:
    _one_term(cfg, 2)
    ses = Session(cfg, cfg.load_rules())
    a, b = (ses.term(x) for x in cfg.terms)
    ev = hc_equiv_evidence(a, b, ses.sys, cfg.budget, cfg.depth, cfg.reading)
    return {
        "left": ses.show(a),
        "right": ses.show(b),
        "answer": ev.answer.value,
        "left_normal_form": ses.show(ev.left.term),
        "right_normal_form": ses.show(ev.right.term),
        "difference": None if ev.difference is None else show_position(ev.difference),
        "reading": cfg.reading.value,
    }


def cmd_join(cfg: SessionConfig, left: str, right: str) -> dict:
    _one_term(cfg)
    ses = Session(cfg, cfg.load_rules())
    s = ses.term(cfg.terms[0])
    S, T = ses.script(left, s), ses.script(right, s)
    rep = join_search(s, S, T, ses.sys, cfg.budget, cfg.depth, cfg.reading)
    j = rep.join
    return {
        "term": ses.show(s),
        "left_endpoint": ses.show(S.final),
        "right_endpoint": ses.show(T.final),
        "joined": j is not None,
        "left_extension": None if j is None else ses.trace(j.left),
        "right_extension": None if j is None else ses.trace(j.right),
        "answer": None if j is None else j.evidence.answer.value,
        "left_states": rep.left_states,
        "right_states": rep.right_states,
        "exhausted": rep.exhausted,
        "left_closed": rep.left_closed,
        "right_closed": rep.right_closed,
        "reading": cfg.reading.value,
    }


def cmd_props(cfg: SessionConfig) -> dict:
    ses = Session(cfg, cfg.load_rules())
    if cfg.terms:
        seeds = [ses.term(x) for x in cfg.terms]
    else:
        seeds = [Fun(f, ()) for f, n in sorted(ses.sys.signature.arities.items()) if n == 0]
    rep = check_nf_properties(ses.sys, seeds, cfg.budget)
    out = {}
    for v in (rep.NF, rep.UN, rep.UN_arrow):
        out[v.name] = {
            "holds": v.holds,
            "bounded": v.bounded,
            "witness": None if v.witness is None else [ses.show(t) for t in v.witness],
        }
    out["seeds"] = [ses.show(t) for t in seeds]
    out["states"] = rep.states
    out["normal_forms"] = [ses.show(t) for t in rep.normal_forms]
    out["complete"] = rep.complete
    return out


# ---------------------------------------------------------------------------
# text rendering


def _yes(b: bool) -> str:
    return "yes" if b else "no"


def render_text(command: str, r: dict) -> str:
    lines: list[str] = []
    match command:
        case "check":
            lines.append(f"valid: {_yes(r['valid'])}")
            for name, why in r["invalid_rules"].items():
                lines.append(f"  {name}: {'; '.join(why)}")
            lines.append(f"left-linear: {_yes(r['left_linear'])}")
            lines += [f"  {w['rule']}: meta-variable {w['meta']} repeated" for w in r["nonlinear_witnesses"]]
            lines.append(f"fully-extended: {_yes(r['fully_extended'])}")
            lines += [f"  {w['rule']} at {w['position']}" for w in r["extension_witnesses"]]
            lines.append(f"orthogonal: {_yes(r['orthogonal'])}")
            lines += [f"  overlap {o['rules'][0]} / {o['rules'][1]} at {o['position']}" for o in r["overlaps"]]
            lines.append(f"collapsing: {', '.join(r['collapsing_rules']) or 'none'}")
            lines.append(f"almost-non-collapsing: {_yes(r['almost_non_collapsing'])}")
        case "reduce":
            for k, st in enumerate(r["trace"], 1):
                lines.append(f"{k}. {st['rule']}@{show_position(st['position'])}  ->  {st['target']}")
            lines.append(f"final: {r['final']}")
            lines.append(f"stable prefix (depth {r['stable_depth']}): {r['stable_prefix']}")
            if r["normal_form"]:
                lines.append("normal form: yes")
            if r["limit"] is not None:
                lines.append(f"limit: {r['limit']}")
        case "hc":
            lines.append(f"{r['term']}: {r['status']}")
            if r["lasso"] is not None:
                for part in ("stem", "cycle"):
                    steps = " ".join(f"{st['rule']}@{show_position(st['position'])}" for st in r["lasso"][part])
                    lines.append(f"  {part}: {steps or '(empty)'}")
        case "equiv":
            lines.append(f"{r['answer']}")
            lines.append(f"  {r['left']}  ~>  {r['left_normal_form']}")
            lines.append(f"  {r['right']}  ~>  {r['right_normal_form']}")
            if r["difference"] is not None:
                lines.append(f"  first difference at {r['difference']}")
        case "join":
            lines.append(f"left endpoint: {r['left_endpoint']}")
            lines.append(f"right endpoint: {r['right_endpoint']}")
            if r["joined"]:
                lines.append("joined")
                for side in ("left", "right"):
                    steps = " ".join(f"{st['rule']}@{show_position(st['position'])}" for st in r[f"{side}_extension"])
                    lines.append(f"  {side}: {steps or '(no steps)'}")
            else:
                lines.append("no join within budget")
                if r["left_closed"]:
                    lines.append("  left endpoint reduces only to itself")
                if r["right_closed"]:
                    lines.append("  right endpoint reduces only to itself")
        case "props":
            for name in ("NF", "UN", "UN->"):
                v = r[name]
                word = "holds" if v["holds"] else "fails"
                if v["bounded"]:
                    word += " (within bounds)"
                if v["witness"]:
                    word += f"  witness: {', '.join(v['witness'])}"
                lines.append(f"{name}: {word}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rules", required=True, type=Path, help="rule file")
    common.add_argument("--term", action="append", default=[], help="term (repeatable)")
    common.add_argument("--fuel", type=int, default=100)
    common.add_argument("--depth", type=int, default=8)
    common.add_argument("--max-steps", type=int, default=2000)
    common.add_argument("--max-depth", type=int, default=8)
    common.add_argument("--max-states", type=int, default=500)
    common.add_argument("--strategy", choices=[s.value for s in Strategy], default="lo")
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--reading", choices=[r.value for r in HcReading], default="proper")

    p = argparse.ArgumentParser(prog="icrs", description="Analyses for infinitary combinatory reduction systems.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="rule-system properties")
    sub.add_parser("reduce", parents=[common], help="run a strategy and report the stable prefix")
    sub.add_parser("hc", parents=[common], help="hypercollapsing detection")
    sub.add_parser("equiv", parents=[common], help="equivalence modulo hypercollapsing subterms")
    j = sub.add_parser("join", parents=[common], help="search for a join modulo hypercollapsing subterms")
    j.add_argument("--left", required=True, help="script: 'rule@pos ...' or 'lo:N' / 'fair:N'")
    j.add_argument("--right", required=True, help="script: 'rule@pos ...' or 'lo:N' / 'fair:N'")
    sub.add_parser("props", parents=[common], help="NF, UN and UN-> on the reachable graph")
    return p


def run(argv: Sequence[str] | None = None) -> tuple[int, str]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (0 if exc.code == 0 else 1), ""
    try:
        cfg = SessionConfig(
            rules_path=args.rules,
            terms=list(args.term),
            max_steps=args.max_steps,
            max_depth=args.max_depth,
            max_states=args.max_states,
            fuel=args.fuel,
            depth=args.depth,
            strategy=Strategy(args.strategy),
            format=args.format,
            seed=args.seed,
            reading=HcReading(args.reading),
        )
        match args.command:
            case "check":
                report = cmd_check(cfg)
            case "reduce":
                report = cmd_reduce(cfg)
            case "hc":
                report = cmd_hc(cfg)
            case "equiv":
                report = cmd_equiv(cfg)
            case "join":
                report = cmd_join(cfg, args.left, args.right)
            case "props":
                report = cmd_props(cfg)
            case _:
                raise InputError(f"unknown command {args.command}")
    except (InputError, TermError, ValueError) as exc:
        return 1, f"error: {exc}"
    except Exception as exc:  # noqa: BLE001
        return 2, f"internal error: {type(exc).__name__}: {exc}"
    if cfg.format == "json":
        report = {"command": args.command, **report}
        return 0, json.dumps(report, ensure_ascii=False, indent=2)
    return 0, render_text(args.command, report)


def main(argv: Sequence[str] | None = None) -> int:
    code, text = run(argv)
    if text:
        print(text, file=sys.stdout if code == 0 else sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
