"""
main.py — Command-line entry point for the valence toolkit.

Commands
────────
classify           MONOID | --corpus        dichotomy verdict with certificates
gate               MONOID GENMAP            is R(N) finite for N = ⟨generators⟩?
laws               MONOID                   seeded associativity / identity spot-check
run                DEVICE --word W          acceptance, outputs or a derivation
enumerate          AUTOMATON                language / transduction slice
convert-automaton  AUTOMATON                classical NFA / FST, or a refusal
convert-grammar    GRAMMAR                  classical CFG fragment, or a refusal
enumerate-grammar  GRAMMAR                  language slice
evaluate-tree      TREE                     evaluations, values, excursiveness
witness            WITNESS                  device + cross-check against the oracle
separate           WITNESS                  Myhill–Nerode separators
falsify-ogden      WITNESS --word Z         marked pumping search

Exit codes
──────────
0 ok · 1 error · 2 refusal / infinite / chain case · 3 unknown

JSON goes to stdout (or --out), logs go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from analysis import classify_catalog, classify_dichotomy, disjoint_inverse_violations, units_finite_gate
from config import DEFAULT_PUMP_SET, EXHAUSTIVE_EVAL_CAP, MAX_STEPS, MAX_WORD_LEN, NORM_CAP, RunConfig, logger
from data_loader import (
    load_automaton,
    load_device,
    load_genmap,
    load_grammar,
    load_monoid,
    load_monoid_corpus,
    load_tree,
    load_witness,
)
from errors import GateRefusal, UnsupportedMonoidError, ValenceError
from grammars import ValenceGrammar, bounded_language, find_derivation, is_normalized, normalize, to_cfg
from lab import (
    AUTOMATON_K,
    build_witness_automaton,
    build_witness_grammar,
    cross_check_witness,
    default_marks,
    nerode_separators,
    ogden_falsify,
    power_candidates,
)
from machines import (
    ValenceTransducer,
    accepts,
    enumerate_language,
    to_fst,
    to_nfa,
    transduce,
    transduction_slice,
)
from models import DichotomyCase, GateAnswer, SearchBudget
from monoid import format_element, identity, mul, random_element, to_literal
from utils import format_word, tokenize
from valence_trees import (
    bounded_excursiveness_values,
    evaluations,
    excursiveness,
    minimize_excursiveness,
    preorder_evaluation,
)

EXIT_OK, EXIT_ERROR, EXIT_REFUSED, EXIT_UNKNOWN = 0, 1, 2, 3

Result = Tuple[Dict[str, Any], int]


def _budget(cfg: RunConfig) -> SearchBudget:
    return SearchBudget(cfg.norm_cap, cfg.max_steps)


def _refusal(exc: GateRefusal) -> Result:
    code = EXIT_UNKNOWN if exc.verdict.answer == GateAnswer.UNKNOWN else EXIT_REFUSED
    return {"refused": True, "reason": str(exc), "gate": exc.verdict.to_dict()}, code


def _int_list(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from exc


# ──────────────────────────────────────────────────────────────────────────────
# Monoid commands
# ──────────────────────────────────────────────────────────────────────────────

def cmd_classify(args: argparse.Namespace, cfg: RunConfig) -> Result:
    if args.corpus:
        rows = []
        ok = True
        for M in load_monoid_corpus():
            verdict = classify_dichotomy(M)
            violations = disjoint_inverse_violations(M)
            ok &= verdict.case == DichotomyCase.FINITE_GROUP and not violations
            rows.append({
                "monoid": M.label,
                "order": len(M.elements),
                "case": verdict.case.value,
                "group_size": len(verdict.group),
                "disjoint_inverse_violations": len(violations),
            })
        return {"count": len(rows), "all_hold": ok, "monoids": rows}, EXIT_OK if ok else EXIT_ERROR

    if args.monoid is None:
        raise ValenceError("classify needs a monoid file or --corpus")
    verdict = classify_catalog(load_monoid(args.monoid))
    code = EXIT_OK if verdict.case == DichotomyCase.FINITE_GROUP else EXIT_REFUSED
    return verdict.to_dict(), code


def cmd_gate(args: argparse.Namespace, cfg: RunConfig) -> Result:
    M = load_monoid(args.monoid)
    verdict = units_finite_gate(M, load_genmap(args.genmap, M), cfg.norm_cap)
    code = {GateAnswer.FINITE: EXIT_OK, GateAnswer.INFINITE: EXIT_REFUSED}.get(verdict.answer, EXIT_UNKNOWN)
    return verdict.to_dict(), code


def cmd_laws(args: argparse.Namespace, cfg: RunConfig) -> Result:
    M = load_monoid(args.monoid)
    rng = random.Random(cfg.seed)
    one = identity(M)
    failures: List[Dict[str, Any]] = []
    for _ in range(args.samples):
        a, b, c = (random_element(M, rng) for _ in range(3))
        if mul(M, mul(M, a, b), c) != mul(M, a, mul(M, b, c)):
            failures.append({"law": "associativity", "elements": [to_literal(M, x) for x in (a, b, c)]})
        if mul(M, one, a) != a or mul(M, a, one) != a:
            failures.append({"law": "identity", "elements": [to_literal(M, a)]})
    report = {"samples": args.samples, "seed": cfg.seed, "failures": failures[:20],
              "failure_count": len(failures), "ok": not failures}
    return report, EXIT_OK if not failures else EXIT_ERROR


# ──────────────────────────────────────────────────────────────────────────────
# Device commands
# ──────────────────────────────────────────────────────────────────────────────

def cmd_run(args: argparse.Namespace, cfg: RunConfig) -> Result:
    device = load_device(args.device)
    budget = _budget(cfg)
    if isinstance(device, ValenceGrammar):
        w = tokenize(args.word, device.terminals)
        steps = find_derivation(device, w, budget)
        return {"word": format_word(w), "derivable": steps is not None,
                "derivation": [{"position": p, "production": i} for p, i in steps or ()]}, EXIT_OK
    w = tokenize(args.word, device.alphabet)
    if isinstance(device, ValenceTransducer):
        sample = transduce(device, w, budget, args.max_output)
        return {"word": format_word(w), **sample.to_dict()}, EXIT_OK
    return {"word": format_word(w), "result": accepts(device, w, budget).value}, EXIT_OK


def cmd_enumerate(args: argparse.Namespace, cfg: RunConfig) -> Result:
    A = load_automaton(args.automaton)
    if isinstance(A, ValenceTransducer):
        return transduction_slice(A, cfg.maxlen, _budget(cfg), args.max_output).to_dict(), EXIT_OK
    return enumerate_language(A, cfg.maxlen, _budget(cfg)).to_dict(), EXIT_OK


def cmd_convert_automaton(args: argparse.Namespace, cfg: RunConfig) -> Result:
    A = load_automaton(args.automaton)
    try:
        converted = to_fst(A, cfg.norm_cap) if isinstance(A, ValenceTransducer) else to_nfa(A, cfg.norm_cap)
    except GateRefusal as exc:
        return _refusal(exc)
    payload = converted.to_dict()
    if args.check and not isinstance(A, ValenceTransducer):
        before = enumerate_language(A, cfg.maxlen, _budget(cfg))
        after = enumerate_language(converted, cfg.maxlen, _budget(cfg))
        payload["check"] = {"maxlen": cfg.maxlen, "equal": before.words == after.words}
    return payload, EXIT_OK


def cmd_convert_grammar(args: argparse.Namespace, cfg: RunConfig) -> Result:
    G = load_grammar(args.grammar)
    if not is_normalized(G):
        logger.info("Grammar is not in normal form; normalizing first.")
        G = normalize(G)
    try:
        cfg_grammar = to_cfg(G, cfg.norm_cap)
    except GateRefusal as exc:
        return _refusal(exc)
    payload = cfg_grammar.fragment(cfg.maxlen).to_dict()
    # only productions used by words up to maxlen; longer words need a larger --maxlen
    payload["fragment_maxlen"] = cfg.maxlen
    payload["sequence_bound"] = cfg_grammar.m
    payload["group"] = [to_literal(G.monoid, h) for h in cfg_grammar.group]
    if args.check:
        before = bounded_language(G, cfg.maxlen, budget=_budget(cfg))
        after = cfg_grammar.language(cfg.maxlen)
        payload["check"] = {"maxlen": cfg.maxlen, "equal": before.words == after.words,
                            "complete": before.complete}
    return payload, EXIT_OK


def cmd_enumerate_grammar(args: argparse.Namespace, cfg: RunConfig) -> Result:
    G = load_grammar(args.grammar)
    return bounded_language(G, cfg.maxlen, budget=_budget(cfg)).to_dict(), EXIT_OK


def cmd_evaluate_tree(args: argparse.Namespace, cfg: RunConfig) -> Result:
    tree = load_tree(args.tree)
    M = tree.monoid
    show = lambda a: format_element(M, a)   # noqa: E731

    pre = preorder_evaluation(tree)
    payload: Dict[str, Any] = {
        "nodes": len(tree),
        "preorder": {"order": list(pre.order), "value": show(pre.value), "excursiveness": pre.excursiveness},
    }
    if len(tree) > args.cap:
        payload["evaluation_count"] = None
        try:
            payload["bounded_values"] = sorted(show(v) for v in bounded_excursiveness_values(tree))
        except UnsupportedMonoidError as exc:
            payload["bounded_values"] = None
            payload["note"] = str(exc)
        return payload, EXIT_OK

    evs = list(evaluations(tree, args.cap))
    payload["evaluation_count"] = len(evs)
    payload["values"] = sorted({show(e.value) for e in evs})

    try:
        payload["bounded_values"] = sorted(show(v) for v in bounded_excursiveness_values(tree))
        minimal = {}
        for value in sorted({e.value for e in evs}, key=show):
            ev = minimize_excursiveness(tree, value, cap=args.cap)
            minimal[show(value)] = {"order": list(ev.order), "excursiveness": excursiveness(tree, ev)}
        payload["minimized"] = minimal
    except UnsupportedMonoidError as exc:
        payload["bounded_values"] = None
        payload["note"] = str(exc)
    return payload, EXIT_OK


# ──────────────────────────────────────────────────────────────────────────────
# Witness / evidence commands
# ──────────────────────────────────────────────────────────────────────────────

def cmd_witness(args: argparse.Namespace, cfg: RunConfig) -> Result:
    spec = load_witness(args.witness)
    device = build_witness_automaton(spec) if spec.kind == AUTOMATON_K else build_witness_grammar(spec)
    report = cross_check_witness(spec, cfg.maxlen, _budget(cfg))
    return {"device": device.to_dict(), "cross_check": report}, EXIT_OK if report["agree"] else EXIT_ERROR


def cmd_separate(args: argparse.Namespace, cfg: RunConfig) -> Result:
    spec = load_witness(args.witness)
    candidates = None if args.exhaustive else power_candidates(spec, args.want)
    if candidates is not None:
        prefixes, suffixes = candidates
        separator = nerode_separators(spec.oracle(), spec.alphabet, 0, 0, args.want, prefixes, suffixes)
    else:
        separator = nerode_separators(spec.oracle(), spec.alphabet, args.prefix_maxlen, args.suffix_maxlen,
                                      args.want)
    payload = separator.to_dict()
    payload["requested"] = args.want
    return payload, EXIT_OK


def cmd_falsify_ogden(args: argparse.Namespace, cfg: RunConfig) -> Result:
    spec = load_witness(args.witness)
    z = tokenize(args.word, spec.alphabet)
    marks = args.marks
    if marks is None:
        if spec.kind == AUTOMATON_K or spec.separator not in z:
            raise ValenceError("--marks is required unless the word has a separator to mark before")
        marks = default_marks(z[:z.index(spec.separator)])
    m = args.m if args.m is not None else len(marks)
    report = ogden_falsify(spec.oracle(), z, marks, m, args.pump)
    return report.to_dict(), EXIT_OK


# ──────────────────────────────────────────────────────────────────────────────
# Parser
# ──────────────────────────────────────────────────────────────────────────────

COMMANDS: Dict[str, Callable[[argparse.Namespace, RunConfig], Result]] = {
    "classify":          cmd_classify,
    "gate":              cmd_gate,
    "laws":              cmd_laws,
    "run":               cmd_run,
    "enumerate":         cmd_enumerate,
    "convert-automaton": cmd_convert_automaton,
    "convert-grammar":   cmd_convert_grammar,
    "enumerate-grammar": cmd_enumerate_grammar,
    "evaluate-tree":     cmd_evaluate_tree,
    "witness":           cmd_witness,
    "separate":          cmd_separate,
    "falsify-ogden":     cmd_falsify_ogden,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="valence", description="Monoid-controlled automata and grammars.")
    parser.add_argument("--norm-cap", type=int, default=NORM_CAP)
    parser.add_argument("--max-steps", type=int, default=MAX_STEPS)
    parser.add_argument("--maxlen", type=int, default=MAX_WORD_LEN)
    parser.add_argument("--out", type=Path, default=None, help="write JSON here instead of stdout")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify")
    p.add_argument("monoid", nargs="?")
    p.add_argument("--corpus", action="store_true", help="run the dichotomy suite on the built-in corpus")

    p = sub.add_parser("gate")
    p.add_argument("monoid")
    p.add_argument("genmap")

    p = sub.add_parser("laws")
    p.add_argument("monoid")
    p.add_argument("--samples", type=int, default=100)

    p = sub.add_parser("run")
    p.add_argument("device")
    p.add_argument("--word", required=True)
    p.add_argument("--max-output", type=int, default=None)

    p = sub.add_parser("enumerate")
    p.add_argument("automaton")
    p.add_argument("--max-output", type=int, default=None)

    p = sub.add_parser("convert-automaton")
    p.add_argument("automaton")
    p.add_argument("--check", action="store_true", help="compare slices before and after")

    p = sub.add_parser("convert-grammar")
    p.add_argument("grammar")
    p.add_argument("--check", action="store_true", help="compare slices before and after")

    p = sub.add_parser("enumerate-grammar")
    p.add_argument("grammar")

    p = sub.add_parser("evaluate-tree")
    p.add_argument("tree")
    p.add_argument("--cap", type=int, default=EXHAUSTIVE_EVAL_CAP, help="node cap for exhaustive evaluation")

    p = sub.add_parser("witness")
    p.add_argument("witness")

    p = sub.add_parser("separate")
    p.add_argument("witness")
    p.add_argument("--want", type=int, default=10)
    p.add_argument("--prefix-maxlen", type=int, default=3)
    p.add_argument("--suffix-maxlen", type=int, default=3)
    p.add_argument("--exhaustive", action="store_true", help="search all short prefixes and suffixes")

    p = sub.add_parser("falsify-ogden")
    p.add_argument("witness")
    p.add_argument("--word", required=True)
    p.add_argument("--marks", type=_int_list, default=None, help="marked positions, e.g. 0,1,2")
    p.add_argument("--m", type=int, default=None, help="candidate constant (default: number of marks)")
    p.add_argument("--pump", type=_int_list, default=DEFAULT_PUMP_SET)
    return parser


def _emit(payload: Dict[str, Any], cfg: RunConfig) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        cfg.out.write_text(text, encoding="utf-8")
        logger.info("Wrote %s.", cfg.out)


def _error_payload(exc: ValenceError) -> Dict[str, Any]:
    return {"error": str(exc), "kind": type(exc).__name__,
            "file": getattr(exc, "path", None), "line": getattr(exc, "line", None)}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.quiet:
        logger.setLevel(logging.WARNING)
    try:
        cfg = RunConfig(args.norm_cap, args.max_steps, args.maxlen, args.out, args.seed)
        payload, code = COMMANDS[args.command](args, cfg)
    except ValenceError as exc:
        logger.error("%s", exc)
        sys.stdout.write(json.dumps(_error_payload(exc), sort_keys=True, indent=2, ensure_ascii=False) + "\n")
        return EXIT_ERROR
    _emit(payload, cfg)
    return code


if __name__ == "__main__":
    sys.exit(main())
