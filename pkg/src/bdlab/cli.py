"""Command-line front end for generation, validation, action computation,
oracle verification, and resource reporting.

All randomness flows from one --seed flag; trial t uses the stream keyed
by seed XOR t, so reruns with the same configuration are byte-identical.
Exit codes: 0 success, 2 validation error, 3 parameter error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import causet as _causet
from . import circuits as _circuits
from . import counting as _counting
from . import sampling as _sampling
from .action import (
    ActionCoefficients,
    abundances,
    bd_action,
    load_coefficients,
)
from .errors import BdlabError, CycleError, IndexOutOfRange, InvalidParameter, \
    ReflexiveError, TransitivityError
from .simulators import oracle_sign, oracle_truth

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARAMETER = 3

_VALIDATION_ERRORS = (CycleError, ReflexiveError, TransitivityError, IndexOutOfRange)


class _InputInvalid(BdlabError):
    """Input file failed to parse or validate (exit code 2)."""


def _read(path, mode: str) -> "_causet.CausalSet":
    try:
        return _causet.read_causet(path, mode=mode)
    except BdlabError as exc:
        raise _InputInvalid(str(exc)) from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.exit(EXIT_PARAMETER, f"{self.prog}: error: {message}\n")


def _round10(value):
    """Round floats to 10 significant digits, recursively."""
    if isinstance(value, float):
        return float(f"{value:.10g}")
    if isinstance(value, dict):
        return {k: _round10(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round10(v) for v in value]
    return value


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _flatten(prefix: str, value, out: list):
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(value, (list, tuple)):
        for idx, v in enumerate(value):
            _flatten(f"{prefix}.{idx}", v, out)
    else:
        out.append((prefix, _fmt(value)))


def emit_report(report: dict, fmt: str) -> str:
    """Serialize with stable field order and 10-significant-digit floats."""
    if fmt == "json":
        return json.dumps(_round10(report), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if "abundances" in report:
            writer.writerow(["k", "N_k"])
            for k, nk in enumerate(report["abundances"]):
                writer.writerow([k, _fmt(nk)])
            rest = {k: v for k, v in report.items() if k != "abundances"}
        else:
            rest = report
        pairs: list = []
        _flatten("", rest, pairs)
        for key, value in pairs:
            writer.writerow([key, value])
        return buf.getvalue()
    if fmt == "text":
        pairs = []
        _flatten("", report, pairs)
        width = max((len(k) for k, _ in pairs), default=0)
        return "".join(f"{k.ljust(width)}  {v}\n" for k, v in pairs)
    raise InvalidParameter(f"unknown format {fmt!r}")


def _thread_pool_size() -> int:
    cap = os.environ.get("BDLAB_THREADS")
    if cap:
        try:
            return max(1, int(cap))
        except ValueError:
            raise InvalidParameter(f"BDLAB_THREADS must be an integer, got {cap!r}") from None
    return min(8, os.cpu_count() or 1)


def _run_trials(fn, trials: int):
    """Fan trials out over the worker pool; aggregation order is by index."""
    if trials == 1:
        return [fn(0)]
    with ThreadPoolExecutor(max_workers=_thread_pool_size()) as pool:
        return list(pool.map(fn, range(trials)))


def _load_input(args) -> _causet.CausalSet:
    sources = sum(x is not None for x in (args.input, args.gen))
    if sources != 1:
        raise InvalidParameter("exactly one input source: a file path or --gen")
    if args.input is not None:
        return _read(args.input, args.mode)
    if args.n is None:
        raise InvalidParameter("--gen requires --n")
    return _causet.generate(args.n, args.gen, seed=args.gen_seed, p=args.p,
                            width=args.layer_width)


def _coefficients(args) -> ActionCoefficients:
    if args.coeffs is not None:
        coeff = load_coefficients(args.coeffs)
        if args.length_ratio != 1.0:
            raise InvalidParameter("--length-ratio conflicts with the coefficient file")
        return coeff
    if args.dim != 4:
        raise InvalidParameter("only the 4D preset ships built in; pass --coeffs for other d")
    return ActionCoefficients.four_dim_preset(length_ratio=args.length_ratio)


# -- subcommands -------------------------------------------------------------------

def _cmd_gen(args) -> int:
    c = _causet.generate(args.n, args.model, seed=args.seed, p=args.p,
                         width=args.layer_width)
    text = _causet.format_causet(c, matrix_form=args.matrix_format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_validate(args) -> int:
    c = _read(args.input, args.mode)
    report = {"input": args.input, "mode": args.mode, "n": c.n,
              "related_pairs": c.related_pairs, "valid": True}
    sys.stdout.write(emit_report(report, args.format))
    return EXIT_OK


def _cmd_action(args) -> int:
    c = _load_input(args)
    coeff = _coefficients(args)
    if args.backend in ("naive", "matrix", "strassen"):
        ab = abundances(c, kmax=coeff.n_d - 1, backend=args.backend)
        report = {
            "backend": args.backend, "n": c.n, "related_pairs": ab.related_pairs,
            "d": coeff.d, "length_ratio": coeff.length_ratio,
            "abundances": list(ab.counts), "S": bd_action(ab, coeff),
        }
    elif args.backend == "sample":
        if coeff.d != 4:
            raise InvalidParameter("the sampling estimator is 4D only")
        n_pairs = c.related_pairs
        k_sample = args.K if args.K is not None else max(1, math.ceil(n_pairs / 4))
        def one(trial: int):
            res = _sampling.sample_pairs(c, k_sample, seed=args.seed ^ trial)
            return _sampling.estimate_sampled(res, length_ratio=coeff.length_ratio)
        estimates = _run_trials(one, args.trials)
        s_values = [e.S_hat for e in estimates]
        report = {
            "backend": "sample", "n": c.n, "N": n_pairs, "K": k_sample,
            "seed": args.seed, "trials": args.trials,
            "length_ratio": coeff.length_ratio,
            "estimates": [{"S_hat": e.S_hat, "se_full": e.se_full,
                           "se_subadditive": e.se_subadditive,
                           "se_simple_bound": e.se_simple_bound} for e in estimates],
            "S_hat_mean": float(np.mean(s_values)),
            "S_hat_std": float(np.std(s_values, ddof=1)) if args.trials > 1 else 0.0,
        }
    elif args.backend == "quantum":
        def one(trial: int):
            return _counting.estimate_bd_action(
                c, coeff, args.epsilon, args.delta, seed=args.seed ^ trial,
                oracle_mode=args.oracle_mode)
        runs = _run_trials(one, args.trials)
        per_k = []
        for k in range(coeff.n_d):
            entries = [r.per_k[k] for r in runs]
            per_k.append({
                "k": k, "N_true": entries[0].n_true,
                "N_hat": float(np.mean([e.n_hat for e in entries])),
                "queries": float(np.mean([e.queries for e in entries])),
                "zero_flag": any(e.zero_flag for e in entries),
            })
        report = {
            "n": c.n, "d": coeff.d, "epsilon": args.epsilon, "delta": args.delta,
            "seed": args.seed, "oracle_mode": args.oracle_mode, "per_k": per_k,
            "S_hat": float(np.mean([r.s_hat for r in runs])),
            "S_true": runs[0].s_true,
            "width_qubits": runs[0].width_qubits, "trials": args.trials,
            "confidence": runs[0].confidence,
        }
    else:
        raise InvalidParameter(f"unknown backend {args.backend!r}")
    sys.stdout.write(emit_report(report, args.format))
    return EXIT_OK


def _cmd_oracle_verify(args) -> int:
    if args.input is not None:
        c = _read(args.input, args.mode)
    else:
        if args.n is None:
            raise InvalidParameter("--n (or an input file) is required")
        c = _causet.generate(args.n, "random_order", seed=args.seed, p=args.p or 0.4)
    circ = _circuits.build_oracle(c.n, args.k)
    truth = oracle_truth(c, args.k)
    total = c.n * c.n
    correct = 0
    for i in range(1, c.n + 1):
        for j in range(1, c.n + 1):
            sign = oracle_sign(circ, c.row_string(i), c.col_string(j))
            correct += (sign == -1) == bool(truth[i - 1, j - 1])
    sys.stdout.write(f"{correct}/{total} basis pairs correct\n")
    return EXIT_OK if correct == total else EXIT_VALIDATION


def _cmd_resources(args) -> int:
    c = None
    if args.circuit == "oracle":
        if args.n is None:
            raise InvalidParameter("--n is required for the oracle circuit")
        circ = _circuits.build_oracle(args.n, args.k)
    elif args.circuit == "dataprep":
        if args.input is not None:
            c = _read(args.input, args.mode)
        else:
            if args.n is None:
                raise InvalidParameter("--n (or an input file) is required")
            c = _causet.generate(args.n, "random_order", seed=args.seed, p=args.p or 0.4)
        circ = _circuits.build_data_prep(c)
    else:
        raise InvalidParameter(f"unknown circuit {args.circuit!r}")
    rep = _circuits.resources(circ, model=args.model)
    n_report = args.n if args.circuit == "oracle" else c.n
    report = {
        "circuit": args.circuit, "n": n_report, "k": args.k, "model": args.model,
        "width": rep.width, "ancilla_count": rep.ancilla_count,
        "depth_layers": rep.depth_layers,
        "analytic_depth_bound": rep.analytic_depth_bound,
        "depth": rep.depth, "gate_counts": rep.gate_counts,
    }
    sys.stdout.write(emit_report(report, args.format))
    if args.dump:
        sys.stdout.write(circ.to_text())
    return EXIT_OK


# -- argument wiring ------------------------------------------------------------------

def _add_common_io(sub, with_input=True):
    if with_input:
        sub.add_argument("input", nargs="?", default=None,
                         help="causal-set file (omit when using --gen)")
    sub.add_argument("--mode", choices=("strict", "close"), default="strict",
                     help="validation mode applied when parsing input files")
    sub.add_argument("--format", choices=("json", "csv", "text"), default="json")


def build_parser() -> _Parser:
    parser = _Parser(prog="bdlab", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="write a causal-set file")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--model", choices=_causet.GENERATOR_MODELS, default="random_order")
    gen.add_argument("--p", type=float, default=0.3)
    gen.add_argument("--layer-width", type=int, default=None)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--matrix-format", action="store_true")
    gen.add_argument("-o", "--out", default=None)

    val = subs.add_parser("validate", help="check a causal-set file")
    val.add_argument("input")
    val.add_argument("--mode", choices=("strict", "close"), default="strict")
    val.add_argument("--format", choices=("json", "csv", "text"), default="json")

    act = subs.add_parser("action", help="compute or estimate the action")
    _add_common_io(act)
    act.add_argument("--gen", choices=_causet.GENERATOR_MODELS, default=None,
                     help="generate the input instead of reading a file")
    act.add_argument("--n", type=int, default=None)
    act.add_argument("--p", type=float, default=None)
    act.add_argument("--layer-width", type=int, default=None)
    act.add_argument("--gen-seed", type=int, default=0)
    act.add_argument("--backend", choices=("naive", "matrix", "strassen",
                                           "sample", "quantum"), default="matrix")
    act.add_argument("--dim", type=int, default=4)
    act.add_argument("--coeffs", default=None, help="coefficient config file")
    act.add_argument("--length-ratio", type=float, default=1.0)
    act.add_argument("--K", type=int, default=None, help="sample size (default N/4)")
    act.add_argument("--trials", type=int, default=1)
    act.add_argument("--seed", type=int, default=0)
    act.add_argument("--epsilon", type=float, default=0.5)
    act.add_argument("--delta", type=float, default=0.05)
    act.add_argument("--oracle-mode", choices=("predicate", "circuit"),
                     default="predicate")

    orc = subs.add_parser("oracle-verify", help="simulate one oracle against truth")
    orc.add_argument("--n", type=int, default=None)
    orc.add_argument("--k", type=int, default=0)
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--p", type=float, default=None)
    orc.add_argument("--input", default=None)
    orc.add_argument("--mode", choices=("strict", "close"), default="strict")

    res = subs.add_parser("resources", help="report circuit resources")
    res.add_argument("--circuit", choices=("oracle", "dataprep"), required=True)
    res.add_argument("--n", type=int, default=None)
    res.add_argument("--k", type=int, default=0)
    res.add_argument("--model", choices=("expanded", "analytic"), default="expanded")
    res.add_argument("--seed", type=int, default=0)
    res.add_argument("--p", type=float, default=None)
    res.add_argument("--input", default=None)
    res.add_argument("--mode", choices=("strict", "close"), default="strict")
    res.add_argument("--format", choices=("json", "csv", "text"), default="json")
    res.add_argument("--dump", action="store_true", help="also print the gate list")
    return parser


_HANDLERS = {
    "gen": _cmd_gen,
    "validate": _cmd_validate,
    "action": _cmd_action,
    "oracle-verify": _cmd_oracle_verify,
    "resources": _cmd_resources,
}


def dispatch(args) -> int:
    try:
        return _HANDLERS[args.command](args)
    except (_InputInvalid, *_VALIDATION_ERRORS) as exc:
        sys.stderr.write(f"bdlab: validation error: {exc}\n")
        return EXIT_VALIDATION
    except OSError as exc:
        sys.stderr.write(f"bdlab: input error: {exc}\n")
        return EXIT_VALIDATION
    except BdlabError as exc:
        sys.stderr.write(f"bdlab: parameter error: {exc}\n")
        return EXIT_PARAMETER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return dispatch(args)


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
