"""Command-line front end: fit a model to a FASTA sequence and report word thresholds."""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .bounds import MODES, ErrorProfile
from .markov import ChainNotMixingError, MarkovModel, dump_model, estimate_model, load_model, word_probability
from .oracle import exact_distribution, poisson_pointwise_gap
from .seqio import Alphabet, FastaError, Sequence, Word, count_overlapping, read_fasta
from .threshold import BOUNDARIES, LAMBDA_CONVENTIONS, build_profile, effective_windows, report_from_profile
from .wordstats import ZeroProbabilityError, derived_scalars, word_structure

COLUMNS = ("word", "n", "p_A", "n_A", "r_A", "in_Bn", "P_A", "lambda0", "e_psi", "epsilon", "zeta",
           "method", "mode", "significance", "direction", "neighborhood", "tv_bound", "threshold",
           "imp_reason", "observed", "verdict")
EXIT_OK, EXIT_INPUT, EXIT_IMP = 0, 1, 2
SUBCOMMANDS = ("run", "fit", "oracle")


class InputError(Exception):
    """Bad input; reported as a one-line diagnostic with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


@dataclass
class RunConfig:
    sequence: str
    order: int = 1
    pseudocount: float = 1.0
    words: list[str] = field(default_factory=list)
    significance: list[float] = field(default_factory=lambda: [0.01])
    method: str = "psi"
    mode: str = "tight"
    direction: str = "over"
    lambda_convention: str = "windows"
    neighborhood: int | None = None
    output: str = "tsv"
    lambda_cap: float | None = None
    boundary: str = "at-least"
    record: str | None = None
    alphabet: str = "acgt"
    max_order: int = 3

    def __post_init__(self):
        if self.order < 0:
            raise InputError("--order must be nonnegative")
        if self.order > self.max_order:
            raise InputError(f"--order {self.order} exceeds --max-order {self.max_order}")
        if self.pseudocount < 0:
            raise InputError("--pseudocount must be nonnegative")
        for s in self.significance:
            if not 0 < s < 1:
                raise InputError(f"--significance must lie in (0, 1), got {s:g}")

    @property
    def methods(self) -> tuple[str, ...]:
        return ("psi", "chen-stein") if self.method == "both" else (self.method,)

    @property
    def directions(self) -> tuple[str, ...]:
        return ("over", "under") if self.direction == "both" else (self.direction,)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rarewords", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="evaluate words against a sequence")
    _add_input(run)
    run.add_argument("--word", action="append", default=[], help="word to evaluate (repeatable)")
    run.add_argument("--words-file", help="file with one word per line")
    run.add_argument("--significance", type=float, action="append", help="level s in (0, 1) (repeatable)")
    run.add_argument("--method", choices=("psi", "chen-stein", "both"), default="psi")
    run.add_argument("--mode", choices=MODES, default="tight")
    run.add_argument("--direction", choices=("over", "under", "both"), default="over")
    run.add_argument("--lambda-convention", choices=LAMBDA_CONVENTIONS, default="windows",
                     help="'windows': t = L - n + 1; 'length': t = L")
    run.add_argument("--neighborhood", type=int, help="Chen-Stein neighbourhood radius (default 3n)")
    run.add_argument("--output", choices=("tsv", "json"), default="tsv")
    run.add_argument("--lambda-cap", type=float, help="report IMP when lambda0 exceeds this value")
    run.add_argument("--boundary", choices=BOUNDARIES, default="at-least",
                     help="'at-least': significant when observed >= u; 'strict': observed > u")

    fit = sub.add_parser("fit", help="fit and print a Markov model")
    _add_input(fit)

    orc = sub.add_parser("oracle", help="exact count distribution for a small instance")
    src = orc.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", help="model file written by 'fit'")
    src.add_argument("--sequence", help="FASTA file to fit a model to")
    orc.add_argument("--order", type=int, default=1)
    orc.add_argument("--pseudocount", type=float, default=1.0)
    orc.add_argument("--record")
    orc.add_argument("--alphabet", default="acgt")
    orc.add_argument("--word", required=True)
    orc.add_argument("--length", type=int, required=True, help="sequence length")
    return parser


def _add_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sequence", required=True, help="FASTA file (.gz accepted)")
    p.add_argument("--record", help="record id to analyse (default: the longest record)")
    p.add_argument("--alphabet", default="acgt")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--pseudocount", type=float, default=1.0)
    p.add_argument("--max-order", type=int, default=3, help="largest accepted --order")


def load_sequence(path: str, alphabet: Alphabet, record: str | None = None) -> Sequence:
    try:
        records = read_fasta(path, alphabet)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except FastaError as exc:
        raise InputError(f"{path}: {exc}") from None
    if not records:
        raise InputError(f"{path}: no FASTA records")
    if record is not None:
        for rec in records:
            if rec.id == record:
                return rec
        raise InputError(f"{path}: no record with id {record!r}")
    return max(records, key=lambda r: r.length)


def read_words(inline: list[str], path: str | None) -> list[str]:
    words = list(inline)
    if path is not None:
        try:
            with open(path) as fh:
                words += [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    return words


def fit_model(seq: Sequence, order: int, pseudocount: float) -> MarkovModel:
    try:
        return estimate_model(seq, order, pseudocount)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def word_rows(model: MarkovModel, seq: Sequence, text: str, cfg: RunConfig, params) -> list[dict]:
    """All report rows for one word, in method, significance, direction order."""
    try:
        word = Word.from_string(text, model.alphabet)
    except ValueError as exc:
        raise InputError(f"word {text!r}: {exc}") from None
    st = word_structure(word)
    n = word.length
    t = effective_windows(seq.length, n, cfg.lambda_convention)
    if cfg.neighborhood is not None and cfg.neighborhood < n and "chen-stein" in cfg.methods:
        raise InputError(f"--neighborhood {cfg.neighborhood} is smaller than the length of {text!r}")
    base = {"word": word.text, "n": n, "p_A": st.period, "n_A": st.smallest_secondary,
            "r_A": st.n_secondary, "in_Bn": st.early_overlap, "P_A": word_probability(model, word),
            "lambda0": t * word_probability(model, word), "e_psi": None, "epsilon": None, "zeta": None}
    try:
        sc = derived_scalars(model, word, params, t, st)
        base.update(e_psi=sc.e_psi, epsilon=sc.epsilon, zeta=sc.zeta)
    except ZeroProbabilityError:
        pass
    observed = count_overlapping(seq, word)
    rows = []
    for method in cfg.methods:
        profile: ErrorProfile = build_profile(model, word, params, t, method, cfg.mode, cfg.neighborhood)
        cs = profile.chen_stein
        for s in cfg.significance:
            for direction in cfg.directions:
                rep = report_from_profile(profile, observed, s, direction, cfg.lambda_cap, cfg.boundary)
                rows.append({
                    **base,
                    "method": method,
                    "mode": cfg.mode if method == "psi" else None,
                    "significance": s,
                    "direction": direction,
                    "neighborhood": cs.neighborhood if cs else None,
                    "tv_bound": cs.tv_bound if cs else None,
                    "threshold": rep.threshold,
                    "imp_reason": rep.imp_reason.value if rep.imp_reason else None,
                    "observed": observed,
                    "verdict": rep.verdict,
                })
    return rows


def execute(cfg: RunConfig) -> list[dict]:
    alphabet = _alphabet(cfg.alphabet)
    seq = load_sequence(cfg.sequence, alphabet, cfg.record)
    model = fit_model(seq, cfg.order, cfg.pseudocount)
    rows: list[dict] = []
    if not cfg.words:
        return rows
    try:
        params = model.mixing()
    except ChainNotMixingError as exc:
        raise InputError(f"fitted model: {exc}") from None
    for text in cfg.words:
        rows.extend(word_rows(model, seq, text, cfg, params))
    return rows


def _alphabet(symbols: str) -> Alphabet:
    try:
        return Alphabet(symbols)
    except ValueError as exc:
        raise InputError(f"--alphabet: {exc}") from None


def _tsv_value(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _json_value(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}" if math.isfinite(v) else "null"
    return json.dumps(v)


def format_tsv(rows: list[dict]) -> str:
    lines = ["\t".join(COLUMNS)]
    lines += ["\t".join(_tsv_value(r[c]) for c in COLUMNS) for r in rows]
    return "\n".join(lines) + "\n"


def format_json(rows: list[dict]) -> str:
    if not rows:
        return "[]\n"
    objs = ["  {" + ", ".join(f"{json.dumps(c)}: {_json_value(r[c])}" for c in COLUMNS) + "}" for r in rows]
    return "[\n" + ",\n".join(objs) + "\n]\n"


def _config(args) -> RunConfig:
    return RunConfig(
        sequence=args.sequence, order=args.order, pseudocount=args.pseudocount,
        words=read_words(args.word, args.words_file),
        significance=args.significance or [0.01], method=args.method, mode=args.mode,
        direction=args.direction, lambda_convention=args.lambda_convention,
        neighborhood=args.neighborhood, output=args.output, lambda_cap=args.lambda_cap,
        boundary=args.boundary, record=args.record, alphabet=args.alphabet, max_order=args.max_order)


def _cmd_run(args, out) -> int:
    cfg = _config(args)
    rows = execute(cfg)
    out.write(format_tsv(rows) if cfg.output == "tsv" else format_json(rows))
    return EXIT_IMP if any(r["verdict"] == "IMP" for r in rows) else EXIT_OK


def _cmd_fit(args, out) -> int:
    if args.order > args.max_order:
        raise InputError(f"--order {args.order} exceeds --max-order {args.max_order}")
    seq = load_sequence(args.sequence, _alphabet(args.alphabet), args.record)
    out.write(dump_model(fit_model(seq, args.order, args.pseudocount)))
    return EXIT_OK


def _cmd_oracle(args, out) -> int:
    if args.model:
        try:
            model = load_model(args.model)
        except (OSError, ValueError) as exc:
            raise InputError(f"--model: {exc}") from None
    else:
        seq = load_sequence(args.sequence, _alphabet(args.alphabet), args.record)
        model = fit_model(seq, args.order, args.pseudocount)
    try:
        word = Word.from_string(args.word, model.alphabet)
        dist = exact_distribution(model, word, args.length)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    lam = dist.windows * word_probability(model, word)
    gaps = poisson_pointwise_gap(dist, lam, dist.probs.size - 1) if lam > 0 else np.zeros(dist.probs.size)
    out.write("k\texact\tpoisson_gap\n")
    for k, (p, g) in enumerate(zip(dist.probs, gaps)):
        out.write(f"{k}\t{p:.17g}\t{g:.17g}\n")
    return EXIT_OK


def main(argv: list[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    if argv and argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help"):
        argv.insert(0, "run")
    try:
        args = build_parser().parse_args(argv)
        handler = {"run": _cmd_run, "fit": _cmd_fit, "oracle": _cmd_oracle}[args.command]
        return handler(args, out)
    except InputError as exc:
        print(f"rarewords: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
