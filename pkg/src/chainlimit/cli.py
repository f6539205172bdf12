"""Command-line front end.

Exit status: 0 on success, 1 on a domain or numerical error, 2 on a usage
or parse error.  Every artifact starts with '#' lines recording the tool
version, subcommand, parameters and seed.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings
from typing import Sequence

import numpy as np

from . import __version__
from .chain import DEFAULT_TOL, ReversibleChain, check_reversibility, normalize_chain, stationary_distribution
from .density import array_distance_details, axiom_report, empirical_distance, sample_array
from .errors import ChainError, ParseError
from .family import DEFAULT_TIMES, boundedness_report, builtin_family, cutoff_detector, mixing_table, tail_profile
from .io import atomic_write, chain_to_json, metadata_lines, parse_chain_file, render_csv
from .quotient import find_twins, quotient_chain
from .reconstruction import CLAMP_TOL, LOG_FLOOR, reconstruct_chain, roundtrip_report, subsample_kernel
from .spectral import decompose

DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: usage error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _floats(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _positive_times(text: str) -> tuple[float, ...]:
    vals = _floats(text)
    if any(t < 0 for t in vals):
        raise argparse.ArgumentTypeError("times must be nonnegative")
    return vals


class Context:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        skip = {"func", "out", "command"}
        self.params = {k: v for k, v in sorted(vars(args).items()) if k not in skip and v is not None}
        self.seed = getattr(args, "seed", None)

    def meta(self) -> list[str]:
        params = {k: v for k, v in self.params.items() if k != "seed"}
        return metadata_lines(__version__, self.args.command, params, "none" if self.seed is None else self.seed)

    def emit(self, text: str) -> None:
        if self.args.out:
            atomic_write(self.args.out, text)
        else:
            sys.stdout.write(text)

    def csv(self, header, rows) -> None:
        self.emit(render_csv(header, rows, self.meta()))

    def chain_json(self, rate, extra: dict) -> None:
        doc = json.loads(chain_to_json(rate))
        doc["meta"] = {"tool": f"chainlimit {__version__}", "subcommand": self.args.command, "seed": self.seed, **_jsonable(self.params), **extra}
        self.emit(json.dumps(doc, indent=1) + "\n")


def _jsonable(d: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _load(path: str, tol: float = DEFAULT_TOL) -> ReversibleChain:
    return ReversibleChain(parse_chain_file(path, tol=tol), tol=tol)


# subcommands ---------------------------------------------------------------


def cmd_validate(ctx: Context) -> int:
    a = ctx.args
    rate = parse_chain_file(a.chain, tol=a.tol)
    rows = [("states", rate.n), ("irreducible", rate.irreducible)]
    if rate.irreducible:
        pi = stationary_distribution(rate)
        check = check_reversibility(rate, pi, a.tol)
        rows += [("reversible", check.reversible), ("max_balance_violation", check.max_violation)]
        rows += [(f"pi[{lab}]", float(p)) for lab, p in zip(rate.labels, pi)]
    ctx.csv(("field", "value"), rows)
    return 0


def cmd_spectrum(ctx: Context) -> int:
    chain = _load(ctx.args.chain)
    spec = decompose(chain)
    header = ("i", "eigenvalue", "log_eigenvalue", *chain.labels)
    rows = ((i, float(lam), float(lg), *map(float, v)) for i, (lam, lg, v) in enumerate(zip(spec.eigenvalues, spec.log_eigenvalues, spec.vectors)))
    ctx.csv(header, rows)
    if spec.floored:
        print(f"note: {spec.floored} eigenvalue(s) floored at 1e-14", file=sys.stderr)
    return 0


def cmd_mixing(ctx: Context) -> int:
    chain = _load(ctx.args.chain)
    ctx.csv(("t", "G"), ((t, chain.mixing(t)) for t in ctx.args.times))
    return 0


def cmd_normalize(ctx: Context) -> int:
    norm = normalize_chain(parse_chain_file(ctx.args.chain))
    ctx.chain_json(norm.rate, {"time_rescale": norm.time_rescale, "mixing_at_one": norm.mixing_at_one})
    if ctx.args.out:
        print(f"time_rescale={norm.time_rescale!r} G(1)={norm.mixing_at_one!r}")
    return 0


def cmd_kernel(ctx: Context) -> int:
    chain = _load(ctx.args.chain)
    labels = chain.labels

    def rows():
        for t in ctx.args.times:
            k = chain.kernel(t)
            for i in range(chain.n):
                for j in range(chain.n):
                    yield (t, labels[i], labels[j], float(k[i, j]))

    ctx.csv(("t", "from", "to", "p_hat"), rows())
    return 0


def cmd_axioms(ctx: Context) -> int:
    a = ctx.args
    chain = _load(a.chain)
    if a.normalize:
        chain = normalize_chain(chain).chain
    report = axiom_report(chain, a.times, a.tol, strict=False)
    ctx.csv(("functional", "value", "target", "status"), report.rows())
    if not report.passed:
        print(f"error: axiom functionals failed: {', '.join(report.failed)}", file=sys.stderr)
        return 1
    return 0


def cmd_sample(ctx: Context) -> int:
    a = ctx.args
    chain = _load(a.chain)
    s = sample_array(chain, a.k, a.times, a.seed, a.n)
    labels = chain.labels

    def rows():
        for r in range(s.replicates):
            for c, t in enumerate(s.times):
                for i in range(s.k):
                    for j in range(s.k):
                        yield (r, t, i, j, labels[s.states[r, i]], labels[s.states[r, j]], float(s.values[r, i, j, c]))

    ctx.csv(("replicate", "t", "i", "j", "state_i", "state_j", "value"), rows())
    return 0


def cmd_compare(ctx: Context) -> int:
    a = ctx.args
    ca, cb = _load(a.chain), _load(a.other)
    exact = array_distance_details(ca, cb, a.k, a.times, a.degree)
    rows = [("exact", exact.distance, "", str(exact.monomial) if exact.monomial else "")]
    if a.n:
        emp = empirical_distance(ca, cb, a.k, a.times, a.seed, a.n, a.degree)
        rows.append(("empirical", emp.estimate, emp.stderr, str(emp.monomial)))
    ctx.csv(("method", "distance", "stderr", "worst_monomial"), rows)
    return 0


def cmd_reconstruct(ctx: Context) -> int:
    a = ctx.args
    chain = _load(a.chain)
    rec = reconstruct_chain(subsample_kernel(chain, a.n, a.seed), a.floor, a.clamp)
    extra = {"gamma": rec.gamma, "floored_eigenvalues": rec.floored, "clamped_rates": rec.clamped}
    ctx.chain_json(rec.rate, extra)
    return 0


def cmd_roundtrip(ctx: Context) -> int:
    a = ctx.args
    chain = _load(a.chain)
    if a.normalize:
        chain = normalize_chain(chain).chain
    rows = []
    for n in a.n:
        for seed in range(a.seed, a.seed + a.seeds):
            rep = roundtrip_report(chain, n, seed, a.k, a.times, a.degree, a.floor, a.clamp)
            rows.append((n, seed, rep.distance, rep.gamma_ratio, rep.floored))
    ctx.csv(("n", "seed", "distance", "gamma_ratio", "floored_eigenvalues"), rows)
    return 0


def cmd_twins(ctx: Context) -> int:
    chain = _load(ctx.args.chain)
    part = find_twins(chain, ctx.args.tol)
    rows = [(b, x, chain.labels[x], part.max_intra_distance) for b, block in enumerate(part.blocks) for x in block]
    ctx.csv(("block", "state", "label", "max_intra_distance"), rows)
    return 0


def cmd_quotient(ctx: Context) -> int:
    a = ctx.args
    chain = _load(a.chain)
    part = find_twins(chain, a.tol)
    q = quotient_chain(chain, part, a.floor)
    ctx.chain_json(q.rate, {"blocks": [list(b) for b in part.blocks], "max_intra_distance": part.max_intra_distance})
    return 0


def cmd_family(ctx: Context) -> int:
    a = ctx.args
    fam = builtin_family(a.name)
    if a.normalize:
        fam = fam.normalized()
    n_list = a.n or fam.indices
    if a.report == "mixing":
        ctx.csv(("n", "t", "G"), mixing_table(fam, n_list, a.times).rows())
    elif a.report == "tail":
        rows = []
        for t in a.times:
            rows += tail_profile(fam, n_list, a.k, t)
        ctx.csv(("n", "k", "t", "tail"), rows)
    elif a.report == "bounded":
        rep = boundedness_report(fam, n_list, a.times, a.growth_threshold)
        ctx.emit("\n".join(ctx.meta()) + "\n" + rep.text() + "\n")
    else:
        ev = cutoff_detector(fam, n_list, a.t_lo, a.t_hi, a.growth_threshold, a.mix_threshold)
        lines = ctx.meta() + ["# finite-n evidence only", f"cutoff: {str(ev.cutoff).lower()}"]
        body = render_csv(("n", f"G(t={a.t_lo!r})", f"G(t={a.t_hi!r})-1"), ev.rows())
        ctx.emit("\n".join(lines) + "\n" + body)
    return 0


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chainlimit", description="Finite reversible Markov chains: spectra, density arrays, reconstruction, twins, families.")
    p.add_argument("--version", action="version", version=f"chainlimit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, func, help_, chain=True):
        sp = sub.add_parser(name, help=help_)
        if chain:
            sp.add_argument("chain", help="chain file (JSON with labels and rates)")
        sp.add_argument("--out", help="output path (default: stdout)")
        sp.set_defaults(func=func)
        return sp

    def times(sp, default):
        sp.add_argument("--times", type=_positive_times, default=default, help="comma list of times")

    def seed(sp):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)

    sp = cmd("validate", cmd_validate, "validate a chain file and report reversibility")
    sp.add_argument("--tol", type=float, default=DEFAULT_TOL)

    cmd("spectrum", cmd_spectrum, "eigenvalues and eigenvectors of the time-1 kernel")

    sp = cmd("mixing", cmd_mixing, "G(t) on a time grid")
    times(sp, tuple(DEFAULT_TIMES))

    cmd("normalize", cmd_normalize, "rescale time so that G(1) = 2")

    sp = cmd("kernel", cmd_kernel, "scaled kernel p_t in long format")
    times(sp, (1.0,))

    sp = cmd("axioms", cmd_axioms, "exact axiom functionals of the density array")
    times(sp, (0.5, 1.0))
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--normalize", action="store_true", help="normalize the chain first")

    sp = cmd("sample", cmd_sample, "draw density arrays")
    times(sp, (1.0,))
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--n", type=int, default=1, help="number of replicate arrays")
    seed(sp)

    sp = cmd("compare", cmd_compare, "moment distance between two chains' density arrays")
    sp.add_argument("other", help="second chain file")
    times(sp, (0.5, 1.0, 2.0))
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--n", type=int, default=0, help="Monte Carlo replicates (0: exact only)")
    seed(sp)

    sp = cmd("reconstruct", cmd_reconstruct, "sample n states and rebuild a chain from the time-1 kernel")
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--floor", type=float, default=LOG_FLOOR)
    sp.add_argument("--clamp", type=float, default=CLAMP_TOL, help="largest negative rate repaired to 0")
    seed(sp)

    sp = cmd("roundtrip", cmd_roundtrip, "reconstruct and measure the distance back to the source")
    sp.add_argument("--n", type=_ints, default=(50, 100, 200, 400))
    sp.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds starting at --seed")
    times(sp, (0.5, 1.0, 2.0))
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--degree", type=int, default=2)
    sp.add_argument("--floor", type=float, default=LOG_FLOOR)
    sp.add_argument("--clamp", type=float, default=CLAMP_TOL, help="largest negative rate repaired to 0")
    sp.add_argument("--normalize", action="store_true")
    seed(sp)

    sp = cmd("twins", cmd_twins, "group states whose twin distance is within tol")
    sp.add_argument("--tol", type=float, default=1e-8)

    sp = cmd("quotient", cmd_quotient, "merge twins and write the quotient chain")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--floor", type=float, default=LOG_FLOOR)

    sp = cmd("family", cmd_family, "mixing, boundedness, cutoff and tail reports for a built-in family", chain=False)
    sp.add_argument("name", help="two_point, four_point, two_blocks or hypercube")
    sp.add_argument("--report", choices=("mixing", "bounded", "cutoff", "tail"), default="mixing")
    sp.add_argument("--n", type=_ints, help="member indices (default: the family's grid)")
    times(sp, tuple(DEFAULT_TIMES))
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--normalize", action="store_true")
    sp.add_argument("--t-lo", type=float, default=0.5)
    sp.add_argument("--t-hi", type=float, default=2.0)
    sp.add_argument("--growth-threshold", type=float, default=1.0)
    sp.add_argument("--mix-threshold", type=float, default=0.1)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    ctx = Context(args)
    warnings.simplefilter("default")
    try:
        with np.errstate(all="ignore"):
            return args.func(ctx)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (ChainError, ValueError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
