"""Batch runner: one subcommand per computation, key=value parameters, CSV out."""

from __future__ import annotations

import argparse
import io
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from lowlying import __version__
from lowlying.errors import ContractViolation, ResourceLimitError

OUT_DIR_ENV = "LOWLYING_OUT_DIR"

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_CONTRACT, EXIT_RESOURCE = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    """A subcommand and its parameters as strings; comments are not kept."""

    subcommand: str | None = None
    params: dict[str, str] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [] if self.subcommand is None else [f"subcommand={self.subcommand}"]
        lines += [f"{k}={v}" for k, v in sorted(self.params.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cfg = cls()
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"config line {n}: expected key=value, got {raw!r}")
            k, v = (s.strip() for s in line.split("=", 1))
            if k == "subcommand":
                cfg.subcommand = v
            else:
                cfg.params[k] = v
        return cfg

    def merged(self, other: "RunConfig") -> "RunConfig":
        if self.subcommand and other.subcommand and self.subcommand != other.subcommand:
            raise UsageError(f"config names subcommand {self.subcommand}, "
                             f"command line names {other.subcommand}")
        return RunConfig(other.subcommand or self.subcommand, {**self.params, **other.params})


def parse_pairs(items: Sequence[str]) -> dict[str, str]:
    out = {}
    for it in items:
        if "=" not in it:
            raise UsageError(f"expected key=value, got {it!r}")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# value parsers
def _int(s: str) -> int:
    return int(float(s)) if "e" in s.lower() else int(s)


def _float(s: str) -> float:
    return float(s)


def _ints(s: str) -> tuple[int, ...]:
    return tuple(_int(x) for x in s.split(",") if x.strip())


def _opt_int(s: str) -> int | None:
    return None if s in ("", "none") else _int(s)


def _choice(*options):
    def parse(s):
        if s not in options:
            raise UsageError(f"expected one of {', '.join(options)}, got {s!r}")
        return s
    return parse


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], object]
    default: str | None
    doc: str


@dataclass(frozen=True)
class Output:
    columns: tuple[str, ...]
    rows: list[dict]
    summary: dict = field(default_factory=dict)
    ok: bool = True


@dataclass(frozen=True)
class Subcommand:
    name: str
    help: str
    keys: dict[str, Key]
    columns: dict[str, str]
    run: Callable[[dict, int], Output]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def render_csv(sub: Subcommand, echo: dict[str, str], out: Output) -> str:
    buf = io.StringIO()
    pairs = " ".join(f"{k}={v}" for k, v in sorted(echo.items()))
    buf.write(f"# lowlying {__version__} subcommand={sub.name} {pairs}".rstrip() + "\n")
    buf.write(",".join(out.columns) + "\n")
    for row in out.rows:
        buf.write(",".join(_fmt(row.get(c)) for c in out.columns) + "\n")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# family descriptors shared by several subcommands
# ---------------------------------------------------------------------------

FAMILY_KEYS = {
    "family": Key(_choice("tconst", "tlin", "tnx", "tn", "wash", "c0c1", "weierstrass", "custom"),
                  "tlin", "surface shape"),
    "params": Key(_ints, "1,1,1,0", "shape parameters, comma separated"),
    "a3": Key(_ints, "", "custom: coefficients of a3(T), constant first"),
    "a2": Key(_ints, "", "custom: a2(T)"),
    "a1": Key(_ints, "", "custom: a1(T)"),
    "a0": Key(_ints, "", "custom: a0(T)"),
}


def build_surface(v: dict):
    from lowlying.elliptic import EllipticSurface
    from lowlying.numth import IntPolynomial
    fam, prm = v["family"], v["params"]
    if fam == "custom":
        polys = [IntPolynomial(v[k]) for k in ("a3", "a2", "a1", "a0")]
        return EllipticSurface(*polys)
    if fam == "weierstrass":
        return EllipticSurface.weierstrass(v["a1"], v["a0"])
    ctor = {"tconst": EllipticSurface.tconst, "tlin": EllipticSurface.tlin,
            "tnx": EllipticSurface.tnx, "tn": EllipticSurface.tn,
            "wash": EllipticSurface.wash, "c0c1": EllipticSurface.c0c1_shape}[fam]
    try:
        return ctor(*prm)
    except TypeError:
        raise ContractViolation(f"wrong number of parameters for {fam}: {prm}") from None


PRIME_KEYS = {
    "p_lo": Key(_int, "5", "first prime bound (value or rank)"),
    "p_hi": Key(_int, "10000", "last prime bound (value or rank)"),
    "by": Key(_choice("value", "rank"), "value", "interpret p_lo/p_hi as values or ranks"),
}


def _primes(v: dict):
    from lowlying.satake import prime_range
    return prime_range(v["p_lo"], v["p_hi"], v["by"])


def _backing_keys(prefix: str = "") -> dict[str, Key]:
    keys = {
        "backing": Key(_choice("quadratic", "dirichlet", "elliptic"), "quadratic",
                       "member source"),
        "d_lo": Key(_int, "11", "quadratic: smallest odd square-free d"),
        "d_hi": Key(_int, "49", "quadratic: largest d"),
        "m": Key(_int, "101", "dirichlet: odd square-free modulus"),
        "t_lo": Key(_opt_int, "none", "elliptic: first t (none = every t mod p)"),
        "t_hi": Key(_opt_int, "none", "elliptic: last t"),
        **{k: FAMILY_KEYS[k] for k in FAMILY_KEYS},
    }
    return {prefix + k: key for k, key in keys.items()}


def build_family(v: dict, prefix: str = ""):
    from lowlying.numth import FactoredModulus
    from lowlying.satake import (DirichletBacking, EllipticBacking, QuadraticBacking,
                                 SatakeFamilySpec)
    g = lambda k: v[prefix + k]
    kind = g("backing")
    if kind == "quadratic":
        return SatakeFamilySpec(QuadraticBacking.squarefree_range(g("d_lo"), g("d_hi")))
    if kind == "dirichlet":
        return SatakeFamilySpec(DirichletBacking(FactoredModulus.of(g("m"))))
    surf = build_surface({k: g(k) for k in FAMILY_KEYS})
    ts = None
    if g("t_lo") is not None:
        hi = g("t_hi") if g("t_hi") is not None else g("t_lo")
        ts = tuple(range(g("t_lo"), hi + 1))
    return SatakeFamilySpec(EllipticBacking(surf, ts))


# ---------------------------------------------------------------------------
# subcommand bodies
# ---------------------------------------------------------------------------

def _density(v, threads):
    from lowlying.density import CSV_COLUMNS, one_level_prime_side
    from lowlying.numth import FactoredModulus
    from lowlying.testfn import fejer_pair
    pair = fejer_pair(v["sigma"])
    rows = [one_level_prime_side(FactoredModulus.of(m), pair).csv_row() for m in v["m"]]
    return Output(CSV_COLUMNS, rows)


def _sqfree(v, threads):
    from lowlying.density import CSV_COLUMNS, squarefree_family_density
    from lowlying.testfn import fejer_pair
    rep = squarefree_family_density(v["N"], fejer_pair(v["sigma"]), v["normalization"],
                                    override_guard=v["_override"])
    rows = [rep.csv_row()] + [sub.csv_row() for sub in rep.by_r.values()]
    return Output(CSV_COLUMNS, rows, {"conductor_factor": rep.conductor_factor,
                                      "uncertainty": rep.uncertainty})


def _bias(v, threads):
    from lowlying.elliptic import BIAS_COLUMNS, MOMENT_COLUMNS, bias_statistics
    surf = build_surface(v)
    rep = bias_statistics(surf, _primes(v), threads)
    if v["emit"] == "moments":
        return Output(MOMENT_COLUMNS, [r.csv_row() for r in rep.series.records],
                      {"stat32": rep.stat32, "stat1": rep.stat1})
    return Output(BIAS_COLUMNS, [rep.csv_row()])


def _table1(v, threads):
    from lowlying.elliptic import TABLE1_ROWS, table1_averages
    rows = TABLE1_ROWS if v["rows"] == "all" else [TABLE1_ROWS[i - 1] for i in _ints(v["rows"])]
    res = table1_averages(rows, (v["rank_lo"], v["rank_hi"]), threads)
    out = []
    for r in res:
        a, c, d, e, g = r.params
        out.append({"a": a, "c": c, "d": d, "e": e, "g": g, "mean_c1": r.mean_c1,
                    "mean_c0": r.mean_c0, "printed_c1": r.printed_c1,
                    "printed_c0": r.printed_c0, "primes": r.count})
    return Output(("a", "c", "d", "e", "g", "mean_c1", "mean_c0", "printed_c1",
                   "printed_c0", "primes"), out)


def _rank_bound(v, threads):
    from lowlying.satake import prime_sum_constants, rank_upper_bound
    consts = prime_sum_constants(v["X"])
    logR = math.log(v["R"])
    b = rank_upper_bound(v["r"], v["sigma"], logR, v["m_E"], consts)
    return Output(("r", "sigma", "R", "m_E", "C1", "C2", "bound"),
                  [{"r": v["r"], "sigma": v["sigma"], "R": v["R"], "m_E": v["m_E"],
                    "C1": consts[0], "C2": consts[1], "bound": b}])


def _symmetry(v, threads):
    from lowlying.satake import symmetry_constant
    est = symmetry_constant(build_family(v), _primes(v))
    run = est.running()
    rows = [{"p": p, "avg_lambda_p2": a, "running_c_hat": c, "skipped": s}
            for p, a, c, s in zip(est.primes, est.per_prime, run, est.skipped)]
    return Output(("p", "avg_lambda_p2", "running_c_hat", "skipped"), rows,
                  {"c_hat": est.c_hat, "group": est.classification.group.value,
                   "margin": est.classification.margin})


def _convolve(v, threads):
    from lowlying.satake import convolve, symmetry_constant
    F, G = build_family(v, "left."), build_family(v, "right.")
    ps = _primes(v)
    ef, eg = symmetry_constant(F, ps), symmetry_constant(G, ps)
    ec = symmetry_constant(convolve(F, G), ps)
    rows = [{"family": n, "c_hat": e.c_hat, "group": e.classification.group.value,
             "primes_used": len(e.primes)}
            for n, e in (("left", ef), ("right", eg), ("convolution", ec))]
    rows.append({"family": "product", "c_hat": ef.c_hat * eg.c_hat, "group": "",
                 "primes_used": ""})
    return Output(("family", "c_hat", "group", "primes_used"), rows)


def _dirichlet_moment(v, threads):
    from lowlying.dirichlet import dirichlet_second_moment
    res = dirichlet_second_moment(v["q"], v["X"], v["torsion"])
    return Output(("q", "X", "torsion", "M2", "prime_count", "ratio"),
                  [{"q": res.q, "X": v["X"], "torsion": res.torsion, "M2": res.total,
                    "prime_count": res.prime_count, "ratio": res.ratio}])


def _constants(v, threads):
    from lowlying.satake import prime_sum_constants
    c1, c2 = prime_sum_constants(v["X"])
    return Output(("X", "C1", "C2"), [{"X": v["X"], "C1": c1, "C2": c2}])


def _oracle_check(v, threads):
    from lowlying.dirichlet import (PrimitiveFamily, brute_force_family_sum,
                                    brute_force_primitive_sum, family_sum_chi, gauss_sum,
                                    primitive_sum_divisor_identity)
    from lowlying.numth import FactoredModulus, primes_upto
    fm = FactoredModulus.of(v["m"])
    ps = [int(p) for p in primes_upto(v["p_max"])]
    checks = {"family_sum_nu1": [0, 0], "family_sum_nu2": [0, 0],
              "divisor_identity": [0, 0], "gauss_modulus": [0, 0]}
    for p in ps:
        for nu in (1, 2):
            c = checks[f"family_sum_nu{nu}"]
            c[0] += 1
            c[1] += family_sum_chi(fm, p, nu) != brute_force_family_sum(fm, p, nu)
        if fm.m % p:
            c = checks["divisor_identity"]
            c[0] += 1
            c[1] += primitive_sum_divisor_identity(fm.m, p) != brute_force_primitive_sum(fm, p)
    for chi in PrimitiveFamily(fm):
        c = checks["gauss_modulus"]
        c[0] += 1
        c[1] += abs(abs(gauss_sum(chi)) / math.sqrt(fm.m) - 1) > 1e-10
    rows = [{"check": k, "cases": n, "failures": f} for k, (n, f) in checks.items()]
    return Output(("check", "cases", "failures"), rows, ok=all(f == 0 for _, f in checks.values()))


def _subcommands() -> dict[str, Subcommand]:
    density_cols = {
        "m": "modulus, or [N,2N] for a family aggregate",
        "r": "number of prime factors (blank for the aggregate row)",
        "sigma": "support of phi_hat",
        "s1": "first prime sum",
        "s2": "second prime sum",
        "one_level": "main_term - s1 - s2",
        "family_size": "number of primitive characters",
        "normalization": "conductor (log(m/pi)) or fixed (log(N/pi))",
    }
    subs = [
        Subcommand("density", "prime side of the 1-level density for prime or square-free moduli",
                   {"m": Key(_ints, "101", "moduli, comma separated"),
                    "sigma": Key(_float, "1", "Fejer support")},
                   density_cols, _density),
        Subcommand("sqfree-density", "square-free family over [N, 2N]",
                   {"N": Key(_int, "100", "lower end of the modulus range"),
                    "sigma": Key(_float, "1", "Fejer support"),
                    "normalization": Key(_choice("conductor", "fixed"), "conductor",
                                         "per-modulus or fixed scale")},
                   density_cols, _sqfree),
        Subcommand("bias", "second-moment bias statistics for an elliptic surface",
                   {**FAMILY_KEYS, **PRIME_KEYS,
                    "emit": Key(_choice("bias", "moments"), "bias",
                                "bias: one summary row; moments: per-prime rows")},
                   {"p_lo_rank": "rank of the first prime", "p_hi_rank": "rank of the last prime",
                    "stat32": "mean of (M2 - p^2)/p^(3/2)", "stat1": "mean of (M2 - p^2)/p",
                    "sign": "sign of stat1",
                    "p (moments)": "prime", "M1 (moments)": "sum_t a_t(p)",
                    "M2 (moments)": "sum_t a_t(p)^2",
                    "A1_num, A1_den (moments)": "M1/p as a reduced fraction",
                    "A2_num, A2_den (moments)": "M2/p as a reduced fraction",
                    "singular_count (moments)": "number of singular fibres mod p"},
                   _bias),
        Subcommand("table1", "mean c1(p)/sqrt(p) and c0(p) for y^2 = ax^3+cx^2+(dT+e)x+g",
                   {"rank_lo": Key(_int, "6001", "first prime rank"),
                    "rank_hi": Key(_int, "7000", "last prime rank"),
                    "rows": Key(str, "all", "all, or 1-based row numbers")},
                   {"a,c,d,e,g": "family coefficients", "mean_c1": "mean of c1(p)/sqrt(p)",
                    "mean_c0": "mean of c0(p)", "printed_c1": "published value",
                    "printed_c0": "published value", "primes": "primes averaged"},
                   _table1),
        Subcommand("rank-bound", "average-rank upper bound with a second-moment bias",
                   {"r": Key(_int, "0", "family rank"), "sigma": Key(_float, "1", "support"),
                    "R": Key(_float, "1e12", "conductor scale"),
                    "m_E": Key(_float, "1", "bias magnitude"),
                    "X": Key(_float, "1e7", "prime cutoff for the constants")},
                   {"r": "family rank", "sigma": "support", "R": "conductor scale",
                    "m_E": "bias magnitude", "C1": "2 sum log p/p^2", "C2": "4 sum (log p)^2/p^2",
                    "bound": "upper bound on the average rank"},
                   _rank_bound),
        Subcommand("symmetry", "symmetry constant c_hat of a family",
                   {**_backing_keys(), **PRIME_KEYS},
                   {"p": "prime", "avg_lambda_p2": "mean of lambda(p^2) over unramified members",
                    "running_c_hat": "mean of avg_lambda_p2 so far",
                    "skipped": "ramified members skipped at p"},
                   _symmetry),
        Subcommand("convolve", "symmetry constants of two families and their convolution",
                   {**_backing_keys("left."), **_backing_keys("right."), **PRIME_KEYS},
                   {"family": "left, right, convolution, or product of the first two",
                    "c_hat": "symmetry constant", "group": "nearest classical group",
                    "primes_used": "primes with at least one unramified member"},
                   _convolve),
        Subcommand("dirichlet-moment", "second moment of nontrivial characters mod a prime q",
                   {"q": Key(_int, "5", "prime modulus"), "X": Key(_float, "1e6", "prime bound (p < X)"),
                    "torsion": Key(_opt_int, "none", "restrict to characters of this prime order")},
                   {"q": "modulus", "X": "bound", "torsion": "order restriction",
                    "M2": "exact sum of chi(p)^2", "prime_count": "pi(X)",
                    "ratio": "M2 / prime_count"},
                   _dirichlet_moment),
        Subcommand("constants", "prime sums behind the rank-bound correction",
                   {"X": Key(_float, "1e7", "prime cutoff")},
                   {"X": "cutoff", "C1": "2 sum_{p<=X} log p/p^2",
                    "C2": "4 sum_{p<=X} (log p)^2/p^2"},
                   _constants),
        Subcommand("oracle-check", "closed forms against brute-force character enumeration",
                   {"m": Key(_int, "15", "odd square-free modulus"),
                    "p_max": Key(_int, "1000", "largest prime checked")},
                   {"check": "identity checked", "cases": "cases tried",
                    "failures": "cases that disagreed"},
                   _oracle_check),
    ]
    return {s.name: s for s in subs}


SUBCOMMANDS = _subcommands()

# parameter keys that do not change results and are kept out of the echo
_NON_ECHO = {"_override"}


def resolve(sub: Subcommand, params: dict[str, str]) -> tuple[dict, dict[str, str]]:
    unknown = sorted(set(params) - set(sub.keys))
    if unknown:
        raise UsageError(f"unknown key(s) {', '.join(unknown)} for {sub.name}; "
                         f"accepted: {', '.join(sorted(sub.keys))}")
    text = {k: params.get(k, key.default) for k, key in sub.keys.items()}
    values = {}
    for k, key in sub.keys.items():
        try:
            values[k] = key.parse(text[k])
        except UsageError as exc:
            raise UsageError(f"{k}: {exc}") from None
        except ValueError as exc:
            raise UsageError(f"{k}: cannot parse {text[k]!r} ({exc})") from None
    return values, text


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _help_epilog(sub: Subcommand) -> str:
    lines = ["parameters (key=value, default in brackets):"]
    for k, key in sub.keys.items():
        lines.append(f"  {k} [{key.default}]  {key.doc}")
    lines.append("")
    lines.append("CSV columns:")
    for c, doc in sub.columns.items():
        lines.append(f"  {c}: {doc}")
    lines.append("")
    lines.append("The first line of every CSV is a '#' comment with the tool version and "
                 "the effective parameters.")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key=value file, one per line, # comments")
    common.add_argument("--out", type=Path, help=f"CSV path (default: ${OUT_DIR_ENV}/<subcommand>.csv "
                                                 "if set, else stdout)")
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--override-resource-guard", action="store_true",
                        help="allow runs beyond the desk-scale limits")
    parser = argparse.ArgumentParser(prog="lowlying", description=__doc__)
    parser.add_argument("--version", action="version", version=f"lowlying {__version__}")
    sp = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    for sub in SUBCOMMANDS.values():
        p = sp.add_parser(sub.name, help=sub.help, description=sub.help, parents=[common],
                          epilog=_help_epilog(sub),
                          formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("pairs", nargs="*", metavar="key=value")
    return parser


def _fail(kind: str, msg: str, code: int) -> int:
    flat = " ".join(str(msg).split())
    print(f"error kind={kind} message={flat}", file=sys.stderr)
    return code


def run(config: RunConfig, out: Path | None = None, threads: int = 1,
        override_guard: bool = False) -> int:
    """Execute a configured subcommand; returns the exit status."""
    try:
        if config.subcommand not in SUBCOMMANDS:
            raise UsageError(f"unknown subcommand {config.subcommand!r}; "
                             f"accepted: {', '.join(SUBCOMMANDS)}")
        sub = SUBCOMMANDS[config.subcommand]
        values, text = resolve(sub, config.params)
        values["_override"] = override_guard
        if threads < 1:
            raise UsageError("--threads must be at least 1")
        result = sub.run(values, threads)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except ResourceLimitError as exc:
        return _fail("resource", exc, EXIT_RESOURCE)
    except (ContractViolation, IndexError) as exc:
        return _fail("contract", exc, EXIT_CONTRACT)
    csv_text = render_csv(sub, {k: v for k, v in text.items() if k not in _NON_ECHO}, result)
    if out is None and os.environ.get(OUT_DIR_ENV):
        out = Path(os.environ[OUT_DIR_ENV]) / f"{sub.name}.csv"
    if out is None:
        sys.stdout.write(csv_text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text)
    for k, v in result.summary.items():
        print(f"{k}={_fmt(v)}", file=sys.stderr)
    if not result.ok:
        return _fail("check", f"{sub.name} reported failures", EXIT_CHECK_FAILED)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig()
        if args.config is not None:
            cfg = RunConfig.from_text(args.config.read_text())
        if args.subcommand is None and cfg.subcommand is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        cli_cfg = RunConfig(args.subcommand, parse_pairs(getattr(args, "pairs", [])))
        cfg = cfg.merged(cli_cfg)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except OSError as exc:
        return _fail("usage", f"cannot read config: {exc}", EXIT_USAGE)
    return run(cfg, args.out, args.threads, args.override_resource_guard)


if __name__ == "__main__":
    sys.exit(main())
