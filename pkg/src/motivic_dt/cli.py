"""motivic-dt command line: run one identity check and emit its report."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .budget import DEFAULT_BUDGET, BudgetExceeded, enumeration_budget
from .cyclo import CyclotomicValue, power_character_sum
from .dt import (CheckReport, WeightedFunction, check_cmps, check_dimred, check_feit_fine,
                 check_preprojective, check_wallcross)
from .ffield import is_prime, prime_power
from .lambda_ring import AdamsSequence, sigma_n
from .quiver import Potential, conj_classes, parse_quiver_text, sym_line_twisted_count

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET,
                    help="max enumerated points per count (default %(default)s)")
    sp.add_argument("--out", type=Path, help="write the report here instead of stdout")
    sp.add_argument("--format", choices=("json", "csv", "table"), default="table")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--timing", action="store_true", help="fill the ms column")
    sp.add_argument("--backend", choices=("classes", "brute"), default="classes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="motivic-dt",
                                 description="Exact finite-field checks of motivic DT identities.")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("cmps", help="DT invariants of the loop quiver with potential c^d")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--nmax", type=int, default=3)
    sp.add_argument("--kmax", type=int, default=1)
    _common(sp)

    sp = sub.add_parser("feit-fine", help="commuting-variety generating series")
    sp.add_argument("--q", type=_int_list, default=[2, 3, 5])
    sp.add_argument("--nmax", type=int, default=3)
    sp.add_argument("--brute", type=int, default=0, help="also brute-force n up to this")
    _common(sp)

    sp = sub.add_parser("dimred", help="sum over total space vs sum over the zero locus")
    sp.add_argument("--poly", help='polynomial such as "x^2*t + x"')
    sp.add_argument("--fiber", default="t", help="comma-separated fiber variables")
    sp.add_argument("--quiver", type=Path, help="one-vertex quiver file; entries of Tr W become variables")
    sp.add_argument("--n", type=int, default=1, help="matrix size with --quiver")
    sp.add_argument("--p", type=int, default=3)
    sp.add_argument("--kmax", type=int, default=1)
    _common(sp)

    sp = sub.add_parser("wallcross", help="framed vs unframed series for the three-loop quiver")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--d", type=int, default=2, help="twist c^d; 0 for none")
    sp.add_argument("--nmax", type=int, default=2)
    sp.add_argument("--kmax", type=int, default=1, help="level (single)")
    _common(sp)

    sp = sub.add_parser("preproj", help="tripled Jordan quiver plus W'(b, c)")
    sp.add_argument("--potential", default="1 c b b", help='W\' as "coef word, ..." in letters b, c')
    sp.add_argument("--quiver", type=Path, help="read W' from a quiver file instead")
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--nmax", type=int, default=2)
    sp.add_argument("--kmax", type=int, default=1)
    _common(sp)

    sp = sub.add_parser("sigma-oracle", help="sigma^n of <d> vs monic polynomial sums")
    sp.add_argument("--d", type=int, default=2)
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--nmax", type=int, default=3)
    sp.add_argument("--kmax", type=int, default=1)
    _common(sp)

    sp = sub.add_parser("classes", help="conjugacy class sizes and |GL_n|")
    sp.add_argument("--q", type=_int_list, default=[2, 3])
    sp.add_argument("--nmax", type=int, default=3)
    _common(sp)
    return ap


def _need_prime(p: int) -> None:
    if not is_prime(p):
        raise UsageError(f"p={p} is not prime")


def _need_nmax(n: int, p: int) -> None:
    if n < 1 or n >= p:
        raise UsageError(f"need 1 <= nmax < p, got nmax={n}, p={p}")


def sigma_oracle(d: int, p: int, n_max: int, k_max: int) -> CheckReport:
    rep = CheckReport("sigma-oracle", {"d": d, "p": p, "nmax": n_max, "kmax": k_max})
    with rep.collecting():
        # <d> realized levelwise as sum_t psi(t^d); no square root of q needed
        angle = AdamsSequence.from_function(p, n_max * k_max,
                                            lambda k: power_character_sum(d, p, k))
        for n in range(1, n_max + 1):
            s = sigma_n(angle, n)
            for k in range(1, k_max + 1):
                t0 = time.perf_counter()
                rep.add(n, k, s[k], sym_line_twisted_count(d, n, p, k), t0)
    return rep


def classes_report(q_list, n_max: int) -> CheckReport:
    rep = CheckReport("classes", {"q": list(q_list), "nmax": n_max})
    for q in q_list:
        p, _ = prime_power(q)
        for n in range(1, n_max + 1):
            t0 = time.perf_counter()
            total = sum(c.class_size for c in conj_classes(n, q))
            rep.add(n, 1, CyclotomicValue.constant(p, total),
                    CyclotomicValue.constant(p, q ** (n * n)), t0, q=q, form="class-sizes")
    return rep


def run(args) -> CheckReport:
    cmd = args.command
    w = args.threads
    if cmd == "cmps":
        _need_prime(args.p)
        _need_nmax(args.nmax, args.p)
        return check_cmps(args.d, args.p, args.nmax, args.kmax, args.backend, w)
    if cmd == "feit-fine":
        for q in args.q:
            prime_power(q)
        return check_feit_fine(args.q, args.nmax, args.backend, args.brute, w)
    if cmd == "dimred":
        _need_prime(args.p)
        fiber = [f.strip() for f in args.fiber.split(",") if f.strip()]
        if args.quiver:
            Q, W = parse_quiver_text(args.quiver.read_text())
            f = WeightedFunction.from_potential(Q, W, args.n, fiber)
        elif args.poly:
            f = WeightedFunction.parse(args.poly, fiber)
        else:
            raise UsageError("dimred needs --poly or --quiver")
        return check_dimred(f, args.p, range(1, args.kmax + 1), w)
    if cmd == "wallcross":
        _need_prime(args.p)
        return check_wallcross(args.p, args.nmax, args.d or None, args.kmax, w)
    if cmd == "preproj":
        _need_prime(args.p)
        _need_nmax(args.nmax, args.p)
        if args.quiver:
            _, W = parse_quiver_text(args.quiver.read_text())
        else:
            W = Potential.parse(args.potential)
        return check_preprojective(W, args.p, args.nmax, args.kmax, args.backend, w)
    if cmd == "sigma-oracle":
        _need_prime(args.p)
        return sigma_oracle(args.d, args.p, args.nmax, args.kmax)
    if cmd == "classes":
        return classes_report(args.q, args.nmax)
    raise UsageError(f"unknown command {cmd}")


def render(rep: CheckReport, fmt: str, timing: bool) -> str:
    if fmt == "json":
        return rep.dumps(timing)
    if fmt == "csv":
        return rep.to_csv(timing)
    return rep.table()


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    if args.budget <= 0:
        print("motivic-dt: --budget must be positive", file=sys.stderr)
        return EXIT_USAGE
    status = EXIT_FAIL
    rep = None
    try:
        with enumeration_budget(args.budget):
            rep = run(args)
        status = EXIT_PASS if rep.passed else EXIT_FAIL
    except BudgetExceeded as e:
        print(f"motivic-dt: {e}", file=sys.stderr)
        rep = getattr(e, "partial_report", None)
        status = EXIT_BUDGET
    except (UsageError, ValueError) as e:
        print(f"motivic-dt: {e}", file=sys.stderr)
        return EXIT_USAGE
    if rep is not None:
        text = render(rep, args.format, args.timing)
        if args.out:
            args.out.write_text(text)
        else:
            sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
