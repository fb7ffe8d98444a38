"""Command-line front end.

Report lines::

    MEMBER | NOT-MEMBER                     single membership verdict
    triple=i,j,k [ordering=o] MEMBER ...    one line per check when several run
    POLE-OK / POLE-VIOLATION factor=<f>     pole check
    OK | <problem>                          ring validation
    total=<t> pass=<p> fail=<f>             campaign summary (always last)

Exit codes: 0 all checks passed, 1 at least one violation, 2 input or usage error.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .coeffrings import (
    KSurfaceModel,
    ModelMismatch,
    RingModel,
    load_model,
    parse_model,
    ring_validate,
    tensor_power,
)
from .conditions import (
    PoleViolation,
    WheelIdealSpec,
    cross_validate,
    pole_check,
    restrict_small_diagonal,
    surface_wheel_membership,
)
from .equivariant import ORDERINGS, comm_campaign, comm_wheel_membership, ordered_triples
from .laurent import NotDivisible, RatElem, Space, format_element, parse_element, surface_space
from .parser import ExprSyntaxError, NonBinomialDenominator, format_expr, format_factor, parse_expression
from .shuffle import GradedElem, default_plane_kernel, parse_kernel, pole_wheel_experiment, shuffle_product

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class UsageError(ValueError):
    pass


def _read(path: str) -> str:
    p = Path(path)
    if not p.exists():
        bundled = resources.files("kwheel") / "data" / p.name
        if bundled.is_file():
            return bundled.read_text(encoding="utf-8")
    return p.read_text(encoding="utf-8")


def _model(path: str | None) -> RingModel | KSurfaceModel | None:
    if path is None:
        return None
    if path == "kp2":
        return load_model("kp2")
    return parse_model(_read(path))


def _surface(args) -> KSurfaceModel | None:
    model = _model(args.model)
    if model is not None and not isinstance(model, KSurfaceModel):
        raise UsageError("this verb needs a surface model (omega, comega, wedgeW, r)")
    return model


def _first_vector_length(text: str) -> int | None:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line and not line.startswith("denom"):
            return len(line.split(";")[0].split())
    return None


def _z_count(text: str) -> int | None:
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line and not line.startswith("denom"):
            return len(line.split(";")[1].split())
    return None


def _element(args, surf: KSurfaceModel | None, allow_restricted: bool = False) -> RatElem:
    """The input element from ``--expr`` or ``--element``.

    Surface-mode files may carry coefficients in K(S)^{(x)n} or, when
    ``allow_restricted``, in the restricted K(S)^{(x)(n-2)}.
    """
    base = surf.ring if surf is not None else None
    if (args.expr is None) == (args.element is None):
        raise UsageError("give exactly one of --expr and --element")
    if args.expr is not None:
        return RatElem.lift(parse_expression(args.expr, n=args.n, base=base))
    text = _read(args.element)
    if base is None:
        return parse_element(text, n=args.n)
    n = args.n if args.n is not None else _z_count(text)
    if n is None:
        raise UsageError("cannot infer the number of variables; pass --n")
    length = _first_vector_length(text)
    if allow_restricted and n >= 2 and length == base.rank ** (n - 2) and length != base.rank**n:
        return parse_element(text, space=Space(n, tensor_power(base, n - 2), 0))
    return parse_element(text, space=surface_space(n, base))


def _triples(args, n: int) -> list[tuple[int, int, int]]:
    if args.triple is None:
        return ordered_triples(n)
    return [tuple(args.triple)]


def _verdict(ok: bool) -> str:
    return "MEMBER" if ok else "NOT-MEMBER"


def _report(results: list[tuple[str, bool]], out) -> int:
    if len(results) == 1:
        print(_verdict(results[0][1]), file=out)
    else:
        for label, ok in results:
            print(f"{label} {_verdict(ok)}", file=out)
    return EXIT_OK if all(ok for _, ok in results) else EXIT_VIOLATION


# -- verbs ------------------------------------------------------------------


def cmd_validate_ring(args, out) -> int:
    if args.model is None:
        raise UsageError("validate-ring needs --model")
    model = _model(args.model)
    ring = model.ring if isinstance(model, KSurfaceModel) else model
    problems = ring_validate(ring)
    if not problems:
        problems = [f"tensor square: {p}" for p in ring_validate(tensor_power(ring, 2))]
    if isinstance(model, KSurfaceModel):
        problems += model.problems()
    for p in problems:
        print(p, file=out)
    if not problems:
        print("OK", file=out)
    return EXIT_VIOLATION if problems else EXIT_OK


def cmd_comm_wheel(args, out) -> int:
    x = _element(args, None)
    if not x.is_laurent():
        raise UsageError("comm-wheel needs a Laurent polynomial (no denominators)")
    x = x.numerator
    orderings = [args.ordering] if args.ordering else ["q1q2"]
    results = []
    for t in _triples(args, x.space.n):
        for o in orderings:
            results.append((f"triple={t[0]},{t[1]},{t[2]} ordering={o}", comm_wheel_membership(x, t, o)))
    return _report(results, out)


def cmd_pole(args, out) -> int:
    surf = _surface(args)
    F = _element(args, surf)
    try:
        G = pole_check(F, surf, args.orientation)
    except PoleViolation as exc:
        print(f"POLE-VIOLATION factor={format_factor(exc.factor)}", file=out)
        return EXIT_VIOLATION
    print("POLE-OK", file=out)
    print(f"result: {format_expr(G)}", file=out)
    return EXIT_OK


def cmd_wheel(args, out) -> int:
    if args.campaign:
        return _wheel_campaign(args, out)
    surf = _surface(args)
    F = _element(args, surf, allow_restricted=not args.with_phi)
    if args.with_phi:
        try:
            G = pole_check(F, surf, args.orientation)
        except PoleViolation as exc:
            print(f"POLE-VIOLATION factor={format_factor(exc.factor)}", file=out)
            return EXIT_VIOLATION
    else:
        if not F.is_laurent():
            raise UsageError("wheel needs a Laurent polynomial; use --with-phi for rational input")
        G = F.numerator
    n = G.space.n
    if n < 3:
        raise UsageError("wheel conditions need at least 3 variables")
    restricted = surf is not None and G.space.ring == tensor_power(surf.ring, n)
    results = []
    for t in _triples(args, n):
        H = restrict_small_diagonal(G, t) if restricted else G
        results.append((f"triple={t[0]},{t[1]},{t[2]}", surface_wheel_membership(H, t, surf)))
    return _report(results, out)


def _wheel_campaign(args, out) -> int:
    kernel = parse_kernel(_read(args.kernel)) if args.kernel else default_plane_kernel()
    result = pole_wheel_experiment(
        degree=args.n or 3, trials=args.trials, kernel=kernel, seed=args.seed
    )
    for line in result.lines:
        print(line, file=out)
    print(result.summary, file=out)
    return EXIT_OK if result.failed == 0 else EXIT_VIOLATION


def cmd_shuffle(args, out) -> int:
    if not args.element or len(args.element) != 2:
        raise UsageError("shuffle needs two --element files")
    surf_or_ring = _model(args.model)
    base = surf_or_ring.ring if isinstance(surf_or_ring, KSurfaceModel) else surf_or_ring
    factors = []
    for path in args.element:
        text = _read(path)
        body = parse_element(text, base=base)
        factors.append(GradedElem(body.space.n, body))
    if args.kernel:
        kernel = parse_kernel(_read(args.kernel), base=base)
    elif base is None:
        kernel = default_plane_kernel()
    else:
        raise UsageError("surface-mode shuffle needs --kernel")
    result = shuffle_product(factors[0], factors[1], kernel, normalize=args.normalize)
    out.write(format_element(result.body))
    return EXIT_OK


def cmd_campaign(args, out) -> int:
    if args.name == "comm3":
        kwargs = {"n": 3, "seed": args.seed}
        if args.max_size is not None:
            kwargs["size_bound"] = args.max_size
        if args.unions is not None:
            kwargs["n_unions"] = args.unions
        result = comm_campaign(**kwargs)
        for line in result.lines:
            print(line, file=out)
        print(result.summary, file=out)
        return EXIT_OK if result.failed == 0 else EXIT_VIOLATION
    surf = load_model("kp2")
    space = Space(3, tensor_power(surf.ring, 1), 0)
    members = args.trials if args.trials is not None else 200
    total_fail = 0
    total = 0
    for t in ordered_triples(3):
        check = cross_validate(WheelIdealSpec(t, surf=surf), space, members, members, seed=args.seed + sum(t))
        label = f"triple={t[0]},{t[1]},{t[2]}"
        for line in check.lines:
            print(f"{label} {line}", file=out)
        total += check.members + check.randoms
        total_fail += check.members_rejected + check.disagreements
    print(f"total={total} pass={total - total_fail} fail={total_fail}", file=out)
    return EXIT_OK if total_fail == 0 else EXIT_VIOLATION


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kwheel", description="Pole and wheel condition checks for K-theoretic classes.")
    sub = p.add_subparsers(dest="verb", required=True)

    def element_opts(sp):
        sp.add_argument("--n", type=int, help="number of z-variables")
        sp.add_argument("--expr", help="element as an expression")
        sp.add_argument("--element", help="element file")
        sp.add_argument("--model", help="ring model file, or 'kp2' for the built-in K(P^2)")

    sp = sub.add_parser("validate-ring", help="check the ring axioms of a model")
    sp.add_argument("--model", help="ring model file, or 'kp2'")
    sp.set_defaults(func=cmd_validate_ring)

    sp = sub.add_parser("comm-wheel", help="commuting-variety wheel membership")
    element_opts(sp)
    sp.add_argument("--triple", type=int, nargs=3, metavar=("I", "J", "K"))
    sp.add_argument("--ordering", choices=ORDERINGS)
    sp.set_defaults(func=cmd_comm_wheel)

    sp = sub.add_parser("pole", help="multiply by Phi and divide out the denominator")
    element_opts(sp)
    sp.add_argument("--orientation", choices=("ji", "ij"), default="ji")
    sp.set_defaults(func=cmd_pole)

    sp = sub.add_parser("wheel", help="surface wheel membership")
    element_opts(sp)
    sp.add_argument("--triple", type=int, nargs=3, metavar=("I", "J", "K"))
    sp.add_argument("--orientation", choices=("ji", "ij"), default="ji")
    sp.add_argument("--with-phi", action="store_true", help="run the pole check first and test Phi*F")
    sp.add_argument("--campaign", action="store_true", help="experimental: shuffle products of degree-1 elements")
    sp.add_argument("--kernel", help="kernel file for --campaign")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_wheel)

    sp = sub.add_parser("shuffle", help="shuffle product of two element files")
    sp.add_argument("--element", action="append", help="element file (give twice)")
    sp.add_argument("--kernel", help="kernel file ('zeta num:' / 'zeta den:' lines)")
    sp.add_argument("--model", help="ring model for surface-mode coefficients")
    sp.add_argument("--normalize", action="store_true", help="orient factors and cancel common factors")
    sp.set_defaults(func=cmd_shuffle)

    sp = sub.add_parser("campaign", help="built-in verification campaigns")
    sp.add_argument("name", choices=("comm3", "kp2-wheel"))
    sp.add_argument("--max-size", type=int, help="bound on |setA| + |setB| (comm3)")
    sp.add_argument("--unions", type=int, help="number of sampled pairwise unions (comm3)")
    sp.add_argument("--trials", type=int, help="members and random elements per triple (kp2-wheel)")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_campaign)
    return p


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args, out)
    except (
        UsageError,
        ExprSyntaxError,
        NonBinomialDenominator,
        ModelMismatch,
        NotDivisible,
        ZeroDivisionError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
