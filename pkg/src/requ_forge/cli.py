"""Command-line front end: build, sweep, gadget playground, square-root demo.

Exit codes: 0 success, 1 verification failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import gadgets
from .approximator import bump_net, full_approximator
from .calculus import identity_net
from .network import NetworkFormatError, complexity, load, realize, save
from .partition import PartitionPair
from .taylor import REGISTRY, TaylorConstantError, registry_function

OK, FAIL, INVALID = 0, 1, 2

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)

# relative slack for float rounding when a bound is attained in the limit
# (the square-root iterates approach sqrt(x + eps^2) = eps from below at x = 0)
ROUNDING_SLACK = 1e-9


class UsageError(Exception):
    pass


def splitmix64(seed, n):
    """First ``n`` outputs of the splitmix64 generator seeded with ``seed``."""
    k = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(seed % 2 ** 64) + k * _GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def sample_points(n, d, seed, half_width):
    """``n`` points in ``[-a, a)^d`` from splitmix64; coordinate ``k`` of point ``p``
    uses output ``p * d + k``, mapped to ``[0, 1)`` through its top 53 bits."""
    u = (splitmix64(seed, n * d) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    x = -half_width + 2.0 * half_width * u.reshape(n, d)
    return np.minimum(x, np.nextafter(half_width, -np.inf))


def _threads():
    try:
        return max(1, int(os.environ.get("REQU_FORGE_THREADS", os.cpu_count() or 1)))
    except ValueError:
        return 1


def evaluate(net, X, threads=None):
    """Evaluate in row blocks on a thread pool; results keep input order."""
    threads = threads or _threads()
    if threads == 1 or X.shape[0] < 4096:
        return realize(net, X)
    blocks = np.array_split(X, threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda b: realize(net, b), blocks))
    return np.concatenate(parts, axis=0)


def write_csv(path, X, fx, phi):
    d = X.shape[1]
    header = ",".join([f"x_{k + 1}" for k in range(d)] + ["f", "phi", "abs_err"])
    table = np.column_stack([X, fx, phi, np.abs(fx - phi)]) if X.size else np.empty((0, d + 3))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        np.savetxt(fh, table, fmt="%.17g", delimiter=",", newline="\n",
                   header=header, comments="")


# -- commands --------------------------------------------------------------------------


def cmd_build(args):
    a = args.domain
    f = registry_function(args.fn, args.d, args.r, args.R, half_width=max(1.0, 2 * a))
    if args.R is not None:
        f.check_radius(half_width=2 * a)
    rep = full_approximator(f, args.eps, domain_half_width=a,
                            M=args.M_override, c=args.c_override)
    save(rep.network, args.out)
    report_path = args.report or _default_report(args.out)
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(rep.to_json())
    m = rep.measured
    print(f"built {args.fn} d={args.d} r={args.r} eps={args.eps}: M={rep.spec.M} "
          f"L={m.hidden_layers}/{rep.predicted_L} N={m.max_width}/{rep.predicted_N} "
          f"nonzeros={m.nonzero_weights}")
    print(f"network -> {args.out}\nreport  -> {report_path}")
    return OK


def _default_report(out):
    root, _ = os.path.splitext(out)
    return root + ".report.json"


def cmd_sweep(args):
    report_path = args.report or _default_report(args.network)
    net = load(args.network)
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    name = args.fn or report["function"]
    d = report["d"]
    if net.input_dim != d:
        raise UsageError(f"network reads {net.input_dim} inputs but the report says d={d}")
    a = report["domain_half_width"]
    f = registry_function(name, d, report["r"], report["R"], half_width=max(1.0, 2 * a))
    X = sample_points(args.points, d, args.seed, a)
    phi = evaluate(net, X)[:, 0] if args.points else np.empty(0)
    fx = f(X) if args.points else np.empty(0)
    if args.csv:
        write_csv(args.csv, X, fx, phi)
    if not args.points:
        print("no samples")
        return OK
    worst = float(np.max(np.abs(fx - phi)))
    verdict = worst <= report["eps"]
    print(f"max abs_err {worst:.6g} over {args.points} points (eps {report['eps']:g}): "
          f"{'PASS' if verdict else 'FAIL'}")
    return OK if verdict else FAIL


def _probe_points(values, dim):
    vals = np.array(values, dtype=np.float64)
    if vals.size % dim:
        raise UsageError(f"probe needs a multiple of {dim} values, got {vals.size}")
    return vals.reshape(-1, dim)


def cmd_gadget(args):
    name = args.name
    if name == "product2":
        net = gadgets.product2()
    elif name == "product_d":
        net = gadgets.product_d(args.d)
    elif name == "identity":
        net = identity_net(args.s)
    elif name == "indicator":
        if args.a is None or args.b is None:
            raise UsageError("indicator needs --a and --b")
        net = gadgets.indicator_net(args.a, args.b, args.s)
    elif name == "polynomial":
        if args.weights is None:
            raise UsageError("polynomial needs --weights")
        net = gadgets.polynomial_net(args.N, args.weights, args.s, args.d)
    elif name == "bump":
        net = bump_net(PartitionPair(args.M, args.d))
    else:
        raise UsageError(f"unknown gadget {name!r}")
    if args.probe == ["at-center"]:
        if name != "bump":
            raise UsageError("'at-center' probes only apply to the bump gadget")
        pp = PartitionPair(args.M, args.d)
        X = (pp.fine_corner(0, 0) + pp.fine_side / 2).reshape(1, -1)
    elif args.probe:
        X = _probe_points(args.probe, net.input_dim)
    else:
        X = np.empty((0, net.input_dim))
    for x, y in zip(X, realize(net, X) if len(X) else []):
        print(" ".join(f"{v:.17g}" for v in x), "->", " ".join(f"{v:.17g}" for v in y))
    c = complexity(net)
    print(f"hidden_layers={c.hidden_layers} max_width={c.max_width} "
          f"nonzero_weights={c.nonzero_weights}")
    if args.out:
        save(net, args.out)
    return OK


def cmd_sqrt(args):
    n = args.n if args.n is not None else gadgets.sqrt_iterations(args.t, args.eps)
    net = gadgets.sqrt_net(args.t, args.eps, n)
    x = np.linspace(0.0, args.t, args.points)
    err = float(np.max(np.abs(realize(net, x[:, None])[:, 0] - np.sqrt(x))))
    c = complexity(net)
    ok = err <= args.eps * (1 + ROUNDING_SLACK)
    print(f"n={n} hidden_layers={c.hidden_layers} max_width={c.max_width} "
          f"nonzero_weights={c.nonzero_weights}")
    print(f"max error {err:.6g} over {args.points} grid points (eps {args.eps:g}): "
          f"{'PASS' if ok else 'FAIL'}")
    return OK if ok else FAIL


# -- argument parsing -----------------------------------------------------------------


def _positive_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="requ-forge",
                                description="Explicit ReQU approximation networks.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="build an approximation network")
    b.add_argument("--fn", required=True, choices=sorted(REGISTRY))
    b.add_argument("--d", type=int, default=1)
    b.add_argument("--r", type=float, default=2.0)
    b.add_argument("--R", type=float, default=None, help="override the registry radius")
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--domain", type=float, default=0.5, help="half-width a of [-a, a)^d")
    b.add_argument("--M-override", dest="M_override", type=int, default=None)
    b.add_argument("--c-override", dest="c_override", type=float, default=None)
    b.add_argument("--out", required=True, help="network JSON path")
    b.add_argument("--report", default=None, help="report JSON path")
    b.set_defaults(func=cmd_build)

    s = sub.add_parser("sweep", help="compare a built network against its function")
    s.add_argument("network")
    s.add_argument("--report", default=None)
    s.add_argument("--fn", default=None, choices=sorted(REGISTRY))
    s.add_argument("--points", type=_positive_int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--csv", "--out", dest="csv", default=None)
    s.set_defaults(func=cmd_sweep)

    g = sub.add_parser("gadget", help="evaluate a single gadget")
    g.add_argument("name")
    g.add_argument("--d", type=int, default=1)
    g.add_argument("--s", type=float, default=1.0)
    g.add_argument("--M", type=int, default=2)
    g.add_argument("--N", type=int, default=1)
    g.add_argument("--a", type=float, nargs="+")
    g.add_argument("--b", type=float, nargs="+")
    g.add_argument("--weights", type=float, nargs="+")
    g.add_argument("--probe", nargs="+", default=[])
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_gadget)

    q = sub.add_parser("sqrt", help="square-root network demo")
    q.add_argument("--t", type=float, default=1.0)
    q.add_argument("--eps", type=float, default=0.1)
    q.add_argument("--n", type=int, default=None, help="override the iteration count")
    q.add_argument("--points", type=int, default=10_001)
    q.set_defaults(func=cmd_sqrt)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, KeyError, TaylorConstantError,
            NetworkFormatError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"requ-forge {args.command}: error: {msg}", file=sys.stderr)
        return INVALID


if __name__ == "__main__":
    sys.exit(main())
