"""Command-line entry point: ``fblcoding <subcommand> ...`` or ``fblcoding --recipe NAME``.

Results go to stdout (JSON or CSV), diagnostics to stderr. Exit codes: 0 ok,
2 invalid input, 3 numerical failure, 4 enumeration guard.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .capacity import DEFAULT_TOL, achiever_polytope, capacity, capacity_with_cost
from .channel import CostFunction, DiscreteChannel, ProbabilityVector
from .dispersion import analyze, conditional_dispersion
from .errors import EnumerationTooLarge, NumericalError, ValidationError
from .example_lab import build_example, example_v_endpoints, lp_endpoints, sweep, verify_equidistance
from .gallager import comparison_curve, gallager_limit_value, second_order_gallager_limit
from .gaussian import GaussianParams, gaussian_capacity, gaussian_dispersion
from .markov import (
    MarkovNoise,
    entropy_rate,
    markov_capacity,
    markov_error,
    markov_second_order,
    markov_variance,
    monte_carlo_variance,
)
from .normal import normal_cdf
from .rates import second_order
from .spectrum import (
    MixtureReference,
    converse_bound_check,
    density_tail,
    direct_bound,
    exact_random_code,
    ks_distance,
    sample_information_density,
)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_ENUMERATION = 0, 2, 3, 4

RECIPES = ("fig-graph2", "fig-graph1", "gallager-limit", "clt-check")


# ---------------------------------------------------------------------------
# Input parsing
# ---------------------------------------------------------------------------


def load_channel(source: str) -> DiscreteChannel:
    """A JSON file path, or a built-in ``bsc:p``, ``bec:e`` or ``identity:k``."""
    if os.path.exists(source):
        with open(source) as fh:
            return DiscreteChannel.from_json(fh.read())
    name, _, arg = source.partition(":")
    builders = {"bsc": lambda v: DiscreteChannel.bsc(float(v)),
                "bec": lambda v: DiscreteChannel.bec(float(v)),
                "identity": lambda v: DiscreteChannel.identity(int(v))}
    if name not in builders or not arg:
        raise ValidationError(f"{source!r} is neither a file nor bsc:p / bec:e / identity:k")
    try:
        return builders[name](arg)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad parameter in {source!r}: {exc}") from exc


def load_cost(path: Optional[str]) -> Optional[CostFunction]:
    if path is None:
        return None
    with open(path) as fh:
        return CostFunction.from_json(fh.read())


def load_markov(source: str) -> MarkovNoise:
    """A JSON file path, or ``flip:a,b`` for the binary chain with those flip rates."""
    if os.path.exists(source):
        with open(source) as fh:
            return MarkovNoise.from_json(fh.read())
    name, _, arg = source.partition(":")
    if name != "flip" or not arg:
        raise ValidationError(f"{source!r} is neither a file nor flip:a,b")
    try:
        a, b = (float(v) for v in arg.split(","))
    except ValueError as exc:
        raise ValidationError(f"bad flip rates in {source!r}") from exc
    return MarkovNoise([[1 - a, a], [b, 1 - b]])


def parse_vector(text: Optional[str]) -> Optional[np.ndarray]:
    if text is None:
        return None
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise ValidationError(f"cannot parse {text!r} as a comma-separated vector") from exc


def parse_int_list(text: str) -> list:
    try:
        return [int(float(v)) for v in text.split(",")]
    except ValueError as exc:
        raise ValidationError(f"cannot parse {text!r} as a list of integers") from exc


def _lag(text: str) -> Optional[int]:
    return None if text == "full" else int(text)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit_json(payload: dict, out) -> None:
    out.write(json.dumps(_clean(payload), indent=2, sort_keys=True))
    out.write("\n")


def emit_csv(header, rows, out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])


def _emit_table(args, header, rows, extra: Optional[dict] = None) -> None:
    if args.format == "csv":
        emit_csv(header, rows, args.out)
    else:
        payload = {"rows": [dict(zip(header, r)) for r in rows]}
        payload.update(extra or {})
        emit_json(payload, args.out)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_capacity(args) -> None:
    w = load_channel(args.channel)
    cost = load_cost(args.cost)
    report = capacity(w, args.tol) if cost is None else capacity_with_cost(w, cost, args.tol)
    polytope = achiever_polytope(w, report, cost)
    payload = report.to_dict()
    payload["polytope"] = polytope.to_dict()
    emit_json(payload, args.out)


def cmd_dispersion(args) -> None:
    w = load_channel(args.channel)
    report, polytope, disp = analyze(w, load_cost(args.cost), args.tol, method=args.method)
    payload = {"capacity_nats": report.capacity, "q_m": report.q_m.probs}
    payload.update(disp.to_dict())
    payload["support"] = polytope.support_set
    emit_json(payload, args.out)


def cmd_second_order(args) -> None:
    if args.channel is not None:
        target = load_channel(args.channel)
    elif args.noise_power is not None and args.signal_power is not None:
        target = GaussianParams(args.noise_power, args.signal_power)
    else:
        raise ValidationError("give --channel or both --noise-power and --signal-power")
    report = second_order(target, eps=args.eps, a=args.a, cost=load_cost(args.cost), tol=args.tol)
    emit_json(report.to_dict(), args.out)


def cmd_markov(args) -> None:
    noise = load_markov(args.noise)
    lag = _lag(args.lag)
    payload = {
        "d": noise.d,
        "stationary": noise.stationary.probs,
        "entropy_rate_nats": entropy_rate(noise),
        "capacity_nats": markov_capacity(noise),
        "variance": markov_variance(noise, lag),
        "variance_lag1": markov_variance(noise, 1),
        "variance_full": markov_variance(noise, None),
        "lag": args.lag,
    }
    if args.eps is not None:
        payload["eps"] = args.eps
        payload["second_order_rate"] = markov_second_order(noise, args.eps, lag)
    if args.a is not None:
        payload["a"] = args.a
        payload["error"] = markov_error(noise, args.a, lag)
    if args.mc_replicas:
        var, se = monte_carlo_variance(noise, args.mc_n, args.mc_replicas, args.seed)
        payload["monte_carlo"] = {"n": args.mc_n, "replicas": args.mc_replicas, "seed": args.seed,
                                  "variance": var, "standard_error": se}
    emit_json(payload, args.out)


def cmd_gaussian(args) -> None:
    g = GaussianParams(args.noise_power, args.signal_power)
    payload = {"capacity_nats": gaussian_capacity(g), "dispersion": gaussian_dispersion(g),
               "snr": g.snr}
    if args.eps is not None or args.a is not None:
        payload.update(second_order(g, eps=args.eps, a=args.a).to_dict())
    emit_json(payload, args.out)


def _gallager_compare_rows(v, r2_min, r2_max, steps):
    curve = comparison_curve(v, r2_min, r2_max, steps)
    return [(float(r), float(gv), float(b))
            for r, b, gv in zip(curve.r2_grid, curve.gallager_bound, curve.gaussian_value)]


def cmd_gallager_compare(args) -> None:
    rows = _gallager_compare_rows(args.v, args.r2_min, args.r2_max, args.steps)
    _emit_table(args, ("r2", "gaussian", "gallager"), rows, {"v": args.v})


def _gallager_limit(w, p, r2, n_grid, tol):
    w = DiscreteChannel(w) if not isinstance(w, DiscreteChannel) else w
    if p is None:
        p = capacity(w.matrix, tol).achiever.probs
    v = conditional_dispersion(w.matrix, p)
    rows = second_order_gallager_limit(w.matrix, p, r2, n_grid)
    target = gallager_limit_value(r2, v)
    table = [(r.n, r.scaled_min, r.s_n, r.sqrt_n_s_n) for r in rows]
    return table, {"r2": r2, "v": v, "limit": target, "sqrt_n_s_n_limit": -r2 / v,
                   "input": np.asarray(p)}


def cmd_gallager_limit(args) -> None:
    w = load_channel(args.channel)
    table, extra = _gallager_limit(w, parse_vector(args.input), args.r2,
                                   parse_int_list(args.n), args.tol)
    _emit_table(args, ("n", "scaled_min", "s_n", "sqrt_n_s_n"), table, extra)


def _simulate(w, p, n, replicas, seed, center, workers):
    if p is None:
        p = capacity(w.matrix).achiever.probs
    if center == "capacity":
        center_value = None
    else:
        try:
            center_value = float(center)
        except ValueError as exc:
            raise ValidationError(f"--center must be 'capacity' or a number, got {center!r}") from exc
    sample = sample_information_density(w.matrix, p, None, n, replicas, seed, center_value, workers)
    v = conditional_dispersion(w.matrix, p)
    summary = {
        "n": n, "replicas": replicas, "seed": seed, "center": sample.center,
        "input": np.asarray(p), "dispersion": v,
        "mean": float(np.mean(sample.values)),
        "variance": float(np.var(sample.values, ddof=1)) if replicas > 1 else 0.0,
    }
    if v > 0:
        summary["ks_distance"] = ks_distance(sample.values, lambda x: normal_cdf(x / math.sqrt(v)))
    return sample, summary


def cmd_simulate(args) -> None:
    w = load_channel(args.channel)
    sample, summary = _simulate(w, parse_vector(args.input), args.n, args.replicas, args.seed,
                                args.center, args.workers)
    if args.summary:
        with open(args.summary, "w") as fh:
            emit_json(summary, fh)
    if args.format == "csv":
        emit_csv(("replica", "value"), enumerate(sample.values), args.out)
    else:
        summary["values"] = sample.values
        emit_json(summary, args.out)


def cmd_oracle(args) -> None:
    w = load_channel(args.channel)
    p = parse_vector(args.input)
    if p is None:
        p = np.full(w.input_size, 1.0 / w.input_size)
    p = ProbabilityVector(p).probs
    seeds = range(args.seed, args.seed + args.trials)
    if args.kind == "direct":
        errors = np.array([exact_random_code(w.matrix, p, args.n, args.codebook_size, args.rate,
                                             s).exact_error for s in seeds])
        bound = direct_bound(w.matrix, p, args.n, args.codebook_size, args.rate)
        se = float(np.std(errors, ddof=1) / math.sqrt(errors.size)) if errors.size > 1 else 0.0
        mean = float(errors.mean())
        emit_json({
            "kind": "direct", "n": args.n, "codebook_size": args.codebook_size, "rate": args.rate,
            "trials": args.trials, "seed": args.seed, "mean_error": mean, "standard_error": se,
            "tail": density_tail(w.matrix, p, args.n, args.rate), "bound": bound,
            "holds": bool(mean <= bound + 3.0 * se),
        }, args.out)
        return
    rate = math.log(args.codebook_size) / args.n
    if args.qref == "mixture":
        qref = MixtureReference(w.matrix, args.n)
    elif args.qref == "output":
        qref = p @ w.matrix
    else:
        qref = parse_vector(args.qref)
    rows = []
    for s in seeds:
        trial = exact_random_code(w.matrix, p, args.n, args.codebook_size, rate, s)
        lhs, rhs = converse_bound_check(w.matrix, trial, qref, args.gamma)
        rows.append({"seed": s, "lhs": lhs, "rhs": rhs, "holds": bool(lhs >= rhs)})
    emit_json({"kind": "converse", "n": args.n, "codebook_size": args.codebook_size,
               "gamma": args.gamma, "qref": args.qref, "trials": rows,
               "holds": all(r["holds"] for r in rows)}, args.out)


def _example_payload(q1, q2, tol):
    inst = build_example(q1, q2)
    payload = inst.to_dict()
    payload["divergences"] = verify_equidistance(inst)
    payload["capacity_nats"] = capacity(inst.channel.matrix, tol).capacity
    v_p, v_pp = example_v_endpoints(inst)
    payload.update(v_p=v_p, v_pprime=v_pp,
                   larger="pprime" if v_pp > v_p else ("p" if v_p > v_pp else "equal"))
    if inst.level > 0:
        _, disp = lp_endpoints(inst)
        payload.update(v_plus=disp.v_plus, v_minus=disp.v_minus)
    return payload


def _sweep_rows(q1_min, q1_max, steps, ratio):
    return sweep(np.linspace(q1_min, q1_max, steps), ratio)


def cmd_example61(args) -> None:
    if args.sweep:
        rows = _sweep_rows(args.q1_min, args.q1_max, args.steps, args.ratio)
        _emit_table(args, ("q1", "q2", "v_p", "v_pprime", "capacity"), rows)
        return
    emit_json(_example_payload(args.q1, args.q2, args.tol), args.out)


def run_recipe(name: str, args) -> None:
    if name == "fig-graph2":
        rows = _gallager_compare_rows(1.0, -4.0, 4.0, 161)
        _emit_table(args, ("r2", "gaussian", "gallager"), rows, {"v": 1.0})
    elif name == "fig-graph1":
        rows = _sweep_rows(0.05, 0.45, 41, 0.5)
        _emit_table(args, ("q1", "q2", "v_p", "v_pprime", "capacity"), rows)
    elif name == "gallager-limit":
        table, extra = _gallager_limit(DiscreteChannel.bsc(0.11), np.array([0.5, 0.5]), -1.0,
                                       [100, 10_000, 1_000_000], args.tol)
        _emit_table(args, ("n", "scaled_min", "s_n", "sqrt_n_s_n"), table, extra)
    elif name == "clt-check":
        _, summary = _simulate(DiscreteChannel.bsc(0.11), np.array([0.5, 0.5]), 10_000, 10_000,
                               args.seed if args.seed_given else 42, "capacity", 1)
        emit_json(summary, args.out)
    else:  # pragma: no cover - argparse restricts the choices
        raise ValidationError(f"unknown recipe {name!r}")


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, fmt: bool = False) -> None:
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    if fmt:
        p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fblcoding",
                                     description="Finite-blocklength channel coding toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--recipe", choices=RECIPES, help="emit a preset dataset and exit")
    parser.add_argument("--format", choices=("json", "csv"), default=None,
                        help="output format for --recipe tables")
    parser.add_argument("--seed", type=int, default=None, help="seed for --recipe clt-check")
    parser.add_argument("--tol", type=float, default=DEFAULT_TOL)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("capacity", help="capacity, Q_M and the achiever polytope")
    p.add_argument("--channel", required=True)
    p.add_argument("--cost")
    _common(p)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("dispersion", help="V+ and V- over the achiever polytope")
    p.add_argument("--channel", required=True)
    p.add_argument("--cost")
    p.add_argument("--method", choices=("auto", "vertices", "lp"), default="auto")
    _common(p)
    p.set_defaults(func=cmd_dispersion)

    p = sub.add_parser("second-order", help="sqrt(V) G^-1(eps) or G(a / sqrt(V))")
    p.add_argument("--channel")
    p.add_argument("--noise-power", type=float)
    p.add_argument("--signal-power", type=float)
    p.add_argument("--cost")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--eps", type=float)
    group.add_argument("--a", type=float)
    _common(p)
    p.set_defaults(func=cmd_second_order)

    p = sub.add_parser("markov", help="additive Markov noise quantities")
    p.add_argument("--noise", "--channel", dest="noise", required=True,
                   help="JSON file {d, transition} or flip:a,b")
    p.add_argument("--lag", default="1", help="covariance lag cutoff, or 'full'")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--eps", type=float)
    group.add_argument("--a", type=float)
    p.add_argument("--mc-n", type=int, default=100_000)
    p.add_argument("--mc-replicas", type=int, default=0)
    _common(p)
    p.set_defaults(func=cmd_markov)

    p = sub.add_parser("gaussian", help="power-constrained Gaussian channel")
    p.add_argument("--noise-power", type=float, required=True)
    p.add_argument("--signal-power", type=float, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--eps", type=float)
    group.add_argument("--a", type=float)
    _common(p)
    p.set_defaults(func=cmd_gaussian)

    p = sub.add_parser("gallager-compare", help="G(R2/sqrt(v)) against the Gallager bound")
    p.add_argument("--v", type=float, default=1.0)
    p.add_argument("--r2-min", type=float, default=-4.0)
    p.add_argument("--r2-max", type=float, default=4.0)
    p.add_argument("--steps", type=int, default=161)
    _common(p, fmt=True)
    p.set_defaults(func=cmd_gallager_compare)

    p = sub.add_parser("gallager-limit", help="n min_s (...) against -R2^2/(2V)")
    p.add_argument("--channel", required=True)
    p.add_argument("--input", help="input distribution; default the capacity achiever")
    p.add_argument("--r2", type=float, default=-1.0)
    p.add_argument("--n", default="100,10000,1000000")
    _common(p, fmt=True)
    p.set_defaults(func=cmd_gallager_limit)

    p = sub.add_parser("simulate", help="sample normalised information densities")
    p.add_argument("--channel", required=True)
    p.add_argument("--input", help="input distribution; default the capacity achiever")
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--replicas", type=int, default=10_000)
    p.add_argument("--center", default="capacity")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--summary", help="also write the summary JSON to this file")
    _common(p, fmt=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact small-n direct / converse bound checks")
    p.add_argument("kind", choices=("direct", "converse"))
    p.add_argument("--channel", required=True)
    p.add_argument("--input", help="codebook input law; default uniform")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--codebook-size", "--N", dest="codebook_size", type=int, default=4)
    p.add_argument("--rate", type=float, default=0.2)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--qref", default="mixture",
                   help="'mixture', 'output' (W_P) or a comma-separated distribution")
    p.add_argument("--trials", type=int, default=200)
    _common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("example61", help="the four-input channel with distinct V+ and V-")
    p.add_argument("--q1", type=float, default=0.3)
    p.add_argument("--q2", type=float, default=0.2)
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--q1-min", type=float, default=0.05)
    p.add_argument("--q1-max", type=float, default=0.45)
    p.add_argument("--ratio", type=float, default=0.5, help="q2 = ratio * q1 in the sweep")
    p.add_argument("--steps", type=int, default=41)
    _common(p, fmt=True)
    p.set_defaults(func=cmd_example61)
    return parser


def main(argv=None, out=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.out = out if out is not None else sys.stdout
    try:
        if args.recipe:
            args.seed_given = args.seed is not None
            if args.format is None:
                args.format = "csv" if args.recipe in ("fig-graph2", "fig-graph1") else "json"
            run_recipe(args.recipe, args)
            return EXIT_OK
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_VALIDATION
        if getattr(args, "format", None) is None:
            args.format = "json"
        args.func(args)
    except EnumerationTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENUMERATION
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK

