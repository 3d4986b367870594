"""Command-line interface.

Subcommands: validate, sample, fit, query, experiment. Exit codes: 0 on
success, 1 for usage/IO/parse problems, 2 for an invalid model, 3 when a
fit does not converge.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import experiments, fileio
from .errors import GrassbinError, InvalidModelError, NonPositiveProbabilityError
from .estimation import FitConfig, fit_map
from .model import Observation, from_sigma
from .sampling import RNG_ALGORITHM_ID, sample, seeded_rng
from .states import mask_bits

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID_MODEL = 2
EXIT_NO_CONVERGENCE = 3


def _load_model(path, strict: bool, max_p):
    sigma, _meta = fileio.read_model(path)
    return from_sigma(sigma, check="strict" if strict else "auto", max_p=max_p)


def _parse_bits(text: str):
    return [int(b) for b in text.replace(",", "")]


def _parse_obs(text: str) -> Observation:
    """Parse "2:1,4:0" (also accepts '=' in place of ':')."""
    assignments = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        sep = ":" if ":" in chunk else "="
        key, _, value = chunk.partition(sep)
        assignments[int(key.lstrip("x"))] = int(value)
    return Observation(assignments)


def _parse_indices(text: str):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _matrix_lines(a: np.ndarray):
    return ["  ".join(f"{v: .6g}" for v in row) for row in np.atleast_2d(a)]


def cmd_validate(args) -> int:
    sigma, _ = fileio.read_model(args.model)
    model = from_sigma(sigma, check="force", max_p=args.max_p)
    p = model.p
    print(f"p: {p}")
    print("means:", "  ".join(f"{model.mean(i):.6g}" for i in range(1, p + 1)))
    cov = np.array([[model.covariance(i, j) for j in range(1, p + 1)]
                    for i in range(1, p + 1)])
    print("covariance:")
    for line in _matrix_lines(cov):
        print(" ", line)
    table = model.joint_table(args.max_p)
    arg = int(np.argmin(table))
    bits = "".join(str(b) for b in mask_bits(arg, p))
    print(f"min joint probability: {table.min():.6e} (state {bits})")
    zeros = np.nonzero(np.abs(table) <= 1e-10)[0]
    if zeros.size:
        states = ", ".join("".join(str(b) for b in mask_bits(int(m), p)) for m in zeros)
        print(f"zero-probability states: {states}")
    if model.validity:
        print("P0 (Lambda - I): pass")
        print("verdict: valid")
        return EXIT_OK
    print(f"P0 (Lambda - I): FAIL, witness subset {set(model.validity.witness)}")
    print("verdict: invalid")
    return EXIT_INVALID_MODEL


def cmd_sample(args) -> int:
    model = _load_model(args.model, args.strict, args.max_p)
    data = sample(model, args.n, seeded_rng(args.seed))
    meta = {
        "seed": str(args.seed),
        "rng": RNG_ALGORITHM_ID,
        "model_hash": fileio.model_hash(model.sigma),
    }
    fileio.write_dataset(args.out, data, meta)
    print(f"wrote {data.n} rows of dimension {data.p} to {args.out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data, _meta = fileio.read_dataset(args.data)
    config = FitConfig(gamma=args.gamma, max_newton_iters=args.max_iters)
    report = fit_map(data, config, max_p=args.max_p)
    print(f"iterations: {report.iterations}")
    print(f"converged: {report.converged} ({report.stop_reason})")
    print(f"final gradient max-norm: {report.final_grad_norm:.3e}")
    print(f"log posterior: {report.log_posterior_trace[-1]:.6f}")
    meta = {"gamma": args.gamma, "iterations": report.iterations,
            "converged": report.converged}
    fileio.write_model(args.out, report.sigma, meta)
    print(f"wrote model to {args.out}")
    return EXIT_OK if report.converged else EXIT_NO_CONVERGENCE


def cmd_query(args) -> int:
    model = _load_model(args.model, args.strict, args.max_p)
    kind = args.kind
    params = {}
    for tok in args.params:
        key, _, value = tok.partition("=")
        params[key] = value
    if kind == "joint":
        bits = _parse_bits(params["x"])
        print(f"{model.joint_prob(bits):.12g}")
    elif kind == "marginal":
        sub = model.marginal(_parse_indices(params["keep"]))
        print(f"p: {sub.p}")
        print("means:", "  ".join(f"{sub.mean(i):.6g}" for i in range(1, sub.p + 1)))
        print("sigma:")
        for line in _matrix_lines(sub.sigma):
            print(" ", line)
    elif kind == "conditional":
        cond, evidence = model.conditional(_parse_obs(params["obs"]))
        print(f"evidence: {evidence:.12g}")
        print(f"p: {cond.p}")
        rest = _parse_obs(params["obs"]).rest(model.p)
        for pos, i in enumerate(rest, start=1):
            print(f"mean x{i}: {cond.mean(pos):.12g}")
    elif kind == "moment":
        print(f"{model.central_moment(_parse_indices(params['r'])):.12g}")
    elif kind == "pcorr":
        obs = _parse_obs(params.get("obs", ""))
        print(f"{model.partial_correlation(int(params['i']), int(params['j']), obs):.12g}")
    elif kind == "entropy":
        print(f"{model.entropy(args.max_p):.12g}")
    else:
        raise ValueError(f"unknown query kind {kind!r}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    model = experiments.reference_model()
    sizes = (_parse_indices(args.n_list) if args.n_list
             else experiments.DEFAULT_SIZES[args.name])
    trials = args.m or experiments.DEFAULT_TRIALS[args.name]
    runner = {
        "statistics": experiments.run_statistics,
        "map-estimates": experiments.run_map_estimates,
        "sigma-estimates": experiments.run_sigma_estimates,
    }[args.name]
    for n in sizes:
        result = runner(model, n, trials, args.seed)
        path = experiments.write_result(result, args.out_dir)
        print(f"N={n}: wrote {len(result.values)} statistics to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grassbin",
        description="Multivariate binary distributions with determinant closed forms.")
    parser.add_argument("--max-p", type=int, default=None,
                        help="override the 2^p enumeration cap")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a model file for positivity")
    v.add_argument("--model", required=True)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("sample", help="draw a dataset from a model")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--strict", action="store_true",
                   help="refuse to sample from an invalid model")
    s.set_defaults(func=cmd_sample)

    f = sub.add_parser("fit", help="MAP-fit a model to a dataset")
    f.add_argument("--data", required=True)
    f.add_argument("--gamma", type=float, default=0.01)
    f.add_argument("--max-iters", type=int, default=100)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    q = sub.add_parser("query", help="evaluate closed-form quantities")
    q.add_argument("--model", required=True)
    q.add_argument("--strict", action="store_true")
    q.add_argument("kind", choices=["joint", "marginal", "conditional",
                                    "moment", "pcorr", "entropy"])
    q.add_argument("params", nargs="*",
                   help="key=value settings, e.g. x=1,0,1 keep=1,3 obs=2:1,4:0 i=1 j=2 r=1,3")
    q.set_defaults(func=cmd_query)

    e = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    e.add_argument("--name", required=True,
                   choices=["statistics", "map-estimates", "sigma-estimates"])
    e.add_argument("--out-dir", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--m", type=int, default=None, help="number of trials")
    e.add_argument("--n", dest="n_list", default=None,
                   help="comma-separated sample sizes (defaults per experiment)")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InvalidModelError as exc:
        print(f"invalid model: {exc}", file=sys.stderr)
        return EXIT_INVALID_MODEL
    except NonPositiveProbabilityError as exc:
        print(f"fit failed: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (GrassbinError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
