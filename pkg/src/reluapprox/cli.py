"""Command-line interface.

Subcommands::

    reluapprox net build KIND ...   construct a network and print/write its JSON
    reluapprox net eval ...         evaluate a stored network at points
    reluapprox net info ...         print shape facts of a stored network
    reluapprox approx ...           build a training-free approximator and measure it
    reluapprox train --config F     SGD with random restarts from a JSON config
    reluapprox bounds ...           evaluate error bounds from flags
    reluapprox experiment --config F  full pipeline with a bound comparison

Exit status is 0 on success, 1 when inputs violate a precondition and 2 on
file errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .algebra import concat_net, identity_net, sum_net
from .approximation import HypercubeDomain, approximate, eps_architecture
from .bounds import (
    VARIANTS,
    BoundInputs,
    generalization_bound,
    log_lemma_check,
    optimization_bound,
    overall_bound,
)
from .constructions import (
    Interp1dSpec,
    MaxConvSpec,
    interp1d_net,
    l1_norm_net,
    max_convolution_net,
    max_net,
)
from .errors import ReluApproxError
from .experiment import ExperimentConfig, repetition_rows, run_experiment
from .network import (
    RECTIFIER,
    ClipBounds,
    ParamVector,
    flatten,
    realize,
    realize_clipped,
    unflatten,
)
from .serialization import (
    network_from_dict,
    network_to_dict,
    params_from_dict,
    params_to_dict,
    read_json,
    write_csv,
    write_json,
)
from .targets import TARGET_FAMILIES, make_target
from .training import (
    FiniteSource,
    SyntheticSource,
    TrainConfig,
    select_best,
    selection_samples,
    sgd_restarts,
)

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_HYPOTHESIS, EXIT_IO = 0, 1, 2
SCHEMA_VERSION = 1


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _points(text: str) -> np.ndarray:
    """Parse ``"x1,x2;y1,y2"`` into a 2-D array with one point per row."""
    return np.array([_floats(chunk) for chunk in text.split(";") if chunk.strip()], dtype=np.float64)


def _emit(obj, out: str | None) -> None:
    text = write_json(obj, out)
    if out is None or out == "-":
        sys.stdout.write(text)


def _add_out(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default=None, help="output file (default: stdout)")


def _load_network_or_params(path: str):
    data = read_json(path)
    if "layers" in data:
        return network_from_dict(data)
    return params_from_dict(data)


# ----------------------------------------------------------------------- net
def _cmd_net_build(args) -> int:
    kind = args.kind
    if kind == "l1-norm":
        net = l1_norm_net(args.d)
    elif kind == "max":
        net = max_net(args.d)
    elif kind == "identity":
        net = identity_net()
    elif kind == "sum":
        net = sum_net(args.m, args.n)
    elif kind == "concat":
        net = concat_net(args.m, args.n)
    elif kind == "max-conv":
        if args.centers is None or args.values is None:
            raise SystemExit("max-conv needs --centers and --values")
        net = max_convolution_net(MaxConvSpec(args.lipschitz, _points(args.centers), _floats(args.values)))
    else:  # interp1d
        if args.values is None:
            raise SystemExit("interp1d needs --values (node values f_0..f_K)")
        values = _floats(args.values)
        resolution = args.A if args.A is not None else len(values) - 1
        net = interp1d_net(Interp1dSpec(args.a, args.b, resolution, values))
    _emit(params_to_dict(flatten(net)) if args.flat else network_to_dict(net), args.out)
    return EXIT_OK


def _cmd_net_eval(args) -> int:
    obj = _load_network_or_params(args.net)
    x = _points(args.x)
    if isinstance(obj, ParamVector):
        bounds = ClipBounds(args.clip[0], args.clip[1]) if args.clip else ClipBounds()
        y = np.atleast_1d(realize_clipped(obj, obj.architecture, bounds, x))
    else:
        y = realize(obj, RECTIFIER, x)
        if args.clip:
            y = np.clip(y, args.clip[0], args.clip[1])
    _emit({"schema_version": SCHEMA_VERSION, "inputs": x, "outputs": y}, args.out)
    return EXIT_OK


def _cmd_net_info(args) -> int:
    obj = _load_network_or_params(args.net)
    if isinstance(obj, ParamVector):
        arch_, sup = obj.architecture, obj.sup_norm()
        net = unflatten(obj, arch_)
    else:
        net = obj
        arch_, sup = net.architecture, net.max_abs_param()
    _emit(
        {
            "schema_version": SCHEMA_VERSION,
            "architecture": list(arch_.dims),
            "depth": arch_.depth,
            "hidden_depth": arch_.hidden_depth,
            "input_dim": arch_.input_dim,
            "output_dim": arch_.output_dim,
            "n_params": arch_.n_params,
            "param_sup_norm": sup,
            "n_layers": net.depth,
        },
        args.out,
    )
    return EXIT_OK


# -------------------------------------------------------------------- approx
def _target_params(args) -> dict:
    params = {}
    for name in ("scale", "frequency", "value"):
        value = getattr(args, name)
        if value is not None:
            params[name] = value
    if args.center is not None:
        params["center"] = _floats(args.center)
    return params


def _cmd_approx(args) -> int:
    domain = HypercubeDomain(args.a, args.b, args.d)
    target = make_target(args.target, domain, **_target_params(args))
    eps_info = None
    architecture = _ints(args.arch) if args.arch else None
    if args.eps is not None:
        eps_info = eps_architecture(args.d, target.lipschitz, args.a, args.b, args.eps)
        resolution = float(eps_info.resolution)
        architecture = architecture or eps_info.architecture.dims
    elif args.A is not None:
        resolution = args.A
    else:
        raise SystemExit("approx needs --A or --eps")
    bounds = None
    if args.u is not None or args.v is not None:
        bounds = ClipBounds(
            -math.inf if args.u is None else args.u, math.inf if args.v is None else args.v
        )
    theta, report = approximate(
        target, domain, resolution, architecture, bounds, args.method, args.points_per_axis
    )
    out = {"schema_version": SCHEMA_VERSION, "kind": "approximation", **report.to_dict()}
    if eps_info is not None:
        out["eps"] = args.eps
        out["eps_architecture"] = eps_info.to_dict()
    if args.params_out:
        write_json(params_to_dict(theta), args.params_out)
    if args.csv:
        if args.d > 2:
            raise SystemExit("CSV output is only available for d <= 2")
        n = args.csv_points
        axis = np.linspace(args.a, args.b, n)
        grid = np.stack([g.ravel() for g in np.meshgrid(*([axis] * args.d), indexing="ij")], axis=1)
        used = bounds
        if used is None:
            used = ClipBounds(target.lower, target.upper) if target.lower < target.upper else ClipBounds()
        net_vals = np.atleast_1d(realize_clipped(theta, theta.architecture, used, grid))
        f_vals = target(grid)
        header = [f"x{i + 1}" for i in range(args.d)] + ["f", "net"]
        write_csv((list(x) + [fv, nv] for x, fv, nv in zip(grid, f_vals, net_vals)), header, args.csv)
    _emit(out, args.out)
    return EXIT_OK


# --------------------------------------------------------------------- train
_TRAIN_KEYS = {
    "architecture", "K", "N", "eligible_steps", "learning_rate", "batch_size", "c", "beta",
    "u", "v", "seed", "target", "target_params", "d", "a", "b", "M", "noise", "data_mode",
}


def _cmd_train(args) -> int:
    cfg = read_json(args.config)
    unknown = set(cfg) - _TRAIN_KEYS
    if unknown:
        raise SystemExit(f"unknown train config fields: {sorted(unknown)}")
    d = int(cfg.get("d", cfg["architecture"][0]))
    domain = HypercubeDomain(cfg.get("a", 0.0), cfg.get("b", 1.0), d)
    target = make_target(cfg.get("target", "abs-dist"), domain, **cfg.get("target_params", {}))
    M = int(cfg.get("M", 100))
    n_steps = int(cfg.get("N", 0))
    config = TrainConfig(
        architecture=tuple(cfg["architecture"]),
        n_restarts=int(cfg.get("K", 1)),
        n_steps=n_steps,
        eligible_steps=tuple(cfg.get("eligible_steps", range(n_steps + 1))),
        learning_rate=cfg.get("learning_rate", 0.0),
        batch_size=cfg.get("batch_size") or M,
        init_radius=float(cfg.get("c", 1.0)),
        selection_radius=cfg.get("beta"),
        bounds=ClipBounds(cfg.get("u", -math.inf), cfg.get("v", math.inf)),
        seed=int(cfg.get("seed", 0)),
    )
    source = SyntheticSource(target, domain, float(cfg.get("noise", 0.0)))
    validation = selection_samples(source, M, config.seed)
    data = FiniteSource(validation, full_batch=cfg.get("batch_size") is None) if cfg.get(
        "data_mode", "fixed") == "fixed" else source
    table = sgd_restarts(config, data)
    result = select_best(table, config, validation)
    final_step = table.eligible_steps[-1]
    report = {
        "schema_version": SCHEMA_VERSION,
        "kind": "train",
        "config": cfg,
        "selection": result.to_dict(),
        "restarts": [
            {"k": k, "final_step": final_step, "final_risk": float(result.risks[k - 1, -1]),
             "eligible": bool(result.eligible_mask[k - 1, -1])}
            for k in range(1, table.n_restarts + 1)
        ],
        "selected_params": params_to_dict(result.params),
    }
    if args.dump_table:
        write_json(
            {
                "eligible_steps": list(table.eligible_steps),
                "arch": list(table.architecture.dims),
                "theta": table.params,
            },
            args.dump_table,
        )
    _emit(report, args.out)
    return EXIT_OK


# -------------------------------------------------------------------- bounds
def _cmd_bounds(args) -> int:
    inputs = BoundInputs(
        architecture=_ints(args.arch),
        M=args.M,
        K=args.K,
        c=args.c,
        d=args.d,
        N=args.N,
        p=args.p,
        beta=args.beta,
        u=args.u,
        v=args.v,
        lipschitz=args.L,
        a=args.a,
        b=args.b,
        resolution=args.A,
    )
    if args.which == "overall":
        out = overall_bound(inputs, args.variant).to_dict()
    elif args.which == "generalization":
        out = {"generalization_bound": generalization_bound(inputs)}
    elif args.which == "optimization":
        out = {"optimization_bound": optimization_bound(inputs)}
    else:
        lhs, rhs = log_lemma_check(args.c, args.M, inputs.beta)
        out = {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs}
    _emit({"schema_version": SCHEMA_VERSION, "kind": f"bound:{args.which}", **out}, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- experiment
def _cmd_experiment(args) -> int:
    config = ExperimentConfig.from_dict(read_json(args.config))
    if args.seed is not None:
        config = ExperimentConfig.from_dict({**config.to_dict(), "seed": args.seed})
    report = run_experiment(config)
    if args.csv:
        header, rows = repetition_rows(report)
        write_csv(rows, header, args.csv)
    _emit(report, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reluapprox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    net = sub.add_parser("net", help="build, evaluate or inspect networks")
    net_sub = net.add_subparsers(dest="net_command", required=True)
    build = net_sub.add_parser("build", help="construct a network")
    build.add_argument("kind", choices=["l1-norm", "max", "identity", "sum", "concat", "max-conv", "interp1d"])
    build.add_argument("--d", type=int, default=2)
    build.add_argument("--m", type=int, default=1)
    build.add_argument("--n", type=int, default=2)
    build.add_argument("--lipschitz", type=float, default=1.0)
    build.add_argument("--centers", help="points separated by ';', coordinates by ','")
    build.add_argument("--values", help="comma-separated values")
    build.add_argument("--a", type=float, default=0.0)
    build.add_argument("--b", type=float, default=1.0)
    build.add_argument("--A", type=float, default=None)
    build.add_argument("--flat", action="store_true", help="write the flat parameter form")
    _add_out(build)
    build.set_defaults(func=_cmd_net_build)
    ev = net_sub.add_parser("eval", help="evaluate a stored network")
    ev.add_argument("--net", required=True)
    ev.add_argument("--x", required=True, help="points separated by ';', coordinates by ','")
    ev.add_argument("--clip", nargs=2, type=float, metavar=("U", "V"))
    _add_out(ev)
    ev.set_defaults(func=_cmd_net_eval)
    info = net_sub.add_parser("info", help="describe a stored network")
    info.add_argument("--net", required=True)
    _add_out(info)
    info.set_defaults(func=_cmd_net_info)

    ap = sub.add_parser("approx", help="training-free approximation of a target")
    ap.add_argument("--target", choices=TARGET_FAMILIES + ("ridge-sin",), default="abs-dist")
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--a", type=float, default=0.0)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--u", type=float, default=None, help="clip lower bound (default: target range)")
    ap.add_argument("--v", type=float, default=None)
    ap.add_argument("--A", type=float, default=None, help="resolution")
    ap.add_argument("--eps", type=float, default=None, help="target accuracy; sets A and the architecture")
    ap.add_argument("--arch", default=None, help="comma-separated architecture")
    ap.add_argument("--method", choices=["grid", "interp1d"], default="grid")
    ap.add_argument("--points-per-axis", type=int, default=None)
    ap.add_argument("--scale", type=float, default=None)
    ap.add_argument("--center", default=None)
    ap.add_argument("--frequency", type=float, default=None)
    ap.add_argument("--value", type=float, default=None)
    ap.add_argument("--csv", default=None, help="write (x, f(x), net(x)) rows, d <= 2")
    ap.add_argument("--csv-points", type=int, default=101)
    ap.add_argument("--params-out", default=None)
    _add_out(ap)
    ap.set_defaults(func=_cmd_approx)

    tr = sub.add_parser("train", help="SGD with random restarts from a JSON config")
    tr.add_argument("--config", required=True)
    tr.add_argument("--dump-table", default=None, help="write every kept iterate")
    _add_out(tr)
    tr.set_defaults(func=_cmd_train)

    bd = sub.add_parser("bounds", help="evaluate error bounds")
    bd.add_argument("--which", choices=["overall", "generalization", "optimization", "log-lemma"], default="overall")
    bd.add_argument("--variant", choices=VARIANTS, default="intro")
    bd.add_argument("--arch", required=True)
    bd.add_argument("--M", type=int, required=True)
    bd.add_argument("--K", type=int, default=1)
    bd.add_argument("--N", type=int, default=0)
    bd.add_argument("--c", type=float, required=True)
    bd.add_argument("--beta", type=float, default=None)
    bd.add_argument("--p", type=float, default=1.0)
    bd.add_argument("--d", type=int, default=None)
    bd.add_argument("--u", type=float, default=0.0)
    bd.add_argument("--v", type=float, default=1.0)
    bd.add_argument("--L", type=float, default=0.0, help="Lipschitz constant of the target")
    bd.add_argument("--a", type=float, default=0.0)
    bd.add_argument("--b", type=float, default=1.0)
    bd.add_argument("--A", type=float, default=None)
    _add_out(bd)
    bd.set_defaults(func=_cmd_bounds)

    ex = sub.add_parser("experiment", help="full pipeline from a JSON config")
    ex.add_argument("--config", required=True)
    ex.add_argument("--seed", type=int, default=None, help="override the master seed")
    ex.add_argument("--csv", default=None, help="per-repetition CSV output")
    _add_out(ex)
    ex.set_defaults(func=_cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ReluApproxError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS


if __name__ == "__main__":
    sys.exit(main())
