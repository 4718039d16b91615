"""Command-line front end.

    gcde-adjoint forward   --graph g.txt --features h0.txt --weights w.txt --out run/
    gcde-adjoint gradcheck --graph g.txt --features h0.txt --weights w.txt --targets y.txt
    gcde-adjoint jacobian  --graph g.txt --features h0.txt --weights w.txt --out run/
    gcde-adjoint train     --graph g.txt --features h0.txt --targets y.txt --epochs 500 --out run/

Settings may also come from ``--config file`` (``key = value`` lines, keys as
the long flag names). Flags override the file. Exit codes: 0 ok, 1 usage or
parse error, 2 divergence, 3 kink warning, 4 oracle size guard, 5 gradient
check above tolerance.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import DivergenceError, OracleSizeError, ShapeError, ValidationError
from .io import (
    ParseError,
    load_graph,
    read_config,
    read_matrix,
    resolve,
    write_loss_history,
    write_matrix,
)
from .jacobian import (
    MAX_ORACLE_DIM,
    check_oracle_size,
    gcde_jacobian_wrt_state,
    gcde_jacobian_wrt_weights,
)
from .ode import BackwardMode, GcdeModel, SolverConfig, integrate_forward
from .training import Dataset, TrainConfig, fit, grad_check

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DIVERGED = 2
EXIT_KINK = 3
EXIT_ORACLE_GUARD = 4
EXIT_GRADCHECK_FAILED = 5

GRADCHECK_TOL = 1e-4

_DEFAULTS = {
    "t0": "0.0",
    "t1": "1.0",
    "solver": "rk4",
    "steps": "100",
    "lr": "0.5",
    "epochs": "100",
    "seed": "0",
    "eps": "1e-5",
    "mode": "stored",
    "out": ".",
}
_PATH_KEYS = ("graph", "features", "weights", "targets", "out")
_KEYS = set(_DEFAULTS) | set(_PATH_KEYS)


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    graph: Path
    features: Path
    weights: Path
    targets: Path
    t0: float
    t1: float
    solver: SolverConfig
    lr: float
    epochs: int
    seed: int
    eps: float
    mode: BackwardMode
    out: Path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="gcde-adjoint", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file")
    common.add_argument("--graph", help="graph file")
    common.add_argument("--features", help="initial node features H(t0), matrix file")
    common.add_argument("--weights", help="weight matrix W, matrix file")
    common.add_argument("--targets", help="regression targets at t1, matrix file")
    common.add_argument("--t0")
    common.add_argument("--t1")
    common.add_argument("--solver", choices=["euler", "rk4"])
    common.add_argument("--steps")
    common.add_argument("--lr")
    common.add_argument("--epochs")
    common.add_argument("--seed")
    common.add_argument("--eps")
    common.add_argument("--mode", choices=["stored", "augmented"],
                        help="backward pass state supply")
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    fwd = sub.add_parser("forward", parents=[common], help="integrate H from t0 to t1")
    fwd.add_argument("--trajectory", action="store_true", help="also write every grid state")
    sub.add_parser("gradcheck", parents=[common], help="adjoint dL/dW vs finite differences")
    sub.add_parser("jacobian", parents=[common], help="dump dense Jacobians at H(t0)")
    sub.add_parser("train", parents=[common], help="gradient descent on W")
    return parser


def _merge(args):
    settings = dict(_DEFAULTS)
    base = Path.cwd()
    if args.config:
        cfg_path = Path(args.config)
        file_settings = read_config(cfg_path)
        unknown = set(file_settings) - _KEYS
        if unknown:
            raise UsageError(f"{cfg_path}: unknown keys {sorted(unknown)}")
        for key, value in file_settings.items():
            settings[key] = str(resolve(cfg_path.parent, value)) if key in _PATH_KEYS else value
    for key in _KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for key in _PATH_KEYS:
        if settings.get(key) is not None:
            settings[key] = resolve(base, settings[key])
    return settings


def _number(settings, key, kind):
    try:
        return kind(settings[key])
    except ValueError:
        raise UsageError(f"invalid value for {key}: {settings[key]!r}") from None


def run_config(args):
    s = _merge(args)
    for key in ("graph", "features", "weights", "targets"):
        path = s.get(key)
        if path is not None and not path.is_file():
            raise UsageError(f"{key} file not found: {path}")
    t0, t1 = _number(s, "t0", float), _number(s, "t1", float)
    if not t1 > t0:
        raise UsageError(f"t1 must exceed t0 (got t0={t0}, t1={t1})")
    eps = _number(s, "eps", float)
    if not eps > 0:
        raise UsageError(f"eps must be positive, got {eps}")
    return RunConfig(
        graph=s.get("graph"), features=s.get("features"), weights=s.get("weights"),
        targets=s.get("targets"), t0=t0, t1=t1,
        solver=SolverConfig(s["solver"], _number(s, "steps", int)),
        lr=_number(s, "lr", float), epochs=_number(s, "epochs", int),
        seed=_number(s, "seed", int), eps=eps, mode=BackwardMode(s["mode"]),
        out=s["out"],
    )


def _require(cfg, *keys):
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise UsageError("missing required input(s): " + ", ".join(f"--{k}" for k in missing))


def _model_and_features(cfg, weights=None):
    a = load_graph(cfg.graph)
    h0 = read_matrix(cfg.features)
    if weights is None:
        weights = read_matrix(cfg.weights)
    return GcdeModel(a, weights, cfg.t0, cfg.t1), h0


def cmd_forward(cfg, trajectory=False):
    _require(cfg, "graph", "features", "weights")
    model, h0 = _model_and_features(cfg)
    traj = integrate_forward(model, h0, cfg.solver)
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_matrix(cfg.out / "h_t1.txt", traj.final, comment=f"H(t1), t1 = {cfg.t1!r}")
    if trajectory:
        tdir = cfg.out / "trajectory"
        tdir.mkdir(exist_ok=True)
        write_matrix(tdir / "times.txt", traj.times[:, None])
        for k, state in enumerate(traj.states):
            write_matrix(tdir / f"h_{k:05d}.txt", state)
    print(f"wrote {cfg.out / 'h_t1.txt'} ({traj.final.shape[0]} x {traj.final.shape[1]})")
    return EXIT_OK


def cmd_gradcheck(cfg):
    _require(cfg, "graph", "features", "weights", "targets")
    model, h0 = _model_and_features(cfg)
    ds = Dataset(h0, read_matrix(cfg.targets))
    report = grad_check(model, ds, cfg.solver, eps=cfg.eps, mode=cfg.mode)
    print(report.summary())
    if report.kink_warning:
        print("kink warning: pre-activations too close to zero for a reliable check",
              file=sys.stderr)
        return EXIT_KINK
    if report.norm_rel_err > GRADCHECK_TOL:
        print(f"gradient check failed: norm_rel_err > {GRADCHECK_TOL:g}", file=sys.stderr)
        return EXIT_GRADCHECK_FAILED
    return EXIT_OK


def cmd_jacobian(cfg):
    _require(cfg, "graph", "features", "weights")
    model, h0 = _model_and_features(cfg)
    h0 = model.check_state(h0, "features")
    n_nodes, c = h0.shape
    if n_nodes * c > MAX_ORACLE_DIM:
        raise OracleSizeError(
            f"N*C = {n_nodes * c} exceeds the dense Jacobian guard of {MAX_ORACLE_DIM}"
        )
    check_oracle_size(n_nodes * c, c * c)
    j_state = gcde_jacobian_wrt_state(model.adjacency, model.weights, h0)
    j_weights = gcde_jacobian_wrt_weights(model.adjacency, h0, model.weights)
    cfg.out.mkdir(parents=True, exist_ok=True)
    conv = "rows: output ReLU(AHW) unrolled by rows; columns: input unrolled by columns"
    write_matrix(cfg.out / "jacobian_state.txt", j_state.inner, comment="d f / d H\n" + conv)
    write_matrix(cfg.out / "jacobian_weights.txt", j_weights.inner, comment="d f / d W\n" + conv)
    print(f"jacobian_state   {j_state.inner.shape[0]} x {j_state.inner.shape[1]}")
    print(f"jacobian_weights {j_weights.inner.shape[0]} x {j_weights.inner.shape[1]}")
    return EXIT_OK


def cmd_train(cfg):
    _require(cfg, "graph", "features", "targets")
    h0 = read_matrix(cfg.features)
    if cfg.weights is not None:
        w0 = read_matrix(cfg.weights)
    else:
        c = h0.shape[1]
        w0 = np.random.default_rng(cfg.seed).normal(scale=1.0 / np.sqrt(c), size=(c, c))
    model, h0 = _model_and_features(cfg, weights=w0)
    ds = Dataset(h0, read_matrix(cfg.targets))
    tc = TrainConfig(cfg.lr, cfg.epochs, cfg.solver, cfg.seed)
    cfg.out.mkdir(parents=True, exist_ok=True)
    try:
        trained, history = fit(model, ds, tc, cfg.mode)
    except DivergenceError as exc:
        write_loss_history(cfg.out / "loss_history.txt", getattr(exc, "history", []))
        raise
    write_matrix(cfg.out / "weights.txt", trained.weights)
    write_loss_history(cfg.out / "loss_history.txt", history)
    print(f"epochs {len(history)}  initial loss {history[0]:.6e}  final loss {history[-1]:.6e}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = run_config(args)
        if args.command == "forward":
            return cmd_forward(cfg, trajectory=args.trajectory)
        if args.command == "gradcheck":
            return cmd_gradcheck(cfg)
        if args.command == "jacobian":
            return cmd_jacobian(cfg)
        return cmd_train(cfg)
    except OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE_GUARD
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (UsageError, ParseError, ShapeError, ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
