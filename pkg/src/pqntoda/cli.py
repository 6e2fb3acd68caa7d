"""Command-line front end: ``verify``, ``flaschka`` and ``simulate``.

Exit codes: 0 when every check passes, 1 on a numerical failure (a failed
check or a blown-up trajectory), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import dynamics, toda
from .diffgeo import jet as J
from .diffgeo.fields import ScalarField, Tensor11Field
from .report import CheckReport

log = logging.getLogger("pqntoda")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator, reproducible across platforms."""
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class VerifyConfig:
    model: str
    n: int
    samples: int = 100
    seed: int = 0
    kmax: int | None = None
    box: float = 1.0
    precision: str = "extended"
    workers: int = 1


@dataclass(frozen=True)
class FlaschkaConfig:
    n: int
    samples: int = 100
    seed: int = 0
    box: float = 1.0
    precision: str = "extended"
    workers: int = 1


@dataclass(frozen=True)
class SimulateConfig:
    model: str
    n: int
    q0: tuple[float, ...] | None = None
    p0: tuple[float, ...] | None = None
    T: float = 10.0
    dt: float = 1e-3
    scheme: str = "leapfrog"
    flow: str = "closed"
    kmax: int | None = None


def cmd_verify(cfg: VerifyConfig) -> CheckReport:
    from .suite import run_model_suite, sample_points

    model = toda.build_model(cfg.model, cfg.n)
    pts = sample_points(make_rng(cfg.seed), cfg.n, cfg.samples, cfg.box)
    recs = run_model_suite(model, pts, cfg.kmax, cfg.precision, cfg.workers)
    opts = {k: v for k, v in asdict(cfg).items() if k not in ("model", "seed", "samples", "workers")}
    opts["kmax"] = cfg.kmax or model.default_kmax()
    return CheckReport("verify", model.id, cfg.seed, cfg.samples, recs, opts)


def cmd_flaschka(cfg: FlaschkaConfig) -> CheckReport:
    from .suite import run_flaschka_suite, sample_points

    pts = sample_points(make_rng(cfg.seed), cfg.n, cfg.samples, cfg.box)
    recs = run_flaschka_suite(cfg.n, pts, cfg.precision, cfg.workers)
    opts = {"n": cfg.n, "box": cfg.box, "precision": cfg.precision}
    return CheckReport("flaschka", f"a1-n{cfg.n}", cfg.seed, cfg.samples, recs, opts)


def _initial_state(cfg: SimulateConfig) -> np.ndarray:
    n = cfg.n
    q = np.zeros(n) if cfg.q0 is None else np.asarray(cfg.q0, float)
    if cfg.p0 is None:
        p = np.zeros(n)
        p[: min(n, 3)] = [0.1, -0.2, 0.1][: min(n, 3)]
    else:
        p = np.asarray(cfg.p0, float)
    if q.shape != (n,) or p.shape != (n,):
        raise ValueError(f"--q0 and --p0 need {n} values each")
    return np.concatenate([q, p])


def cmd_simulate(cfg: SimulateConfig) -> tuple[dynamics.Trajectory, list[dynamics.Drift]]:
    from . import flaschka as F

    model = toda.build_model(cfg.model, cfg.n)
    K = cfg.kmax or model.default_kmax()
    x0 = _initial_state(cfg)
    N_plus = model.deformed(+1).N
    if cfg.flow == "closed":
        traj = dynamics.integrate(model.pi, model.hamiltonian_closed_form, x0, cfg.T, cfg.dt, cfg.scheme)
        return traj, dynamics.conservation_report(traj, N_plus, K)
    # P_1 flow of sum(b) in the Flaschka chart; chain functions read through the q_n = 0 section
    d = 2 * cfg.n
    H = ScalarField(lambda y: sum(y[cfg.n + i] for i in range(cfg.n)), d, "sum_b")
    y0 = np.asarray(F.flaschka_coords(x0), float)
    traj = dynamics.integrate(F.build_P1(cfg.n), H, y0, cfg.T, cfg.dt, cfg.scheme)
    lifted = Tensor11Field(lambda y: N_plus(F.section(y)), d, "N_plus_on_section")
    dynamics.monitor(traj, lifted, K)
    traj.monitored["C"] = np.array([float(J.value(F.casimir(y))) for y in traj.states])
    return traj, dynamics.conservation_report(traj)


# -- argument parsing -------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pqntoda", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="PqN, chain and involutivity checks for one Toda model")
    v.add_argument("model", choices=sorted(toda.MODELS))
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--samples", type=_positive_int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--kmax", type=int, default=None, help="chain length (default 2n)")
    v.add_argument("--box", type=float, default=1.0, help="sample from [-box, box]^{2n}")
    v.add_argument("--precision", choices=["double", "extended"], default="extended",
                   help="working precision for chain identities")
    v.add_argument("--workers", type=_positive_int, default=1)
    v.add_argument("--json", type=Path, default=None, metavar="OUT")

    f = sub.add_parser("flaschka", help="Flaschka reduction and block-identity checks")
    f.add_argument("--n", type=int, required=True)
    f.add_argument("--samples", type=_positive_int, default=100)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--box", type=float, default=1.0)
    f.add_argument("--precision", choices=["double", "extended"], default="extended",
                   help="working precision for the chain identities")
    f.add_argument("--workers", type=_positive_int, default=1)
    f.add_argument("--json", type=Path, default=None, metavar="OUT")

    s = sub.add_parser("simulate", help="integrate a Toda flow and monitor the chain Hamiltonians")
    s.add_argument("model", choices=sorted(toda.MODELS))
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q0", type=_floats, default=None)
    s.add_argument("--p0", type=_floats, default=None)
    s.add_argument("--T", type=float, default=10.0)
    s.add_argument("--dt", type=float, default=1e-3)
    s.add_argument("--scheme", choices=["leapfrog", "rk4"], default="leapfrog")
    s.add_argument("--flow", choices=["closed", "p1"], default="closed",
                   help="closed: canonical flow of the closed energy; p1: P_1 flow in Flaschka chart (a1)")
    s.add_argument("--kmax", type=int, default=None)
    s.add_argument("--csv", type=Path, default=None, metavar="OUT")
    return ap


def _emit(report: CheckReport, out: Path | None) -> int:
    print(report.table())
    if out is not None:
        out.write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK if report.passed else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.n < 2:
        ap.error(f"--n must be >= 2, got {args.n}")
    if getattr(args, "kmax", None) is not None and args.kmax < 2:
        ap.error("--kmax must be >= 2")

    if args.command == "verify":
        cfg = VerifyConfig(args.model, args.n, args.samples, args.seed, args.kmax, args.box,
                           args.precision, args.workers)
        return _emit(cmd_verify(cfg), args.json)

    if args.command == "flaschka":
        cfg = FlaschkaConfig(args.n, args.samples, args.seed, args.box, args.precision, args.workers)
        return _emit(cmd_flaschka(cfg), args.json)

    if args.T < 0 or args.dt <= 0:
        ap.error("need --T >= 0 and --dt > 0")
    if args.flow == "p1":
        if args.model != "a1":
            ap.error("the P_1 flow lives on the Flaschka chart of the a1 lattice")
        if args.scheme == "leapfrog":
            ap.error("leapfrog needs a canonical structure; P_1 flows use --scheme rk4")
    cfg = SimulateConfig(args.model, args.n, args.q0, args.p0, args.T, args.dt, args.scheme,
                         args.flow, args.kmax)
    try:
        x0 = _initial_state(cfg)
    except ValueError as err:
        ap.error(str(err))
    log.debug("initial state %s", x0)
    try:
        traj, drifts = cmd_simulate(cfg)
    except dynamics.BlowUpError as err:
        print(f"blow-up: last valid time {err.last_time:g} ({err})", file=sys.stderr)
        if args.csv is not None:
            err.trajectory.to_csv(args.csv)
        return EXIT_FAIL
    except dynamics.SchemeError as err:
        ap.error(str(err))
    if args.csv is not None:
        traj.to_csv(args.csv)
    print(f"{'function':<8} {'initial':>14} {'max |dev|':>11} {'relative':>11}")
    for d in drifts:
        print(f"{d.name:<8} {d.initial:14.6e} {d.max_abs:11.3e} {d.relative:11.3e}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
