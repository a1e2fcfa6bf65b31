"""
Command-line entry point.

    dlsq run      PROBLEM [flags]   simulate, write metrics.csv / final_states.json
    dlsq check    PROBLEM [flags]   report the convergence conditions
    dlsq analyze  PROBLEM [flags]   spectral certification, write spectrum.json

PROBLEM is a JSON problem file or the name of a shipped fixture
(``five_agents``). Exit codes: 0 success; 1 invalid input or failed
check; for ``run`` 2 when max rounds were exhausted and 3 on divergence.
"""

from __future__ import annotations

import argparse
import io
import csv
import json
import logging
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import analysis, network, problem, simulator
from .agent import Hyperparams
from .problemfile import ProblemFileError, load, write_atomic
from .svgplot import semilog_svg

log = logging.getLogger("dlsq")

EXIT_OK, EXIT_ERROR, EXIT_MAX_ROUNDS, EXIT_DIVERGED = 0, 1, 2, 3
_RUN_EXIT = {"tolerance": EXIT_OK, "max_rounds": EXIT_MAX_ROUNDS, "diverged": EXIT_DIVERGED}


@dataclass(frozen=True)
class RunArtifacts:
    metrics: str
    final_states: str
    plot: str | None = None
    report: str | None = None


def _fmt(v):
    return repr(float(v))


def metrics_csv(traj):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "W", "consensus_spread", "normal_eq_residual"])
    for r in traj.records:
        w.writerow([r.t, _fmt(r.W), _fmt(r.spread), _fmt(r.normal_residual)])
    return buf.getvalue()


def _apply_flags(pf, args):
    changes = {}
    for flag, key in [("c", "c"), ("cbar", "cbar"), ("max_rounds", "max_rounds"), ("tol", "tol"),
                      ("seed", "seed"), ("init", "init"), ("record_every", "record_every")]:
        v = getattr(args, flag, None)
        if v is not None:
            changes[key] = v
    if getattr(args, "gains", None) is not None:
        if args.gains == "default":
            changes["gains"] = "default"
        else:
            with open(args.gains, encoding="utf-8") as fh:
                changes["gains"] = json.load(fh)
    return pf.with_params(**changes) if changes else pf


def _setup(pf):
    net = pf.network()
    gains = pf.gains(net)
    hp = Hyperparams(c=pf.params.c, cbar=pf.params.cbar)
    return net, gains, hp


def cmd_run(pf, out=".", plot=False):
    """Simulate; returns ``(exit_code, RunArtifacts)``."""
    net, gains, hp = _setup(pf)
    p = pf.params
    cfg = simulator.RunConfig(max_rounds=p.max_rounds, tol=p.tol, record_every=p.record_every,
                              init=p.init, rng_seed=p.seed)
    traj = simulator.run(net, gains, hp, pf.blocks, cfg)
    sys_ = problem.assemble(pf.blocks)

    os.makedirs(out, exist_ok=True)
    metrics_path = os.path.join(out, "metrics.csv")
    write_atomic(metrics_path, metrics_csv(traj))

    xbar = traj.final_mean
    final = {
        "reason": traj.reason,
        "rounds": traj.rounds,
        "W": traj.records[-1].W,
        "gains": gains.kappa.tolist(),
        "c": hp.c,
        "cbar": hp.cbar,
        "mean_x": xbar.tolist(),
        "is_lsq_solution": problem.is_lsq_solution(sys_, xbar, 1e-8),
        "agents": [{"index": i + 1, "x": s.x.tolist(), "z": s.z.tolist()}
                   for i, s in enumerate(traj.final_states)],
    }
    states_path = os.path.join(out, "final_states.json")
    write_atomic(states_path, json.dumps(final, indent=2) + "\n")

    plot_path = None
    if plot:
        plot_path = os.path.join(out, "convergence.svg")
        label = f"c={hp.c:g}, cbar={hp.cbar:g}"
        write_atomic(plot_path, semilog_svg([(label, traj.t, traj.W)], title="W(t)"))

    print(f"{traj.reason} after {traj.rounds} rounds, W = {traj.records[-1].W:.3e}, "
          f"spread = {traj.records[-1].spread:.3e}")
    return _RUN_EXIT[traj.reason], RunArtifacts(metrics_path, states_path, plot_path)


def cmd_check(pf):
    """Print the convergence-condition report; returns an exit code."""
    net, gains, hp = _setup(pf)
    verdict = network.check_gain_condition(net, gains)
    degenerate = network.check_degenerate_direction(net, gains, pf.blocks)
    lsq = problem.lsq_oracle(problem.assemble(pf.blocks))
    need_c = degenerate.exists
    ok = verdict.passed and (not need_c or hp.c > 0)
    print(f"agents: {net.m}, unknowns: {pf.blocks[0].n}")
    print("connected: yes")
    print(f"gains: {', '.join(f'{k:.6g}' for k in gains.kappa)}")
    print(f"DKD - WKW >= 0: {'pass' if verdict.passed else 'FAIL'} "
          f"(min eigenvalue {verdict.min_eigenvalue:.6e})")
    print(f"degenerate direction: {'exists, c > 0 required' if need_c else 'none'}"
          f" (c = {hp.c:g})")
    print(f"dim ker A: {lsq.kernel_dim}")
    print(f"convergence conditions: {'hold' if ok else 'DO NOT HOLD'}")
    return EXIT_OK if ok else EXIT_ERROR


def analyze(pf):
    net, gains, hp = _setup(pf)
    gs = analysis.build_global(net, gains, hp, pf.blocks)
    rep = analysis.spectral_report(gs, net, gains, pf.blocks)
    pen = analysis.pencil_check(analysis.build_pencil(gs), gs)
    order = np.argsort(-np.abs(rep.eigenvalues), kind="stable")
    return {
        "c": hp.c,
        "cbar": hp.cbar,
        "dimension": gs.dim,
        "eigenvalues": [{"re": float(l.real), "im": float(l.imag), "abs": float(abs(l))}
                        for l in rep.eigenvalues[order]],
        "max_magnitude": rep.max_magnitude,
        "min_distance_to_minus_one": rep.min_dist_to_minus_one,
        "unit_eigenvalue": {"algebraic": rep.unit_algebraic, "geometric": rep.unit_geometric,
                            "expected": rep.unit_expected, "dim_ker_A": rep.kernel_dim},
        "verdicts": dict(rep.verdicts),
        "pencil": {"passed": pen.passed, "min_eig_M2": pen.min_eig_M2,
                   "min_eig_M0": pen.min_eig_M0, "min_eig_M_minus_one": pen.min_eig_M_minus_one,
                   "max_residual": pen.max_pencil_residual,
                   "max_reconstruction_residual": pen.max_reconstruction_residual,
                   "eigenvectors_checked": pen.checked, "violations": pen.violations},
        "passed": rep.passed and pen.passed,
    }


def cmd_analyze(pf, out="."):
    """Write ``spectrum.json``; returns ``(exit_code, path)``."""
    report = analyze(pf)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "spectrum.json")
    write_atomic(path, json.dumps(report, indent=2) + "\n")
    u = report["unit_eigenvalue"]
    print(f"spectral radius {report['max_magnitude']:.12f}, "
          f"min |lambda + 1| = {report['min_distance_to_minus_one']:.4f}")
    print(f"eigenvalue 1: algebraic {u['algebraic']}, geometric {u['geometric']}, "
          f"expected {u['expected']} (n + dim ker A)")
    for name, ok in report["verdicts"].items():
        print(f"  {name}: {'pass' if ok else 'FAIL'}")
    print(f"  pencil: {'pass' if report['pencil']['passed'] else 'FAIL'}")
    return (EXIT_OK if report["passed"] else EXIT_ERROR), path


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem JSON file or fixture name")
    common.add_argument("--c", type=float)
    common.add_argument("--cbar", type=float)
    common.add_argument("--gains", help="'default' (1/d_i) or a JSON file with a list of gains")
    common.add_argument("--max-rounds", dest="max_rounds", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--init", choices=["zeros", "random"])
    common.add_argument("--record-every", dest="record_every", type=int)
    common.add_argument("--plot", action="store_true", help="also write convergence.svg")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="dlsq", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the distributed update")
    sub.add_parser("check", parents=[common], help="check convergence conditions")
    sub.add_parser("analyze", parents=[common], help="spectral analysis of the iteration")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        pf = _apply_flags(load(args.problem), args)
        if args.command == "run":
            code, _ = cmd_run(pf, args.out, args.plot)
        elif args.command == "check":
            code = cmd_check(pf)
        else:
            code, _ = cmd_analyze(pf, args.out)
    except (ProblemFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
