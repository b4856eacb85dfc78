"""Command-line front end: ``dissipative-strip {modes,solve,compare,decay}``."""

import argparse
import copy
import csv
import io
import math
import os
import sys
import tempfile
from dataclasses import dataclass

import numpy as np

from . import scenario as scen
from .decay import build_report, verify_decay
from .fd import FDConfig, solve_fd
from .linear import LinearProblem, solve_forced, solve_homogeneous
from .modal import Params, decay_constants, make_mode, mode_decay_rate
from .nonlinear import MarchConfig, PicardConfig, solve_march, solve_picard
from .sine import synthesize

EXIT_OK, EXIT_FAILED_CHECK, EXIT_CONFIG = 0, 1, 2


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if value is None:
        return ""
    return str(value)


def write_csv(path, header, rows, comments=()):
    """Write atomically: a temporary file in the target directory, then rename."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    write_text(path, buf.getvalue())


def write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass(frozen=True)
class ModesTable:
    p: float
    q: float
    beta: float
    rows: list  # (n, gamma, b, h, omega_sq, regime, decay_rate)

    header = ("n", "gamma", "b", "h", "omega_sq", "regime", "decay_rate")

    def comments(self):
        return [f"p={fmt(self.p)}", f"q={fmt(self.q)}", f"beta={fmt(self.beta)}"]


def modes_table(params: Params, n_max: int) -> ModesTable:
    dc = decay_constants(params)
    rows = []
    for n in range(1, n_max + 1):
        m = make_mode(params, n)
        rows.append((n, m.gamma_n, m.b_n, m.h_n, m.omega_sq, m.regime.value, mode_decay_rate(m)))
    return ModesTable(dc.p, dc.q, dc.beta, rows)


def _stride(n_steps, n_times):
    return max(1, round(n_steps / max(1, n_times - 1)))


def _steps(T, dt):
    return max(1, math.ceil(T / dt - 1e-9))


def run_primary(sc: scen.Scenario, times=None):
    """Run the scenario's own solver (``compare`` runs the spectral side)."""
    num = sc.config["numerics"]
    n_times = sc.config["output"]["n_times"]
    solver = sc.solver if sc.solver != "compare" else ("spectral" if sc.linear else "march")
    if solver == "spectral":
        problem = LinearProblem(sc.params, sc.g0, sc.g1, sc.source.forcing if sc.source else None)
        t = sc.times if times is None else times
        if problem.forcing is None:
            return solve_homogeneous(problem, sc.grid, t, n_modes=num["n_modes"])
        return solve_forced(problem, sc.grid, t, num["quadrature_dt"], n_modes=num["n_modes"])
    if solver == "picard":
        cfg = PicardConfig(num["picard_tol"], num["picard_max_iter"], num["quadrature_dt"], num["n_modes"])
        sol, _ = solve_picard(sc.params, sc.g0, sc.g1, sc.source, sc.grid, sc.T, cfg)
        stride = _stride(sol.times.size - 1, n_times)
        keep = np.unique(np.r_[np.arange(0, sol.times.size, stride), sol.times.size - 1])
        return type(sol)(sol.grid, sol.times[keep], sol.values[keep])
    if solver == "march":
        dt = num["march_dt"] if sc.solver != "compare" else num["fd_dt"]
        stride = _stride(_steps(sc.T, dt), n_times)
        cfg = MarchConfig(dt, num["corrector_iters"], num["n_modes"], output_every=stride)
        return solve_march(sc.params, sc.g0, sc.g1, sc.source, sc.grid, sc.T, cfg)
    if solver == "fd":
        return run_fd(sc)
    raise scen.ConfigError("solver", f"unknown solver {solver!r}")


def run_fd(sc: scen.Scenario):
    num = sc.config["numerics"]
    cfg = FDConfig(sc.grid.m, num["fd_dt"], num["fd_theta"])
    stride = _stride(_steps(sc.T, cfg.dt), sc.config["output"]["n_times"])
    g0 = synthesize(sc.g0, sc.grid)
    g1 = synthesize(sc.g1, sc.grid)
    return solve_fd(sc.params, g0, g1, sc.source, cfg, sc.T, output_every=stride)


def run_compare(sc: scen.Scenario):
    fd = run_fd(sc)
    spectral = run_primary(sc, times=fd.times)
    if spectral.times.shape != fd.times.shape or not np.allclose(spectral.times, fd.times, rtol=0, atol=1e-12):
        raise RuntimeError("spectral and FD output times do not line up")
    disc = np.max(np.abs(spectral.values - fd.values), axis=1)
    rows = list(zip(fd.times, spectral.sup_norms, fd.sup_norms, disc))
    return spectral, fd, rows, float(disc.max())


def _decay_kind(sc):
    spec = sc.config["decay"] or {"scenario": "auto", "window": None}
    kind = spec["scenario"]
    src = sc.config["source"]
    if kind == "auto":
        kind = {"none": "homogeneous", "exp_decay": "exponential", "algebraic": "algebraic"}.get(src["kind"])
        if kind is None:
            raise scen.ConfigError("decay.scenario", f"no decay guarantee is known for source {src['kind']!r}")
    delta = src.get("delta") if src["kind"] == "exp_decay" else None
    alpha = src.get("alpha") if src["kind"] == "algebraic" else None
    if kind == "exponential" and delta is None:
        raise scen.ConfigError("decay.scenario", "exponential check needs an exp_decay source")
    if kind == "algebraic" and alpha is None:
        raise scen.ConfigError("decay.scenario", "algebraic check needs an algebraic source")
    return kind, spec["window"], delta, alpha


def solution_rows(sol):
    x = sol.grid.nodes_with_boundary
    full = sol.with_boundary()
    for k, t in enumerate(sol.times):
        for j, xj in enumerate(x):
            yield (t, xj, full[k, j])


def execute(command, cfg, out_dir, stdout=sys.stdout):
    """Run one validated config; returns the exit status."""
    sc = scen.build(cfg)
    outputs = cfg["output"]
    path = lambda name: os.path.join(out_dir, name)
    write_text(path("scenario.json"), scen.dump(cfg))
    status = EXIT_OK

    if command == "compare" or sc.solver == "compare":
        sol, _, rows, worst = run_compare(sc)
        write_csv(path(outputs["comparison"]), ("t", "sup_spectral", "sup_fd", "discrepancy"), rows)
        tol = cfg["tolerances"]["compare"]
        ok = worst <= tol
        print(f"compare: max discrepancy {worst:.3e} (tol {tol:.1e}) -> {'PASS' if ok else 'FAIL'}", file=stdout)
        status = EXIT_OK if ok else EXIT_FAILED_CHECK
    else:
        sol = run_primary(sc)

    if outputs["solution"]:
        write_csv(path(outputs["solution"]), ("t", "x", "u"), solution_rows(sol))
    write_csv(path(outputs["sup_norms"]), ("t", "sup_norm"), zip(sol.times, sol.sup_norms))

    if command == "decay" or (command == "solve" and cfg["decay"] is not None):
        kind, window, delta, alpha = _decay_kind(sc)
        report = build_report(sol.sup_norms, sol.times, sc.params, kind, window, delta, alpha)
        verdict = verify_decay(report, {kind: cfg["tolerances"][kind]})
        record = report.as_record()
        record.update(passed=verdict.passed, margin=verdict.margin, tolerance=verdict.tolerance,
                      criterion=verdict.criterion)
        write_csv(path(outputs["report"]), ("key", "value"), record.items())
        print(f"decay[{kind}]: margin {verdict.margin:+.4f} (tol {verdict.tolerance}) -> "
              f"{'PASS' if verdict.passed else 'FAIL'}", file=stdout)
        if not verdict.passed:
            status = EXIT_FAILED_CHECK
    return status


def _apply_overrides(cfg, args, command):
    cfg = copy.deepcopy(cfg)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.modes is not None:
        cfg.setdefault("numerics", {})["n_modes"] = args.modes
    if args.tol is not None:
        if command == "compare" or cfg.get("solver") == "compare":
            cfg.setdefault("tolerances", {})["compare"] = args.tol
        elif command == "decay" or (command == "solve" and cfg.get("decay")):
            kind = _decay_kind(scen.build(scen.canonicalize(cfg)))[0]
            cfg.setdefault("tolerances", {})[kind] = args.tol
        else:
            cfg.setdefault("numerics", {})["picard_tol"] = args.tol
    return cfg


def build_parser():
    parser = argparse.ArgumentParser(prog="dissipative-strip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("modes", "tabulate per-mode constants and p, q, beta"),
        ("solve", "run the configured solver and write tables"),
        ("compare", "run spectral and finite-difference solvers and compare"),
        ("decay", "run, fit the asymptotic rate and check it"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory (default: current directory)")
        p.add_argument("--modes", type=int, default=None,
                       help="number of modes (rows for 'modes', spectral truncation otherwise)")
        p.add_argument("--tol", type=float, default=None,
                       help="pass/fail tolerance of the command (Picard tol for 'solve')")
        p.add_argument("--seed", type=int, default=None, help="seed for random data presets")
    return parser


def main(argv=None, stdout=sys.stdout, stderr=sys.stderr):
    args = build_parser().parse_args(argv)
    out_dir = args.out or os.getcwd()
    try:
        raw = scen.read_raw(args.config)
        if args.command == "modes":
            cfg = scen.canonicalize(raw)
            p = cfg["params"]
            table = modes_table(Params(p["epsilon"], p["a"], p["c"], p["ell"]), args.modes or 10)
            for line in table.comments():
                print(f"# {line}", file=stdout)
            print(",".join(table.header), file=stdout)
            for row in table.rows:
                print(",".join(fmt(v) for v in row), file=stdout)
            if args.out:
                write_csv(os.path.join(out_dir, "modes.csv"), table.header, table.rows, table.comments())
            return EXIT_OK
        cfg = scen.canonicalize(_apply_overrides(raw, args, args.command))
        return execute(args.command, cfg, out_dir, stdout)
    except scen.ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
