"""Command-line front end: simulations, scans, figure presets, and CSV/JSONL
serialization of trajectories and tables.

Exit codes: 0 success, 1 argument/validation error, 2 numerical failure.
Output is plain text (no color; NO_COLOR needs no special handling).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    InsufficientCyclesError,
    measure_period,
    period_scan,
    phase_portrait,
)
from .integrator import IntegrationError, IntegratorConfig, Trajectory, integrate
from .model import SpinorPair, SystemParams, find_stationary, norm_sq
from .reduced import (
    ReducedParams,
    ReducedState,
    Regime,
    analytic_period,
    classify_regime,
    integrate_reduced,
)
from .wellmodes import (
    CouplingConstants1D,
    DoubleWellPotential,
    Grid1D,
    lowest_modes,
    tunnelling_integral,
    well_parameters,
)


class CliError(Exception):
    """Argument or validation error (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


# ---------------------------------------------------------------------------
# serialization

FLOAT_FMT = "%.16e"  # 17 significant digits

TRAJECTORY_COLUMNS = (
    "t",
    "re_xi_p", "im_xi_p", "re_xi_0", "im_xi_0", "re_xi_m", "im_xi_m",
    "re_eta_p", "im_eta_p", "re_eta_0", "im_eta_0", "re_eta_m", "im_eta_m",
    "M_left", "M_right", "n0_left",
    "R_plus", "R_minus", "I_plus", "I_minus", "R0", "I0", "theta",
    "energy", "total_norm", "total_Fz",
)


def trajectory_table(traj: Trajectory, extra: tuple[str, ...] = ()) -> dict[str, np.ndarray]:
    amps = traj.amplitudes
    cols: dict[str, np.ndarray] = {"t": traj.times}
    names = ("xi_p", "xi_0", "xi_m", "eta_p", "eta_0", "eta_m")
    for i, name in enumerate(names):
        cols[f"re_{name}"] = amps[:, i].real
        cols[f"im_{name}"] = amps[:, i].imag
    for name in TRAJECTORY_COLUMNS[13:]:
        cols[name] = traj.column(name)
    for name in extra:
        cols[name] = traj.column(name)
    return cols


def param_header(params: SystemParams) -> list[str]:
    return [
        f"eps_left = {params.eps_left!r}",
        f"eps_right = {params.eps_right!r}",
        f"lambda_s_left = {params.lambda_s_left!r}",
        f"lambda_s_right = {params.lambda_s_right!r}",
        f"lambda_a_left = {params.lambda_a_left!r}",
        f"lambda_a_right = {params.lambda_a_right!r}",
        f"j = {params.j!r}",
    ]


def write_table(path, header_lines: list[str], columns: dict[str, np.ndarray], fmt: str = "csv"):
    path = Path(path)
    names = list(columns)
    header = [f"spinwell {__version__}", *header_lines]
    if fmt == "csv":
        with open(path, "w") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            fh.write("# columns: " + ",".join(names) + "\n")
            data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
            np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")
    elif fmt == "jsonl":
        with open(path, "w") as fh:
            fh.write(json.dumps({"_header": header, "_columns": names}) + "\n")
            arrays = [np.asarray(columns[n], dtype=float) for n in names]
            for row in zip(*arrays):
                fh.write(json.dumps(dict(zip(names, (float(v) for v in row)))) + "\n")
    else:
        raise CliError(f"unknown output format {fmt!r} (expected csv or jsonl)")


def read_table(path) -> tuple[list[str], dict[str, str], np.ndarray]:
    """Read a data file written by write_table: (column names, header map, data)."""
    names: list[str] = []
    header: dict[str, str] = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            body = line[1:].strip()
            if body.startswith("columns:"):
                names = [t.strip() for t in body[len("columns:"):].split(",")]
            elif "=" in body:
                key, _, value = body.partition("=")
                header[key.strip()] = value.strip()
    if not names:
        raise CliError(f"{path}: missing '# columns:' header line")
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if data.shape[1] != len(names):
        raise CliError(f"{path}: {data.shape[1]} data columns vs {len(names)} names")
    return names, header, data


def read_scan_csv(path) -> list["ScanRow"]:
    """Read a scan table (j, ratio, tau_analytic, tau_measured, status)."""
    from .analysis import ScanRow

    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            j, ratio, tau_a, tau_m, status = line.rstrip("\n").split(",", 4)
            rows.append(ScanRow(float(j), float(ratio), float(tau_a), float(tau_m), status))
    return rows


def read_trajectory_csv(path) -> Trajectory:
    """Rebuild a Trajectory from a CSV produced by the simulate/figure commands."""
    names, header, data = read_table(path)
    required = TRAJECTORY_COLUMNS[:13]
    col = {n: i for i, n in enumerate(names)}
    missing = [n for n in required if n not in col]
    if missing:
        raise CliError(f"{path}: not a trajectory file (missing columns {missing})")
    try:
        params = SystemParams(
            eps_left=float(header["eps_left"]),
            eps_right=float(header["eps_right"]),
            lambda_s_left=float(header["lambda_s_left"]),
            lambda_s_right=float(header["lambda_s_right"]),
            lambda_a_left=float(header["lambda_a_left"]),
            lambda_a_right=float(header["lambda_a_right"]),
            j=float(header["j"]),
        )
    except KeyError as exc:
        raise CliError(f"{path}: header lacks system parameter {exc}") from None
    times = data[:, col["t"]]
    amps = np.empty((len(times), 6), dtype=complex)
    for i, name in enumerate(("xi_p", "xi_0", "xi_m", "eta_p", "eta_0", "eta_m")):
        amps[:, i] = data[:, col[f"re_{name}"]] + 1j * data[:, col[f"im_{name}"]]
    return Trajectory(times=times, amplitudes=amps, params=params)


def maybe_plot(svg_path, x, series: dict[str, np.ndarray], xlabel: str, title: str):
    """Best-effort SVG line chart; failures never affect the exit code."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 4))
        for label, y in series.items():
            ax.plot(x, y, label=label, lw=0.9)
        ax.set_xlabel(xlabel)
        ax.set_title(title)
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        fig.savefig(svg_path)
        plt.close(fig)
    except Exception as exc:  # plotting is never load-bearing
        print(f"plotting skipped: {exc}", file=sys.stderr)


# ---------------------------------------------------------------------------
# shared argument handling

def parse_init(text: str) -> SpinorPair:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 12:
        raise CliError(
            f"--init expects 12 comma-separated reals (re/im pairs for the six"
            f" amplitudes), got {len(parts)}"
        )
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise CliError(f"--init: {exc}") from None
    y = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    pair = SpinorPair(y[:3], y[3:])
    for name, f in (("left", pair.left), ("right", pair.right)):
        n = norm_sq(f)
        if abs(n - 1.0) > 1e-9:
            raise CliError(
                f"initial {name} spinor is not normalized: |f|^2 = {n!r}"
                " (must equal 1 within 1e-9)"
            )
    return pair


def symmetric_params(args) -> SystemParams:
    return SystemParams.symmetric(args.eps, args.lambda_s, args.lambda_a, args.j)


def add_system_args(p: argparse.ArgumentParser, require_j: bool = True):
    p.add_argument("--j", type=float, required=require_j, help="tunnelling coefficient J")
    p.add_argument("--lambda-a", type=float, default=-0.01, help="spin-asymmetric interaction")
    p.add_argument("--lambda-s", type=float, default=1.0, help="spin-symmetric interaction")
    p.add_argument("--eps", type=float, default=1.0, help="on-site energy")


def add_integration_args(p: argparse.ArgumentParser):
    p.add_argument("--tmax", type=float, help="integration time (dimensionless)")
    p.add_argument("--sample-dt", type=float, default=0.5, help="output grid spacing")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)


def add_output_args(p: argparse.ArgumentParser, default_out: str):
    p.add_argument("--out", default=default_out, help="output file path")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="output format")
    p.add_argument("--plot", metavar="SVG", help="also write a best-effort SVG chart")


def apply_config_file(args: argparse.Namespace, argv: list[str]):
    """Flat key=value file; explicit command-line flags take precedence."""
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    if not path.exists():
        raise CliError(f"config file not found: {path}")
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if not hasattr(args, key):
            raise CliError(f"{path}:{lineno}: unknown option {key!r}")
        if f"--{key.replace('_', '-')}" in argv:
            continue  # explicit flag wins
        current = getattr(args, key)
        if isinstance(current, bool):
            setattr(args, key, value.lower() in ("1", "true", "yes", "on"))
        elif isinstance(current, int) and not isinstance(current, bool):
            setattr(args, key, int(value))
        elif isinstance(current, float):
            setattr(args, key, float(value))
        else:
            setattr(args, key, value)


# ---------------------------------------------------------------------------
# subcommands

def cmd_simulate(args, argv) -> int:
    params = symmetric_params(args)
    state0 = parse_init(args.init)
    if args.tmax is None:
        raise CliError("--tmax is required for simulate")
    cfg = IntegratorConfig(
        t_max=args.tmax, sample_dt=args.sample_dt, rtol=args.rtol, atol=args.atol
    )
    traj = integrate(state0, params, cfg)
    header = [
        "subcommand: simulate",
        *param_header(params),
        f"init = {args.init}",
        f"t_max = {args.tmax!r}",
        f"sample_dt = {args.sample_dt!r}",
        f"rtol = {args.rtol!r}",
        f"atol = {args.atol!r}",
    ]
    write_table(args.out, header, trajectory_table(traj), args.format)
    if args.plot:
        maybe_plot(
            args.plot,
            traj.times,
            {"M_left": traj.column("M_left"), "M_right": traj.column("M_right")},
            "t",
            f"J={args.j}, lambda_a={args.lambda_a}",
        )
    print(summary_line(traj, args.j, args.lambda_a))
    return 0


def summary_line(traj: Trajectory, j: float, lambda_a: float) -> str:
    try:
        regime = classify_regime(ReducedParams(j, lambda_a)).value
    except ValueError:
        regime = "n/a"
    try:
        period = f"{measure_period(traj, 'M_left').period:.6g}"
    except (InsufficientCyclesError, ValueError):
        period = "n/a"
    drift = max(traj.ledger_drift().values())
    return f"regime={regime} measured_period={period} max_conserved_drift={drift:.3e}"


def cmd_reduced(args, argv) -> int:
    p = ReducedParams(args.j, args.lambda_a)
    s0 = ReducedState(args.m0, args.r0, args.i0)
    if args.tmax is None:
        raise CliError("--tmax is required for reduced")
    traj = integrate_reduced(s0, p, args.tmax, args.sample_dt, args.rtol, args.atol)
    header = [
        "subcommand: reduced",
        f"j = {args.j!r}",
        f"lambda_a = {args.lambda_a!r}",
        f"m0 = {args.m0!r}", f"r0 = {args.r0!r}", f"i0 = {args.i0!r}",
        f"t_max = {args.tmax!r}", f"sample_dt = {args.sample_dt!r}",
    ]
    cols = {
        "t": traj.times, "M": traj.m, "R0": traj.r0, "I0": traj.i0,
        "theta": traj.theta, "C": traj.conserved,
    }
    write_table(args.out, header, cols, args.format)
    if args.plot:
        maybe_plot(args.plot, traj.times, {"M": traj.m, "R0": traj.r0, "I0": traj.i0},
                   "t", f"reduced J={args.j}, lambda_a={args.lambda_a}")
    drift = float(np.max(np.abs(traj.conserved - traj.conserved[0])))
    try:
        regime = classify_regime(p).value
    except ValueError:
        regime = "Critical"
    print(f"regime={regime} conserved_drift={drift:.3e}")
    return 0


def cmd_period(args, argv) -> int:
    if args.from_csv:
        traj = read_trajectory_csv(args.from_csv)
        est = measure_period(traj, args.observable)
        print(
            f"measured_period={est.period!r} method={est.method.value}"
            f" n_cycles={est.n_cycles_used} uncertainty={est.uncertainty!r}"
        )
        return 0
    if args.j is None:
        raise CliError("period needs --j (and --lambda-a) or --from-csv FILE")
    p = ReducedParams(args.j, args.lambda_a)
    regime = classify_regime(p)
    if regime is Regime.CRITICAL:
        print("regime=Critical analytic_period=inf (homoclinic orbit)")
        return 0
    tau = analytic_period(p)
    print(f"regime={regime.value} analytic_period={tau:.6f}")
    return 0


def cmd_scan(args, argv) -> int:
    try:
        j_values = [float(tok) for tok in args.j_values.split(",") if tok.strip()]
    except ValueError as exc:
        raise CliError(f"--j-values: {exc}") from None
    if not j_values:
        raise CliError("--j-values is empty")
    try:
        rows = period_scan(
            j_values,
            args.lambda_a,
            eps=args.eps,
            lambda_s=args.lambda_s,
            jobs=args.jobs,
            rtol=args.rtol,
            atol=args.atol,
        )
    except ValueError as exc:
        raise CliError(str(exc)) from None
    header = [
        "subcommand: scan",
        f"lambda_a = {args.lambda_a!r}",
        f"eps = {args.eps!r}", f"lambda_s = {args.lambda_s!r}",
        f"j_values = {args.j_values}",
        "columns: j,ratio,tau_analytic,tau_measured,status",
    ]
    with open(args.out, "w") as fh:
        fh.write(f"# spinwell {__version__}\n")
        for line in header:
            fh.write(f"# {line}\n")
        fh.write("# columns: j,ratio,tau_analytic,tau_measured,status\n")
        for r in rows:
            fh.write(
                f"{FLOAT_FMT % r.j},{FLOAT_FMT % r.ratio},{FLOAT_FMT % r.tau_analytic},"
                f"{FLOAT_FMT % r.tau_measured},{r.status}\n"
            )
    n_fail = sum(1 for r in rows if r.status != "ok")
    print(f"scan: {len(rows)} points, {n_fail} failures -> {args.out}")
    return 0 if n_fail == 0 else 2


def cmd_portrait(args, argv) -> int:
    if args.from_csv:
        traj = read_trajectory_csv(args.from_csv)
        params_header = param_header(traj.params)
    else:
        if args.j is None or args.tmax is None:
            raise CliError("portrait needs --from-csv FILE or --j/--tmax run options")
        params = symmetric_params(args)
        state0 = parse_init(args.init)
        cfg = IntegratorConfig(
            t_max=args.tmax, sample_dt=args.sample_dt, rtol=args.rtol, atol=args.atol
        )
        traj = integrate(state0, params, cfg)
        params_header = param_header(params)
    pts = phase_portrait(traj)
    header = ["subcommand: portrait", *params_header]
    cols = {"t": traj.times, "theta": pts[:, 0], "M": pts[:, 1]}
    write_table(args.out, header, cols, args.format)
    if args.plot:
        maybe_plot(args.plot, pts[:, 0], {"M": pts[:, 1]}, "theta", "phase portrait")
    print(f"portrait: {len(pts)} points -> {args.out}")
    return 0


def cmd_modes(args, argv) -> int:
    grid = Grid1D(args.x_min, args.x_max, args.n_points)
    if args.potential_file:
        pot = DoubleWellPotential.from_file(args.potential_file)
    else:
        pot = DoubleWellPotential.quartic(args.v0, args.a)
    modes = lowest_modes(pot, grid)
    couplings = CouplingConstants1D(args.c_s, args.c_a)
    params = well_parameters(modes, pot, grid, couplings)
    j_signed = tunnelling_integral(modes, pot, grid)
    header = [
        "subcommand: modes",
        f"x_min = {args.x_min!r}", f"x_max = {args.x_max!r}",
        f"n_points = {args.n_points}",
        f"v0 = {args.v0!r}", f"a = {args.a!r}",
        f"potential_file = {args.potential_file or ''}",
        f"c_s_1d = {args.c_s!r}", f"c_a_1d = {args.c_a!r}",
        f"e_s = {modes.e_s!r}", f"e_a = {modes.e_a!r}",
        f"j_signed = {j_signed!r}",
        *param_header(params),
    ]
    x = grid.x
    cols = {
        "x": x,
        "V": pot.evaluate(x),
        "psi_s": modes.psi_s,
        "psi_a": modes.psi_a,
        "sqrt_n_left": modes.sqrt_n_left,
        "sqrt_n_right": modes.sqrt_n_right,
    }
    write_table(args.out, header, cols, args.format)
    if args.plot:
        maybe_plot(args.plot, x, {"V/V0": cols["V"] / max(args.v0, 1e-300),
                                  "sqrt_n_left": modes.sqrt_n_left,
                                  "sqrt_n_right": modes.sqrt_n_right}, "x", "well modes")
    print(
        f"e_s={modes.e_s:.9g} e_a={modes.e_a:.9g} J={params.j:.6g}"
        f" eps={params.eps_left:.9g} lambda_s={params.lambda_s_left:.6g}"
        f" lambda_a={params.lambda_a_left:.6g}"
    )
    return 0


def cmd_stationary(args, argv) -> int:
    params = symmetric_params(args)
    seed = parse_init(args.init)
    result = find_stationary(seed, params, tol=args.tol, max_iter=args.max_iter)
    status = "converged" if result.converged else "FAILED"
    print(
        f"{status} mu={result.mu!r} residual={result.residual:.3e}"
        f" iterations={result.iterations}"
    )
    amp = result.state.packed
    labels = ("xi_p", "xi_0", "xi_m", "eta_p", "eta_0", "eta_m")
    for lab, z in zip(labels, amp):
        print(f"  {lab} = {z!r}")
    return 0 if result.converged else 2


# ---------------------------------------------------------------------------
# figure presets

FIG4_INIT_TEXT = "1,0,0,0,0,0,0,0,0,0,1,0"


def _figure_run(
    out_dir: Path,
    name: str,
    j: float,
    lambda_a: float,
    state0: SpinorPair,
    t_max: float,
    sample_dt: float,
    caption_lines: list[str],
    fmt: str,
    extra_cols: tuple[str, ...] = (),
) -> Path:
    params = SystemParams.symmetric(1.0, 1.0, lambda_a, j)
    cfg = IntegratorConfig(t_max=t_max, sample_dt=sample_dt)
    traj = integrate(state0, params, cfg)
    header = [*caption_lines, *param_header(params),
              f"t_max = {t_max!r}", f"sample_dt = {sample_dt!r}"]
    path = out_dir / f"{name}.{ 'jsonl' if fmt == 'jsonl' else 'csv' }"
    write_table(path, header, trajectory_table(traj, extra=extra_cols), fmt)
    return path


def cmd_figure(args, argv) -> int:
    out_dir = Path(args.out or f"figure{args.number}")
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = args.format
    written: list[Path] = []
    n = args.number
    if n == 1:
        # phase diagram of the reduced flow: closed paths, J = 0.02, lambda_a = -0.01
        j, lambda_a = 0.02, -0.01
        rows = {k: [] for k in ("traj", "t", "M", "R0", "I0", "theta", "C")}
        traj_id = 0
        for m0 in (0.15, 0.3, 0.45, 0.6, 0.75, 0.9):
            for sign in (-1.0, 1.0):
                r0 = sign * 0.5 * math.sqrt(1.0 - m0 * m0)
                tr = integrate_reduced(
                    ReducedState(m0, r0, 0.0), ReducedParams(j, lambda_a), 1200.0, 0.25
                )
                rows["traj"].append(np.full(len(tr.times), float(traj_id)))
                rows["t"].append(tr.times)
                rows["M"].append(tr.m)
                rows["R0"].append(tr.r0)
                rows["I0"].append(tr.i0)
                rows["theta"].append(np.unwrap(np.arctan2(tr.i0, tr.r0)))
                rows["C"].append(tr.conserved)
                traj_id += 1
        cols = {k: np.concatenate(v) for k, v in rows.items()}
        header = [
            "figure 1: Josephson phase diagram, trajectories of the reduced system on closed paths",
            f"j = {j!r}", f"lambda_a = {lambda_a!r}",
        ]
        path = out_dir / ("fig1_phase_diagram." + ("jsonl" if fmt == "jsonl" else "csv"))
        write_table(path, header, cols, fmt)
        written.append(path)
    elif n == 2:
        j, lambda_a = 0.0051, -0.01
        tau = analytic_period(ReducedParams(j, lambda_a))
        state0 = parse_init(FIG4_INIT_TEXT)
        params = SystemParams.symmetric(1.0, 1.0, lambda_a, j)
        cfg = IntegratorConfig(t_max=2.5 * tau, sample_dt=tau / 2000.0)
        traj = integrate(state0, params, cfg)
        pts = phase_portrait(traj)
        header = [
            "figure 2: phase portrait (theta_{+-}, M)",
            f"j = {j!r}", f"lambda_a = {lambda_a!r}", *param_header(params),
        ]
        path = out_dir / ("fig2_portrait." + ("jsonl" if fmt == "jsonl" else "csv"))
        write_table(path, header, {"t": traj.times, "theta": pts[:, 0], "M": pts[:, 1]}, fmt)
        written.append(path)
    elif n == 3:
        lambda_a = -0.01
        ratios = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98,
                  1.02, 1.05, 1.1, 1.2, 1.4, 1.6, 1.8, 2.0, 2.5, 3.0, 4.0]
        j_values = [0.5 * r * abs(lambda_a) for r in ratios]
        rows = period_scan(j_values, lambda_a, jobs=args.jobs)
        path = out_dir / "fig3_period_scan.csv"
        with open(path, "w") as fh:
            fh.write(f"# spinwell {__version__}\n")
            fh.write("# figure 3: dependence of the period on 2J/|lambda_a|\n")
            fh.write(f"# lambda_a = {lambda_a!r}\n")
            fh.write("# columns: j,ratio,tau_analytic,tau_measured,status\n")
            for r in rows:
                fh.write(
                    f"{FLOAT_FMT % r.j},{FLOAT_FMT % r.ratio},{FLOAT_FMT % r.tau_analytic},"
                    f"{FLOAT_FMT % r.tau_measured},{r.status}\n"
                )
        written.append(path)
        if any(r.status != "ok" for r in rows):
            print("\n".join(f"{r.j}: {r.status}" for r in rows if r.status != "ok"),
                  file=sys.stderr)
            return 2
    elif n == 4:
        lambda_a = -0.01
        state0 = parse_init(FIG4_INIT_TEXT)
        for j, n_periods in ((0.001, 3.2), (0.0049, 3.2), (0.0051, 2.5), (0.01, 3.2)):
            tau = analytic_period(ReducedParams(j, lambda_a))
            caption = [
                "figure 4: magnetization dynamics, initial state xi=(1,0,0), eta=(0,0,1)",
                "eps = 1.0", "lambda_s = 1.0", f"lambda_a = {lambda_a!r}",
                f"j = {j!r}",
            ]
            path = _figure_run(
                out_dir, f"fig4_j{j:g}", j, lambda_a, state0,
                t_max=n_periods * tau, sample_dt=tau / 2000.0,
                caption_lines=caption, fmt=fmt,
            )
            written.append(path)
    elif n == 5:
        j = 0.001
        raw = np.array([0.9962, 0.0872, 0.0])
        xi0 = raw / np.linalg.norm(raw)
        state0 = SpinorPair.initial(xi0, xi0[::-1].copy())
        for lambda_a in (-0.01, 0.0):
            caption = [
                "figure 5: oscillation of rho_pp - rho_00,"
                " initial state xi = (0.9962, 0.0872, 0) (normalized), eta = spin-flip",
                "init_left = 0.9962,0.0872,0",
                "eps = 1.0", "lambda_s = 1.0",
                f"lambda_a = {lambda_a!r}", f"j = {j!r}",
            ]
            params = SystemParams.symmetric(1.0, 1.0, lambda_a, j)
            cfg = IntegratorConfig(t_max=20000.0, sample_dt=1.0)
            traj = integrate(state0, params, cfg)
            header = [*caption, *param_header(params),
                      "t_max = 20000.0", "sample_dt = 1.0"]
            path = out_dir / (f"fig5_lambda_a_{lambda_a:g}." + ("jsonl" if fmt == "jsonl" else "csv"))
            write_table(path, header, trajectory_table(traj, extra=("rho_pp_minus_rho00",)), fmt)
            written.append(path)
    else:
        raise CliError(f"unknown figure number {n} (expected 1..5)")
    for path in written:
        print(path)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="spinwell", description=__doc__)
    parser.add_argument("--version", action="version", version=f"spinwell {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the full six-amplitude system")
    add_system_args(p)
    add_integration_args(p)
    p.add_argument("--init", default=FIG4_INIT_TEXT,
                   help="12 reals: re/im pairs of xi+,xi0,xi-,eta+,eta0,eta-")
    add_output_args(p, "run.csv")
    p.add_argument("--config", help="flat key=value defaults file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reduced", help="integrate the reduced (M, R0, I0) system")
    p.add_argument("--j", type=float, required=True)
    p.add_argument("--lambda-a", type=float, default=-0.01)
    p.add_argument("--m0", type=float, default=1.0)
    p.add_argument("--r0", type=float, default=0.0)
    p.add_argument("--i0", type=float, default=0.0)
    add_integration_args(p)
    add_output_args(p, "reduced.csv")
    p.add_argument("--config", help="flat key=value defaults file")
    p.set_defaults(func=cmd_reduced)

    p = sub.add_parser("period", help="analytic period and regime, or measure from a CSV")
    p.add_argument("--j", type=float)
    p.add_argument("--lambda-a", type=float, default=-0.01)
    p.add_argument("--from-csv", help="measure the period from a trajectory file")
    p.add_argument("--observable", default="M_left")
    p.set_defaults(func=cmd_period)

    p = sub.add_parser("scan", help="analytic vs measured period over a J grid")
    p.add_argument("--j-values", required=True, help="comma-separated J values")
    p.add_argument("--lambda-a", type=float, default=-0.01)
    p.add_argument("--lambda-s", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=1.0)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--atol", type=float, default=1e-12)
    p.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    p.add_argument("--out", default="scan.csv")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("portrait", help="phase portrait (theta, M) of a run")
    add_system_args(p, require_j=False)
    add_integration_args(p)
    p.add_argument("--init", default=FIG4_INIT_TEXT)
    p.add_argument("--from-csv", help="use an existing trajectory file")
    add_output_args(p, "portrait.csv")
    p.set_defaults(func=cmd_portrait)

    p = sub.add_parser("modes", help="1D double-well modes and two-mode parameters")
    p.add_argument("--v0", type=float, default=10.0, help="quartic barrier height")
    p.add_argument("--a", type=float, default=2.0, help="quartic half-separation")
    p.add_argument("--x-min", type=float, default=-6.0)
    p.add_argument("--x-max", type=float, default=6.0)
    p.add_argument("--n-points", type=int, default=1024)
    p.add_argument("--potential-file", help="two-column (x, V) text file")
    p.add_argument("--c-s", type=float, default=1.0, help="1D symmetric coupling")
    p.add_argument("--c-a", type=float, default=-0.01, help="1D asymmetric coupling")
    add_output_args(p, "modes.csv")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("stationary", help="damped-Newton stationary-state search")
    add_system_args(p)
    p.add_argument("--init", default=FIG4_INIT_TEXT, help="seed state (12 reals)")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=100)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("figure", help="reproduce a figure's data files")
    p.add_argument("number", type=int, choices=(1, 2, 3, 4, 5))
    p.add_argument("--out", help="output directory (default figureN/)")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_figure)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        apply_config_file(args, argv)
        return args.func(args, argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
