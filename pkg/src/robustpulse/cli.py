"""Command-line interface: ``robustpulse <command> [flags]``.

Exit codes: 0 success, 2 usage or malformed input, 3 solver failure,
4 verification failure.  Every successful run writes ``manifest.json`` into
its output directory, listing the files it produced.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from . import io as rio
from .continuation import solve, sweep
from .dynamics import (
    EndpointResiduals,
    Waveform,
    conserved_residual,
    cost_of,
    energy_of,
    integrate_control,
    integrate_extremal,
    relation_residual,
    sign_changes,
    verify_symmetry,
)
from .elliptic import Family, KernelKind, QuadKernel, eval_Im_Jm
from .errors import ConvergenceError, DomainError, ModelError, VerificationError
from .extremal import (
    HALF_PI,
    ExtremalParams,
    ProblemSpec,
    bang_zero_sensitivity,
    gamma_critical,
    limit_solution,
)
from .quadrature import QuadConfig
from .sensitivity import (
    BipartiteModel,
    crosstalk_model,
    dephasing_model,
    hs_norm,
    propagate_sensitivity,
    taylor_residual,
)
from .twoqubit import TwoQubitSpec, branch_tag, solve_two_qubit, two_qubit_sensitivity

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4

CHECK_TOL = 1e-6
TAYLOR_TOL = 1e-8
MAX_SENSITIVITY_ORDER = 4


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    spec: dict
    tool_version: str
    tolerances: dict
    outputs: list = field(default_factory=list)

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        self.outputs.append(str(path))
        return rio.write_json(path, asdict(self))


class _Run:
    """Collects outputs of one command and writes the manifest at the end."""

    def __init__(self, command: str, args, cfg: QuadConfig, spec: dict):
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.fmt = getattr(args, "format", "csv")
        self.manifest = RunManifest(command, spec, __version__, cfg.as_dict())

    def path(self, name: str) -> Path:
        p = self.out / name
        self.manifest.outputs.append(str(p))
        return p

    def json(self, name: str, obj) -> Path:
        return rio.write_json(self.path(name), obj)

    def trajectory(self, traj, stem: str = "trajectory") -> Path:
        if self.fmt == "json":
            return rio.write_trajectory_json(self.path(stem + ".json"), traj)
        return rio.write_trajectory_csv(self.path(stem + ".csv"), traj)

    def finish(self) -> None:
        self.manifest.write(self.out)


def _gamma(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not value >= 0:
        raise argparse.ArgumentTypeError("gamma must be >= 0")
    return value


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError("value must be finite")
    return value


def _positive(text: str) -> float:
    value = _finite(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("value must be > 0")
    return value


def _steps(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if value < 100:
        raise argparse.ArgumentTypeError("steps must be >= 100")
    return value


def parse_gamma_grid(text: str) -> list[float]:
    """``"0,1,10"``, ``"geom:START:STOP:N"`` or ``"lin:START:STOP:N"``."""
    text = text.strip()
    try:
        if text.startswith(("geom:", "lin:")):
            kind, start, stop, n = text.split(":")
            start, stop, n = float(start), float(stop), int(n)
            if n < 1:
                raise ValueError
            if kind == "geom":
                if start <= 0 or stop <= 0:
                    raise ValueError
                grid = np.geomspace(start, stop, n)
            else:
                grid = np.linspace(start, stop, n)
            values = [float(g) for g in grid]
        else:
            values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad gamma grid {text!r}") from exc
    if not values or any(not (v >= 0 and math.isfinite(v)) for v in values):
        raise argparse.ArgumentTypeError("gamma grid must be nonempty, finite and >= 0")
    if any(b < a for a, b in zip(values, values[1:])):
        raise argparse.ArgumentTypeError("gamma grid must be ascending")
    return values


# ---------------------------------------------------------------------------
# verification helpers


def verification_block(traj, params: ExtremalParams | None, gamma: float) -> dict:
    """Endpoint, symmetry, relation and conservation residuals of a trajectory."""
    sym = verify_symmetry(traj)
    block = {
        "endpoint_residuals": dict(traj.endpoint_residuals._asdict()),
        "symmetry_residuals": dict(sym._asdict()),
        "u0_minus_uT": float(traj.u[0] - traj.u[-1]),
        "relation_residual": relation_residual(traj),
        "conserved_residual": conserved_residual(traj, params) if params is not None else math.nan,
        "energy": energy_of(traj),
        "cost": cost_of(traj, gamma) if math.isfinite(gamma) else energy_of(traj),
    }
    return block


def _block_passes(block: dict, require: set[str]) -> bool:
    checks = {
        "endpoint": max(abs(v) for v in block["endpoint_residuals"].values()),
        "symmetry": max(block["symmetry_residuals"].values()),
        "relation": block["relation_residual"],
        "conserved": block["conserved_residual"],
    }
    for name in require:
        value = checks[name]
        if not (value < CHECK_TOL):
            return False
    return True


ALL_CHECKS = ("endpoint", "symmetry", "relation", "conserved")


def _failure(run: _Run | None, out: Path, exc: Exception, label: str = "") -> int:
    out.mkdir(parents=True, exist_ok=True)
    report = {"status": "solver_failure", "error": f"{label}{exc}"}
    for attr in ("bracket", "residuals"):
        if getattr(exc, attr, None) is not None:
            report[attr] = getattr(exc, attr)
    rio.write_json(out / "failure.json", report)
    print(json.dumps(rio.clean(report)), file=sys.stderr)
    return EXIT_SOLVER


# ---------------------------------------------------------------------------
# commands


def cmd_solve(args, cfg: QuadConfig) -> int:
    spec = ProblemSpec(args.theta_des, args.horizon, args.gamma)
    run = _Run("solve", args, cfg, {"theta_des": spec.theta_des, "gamma": spec.gamma,
                                    "horizon_T": spec.horizon_T, "steps": args.steps})
    try:
        params = solve(spec, cfg, n_steps=args.steps)
    except (ConvergenceError, DomainError) as exc:
        return _failure(run, run.out, exc)
    traj = integrate_extremal(params, n_steps=args.steps)
    block = verification_block(traj, params, spec.gamma)
    passed = _block_passes(block, set(ALL_CHECKS))
    run.trajectory(traj)
    run.json("params.json", params.as_dict())
    run.json("verification.json", dict(block, passed=passed))
    run.finish()
    print(rio.dumps({"params": params.as_dict(), "passed": passed}), end="")
    return EXIT_OK if passed else EXIT_VERIFY


GNUPLOT_STUB = """# Control and angle of the zero-sensitivity NOT-gate solution.
# Columns of {data}: 1 t, 2 theta, 3 u, 4 S_z, 5 S_x
set datafile separator ","
set key autotitle columnhead
set xlabel "t"
set multiplot layout 2,1
plot "{data}" using 1:3 with lines title "u(t)"
plot "{data}" using 1:2 with lines title "theta(t)"
unset multiplot
"""


def limit_figure_checks(traj) -> dict:
    """Shape of the limit control.

    Two sign changes at mirror-symmetric times, u(0) = u(1) < 0, and theta
    monotone on each of the three phases: down to a minimum below zero, up
    past pi/2, then down onto pi/2 (u(1) < 0 forces this last overshoot).
    ``dip_then_rise_to_target`` checks the stricter reading "decreasing, then
    increasing up to pi/2" on [0, t*], t* the first time theta reaches pi/2.
    """
    times = sign_changes(traj.u, traj.t)
    mirror = abs(times[0] + times[1] - traj.horizon) if len(times) == 2 else math.inf
    theta = traj.theta
    target = traj.theta_des
    dtheta = np.diff(theta)
    phases_ok = False
    overshoot = math.nan
    dip_rise = False
    if len(times) == 2:
        i1 = int(np.argmin(theta))
        i2 = int(np.argmax(theta))
        phases_ok = (0 < i1 < i2 < len(theta) - 1
                     and bool(np.all(dtheta[:i1] <= 0) and np.all(dtheta[i1:i2] >= 0)
                              and np.all(dtheta[i2:] <= 0)))
        overshoot = float(theta[i2] - target)
        reach = np.flatnonzero(theta >= target)
        if len(reach):
            i_star = int(reach[0])
            dip_rise = bool(np.all(dtheta[:i1] <= 0) and np.all(dtheta[i1:i_star] >= 0))
    return {
        "sign_change_times": times,
        "n_sign_changes": len(times),
        "mirror_residual": mirror,
        "u0": float(traj.u[0]),
        "u1": float(traj.u[-1]),
        "u0_minus_u1": float(traj.u[0] - traj.u[-1]),
        "theta_min": float(np.min(theta)),
        "theta_max": float(np.max(theta)),
        "overshoot": overshoot,
        "three_monotone_phases": phases_ok,
        "dip_then_rise_to_target": dip_rise,
        "passed": bool(len(times) == 2 and mirror < CHECK_TOL and traj.u[0] < 0
                       and abs(traj.u[0] - traj.u[-1]) < CHECK_TOL and phases_ok and dip_rise),
    }


def cmd_limit(args, cfg: QuadConfig) -> int:
    run = _Run("limit", args, cfg, {"steps": args.steps})
    try:
        params = limit_solution(cfg)
        i1, j1 = eval_Im_Jm(params.k, 1, Family.minus, cfg)
    except ConvergenceError as exc:
        return _failure(run, run.out, exc)
    traj = integrate_extremal(params, n_steps=args.steps)
    block = verification_block(traj, params, math.inf)
    shape = limit_figure_checks(traj)
    constants = {
        "k_lim": params.k,
        "I1_k_lim": i1,
        "J1_k_lim": j1,
        "c": params.c,
        "a": params.a,
        "U": params.cost,
        "gamma_c": gamma_critical(cfg),
    }
    data_path = run.trajectory(traj, "limit_trajectory")
    run.json("limit_constants.json", constants)
    run.json("params.json", params.as_dict())
    passed = _block_passes(block, set(ALL_CHECKS)) and shape["passed"]
    run.json("verification.json", dict(block, figure_properties=shape, passed=passed))
    if run.fmt == "csv":
        run.path("plot_limit.gp").write_text(GNUPLOT_STUB.format(data=data_path.name))
    run.finish()
    print(rio.dumps(dict(constants, passed=passed)), end="")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_sweep(args, cfg: QuadConfig) -> int:
    template = ProblemSpec(args.theta_des, args.horizon, 0.0)
    run = _Run("sweep", args, cfg, {"theta_des": args.theta_des, "horizon_T": args.horizon,
                                    "gamma_grid": args.gamma_grid})

    def solver(spec):
        return solve(spec, cfg, n_steps=args.steps)

    result = sweep(args.gamma_grid, template, solver=solver)
    path = run.path("sweep.csv")
    theta = template.theta_des
    with path.open("w") as fh:
        fh.write("gamma,cost,lower,upper,regime,k,c,S,status\n")
        for row in result.rows:
            p = row.params
            if p is None:
                vals = [row.gamma, math.nan, row.lower_bound, row.upper_bound]
                fh.write(",".join(rio.fmt(v) for v in vals) + ",failed,nan,nan,nan,error\n")
                continue
            s_along = p.S_z_final * math.cos(theta) + p.S_x_final * math.sin(theta)
            head = ",".join(rio.fmt(v) for v in (row.gamma, row.cost, row.lower_bound, row.upper_bound))
            tail = ",".join(rio.fmt(v) for v in (p.k, p.c, s_along))
            fh.write(f"{head},{row.regime},{tail},ok\n")
    run.json("sweep_report.json", {
        "violations": list(result.violations),
        "errors": [{"gamma": r.gamma, "error": r.error} for r in result.rows if r.error],
        "passed": result.ok,
    })
    run.finish()
    print(rio.dumps({"rows": len(result.rows), "violations": list(result.violations),
                     "passed": result.ok}), end="")
    return EXIT_OK if result.ok else EXIT_VERIFY


def cmd_two_qubit(args, cfg: QuadConfig) -> int:
    spec = TwoQubitSpec(args.theta1, args.theta2, args.gamma, args.horizon)
    run = _Run("two-qubit", args, cfg, {"theta1_des": spec.theta1_des, "theta2_des": spec.theta2_des,
                                        "gamma": spec.gamma, "horizon_T": spec.horizon_T})
    try:
        sol = solve_two_qubit(spec, n_steps=args.steps)
    except ConvergenceError as exc:
        return _failure(run, run.out, exc)
    except VerificationError as exc:
        run.json("report.json", {"status": "verification_failure", "error": str(exc)})
        run.finish()
        return EXIT_VERIFY
    rio.write_columns(run.path("two_qubit_trajectory.csv"), rio.two_qubit_columns(sol.trajectory))
    for label, params in (("plus", sol.params_plus), ("minus", sol.params_minus)):
        run.json(f"{label}.json", dict(params.as_dict(), tag=branch_tag(params)))
    passed = sol.split_residual < CHECK_TOL and max(abs(d) for d in sol.endpoint_residuals) < CHECK_TOL
    report = {
        "cost": sol.cost,
        "cost_plus": sol.params_plus.cost,
        "cost_minus": sol.params_minus.cost,
        "cost_split_residual": sol.split_residual,
        "endpoint_residuals": list(sol.endpoint_residuals),
        "sensitivity_norm2": two_qubit_sensitivity(sol.trajectory),
        "final_sensitivities": sol.trajectory.final_sensitivities(),
        "plus_tag": branch_tag(sol.params_plus),
        "minus_tag": branch_tag(sol.params_minus),
        "flags": list(sol.flags),
        "passed": passed,
    }
    run.json("report.json", report)
    run.finish()
    print(rio.dumps(report), end="")
    return EXIT_OK if passed else EXIT_VERIFY


def _load_sidecar(path: Path) -> dict | None:
    sidecar = path.parent / "params.json"
    if sidecar.exists():
        try:
            return json.loads(sidecar.read_text())
        except json.JSONDecodeError:
            return None
    return None


def _num(value) -> float:
    # non-finite values are stored as the strings "inf" / "nan"
    return float(value)


def cmd_verify(args, cfg: QuadConfig) -> int:
    path = Path(args.input)
    side = _load_sidecar(path) if args.params is None else json.loads(Path(args.params).read_text())
    theta_des = args.theta_des
    if theta_des is None:
        if not side or "theta_des" not in side:
            raise UsageError("--theta-des is required when no params.json accompanies the input")
        theta_des = _num(side["theta_des"])
    gamma = args.gamma
    if gamma is None:
        gamma = _num(side["gamma"]) if side and "gamma" in side else 0.0
    kind = "hold" if args.hold else "smooth"
    traj = rio.read_trajectory_csv(path, theta_des, gamma, kind)
    if side and all(k in side for k in ("c", "a_z", "a_x")):
        params = _SimpleParams(_num(side["c"]), _num(side["a_z"]), _num(side["a_x"]))
        targets = (_num(side.get("S_z_final", traj.S_z[-1])), _num(side.get("S_x_final", traj.S_x[-1])))
    elif math.isfinite(gamma):
        s_z, s_x = float(traj.S_z[-1]), float(traj.S_x[-1])
        params = _SimpleParams(float(traj.u[0]), -2 * gamma * s_z, -2 * gamma * s_x)
        targets = (s_z, s_x)
    else:
        params, targets = None, (float(traj.S_z[-1]), float(traj.S_x[-1]))
    traj = replace(traj, endpoint_residuals=EndpointResiduals(
        float(traj.theta[-1] - theta_des), float(traj.S_z[-1] - targets[0]),
        float(traj.S_x[-1] - targets[1])))
    try:
        block = verification_block(traj, params, gamma)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    require = set(args.require) if args.require else set(ALL_CHECKS)
    if params is None:
        require.discard("conserved")
    passed = _block_passes(block, require)
    report = dict(block, required=sorted(require), passed=passed)
    print(rio.dumps(report), end="")
    return EXIT_OK if passed else EXIT_VERIFY


@dataclass(frozen=True)
class _SimpleParams:
    c: float
    a_z: float
    a_x: float


def cmd_bang(args, cfg: QuadConfig) -> int:
    run = _Run("bang", args, cfg, {"steps_per_segment": args.per_segment})
    control = bang_zero_sensitivity()
    traj = integrate_control(control.waveform(13 * args.per_segment), HALF_PI)
    run.trajectory(traj, "bang_trajectory")
    report = {
        "energy": control.energy,
        "energy_from_samples": energy_of(traj),
        "endpoint_residuals": dict(traj.endpoint_residuals._asdict()),
        "symmetry_residuals": dict(verify_symmetry(traj)._asdict()),
    }
    report["passed"] = max(abs(v) for v in report["endpoint_residuals"].values()) < 1e-8
    run.json("params.json", {"theta_des": HALF_PI, "gamma": 0.0, "control_kind": "hold"})
    run.json("bang_report.json", report)
    run.finish()
    print(rio.dumps(report), end="")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


BUILTIN_MODELS = {"dephasing": dephasing_model, "crosstalk": crosstalk_model}


def _load_model(text: str) -> BipartiteModel:
    if text in BUILTIN_MODELS:
        return BUILTIN_MODELS[text]()
    try:
        data = json.loads(Path(text).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read model file {text!r}: {exc}") from exc
    return BipartiteModel.from_dict(data)


def _load_control(text: str, n_channels: int, kind: str) -> Waveform:
    """Control CSV: a ``t`` column followed by one column per channel,
    or ``const:VALUE[:T]`` for a constant control on [0, T]."""
    if text.startswith("const:"):
        parts = text.split(":")
        try:
            value = float(parts[1])
            horizon = float(parts[2]) if len(parts) > 2 else 1.0
        except (IndexError, ValueError) as exc:
            raise UsageError(f"bad constant control {text!r}") from exc
        t = np.linspace(0.0, horizon, 5)
        values = np.full((5, n_channels), value) if n_channels > 1 else np.full(5, value)
        return Waveform(t, values, kind="linear")
    try:
        cols = rio.read_columns(text, ("t",))
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    names = [n for n in cols if n != "t"]
    if len(names) != n_channels:
        raise UsageError(f"control file has {len(names)} channels, model needs {n_channels}")
    values = np.column_stack([cols[n] for n in names]) if n_channels > 1 else cols[names[0]]
    return Waveform(cols["t"], values, kind=kind)


def cmd_sensitivity(args, cfg: QuadConfig) -> int:
    if not 1 <= args.order <= MAX_SENSITIVITY_ORDER:
        raise UsageError(f"--order must lie in 1..{MAX_SENSITIVITY_ORDER}")
    model = _load_model(args.model)
    control = _load_control(args.control, model.n_controls, args.interp)
    run = _Run("sensitivity", args, cfg, {"model": args.model, "control": args.control,
                                          "order": args.order, "steps": args.steps})
    tensor = propagate_sensitivity(model, control, args.order, args.steps)
    report = {
        "horizon": tensor.horizon,
        "norms": {f"{n},{j}": hs_norm(z) for (n, j), z in sorted(tensor.entries.items())},
        "norms_squared": {f"{n},{j}": hs_norm(z) ** 2 for (n, j), z in sorted(tensor.entries.items())},
    }
    passed = True
    if args.validate:
        residual = taylor_residual(model, control, args.delta, args.eps, max(args.order, 2),
                                   n_steps=args.steps)
        report["taylor_validation"] = {"delta": args.delta, "eps": args.eps, "residual": residual}
        passed = residual < TAYLOR_TOL
    if args.full:
        report["matrices"] = {f"{n},{j}": [[[z.real, z.imag] for z in row] for row in m]
                              for (n, j), m in sorted(tensor.entries.items())}
    report["passed"] = passed
    run.json("sensitivity.json", report)
    run.finish()
    summary = {k: v for k, v in report.items() if k != "matrices"}
    print(rio.dumps(summary), end="")
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_quad(args, cfg: QuadConfig) -> int:
    kernel = QuadKernel(KernelKind(args.kind), args.k, args.m)
    value = kernel.evaluate(cfg)
    print(rio.dumps({"kind": kernel.kind.value, "k": args.k, "m": args.m, "value": value}), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robustpulse", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, fmt=True, steps=True):
        p.add_argument("--out", default="out", help="output directory (default: out)")
        if fmt:
            p.add_argument("--format", choices=("csv", "json"), default="csv")
        if steps:
            p.add_argument("--steps", type=_steps, default=10_000, help="RK4 steps (default 10000)")

    p = sub.add_parser("solve", help="optimal pulse for one qubit")
    p.add_argument("--theta-des", type=_finite, required=True, help="target angle (rad)")
    p.add_argument("--gamma", type=_gamma, default=0.0)
    p.add_argument("--horizon", type=_positive, default=1.0)
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("limit", help="zero-sensitivity minimum-energy NOT gate")
    common(p)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("sweep", help="cost versus gamma")
    p.add_argument("--gamma-grid", type=parse_gamma_grid, required=True,
                   help='"0,1,10", "geom:0.1:1e4:30" or "lin:0:10:11"')
    p.add_argument("--theta-des", type=_finite, default=HALF_PI)
    p.add_argument("--horizon", type=_positive, default=1.0)
    common(p, fmt=False)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("two-qubit", help="crosstalk-robust two-qubit pulse")
    p.add_argument("--theta1", type=_finite, required=True)
    p.add_argument("--theta2", type=_finite, required=True)
    p.add_argument("--gamma", type=_gamma, default=0.0)
    p.add_argument("--horizon", type=_positive, default=1.0)
    common(p, fmt=False)
    p.set_defaults(func=cmd_two_qubit)

    p = sub.add_parser("verify", help="re-check a trajectory CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--gamma", type=_gamma, default=None)
    p.add_argument("--theta-des", type=_finite, default=None)
    p.add_argument("--params", default=None, help="params JSON (default: params.json beside input)")
    p.add_argument("--hold", action="store_true", help="control is piecewise constant")
    p.add_argument("--require", nargs="*", choices=ALL_CHECKS,
                   help="checks that decide the exit code (default: all)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bang", help="three-level zero-sensitivity NOT-gate control")
    p.add_argument("--per-segment", type=int, default=1000, help="RK steps per 1/13 of the interval")
    common(p, steps=False)
    p.set_defaults(func=cmd_bang)

    p = sub.add_parser("sensitivity", help="sensitivity tensors Z^n_j for a model")
    p.add_argument("--model", required=True, help="model JSON file, or 'dephasing' / 'crosstalk'")
    p.add_argument("--control", required=True, help="control CSV (t, u...) or const:VALUE[:T]")
    p.add_argument("--order", type=int, default=1)
    p.add_argument("--interp", choices=("cubic", "linear", "hold"), default="linear")
    p.add_argument("--validate", action="store_true", help="compare with finite (delta, eps)")
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--full", action="store_true", help="include full matrices")
    common(p, fmt=False)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("quad", help="evaluate one kernel integral")
    p.add_argument("--kind", choices=[k.value for k in KernelKind], required=True)
    p.add_argument("--k", type=_finite, required=True)
    p.add_argument("--m", type=int, default=None)
    p.set_defaults(func=cmd_quad)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = QuadConfig.from_env()
        return args.func(args, cfg)
    except (UsageError, ModelError, DomainError) as exc:
        print(f"robustpulse: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
