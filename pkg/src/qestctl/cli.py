"""``qestctl``: scenario-driven front end emitting CSV/JSON data.

Usage::

    qestctl simulate|optimize|estimate|sweep --scenario FILE_OR_PRESET --out DIR
                                             [--seed N] [--threads N]
    qestctl presets

Exit status: 0 success, 2 scenario/schema error, 3 numerical failure,
4 boundary-solution warning (results are still written).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, dynamics, infometrics, mlestim, pulseopt
from .qmodel import (
    DOWN,
    UP,
    DomainError,
    ModelParams,
    NumericalFailure,
    ParamName,
    PiecewisePulse,
    QubitState,
    UnsupportedParameterError,
    bloch_from_state,
    sigma_z_povm,
    state_from_bloch,
    BlochVector,
)

SCHEMA_VERSION = 1
EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_BOUNDARY = 0, 2, 3, 4
METRICS = ("bures", "qfi", "cfi", "bound", "fd_qfi")
COST_KINDS = ("qfi", "selectivity", "cfi", "latitude")


class SchemaError(ValueError):
    """Scenario file does not match the schema; message starts with the field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


# -- schema helpers -----------------------------------------------------------

def _expect_obj(value, path: str, allowed: set[str], required: set[str] = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, "expected an object")
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", f"unknown field (allowed: {', '.join(sorted(allowed))})")
    missing = sorted(required - set(value))
    if missing:
        raise SchemaError(f"{path}.{missing[0]}", "required field missing")
    return value


def _num(value, path: str, positive: bool = False, nonneg: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(path, "expected a finite number")
    if positive and not value > 0:
        raise SchemaError(path, "must be positive")
    if nonneg and value < 0:
        raise SchemaError(path, "must be non-negative")
    return float(value)


def _int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, "expected an integer")
    if minimum is not None and value < minimum:
        raise SchemaError(path, f"must be >= {minimum}")
    return value


def _param(value, path: str) -> ParamName:
    try:
        return ParamName.parse(value)
    except DomainError:
        raise SchemaError(path, "expected one of Delta, Alpha, Gamma") from None


def _state(value, path: str) -> QubitState:
    if value == "up":
        return UP.density()
    if value == "down":
        return DOWN.density()
    if value == "mixed":
        return QubitState(np.eye(2) / 2)
    if isinstance(value, dict):
        _expect_obj(value, path, {"bloch"}, {"bloch"})
        b = value["bloch"]
        if not isinstance(b, list) or len(b) != 3:
            raise SchemaError(f"{path}.bloch", "expected [x, y, z]")
        try:
            return state_from_bloch(BlochVector(*(_num(v, f"{path}.bloch[{i}]") for i, v in enumerate(b))))
        except DomainError as exc:
            raise SchemaError(f"{path}.bloch", str(exc)) from None
    raise SchemaError(path, 'expected "up", "down", "mixed" or {"bloch": [x, y, z]}')


def _model(value, path: str) -> ModelParams:
    _expect_obj(value, path, {"delta", "alpha", "gamma", "omega0"})
    kw = {k: _num(v, f"{path}.{k}") for k, v in value.items()}
    try:
        return ModelParams(**kw)
    except DomainError as exc:
        raise SchemaError(path, str(exc)) from None


def _pulse(value, path: str, omega0: float) -> PiecewisePulse:
    _expect_obj(value, path, {"segments"}, {"segments"})
    segs = value["segments"]
    if not isinstance(segs, list) or not segs:
        raise SchemaError(f"{path}.segments", "expected a non-empty list")
    items = []
    for i, s in enumerate(segs):
        p = f"{path}.segments[{i}]"
        _expect_obj(s, p, {"duration", "amplitude", "phase"}, {"duration", "amplitude"})
        d = _num(s["duration"], f"{p}.duration", positive=True)
        a = _num(s["amplitude"], f"{p}.amplitude", nonneg=True)
        if a > omega0 * (1 + 1e-12):
            raise SchemaError(f"{p}.amplitude", f"exceeds omega0 = {omega0}")
        items.append({"duration": d, "amplitude": a, "phase": _num(s.get("phase", 0.0), f"{p}.phase")})
    return PiecewisePulse.from_dicts(items)


_CONFIG_FIELDS = {f.name: f for f in fields(pulseopt.OptimizerConfig)}


def _config(value, path: str) -> dict:
    _expect_obj(value, path, set(_CONFIG_FIELDS))
    out = {}
    for k, v in value.items():
        default = _CONFIG_FIELDS[k].default
        if isinstance(default, bool):
            if not isinstance(v, bool):
                raise SchemaError(f"{path}.{k}", "expected true or false")
            out[k] = v
        elif isinstance(default, int):
            out[k] = _int(v, f"{path}.{k}")
        else:
            out[k] = _num(v, f"{path}.{k}")
    return out


@dataclass
class Scenario:
    raw: dict
    name: str
    model: ModelParams
    initial: QubitState
    pulse: PiecewisePulse | None
    optimizer: dict | None
    metrics: tuple[str, ...]
    simulate: dict
    estimation: dict | None
    sweep: dict | None

    @property
    def hash(self) -> str:
        return scenario_hash(self.raw)


def scenario_hash(raw: dict) -> str:
    """SHA-256 of the canonical JSON form; stable under key reordering."""
    text = json.dumps(raw, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode()).hexdigest()


TOP_FIELDS = {"schema_version", "name", "description", "model", "initial", "pulse", "optimizer",
              "metrics", "simulate", "estimation", "sweep"}


def parse_scenario(raw: Any) -> Scenario:
    _expect_obj(raw, "$", TOP_FIELDS, {"schema_version", "model"})
    if raw["schema_version"] != SCHEMA_VERSION:
        raise SchemaError("$.schema_version", f"unsupported version (expected {SCHEMA_VERSION})")
    if "name" in raw and not isinstance(raw["name"], str):
        raise SchemaError("$.name", "expected a string")
    if "description" in raw and not isinstance(raw["description"], str):
        raise SchemaError("$.description", "expected a string")
    model = _model(raw["model"], "$.model")
    initial = _state(raw.get("initial", "up"), "$.initial")
    pulse = _pulse(raw["pulse"], "$.pulse", model.omega0) if "pulse" in raw else None
    optimizer = _optimizer(raw["optimizer"], "$.optimizer", model) if "optimizer" in raw else None
    metrics = raw.get("metrics", [])
    if not isinstance(metrics, list) or any(m not in METRICS for m in metrics):
        raise SchemaError("$.metrics", f"expected a list drawn from {', '.join(METRICS)}")
    simulate = _simulate(raw.get("simulate", {}), "$.simulate", model)
    estimation = _estimation(raw["estimation"], "$.estimation", model) if "estimation" in raw else None
    sweep = _sweep(raw["sweep"], "$.sweep") if "sweep" in raw else None
    return Scenario(raw, raw.get("name", ""), model, initial, pulse, optimizer, tuple(metrics),
                    simulate, estimation, sweep)


def _optimizer(value, path: str, model: ModelParams) -> dict:
    _expect_obj(value, path, {"cost", "param", "tf", "free_final_time", "time_weight", "selectivity",
                              "z_target", "config"}, {"cost"})
    cost = value["cost"]
    if cost not in COST_KINDS:
        raise SchemaError(f"{path}.cost", f"expected one of {', '.join(COST_KINDS)}")
    out = {"cost": cost, "free_final_time": value.get("free_final_time", False),
           "config": _config(value.get("config", {}), f"{path}.config")}
    if not isinstance(out["free_final_time"], bool):
        raise SchemaError(f"{path}.free_final_time", "expected true or false")
    if cost in ("qfi", "cfi"):
        if "param" not in value:
            raise SchemaError(f"{path}.param", f"required for cost {cost}")
        out["param"] = _param(value["param"], f"{path}.param")
    if not out["free_final_time"]:
        if "tf" not in value:
            raise SchemaError(f"{path}.tf", "required unless free_final_time is true")
        out["tf"] = _num(value["tf"], f"{path}.tf", positive=True)
    elif cost != "selectivity":
        raise SchemaError(f"{path}.free_final_time", "only selectivity costs support a free final time")
    if cost == "selectivity":
        if "selectivity" not in value:
            raise SchemaError(f"{path}.selectivity", "required for cost selectivity")
        s = _expect_obj(value["selectivity"], f"{path}.selectivity", {"param", "ensemble", "targets"},
                        {"param", "ensemble", "targets"})
        ens = s["ensemble"]
        if not isinstance(ens, list):
            raise SchemaError(f"{path}.selectivity.ensemble", "expected a list of numbers")
        ens = [_num(v, f"{path}.selectivity.ensemble[{i}]") for i, v in enumerate(ens)]
        if not isinstance(s["targets"], list):
            raise SchemaError(f"{path}.selectivity.targets", "expected a list of states")
        targets = [_state(v, f"{path}.selectivity.targets[{i}]") for i, v in enumerate(s["targets"])]
        try:
            out["spec"] = pulseopt.SelectivitySpec(_param(s["param"], f"{path}.selectivity.param"),
                                                   tuple(ens), tuple(targets), UP.density())
        except DomainError as exc:
            raise SchemaError(f"{path}.selectivity", str(exc)) from None
        if "time_weight" in value:
            out["time_weight"] = _num(value["time_weight"], f"{path}.time_weight", nonneg=True)
    if cost == "latitude":
        out["z_target"] = _num(value.get("z_target", 0.0), f"{path}.z_target")
    return out


def _simulate(value, path: str, model: ModelParams) -> dict:
    _expect_obj(value, path, {"param", "systems", "samples_per_segment", "fd_step"})
    out = {"param": _param(value.get("param", "Delta"), f"{path}.param")}
    systems = value.get("systems", [model.get(out["param"])])
    if not isinstance(systems, list) or not systems:
        raise SchemaError(f"{path}.systems", "expected a non-empty list of parameter values")
    out["systems"] = [_num(v, f"{path}.systems[{i}]") for i, v in enumerate(systems)]
    out["samples_per_segment"] = _int(value.get("samples_per_segment", 32), f"{path}.samples_per_segment", 1)
    out["fd_step"] = _num(value.get("fd_step", 1e-4), f"{path}.fd_step", positive=True)
    return out


def _estimation(value, path: str, model: ModelParams) -> dict:
    _expect_obj(value, path, {"true_delta", "shots", "resamples", "seed", "prior", "grid_points", "bins"},
                {"true_delta", "shots"})
    out = {
        "true_delta": _num(value["true_delta"], f"{path}.true_delta"),
        "shots": _int(value["shots"], f"{path}.shots", 1),
        "resamples": _int(value.get("resamples", 1000), f"{path}.resamples", 100),
        "seed": _int(value.get("seed", 0), f"{path}.seed", 0),
        "grid_points": _int(value.get("grid_points", mlestim.DEFAULT_GRID_POINTS), f"{path}.grid_points", 3),
        "bins": _int(value.get("bins", 80), f"{path}.bins", 1),
    }
    prior = value.get("prior", list(mlestim.default_prior(model.delta)))
    if not isinstance(prior, list) or len(prior) != 2:
        raise SchemaError(f"{path}.prior", "expected [low, high]")
    lo, hi = (_num(v, f"{path}.prior[{i}]") for i, v in enumerate(prior))
    if not lo < hi:
        raise SchemaError(f"{path}.prior", "low must be below high")
    out["prior"] = (lo, hi)
    return out


def _sweep(value, path: str) -> dict:
    _expect_obj(value, path, {"offsets", "tf", "merge_tol"}, {"offsets"})
    off = _expect_obj(value["offsets"], f"{path}.offsets", {"start", "stop", "num"}, {"start", "stop", "num"})
    start, stop = _num(off["start"], f"{path}.offsets.start"), _num(off["stop"], f"{path}.offsets.stop")
    num = _int(off["num"], f"{path}.offsets.num", 1)
    if num > 1 and not start < stop:
        raise SchemaError(f"{path}.offsets", "start must be below stop")
    out = {"offsets": np.linspace(start, stop, num), "merge_tol": mlestim.MERGE_TOL}
    if "tf" in value:
        out["tf"] = _num(value["tf"], f"{path}.tf", nonneg=True)
    if "merge_tol" in value:
        out["merge_tol"] = _num(value["merge_tol"], f"{path}.merge_tol", positive=True)
    return out


# -- presets and loading --------------------------------------------------------

def preset_names() -> list[str]:
    folder = resources.files("qestctl") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def load_raw(ref: str) -> dict:
    """Read a scenario from a file path or a shipped preset name."""
    path = Path(ref)
    try:
        if path.is_file():
            text = path.read_text()
        else:
            name = ref[len("preset:"):] if ref.startswith("preset:") else ref
            res = resources.files("qestctl") / "presets" / f"{name}.json"
            if not res.is_file():
                raise SchemaError("$", f"no scenario file or preset named {ref!r}")
            text = res.read_text()
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None


# -- output -------------------------------------------------------------------

class Outputs:
    """Atomic writers that remember what they produced."""

    def __init__(self, out_dir: Path):
        self.dir = out_dir
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def _write(self, name: str, text: str) -> Path:
        target = self.dir / name
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.", suffix=".tmp")
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
        if name not in self.files:
            self.files.append(name)
        return target

    def json(self, name: str, obj) -> Path:
        return self._write(name, json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")

    def csv(self, name: str, header: list[str], rows) -> Path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        return self._write(name, buf.getvalue())


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float) or isinstance(v, np.floating):
        return repr(float(v))
    return str(v)


# -- commands -----------------------------------------------------------------

def _require_pulse(sc: Scenario) -> PiecewisePulse:
    if sc.pulse is None:
        raise SchemaError("$.pulse", "this command needs an inline pulse")
    return sc.pulse


def _sample_times(pulse: PiecewisePulse, samples: int) -> np.ndarray:
    times = [0.0]
    for seg, start in zip(pulse.segments, pulse.boundaries[:-1]):
        times.extend(start + seg.duration * j / samples for j in range(1, samples + 1))
    return np.array(times)


def cmd_simulate(sc: Scenario, out: Outputs, seeds: dict) -> int:
    pulse = _require_pulse(sc)
    if not sc.metrics:
        return EXIT_OK
    sim = sc.simulate
    which = sim["param"]
    members = [sc.model.with_value(which, v) for v in sim["systems"]]
    trajs = [dynamics.propagate_pulse(sc.initial, m, pulse, sim["samples_per_segment"]) for m in members]
    times = trajs[0].times
    header = ["t"]
    want = set(sc.metrics)
    if "bures" in want:
        if len(members) < 2:
            raise SchemaError("$.simulate.systems", "the bures metric needs at least two systems")
        header.append("bures_sq")
    for key, col in (("qfi", "qfi"), ("cfi", "cfi"), ("bound", "bound"), ("fd_qfi", "fd_qfi")):
        if key in want:
            header.append(col)
    for k in range(len(members)):
        header += [f"x_{k}", f"y_{k}", f"z_{k}"]
    povm = sigma_z_povm()
    rows = []
    for idx, t in enumerate(times):
        row: list = [float(t)]
        if "bures" in want:
            row.append(infometrics.bures_distance_sq(trajs[0].states[idx], trajs[1].states[idx]))
        if want & {"qfi", "cfi", "bound", "fd_qfi"}:
            sub = pulse.truncated(min(float(t), pulse.total_duration))
            if "qfi" in want:
                row.append(infometrics.qfi(sc.model, sub, which, initial=sc.initial))
            if "cfi" in want:
                rho, drho = infometrics.rho_derivative_exact(sc.model, sub, which, initial=sc.initial)
                row.append(infometrics.cfi(rho, drho, povm))
            if "bound" in want:
                try:
                    row.append(infometrics.qfi_tight_bound(sc.model, sub, which) if sub is not None else 0.0)
                except UnsupportedParameterError:
                    row.append(None)
            if "fd_qfi" in want:
                row.append(infometrics.fd_qfi(sc.model, sub, which, sim["fd_step"], initial=sc.initial))
        for tr in trajs:
            b = bloch_from_state(tr.states[idx])
            row += [b.x, b.y, b.z]
        rows.append(row)
    out.csv("trajectory.csv", header, rows)
    return EXIT_OK


def build_cost(sc: Scenario, opt: dict):
    kind = opt["cost"]
    if kind == "qfi":
        return pulseopt.QfiCost(sc.model, opt["param"], opt["tf"], sc.initial)
    if kind == "cfi":
        return pulseopt.CfiCost(sc.model, opt["param"], opt["tf"], None, sc.initial)
    if kind == "latitude":
        return pulseopt.LatitudeCost(sc.model, opt["tf"], opt["z_target"], sc.initial)
    spec = opt["spec"]
    spec = pulseopt.SelectivitySpec(spec.param, spec.ensemble, spec.targets, sc.initial)
    return pulseopt.SelectivityCost(sc.model, spec, opt.get("time_weight"),
                                    None if opt["free_final_time"] else opt["tf"])


def cmd_optimize(sc: Scenario, out: Outputs, seeds: dict) -> int:
    opt = sc.optimizer
    if opt is None:
        raise SchemaError("$.optimizer", "this command needs an optimizer request")
    kw = dict(opt["config"])
    if seeds.get("override") is not None:
        kw["seed"] = seeds["override"]
    if seeds.get("threads"):
        kw["workers"] = seeds["threads"]
    try:
        config = pulseopt.OptimizerConfig(**kw)
    except DomainError as exc:
        raise SchemaError("$.optimizer.config", str(exc)) from None
    seeds["optimizer"] = config.seed
    cost = build_cost(sc, opt)
    report = pulseopt.optimize(cost, config, free_final_time=opt["free_final_time"])
    pulse = report.best_pulse
    out.json("pulse.json", {"segments": pulse.as_dicts()})
    extra: dict = {"config": {k: v for k, v in config.as_dict().items() if k != "workers"},
                   "total_duration": pulse.total_duration}
    if isinstance(cost, pulseopt.SelectivityCost):
        extra["distance_term"] = cost.distance_term(*pulse.arrays())
    if isinstance(cost, pulseopt.QfiCost):
        extra["qfi"] = -report.best_cost
        try:
            extra["tight_bound"] = infometrics.qfi_tight_bound(sc.model, pulse, cost.which)
        except UnsupportedParameterError:
            pass
    traj = dynamics.propagate_pulse(sc.initial, sc.model, pulse)
    extra["min_z"] = min(bloch_from_state(s).z for s in traj.states)
    out.json("report.json", {**report.as_dict(), **extra})
    return EXIT_OK


def cmd_estimate(sc: Scenario, out: Outputs, seeds: dict) -> int:
    pulse = _require_pulse(sc)
    est = sc.estimation
    if est is None:
        raise SchemaError("$.estimation", "this command needs an estimation block")
    seed = seeds["override"] if seeds.get("override") is not None else est["seed"]
    seeds["estimation"] = seed
    truth = ModelParams(est["true_delta"], sc.model.alpha, sc.model.gamma, sc.model.omega0)
    record = mlestim.simulate_measurements(truth, pulse, est["shots"], seed, sc.name, sc.initial)
    model = mlestim.LikelihoodModel(pulse, truth, est["prior"], est["grid_points"], sc.initial)
    result = mlestim.bootstrap(record, pulse, est["resamples"], seed, bins=est["bins"], model=model)
    body = result.as_dict()
    body["record"] = {"shots": record.shots, "up_count": record.up_count, "true_delta": truth.delta}
    body["prior"] = list(est["prior"])
    body["histogram_integral"] = result.histogram_integral()
    out.json("estimation.json", body)
    edges, dens = result.hist_edges, result.hist_density
    out.csv("histogram.csv", ["bin_low", "bin_high", "density"],
            [(float(edges[i]), float(edges[i + 1]), float(dens[i])) for i in range(len(dens))])
    if result.at_boundary:
        print("warning: maximum-likelihood estimate lies on the prior boundary", file=sys.stderr)
        return EXIT_BOUNDARY
    return EXIT_OK


def cmd_sweep(sc: Scenario, out: Outputs, seeds: dict) -> int:
    sw = sc.sweep
    if sw is None:
        raise SchemaError("$.sweep", "this command needs a sweep block")
    curve = mlestim.bloch_sweep(sc.pulse, sc.model, sw["offsets"], sw.get("tf"), sc.initial, sw["merge_tol"])
    out.csv("sweep.csv", ["delta", "x", "y", "z"],
            [(float(d), p.x, p.y, p.z) for d, p in zip(curve.offsets, curve.points)])
    clusters = curve.clusters()
    out.csv("intersections.csv", ["delta_a", "delta_b", "x", "y", "z", "gap", "cluster"],
            [(it.delta_a, it.delta_b, *it.position, it.gap,
              min(range(len(clusters)), key=lambda k: np.linalg.norm(np.subtract(clusters[k], it.position))))
             for it in curve.intersections])
    if curve.degenerate:
        print("note: every offset reaches the same point (degenerate sweep)", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "optimize": cmd_optimize, "estimate": cmd_estimate, "sweep": cmd_sweep}


def run(command: str, scenario_ref: str, out_dir: str | Path, seed: int | None = None,
        threads: int | None = None) -> int:
    started = time.perf_counter()
    raw = load_raw(scenario_ref)
    sc = parse_scenario(raw)
    out = Outputs(Path(out_dir))
    seeds: dict = {"override": seed, "threads": threads}
    status = COMMANDS[command](sc, out, seeds)
    manifest = {
        "command": command,
        "scenario": sc.name or str(scenario_ref),
        "scenario_hash": sc.hash,
        "seeds": {k: v for k, v in seeds.items() if k not in ("override", "threads") and v is not None},
        "tool_version": __version__,
        "wall_clock_seconds": time.perf_counter() - started,
        "outputs": list(out.files),
        "exit_status": status,
    }
    out.json("manifest.json", manifest)
    return status


def _threads(arg: int | None) -> int | None:
    env = os.environ.get("QESTCTL_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            raise SchemaError("QESTCTL_THREADS", "expected a positive integer") from None
        if value < 1:
            raise SchemaError("QESTCTL_THREADS", "expected a positive integer")
        return value
    return arg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qestctl", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qestctl {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True, help="scenario JSON file or preset name")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        p.add_argument("--threads", type=int, default=None, help="worker threads for optimizer restarts")
    sub.add_parser("presets", help="list the shipped scenario presets")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    try:
        if args.threads is not None and args.threads < 1:
            raise SchemaError("--threads", "expected a positive integer")
        return run(args.command, args.scenario, args.out, args.seed, _threads(args.threads))
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DomainError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
