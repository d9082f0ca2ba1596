"""Cost functions for estimation-oriented control and a global pulse optimizer.

Two families of costs are provided:

* terminal Fisher-information costs (``-F(t_f)`` for the QFI, ``-CFI`` as an
  experimental alternative), optimized at a fixed final time;
* selectivity costs, the mean Bures distance between where an ensemble of
  systems with different parameter values ends up and where it should end up,
  plus a penalty on the total duration for time-optimal design.

The optimizer is a seeded simulated annealing over the box of segment
durations, amplitudes and phases, followed by an optional bounded
Nelder-Mead polish.  Every cost object evaluates raw segment arrays through
the scalar Bloch kernels, so no pulse objects are built in the inner loop.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.optimize import minimize

from . import _bloch
from .qmodel import (
    UP,
    DomainError,
    ModelParams,
    ParamName,
    PiecewisePulse,
    Povm,
    QubitState,
    as_density,
    bloch_array,
    sigma_z_povm,
)
from .infometrics import cfi as _cfi, qfi_tight_bound

DEFAULT_TIME_SCALE = 10.0 * math.pi


def default_time_weight(omega0: float = 1.0) -> float:
    """1 / (omega0 * 10 pi / omega0): keeps the duration penalty O(0.1-1)."""
    return 1.0 / (omega0 * DEFAULT_TIME_SCALE / omega0)


def _bloch_of(state) -> tuple[float, float, float]:
    return tuple(float(v) for v in bloch_array(as_density(state)))


def _check_tf(pulse: PiecewisePulse, tf: float) -> None:
    if abs(pulse.total_duration - tf) > 1e-9 * max(1.0, tf):
        raise DomainError(f"pulse lasts {pulse.total_duration}, expected t_f = {tf}")


# -- cost handles -----------------------------------------------------------

class PulseCost(Protocol):
    """What :func:`optimize` needs: a fixed final time (or None) and an evaluator."""

    tf: float | None

    def evaluate(self, durations: Sequence[float], amps: Sequence[float],
                 phases: Sequence[float]) -> float: ...


class _CostBase:
    tf: float | None = None

    def __call__(self, pulse: PiecewisePulse) -> float:
        if self.tf is not None:
            _check_tf(pulse, self.tf)
        return self.evaluate(*pulse.arrays())


@dataclass(frozen=True)
class QfiCost(_CostBase):
    """-F(t_f) for the parameter ``which`` from ``initial``."""

    params: ModelParams
    which: ParamName
    tf: float
    initial: object = UP

    def __post_init__(self):
        object.__setattr__(self, "which", ParamName.parse(self.which))
        object.__setattr__(self, "_r0", _bloch_of(self.initial))

    def evaluate(self, durations, amps, phases) -> float:
        p = self.params
        r, dr = _bloch.propagate_with_derivative(p.delta, p.alpha, p.gamma, durations, amps, phases,
                                                 self._r0, self.which)
        return -_bloch.qfi(r, dr, self.which, _pure(self._r0))


def _pure(r0) -> bool:
    return 0.5 * (1 + sum(c * c for c in r0)) > _bloch.PURITY_THRESHOLD


@dataclass(frozen=True)
class CfiCost(_CostBase):
    """-CFI(t_f) under ``povm`` (sigma_z when omitted).  Experimental."""

    params: ModelParams
    which: ParamName
    tf: float
    povm: Povm | None = None
    initial: object = UP

    def __post_init__(self):
        object.__setattr__(self, "which", ParamName.parse(self.which))
        object.__setattr__(self, "_r0", _bloch_of(self.initial))

    def evaluate(self, durations, amps, phases) -> float:
        p = self.params
        r, dr = _bloch.propagate_with_derivative(p.delta, p.alpha, p.gamma, durations, amps, phases,
                                                 self._r0, self.which)
        if self.povm is None:
            return -_bloch.cfi_sigma_z(r, dr)
        rho = 0.5 * np.array([[1 + r[2], r[0] - 1j * r[1]], [r[0] + 1j * r[1], 1 - r[2]]])
        drho = 0.5 * np.array([[dr[2], dr[0] - 1j * dr[1]], [dr[0] + 1j * dr[1], -dr[2]]])
        return -_cfi(rho, drho, self.povm)


@dataclass(frozen=True, eq=False)
class SelectivitySpec:
    """Ensemble of parameter values, one target state each, common initial state."""

    param: ParamName
    ensemble: tuple[float, ...]
    targets: tuple[QubitState, ...]
    initial: QubitState

    def __post_init__(self):
        object.__setattr__(self, "param", ParamName.parse(self.param))
        ens = tuple(float(v) for v in self.ensemble)
        targets = tuple(t if isinstance(t, QubitState) else QubitState(as_density(t)) for t in self.targets)
        initial = self.initial if isinstance(self.initial, QubitState) else QubitState(as_density(self.initial))
        if len(ens) < 2 or len(ens) != len(targets):
            raise DomainError("a selectivity spec needs >= 2 ensemble values, one target each")
        if len(set(ens)) != len(ens):
            raise DomainError("ensemble values must be distinct")
        object.__setattr__(self, "ensemble", ens)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "initial", initial)

    @classmethod
    def delta_pair(cls, delta0: float) -> "SelectivitySpec":
        """-delta0 stays at |up>, +delta0 goes to |down>."""
        up = QubitState(np.diag([1.0, 0.0]))
        down = QubitState(np.diag([0.0, 1.0]))
        return cls(ParamName.DELTA, (-delta0, delta0), (up, down), up)

    @classmethod
    def gamma_pair(cls, gamma0: float, dgamma: float | None = None) -> "SelectivitySpec":
        """gamma0 goes to the centre of the ball, gamma0 + dgamma returns to |up>."""
        up = QubitState(np.diag([1.0, 0.0]))
        return cls(ParamName.GAMMA, (gamma0, gamma0 + (gamma0 if dgamma is None else dgamma)),
                   (QubitState(np.eye(2) / 2), up), up)


@dataclass(frozen=True, eq=False)
class SelectivityCost(_CostBase):
    """Mean squared Bures distance to the targets plus ``time_weight * omega0 * t_f``.

    With ``tf`` set the optimizer works at that fixed final time; with
    ``tf=None`` segment durations are free.
    """

    params: ModelParams
    spec: SelectivitySpec
    time_weight: float | None = None
    tf: float | None = None

    def __post_init__(self):
        if self.time_weight is None:
            object.__setattr__(self, "time_weight", default_time_weight(self.params.omega0))
        members = tuple(self.params.with_value(self.spec.param, v) for v in self.spec.ensemble)
        object.__setattr__(self, "_members", members)
        object.__setattr__(self, "_targets", tuple(_bloch_of(t) for t in self.spec.targets))
        object.__setattr__(self, "_r0", _bloch_of(self.spec.initial))

    def distance_term(self, durations, amps, phases) -> float:
        total = 0.0
        for p, target in zip(self._members, self._targets):
            r = _bloch.propagate(p.delta, p.alpha, p.gamma, durations, amps, phases, self._r0)
            total += _bloch.bures_sq(target, r)
        return total / len(self._members)

    def evaluate(self, durations, amps, phases) -> float:
        return (self.distance_term(durations, amps, phases)
                + self.time_weight * self.params.omega0 * float(sum(durations)))


@dataclass(frozen=True)
class LatitudeCost(_CostBase):
    """(z(t_f) - z_target)^2; z_target = 0 asks for the equator."""

    params: ModelParams
    tf: float
    z_target: float = 0.0
    initial: object = UP

    def __post_init__(self):
        object.__setattr__(self, "_r0", _bloch_of(self.initial))

    def evaluate(self, durations, amps, phases) -> float:
        p = self.params
        r = _bloch.propagate(p.delta, p.alpha, p.gamma, durations, amps, phases, self._r0)
        return (r[2] - self.z_target) ** 2


@dataclass(frozen=True)
class FunctionCost(_CostBase):
    """Wrap any ``PiecewisePulse -> float`` callable."""

    func: Callable[[PiecewisePulse], float]
    tf: float | None = None

    def evaluate(self, durations, amps, phases) -> float:
        return float(self.func(PiecewisePulse.from_lists(durations, amps, phases)))


def cost_qfi(pulse: PiecewisePulse, params: ModelParams, which: ParamName | str, tf: float,
             initial=UP) -> float:
    """-F(t_f), with F the purity-routed QFI of the final state."""
    return QfiCost(params, which, tf, initial)(pulse)


def cost_selectivity(pulse: PiecewisePulse, params: ModelParams, spec: SelectivitySpec,
                     time_weight: float | None = None) -> float:
    return SelectivityCost(params, spec, time_weight)(pulse)


def cost_cfi(pulse: PiecewisePulse, params: ModelParams, which: ParamName | str, povm: Povm | None,
             tf: float, initial=UP) -> float:
    """-CFI(t_f).  Experimental: this landscape traps local searches easily."""
    return CfiCost(params, which, tf, povm, initial)(pulse)


# -- optimizer --------------------------------------------------------------

@dataclass(frozen=True)
class OptimizerConfig:
    """Search box and annealing schedule.

    Durations live in (0, ``d_max``], amplitudes in [0, ``amplitude_max``],
    phases in (-pi, pi].  ``levels`` temperature levels of ``proposals``
    moves each are run for every one of ``restarts`` independent chains.
    """

    segments: int = 5
    d_max: float = 2.0 * math.pi
    amplitude_max: float = 1.0
    seed: int = 0
    initial_temperature: float = 1.0
    cooling: float = 0.97
    proposals: int = 200
    levels: int = 60
    restarts: int = 8
    refine: bool = True
    step_scale: float = 0.2
    calibration_samples: int = 32
    polish_maxfev: int = 4000
    tie_tolerance: float = 1e-9
    snap_tolerance: float = 1e-3
    workers: int = 1

    def __post_init__(self):
        if self.segments < 1:
            raise DomainError("segments must be >= 1")
        for name in ("d_max", "amplitude_max", "initial_temperature", "step_scale"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and positive")
        if not 0 < self.cooling < 1:
            raise DomainError("cooling factor must lie in (0, 1)")
        if self.proposals < 1 or self.levels < 1 or self.restarts < 1:
            raise DomainError("optimizer needs at least one proposal, level and restart")
        if self.workers < 1:
            raise DomainError("workers must be >= 1")

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True, eq=False)
class OptimizationReport:
    best_pulse: PiecewisePulse
    best_cost: float
    history: tuple[float, ...]
    evaluations: int
    seed: int
    restart_costs: tuple[float, ...] = field(default=())

    def as_dict(self) -> dict:
        return {
            "best_cost": self.best_cost,
            "history": list(self.history),
            "evaluations": self.evaluations,
            "seed": self.seed,
            "restart_costs": list(self.restart_costs),
            "pulse": {"segments": self.best_pulse.as_dicts()},
        }


class _Problem:
    """Maps the flat search vector onto segment arrays for one cost."""

    def __init__(self, cost: PulseCost, config: OptimizerConfig, tf: float | None):
        k = config.segments
        self.k = k
        self.cost = cost
        self.tf = tf
        self.lo = np.concatenate([np.full(k, 1e-6 * config.d_max), np.zeros(k), np.full(k, -math.pi)])
        self.hi = np.concatenate([np.full(k, config.d_max), np.full(k, config.amplitude_max),
                                  np.full(k, math.pi)])
        self.evaluations = 0

    def split(self, x: np.ndarray) -> tuple[list, list, list]:
        k = self.k
        d = x[:k]
        if self.tf is not None:
            d = d * (self.tf / d.sum())
        return d.tolist(), x[k:2 * k].tolist(), x[2 * k:].tolist()

    def __call__(self, x: np.ndarray) -> float:
        self.evaluations += 1
        value = self.cost.evaluate(*self.split(x))
        return value if math.isfinite(value) else math.inf

    def reflect(self, x: np.ndarray) -> np.ndarray:
        k = self.k
        span = self.hi - self.lo
        y = x.copy()
        # phases wrap around the circle, everything else reflects off the walls
        y[2 * k:] = (y[2 * k:] + math.pi) % (2 * math.pi) - math.pi
        box = slice(0, 2 * k)
        rel = np.mod(y[box] - self.lo[box], 2 * span[box])
        y[box] = self.lo[box] + np.where(rel > span[box], 2 * span[box] - rel, rel)
        return np.clip(y, self.lo, self.hi)

    def pulse(self, x: np.ndarray) -> PiecewisePulse:
        return PiecewisePulse.from_lists(*self.split(x))


def _anneal(problem: _Problem, config: OptimizerConfig, restart: int) -> tuple[np.ndarray, float, list]:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([config.seed, restart])))
    span = problem.hi - problem.lo
    samples = problem.lo + rng.random((config.calibration_samples, span.size)) * span
    costs = np.array([problem(s) for s in samples])
    finite = costs[np.isfinite(costs)]
    scale = float(np.std(finite)) if finite.size > 1 else 1.0
    if not scale > 0:
        scale = 1.0
    start = int(np.argmin(costs))
    x, c = samples[start].copy(), float(costs[start])
    best_x, best_c = x.copy(), c
    history = []
    temperature = config.initial_temperature
    for _ in range(config.levels):
        width = config.step_scale * temperature * span
        for _ in range(config.proposals):
            y = problem.reflect(x + rng.standard_normal(span.size) * width)
            cy = problem(y)
            if cy <= c or rng.random() < math.exp(-(cy - c) / (temperature * scale)):
                x, c = y, cy
                if c < best_c:
                    best_x, best_c = x.copy(), c
        history.append(best_c)
        temperature *= config.cooling
    return best_x, best_c, history


def _snap(problem: _Problem, x: np.ndarray, tol: float) -> np.ndarray:
    """Push amplitudes within ``tol`` of a bound onto it."""
    k = problem.k
    y = x.copy()
    amps = y[k:2 * k]
    amps[amps < tol * problem.hi[k]] = 0.0
    amps[amps > (1 - tol) * problem.hi[k]] = problem.hi[k]
    return y


def _polish(problem: _Problem, x: np.ndarray, c: float, config: OptimizerConfig) -> tuple[np.ndarray, float]:
    res = minimize(problem, x, method="Nelder-Mead",
                   bounds=list(zip(problem.lo, problem.hi)),
                   options={"maxfev": config.polish_maxfev, "xatol": 1e-10, "fatol": 1e-14,
                            "adaptive": True})
    if res.fun < c:
        x, c = np.asarray(res.x), float(res.fun)
    # smooth costs: finish with a bounded quasi-Newton step on finite-difference gradients
    res = minimize(problem, x, method="L-BFGS-B", bounds=list(zip(problem.lo, problem.hi)),
                   options={"maxfun": config.polish_maxfev, "ftol": 1e-15, "gtol": 1e-10})
    if res.fun < c:
        x, c = np.asarray(res.x), float(res.fun)
    snapped = _snap(problem, x, config.snap_tolerance)
    cs = problem(snapped)
    if cs <= c + config.tie_tolerance * (1 + abs(c)):
        x, c = snapped, cs
    return x, c


def optimize(cost: PulseCost, config: OptimizerConfig | None = None,
             free_final_time: bool = False, tf: float | None = None) -> OptimizationReport:
    """Global search over piecewise-constant pulses.

    With ``free_final_time`` the segment durations are independent; otherwise
    they are rescaled so the pulse lasts ``tf`` (taken from the cost when not
    given).  Deterministic for a given ``config.seed``.
    """
    config = config or OptimizerConfig()
    if not free_final_time:
        tf = tf if tf is not None else getattr(cost, "tf", None)
        if tf is None or not tf > 0:
            raise DomainError("a fixed-final-time optimization needs a positive t_f")
    else:
        tf = None
    problems = [_Problem(cost, config, tf) for _ in range(config.restarts)]

    def chain(i: int):
        x, c, hist = _anneal(problems[i], config, i)
        if config.refine:
            x, c = _polish(problems[i], x, c, config)
        return x, c, hist

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(chain, range(config.restarts)))
    else:
        results = [chain(i) for i in range(config.restarts)]

    history: list[float] = []
    running = math.inf
    for x, c, hist in results:
        for h in hist + [c]:
            running = min(running, h)
            history.append(running)

    best = min(c for _, c, _ in results)
    tol = config.tie_tolerance * (1 + abs(best))
    candidates = []
    for i, (x, c, _) in enumerate(results):
        if c <= best + tol:
            pulse = problems[i].pulse(x)
            candidates.append((pulse.total_duration, pulse.energy(), i, pulse, c))
    candidates.sort(key=lambda item: item[:3])
    _, _, _, pulse, c = candidates[0]
    return OptimizationReport(pulse, c, tuple(history), sum(p.evaluations for p in problems),
                              config.seed, tuple(c for _, c, _ in results))


def scan_final_time(make_cost: Callable[[float], PulseCost], final_times: Sequence[float],
                    config: OptimizerConfig | None = None) -> list[tuple[float, OptimizationReport]]:
    """Optimize at each fixed final time in turn."""
    return [(float(t), optimize(make_cost(float(t)), config, tf=float(t))) for t in final_times]


def minimum_time(make_cost: Callable[[float], PulseCost], t_low: float, t_high: float,
                 config: OptimizerConfig | None = None, threshold: float = 1e-8,
                 rel_tol: float = 1e-3) -> tuple[float, OptimizationReport]:
    """Shortest final time at which the optimized cost drops below ``threshold``.

    Bisection on t_f; ``t_high`` must be feasible.  Returns the feasible
    bracket end and the report found there.
    """
    if not 0 < t_low < t_high:
        raise DomainError("need 0 < t_low < t_high")
    report = optimize(make_cost(t_high), config, tf=t_high)
    if report.best_cost >= threshold:
        raise DomainError(f"t_high = {t_high} is not feasible (cost {report.best_cost})")
    while t_high - t_low > rel_tol * t_high:
        mid = 0.5 * (t_low + t_high)
        trial = optimize(make_cost(mid), config, tf=mid)
        if trial.best_cost < threshold:
            t_high, report = mid, trial
        else:
            t_low = mid
    return t_high, report


def hold_window(pulse: PiecewisePulse, amplitude_tol: float = 1e-3) -> tuple[float, float]:
    """[start, end] of the trailing run of segments with negligible amplitude."""
    start = pulse.total_duration
    for seg, t0 in zip(reversed(pulse.segments), reversed(pulse.boundaries[:-1])):
        if seg.amplitude > amplitude_tol:
            break
        start = float(t0)
    return start, pulse.total_duration


def bound_gap(report: OptimizationReport, params: ModelParams, which: ParamName | str) -> float:
    """Optimized QFI divided by the tight bound at the same final time."""
    pulse = report.best_pulse
    return -report.best_cost / qfi_tight_bound(params, pulse, which)


__all__ = [
    "CfiCost", "FunctionCost", "LatitudeCost", "OptimizationReport", "OptimizerConfig",
    "PulseCost", "QfiCost", "SelectivityCost", "SelectivitySpec", "bound_gap", "cost_cfi",
    "cost_qfi", "cost_selectivity", "default_time_weight", "hold_window", "minimum_time",
    "optimize", "scan_final_time", "sigma_z_povm",
]
