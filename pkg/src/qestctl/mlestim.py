"""Simulated sigma_z measurements, maximum-likelihood estimation of the detuning,
bootstrap uncertainty, and the offset sweep on the Bloch sphere.

Individual shots are exchangeable, so a record keeps only the number of shots
and the number of "up" outcomes; bootstrap resampling is then binomial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import _bloch, dynamics
from .qmodel import (
    UP,
    BlochVector,
    DomainError,
    ModelParams,
    PiecewisePulse,
    as_density,
    bloch_array,
)

DEFAULT_GRID_POINTS = 801
DEFAULT_XATOL = 1e-6
PEAK_FRACTION = 0.01
MERGE_TOL = 1e-2


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def default_prior(delta0: float = 0.2, half_width: float = 0.4) -> tuple[float, float]:
    return (delta0 - half_width, delta0 + half_width)


# -- probabilities and records ---------------------------------------------

def outcome_probabilities(params: ModelParams, pulse: PiecewisePulse | None, initial=UP) -> tuple[float, float]:
    """Born populations (<up|rho|up>, <down|rho|down>) of the final state."""
    rho = dynamics.evolve_density(as_density(initial), params, pulse)
    p_up = float(np.clip(rho[0, 0].real, 0.0, 1.0))
    return p_up, 1.0 - p_up


@dataclass(frozen=True)
class MeasurementRecord:
    shots: int
    up_count: int
    params: ModelParams
    pulse_id: str = ""

    def __post_init__(self):
        if self.shots < 1:
            raise DomainError("a record needs at least one shot")
        if not 0 <= self.up_count <= self.shots:
            raise DomainError(f"up_count {self.up_count} outside [0, {self.shots}]")

    def with_count(self, up_count: int) -> "MeasurementRecord":
        return MeasurementRecord(self.shots, int(up_count), self.params, self.pulse_id)


def simulate_measurements(params: ModelParams, pulse: PiecewisePulse, shots: int, seed: int,
                          pulse_id: str = "", initial=UP) -> MeasurementRecord:
    """Draw the number of up outcomes from Binomial(shots, P_up(params))."""
    if shots < 1:
        raise DomainError("shots must be >= 1")
    p_up, _ = outcome_probabilities(params, pulse, initial)
    return MeasurementRecord(shots, int(_rng(seed, 0).binomial(shots, p_up)), params, pulse_id)


# -- likelihood --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LikelihoodCurve:
    grid: np.ndarray
    loglik: np.ndarray

    def __post_init__(self):
        if len(self.grid) != len(self.loglik):
            raise DomainError("grid and loglik differ in length")
        if np.any(np.diff(self.grid) <= 0):
            raise DomainError("likelihood grid must increase strictly")

    def argmax(self) -> int:
        return int(np.argmax(self.loglik))


def _counts_loglik(p_up, n_up: int, shots: int):
    """n ln P + (N - n) ln(1 - P) with 0 ln 0 = 0 and -inf for impossible data."""
    p = np.clip(np.asarray(p_up, dtype=float), 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(n_up > 0, n_up * np.log(p), 0.0)
        b = np.where(shots - n_up > 0, (shots - n_up) * np.log(q), 0.0)
    return a + b


class LikelihoodModel:
    """P_up(Delta) for one pulse, cached on the estimation grid.

    The other parameters (alpha, gamma) are taken from ``params``.
    """

    def __init__(self, pulse: PiecewisePulse, params: ModelParams, prior: tuple[float, float],
                 grid_points: int = DEFAULT_GRID_POINTS, initial=UP):
        lo, hi = map(float, prior)
        if not lo < hi:
            raise DomainError("prior interval must have low < high")
        if grid_points < 3:
            raise DomainError("the likelihood grid needs at least 3 points")
        self.pulse = pulse
        self.params = params
        self.prior = (lo, hi)
        self._segments = pulse.arrays() if pulse is not None else ([], [], [])
        self._r0 = tuple(float(v) for v in bloch_array(as_density(initial)))
        self.grid = np.linspace(lo, hi, grid_points)
        self.p_grid = np.array([self.p_up(d) for d in self.grid])

    def p_up(self, delta: float) -> float:
        p = self.params
        d, a, ph = self._segments
        r = _bloch.propagate(float(delta), p.alpha, p.gamma, d, a, ph, self._r0)
        return min(max(0.5 * (1.0 + r[2]), 0.0), 1.0)

    def curve(self, n_up: int, shots: int) -> LikelihoodCurve:
        return LikelihoodCurve(self.grid, _counts_loglik(self.p_grid, n_up, shots))

    def loglik_at(self, delta: float, n_up: int, shots: int) -> float:
        return float(_counts_loglik(self.p_up(delta), n_up, shots))

    def refine(self, idx: int, n_up: int, shots: int, lo_idx: int | None = None,
               hi_idx: int | None = None, xatol: float = DEFAULT_XATOL) -> tuple[float, float]:
        """Bounded scalar maximization between the grid neighbours of ``idx``."""
        g = self.grid
        lo_idx = max(idx - 1, 0 if lo_idx is None else lo_idx)
        hi_idx = min(idx + 1, len(g) - 1 if hi_idx is None else hi_idx)
        x0 = float(g[idx])
        ll0 = self.loglik_at(x0, n_up, shots)
        if hi_idx <= lo_idx or not math.isfinite(ll0):
            return x0, ll0
        res = minimize_scalar(lambda x: -self.loglik_at(x, n_up, shots),
                              bounds=(float(g[lo_idx]), float(g[hi_idx])), method="bounded",
                              options={"xatol": xatol})
        if math.isfinite(res.fun) and -res.fun >= ll0:
            return float(res.x), float(-res.fun)
        return x0, ll0


def log_likelihood(record: MeasurementRecord, pulse: PiecewisePulse, grid: Sequence[float],
                   initial=UP) -> LikelihoodCurve:
    """Binomial log-likelihood of the record on a grid of detunings."""
    grid = np.asarray(grid, dtype=float)
    p = record.params
    model_p = [outcome_probabilities(ModelParams(d, p.alpha, p.gamma, p.omega0), pulse, initial)[0]
               for d in grid]
    return LikelihoodCurve(grid, _counts_loglik(np.array(model_p), record.up_count, record.shots))


# -- maximum likelihood ------------------------------------------------------

@dataclass(frozen=True)
class Peak:
    estimate: float
    loglik: float
    basin: tuple[float, float]


@dataclass(frozen=True)
class MleResult:
    estimate: float
    loglik: float
    at_boundary: bool
    peaks: tuple[Peak, ...]

    @property
    def multimodal(self) -> bool:
        return len(self.peaks) > 1


def _local_maxima(ll: np.ndarray) -> list[int]:
    n = len(ll)
    out = []
    for i in range(n):
        if not math.isfinite(ll[i]):
            continue
        left = ll[i - 1] if i > 0 else -math.inf
        right = ll[i + 1] if i < n - 1 else -math.inf
        if ll[i] > left and ll[i] >= right:
            out.append(i)
    return out


def _basin(ll: np.ndarray, idx: int) -> tuple[int, int]:
    """Grid index range descending monotonically on both sides of ``idx``."""
    lo = idx
    while lo > 0 and ll[lo - 1] <= ll[lo]:
        lo -= 1
    hi = idx
    while hi < len(ll) - 1 and ll[hi + 1] <= ll[hi]:
        hi += 1
    return lo, hi


def _peak_indices(ll: np.ndarray, fraction: float) -> list[int]:
    best = int(np.argmax(ll))
    top = ll[best]
    if not math.isfinite(top):
        return [best]
    if np.all(ll == top):
        return [best]
    slack = fraction * abs(top) if top != 0 else 0.0
    return [i for i in _local_maxima(ll) if ll[i] >= top - slack] or [best]


def _mle_counts(model: LikelihoodModel, n_up: int, shots: int,
                fraction: float = PEAK_FRACTION) -> MleResult:
    ll = _counts_loglik(model.p_grid, n_up, shots)
    g = model.grid
    peaks = []
    for i in _peak_indices(ll, fraction):
        blo, bhi = _basin(ll, i)
        x, v = model.refine(i, n_up, shots)
        peaks.append(Peak(x, v, (float(g[blo]), float(g[bhi]))))
    # global argmax first; exact ties go to the peak nearest the prior centre
    centre = 0.5 * (g[0] + g[-1])
    peaks.sort(key=lambda pk: (-pk.loglik, abs(pk.estimate - centre), pk.estimate))
    top = peaks[0]
    at_boundary = bool(abs(top.estimate - g[0]) <= (g[1] - g[0]) or abs(top.estimate - g[-1]) <= (g[1] - g[0]))
    return MleResult(top.estimate, top.loglik, at_boundary, tuple(peaks))


def mle(record: MeasurementRecord, pulse: PiecewisePulse, prior: tuple[float, float] | None = None,
        grid_points: int = DEFAULT_GRID_POINTS, model: LikelihoodModel | None = None) -> MleResult:
    """Grid argmax of the log-likelihood, refined to 1e-6 in the bracketing interval.

    Secondary local maxima whose log-likelihood lies within 1 % of the global
    one are reported in ``peaks``; ``at_boundary`` flags an argmax at an edge
    of the prior interval.
    """
    if model is None:
        model = LikelihoodModel(pulse, record.params, prior or default_prior(), grid_points)
    return _mle_counts(model, record.up_count, record.shots)


# -- bootstrap ---------------------------------------------------------------

@dataclass(frozen=True)
class PeakStatistics:
    estimate: float
    mean: float
    std: float
    ci95: tuple[float, float]

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci95[1] - self.ci95[0])

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "mean": self.mean, "std": self.std,
                "ci95": list(self.ci95), "half_width": self.half_width}


@dataclass(frozen=True, eq=False)
class EstimationResult:
    estimate: float
    ci95: tuple[float, float]
    hist_edges: np.ndarray
    hist_density: np.ndarray
    resamples: int
    seed: int
    mean: float
    at_boundary: bool
    peaks: tuple[PeakStatistics, ...] = field(default=())
    bootstrap_estimates: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci95[1] - self.ci95[0])

    def histogram_integral(self) -> float:
        return float(np.sum(self.hist_density * np.diff(self.hist_edges)))

    def peak_near(self, value: float) -> PeakStatistics:
        return min(self.peaks, key=lambda p: abs(p.estimate - value))

    def as_dict(self) -> dict:
        return {
            "estimate": self.estimate, "ci95": list(self.ci95), "half_width": self.half_width,
            "mean": self.mean, "resamples": self.resamples, "seed": self.seed,
            "at_boundary": self.at_boundary, "peaks": [p.as_dict() for p in self.peaks],
            "histogram": {"edges": self.hist_edges.tolist(), "density": self.hist_density.tolist()},
        }


def _percentile_ci(values: np.ndarray) -> tuple[float, float]:
    lo, hi = np.percentile(values, [2.5, 97.5])
    return float(lo), float(hi)


def _histogram(values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 5e-7, hi + 5e-7
    density, edges = np.histogram(values, bins=bins, range=(lo, hi), density=True)
    return edges, density


def bootstrap(record: MeasurementRecord, pulse: PiecewisePulse, resamples: int, seed: int,
              prior: tuple[float, float] | None = None, grid_points: int = DEFAULT_GRID_POINTS,
              bins: int = 80, model: LikelihoodModel | None = None) -> EstimationResult:
    """Binomial bootstrap of the record with an MLE per resample.

    Each peak of the original likelihood is also followed independently: the
    resampled likelihood is maximized inside that peak's basin, giving
    per-peak percentile intervals.
    """
    if resamples < 100:
        raise DomainError("bootstrap needs at least 100 resamples")
    if model is None:
        model = LikelihoodModel(pulse, record.params, prior or default_prior(), grid_points)
    base = _mle_counts(model, record.up_count, record.shots)
    n, shots = record.up_count, record.shots
    # an all-up or all-down record would resample to itself forever; shift the
    # rate by half a count so the interval reflects the sampling uncertainty
    rate = n / shots if 0 < n < shots else (n + 0.5) / (shots + 1)
    counts = _rng(seed, 1).binomial(shots, rate, size=resamples)
    g = model.grid
    basins = [(int(np.searchsorted(g, pk.basin[0])), int(np.searchsorted(g, pk.basin[1])))
              for pk in base.peaks]
    global_est = np.empty(resamples)
    per_peak = np.empty((len(basins), resamples))
    for b, n_up in enumerate(counts):
        ll = _counts_loglik(model.p_grid, int(n_up), record.shots)
        best_v = -math.inf
        for k, (lo, hi) in enumerate(basins):
            i = lo + int(np.argmax(ll[lo:hi + 1]))
            x, v = model.refine(i, int(n_up), record.shots, lo, hi)
            per_peak[k, b] = x
            if v > best_v:
                best_v, global_est[b] = v, x
        if len(basins) == 1:
            continue
        # the global estimate may also sit outside every original basin
        i = int(np.argmax(ll))
        if not any(lo <= i <= hi for lo, hi in basins):
            x, v = model.refine(i, int(n_up), record.shots)
            if v > best_v:
                global_est[b] = x
    peaks = tuple(PeakStatistics(pk.estimate, float(per_peak[k].mean()), float(per_peak[k].std(ddof=1)),
                                 _percentile_ci(per_peak[k])) for k, pk in enumerate(base.peaks))
    edges, density = _histogram(global_est, bins)
    return EstimationResult(base.estimate, _percentile_ci(global_est), edges, density, resamples,
                            int(seed), float(global_est.mean()), base.at_boundary, peaks, global_est)


# -- Bloch sweep --------------------------------------------------------------

@dataclass(frozen=True)
class Intersection:
    delta_a: float
    delta_b: float
    position: tuple[float, float, float]
    gap: float


@dataclass(frozen=True, eq=False)
class BlochCurve:
    offsets: np.ndarray
    points: tuple[BlochVector, ...]
    intersections: tuple[Intersection, ...]
    degenerate: bool = False

    def __post_init__(self):
        if len(self.offsets) != len(self.points):
            raise DomainError("offsets and points differ in length")
        if np.any(np.diff(self.offsets) <= 0):
            raise DomainError("offsets must increase strictly")

    def array(self) -> np.ndarray:
        return np.array([p.as_array() for p in self.points]).reshape(-1, 3)

    def clusters(self, radius: float = 5e-2) -> list[tuple[float, float, float]]:
        """Distinct crossing positions (intersections merged within ``radius``)."""
        out: list[np.ndarray] = []
        for it in self.intersections:
            p = np.array(it.position)
            if all(np.linalg.norm(p - q) > radius for q in out):
                out.append(p)
        return [tuple(float(v) for v in q) for q in out]


def _seg_distance(p0, p1, q0, q1) -> tuple[float, float, float]:
    """Closest approach of segments p0p1 and q0q1: (distance, s, t)."""
    u, v, w = p1 - p0, q1 - q0, p0 - q0
    a, b, c, d, e = u @ u, u @ v, v @ v, u @ w, v @ w
    den = a * c - b * b
    s = 0.0 if den < 1e-300 else float(np.clip((b * e - c * d) / den, 0.0, 1.0))
    t = float(np.clip((b * s + e) / c, 0.0, 1.0)) if c > 0 else 0.0
    s = float(np.clip((b * t - d) / a, 0.0, 1.0)) if a > 0 else 0.0
    return float(np.linalg.norm(p0 + s * u - q0 - t * v)), s, t


def bloch_sweep(pulse: PiecewisePulse | None, params: ModelParams, offsets: Sequence[float],
                tf: float | None = None, initial=UP, merge_tol: float = MERGE_TOL) -> BlochCurve:
    """Final Bloch vectors over a range of detunings, with self-intersections.

    ``tf`` beyond the pulse length extends it with a zero-amplitude hold;
    shorter ``tf`` truncates it.  Crossings are pairs of non-neighbouring
    offsets whose polyline pieces come within ``merge_tol``; each is refined
    by minimizing the distance between the two continuous branches.
    """
    offsets = np.asarray(offsets, dtype=float)
    if offsets.ndim != 1 or offsets.size == 0:
        raise DomainError("offsets must be a non-empty 1-D sequence")
    if np.any(np.diff(offsets) <= 0):
        raise DomainError("offsets must increase strictly")
    pulse = _fit_to(pulse, tf)
    d, a, ph = pulse.arrays() if pulse is not None else ([], [], [])
    r0 = tuple(float(v) for v in bloch_array(as_density(initial)))

    def final(delta: float) -> np.ndarray:
        return np.array(_bloch.propagate(float(delta), params.alpha, params.gamma, d, a, ph, r0))

    pts = np.array([final(x) for x in offsets]).reshape(-1, 3)
    points = tuple(BlochVector(*map(float, p)) for p in pts)
    n = len(pts)
    if n > 1 and np.max(np.linalg.norm(pts - pts[0], axis=1)) < 1e-12:
        return BlochCurve(offsets, points, (), degenerate=True)
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(steps)])
    found: list[Intersection] = []
    if n >= 4:
        cands = []
        for i in range(n - 1):
            js = np.arange(i + 2, n - 1)
            if js.size == 0:
                continue
            # cheap prefilter on bounding distances
            lo_d = np.linalg.norm(pts[js] - pts[i], axis=1) - steps[js] - steps[i]
            for j in js[lo_d < merge_tol]:
                if arc[j] - arc[i + 1] < 10 * merge_tol:
                    continue
                dist, s, t = _seg_distance(pts[i], pts[i + 1], pts[j], pts[j + 1])
                if dist < merge_tol:
                    cands.append((dist, i, j, s, t))
        cands.sort()
        taken: list[tuple[int, int]] = []
        window = max(2, int(math.ceil(10 * merge_tol / max(np.median(steps), 1e-12))))
        for dist, i, j, s, t in cands:
            if any(abs(i - ti) <= window and abs(j - tj) <= window for ti, tj in taken):
                continue
            taken.append((i, j))
            xa = offsets[i] + s * (offsets[i + 1] - offsets[i])
            xb = offsets[j] + t * (offsets[j + 1] - offsets[j])
            res = minimize(lambda z: float(np.sum((final(z[0]) - final(z[1])) ** 2)), [xa, xb],
                           method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-16, "maxfev": 2000})
            za, zb = sorted(map(float, res.x))
            gap = math.sqrt(max(res.fun, 0.0))
            spacing = float(np.min(np.diff(offsets)))
            if any(abs(za - f.delta_a) < spacing and abs(zb - f.delta_b) < spacing for f in found):
                continue
            if gap < merge_tol and offsets[0] <= za and zb <= offsets[-1] and zb - za > 1e-6:
                pos = 0.5 * (final(za) + final(zb))
                found.append(Intersection(za, zb, tuple(float(v) for v in pos), gap))
    found.sort(key=lambda it: (it.delta_a, it.delta_b))
    return BlochCurve(offsets, points, tuple(found))


def _fit_to(pulse: PiecewisePulse | None, tf: float | None) -> PiecewisePulse | None:
    if tf is None:
        return pulse
    if tf < 0:
        raise DomainError("tf must be non-negative")
    if tf == 0:
        return None
    if pulse is None:
        return PiecewisePulse.from_lists([tf], [0.0])
    total = pulse.total_duration
    if tf <= total * (1 + 1e-15):
        return pulse.truncated(min(tf, total))
    return PiecewisePulse(pulse.segments + PiecewisePulse.from_lists([tf - total], [0.0]).segments)
