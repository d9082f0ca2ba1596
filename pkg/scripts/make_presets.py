"""Regenerate the shipped scenario presets in ``src/qestctl/presets``.

Pulses that come from an optimizer run are computed here once and stored
inline, so the presets for ``simulate``/``estimate`` do not re-optimize.

    python3 scripts/make_presets.py
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from qestctl.qmodel import ModelParams, PiecewisePulse
from qestctl.pulseopt import OptimizerConfig, SelectivityCost, SelectivitySpec, optimize

OUT = Path(__file__).resolve().parents[1] / "src" / "qestctl" / "presets"
DELTA0 = 0.2
TF = 3.235 * math.pi
SEARCH = {"segments": 5, "levels": 40, "restarts": 4, "seed": 1}
METRICS = ["bures", "qfi", "cfi", "bound", "fd_qfi"]


def _segments(pulse):
    return {"segments": pulse.as_dicts()}


def selective_pulse():
    cost = SelectivityCost(ModelParams(delta=DELTA0), SelectivitySpec.delta_pair(DELTA0), tf=TF)
    return optimize(cost, OptimizerConfig(**SEARCH)).best_pulse


def t_pulse(delta0: float = DELTA0, omega0: float = 1.0) -> float:
    """Duration of the resonant-amplitude pulse taking |up> to the equator at offset delta0."""
    w = math.sqrt(omega0 ** 2 + 4 * delta0 ** 2)
    return 4 * math.asin(w / (omega0 * math.sqrt(2))) / w


def qfi_pulse():
    """Rotate to the equator at constant phase, then hold until t_f.

    The free search reaches a slightly higher QFI with unequal segment phases,
    but that breaks the Delta -> -Delta symmetry of the outcome probability
    that the two-peak estimation picture relies on.
    """
    tp = t_pulse()
    return PiecewisePulse.from_dicts([{"duration": tp, "amplitude": 1.0, "phase": 0.0},
                                      {"duration": TF - tp, "amplitude": 0.0, "phase": 0.0}])


def scenario(name, description, **blocks):
    return {"schema_version": 1, "name": name, "description": description, **blocks}


def main() -> None:
    sel, qfi = _segments(selective_pulse()), _segments(qfi_pulse())
    g0 = {"delta": DELTA0, "alpha": 1.0, "gamma": 0.0}
    track = {"param": "Delta", "systems": [-DELTA0, DELTA0], "samples_per_segment": 32}
    presets = [
        scenario("fig2-selective", "Selective pulse for Delta = -0.2 / +0.2 at t_f = 3.235 pi, no damping.",
                 model=g0, initial="up", pulse=sel, metrics=METRICS, simulate=track),
        scenario("fig2-qfi", "Rotate to the equator, then free precession: QFI-type pulse for Delta at Delta0 = 0.2, t_f = 3.235 pi.",
                 model=g0, initial="up", pulse=qfi, metrics=METRICS, simulate=track),
        scenario("fig3", "The undamped selective pulse applied with gamma = 0.05.",
                 model={**g0, "gamma": 0.05}, initial="up", pulse=sel, metrics=METRICS, simulate=track),
        scenario("fig4A", "Estimation of Delta* = 0.25 with the equator-then-hold QFI pulse.",
                 model=g0, initial="up", pulse=qfi,
                 estimation={"true_delta": 0.25, "shots": 50000, "resamples": 1000, "seed": 7,
                             "prior": [-0.6, 0.6], "grid_points": 801, "bins": 80}),
        scenario("fig4B", "Estimation of Delta* = 0.25 with the selective pulse.",
                 model=g0, initial="up", pulse=sel,
                 estimation={"true_delta": 0.25, "shots": 50000, "resamples": 1000, "seed": 7,
                             "prior": [-0.2, 0.6], "grid_points": 801, "bins": 80}),
        scenario("fig5", "Final Bloch vectors over Delta in [-1, 1] after a pi/2 pulse about x "
                 "(alpha = 2, i.e. H = -sigma_x / 2 during the pulse), t_f = 3 pi.",
                 model={"delta": 0.0, "alpha": 2.0, "gamma": 0.0}, initial="up",
                 pulse={"segments": [{"duration": math.pi / 2, "amplitude": 1.0, "phase": 0.0}]},
                 sweep={"offsets": {"start": -1.0, "stop": 1.0, "num": 2001}, "tf": 3 * math.pi}),
        scenario("delta-selective-g0", "Optimize the Delta-selective pulse at fixed t_f = 3.235 pi.",
                 model=g0, initial="up",
                 optimizer={"cost": "selectivity", "tf": TF,
                            "selectivity": {"param": "Delta", "ensemble": [-DELTA0, DELTA0],
                                            "targets": ["up", "down"]},
                            "config": SEARCH}),
        scenario("gamma-qfi", "Optimize the QFI for gamma at gamma0 = 0.05, Delta = 0, t_f = 18.",
                 model={"delta": 0.0, "alpha": 1.0, "gamma": 0.05}, initial="up",
                 optimizer={"cost": "qfi", "param": "Gamma", "tf": 18.0,
                            "config": {"segments": 3, "levels": 30, "restarts": 4, "proposals": 100,
                                       "seed": 0}}),
    ]
    OUT.mkdir(parents=True, exist_ok=True)
    for p in presets:
        (OUT / f"{p['name']}.json").write_text(json.dumps(p, indent=2) + "\n")
        print("wrote", p["name"])


if __name__ == "__main__":
    main()
