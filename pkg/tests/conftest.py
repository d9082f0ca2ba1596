import json
import math
from importlib import resources

import numpy as np
import pytest

from qestctl.qmodel import ModelParams, PiecewisePulse, PureState

DELTA0 = 0.2
TF = 3.235 * math.pi


def preset(name: str) -> dict:
    return json.loads((resources.files("qestctl") / "presets" / f"{name}.json").read_text())


def preset_pulse(name: str) -> PiecewisePulse:
    return PiecewisePulse.from_dicts(preset(name)["pulse"]["segments"])


@pytest.fixture(scope="session")
def selective_pulse() -> PiecewisePulse:
    return preset_pulse("fig2-selective")


@pytest.fixture(scope="session")
def qfi_pulse() -> PiecewisePulse:
    return preset_pulse("fig2-qfi")


@pytest.fixture(scope="session")
def params0() -> ModelParams:
    return ModelParams(delta=DELTA0)


def random_pulse(rng: np.random.Generator, segments: int = 5, d_max: float = 3.0) -> PiecewisePulse:
    return PiecewisePulse.from_lists(rng.uniform(0.05, d_max, segments), rng.uniform(0, 1, segments),
                                     rng.uniform(-math.pi, math.pi, segments))


def random_pure(rng: np.random.Generator) -> PureState:
    return PureState.normalized(rng.normal(size=2) + 1j * rng.normal(size=2))


def random_density(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_traceless_hermitian(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h = 0.5 * (g + g.conj().T)
    return h - np.trace(h) / dim * np.eye(dim)


# -- acceptance verdicts --------------------------------------------------------

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion and fail on any red check.

    Every sub-check is evaluated and reported before the test asserts, so a red
    sub-check does not hide the others.
    """
    def record(criterion: int, checks: list[tuple[str, bool]]):
        ok = all(passed for _, passed in checks)
        detail = "; ".join(f"{'ok' if passed else 'FAILED'}: {text}" for text, passed in checks)
        _VERDICTS.append(f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'} | {detail}")
        print(_VERDICTS[-1])
        assert ok, detail
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS):
            terminalreporter.write_line(line)
