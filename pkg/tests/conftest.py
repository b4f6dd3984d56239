import numpy as np
import pytest

from droopreg import FeederParams, build_scenario, builtin_cigre, run
from droopreg.scenario import CIGRE_R, CIGRE_R_PRIME, CIGRE_S_BAR, CIGRE_X, CIGRE_X_PRIME

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance_log(request):
    """Append one 'ACn name: PASS/FAIL (detail)' line per criterion."""
    log = request.config.stash[_ACCEPTANCE]

    def record(tag, name, ok, detail=""):
        log.append(f"{tag} {name}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else ""))
        return ok

    return record


@pytest.fixture
def cigre_feeder():
    return FeederParams(CIGRE_R, CIGRE_X, CIGRE_R_PRIME, CIGRE_X_PRIME, CIGRE_S_BAR, 230.0)


@pytest.fixture(scope="session")
def cigre_config():
    return builtin_cigre()


@pytest.fixture(scope="session")
def cigre_adaptive(cigre_config):
    scenario, design = build_scenario(cigre_config)
    return scenario, design, run(scenario)


@pytest.fixture(scope="session")
def cigre_baseline(cigre_config):
    scenario, design = build_scenario(cigre_config, non_adaptive=True)
    return scenario, design, run(scenario)


def random_feeder(rng, n, scale=0.05):
    return FeederParams(
        rng.uniform(0, scale, n),
        rng.uniform(0, scale, n),
        rng.uniform(0, scale, n),
        rng.uniform(0, scale, n),
        rng.uniform(1000, 8000, n),
        230.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
