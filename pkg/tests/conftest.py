import numpy as np
import pytest

from renewglm.glm import Batch, Family
from renewglm.simulation import gen_covariates, gen_response, true_beta


def make_stream(family, p=10, n=100, B=5, seed=0, rho=0.5):
    """List of (X, y) chunks from the simulation design."""
    rng = np.random.default_rng(seed)
    beta0 = true_beta(p, family)
    out = []
    for _ in range(B):
        X = gen_covariates(n, p, rho, rng)
        out.append((X, gen_response(family, X, beta0, rng)))
    return out


def as_batches(chunks):
    return [Batch(y, X, t + 1) for t, (X, y) in enumerate(chunks)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=[Family.GAUSSIAN, Family.BINOMIAL], ids=["gaussian", "logit"])
def family(request):
    return request.param


ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail, elapsed, budget):
    within = elapsed < budget
    ok = passed and within
    line = (f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail} "
            f"({elapsed:.1f}s, budget {budget:.0f}s{'' if within else ' EXCEEDED'})")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
