import math

import numpy as np
import pytest

from qubitqfim.linalg import BlochVector, DensityMatrix, Hermitian2, density_from_bloch
from qubitqfim.models import DissipativeQubitModel, ParamPoint

LN2 = math.log(2.0)


def random_hermitian(rng, scale=1.0) -> Hermitian2:
    a11, a22, re, im = rng.normal(scale=scale, size=4)
    return Hermitian2(a11, a22, complex(re, im))


def random_bloch(rng, rmax=1.0) -> BlochVector:
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return BlochVector(*(v * rmax * rng.uniform() ** (1 / 3)))


def random_density(rng, rmax=1.0) -> DensityMatrix:
    return density_from_bloch(random_bloch(rng, rmax))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def dissipative():
    return DissipativeQubitModel(time=1.0)


@pytest.fixture
def ref_point():
    """(gamma, x) = (ln 2, 1/2), where exp(-t gamma) = 1/2 at t = 1."""
    return ParamPoint(("gamma", "x"), (LN2, 0.5))


def random_bloch_field(rng):
    """Smooth random W(x, y) = r n(theta, phi) with 0.1 <= r <= 0.9.

    Returns a BlochModel whose fields are plain closures.
    """
    from qubitqfim.models import BlochModel

    a = rng.normal(size=4)
    b = rng.normal(scale=0.8, size=4)
    c = rng.normal(scale=0.8, size=4)

    def parts(p):
        x, y = p["x"], p["y"]
        r = 0.5 + 0.4 * math.tanh(a[0] + a[1] * x + a[2] * y + a[3] * x * y)
        theta = 1.3 + b[0] + b[1] * x + b[2] * y + b[3] * x * x
        phi = c[0] + c[1] * x + c[2] * y + c[3] * math.sin(x * y)
        return r, theta, phi

    def w1(p):
        r, th, ph = parts(p)
        return r * math.sin(th) * math.cos(ph)

    def w2(p):
        r, th, ph = parts(p)
        return r * math.sin(th) * math.sin(ph)

    def w3(p):
        r, th, _ = parts(p)
        return r * math.cos(th)

    return BlochModel(w1, w2, w3)


def random_full_rank_models(n, seed=0):
    """Seeded (model, point) pairs: eigenvalues in [0.05, 0.95], gap > 1e-3,
    QFIM condition number below 1e4."""
    from qubitqfim.models import ParamPoint
    from qubitqfim.qfim import qfim_bloch

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        model = random_bloch_field(rng)
        p = ParamPoint.of(x=rng.uniform(-1, 1), y=rng.uniform(-1, 1))
        lo, hi = model.density(p).eigenvalues
        if lo < 0.05 or hi > 0.95 or hi - lo <= 1e-3:
            continue
        ev = qfim_bloch(model, p).eigenvalues
        if ev[-1] <= 1e-4 * ev[0]:
            continue
        out.append((model, p))
    return out


_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or report.when != "call":
        return
    line = f"{'PASS' if report.passed else 'FAIL'} criterion {marker.args[0]}: {marker.args[1]}"
    if report.failed:
        line += f" -- {str(report.longrepr.reprcrash.message).splitlines()[0]}"
    _ACCEPTANCE.append(line)
    print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
