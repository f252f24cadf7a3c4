import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Kernels are JIT compiled on first use, so per-example deadlines are meaningless.
settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_instance(rng, n, spread=2.0, momentum=0.3):
    """Points in a cube of side ``2 * spread``, small momenta, a nearby target."""
    q = rng.uniform(-spread, spread, size=(n, 3))
    p = momentum * rng.normal(size=(n, 3))
    target = q + 0.5 * rng.normal(size=(n, 3))
    return q, p, target


def brute_hamiltonian(q, p, sigma):
    """Direct transcription of the double sum, kept deliberately naive."""
    h = 0.0
    for i in range(len(q)):
        for j in range(len(q)):
            r2 = sum((q[i][d] - q[j][d]) ** 2 for d in range(3))
            h += sum(p[i][d] * p[j][d] for d in range(3)) * np.exp(-r2 / (2 * sigma ** 2))
    return h


def rel_err(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def fd_objective_gradient(q0, p0, target, config, h=1e-5):
    """Central differences of the total objective with respect to p0."""
    from geoshoot.shooting import objective

    g = np.zeros_like(p0)
    for idx in np.ndindex(p0.shape):
        pp = p0.copy()
        pm = p0.copy()
        pp[idx] += h
        pm[idx] -= h
        g[idx] = (objective(q0, pp, target, config).total
                  - objective(q0, pm, target, config).total) / (2 * h)
    return g


def max_rel_component_error(g, ref):
    """Largest per-component error, relative to the gradient's overall scale.

    Components that are tiny compared to the largest one are compared against
    the vector scale rather than themselves, since central differences cannot
    resolve them to a relative 1e-5 anyway.
    """
    scale = np.max(np.abs(ref))
    denom = np.maximum(np.abs(ref), 1e-3 * scale)
    return float(np.max(np.abs(g - ref) / denom))


# One line per acceptance criterion, printed at the end of the run whatever
# the capture mode.
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[num])
