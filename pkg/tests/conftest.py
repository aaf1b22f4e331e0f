import numpy as np
import pytest

from phasemap import QGrid, kernels, validate_instance


@pytest.fixture
def tiny_doc():
    """Well-formed 3-element, 2-sample instance document."""
    return {
        "elements": ["A", "B", "C"],
        "q": [1.0, 1.1, 1.2, 1.3, 1.4],
        "samples": [
            {
                "id": "s0",
                "composition": [0.5, 0.25, 0.25],
                "intensity": [0.0, 1.0, 2.0, 1.0, 0.0],
            },
            {
                "id": "s1",
                "composition": [0.2, 0.3, 0.5],
                "intensity": [1.0, 0.5, 0.0, 0.5, 1.0],
            },
        ],
    }


def make_instance(n=48, j=6, seed=0, q_lo=1.0, q_hi=3.0):
    """Random smooth non-negative instance on a linear grid."""
    rng = np.random.default_rng(seed)
    q = np.linspace(q_lo, q_hi, n)
    samples = []
    for idx in range(j):
        sig = np.zeros(n)
        for _ in range(4):
            c = rng.uniform(q_lo, q_hi)
            w = rng.uniform(0.05, 0.2) * (q_hi - q_lo)
            sig += rng.uniform(0.2, 1.0) * np.exp(-0.5 * ((q - c) / w) ** 2)
        comp = rng.dirichlet((1.0, 1.0, 1.0))
        samples.append(
            {"id": f"s{idx}", "composition": comp.tolist(), "intensity": sig.tolist()}
        )
    return validate_instance(
        {"elements": ["A", "B", "C"], "q": q.tolist(), "samples": samples}
    )


def geometric_grid(n=64, q_lo=1.0, q_hi=4.0):
    values = np.exp(np.linspace(np.log(q_lo), np.log(q_hi), n))
    return QGrid.from_values(values)


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    """Run a test once per available kernel backend."""
    previous = kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


@pytest.fixture
def numpy_backend():
    previous = kernels.set_backend("numpy")
    yield
    kernels.set_backend(previous)
