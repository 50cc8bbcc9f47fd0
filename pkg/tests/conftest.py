"""Shared oracles and generators for the test suite."""

import hypothesis
import numpy as np
import pytest

from speclaw import qve

hypothesis.settings.register_profile(
    "default", deadline=None, max_examples=40, derandomize=True
)
hypothesis.settings.load_profile("default")


def semicircle_stieltjes(z: complex) -> complex:
    """Closed form m(z) = (-z + sqrt(z^2 - 4))/2 on the branch with Im m > 0."""
    z = complex(z)
    root = np.sqrt(z * z - 4.0)
    m = (-z + root) / 2.0
    if m.imag < 0 or (m.imag == 0 and (m.real * z.real > 0 or abs(m.real) > 1)):
        m = (-z - root) / 2.0
    return complex(m)


def semicircle_density(x: float) -> float:
    return float(np.sqrt(max(4.0 - x * x, 0.0)) / (2.0 * np.pi))


def semicircle_cdf_antiderivative(x: float) -> float:
    """Antiderivative of the semicircle density, zero at x = 0."""
    x = float(np.clip(x, -2.0, 2.0))
    return x * np.sqrt(4.0 - x * x) / (4.0 * np.pi) + np.arcsin(x / 2.0) / np.pi


def semicircle_mass(lo: float, hi: float) -> float:
    return semicircle_cdf_antiderivative(hi) - semicircle_cdf_antiderivative(lo)


def random_profile(n: int, seed: int, low: float = 0.3, high: float = 1.0) -> qve.VarianceProfile:
    gen = np.random.default_rng(seed)
    a = gen.uniform(low, high, size=(n, n))
    a = (a + a.T) / 2.0
    return qve.VarianceProfile(n=n, entries=a)


@pytest.fixture(scope="session")
def constant_curve():
    """Density curve of the constant profile on the default grid (session cache)."""
    return qve.extract_density(qve.VarianceProfile.constant(4), qve.default_grid())
