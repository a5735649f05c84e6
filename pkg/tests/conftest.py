import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from tsirelson_lab import hilbert, tsirelson

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# state quoted to three decimals for the constrained optimum
APPENDIX_J = np.array([
    -0.281 + 0.52j, 0.096 - 0.127j, -0.024 + 0.102j, 0.423 - 0.539j,
    -0.066 + 0.068j, 0.012 - 0.067j, -0.25 + 0.262j,
])

LG_CUTOFF = 12
TAU = 2 * math.pi / 3


def random_state(rng, cutoff):
    return hilbert.FockVector(rng.normal(size=cutoff + 1) + 1j * rng.normal(size=cutoff + 1))


def random_subspace_state(rng, k, cutoff=LG_CUTOFF):
    c = np.zeros(cutoff + 1, dtype=complex)
    levels = np.arange(k, cutoff + 1, 3)
    c[levels] = rng.normal(size=levels.size) + 1j * rng.normal(size=levels.size)
    return hilbert.FockVector(c)


def near_extremal_state(rng, cutoff=LG_CUTOFF, noise=0.3):
    """Extremal eigenvector of A at a random cutoff in 6..cutoff, kicked by up to ``noise`` in norm."""
    n = int(rng.integers(6, cutoff + 1))
    rep = tsirelson.spectrum(n)
    j = -1 if rng.random() < 0.5 else 0
    kick = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    c = rep.eigenvectors[j].coefficients + noise * rng.random() * kick / np.linalg.norm(kick)
    return hilbert.FockVector(c)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def states(draw, max_cutoff=LG_CUTOFF):
    rng = np.random.default_rng(draw(seeds))
    n = draw(st.integers(min_value=1, max_value=max_cutoff))
    kind = draw(st.sampled_from(["generic", "subspace", "extremal"]))
    if kind == "generic":
        return random_state(rng, n)
    if kind == "subspace":
        return random_subspace_state(rng, int(rng.integers(0, 3)), max_cutoff)
    return near_extremal_state(rng, max_cutoff)


@pytest.fixture(scope="session")
def zaw():
    return hilbert.zaw_state()


@pytest.fixture(scope="session")
def zaw_flipped():
    return hilbert.zaw_flipped_state()
