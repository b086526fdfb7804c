from __future__ import annotations

import numpy as np
import pytest

from rhs_wmmse.channel import ChannelSet, subband_centers

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return (rng.normal(size=shape) + 1j * rng.normal(size=shape)) / np.sqrt(2)


def random_coupling(rng, U, N, radius):
    """Zero-diagonal coupling stack with spectral norm ``radius`` per subband.

    Since ``m <= 1`` the spectral radius of ``D(m) Xi`` is then at most ``radius``.
    """
    Xi = crandn(rng, U, N, N)
    for u in range(U):
        np.fill_diagonal(Xi[u], 0)
        Xi[u] *= radius / np.linalg.norm(Xi[u], 2)
    return Xi


def random_channels(rng, U, K, N, sigma2=1.0):
    h = crandn(rng, U, K, N)
    plan = subband_centers(28e9, 1e9, U)
    s2 = np.broadcast_to(np.asarray(sigma2, dtype=float), (U, K)).copy()
    return ChannelSet(h=h, sigma2=s2, users=(), plan=plan)


def random_instance(rng, U=2, K=2, N=6, L=3, radius=0.3, sigma2=1.0):
    """Random (channels, Xi, F, m, V) with unit-modulus feeds."""
    ch = random_channels(rng, U, K, N, sigma2)
    Xi = random_coupling(rng, U, N, radius)
    F = np.exp(1j * rng.uniform(0, 2 * np.pi, (U, N, L)))
    m = rng.uniform(0.1, 0.9, N)
    V = crandn(rng, U, L, K)
    return ch, Xi, F, m, V
