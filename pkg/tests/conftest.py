import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vilab.fields import GridSpec, ScalarField

settings.register_profile(
    "vilab",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("vilab")


def random_field(grid: GridSpec, seed: int, band: int = 12) -> ScalarField:
    """Mean-zero field with random Fourier content below ``band`` (no Nyquist)."""
    rng = np.random.default_rng(seed)
    n = grid.n
    c = np.zeros((n, n // 2 + 1), dtype=complex)
    c[:band, :band] = rng.normal(size=(band, band)) + 1j * rng.normal(size=(band, band))
    c[-band + 1:, :band] = rng.normal(size=(band - 1, band)) + 1j * rng.normal(size=(band - 1, band))
    c[0, 0] = 0.0
    v = np.fft.irfft2(c, s=(n, n))
    v -= v.mean()
    return ScalarField(grid, v / np.abs(v).max(), is_mean_zero=True)


@pytest.fixture
def grid64():
    return GridSpec(2 * np.pi, 64)


@pytest.fixture
def grid256():
    return GridSpec(2 * np.pi, 256)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
