import numpy as np
import pytest

from nematoflow.material import FreeEnergy, MaterialModel, ParameterSet

# machine-epsilon powers used by the test-side difference oracles (kept
# independent of the package's own fallback differentiator)
EPS = np.finfo(float).eps
H1 = EPS ** (1.0 / 3.0)      # first derivatives
H2 = EPS ** (1.0 / 6.0)      # five-point second derivatives


def fd1(f, x, h_scale=H1):
    h = max(1.0, abs(x)) * h_scale
    return (f(x + h) - f(x - h)) / (2.0 * h)


def fd2(f, x, h_scale=H2):
    h = max(1.0, abs(x)) * h_scale
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x)
            + 16 * f(x - h) - f(x - 2 * h)) / (12.0 * h * h)


def fd_mixed(f, x, y, h_scale=EPS ** 0.25):
    hx = max(1.0, abs(x)) * h_scale
    hy = max(1.0, abs(y)) * h_scale
    return (f(x + hx, y + hy) - f(x + hx, y - hy)
            - f(x - hx, y + hy) + f(x - hx, y - hy)) / (4.0 * hx * hy)


@pytest.fixture(scope="session")
def ideal_material():
    return MaterialModel(FreeEnergy.ideal_linear(a=2.0, k=0.5),
                         ParameterSet.from_constants())


@pytest.fixture(scope="session")
def coupled_material():
    return MaterialModel(FreeEnergy.coupled(a=2.0, k0=0.3, k1=0.2),
                         ParameterSet.from_constants())
