import numpy as np
import pytest

from pmbm.gaussian import Gaussian, GaussianMixture, LinearGaussianModel, WeightedGaussian


@pytest.fixture
def scalar_model():
    """1-d state observed directly; round numbers so cases work by hand."""
    return LinearGaussianModel(
        F=[[1.0]],
        Q=[[1.0]],
        H=[[1.0]],
        R=[[1.0]],
        p_s=0.9,
        p_d=0.5,
        clutter_rate=2.0,
        clutter_density=0.1,
        birth=GaussianMixture(
            (WeightedGaussian(np.log(0.5), Gaussian([0.0], [[1.0]])),)
        ),
    )


@pytest.fixture
def planar_model():
    """Constant-velocity 4-d state, position measured."""
    eye2 = np.eye(2)
    F = np.kron(eye2, [[1.0, 1.0], [0.0, 1.0]])
    Q = 0.01 * np.kron(eye2, [[1.0 / 3.0, 0.5], [0.5, 1.0]])
    H = np.kron(eye2, [[1.0, 0.0]])
    return LinearGaussianModel(
        F=F,
        Q=Q,
        H=H,
        R=eye2,
        p_s=0.99,
        p_d=0.9,
        clutter_rate=10.0,
        clutter_density=10.0 / 90000.0,
        birth=GaussianMixture(
            (
                WeightedGaussian(
                    np.log(0.005),
                    Gaussian(
                        [100.0, 0.0, 100.0, 0.0],
                        np.diag([150.0**2, 1.0, 150.0**2, 1.0]),
                    ),
                ),
            )
        ),
    )
