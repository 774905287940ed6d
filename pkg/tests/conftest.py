"""Shared toy models for the test suite."""

import numpy as np

from pairtrack.phd import BirthComponent, BirthModel
from pairtrack.pmc import HmcSpec, embed_hmc


def toy_hmc(f2=0.3, h2=0.1):
    """Scalar state, scalar observation; contractive and well conditioned."""
    return HmcSpec(
        f=np.array([[0.95]]),
        q=np.array([[1.0]]),
        h=np.array([[1.0]]),
        r=np.array([[0.5]]),
        m0=np.array([0.0]),
        p0=np.array([[2.0]]),
        f2=np.array([[f2]]),
        h2=np.array([[h2]]),
    )


def toy_model(f2=0.3, h2=0.1):
    return embed_hmc(toy_hmc(f2=f2, h2=h2))


def toy_birth(mass=0.2, mean=(0.0, 0.0)):
    """One birth site matching the toy model's initial pair law shape."""
    return BirthModel(
        components=(
            BirthComponent(
                mass=mass,
                mean=np.asarray(mean, dtype=float),
                cov=np.array([[2.0, 2.0], [2.0, 2.5]]),
            ),
        )
    )


def tracking_matrices():
    """Planar constant-velocity plant with position observations."""
    q = np.array(
        [
            [100.0, 1.0, 0.0, 0.0],
            [1.0, 10.0, 0.0, 0.0],
            [0.0, 0.0, 100.0, 1.0],
            [0.0, 0.0, 1.0, 10.0],
        ]
    )
    r = 25.0 * np.eye(2)
    h = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
    f = np.array(
        [
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
    f2 = np.array([[0.7, 0.0], [0.0, 0.0], [0.0, 0.7], [0.0, 0.0]])
    h2 = 0.1 * np.eye(2)
    return HmcSpec(
        f=f, q=q, h=h, r=r,
        m0=np.zeros(4), p0=np.eye(4),
        f2=f2, h2=h2,
    )
