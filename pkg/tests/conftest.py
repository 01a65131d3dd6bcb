import numpy as np
import pytest

from legendrian_lab import grid_ops, immersions

A_TORUS = 4 * np.pi**2 / np.sqrt(3)
A_CLIFFORD = 2 * np.pi**2


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def geometry_cache():
    """Derived geometries are expensive; share them across tests."""
    cache = {}

    def build(kind, n, scheme, eps=0.0, seed=0, mode="generic", theta=0.0):
        key = (kind, n, scheme, eps, seed, mode, theta)
        if key not in cache:
            if kind == "torus":
                if eps:
                    surf = immersions.perturbed_torus(
                        theta=theta, eps=eps, n=n, scheme=scheme, seed=seed, mode=mode
                    )
                else:
                    surf = immersions.resample_to_grid(
                        immersions.catalog("legendrian_torus", theta=theta), n, scheme
                    )
            elif kind == "clifford":
                surf = immersions.resample_to_grid(
                    immersions.catalog("clifford_s3"), n, scheme
                )
            else:
                raise ValueError(kind)
            cache[key] = grid_ops.derived_geometry(surf)
        return cache[key]

    return build
