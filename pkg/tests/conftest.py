"""Shared scene builders used across the suite."""

import pytest

from springsim.model import Scene


@pytest.fixture
def oscillator() -> Scene:
    """One fixed anchor, one free 0.1 kg mass, one k=1e4 spring, no gravity.

    Hanging the free mass 1 m below the anchor with the spring at rest length
    gives the classic single-degree-of-freedom oscillator once the free mass
    is displaced along the spring axis.
    """
    scene = Scene(gravity=(0.0, 0.0, 0.0))
    a = scene.add_mass((0.0, 1.0, 0.0), m=0.1, fixed=True)
    b = scene.add_mass((0.0, 0.0, 0.0), m=0.1)
    scene.add_spring(a, b, k=10000.0, l0=1.0)
    return scene


@pytest.fixture
def two_mass_free() -> Scene:
    """Two free masses joined by one spring; isolated, so momentum conserves."""
    scene = Scene(gravity=(0.0, 0.0, 0.0))
    a = scene.add_mass((0.0, 0.0, 0.0), m=0.1)
    b = scene.add_mass((1.2, 0.0, 0.0), m=0.1)
    scene.add_spring(a, b, k=10000.0, l0=1.0)
    return scene
