"""Frozen regression baselines from the first verified build.

These pin concrete numbers produced by converged end-to-end runs (after
the oracle cross-checks passed), so silent numerical drift shows up as a
test failure rather than a slow corruption of results.
"""

import numpy as np
import pytest

from confinement_lab.core import ModelParams
from confinement_lab.ground_state import solve_ground_state


BASELINES = {
    # (p, lambda): (action, mass), default resolution
    (4.0, 1.5): (2.64119068, 14.6345603),
    (4.0, 0.0): (14.99315, 15.83564),
    (4.0, -40.0): (119.543879, 2.98608998),
}


@pytest.mark.parametrize("key", sorted(BASELINES))
def test_ground_state_baselines(key):
    p, lam = key
    action, mass = BASELINES[key]
    res = solve_ground_state(ModelParams(p=p, lam=lam))
    assert res.action == pytest.approx(action, rel=1e-6)
    assert res.mass == pytest.approx(mass, rel=1e-6)


def test_free_soliton_baselines(shot3d_p4):
    assert shot3d_p4.v0 == pytest.approx(4.337387679981, rel=1e-9)
    assert shot3d_p4.mass == pytest.approx(18.8972513, rel=1e-6)


def test_mass_peak_baseline():
    """Interior maximum of the p=4 mass curve (location and height)."""
    masses = {}
    warm = None
    for lam in (0.625, 0.75, 0.875):
        res = solve_ground_state(ModelParams(p=4.0, lam=lam),
                                 init=warm.u if warm else None)
        warm = res
        masses[lam] = res.mass
    assert masses[0.75] == pytest.approx(17.0331, rel=1e-4)
    assert masses[0.75] > masses[0.625] and masses[0.75] > masses[0.875]
