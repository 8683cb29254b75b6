import json
import pytest
import numpy as np

from coopuav.geometry import Point3, SphericalCrown
from coopuav.oracle import SmallInstance, Box, random_instance, exhaustive_allocation, \
    grid_power_search, grid_point_search, MAX_LINKS
from coopuav.cli.oracle import verify_allocation, verify_power
from coopuav.pylab.errors import BudgetExceededError


def _two_links(conflict=False, r_min=0.):
    return SmallInstance(direct=[[1e-10, 1e-12], [1e-12, 1e-10]],
        cross=np.zeros((2, 2, 2)), conflict=[[False, conflict], [conflict, False]],
        noise=1e-15, bandwidth=1., r_min=r_min, p_max=1.)


def test_instance_limits():
    with pytest.raises(ValueError):
        SmallInstance(direct=np.ones((MAX_LINKS + 1, 2)),
            cross=np.zeros((MAX_LINKS + 1, MAX_LINKS + 1, 2)),
            conflict=np.zeros((MAX_LINKS + 1, MAX_LINKS + 1)), noise=1., bandwidth=1.,
            r_min=0., p_max=1.)

def test_instance_save_load(tmp_path):
    inst = random_instance(np.random.default_rng(0), 3, 2)
    path = str(tmp_path / 'inst.json')
    inst.save(path)
    with open(path) as f:
        assert set(json.load(f)) >= {'direct', 'cross', 'conflict'}
    back = SmallInstance.load(path)
    assert np.allclose(back.direct, inst.direct)
    assert np.array_equal(back.conflict, inst.conflict)
    assert np.array_equal(back.u2n, inst.u2n)

def test_exhaustive_without_interference():
    # Without interference or conflicts every link takes every subchannel
    x, value = exhaustive_allocation(_two_links())
    assert x.all()
    expected = 2 * (np.log2(1 + 1e5) + np.log2(1 + 1e3))
    assert value == pytest.approx(expected)

def test_exhaustive_with_conflict():
    x, value = exhaustive_allocation(_two_links(conflict=True))
    assert x.tolist() == [[True, False], [False, True]]
    assert value == pytest.approx(2 * np.log2(1 + 1e5))

def test_exhaustive_infeasible():
    x, value = exhaustive_allocation(_two_links(r_min=1e3))
    assert x is None
    assert value == -np.inf

def test_exhaustive_budget():
    with pytest.raises(BudgetExceededError) as e:
        exhaustive_allocation(random_instance(np.random.default_rng(0), 4, 4),
            max_candidates=1000)
    assert e.value.exit_code == 3

def test_grid_power_search():
    inst = _two_links()
    powers, value = grid_power_search(inst, np.eye(2, dtype=bool), resolution=0.25)
    assert powers.tolist() == [1., 1.]
    with pytest.raises(BudgetExceededError):
        grid_power_search(random_instance(np.random.default_rng(0), 4, 1),
            np.ones((4, 1), dtype=bool), resolution=0.1)

def test_grid_point_search_box():
    box = Box(low=(0., 0., 0.), high=(10., 10., 10.))
    target = np.array([3., 7., 2.])
    best = grid_point_search(box, lambda x: -np.linalg.norm(x - target, axis=1),
        resolution=1.)
    assert (best.x, best.y, best.z) == (3., 7., 2.)

def test_grid_point_search_crown():
    crown = SphericalCrown(center=Point3(0., 0., 0.), radius=100., min_altitude=50.)
    best = grid_point_search(crown, lambda x: x[:, 2], resolution=5.)
    assert best.z == pytest.approx(100., abs=5.)
    with pytest.raises(ValueError):
        grid_point_search(crown, lambda x: x[:, 2], resolution=0.)

@pytest.mark.parametrize('seed', range(10))
def test_solvers_agree_with_oracle(seed):
    rng = np.random.default_rng(1000 + seed)
    inst = random_instance(rng, int(rng.integers(2, 6)), int(rng.integers(1, 4)))
    entry = verify_allocation(inst)
    assert entry['match'], entry
    alloc = entry['allocation']
    if 0 < int(alloc.matrix.any(axis=1).sum()) <= 3:
        power = verify_power(inst, alloc, grid_fraction=0.02)
        assert power['monotone']
        assert power['match'], power
