import numpy as np
import pytest

from qconsensus import plant


def test_chain_rhs():
    m = plant.integrator_chain(3)
    drho, dz = plant.canonical_rhs(m, [1, 2, 3], [], 0.0, 0.0)
    assert np.array_equal(drho, [2, 3, 0]) and dz.shape == (0,)


def test_chain_shape_checks():
    with pytest.raises(ValueError):
        plant.canonical_rhs(plant.integrator_chain(3), [1, 2], [], 0.0, 0.0)


@pytest.mark.parametrize("i,p,q", [(1, 11.0, 2.2), (5, 15.0, 3.0)])
def test_pendulum_params(i, p, q):
    pp = plant.PendulumParams(i)
    assert pp.p == p and pp.q == pytest.approx(q, abs=1e-15)


def test_pendulum_rhs_at_origin():
    m = plant.pendulum_model(1)
    drho, _ = plant.canonical_rhs(m, [0, 0, 0], [], 0.0, 0.0)
    assert np.allclose(drho, [0, 0, -2.2], atol=1e-15)


def test_pendulum_lumped_example():
    m = plant.pendulum_model(1)
    assert m.lumped(np.array([0.0, 1.0, 0.0]), np.empty(0), 0.0) == pytest.approx(-13.2, abs=1e-12)


def test_transform_examples():
    pp = plant.PendulumParams(1)
    assert np.allclose(plant.pendulum_transform([0, 1, 2], pp), [0, 1, -0.2], atol=1e-14)
    assert np.allclose(plant.pendulum_transform([0, 0, pp.q], pp), [0, 0, 0], atol=1e-15)
    x = np.array([0.3, -1.2, 2.5])
    assert np.allclose(plant.pendulum_inverse_transform(plant.pendulum_transform(x, pp), pp), x)


def test_canonical_form_matches_original_dynamics():
    # d/dt of the transformed state, by central differences along the original flow
    rng = np.random.default_rng(0)
    for i in range(1, 6):
        pp = plant.PendulumParams(i)
        m = plant.pendulum_model(i)
        for _ in range(10):
            x = rng.uniform(-4.5, 4.5, 3)
            t, u, h = float(rng.uniform(0, 10)), float(rng.normal()), 1e-6
            fx = plant.pendulum_original_rhs(x, t, u, pp)
            fd = (plant.pendulum_transform(x + h * fx, pp) - plant.pendulum_transform(x - h * fx, pp)) / (2 * h)
            drho, _ = plant.canonical_rhs(m, plant.pendulum_transform(x, pp), [], t, u)
            assert np.allclose(drho, fd, atol=1e-6)


def test_hurwitz():
    assert np.array_equal(plant.check_hurwitz_gains((4, 4)), [4, 4])
    with pytest.raises(ValueError):
        plant.check_hurwitz_gains((-1, 2))


def test_composite_s():
    assert plant.composite_s([1, 2, 3], (4, 4)) == 15
    assert plant.composite_s([0, 0, 0], (4, 4)) == 0
    assert plant.composite_s([1, 2, 3.5], (4, 4)) - plant.composite_s([1, 2, 3], (4, 4)) == 0.5


def test_linear_counterpart():
    lc = plant.LinearCounterpart((4.0, 4.0))
    assert np.array_equal(plant.linear_counterpart_rhs(lc, [1, 0, 0], 0.0), [0, 0, 0])
    assert np.array_equal(plant.linear_counterpart_rhs(lc, [0, 1, 1], 0.0), [1, 1, -8])
    rho = np.array([0.4, -0.3, 1.1])
    assert np.allclose(lc.A @ rho + lc.B * 0.7, plant.linear_counterpart_rhs(lc, rho, 0.7))
