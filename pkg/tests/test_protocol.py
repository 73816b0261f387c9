import numpy as np
import pytest

from qconsensus import plant, protocol
from qconsensus.codec import ScalingSchedule


def test_full_info_examples():
    assert protocol.control_full_info(10.0, []) == -10.0
    assert protocol.control_full_info(0.0, [2.0, -1.0]) == 1.0


def test_eso_examples():
    est = np.array([9.0, 1.0, 1.0, 2.0])
    th = protocol.theta_bar(est, (4.0, 4.0))
    assert th == 10.0 and protocol.control_eso(th, []) == -10.0


def test_exact_estimates_match_full_info():
    m = plant.pendulum_model(2)
    rho, t = np.array([0.3, -0.4, 1.2]), 0.7
    F = m.lumped(rho, np.empty(0), t)
    est = np.append(rho, F)
    nb = [0.5, -0.25]
    assert protocol.control_eso(protocol.theta_bar(est, (4, 4)), nb) == pytest.approx(
        protocol.control_full_info(protocol.theta_full(m, rho, np.empty(0), t, (4, 4)), nb))


def test_theta_examples():
    assert protocol.theta_full(plant.pendulum_model(1), [0, 0, 0], [], 0.0, (4, 4)) == pytest.approx(-2.2)
    assert protocol.theta_full(plant.integrator_chain(3), [5, 1, 2], [], 0.0, (4, 4)) == 12


def test_params():
    p = protocol.ProtocolParams(0.05, (4, 4), 10, ScalingSchedule(10, 0.93))
    assert p.r == 3 and p.quantizer.K == 10 and p.Cs == 40.0
    with pytest.raises(ValueError):
        protocol.ProtocolParams(0.0, (4, 4), 10, ScalingSchedule(10, 0.93))
    with pytest.raises(ValueError):
        protocol.ProtocolParams(0.05, (-4, 4), 10, ScalingSchedule(10, 0.93))
    with pytest.raises(ValueError):
        protocol.ProtocolParams(0.05, (4, 4), 0, ScalingSchedule(10, 0.93))
