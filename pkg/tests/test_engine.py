import math

import numpy as np
import pytest

from qconsensus import certify, graph, plant
from qconsensus.codec import ScalingSchedule
from qconsensus.engine import (NotCertifiedError, SimConfig, SimMode, SimulationError, disagreement,
                               default_Cs, initial_s, consensus_envelope, recovery_gap, rk4_step,
                               rk4_step_piecewise, run, run_linear_counterpart, run_many)
from qconsensus.observer import EsoConfig
from qconsensus.protocol import ProtocolParams
from qconsensus.quantizer import Quantizer, bits_per_symbol


def full_info_cfg(n=5, duration=6.0, seed=0, models=None, g=None):
    g = g or graph.cycle(n)
    s = graph.spectral(g)
    K, b0 = certify.theorem1_parameters(s, 0.2, 0.9, 40.0)
    p = ProtocolParams(0.2, (4, 4), K, ScalingSchedule(b0, 0.9), Cs=40.0)
    models = models or [plant.pendulum_model(i) for i in range(1, g.n_agents + 1)]
    return SimConfig(g, models, p, mode=SimMode.FULL_INFO, duration=duration, seed=seed)


def eso_cfg(eps=0.01, duration=1.0, seed=0):
    p = ProtocolParams(0.05, (4, 4), 10, ScalingSchedule.floored(10, 0.93, eps), Cs=40.0)
    return SimConfig(graph.cycle(5), [plant.pendulum_model(i) for i in range(1, 6)], p,
                     EsoConfig.from_pole(3, eps, (5, 5, 15, 25)), duration=duration, seed=seed, force=True)


def test_disagreement():
    mp, dn = disagreement([1, 2, 3])
    assert mp == 2 and dn == pytest.approx(math.sqrt(2))
    assert disagreement([4, 4, 4]) == (0, 0)
    assert disagreement(np.array([1, 5, 2]) + 7.5) == pytest.approx(disagreement([1, 5, 2]))
    with pytest.raises(ValueError):
        disagreement([1.0])


def test_config_validation():
    cfg = eso_cfg()
    with pytest.raises(ValueError):
        cfg.replace(duration=0.07)
    with pytest.raises(ValueError):
        cfg.replace(h=0.01)
    with pytest.raises(ValueError):
        cfg.replace(models=cfg.models[:4])
    with pytest.raises(ValueError):
        cfg.replace(eso=None)
    assert cfg.h_max == pytest.approx(0.0005) and cfg.n_substeps == 100


def test_isolated_agent_keeps_s_constant():
    g = graph.Graph.from_adjacency([[0]])
    p = ProtocolParams(0.1, (4, 4), 3, ScalingSchedule(10, 0.9))
    cfg = SimConfig(g, [plant.pendulum_model(2)], p, mode=SimMode.FULL_INFO, duration=2.0, force=True)
    res = run(cfg)
    assert np.allclose(res.s[:, 0], res.s[0, 0], atol=1e-8)


def test_full_info_recursion_end_to_end():
    cfg = full_info_cfg(duration=4.0)
    res = run(cfg)
    T = cfg.protocol.T
    nbrs = cfg.graph.neighbors
    for k in range(res.n_rounds - 1):
        c = [sum(res.xi[k, j] - res.xi[k, i] for j in nbrs[i]) for i in range(5)]
        assert np.allclose(res.s[k + 1], res.s[k] + T * np.array(c), atol=1e-8)


def test_two_agents_stay_in_envelope():
    g = graph.path(2)
    cfg = full_info_cfg(g=g, duration=10.0, models=[plant.pendulum_model(1), plant.pendulum_model(2)])
    res = run(cfg)
    assert res.audit_clean
    assert np.all(res.delta_norm <= consensus_envelope(cfg))


def test_uncertified_run_refused_unless_forced():
    cfg = eso_cfg().replace(force=False)
    with pytest.raises(NotCertifiedError):
        run(cfg)
    assert run(cfg.replace(force=True, duration=0.1)).n_rounds == 2


def test_bits_ledger_and_first_round_silent():
    res = run(eso_cfg(duration=1.0))
    nb = bits_per_symbol(Quantizer(10))
    assert np.array_equal(res.bits, np.where(res.symbols != 0, nb, 0))
    assert np.all(res.symbols[0] == 0) and np.all(res.xi[0] == 0)
    assert np.abs(res.symbols).max() <= 10
    assert res.total_bits.shape == (5,)


def test_series_shapes():
    res = run(eso_cfg(duration=0.5))
    assert res.y.shape == res.s.shape == res.u.shape == (10, 5)
    assert res.estimates.shape == (10, 5, 4)
    assert np.allclose(res.t, np.arange(10) * 0.05)


def test_determinism_and_identity():
    cfg = eso_cfg(duration=0.5)
    a, b = run(cfg), run(cfg)
    assert a.identical(b)
    assert not a.identical(run(cfg.replace(seed=1)))
    assert recovery_gap(a, b) == 0.0


def test_linear_counterpart_identical_initial_states():
    x = np.tile([0.5, -0.2, 1.0], (5, 1))
    cfg = full_info_cfg(duration=4.0).replace(initial_x=x, models=[plant.pendulum_model(1)] * 5)
    lin = run_linear_counterpart(cfg)
    assert np.allclose(lin.delta_norm, 0, atol=1e-12)


def test_linear_counterpart_decays():
    cfg = full_info_cfg(duration=20.0)
    lin = run_linear_counterpart(cfg)
    assert lin.mode == "linear" and np.all(lin.F == 0)
    assert lin.delta_norm[-1] < 1e-3 * lin.delta_norm[0]


def test_recovery_gap_common_duration_and_grid_check():
    cfg = eso_cfg(duration=0.5)
    a = run(cfg)
    b = run(cfg.replace(duration=0.25))
    assert recovery_gap(a, b) == 0.0
    c = run(full_info_cfg(duration=0.4))
    with pytest.raises(ValueError):
        recovery_gap(a, c)


def test_run_many_pool_matches_serial():
    cfgs = [eso_cfg(duration=0.2, seed=s) for s in range(2)]
    serial = run_many(cfgs)
    pooled = run_many(cfgs, workers=2)
    assert all(x.identical(y) for x, y in zip(serial, pooled))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_blow_up_reported():
    p = ProtocolParams(0.1, (4, 4), 3, ScalingSchedule.floored(10, 0.9, 0.01), Cs=40.0)

    def explode(rho, z, w, t):
        return 1e3 * (1.0 + rho[2] ** 2)

    m = plant.AgentModel(r=3, F=explode)
    cfg = SimConfig(graph.path(2), [m, m], p, EsoConfig.from_pole(3, 0.01, (5, 5, 15, 25)),
                    duration=5.0, force=True)
    with pytest.raises(SimulationError, match="round"):
        run(cfg)


def _clip_decay(stepper, h, t_end=1.2):
    # y' = -clip(y, -1, 1) from y(0) = 1.5: linear until t = 0.5, then exponential
    f = lambda t, y: -np.clip(y, -1, 1)
    y = np.array([1.5])
    for j in range(int(round(t_end / h))):
        y = stepper(f, j * h, y, h)
    return abs(y[0] - math.exp(-(t_end - 0.5)))


def test_piecewise_step_restores_order():
    pattern = lambda y: bytes(np.sign(np.clip(y, -1, 1) - y).astype(np.int8))
    piecewise = lambda f, t, y, h: rk4_step_piecewise(f, pattern, t, y, h)[0]
    # h chosen so that the kink at t = 0.5 falls strictly inside a step
    errs_pw = [_clip_decay(piecewise, h) for h in (0.12, 0.06)]
    errs_plain = [_clip_decay(rk4_step, h) for h in (0.12, 0.06)]
    assert errs_pw[1] < 1e-7 and errs_pw[0] / errs_pw[1] > 12
    assert all(p > 10 * q for p, q in zip(errs_plain, errs_pw))


def test_default_Cs():
    models = [plant.pendulum_model(i) for i in range(1, 6)]
    cs = default_Cs(models, (4, 4))
    assert cs == default_Cs(models, (4, 4))
    assert cs > 1.25 * np.abs(initial_s(eso_cfg())).max() * 0.5
