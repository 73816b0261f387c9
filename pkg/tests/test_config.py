import pytest

from qconsensus import certify
from qconsensus.config import PRESETS, ConfigError, dump_config, parse_config
from qconsensus.engine import SimMode

MINIMAL = """
[protocol]
T = 0.1
gamma = 0.95
K = 3
beta0 = 50
"""


def test_pendulum5_preset(pendulum5):
    s = pendulum5
    assert (s["protocol.T"], s["protocol.gamma"], s["protocol.K"], s["protocol.beta0"]) == (0.05, 0.93, 10, 10.0)
    assert s["protocol.k"] == (4.0, 4.0) and s["protocol.Cs"] == 40.0
    assert s["observer.M"] == (5.0, 5.0, 15.0, 25.0) and s["agents.disturbance"] == "sin2t"
    cfg = s.sim_config()
    assert cfg.graph.n_agents == 5 and list(cfg.graph.degrees) == [2] * 5
    assert [m.label for m in cfg.models] == [f"pendulum{i}" for i in range(1, 6)]
    assert tuple(cfg.eso.gains) == (4.0, 6.0, 4.0, 1.0)
    assert cfg.mode is SimMode.ESO and cfg.init_box == 4.5
    assert s.source("protocol.K") == "preset" and s.source("sim.seed") == "default"


def test_onebit_preset():
    s = parse_config("preset = pendulum5_onebit\n")
    assert (s["protocol.K"], s["sim.eps0"], s["protocol.T"], s["protocol.gamma"], s["protocol.beta0"]) == \
        (1, 0.5, 0.015, 0.9881, 30.0)
    assert s.cert_mode is certify.CertMode.THEOREM3


def test_certified_presets_are_feasible():
    for name in ("cycle5_theorem1", "cycle5_onebit"):
        s = parse_config(f"preset = {name}\n")
        cfg = s.sim_config()
        assert not cfg.force
        from qconsensus.graph import spectral
        rep = certify.validate(cfg.protocol, spectral(cfg.graph), s.cert_mode, epsilon=cfg.epsilon, eps0=cfg.eps0)
        assert rep.feasible, name


def test_provenance_and_overrides():
    s = parse_config("preset = pendulum5\n[protocol]\nK = 12\n", overrides=["sim.seed=4"])
    assert s["protocol.K"] == 12 and s.source("protocol.K") == "explicit"
    assert s["sim.seed"] == 4 and s.source("sim.seed") == "explicit"
    assert s.source("protocol.T") == "preset"


def test_edge_list_graph():
    s = parse_config(MINIMAL + "[graph]\nkind = edges\nn = 4\nedges = 1-2, 2-3, 3-4\n")
    g = s.build_graph()
    assert g.edges() == [(1, 2), (2, 3), (3, 4)]


@pytest.mark.parametrize("text,needle", [
    ("[protocol]\nK = -1\n", "line 2: protocol.K = -1 violates K >= 1"),
    (MINIMAL + "[sim]\nflux = 3\n", "line 8: unknown key 'flux' in [sim]"),
    (MINIMAL.replace("K = 3", "K = 3.5"), "line 5: protocol.K expects integer"),
    ("[protocol]\nT = 0.1\n", "missing required key protocol.gamma"),
    ("", "line 1 (end of input): missing required key protocol.T"),
    ("[bogus]\n", "line 1: unknown section [bogus]"),
    ("preset = nope\n", "unknown preset 'nope'"),
    ("just words\n", "line 1: expected 'key = value'"),
    (MINIMAL + "[protocol]\nK = 4\n", "duplicate key protocol.K"),
    (MINIMAL + "[observer]\nM = 1, 2\n", "observer.M needs r + 1 = 4"),
    (MINIMAL + "[graph]\nkind = edges\nn = 3\nedges = 1-1\n", "self-loop"),
])
def test_errors(text, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert needle in str(exc.value)


def test_override_errors():
    with pytest.raises(ConfigError, match="override 1"):
        parse_config("preset = pendulum5\n", overrides=["protocol.gamma=2"])
    with pytest.raises(ConfigError, match="override 1"):
        parse_config("preset = pendulum5\n", overrides=["nonsense"])


@pytest.mark.parametrize("text", [
    *[f"preset = {n}\n" for n in PRESETS],
    MINIMAL,
    MINIMAL + "[graph]\nkind = edges\nn = 3\nedges = 1-2, 2-3\n[sim]\nh = 0.001\nmode = full_info\n"
              "output = out/x\n[sweep]\nK = 1, 2\nepsilon = 0.1, 0.01\n",
    "preset = pendulum5\n[protocol]\ngamma = 0.9300000000000001\n[sim]\nforce = false\n",
])
def test_dump_round_trip(text):
    spec = parse_config(text)
    dumped = dump_config(spec)
    again = parse_config(dumped)
    assert again == spec
    assert dump_config(again) == dumped


def test_with_values():
    s = parse_config("preset = pendulum5\n").with_values({"protocol.K": 3})
    assert s["protocol.K"] == 3 and s.source("protocol.K") == "explicit"
    with pytest.raises(ConfigError):
        s.with_values({"protocol.nope": 1})
