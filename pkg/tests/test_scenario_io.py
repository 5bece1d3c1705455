import io

import numpy as np
import pytest

from platoon_nash.model import ScenarioError, TopologyKind
from platoon_nash.mpc import MpcConfig
from platoon_nash.scenario_io import (
    ScenarioParseError,
    bundled_scenarios,
    csv_header,
    format_scenario,
    parse_scenario,
    parse_scenario_text,
    resolve_scenario_path,
    sample,
    save_table,
    write_csv,
    write_plot_data,
)
from platoon_nash.solve import solve

BASIC = """\
[platoon]
n = 2
t_f = 10
[vehicles]
0 1.0
1 0.5 -0.25
2 0.0 -0.25
[topology]
kind = pf
1 1.0
2 0.8
"""


def test_bundled_set():
    assert set(bundled_scenarios()) == {"pf_s1", "pf_s2", "tpf_s3", "tpf_s4", "apf", "lf", "cmp_pf", "cmp_tpf"}


def test_pf_s1_matches_table():
    sf = parse_scenario(bundled_scenarios()["pf_s1"])
    sc = sf.scenario
    np.testing.assert_array_equal(sc.x0, [5.0937, 4.6469, 3.8786, 2.4340, 2.1793, 0.4056])
    np.testing.assert_array_equal(sc.d, [-0.1, -0.2, -0.2, -0.3, -0.3])
    assert sc.topology.kind is TopologyKind.PF
    assert [sc.topology.neighbor_sets[i][i - 1] for i in range(1, 6)] == [0.6443, 0.3786, 0.8116, 0.5328, 0.3507]
    assert sc.t_f == 10.0 and sf.samples == 1000 and sf.mpc is None and sc.name == "pf_s1"


def test_comparison_file_has_mpc_block():
    sf = parse_scenario(bundled_scenarios()["cmp_tpf"])
    assert sf.mpc == MpcConfig(5, 0.1)
    assert sf.scenario.t_f == 15.0 and sf.scenario.n == 3


def test_basic_text():
    sf = parse_scenario_text(BASIC)
    assert sf.scenario.n == 2 and sf.samples == 1000


def test_positive_distancing_is_semantic_error():
    text = BASIC.replace("1 0.5 -0.25", "1 0.5 0.1")
    with pytest.raises(ScenarioError, match="distancing policy must be negative"):
        parse_scenario_text(text)


def test_forward_link_rejected():
    text = """\
[platoon]
n = 5
t_f = 10
[vehicles]
0 5
1 4 -0.1
2 3 -0.1
3 2 -0.1
4 1 -0.1
5 0 -0.1
[topology]
kind = custom
1 0 1.0
2 1 1.0
3 5 1.0
4 3 1.0
5 4 1.0
"""
    with pytest.raises(ScenarioError, match=r"rearward links only \(j < i\)"):
        parse_scenario_text(text)


@pytest.mark.parametrize(
    "old, new, line, msg",
    [
        ("t_f = 10", "t_f = ten", 3, "expected a number"),
        ("t_f = 10", "horizon = 10", 3, "unknown key 'horizon'"),
        ("[vehicles]", "[cars]", 4, "unknown section"),
        ("1 0.5 -0.25", "1 0.5", 6, "vehicle row needs"),
        ("kind = pf", "kind = ring", 9, "unknown topology kind"),
        ("2 0.8", "2 0.8 0.1", 11, "needs 'i w'"),
        ("1 1.0\n", "1 1.0\n1 2.0\n", 11, "listed twice"),
        ("[platoon]", "[platoon\n", 1, "malformed section"),
        ("t_f = 10", "t_f =", 3, "missing value"),
    ],
)
def test_parse_errors_carry_line(old, new, line, msg):
    with pytest.raises(ScenarioParseError, match=msg) as exc:
        parse_scenario_text(BASIC.replace(old, new, 1), "demo.cfg")
    assert exc.value.line == line
    assert str(exc.value).startswith(f"demo.cfg:{line}: ")


@pytest.mark.parametrize(
    "text, msg",
    [
        (BASIC.replace("[topology]\nkind = pf\n1 1.0\n2 0.8\n", ""), "missing section"),
        (BASIC.replace("n = 2\n", ""), "missing key 'n'"),
        (BASIC.replace("2 0.0 -0.25\n", ""), "indices 0..2"),
        (BASIC.replace("2 0.8\n", ""), "missing weights"),
        ("n = 2\n", "before the first section"),
    ],
)
def test_structural_errors(text, msg):
    with pytest.raises(ScenarioParseError, match=msg):
        parse_scenario_text(text)


def test_comments_and_case():
    text = "# header\n" + BASIC.replace("[topology]", "[Topology]  # links").replace("kind = pf", "kind = PF")
    assert parse_scenario_text(text).scenario.topology.kind is TopologyKind.PF


def test_bad_mpc_block():
    with pytest.raises(ScenarioParseError, match="prediction horizon"):
        parse_scenario_text(BASIC + "[mpc]\nN = 0\n")


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        parse_scenario(tmp_path / "nope.cfg")


def test_resolve_path(tmp_path):
    assert resolve_scenario_path("pf_s1") == bundled_scenarios()["pf_s1"]
    p = tmp_path / "x.cfg"
    assert resolve_scenario_path(str(p)) == p
    assert resolve_scenario_path("unknown_name").name == "unknown_name"


def test_sample_endpoints(scenarios):
    sol, _ = solve(scenarios["pf_s1"])
    tab = sample(sol, 2)
    np.testing.assert_array_equal(tab.t, [0.0, 10.0])
    with pytest.raises(ValueError):
        sample(sol, 1)


def test_sample_first_row_is_initial_state(scenarios):
    sc = scenarios["pf_s1"]
    tab = sample(solve(sc)[0], 1000)
    np.testing.assert_array_equal(tab.y[0], sc.y0)
    np.testing.assert_allclose(tab.e, tab.y + sc.d, rtol=0, atol=0)


def test_sampling_is_pointwise(scenarios):
    sol, _ = solve(scenarios["tpf_s3"])
    a, b = sample(sol, 1000), sample(sol, 1999)
    np.testing.assert_allclose(a.y, b.y[::2], atol=1e-12)
    np.testing.assert_allclose(a.y, sol.evaluate(a.t)[0], atol=1e-12)


def test_csv_header():
    assert csv_header(2) == "t,y1,y2,e1,e2,u1,u2"


def csv_text(table):
    buf = io.StringIO()
    write_csv(table, buf)
    return buf.getvalue()


@pytest.mark.parametrize("name", sorted(bundled_scenarios()))
def test_round_trip_bitwise(scenarios, name):
    sc = scenarios[name]
    sf = parse_scenario(bundled_scenarios()[name])
    again = parse_scenario_text(format_scenario(sc, sf.mpc, sf.samples), "copy")
    assert again.scenario == sc and again.mpc == sf.mpc and again.samples == sf.samples
    first = csv_text(sample(solve(sc)[0], 200))
    second = csv_text(sample(solve(again.scenario)[0], 200))
    assert first == second
    rows = first.splitlines()
    assert rows[0] == csv_header(sc.n)
    assert all(len(r.split(",")) == 1 + 3 * sc.n for r in rows)


def test_csv_values_round_trip(scenarios):
    tab = sample(solve(scenarios["apf"])[0], 50)
    text = csv_text(tab)
    data = np.array([[float(v) for v in r.split(",")] for r in text.splitlines()[1:]])
    np.testing.assert_array_equal(data[:, 1:6], tab.y)
    np.testing.assert_array_equal(data[:, 11:], tab.u)
    assert "\r" not in text


def test_plot_data_blocks(scenarios):
    tab = sample(solve(scenarios["pf_s1"])[0], 20)
    buf = io.StringIO()
    write_plot_data(tab, buf)
    blocks = buf.getvalue().split("\n\n\n")
    assert len(blocks) == 5
    vals = np.loadtxt(io.StringIO(blocks[2]))
    assert vals.shape == (20, 4)
    np.testing.assert_array_equal(vals[:, 1], tab.y[:, 2])


def test_save_table(tmp_path, scenarios):
    tab = sample(solve(scenarios["lf"])[0], 11)
    csv_path, dat_path = save_table(tab, tmp_path / "lf.csv")
    assert dat_path == tmp_path / "lf.dat"
    assert csv_path.read_bytes().count(b"\n") == 12
    assert dat_path.read_text().startswith("# vehicle 1")
