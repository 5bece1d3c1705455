"""Scenario files, trajectory sampling and CSV / plot-data output.

A scenario file is line oriented; ``#`` starts a comment. Example::

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

See ``docs/scenario_format.md`` for the full grammar.
"""
from __future__ import annotations

import io
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import Scenario, ScenarioError, TopologyGraph, TopologyKind, TrajectoryTable
from .mpc import MpcConfig

SECTIONS = ("platoon", "vehicles", "topology", "mpc")
PLATOON_KEYS = {"n", "t_f", "samples", "name"}
MPC_KEYS = {"N", "T_s"}


class ScenarioParseError(ValueError):
    """Malformed scenario file; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message: str, line: int = 0, source: str = "<string>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class ScenarioFile:
    scenario: Scenario
    mpc: MpcConfig | None = None
    samples: int = 1000


def _number(tok: str, line: int, source: str, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise ScenarioParseError(f"{what}: expected a number, got {tok!r}", line, source) from None
    if not np.isfinite(v):
        raise ScenarioParseError(f"{what}: value must be finite", line, source)
    return v


def _integer(tok: str, line: int, source: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ScenarioParseError(f"{what}: expected an integer, got {tok!r}", line, source) from None


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioFile:
    section = None
    seen: set[str] = set()
    platoon: dict[str, tuple[str, int]] = {}
    mpc: dict[str, tuple[str, int]] = {}
    vehicles: dict[int, tuple[float, float | None, int]] = {}
    kind: tuple[str, int] | None = None
    rows: list[tuple[list[str], int]] = []

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ScenarioParseError(f"malformed section header {line!r}", lineno, source)
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                raise ScenarioParseError(f"unknown section [{section}]", lineno, source)
            if section in seen:
                raise ScenarioParseError(f"duplicate section [{section}]", lineno, source)
            seen.add(section)
            continue
        if section is None:
            raise ScenarioParseError("content before the first section header", lineno, source)
        if "=" in line:
            key, _, value = (p.strip() for p in line.partition("="))
            if not value:
                raise ScenarioParseError(f"missing value for {key!r}", lineno, source)
            if section == "platoon":
                if key not in PLATOON_KEYS:
                    raise ScenarioParseError(f"unknown key {key!r} in [platoon]", lineno, source)
                target = platoon
            elif section == "mpc":
                if key not in MPC_KEYS:
                    raise ScenarioParseError(f"unknown key {key!r} in [mpc]", lineno, source)
                target = mpc
            elif section == "topology" and key == "kind":
                if kind is not None:
                    raise ScenarioParseError("duplicate key 'kind'", lineno, source)
                kind = (value.lower(), lineno)
                continue
            else:
                raise ScenarioParseError(f"unknown key {key!r} in [{section}]", lineno, source)
            if key in target:
                raise ScenarioParseError(f"duplicate key {key!r}", lineno, source)
            target[key] = (value, lineno)
            continue
        toks = line.split()
        if section == "vehicles":
            idx = _integer(toks[0], lineno, source, "vehicle index")
            if idx in vehicles:
                raise ScenarioParseError(f"vehicle {idx} listed twice", lineno, source)
            want = 2 if idx == 0 else 3
            if len(toks) != want:
                what = "leader row needs 'index x0'" if idx == 0 else "vehicle row needs 'index x0 d'"
                raise ScenarioParseError(what, lineno, source)
            x0 = _number(toks[1], lineno, source, "x0")
            d = _number(toks[2], lineno, source, "d") if idx else None
            vehicles[idx] = (x0, d, lineno)
        elif section == "topology":
            rows.append((toks, lineno))
        else:
            raise ScenarioParseError(f"unexpected row in [{section}]", lineno, source)

    for required in ("platoon", "vehicles", "topology"):
        if required not in seen:
            raise ScenarioParseError(f"missing section [{required}]", 0, source)
    for key in ("n", "t_f"):
        if key not in platoon:
            raise ScenarioParseError(f"missing key {key!r} in [platoon]", 0, source)
    n = _integer(platoon["n"][0], platoon["n"][1], source, "n")
    t_f = _number(platoon["t_f"][0], platoon["t_f"][1], source, "t_f")
    samples = 1000
    if "samples" in platoon:
        samples = _integer(platoon["samples"][0], platoon["samples"][1], source, "samples")
        if samples < 2:
            raise ScenarioParseError("samples must be at least 2", platoon["samples"][1], source)
    name = platoon.get("name", (Path(source).stem, 0))[0]
    if kind is None:
        raise ScenarioParseError("missing key 'kind' in [topology]", 0, source)
    if sorted(vehicles) != list(range(n + 1)):
        raise ScenarioParseError(f"[vehicles] must list indices 0..{n} exactly once", 0, source)
    x0 = [vehicles[i][0] for i in range(n + 1)]
    d = [vehicles[i][1] for i in range(1, n + 1)]
    topo = _topology(kind, rows, n, source)
    scenario = Scenario(n, t_f, x0, d, topo, name=name)
    cfg = None
    if mpc or "mpc" in seen:
        kw = {}
        if "N" in mpc:
            kw["N"] = _integer(mpc["N"][0], mpc["N"][1], source, "N")
        if "T_s" in mpc:
            kw["T_s"] = _number(mpc["T_s"][0], mpc["T_s"][1], source, "T_s")
        try:
            cfg = MpcConfig(**kw)
        except ValueError as exc:
            raise ScenarioParseError(str(exc), 0, source) from None
    return ScenarioFile(scenario, cfg, samples)


def _topology(kind, rows, n, source) -> TopologyGraph:
    name, kline = kind
    try:
        k = TopologyKind(name)
    except ValueError:
        raise ScenarioParseError(f"unknown topology kind {name!r}", kline, source) from None
    if k in (TopologyKind.PF, TopologyKind.TPF):
        omega: dict[int, float] = {}
        tilde: dict[int, float] = {}
        for toks, ln in rows:
            i = _integer(toks[0], ln, source, "vehicle index")
            need = 3 if (k is TopologyKind.TPF and i >= 3) else 2
            if len(toks) != need:
                form = "'i w w_tilde'" if need == 3 else "'i w'"
                raise ScenarioParseError(f"{k.value} weight row for vehicle {i} needs {form}", ln, source)
            if i in omega:
                raise ScenarioParseError(f"weights for vehicle {i} listed twice", ln, source)
            if not 1 <= i <= n:
                raise ScenarioParseError(f"vehicle index {i} outside 1..{n}", ln, source)
            omega[i] = _number(toks[1], ln, source, "w")
            if need == 3:
                tilde[i] = _number(toks[2], ln, source, "w_tilde")
        missing = sorted(set(range(1, n + 1)) - set(omega))
        if missing:
            raise ScenarioParseError(f"missing weights for vehicles {missing}", 0, source)
        w = [omega[i] for i in range(1, n + 1)]
        if k is TopologyKind.PF:
            return TopologyGraph.pf(w)
        return TopologyGraph.tpf(w, [tilde[i] for i in range(3, n + 1)])
    edges = []
    for toks, ln in rows:
        if len(toks) != 3:
            raise ScenarioParseError("edge row needs 'i j w'", ln, source)
        i = _integer(toks[0], ln, source, "follower index")
        j = _integer(toks[1], ln, source, "observed index")
        w = _number(toks[2], ln, source, "w")
        if j >= i:
            raise ScenarioError(f"rearward links only (j < i): line {ln} has {i} -> {j}")
        edges.append((i, j, w))
    return TopologyGraph(k, n, tuple(edges))


def parse_scenario(path) -> ScenarioFile:
    """Read and validate a scenario file.

    Raises ``OSError`` for unreadable files, :class:`ScenarioParseError` for
    syntax problems and :class:`~platoon_nash.model.ScenarioError` for
    modelling violations.
    """
    path = Path(path)
    return parse_scenario_text(path.read_text(encoding="utf-8"), str(path))


def format_scenario(scenario: Scenario, mpc: MpcConfig | None = None, samples: int = 1000) -> str:
    """Serialise a scenario in the format read by :func:`parse_scenario`."""
    out = io.StringIO()
    out.write("[platoon]\n")
    if scenario.name:
        out.write(f"name = {scenario.name}\n")
    out.write(f"n = {scenario.n}\nt_f = {scenario.t_f!r}\nsamples = {samples}\n\n[vehicles]\n")
    out.write(f"0 {float(scenario.x0[0])!r}\n")
    for i in range(1, scenario.n + 1):
        out.write(f"{i} {float(scenario.x0[i])!r} {float(scenario.d[i - 1])!r}\n")
    topo = scenario.topology
    out.write(f"\n[topology]\nkind = {topo.kind.value}\n")
    nb = topo.neighbor_sets
    if topo.kind in (TopologyKind.PF, TopologyKind.TPF):
        for i in range(1, scenario.n + 1):
            row = f"{i} {nb[i].get(i - 1, 0.0)!r}"
            if topo.kind is TopologyKind.TPF and i >= 3:
                row += f" {nb[i].get(i - 2, 0.0)!r}"
            out.write(row + "\n")
    else:
        for i, j, w in topo.edges:
            out.write(f"{i} {j} {w!r}\n")
    if mpc is not None:
        out.write(f"\n[mpc]\nN = {mpc.N}\nT_s = {mpc.T_s!r}\n")
    return out.getvalue()


def bundled_scenarios() -> dict[str, Path]:
    """Scenario files shipped with the package, keyed by stem."""
    here = Path(__file__).with_name("scenarios")
    return {p.stem: p for p in sorted(here.glob("*.cfg"))}


def resolve_scenario_path(arg: str) -> Path:
    """A path, or the stem of a bundled scenario (``pf_s1``)."""
    p = Path(arg)
    if p.exists() or os.sep in arg or arg.endswith(".cfg"):
        return p
    return bundled_scenarios().get(arg, p)


# -- sampling and output ------------------------------------------------------


def sample(solution, M: int = 1000) -> TrajectoryTable:
    """Evaluate a solution pointwise on ``M`` uniform samples of ``[0, t_f]``."""
    if M < 2:
        raise ValueError("need at least two samples")
    return solution.sample(M)


def csv_header(n: int) -> str:
    cols = ["t"] + [f"{p}{i}" for p in "yeu" for i in range(1, n + 1)]
    return ",".join(cols)


def write_csv(table: TrajectoryTable, stream) -> None:
    """Header ``t,y1..yn,e1..en,u1..un``; shortest round-trip float text."""
    stream.write(csv_header(table.n) + "\n")
    data = np.column_stack([table.t, table.y, table.e, table.u])
    for row in data:
        stream.write(",".join(repr(float(v)) for v in row) + "\n")


def write_plot_data(table: TrajectoryTable, stream) -> None:
    """One whitespace-separated block per vehicle (columns ``t y e u``).

    Blocks are separated by two blank lines, which gnuplot addresses with
    ``index`` and numpy can split on.
    """
    for i in range(table.n):
        if i:
            stream.write("\n\n")
        stream.write(f"# vehicle {i + 1}\n# t y e u\n")
        for k in range(table.t.size):
            vals = (table.t[k], table.y[k, i], table.e[k, i], table.u[k, i])
            stream.write(" ".join(repr(float(v)) for v in vals) + "\n")


def save_table(table: TrajectoryTable, csv_path) -> tuple[Path, Path]:
    """Write the CSV and its ``.dat`` plot-data companion next to it."""
    csv_path = Path(csv_path)
    dat_path = csv_path.with_suffix(".dat")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        write_csv(table, fh)
    with open(dat_path, "w", encoding="utf-8", newline="\n") as fh:
        write_plot_data(table, fh)
    return csv_path, dat_path
