"""Pick the right solver for a scenario, falling back to the oracle."""
from __future__ import annotations

from .closed_form import solve_pf, solve_tpf
from .general_game import solve_general
from .matfun import NearDegenerateSpectrum
from .model import Scenario, TopologyKind
from .oracle import solve_oracle

METHODS = ("auto", "pf", "tpf", "general", "oracle")


def solve(scenario: Scenario, method: str = "auto"):
    """Return ``(solution, method_used)``.

    ``auto`` uses the PF or TPF closed form when the topology allows and
    the general solver otherwise. Repeated eigenvalues of the information
    matrix route any modal solver to oracle shooting; ``method_used`` then
    reads e.g. ``"tpf->oracle"``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    kind = scenario.topology.kind
    if method == "auto":
        method = {TopologyKind.PF: "pf", TopologyKind.TPF: "tpf"}.get(kind, "general")
    if method == "oracle":
        return solve_oracle(scenario), "oracle"
    if method == "pf":
        return solve_pf(scenario), "pf"
    fn = solve_tpf if method == "tpf" else solve_general
    try:
        return fn(scenario), method
    except NearDegenerateSpectrum:
        return solve_oracle(scenario), f"{method}->oracle"
