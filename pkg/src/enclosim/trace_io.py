"""Flat delimited export of a run history.

One row per logged record. Columns are named so the file stands alone:
agent columns carry the agent id, edge columns carry both vertex ids.
Values are written with full double precision so a reload reproduces the
trace bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParseError
from .sim import SimTrace

_AGENT_FIELDS = ("x", "y", "theta", "v", "w", "e_theta")
_EDGE_FIELDS = ("d", "e", "eta", "xi", "sigma", "e_up", "e_lo")


def trace_columns(trace: SimTrace) -> tuple[list[str], np.ndarray]:
    """Column names and the (L, C) data matrix for one trace."""
    n = trace.poses.shape[1]
    edges = trace.scenario.spec.graph.edges
    names = ["t", "target_x", "target_y"]
    blocks = [trace.t[:, None], trace.target]
    for i in range(1, n + 1):
        names += [f"{f}_{i}" for f in _AGENT_FIELDS]
        blocks.append(np.column_stack([
            trace.poses[:, i - 1, 0], trace.poses[:, i - 1, 1], trace.poses[:, i - 1, 2],
            trace.v[:, i - 1], trace.w[:, i - 1], trace.e_theta[:, i - 1]]))
    for k, (i, j) in enumerate(edges):
        names += [f"{f}_{i}_{j}" for f in _EDGE_FIELDS]
        blocks.append(np.column_stack([
            trace.d[:, k], trace.e[:, k], trace.eta[:, k], trace.xi[:, k],
            trace.sigma[:, k], trace.e_bound_upper[:, k], trace.e_bound_lower[:, k]]))
    names += ["sigma_min_R", "violation"]
    blocks.append(np.column_stack([trace.sigma_min_rigidity, trace.violation.astype(float)]))
    return names, np.hstack(blocks)


def write_trace(trace: SimTrace, path) -> None:
    names, data = trace_columns(trace)
    np.savetxt(path, data, fmt="%.17e", delimiter=",", header=",".join(names), comments="")


@dataclass
class TraceTable:
    """Reloaded trace file: named columns plus the shape read off the header."""

    columns: dict
    n_agents: int
    edges: tuple

    @property
    def n_rows(self) -> int:
        return self.columns["t"].shape[0]

    def agent(self, field: str, i: int) -> np.ndarray:
        return self.columns[f"{field}_{i}"]

    def edge(self, field: str, i: int, j: int) -> np.ndarray:
        return self.columns[f"{field}_{i}_{j}"]


def read_trace(path) -> TraceTable:
    """Load a written trace and recover its agent and edge structure."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("t,"):
            raise ParseError(f"{path}: missing column header")
        names = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(names):
        raise ParseError(f"{path}: {data.shape[1]} columns of data under {len(names)} names")
    columns = {name: data[:, k] for k, name in enumerate(names)}
    n_agents = sum(1 for name in names if name.startswith("x_"))
    edges = tuple(
        (int(parts[1]), int(parts[2]))
        for name in names if name.startswith("d_") and len(parts := name.split("_")) == 3
    )
    return TraceTable(columns, n_agents, edges)
