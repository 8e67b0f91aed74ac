"""Device connectivity: register graph, hop distances, uniform edge-cost metric."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass


class DeviceFormatError(ValueError):
    """Malformed device JSON or an invalid connectivity description."""


@dataclass(frozen=True)
class Device:
    """Connected register graph with a precomputed hop-distance matrix.

    hop_matrix[i][j] is the minimum number of edges between registers i and j;
    it is 1 exactly on edges and 0 on the diagonal. Immutable, safe to share.
    """

    num_registers: int
    edges: frozenset[tuple[int, int]]  # normalized (low, high) pairs
    hop_matrix: tuple[tuple[int, ...], ...]

    def neighbors(self, r: int) -> tuple[int, ...]:
        row = self.hop_matrix[r]
        return tuple(i for i, h in enumerate(row) if h == 1)

    def dist(self, r_a: int, r_b: int, edge_cost: float) -> float:
        """Movement cost between two registers.

        Adjacent registers (and a register with itself) cost 0; otherwise the
        hop count scaled by the uniform edge cost. For fixed endpoints the
        value is linear in edge_cost.
        """
        if not (0.1 <= edge_cost <= 1.0):
            raise ValueError(f"edge_cost must lie in [0.1, 1.0], got {edge_cost}")
        n = self.num_registers
        if not (0 <= r_a < n and 0 <= r_b < n):
            raise ValueError(f"register pair ({r_a},{r_b}) out of range for {n} registers")
        h = self.hop_matrix[r_a][r_b]
        return 0.0 if h <= 1 else h * edge_cost


def build_device(num_registers: int, edges) -> Device:
    """Build a Device from an edge list, computing all-pairs hop counts by BFS.

    Raises DeviceFormatError for self-loops, out-of-range registers, or a
    disconnected graph (distances would be undefined across components).
    """
    if num_registers < 1:
        raise DeviceFormatError(f"need at least one register, got {num_registers}")
    norm = set()
    for e in edges:
        a, b = e
        if a == b:
            raise DeviceFormatError(f"self-loop on register {a}")
        if not (0 <= a < num_registers and 0 <= b < num_registers):
            raise DeviceFormatError(f"edge ({a},{b}) out of range for {num_registers} registers")
        norm.add((min(a, b), max(a, b)))

    adj = [[] for _ in range(num_registers)]
    for a, b in norm:
        adj[a].append(b)
        adj[b].append(a)

    hop = []
    for src in range(num_registers):
        row = [-1] * num_registers
        row[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if row[v] < 0:
                    row[v] = row[u] + 1
                    queue.append(v)
        if any(h < 0 for h in row):
            raise DeviceFormatError("device graph is disconnected")
        hop.append(tuple(row))

    return Device(num_registers, frozenset(norm), tuple(hop))


def line(n: int) -> Device:
    """Linear chain of n registers."""
    return build_device(n, [(i, i + 1) for i in range(n - 1)])


def grid(rows: int, cols: int) -> Device:
    """rows x cols rectangular lattice, row-major register numbering."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.append((i, i + 1))
            if r + 1 < rows:
                edges.append((i, i + cols))
    return build_device(rows * cols, edges)


def aspen16() -> Device:
    """16-register two-octagon ring topology (Aspen-like, low average degree).

    Two 8-cycles (0..7 and 8..15) bridged by the edges (1,14) and (2,15).
    """
    edges = [(i, (i + 1) % 8) for i in range(8)]
    edges += [(8 + i, 8 + (i + 1) % 8) for i in range(8)]
    edges += [(1, 14), (2, 15)]
    return build_device(16, edges)


BUILTIN_DEVICES = {
    "aspen16": aspen16,
    "grid4x4": lambda: grid(4, 4),
    "line16": lambda: line(16),
}


def resolve_device(spec: str) -> Device:
    """Resolve a CLI device spec: builtin name, "line:N", "grid:RxC", or a JSON file path."""
    if spec in BUILTIN_DEVICES:
        return BUILTIN_DEVICES[spec]()
    if spec.startswith("line:"):
        return line(int(spec.split(":", 1)[1]))
    if spec.startswith("grid:"):
        r, c = spec.split(":", 1)[1].lower().split("x")
        return grid(int(r), int(c))
    with open(spec, encoding="utf-8") as fh:
        return parse_device(fh.read())


def parse_device(text: str) -> Device:
    """Parse the JSON device format: {"registers": N, "edges": [[i,j], ...]}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise DeviceFormatError(f"invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise DeviceFormatError("device file must be a JSON object")
    if not isinstance(obj.get("registers"), int) or isinstance(obj.get("registers"), bool):
        raise DeviceFormatError('missing or non-integer "registers" field')
    raw = obj.get("edges")
    if not isinstance(raw, list):
        raise DeviceFormatError('missing or non-list "edges" field')
    edges = []
    for i, e in enumerate(raw):
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(v, int) and not isinstance(v, bool) for v in e):
            raise DeviceFormatError(f"edge {i} must be a pair of register indices")
        edges.append((e[0], e[1]))
    return build_device(obj["registers"], edges)


def emit_device(device: Device) -> str:
    """Serialize to the JSON device format; inverse of parse_device."""
    return json.dumps({"registers": device.num_registers, "edges": [list(e) for e in sorted(device.edges)]})
