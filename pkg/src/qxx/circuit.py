"""Two-qubit circuit IR: construction, JSON serialization, depth, interaction graph."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx


class GateKind(Enum):
    CNOT = "cnot"
    SWAP = "swap"


class CircuitFormatError(ValueError):
    """Malformed circuit JSON or a gate that violates the IR invariants."""


@dataclass(frozen=True)
class Gate:
    control: int
    target: int
    kind: GateKind = GateKind.CNOT

    def __post_init__(self):
        if self.control == self.target:
            raise CircuitFormatError(f"degenerate gate ({self.control},{self.target}): control equals target")

    @property
    def qubits(self) -> tuple[int, int]:
        return (self.control, self.target)


@dataclass(frozen=True)
class Circuit:
    """Ordered list of two-qubit gates over qubits 0..num_qubits-1.

    Immutable after construction; program order is the gate tuple order.
    Single-qubit gates are not representable on purpose.
    """

    num_qubits: int
    gates: tuple[Gate, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_qubits < 0:
            raise CircuitFormatError(f"negative qubit count {self.num_qubits}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for i, g in enumerate(self.gates):
            if not (0 <= g.control < self.num_qubits and 0 <= g.target < self.num_qubits):
                raise CircuitFormatError(
                    f"gate {i} ({g.control},{g.target}) out of range for {self.num_qubits} qubits"
                )

    @classmethod
    def from_pairs(cls, num_qubits: int, pairs, kind: GateKind = GateKind.CNOT) -> "Circuit":
        return cls(num_qubits, tuple(Gate(c, t, kind) for c, t in pairs))

    def __len__(self) -> int:
        return len(self.gates)


def depth(circuit: Circuit, swap_weight: int = 3) -> int:
    """Circuit depth under as-soon-as-possible layering.

    Each gate starts at the max ready-time of its two qubits and advances both
    by 1 (CNOT) or by ``swap_weight`` (SWAP, default 3: the cost of its CNOT
    decomposition). Empty circuits have depth 0.
    """
    if swap_weight < 1:
        raise ValueError(f"swap_weight must be >= 1, got {swap_weight}")
    ready = [0] * circuit.num_qubits
    out = 0
    for g in circuit.gates:
        t = max(ready[g.control], ready[g.target]) + (swap_weight if g.kind is GateKind.SWAP else 1)
        ready[g.control] = t
        ready[g.target] = t
        if t > out:
            out = t
    return out


def interaction_graph(circuit: Circuit) -> nx.Graph:
    """Undirected graph over qubits with an edge wherever some gate acts.

    Parallel gates collapse to a single edge; qubits that appear in no gate are
    isolated vertices.
    """
    g = nx.Graph()
    g.add_nodes_from(range(circuit.num_qubits))
    g.add_edges_from(gate.qubits for gate in circuit.gates)
    return g


def parse_circuit(text: str) -> Circuit:
    """Parse the JSON circuit format: {"qubits": Q, "gates": [[c,t], [c,t,"swap"], ...]}."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise CircuitFormatError(f"invalid JSON: {e}") from e
    if not isinstance(obj, dict):
        raise CircuitFormatError("circuit file must be a JSON object")
    if not isinstance(obj.get("qubits"), int) or isinstance(obj.get("qubits"), bool):
        raise CircuitFormatError('missing or non-integer "qubits" field')
    raw_gates = obj.get("gates")
    if not isinstance(raw_gates, list):
        raise CircuitFormatError('missing or non-list "gates" field')
    num_qubits = obj["qubits"]
    gates = []
    for i, item in enumerate(raw_gates):
        if not isinstance(item, list) or len(item) not in (2, 3):
            raise CircuitFormatError(f"gate {i} must be [control,target] or [control,target,\"swap\"]")
        c, t = item[0], item[1]
        if not isinstance(c, int) or not isinstance(t, int) or isinstance(c, bool) or isinstance(t, bool):
            raise CircuitFormatError(f"gate {i} has non-integer qubit indices")
        kind = GateKind.CNOT
        if len(item) == 3:
            if item[2] != "swap":
                raise CircuitFormatError(f'gate {i} has unknown kind {item[2]!r} (only "swap" is allowed)')
            kind = GateKind.SWAP
        if c == t:
            raise CircuitFormatError(f"gate {i} ({c},{t}) is degenerate: control equals target")
        if not (0 <= c < num_qubits and 0 <= t < num_qubits):
            raise CircuitFormatError(f"gate {i} ({c},{t}) out of range for {num_qubits} qubits")
        gates.append(Gate(c, t, kind))
    return Circuit(num_qubits, tuple(gates))


def emit_circuit(circuit: Circuit) -> str:
    """Serialize to the JSON circuit format; inverse of parse_circuit."""
    gates = [
        [g.control, g.target] if g.kind is GateKind.CNOT else [g.control, g.target, "swap"]
        for g in circuit.gates
    ]
    return json.dumps({"qubits": circuit.num_qubits, "gates": gates})
