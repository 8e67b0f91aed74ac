"""Seeded stochastic SWAP insertion and semantic verification of routed circuits.

The scheduler here is intentionally minimal: it walks the circuit gate by gate
and, whenever a gate's registers are not adjacent, repeatedly applies a SWAP
chosen uniformly at random (seeded) among the moves that shrink the register
distance the most. It exists so the whole pipeline is self-contained and
deterministic; it is a stand-in for whatever production scheduler follows the
placement step.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .circuit import Circuit, Gate, GateKind, depth
from .device import Device


@dataclass(frozen=True)
class RoutedCircuit:
    """Device-compatible circuit over registers, with its provenance."""

    circuit: Circuit
    initial_mapping: tuple
    seed: int

    @property
    def swap_count(self) -> int:
        return sum(1 for g in self.circuit.gates if g.kind is GateKind.SWAP)


@dataclass(frozen=True)
class RoutingViolation:
    gate_index: int
    reason: str


def route(circuit: Circuit, device: Device, initial_mapping, seed: int = 0) -> RoutedCircuit:
    """Insert SWAPs so every gate acts on adjacent registers.

    initial_mapping[q] is the register of logical qubit q; it must be complete
    and injective. Deterministic for a fixed seed.
    """
    mapping = list(initial_mapping)
    if len(mapping) != circuit.num_qubits:
        raise ValueError(f"mapping covers {len(mapping)} qubits, circuit has {circuit.num_qubits}")
    if len(set(mapping)) != len(mapping):
        raise ValueError("initial mapping is not injective")
    if any(g.kind is not GateKind.CNOT for g in circuit.gates):
        raise ValueError("route() expects a CNOT-only input circuit")

    n = device.num_registers
    hop = device.hop_matrix
    reg_to_log = [None] * n
    for q, r in enumerate(mapping):
        reg_to_log[r] = q
    neighbors = [device.neighbors(r) for r in range(n)]
    rng = random.Random(seed)

    out = []
    for gate in circuit.gates:
        ra, rb = mapping[gate.control], mapping[gate.target]
        while hop[ra][rb] > 1:
            target_h = hop[ra][rb] - 1
            moves = [(ra, nb) for nb in neighbors[ra] if hop[nb][rb] == target_h]
            moves += [(rb, nb) for nb in neighbors[rb] if hop[ra][nb] == target_h]
            src, dst = moves[rng.randrange(len(moves))]
            out.append(Gate(src, dst, GateKind.SWAP))
            qa, qb = reg_to_log[src], reg_to_log[dst]
            reg_to_log[src], reg_to_log[dst] = qb, qa
            if qa is not None:
                mapping[qa] = dst
            if qb is not None:
                mapping[qb] = src
            ra, rb = mapping[gate.control], mapping[gate.target]
        out.append(Gate(ra, rb))
    return RoutedCircuit(Circuit(n, tuple(out)), tuple(initial_mapping), seed)


def verify(routed: RoutedCircuit, original: Circuit, device: Device) -> RoutingViolation | None:
    """Check a routed circuit against its source.

    Every emitted gate must sit on a device edge, and replaying the SWAP
    permutation over the initial mapping must reproduce the original gate
    sequence exactly. Returns None when valid, otherwise the first violation.
    """
    hop = device.hop_matrix
    reg_to_log = [None] * device.num_registers
    for q, r in enumerate(routed.initial_mapping):
        reg_to_log[r] = q
    pending = iter(original.gates)
    for i, gate in enumerate(routed.circuit.gates):
        if hop[gate.control][gate.target] != 1:
            return RoutingViolation(i, f"gate ({gate.control},{gate.target}) is not a device edge")
        if gate.kind is GateKind.SWAP:
            a, b = gate.control, gate.target
            reg_to_log[a], reg_to_log[b] = reg_to_log[b], reg_to_log[a]
            continue
        expect = next(pending, None)
        if expect is None:
            return RoutingViolation(i, "more gates than the original circuit")
        got = (reg_to_log[gate.control], reg_to_log[gate.target])
        if got != expect.qubits:
            return RoutingViolation(i, f"expected logical gate {expect.qubits}, got {got}")
    if next(pending, None) is not None:
        return RoutingViolation(len(routed.circuit.gates), "original gates left unscheduled")
    return None


def ratio(c_in: Circuit, c_out: Circuit, swap_weight: int = 3) -> float:
    """Depth of the laid-out circuit relative to the input; 1.0 is optimal."""
    d_in = depth(c_in, swap_weight)
    if d_in == 0:
        raise ValueError("input circuit has zero depth")
    return depth(c_out, swap_weight) / d_in
