"""QXX initial placement: pruned tree search over qubit-to-register assignments.

Qubits are placed one per tree level. Every candidate register for the current
qubit is scored with a gaussian-weighted estimate of the scheduled depth
(gdepth); each node keeps its lowest-cost children up to max_children, and at
every level that is a multiple of max_depth the tree collapses to the ancestor
path of the cheapest leaf. No backtracking.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

from .circuit import Circuit, Gate
from .device import Device

PARAM_NAMES = ("max_depth", "max_children", "gauss_b", "gauss_c", "movement_factor", "edge_cost")

# (min, max) bounds per tunable, shared with the search-space presets.
PARAM_BOUNDS = {
    "max_depth": (1, 55),
    "max_children": (1, 55),
    "gauss_b": (0.0, 500.0),
    "gauss_c": (0.0, 1.0),
    "movement_factor": (1, 55),
    "edge_cost": (0.1, 1.0),
}


class PlacementTimeout(TimeoutError):
    """place() exceeded its deadline; raised cooperatively at node expansion."""


@dataclass(frozen=True)
class QxxParams:
    """The six placement tunables.

    max_depth        prune-to-best-path period of the search tree
    max_children     per-node retention width (lowest-cost children kept)
    gauss_b          spread of the gate-weighting gaussian (0 weighs all gates equally)
    gauss_c          center of the gaussian as a fraction of the circuit
    movement_factor  movement asymmetry: the lower-indexed qubit of a gate is
                     assumed to move 1/movement_factor of the distance, the
                     higher-indexed one the rest
    edge_cost        uniform device edge weight scaling all distances

    The positional order above is also the CLI sextuple order.
    """

    max_depth: int = 1
    max_children: int = 1
    gauss_b: float = 0.0
    gauss_c: float = 0.0
    movement_factor: int = 2
    edge_cost: float = 1.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            lo, hi = PARAM_BOUNDS[name]
            v = getattr(self, name)
            if not (lo <= v <= hi):
                raise ValueError(f"{name}={v} outside [{lo}, {hi}]")
        for name in ("max_depth", "max_children", "movement_factor"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ValueError(f"{name} must be an integer")

    @classmethod
    def from_sextuple(cls, text: str) -> "QxxParams":
        """Parse "max_depth,max_children,gauss_b,gauss_c,movement_factor,edge_cost"."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 6:
            raise ValueError(f"expected 6 comma-separated values, got {len(parts)}")
        return cls(
            max_depth=int(parts[0]),
            max_children=int(parts[1]),
            gauss_b=float(parts[2]),
            gauss_c=float(parts[3]),
            movement_factor=int(parts[4]),
            edge_cost=float(parts[5]),
        )

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, name) for name in PARAM_NAMES)


@dataclass
class PartialMapping:
    """Injective partial assignment of qubits to registers plus movement offsets.

    assignment[q] is the register of qubit q or None; offsets[q] accumulates the
    estimated distance the scheduler has already moved q toward its partners.
    """

    num_qubits: int
    assignment: list = field(default_factory=list)
    offsets: list = field(default_factory=list)

    def __post_init__(self):
        if not self.assignment:
            self.assignment = [None] * self.num_qubits
        if not self.offsets:
            self.offsets = [0.0] * self.num_qubits
        used = [r for r in self.assignment if r is not None]
        if len(used) != len(set(used)):
            raise ValueError("assignment is not injective")

    @property
    def used_registers(self) -> set:
        return {r for r in self.assignment if r is not None}

    def is_complete(self) -> bool:
        return all(r is not None for r in self.assignment)

    def assign(self, qubit: int, register: int) -> "PartialMapping":
        """Return a copy with one more qubit placed."""
        if self.assignment[qubit] is not None:
            raise ValueError(f"qubit {qubit} already mapped")
        if register in self.used_registers:
            raise ValueError(f"register {register} already used")
        asg = list(self.assignment)
        asg[qubit] = register
        return PartialMapping(self.num_qubits, asg, list(self.offsets))


class PlacementResult(NamedTuple):
    mapping: PartialMapping
    cost: float


def gaussian_weights(n_mapped: int, gauss_b: float, gauss_c: float) -> list:
    """Per-gate weights exp(-b * (i/n - c)^2) for gate ranks i = 1..n.

    With gauss_b = 0 every weight is 1 and the cost degenerates to the plain
    sum of effective distances.
    """
    return [math.exp(-gauss_b * (i / n_mapped - gauss_c) ** 2) for i in range(1, n_mapped + 1)]


def update_offsets(mapping: PartialMapping, gate: Gate, effective_dist: float, movement_factor: int) -> list:
    """Offsets after the scheduler is assumed to execute one gate.

    The lower-indexed qubit absorbs effective_dist/movement_factor of the
    movement, the higher-indexed one the remaining fraction. Pure: returns a
    new offset list.
    """
    if movement_factor < 1:
        raise ValueError(f"movement_factor must be >= 1, got {movement_factor}")
    if effective_dist < 0:
        raise ValueError(f"effective_dist must be nonnegative, got {effective_dist}")
    out = list(mapping.offsets)
    lo, hi = min(gate.control, gate.target), max(gate.control, gate.target)
    out[lo] += effective_dist / movement_factor
    out[hi] += effective_dist * (movement_factor - 1) / movement_factor
    return out


def _walk(pairs, weights, assignment, offsets, hop, edge_cost, movement_factor):
    """Accumulate the gaussian-weighted cost of the mapped gates, in program order.

    Mutates ``offsets`` in place (callers pass a scratch copy). The effective
    distance of a gate is its register distance minus whatever movement its
    qubits already accumulated, clamped at zero; only a positive effective
    distance contributes cost and further movement.
    """
    total = 0.0
    mf = movement_factor
    for (a, b), w in zip(pairs, weights):
        ra = assignment[a]
        rb = assignment[b]
        h = hop[ra][rb]
        raw = 0.0 if h <= 1 else h * edge_cost
        d = raw - offsets[a] - offsets[b]
        if d > 0.0:
            total += d * w
            lo, hi = (a, b) if a < b else (b, a)
            offsets[lo] += d / mf
            offsets[hi] += d * (mf - 1) / mf
    return total


def gdepth(circuit: Circuit, mapping: PartialMapping, device: Device, params: QxxParams) -> float:
    """Gaussian-weighted overestimate of the scheduled depth for a (partial) mapping.

    Only gates whose qubits are both mapped contribute; they are indexed
    1..n in program order as if scheduled sequentially. Offsets start from the
    mapping's stored values and accumulate across the evaluation; the input
    mapping is not mutated.
    """
    asg = mapping.assignment
    pairs = [g.qubits for g in circuit.gates if asg[g.control] is not None and asg[g.target] is not None]
    if not pairs:
        raise ValueError("no mapped gates: gdepth needs at least one gate with both qubits mapped")
    weights = gaussian_weights(len(pairs), params.gauss_b, params.gauss_c)
    return _walk(pairs, weights, asg, list(mapping.offsets), device.hop_matrix,
                 params.edge_cost, params.movement_factor)


def _placement_order(circuit: Circuit) -> list:
    """Qubits in order of first appearance in the gate list, then leftovers ascending."""
    order = []
    seen = set()
    for g in circuit.gates:
        for q in g.qubits:
            if q not in seen:
                seen.add(q)
                order.append(q)
    order.extend(q for q in range(circuit.num_qubits) if q not in seen)
    return order


def place(circuit: Circuit, device: Device, params: QxxParams, deadline: float | None = None) -> PlacementResult:
    """Search a complete minimum-gdepth mapping of the circuit onto the device.

    Deterministic: cost ties are resolved toward lower register indices. With
    max_children >= num_registers and max_depth >= num_qubits the search
    degenerates to exhaustive enumeration and returns the global minimum.

    deadline is a wall-clock budget in seconds; exceeding it raises
    PlacementTimeout (checked at every node expansion).
    """
    n_qubits = circuit.num_qubits
    n_regs = device.num_registers
    if n_qubits > n_regs:
        raise ValueError(f"circuit needs {n_qubits} qubits but device has {n_regs} registers")
    t_end = None if deadline is None else time.monotonic() + deadline

    order = _placement_order(circuit)
    level_of = {q: lvl for lvl, q in enumerate(order, start=1)}
    gate_pairs = [g.qubits for g in circuit.gates]
    # The mapped-qubit set at level l is fixed (first l qubits of the order), so
    # the contributing gates and their gaussian weights depend on the level only.
    pairs_at = [[]]
    for lvl in range(1, n_qubits + 1):
        pairs_at.append([p for p in gate_pairs if level_of[p[0]] <= lvl and level_of[p[1]] <= lvl])
    weights_at = [gaussian_weights(len(p), params.gauss_b, params.gauss_c) if p else [] for p in pairs_at]

    active = {q for p in gate_pairs for q in p}
    hop = device.hop_matrix
    edge_cost = params.edge_cost
    mf = params.movement_factor

    # Frontier nodes: (cost, assignment list, used-register set).
    frontier = [(0.0, [None] * n_qubits, set())]
    for lvl in range(1, n_qubits + 1):
        qubit = order[lvl - 1]
        pairs = pairs_at[lvl]
        weights = weights_at[lvl]
        children = []
        for cost, asg, used in frontier:
            if t_end is not None and time.monotonic() >= t_end:
                raise PlacementTimeout(f"placement deadline of {deadline}s exceeded at level {lvl}")
            if qubit not in active:
                # A qubit with no gates never affects any cost: first free register.
                reg = next(r for r in range(n_regs) if r not in used)
                child = list(asg)
                child[qubit] = reg
                children.append((cost, child, used | {reg}))
                continue
            scored = []
            for reg in range(n_regs):
                if reg in used:
                    continue
                asg[qubit] = reg
                c = _walk(pairs, weights, asg, [0.0] * n_qubits, hop, edge_cost, mf) if pairs else 0.0
                scored.append((c, reg))
            asg[qubit] = None
            scored.sort()
            for c, reg in scored[: params.max_children]:
                child = list(asg)
                child[qubit] = reg
                children.append((c, child, used | {reg}))
        frontier = children
        if lvl % params.max_depth == 0 and len(frontier) > 1:
            frontier = [min(frontier, key=lambda node: node[0])]

    best_cost, best_asg, _ = min(frontier, key=lambda node: node[0])
    # Commit the winner's offsets by replaying its full evaluation.
    offsets = [0.0] * n_qubits
    if pairs_at[n_qubits]:
        _walk(pairs_at[n_qubits], weights_at[n_qubits], best_asg, offsets, hop, edge_cost, mf)
    return PlacementResult(PartialMapping(n_qubits, best_asg, offsets), best_cost)
