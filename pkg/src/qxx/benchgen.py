"""Benchmark circuits with a known optimal depth and a known optimal mapping.

Each circuit is built directly on the device as a stack of edge matchings, so
an ideal layout exists by construction: under the generator's mapping every
gate already sits on a device edge and the depth equals the layer count. One
designated register participates in every layer, which pins the depth exactly.
Qubit labels are scrambled afterwards so the optimum is not the identity.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from random import Random

from .circuit import Circuit, Gate, parse_circuit, emit_circuit
from .device import Device


@dataclass(frozen=True)
class BenchCase:
    name: str
    circuit: Circuit
    optimal_mapping: tuple
    optimal_depth: int


def generate(device: Device, target_depth: int, gate_density: float = 0.7, seed=0) -> tuple[Circuit, tuple]:
    """Build a circuit of exactly target_depth with a known perfect mapping.

    gate_density sizes each layer as a fraction of the largest possible
    matching (num_registers // 2), with at least one gate per layer. Returns
    (circuit, mapping) where mapping[q] is the register that makes every gate
    land on a device edge.
    """
    if target_depth < 1:
        raise ValueError(f"target_depth must be >= 1, got {target_depth}")
    if not (0.0 < gate_density <= 1.0):
        raise ValueError(f"gate_density must lie in (0, 1], got {gate_density}")
    edges = sorted(device.edges)
    if not edges:
        raise ValueError("device has no edges: no matching exists")

    n = device.num_registers
    per_layer = max(1, round(gate_density * (n // 2)))
    rng = Random(seed)
    thread = rng.randrange(n)  # this register appears in every layer
    thread_edges = [e for e in edges if thread in e]

    reg_gates = []
    for _ in range(target_depth):
        first = thread_edges[rng.randrange(len(thread_edges))]
        layer = [first]
        used = set(first)
        pool = [e for e in edges if e != first]
        rng.shuffle(pool)
        for u, v in pool:
            if len(layer) >= per_layer:
                break
            if u in used or v in used:
                continue
            layer.append((u, v))
            used.update((u, v))
        for u, v in layer:
            reg_gates.append((u, v) if rng.random() < 0.5 else (v, u))

    mapping = list(range(n))
    rng.shuffle(mapping)  # logical qubit q lives on register mapping[q]
    inverse = [0] * n
    for q, r in enumerate(mapping):
        inverse[r] = q
    gates = tuple(Gate(inverse[u], inverse[v]) for u, v in reg_gates)
    return Circuit(n, gates), tuple(mapping)


def write_suite(device: Device, depths, per_depth: int, out_dir, gate_density: float = 0.7, seed=0) -> list:
    """Generate a benchmark suite on disk: one circuit JSON plus a sidecar per case.

    Case (depth d, index i) is seeded from (seed, d, i), so suites are
    reproducible and extending per_depth keeps existing cases stable.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for d in depths:
        for i in range(per_depth):
            circuit, mapping = generate(device, d, gate_density, seed=f"{seed}:{d}:{i}")
            name = f"d{d:02d}_i{i:02d}"
            (out / f"{name}.json").write_text(emit_circuit(circuit), encoding="utf-8")
            sidecar = {"optimal_mapping": list(mapping), "optimal_depth": d}
            (out / f"{name}.optimal.json").write_text(json.dumps(sidecar), encoding="utf-8")
            written.append(out / f"{name}.json")
    return written


def load_suite(suite_dir) -> list:
    """Load every circuit (with its sidecar, when present) from a suite directory."""
    cases = []
    for path in sorted(Path(suite_dir).glob("*.json")):
        if path.name.endswith(".optimal.json"):
            continue
        circuit = parse_circuit(path.read_text(encoding="utf-8"))
        sidecar = path.with_name(path.stem + ".optimal.json")
        mapping, opt_depth = (), 0
        if sidecar.exists():
            meta = json.loads(sidecar.read_text(encoding="utf-8"))
            mapping = tuple(meta["optimal_mapping"])
            opt_depth = int(meta["optimal_depth"])
        cases.append(BenchCase(path.stem, circuit, mapping, opt_depth))
    if not cases:
        raise ValueError(f"no circuits found in {suite_dir}")
    return cases


def parse_depth_range(text: str) -> list:
    """Parse a CLI depth spec: "5..45:5" (inclusive range with step) or "5,10,20"."""
    m = re.fullmatch(r"(\d+)\.\.(\d+):(\d+)", text.strip())
    if m:
        lo, hi, step = (int(g) for g in m.groups())
        if step < 1 or hi < lo:
            raise ValueError(f"bad depth range {text!r}")
        return list(range(lo, hi + 1, step))
    return [int(p) for p in text.split(",")]
