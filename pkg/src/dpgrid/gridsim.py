"""Measurement-tree simulation: PMUs feeding concentrators feeding a master.

Readings flow along a tree whose layers are strictly ordered
PMU < PDC < MASTER.  A per-layer policy decides which nodes add
Laplace noise to what they emit; compromised edges additionally carry
one stealthy-attack draw per delivery inside a configured window.  A
rolling-mean deviation detector watches every edge.

True values and noise are carried separately through the tree and
combined exactly once per edge, so every delivered value satisfies
delivered == true + noise_total bit-exactly, where noise_total is the
sum of all privacy draws and injections upstream of that edge.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from itertools import product
from typing import Iterator, Mapping

import numpy as np

from .adversary import AttackProfile, sample_attack_noise
from .laplace import PrivacyParams, sample_laplace
from .seeds import derive_rng, derive_seed
from .series import MeasurementSeries, resample

QUERY_KINDS = ("hourly_mean", "sum")
_AGGREGATION = {"hourly_mean": "mean", "sum": "sum"}


class Layer(IntEnum):
    PMU = 0
    PDC = 1
    MASTER = 2


@dataclass(frozen=True)
class Node:
    id: str
    layer: Layer


@dataclass(frozen=True)
class Edge:
    """Directed link child -> parent, optionally compromised.

    attack_window is a half-open [start, end) in timestep indices; it
    is intersected with the simulated range at run time.  A window of
    None with an attacker set means the whole run is attacked.
    """

    child: str
    parent: str
    attacker: AttackProfile | None = None
    attack_window: tuple | None = None

    def __post_init__(self) -> None:
        if self.attack_window is not None:
            start, end = self.attack_window
            if start < 0 or end < start:
                raise ValueError(f"bad attack window {self.attack_window}")
            object.__setattr__(self, "attack_window", (int(start), int(end)))

    @property
    def key(self) -> tuple:
        return (self.child, self.parent)


@dataclass(frozen=True)
class Detector:
    """Flags |delivered - rolling mean| > tau.

    The rolling mean covers the previous ``window`` deliveries on the
    same edge; the first ``window`` timesteps are never flagged.
    """

    tau: float
    window: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and self.tau > 0.0):
            raise ValueError(f"tau must be finite and positive, got {self.tau}")
        if self.window < 1:
            raise ValueError(f"window must be at least 1, got {self.window}")


@dataclass(frozen=True)
class GridTopology:
    """Validated measurement tree plus the per-layer privacy policy."""

    nodes: tuple
    edges: tuple
    dp_policy: Mapping[Layer, PrivacyParams] = field(default_factory=dict)

    def __post_init__(self) -> None:
        nodes = tuple(self.nodes)
        edges = tuple(self.edges)
        policy = dict(self.dp_policy)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "dp_policy", policy)

        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        by_id = {n.id: n for n in nodes}
        masters = [n for n in nodes if n.layer == Layer.MASTER]
        if len(masters) != 1:
            raise ValueError(f"topology needs exactly one MASTER node, got {len(masters)}")

        outgoing: dict[str, int] = {n.id: 0 for n in nodes}
        incoming: dict[str, int] = {n.id: 0 for n in nodes}
        for e in edges:
            if e.child not in by_id or e.parent not in by_id:
                raise ValueError(f"edge {e.child} -> {e.parent} references unknown node")
            if by_id[e.child].layer >= by_id[e.parent].layer:
                raise ValueError(
                    f"edge {e.child} -> {e.parent} must go to a strictly higher layer"
                )
            outgoing[e.child] += 1
            incoming[e.parent] += 1
        for n in nodes:
            if n.layer == Layer.MASTER:
                if outgoing[n.id] != 0:
                    raise ValueError("MASTER node cannot have outgoing edges")
            elif outgoing[n.id] != 1:
                raise ValueError(f"node {n.id} needs exactly one parent edge, has {outgoing[n.id]}")
            if n.layer != Layer.PMU and incoming[n.id] == 0:
                raise ValueError(f"aggregating node {n.id} has no children")
        for layer in policy:
            if not isinstance(layer, Layer):
                raise ValueError(f"dp_policy keys must be Layer members, got {layer!r}")

    def pmu_ids(self) -> list:
        return sorted(n.id for n in self.nodes if n.layer == Layer.PMU)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def without_attackers(self) -> "GridTopology":
        stripped = tuple(replace(e, attacker=None, attack_window=None) for e in self.edges)
        return GridTopology(nodes=self.nodes, edges=stripped, dp_policy=self.dp_policy)

    def attacked_edges(self) -> list:
        return [e for e in self.edges if e.attacker is not None]

    def plaintext_attack_edges(self) -> list:
        """Compromised edges whose carried value has no privacy noise at all.

        An attack there manipulates plaintext telemetry; it is legal to
        simulate but worth surfacing, since no stealth constraint is
        meaningful without noise to hide in.
        """
        noisy_layers = set(self.dp_policy)
        out: list = []
        for e in self.attacked_edges():
            below = self._layers_at_or_below(e.child)
            if not (below & noisy_layers):
                out.append(e.key)
        return out

    def _layers_at_or_below(self, node_id: str) -> set:
        children = {e.parent: [] for e in self.edges}
        for e in self.edges:
            children.setdefault(e.parent, []).append(e.child)
        seen = set()
        stack = [node_id]
        while stack:
            current = stack.pop()
            seen.add(self.node(current).layer)
            stack.extend(children.get(current, []))
        return seen


@dataclass(frozen=True)
class HopRecord:
    timestep: int
    timestamp: np.datetime64
    child: str
    parent: str
    true_value: float
    dp_noise: float
    injected: float
    noise_total: float
    delivered: float
    flag: bool


@dataclass
class SimTrace:
    """Per-edge time series produced by one simulation run."""

    timestamps: np.ndarray
    kind: str
    seed: int
    edge_keys: tuple
    true_values: dict
    dp_noise: dict
    injected: dict
    noise_total: dict
    delivered: dict
    flags: dict
    plaintext_attack_edges: tuple

    @property
    def n_timesteps(self) -> int:
        return len(self.timestamps)

    def iter_records(self) -> Iterator[HopRecord]:
        for t in range(self.n_timesteps):
            for key in self.edge_keys:
                yield HopRecord(
                    timestep=t,
                    timestamp=self.timestamps[t],
                    child=key[0],
                    parent=key[1],
                    true_value=float(self.true_values[key][t]),
                    dp_noise=float(self.dp_noise[key][t]),
                    injected=float(self.injected[key][t]),
                    noise_total=float(self.noise_total[key][t]),
                    delivered=float(self.delivered[key][t]),
                    flag=bool(self.flags[key][t]),
                )

    def to_csv(self, path, metadata: dict | None = None) -> None:
        stamps = np.datetime_as_string(self.timestamps, unit="s")
        with open(path, "w", newline="") as fh:
            for k, v in (metadata or {}).items():
                fh.write(f"# {k}={v}\n")
            writer = csv.writer(fh)
            writer.writerow(
                ["timestep", "timestamp", "child", "parent", "true_value",
                 "dp_noise", "injected", "noise_total", "delivered", "flag"]
            )
            for rec in self.iter_records():
                writer.writerow(
                    [rec.timestep, stamps[rec.timestep], rec.child, rec.parent,
                     repr(rec.true_value), repr(rec.dp_noise), repr(rec.injected),
                     repr(rec.noise_total), repr(rec.delivered), int(rec.flag)]
                )

    def summary(self) -> dict:
        edges = {}
        for key in self.edge_keys:
            flags = self.flags[key]
            edges["->".join(key)] = {
                "flags": int(flags.sum()),
                "mean_true": float(self.true_values[key].mean()),
                "mean_delivered": float(self.delivered[key].mean()),
                "mean_noise_total": float(self.noise_total[key].mean()),
                "attacked": bool(np.any(self.injected[key] != 0.0)),
            }
        return {
            "kind": self.kind,
            "seed": self.seed,
            "n_timesteps": self.n_timesteps,
            "edges": edges,
            "plaintext_attack_edges": ["->".join(k) for k in self.plaintext_attack_edges],
        }

    def to_json(self, path, metadata: dict | None = None) -> None:
        payload = self.summary()
        if metadata:
            payload["metadata"] = dict(metadata)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def _rolling_flags(delivered: np.ndarray, detector: Detector) -> np.ndarray:
    w = detector.window
    flags = np.zeros(len(delivered), dtype=bool)
    if len(delivered) <= w:
        return flags
    csum = np.concatenate(([0.0], np.cumsum(delivered)))
    rolling = (csum[w:-1] - csum[:-w - 1]) / w
    flags[w:] = np.abs(delivered[w:] - rolling) > detector.tau
    return flags


def _prepare_inputs(
    topology: GridTopology, series_map: Mapping, kind: str
) -> tuple[np.ndarray, dict]:
    if kind not in QUERY_KINDS:
        raise ValueError(f"unknown query kind {kind!r}; expected one of {QUERY_KINDS}")
    pmus = topology.pmu_ids()
    missing = [p for p in pmus if p not in series_map]
    if missing:
        raise ValueError(f"missing measurement series for PMU(s): {', '.join(missing)}")
    how = _AGGREGATION[kind]
    hourly = {p: resample(series_map[p], "hour", how=how) for p in pmus}
    reference = hourly[pmus[0]].timestamps
    for p in pmus:
        if not np.array_equal(hourly[p].timestamps, reference):
            raise ValueError("PMU series are not aligned on a common hourly grid")
        gaps = int((~hourly[p].mask).sum())
        if gaps:
            raise ValueError(f"PMU {p} has {gaps} empty hours after resampling")
    return reference, {p: hourly[p].values for p in pmus}


def run_query(
    topology: GridTopology,
    series_map: Mapping,
    kind: str,
    detector: Detector | None,
    seed: int,
) -> SimTrace:
    """Simulate one pass of the measurement tree over the common hourly grid.

    kind selects both the per-PMU hourly aggregation and how parents
    combine their children ("hourly_mean" averages, "sum" sums).
    Randomness is fully determined by seed; each node and each
    compromised edge gets its own independent stream, so adding or
    reordering siblings never perturbs existing draws.
    """
    timestamps, pmu_values = _prepare_inputs(topology, series_map, kind)
    return _run_on_grid(topology, timestamps, pmu_values, kind, detector, seed)


def _run_on_grid(
    topology: GridTopology,
    timestamps: np.ndarray,
    pmu_values: dict,
    kind: str,
    detector: Detector | None,
    seed: int,
) -> SimTrace:
    n = len(timestamps)
    how = _AGGREGATION[kind]
    children_of: dict[str, list] = {}
    for e in topology.edges:
        children_of.setdefault(e.parent, []).append(e)

    out_true: dict[str, np.ndarray] = {}
    out_noise: dict[str, np.ndarray] = {}
    own_draw: dict[str, np.ndarray] = {}

    edge_true: dict[tuple, np.ndarray] = {}
    edge_injected: dict[tuple, np.ndarray] = {}
    edge_noise_total: dict[tuple, np.ndarray] = {}
    edge_delivered: dict[tuple, np.ndarray] = {}
    edge_dp: dict[tuple, np.ndarray] = {}

    def own_noise(node: Node) -> np.ndarray:
        params = topology.dp_policy.get(node.layer)
        if params is None:
            return np.zeros(n)
        gen = derive_rng(seed, "node", node.id)
        return sample_laplace(params, gen, size=n)

    def injected_noise(edge: Edge) -> np.ndarray:
        if edge.attacker is None:
            return np.zeros(n)
        start, end = edge.attack_window if edge.attack_window is not None else (0, n)
        start, end = max(0, start), min(n, end)
        out = np.zeros(n)
        if end > start:
            gen = derive_rng(seed, "edge", edge.child, edge.parent)
            out[start:end] = sample_attack_noise(edge.attacker, gen, size=end - start)
        return out

    ordered = sorted(topology.nodes, key=lambda nd: (nd.layer, nd.id))
    for node in ordered:
        if node.layer == Layer.PMU:
            true = pmu_values[node.id]
            noise = np.zeros(n)
        else:
            inputs = sorted(children_of[node.id], key=lambda e: e.child)
            true_parts = []
            noise_parts = []
            for e in inputs:
                inj = injected_noise(e)
                carried = out_noise[e.child] + inj
                true_parts.append(out_true[e.child])
                noise_parts.append(carried)
                edge_true[e.key] = out_true[e.child]
                edge_injected[e.key] = inj
                edge_noise_total[e.key] = carried
                edge_delivered[e.key] = out_true[e.child] + carried
                edge_dp[e.key] = own_draw[e.child]
            true = np.sum(true_parts, axis=0)
            noise = np.sum(noise_parts, axis=0)
            if how == "mean":
                true = true / len(inputs)
                noise = noise / len(inputs)
        draw = own_noise(node)
        own_draw[node.id] = draw
        out_true[node.id] = true
        out_noise[node.id] = noise + draw

    edge_keys = tuple(sorted(edge_true))
    flags = {
        key: (
            _rolling_flags(edge_delivered[key], detector)
            if detector is not None
            else np.zeros(n, dtype=bool)
        )
        for key in edge_keys
    }
    return SimTrace(
        timestamps=timestamps,
        kind=kind,
        seed=seed,
        edge_keys=edge_keys,
        true_values=dict(edge_true),
        dp_noise=dict(edge_dp),
        injected=dict(edge_injected),
        noise_total=dict(edge_noise_total),
        delivered=dict(edge_delivered),
        flags=flags,
        plaintext_attack_edges=tuple(topology.plaintext_attack_edges()),
    )


@dataclass(frozen=True)
class DetectionRates:
    """Paired flag rates; true_positive_rate is None without an attacker."""

    true_positive_rate: float | None
    false_positive_rate: float
    n_runs: int


def detection_rate(
    topology: GridTopology,
    series_map: Mapping,
    kind: str,
    detector: Detector,
    n_runs: int,
    seed: int,
) -> DetectionRates:
    """Monte-Carlo flag rates over paired attacked/clean runs.

    The false positive rate counts flags on clean runs; the true
    positive rate counts flags on compromised edges inside their attack
    windows.  Timesteps still inside the detector warm-up are not flag
    opportunities and are excluded from both denominators.
    """
    if n_runs < 1000:
        raise ValueError(f"n_runs must be at least 1000, got {n_runs}")
    timestamps, pmu_values = _prepare_inputs(topology, series_map, kind)
    n = len(timestamps)
    w = detector.window
    if n <= w:
        raise ValueError(f"series too short for detector warm-up: {n} steps, window {w}")

    clean_topology = topology.without_attackers()
    attacked = topology.attacked_edges()

    tp = fp = 0
    tp_opportunities = fp_opportunities = 0
    for i in range(n_runs):
        run_seed = derive_seed(seed, "run", i)
        clean = _run_on_grid(topology=clean_topology, timestamps=timestamps,
                             pmu_values=pmu_values, kind=kind, detector=detector, seed=run_seed)
        for key in clean.edge_keys:
            fp += int(clean.flags[key][w:].sum())
            fp_opportunities += n - w
        if attacked:
            hit = _run_on_grid(topology=topology, timestamps=timestamps,
                               pmu_values=pmu_values, kind=kind, detector=detector, seed=run_seed)
            for e in attacked:
                start, end = e.attack_window if e.attack_window is not None else (0, n)
                start, end = max(w, start), min(n, end)
                if end > start:
                    tp += int(hit.flags[e.key][start:end].sum())
                    tp_opportunities += end - start

    fpr = fp / fp_opportunities
    tpr = tp / tp_opportunities if tp_opportunities else None
    return DetectionRates(true_positive_rate=tpr, false_positive_rate=fpr, n_runs=n_runs)


@dataclass(frozen=True)
class SweepPoint:
    epsilon: float
    gamma: float
    sensitivity: float
    theta: float
    k1: float
    mu_star: float
    deviation: float


def impact_sweep(epsilons, gammas, sensitivities, theta: float = 0.0) -> list:
    """Best stealthy mean shift over a parameter grid.

    Returns one SweepPoint per (epsilon, gamma, sensitivity) cell, in
    product order.  The deviation factorizes as scale times a function
    of gamma alone, so repeated gammas cost one root-solve total.
    """
    eps_list = [float(e) for e in epsilons]
    gamma_list = [float(g) for g in gammas]
    sens_list = [float(s) for s in sensitivities]
    if not eps_list or not gamma_list or not sens_list:
        raise ValueError("sweep axes must be non-empty")
    points = []
    for eps, gamma, sens in product(eps_list, gamma_list, sens_list):
        profile = AttackProfile.solve(gamma, PrivacyParams(sens, eps, theta))
        points.append(
            SweepPoint(
                epsilon=eps,
                gamma=gamma,
                sensitivity=sens,
                theta=theta,
                k1=profile.k1,
                mu_star=profile.mu_star,
                deviation=profile.mean_shift,
            )
        )
    return points


def sweep_to_csv(points, path, metadata: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (metadata or {}).items():
            fh.write(f"# {k}={v}\n")
        writer = csv.writer(fh)
        writer.writerow(["epsilon", "gamma", "sensitivity", "theta", "k1", "mu_star", "deviation"])
        for p in points:
            writer.writerow(
                [repr(p.epsilon), repr(p.gamma), repr(p.sensitivity), repr(p.theta),
                 repr(p.k1), repr(p.mu_star), repr(p.deviation)]
            )


def _params_to_dict(params: PrivacyParams) -> dict:
    return {"sensitivity": params.sensitivity, "epsilon": params.epsilon, "theta": params.theta}


def _params_from_dict(data: dict) -> PrivacyParams:
    return PrivacyParams(
        sensitivity=float(data["sensitivity"]),
        epsilon=float(data["epsilon"]),
        theta=float(data.get("theta", 0.0)),
    )


def topology_to_dict(topology: GridTopology) -> dict:
    edges = []
    for e in topology.edges:
        entry: dict = {"child": e.child, "parent": e.parent}
        if e.attacker is not None:
            entry["attacker"] = {
                "gamma": e.attacker.gamma,
                **_params_to_dict(e.attacker.base),
            }
            entry["attack_window"] = list(e.attack_window) if e.attack_window else None
        edges.append(entry)
    return {
        "nodes": [{"id": n.id, "layer": n.layer.name} for n in topology.nodes],
        "edges": edges,
        "dp_policy": {
            layer.name: _params_to_dict(params) for layer, params in topology.dp_policy.items()
        },
    }


def topology_from_dict(data: dict) -> GridTopology:
    def parse_layer(name: str) -> Layer:
        try:
            return Layer[name]
        except KeyError:
            raise ValueError(
                f"unknown layer {name!r}; expected one of {[l.name for l in Layer]}"
            ) from None

    nodes = tuple(Node(id=str(n["id"]), layer=parse_layer(n["layer"])) for n in data["nodes"])
    edges = []
    for e in data["edges"]:
        attacker = None
        window = None
        if e.get("attacker") is not None:
            spec = e["attacker"]
            attacker = AttackProfile.solve(float(spec["gamma"]), _params_from_dict(spec))
            if e.get("attack_window") is not None:
                window = tuple(e["attack_window"])
        edges.append(Edge(child=str(e["child"]), parent=str(e["parent"]),
                          attacker=attacker, attack_window=window))
    policy = {
        parse_layer(name): _params_from_dict(params)
        for name, params in data.get("dp_policy", {}).items()
    }
    return GridTopology(nodes=nodes, edges=tuple(edges), dp_policy=policy)


def load_topology(path) -> GridTopology:
    with open(path) as fh:
        return topology_from_dict(json.load(fh))


def save_topology(topology: GridTopology, path) -> None:
    with open(path, "w") as fh:
        json.dump(topology_to_dict(topology), fh, indent=2)
        fh.write("\n")
