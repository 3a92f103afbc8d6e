"""Clique post-processing: greedy shrinking, local search, exact oracles and
the GBS-vs-uniform pipeline statistics.

The shrink rule removes, until the induced subgraph is complete, the node
minimizing (induced degree, weight, index).  The search rule adds, per
iteration, the common neighbor maximizing (weight, index); when no node can
be added it attempts the best strictly-improving (remove one, add two) swap.
Once neither move exists the remaining iterations are spent on seeded random
one-out/one-in exchanges that diversify the walk; the heaviest clique seen
is returned, so the output weight never drops below the input's.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .encoding import WeightedGraph
from .errors import GuardError, ValidationError
from .seeding import STREAM_BASELINE, STREAM_LOCAL_SEARCH, spawn_rng
from .simulator import PhotonPattern

BRON_KERBOSCH_GUARD = 40


@dataclass(frozen=True)
class Clique:
    """A complete induced subgraph, stored as a sorted node tuple."""

    nodes: tuple[int, ...]
    weight: float

    @classmethod
    def of(cls, g: WeightedGraph, nodes) -> "Clique":
        nodes = tuple(sorted(int(n) for n in nodes))
        if len(set(nodes)) != len(nodes):
            raise ValidationError("clique nodes must be distinct")
        for n in nodes:
            if not (0 <= n < g.node_count):
                raise ValidationError(f"node {n} out of range")
        if not is_clique(g, nodes):
            raise ValidationError(f"nodes {nodes} do not induce a complete subgraph")
        return cls(nodes, float(sum(g.weights[n] for n in nodes)))


@dataclass(frozen=True)
class CliqueReport:
    """Frequencies of post-processed cliques under GBS and uniform seeding."""

    entries: tuple[dict, ...]
    gbs_samples: int
    uniform_samples: int
    iterations: int

    def frequency(self, nodes, which: str = "gbs") -> float:
        key = tuple(sorted(nodes))
        for e in self.entries:
            if e["nodes"] == key:
                return e["freq_gbs"] if which == "gbs" else e["freq_uniform"]
        return 0.0

    def best_clique(self) -> tuple[int, ...]:
        """Heaviest clique found, ties broken by GBS frequency then node order."""
        best = max(self.entries, key=lambda e: (e["weight"], e["freq_gbs"],
                                                tuple(-n for n in e["nodes"])))
        return best["nodes"]


def is_clique(g: WeightedGraph, nodes) -> bool:
    nodes = list(nodes)
    return all(g.has_edge(a, b) for a, b in combinations(nodes, 2))


def pattern_to_subgraph(n: PhotonPattern) -> frozenset[int]:
    """Collision-free pattern -> the set of single-occupied modes."""
    if not n.collision_free:
        raise ValidationError("pattern has collisions; clique mapping needs collision-free events")
    return frozenset(m for m, c in enumerate(n.counts) if c == 1)


def greedy_shrink(g: WeightedGraph, nodes) -> Clique:
    """Remove (min induced degree, min weight, min index) nodes until complete."""
    current = sorted(set(int(n) for n in nodes))
    for n in current:
        if not (0 <= n < g.node_count):
            raise ValidationError(f"node {n} out of range")
    while not is_clique(g, current):
        members = set(current)
        degree = {n: len(g.neighbors(n) & members) for n in current}
        victim = min(current, key=lambda n: (degree[n], g.weights[n], n))
        current.remove(victim)
    return Clique.of(g, current)


def _common_neighbors(g: WeightedGraph, members: set[int]):
    if not members:
        return set(range(g.node_count)) - members
    out = None
    for n in members:
        out = g.neighbors(n) if out is None else out & g.neighbors(n)
    return set(out) - members


def local_search(g: WeightedGraph, c: Clique, iterations: int, seed: int = 0) -> Clique:
    """Grow a clique by greedy adds, improving swaps, then seeded restarts.

    The primary trajectory is deterministic: add the common neighbor
    maximizing (weight, index), and at maximality take the best
    strictly-improving one-out/two-in swap.  Once neither move exists,
    remaining iterations diversify: a random subset of members is dropped
    and the clique regrows with random adds until it is maximal again.
    Deterministic per seed; returns the heaviest clique visited, so the
    result never weighs less than the input.
    """
    if not is_clique(g, c.nodes):
        raise ValidationError("local_search input must be a clique")
    rng = spawn_rng(seed, STREAM_LOCAL_SEARCH)
    members = set(c.nodes)
    best = Clique.of(g, members)
    diversifying = False
    for _ in range(int(iterations)):
        addable = _common_neighbors(g, members)
        if addable:
            if diversifying:
                members.add(int(rng.choice(sorted(addable))))
            else:
                members.add(max(addable, key=lambda n: (g.weights[n], n)))
        else:
            diversifying = False
            swap = _best_swap(g, members)
            if swap is not None:
                out_node, add_pair = swap
                members.remove(out_node)
                members.update(add_pair)
            elif members:
                drop = rng.choice(sorted(members),
                                  size=int(rng.integers(1, len(members) + 1)),
                                  replace=False)
                members.difference_update(int(d) for d in drop)
                diversifying = True
            else:
                break
        if sum(g.weights[n] for n in members) > best.weight + 1e-15:
            best = Clique.of(g, members)
    return best


def _best_swap(g: WeightedGraph, members: set[int]):
    """Best (remove v, add a and b) strictly increasing total weight, or None."""
    best = None
    best_gain = 0.0
    for v in sorted(members):
        rest = members - {v}
        cand = sorted(_common_neighbors(g, rest) - {v})
        for a, b in combinations(cand, 2):
            if not g.has_edge(a, b):
                continue
            gain = g.weights[a] + g.weights[b] - g.weights[v]
            if gain > best_gain + 1e-15:
                best_gain = gain
                best = (v, (a, b))
    return best


def bron_kerbosch(g: WeightedGraph) -> list[Clique]:
    """All maximal cliques, with pivoting; the ground-truth oracle."""
    if g.node_count > BRON_KERBOSCH_GUARD:
        raise GuardError(f"Bron-Kerbosch guard: {g.node_count} nodes exceeds {BRON_KERBOSCH_GUARD}")
    found: list[tuple[int, ...]] = []

    def expand(clique: list[int], candidates: set[int], excluded: set[int]):
        if not candidates and not excluded:
            found.append(tuple(sorted(clique)))
            return
        pivot = max(candidates | excluded,
                    key=lambda u: len(candidates & g.neighbors(u)))
        for v in sorted(candidates - g.neighbors(pivot)):
            nv = g.neighbors(v)
            expand(clique + [v], candidates & nv, excluded & nv)
            candidates.remove(v)
            excluded.add(v)

    expand([], set(range(g.node_count)), set())
    return [Clique.of(g, nodes) for nodes in sorted(found)]


def max_weight_clique(g: WeightedGraph) -> Clique:
    """Exact maximum weighted clique via Bron-Kerbosch enumeration."""
    cliques = bron_kerbosch(g)
    if not cliques:
        return Clique((), 0.0)
    return max(cliques, key=lambda c: (c.weight, tuple(-n for n in c.nodes)))


def run_pipeline(g: WeightedGraph, samples, min_photons: int, iterations: int,
                 seed: int) -> CliqueReport:
    """Shrink+search every qualifying sample and a size-matched uniform baseline.

    Samples must be collision-free; those with fewer than ``min_photons``
    photons are dropped.  The baseline draws, for each qualifying sample, a
    uniform node subset of identical size and post-processes it identically.
    """
    subsets = []
    for pat in samples:
        if len(pat.counts) != g.node_count:
            raise ValidationError("sample mode count must equal graph node count")
        nodes = pattern_to_subgraph(pat)
        if pat.total >= min_photons:
            subsets.append(nodes)
    if not subsets:
        raise ValidationError(f"no samples with at least {min_photons} photons; empty report")

    rng = spawn_rng(seed, STREAM_BASELINE)
    search_seeds = spawn_rng(seed, STREAM_LOCAL_SEARCH).integers(0, 2 ** 63,
                                                                 size=2 * len(subsets))
    tallies = {"gbs": {}, "uniform": {}}
    for k, nodes in enumerate(subsets):
        processed = local_search(g, greedy_shrink(g, nodes), iterations,
                                 seed=int(search_seeds[2 * k]))
        tallies["gbs"][processed.nodes] = tallies["gbs"].get(processed.nodes, 0) + 1
        uniform_nodes = rng.choice(g.node_count, size=len(nodes), replace=False)
        processed_u = local_search(g, greedy_shrink(g, uniform_nodes), iterations,
                                   seed=int(search_seeds[2 * k + 1]))
        tallies["uniform"][processed_u.nodes] = tallies["uniform"].get(processed_u.nodes, 0) + 1

    total = len(subsets)
    all_nodes = sorted(set(tallies["gbs"]) | set(tallies["uniform"]))
    entries = tuple(
        {"nodes": nodes,
         "weight": float(sum(g.weights[n] for n in nodes)),
         "freq_gbs": tallies["gbs"].get(nodes, 0) / total,
         "freq_uniform": tallies["uniform"].get(nodes, 0) / total}
        for nodes in all_nodes)
    return CliqueReport(entries, gbs_samples=total, uniform_samples=total,
                        iterations=int(iterations))
