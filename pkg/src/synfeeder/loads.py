"""Spreading a substation's demand over the nodes of its feeder."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .census import WeightTable
from .errors import DegenerateAllocationError, NoLoadNodesError
from .partition import FeederTree

U64 = (1 << 64) - 1


@dataclass(frozen=True)
class Uniform:
    lo: float = -0.1
    hi: float = 0.1

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"uniform epsilon needs lo <= hi, got ({self.lo}, {self.hi})")

    def draw(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class TLocationScale:
    mu: float = 0.0
    sigma: float = 0.1
    nu: float = 3.0

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and self.nu > 0):
            raise ValueError("t location-scale epsilon needs sigma > 0 and nu > 0")

    def draw(self, rng: np.random.Generator) -> float:
        return self.mu + self.sigma * float(rng.standard_t(self.nu))


@dataclass(frozen=True)
class LoadConfig:
    epsilon_dist: Uniform | TLocationScale = field(default_factory=TLocationScale)
    zero_load_fraction: float = 0.0
    rng_seed: int = 0
    use_population: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.zero_load_fraction < 1.0:
            raise ValueError("zero_load_fraction must lie in [0, 1)")
        if not 0 <= self.rng_seed <= U64:
            raise ValueError("rng_seed must be an unsigned 64-bit integer")


@dataclass
class LoadAssignment:
    p_mw: dict[str, float]
    q_mvar: dict[str, float]
    P_N: float
    Q_N: float
    zero_nodes: frozenset[str] = frozenset()


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")


def feeder_seed(global_seed: int, substation_id: str) -> int:
    return (global_seed ^ stable_hash64(substation_id)) & U64


def select_zero_load(tree: FeederTree, cfg: LoadConfig, rng: np.random.Generator) -> frozenset[str]:
    others = sorted(n for n in tree.points if n != tree.root)
    k = math.floor(cfg.zero_load_fraction * len(others))
    picked = rng.choice(len(others), size=k, replace=False) if k else []
    return frozenset([tree.root] + [others[int(i)] for i in picked])


def raw_allocation(
    tree: FeederTree,
    weights: WeightTable | None,
    zero_set: frozenset[str],
    cfg: LoadConfig,
    rng: np.random.Generator,
    P_N: float,
    Q_N: float,
) -> tuple[dict[str, float], dict[str, float]]:
    """Unscaled per-node demand: P_N * max(0, 1/n + eps) * weight, same eps for Q."""
    load_nodes = sorted(n for n in tree.points if n not in zero_set)
    n = len(load_nodes)
    if n == 0:
        raise NoLoadNodesError("every node of the feeder is a zero-load node")
    p = dict.fromkeys(tree.points, 0.0)
    q = dict.fromkeys(tree.points, 0.0)
    for node in load_nodes:
        eps = cfg.epsilon_dist.draw(rng)
        w = weights.weights[node] if (cfg.use_population and weights is not None) else 1.0
        factor = max(0.0, 1.0 / n + eps) * w
        p[node] = P_N * factor
        q[node] = Q_N * factor
    return p, q


def rescale(raw_p: dict[str, float], raw_q: dict[str, float], P_N: float, Q_N: float) -> LoadAssignment:
    sum_p = math.fsum(raw_p.values())
    if not sum_p > 0:
        raise DegenerateAllocationError("raw allocation is zero everywhere")
    # share first: P_N * v can lose precision when v is subnormal
    p = {n: v / sum_p * P_N for n, v in raw_p.items()}
    sum_q = math.fsum(raw_q.values())
    if sum_q != 0:
        q = {n: v / sum_q * Q_N for n, v in raw_q.items()}
    else:
        # Q_N == 0 leaves no reactive shape; reuse the real-power shares
        q = {n: raw_p[n] / sum_p * Q_N for n in raw_q}
    zero = frozenset(n for n in p if p[n] == 0 and q[n] == 0)
    return LoadAssignment(p, q, P_N, Q_N, zero)


def assign_loads(
    tree: FeederTree,
    weights: WeightTable | None,
    cfg: LoadConfig,
    P_N: float,
    Q_N: float,
    seed: int | None = None,
) -> LoadAssignment:
    """Zero-load selection, raw allocation and rescaling from one seeded stream."""
    rng = make_rng(cfg.rng_seed if seed is None else seed)
    zero_set = select_zero_load(tree, cfg, rng)
    raw_p, raw_q = raw_allocation(tree, weights, zero_set, cfg, rng, P_N, Q_N)
    out = rescale(raw_p, raw_q, P_N, Q_N)
    out.zero_nodes = zero_set | out.zero_nodes
    return out
