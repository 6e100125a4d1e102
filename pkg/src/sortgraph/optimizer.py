"""Fanout planning for the layered radix vertex index.

A layer plan (FanoutConfig) splits an x-bit id space into consecutive bit
groups; layer i of the index fans out over 2^a_i child slots.  The expected
slot footprint of a plan depends on how many ids are stored: a node at depth
i materializes only if some id falls in its bit prefix, which for n ids drawn
without replacement from the 2^x universe is a hypergeometric event.

`optimize` picks the plan minimizing expected slot count by dynamic
programming over prefix sums of the fanouts.  States are (layer, bits
consumed); a transition from k consumed bits to j charges 2^j times the
probability that a node covering a 2^(x-k)-id range materializes.  A
transition that consumes no bits is free: such a layer is pruned from the
realized tree, so it must not be charged (charging it makes the DP disagree
with the true minimum realized footprint when the best plan uses fewer than
l layers).

Probabilities are evaluated in the log domain as a sum of log1p terms of the
falling-factorial ratio, vectorized with numpy.  This keeps full double
precision at any universe size; a plain log-gamma difference loses up to two
digits at x=32 because four ~1e10-magnitude terms cancel to ~1e-4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "UniverseSpec",
    "FanoutConfig",
    "default_layers",
    "node_probability",
    "expected_space",
    "optimize",
    "baseline_config",
]

SLOT_BYTES = 8  # accounted size of one child slot

# When min(n,S) * max(n,S) >= 45 * 2^x the ratio is below double-precision
# eps, so the probability rounds to exactly 1.0.
_SURE_THRESHOLD = 45

_CHUNK = 1 << 22  # numpy work buffer bound for the log1p sum


def default_layers(x: int) -> int:
    """Layer budget used when the caller does not supply one: ceil(lg x)."""
    if x < 1:
        raise ValueError("id width must be positive")
    return max(1, (x - 1).bit_length())


@dataclass(frozen=True)
class UniverseSpec:
    """Problem instance for the optimizer.

    x: id width in bits (ids live in [0, 2^x)).
    n: number of stored ids the plan should be optimized for.
    l: layer budget; plans may use fewer layers, never more.
    """

    x: int
    n: int
    l: int | None = None

    def __post_init__(self) -> None:
        if self.x < 1:
            raise ValueError("id width must be positive")
        if not 1 <= self.n <= (1 << self.x):
            raise ValueError("n must be in [1, 2^x]")
        if self.l is not None and self.l < 1:
            raise ValueError("layer budget must be positive")

    @property
    def layers(self) -> int:
        return self.l if self.l is not None else default_layers(self.x)


@dataclass(frozen=True)
class FanoutConfig:
    """Per-layer fanout bit counts; always fully spans the id width.

    All entries are >= 1: zero-fanout layers are pruned at construction
    (a one-slot layer adds nothing to the tree).
    """

    fanouts: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.fanouts:
            raise ValueError("empty fanout list")
        if any(a < 1 for a in self.fanouts):
            raise ValueError("fanouts must be >= 1 (prune zero layers first)")

    @classmethod
    def from_layers(cls, layers) -> "FanoutConfig":
        """Build a config from raw layer bits, dropping zero-fanout layers."""
        return cls(tuple(a for a in layers if a > 0))

    @property
    def x(self) -> int:
        return sum(self.fanouts)

    @property
    def depth(self) -> int:
        return len(self.fanouts)

    def prefix_sums(self) -> tuple[int, ...]:
        out = []
        s = 0
        for a in self.fanouts:
            s += a
            out.append(s)
        return tuple(out)


def node_probability(x: int, n: int, s_tail: int) -> float:
    """Probability that a node whose subtree spans s_tail bits materializes.

    The node covers S = 2^s_tail consecutive ids out of u = 2^x; with n ids
    stored (distinct, uniform without replacement) it materializes unless all
    n draws miss the range:

        p = 1 - binom(u - S, n) / binom(u, n)

    Evaluated as 1 - exp(sum_t log1p(-M/(u-t))) over min(n, S) factors, which
    is exact to ~1e-15 relative.  Returns exactly 1.0 when u - S < n (some id
    must land in range) and when the ratio is provably below double eps.
    """
    if not 0 <= s_tail <= x:
        raise ValueError("s_tail must be in [0, x]")
    if not 1 <= n <= (1 << x):
        raise ValueError("n must be in [1, 2^x]")
    u = 1 << x
    S = 1 << s_tail
    if u - S < n:
        return 1.0
    m, big = (n, S) if n <= S else (S, n)
    if m * big >= _SURE_THRESHOLD * u:
        return 1.0
    total = 0.0
    uf = float(u)
    bf = float(big)
    for start in range(0, m, _CHUNK):
        t = np.arange(start, min(m, start + _CHUNK), dtype=np.float64)
        total += float(np.sum(np.log1p(-bf / (uf - t))))
    return -math.expm1(total)


def expected_space(config: FanoutConfig, spec: UniverseSpec) -> float:
    """Expected allocated child slots for the plan, in slot units.

    The root always exists (2^a_0 slots); a depth-i node exists with the
    materialization probability of its covered range, so layer i contributes
    2^(s_i) * p(x - s_(i-1)) expected slots.
    """
    if config.x != spec.x:
        raise ValueError(
            f"config spans {config.x} bits but universe has {spec.x}")
    total = float(1 << config.fanouts[0])
    prev = config.fanouts[0]
    for a in config.fanouts[1:]:
        s = prev + a
        total += float(1 << s) * node_probability(spec.x, spec.n, spec.x - prev)
        prev = s
    return total


def _prune_bounds(x: int, n: int) -> list[float]:
    """Lower bounds on the per-transition probability term, indexed by k.

    The factorial ratio is at most ((u - 2^(x-k)) / u)^n, so
    1 - that power bounds the true term from below; a candidate whose bound
    already exceeds the incumbent cannot win.
    """
    u = float(1 << x)
    out = [1.0]  # k = 0: the range is the whole universe
    for k in range(1, x + 1):
        out.append(-math.expm1(n * math.log1p(-float(1 << (x - k)) / u)))
    return out


def optimize(spec: UniverseSpec, *, prune: bool = True) -> FanoutConfig:
    """Minimum-expected-space plan for the universe, by dynamic programming.

    g(i, j) = expected slots of the best plan using at most i+1 layers and
    consuming j bits.  Base row g(0, j) = 2^j.  Transitions either extend by
    a new layer (k -> j, charging 2^j times the materialization probability
    for nodes below a k-bit prefix) or skip the layer for free (k == j; the
    realized tree prunes it).  Ties prefer the smaller k.  The optional
    pruning skip rejects candidates whose cheap lower bound already exceeds
    the incumbent; it never changes the result.
    """
    x, n, l = spec.x, spec.n, spec.layers
    pk = [node_probability(x, n, x - k) for k in range(x + 1)]
    lb = _prune_bounds(x, n) if prune else None
    g = [float(1 << j) for j in range(x + 1)]
    parents: list[list[int]] = []
    for _ in range(1, l):
        row = list(range(x + 1))  # k == j default: free skip
        ng = list(g)
        for j in range(x + 1):
            best = ng[j]
            arg = j
            w = float(1 << j)
            for k in range(j):
                if lb is not None and g[k] + w * lb[k] > best:
                    continue
                cand = g[k] + w * pk[k]
                if cand < best:
                    best = cand
                    arg = k
            ng[j] = best
            row[j] = arg
        parents.append(row)
        g = ng
    s = [x]
    for row in reversed(parents):
        s.append(row[s[-1]])
    s.reverse()
    fan = [s[0]] + [s[i] - s[i - 1] for i in range(1, len(s))]
    return FanoutConfig.from_layers(fan)


def baseline_config(kind: str, x: int, l: int | None = None) -> FanoutConfig:
    """Reference plans used for index comparisons.

    uniform: every layer gets ceil(x/l) bits, the last takes the remainder.
    veb: repeatedly assign ceil(remaining/2) bits until one bit remains,
    which becomes the final layer (the van Emde Boas half-split).
    """
    if kind == "uniform":
        budget = l if l is not None else default_layers(x)
        if budget < 1:
            raise ValueError("layer budget must be positive")
        a = -(-x // budget)
        layers = []
        rem = x
        while rem > 0:
            take = min(a, rem)
            layers.append(take)
            rem -= take
        return FanoutConfig.from_layers(layers)
    if kind == "veb":
        layers = []
        rem = x
        while rem > 1:
            h = (rem + 1) // 2
            layers.append(h)
            rem -= h
        if rem:
            layers.append(rem)
        return FanoutConfig.from_layers(layers)
    raise ValueError(f"unknown baseline kind: {kind!r}")
