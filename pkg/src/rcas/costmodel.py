"""Analytic search-cost model and robustness metrics.

The model idealizes the index as a complete tree with fanout o and height h
where level i partitions in dimension phi_i; a query follows the fraction
sigma_P of branches at path levels and sigma_V at value levels.  The
estimated cost, in visited nodes, is

    C = 1 + sum_{l=1..h} prod_{i=1..l} (o * sigma_{phi_i})

The complementary query swaps the two per-level selectivities; a scheme is
robust when it keeps the average cost over such a pair low.  An exhaustive
check over all dimension vectors confirms that the perfectly alternating
vector minimizes the complementary-pair cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .keys import Dimension


@dataclass(frozen=True)
class CostModelParams:
    fanout: float
    height: int
    dims: tuple[Dimension, ...]
    sel_path: float
    sel_value: float

    def __post_init__(self):
        if len(self.dims) != self.height:
            raise ValueError("dimension vector length must equal the height")
        for d in self.dims:
            if d not in (Dimension.P, Dimension.V):
                raise ValueError("levels partition in P or V only")


@dataclass(frozen=True)
class QuerySelectivities:
    """Whole-query selectivities as fractions of the key count.

    The conjunction cannot select more than either predicate alone, nor less
    than their overlap forces.
    """

    total: float
    path: float
    value: float

    def __post_init__(self):
        for field in (self.total, self.path, self.value):
            if not 0.0 <= field <= 1.0:
                raise ValueError("selectivities are fractions in [0, 1]")
        lo = max(0.0, self.path + self.value - 1.0)
        hi = min(self.path, self.value)
        if not lo - 1e-9 <= self.total <= hi + 1e-9:
            raise ValueError(
                f"inconsistent selectivities: total {self.total} outside [{lo}, {hi}]"
            )


def alternating_dims(height: int) -> tuple[Dimension, ...]:
    """The perfectly alternating vector (V, P, V, P, ...)."""
    return tuple(
        Dimension.V if i % 2 == 0 else Dimension.P for i in range(height)
    )


def estimate_cost(params: CostModelParams, include_root: bool = True) -> float:
    """Evaluate the cost formula; `include_root` adds the leading 1."""
    total = 1.0 if include_root else 0.0
    level = 1.0
    for d in params.dims:
        sel = params.sel_value if d is Dimension.V else params.sel_path
        level *= params.fanout * sel
        total += level
    return total


def complementary(sel_path: float, sel_value: float) -> tuple[float, float]:
    """Per-level selectivities of the complementary query (swapped pair)."""
    return sel_value, sel_path


def robustness(params: CostModelParams, include_root: bool = True) -> tuple[float, float]:
    """Average and sample standard deviation of the cost over a query and its
    complementary query."""
    c1 = estimate_cost(params, include_root)
    swapped_p, swapped_v = complementary(params.sel_path, params.sel_value)
    c2 = estimate_cost(
        CostModelParams(params.fanout, params.height, params.dims, swapped_p, swapped_v),
        include_root,
    )
    avg = (c1 + c2) / 2.0
    stddev = abs(c1 - c2) / math.sqrt(2.0)
    return avg, stddev


def pair_costs(
    fanout: float, height: int, sel_path: float, sel_value: float
) -> np.ndarray:
    """Complementary-pair cost of every dimension vector of a given height.

    Returns an array of length 2**height; index bit i set means level i+1
    partitions in P.  The root term cancels in comparisons and is omitted.
    """
    n = 1 << height
    bits = (np.arange(n)[:, None] >> np.arange(height)[None, :]) & 1
    is_p = bits.astype(bool)
    f1 = np.where(is_p, fanout * sel_path, fanout * sel_value)
    f2 = np.where(is_p, fanout * sel_value, fanout * sel_path)
    return np.cumprod(f1, axis=1).sum(axis=1) + np.cumprod(f2, axis=1).sum(axis=1)


def alternating_is_optimal(
    fanout: float, height: int, sel_path: float, sel_value: float, rel_tol: float = 1e-9
) -> bool:
    """Exhaustively check that the alternating vector minimizes the
    complementary-pair cost over all 2**height dimension vectors."""
    if height < 1:
        raise ValueError("height must be at least 1")
    if height > 24:
        raise ValueError("exhaustive check is limited to height 24")
    costs = pair_costs(fanout, height, sel_path, sel_value)
    # alternating V,P,V,... -> P at odd levels -> bits 0b...1010
    idx = sum(1 << i for i in range(1, height, 2))
    dy = costs[idx]
    return bool(dy <= costs.min() * (1.0 + rel_tol) + 1e-12)


def calibrate(
    unique_keys: int,
    avg_node_depth: float,
    sigma_path: float,
    sigma_value: float,
) -> CostModelParams:
    """Derive model parameters from index statistics and query selectivities.

    The height is the average node depth truncated to an integer, the fanout
    the h-th root of the unique key count.  Per-level selectivities are the
    N-th roots of the whole-query selectivities, where N is the number of
    levels of that dimension in the alternating vector (the value dimension
    takes the ceiling because partitioning starts with it).  For a path
    predicate whose selectivity collapses under a descendant axis or
    wildcard, pass the selectivity of the predicate truncated at the first
    such step.
    """
    if unique_keys < 2:
        raise ValueError("need at least two unique keys")
    if not 0.0 < sigma_path <= 1.0 or not 0.0 < sigma_value <= 1.0:
        raise ValueError("selectivities must lie in (0, 1]")
    height = int(avg_node_depth)
    if height < 1:
        raise ValueError("average depth below 1 cannot be calibrated")
    fanout = unique_keys ** (1.0 / height)
    n_v = (height + 1) // 2
    n_p = height // 2
    sel_value = sigma_value ** (1.0 / n_v)
    sel_path = sigma_path ** (1.0 / n_p) if n_p else 1.0
    return CostModelParams(
        fanout=fanout,
        height=height,
        dims=alternating_dims(height),
        sel_path=sel_path,
        sel_value=sel_value,
    )


def error_factor(estimated: float, true: float) -> float:
    """Ratio by which the estimate is off: max of the two over the min."""
    if estimated <= 0 or true <= 0:
        raise ValueError("costs must be positive")
    return max(estimated, true) / min(estimated, true)
