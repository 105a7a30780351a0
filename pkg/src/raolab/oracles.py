"""Offline optima: fractional knapsack over hints (KPH), its 0/1 variant, and RAO optima.

KPH packs articles with value ``t*h`` and weight ``t``; the density of an
article is its hint, so the greedy order is hint-descending with the
instance's tie priority breaking equal hints.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from gmpy2 import mpq

from .model import Instance, Number, ReadingTranscript, as_rational

DEFAULT_DP_LIMIT = 50_000_000
DEFAULT_SUBSET_LIMIT = 20


class OracleLimitError(RuntimeError):
    """The requested oracle cannot handle an instance of this size or shape."""


class KphItem(NamedTuple):
    key: int
    hint: Number
    length: Number
    priority: int = 0


@dataclass(frozen=True)
class KphSolution:
    y: dict
    rho: Number
    fractional_item: int | None
    integral_set: frozenset
    value: Number
    weight: Number
    _items: tuple = ()

    def value_of(self, subset: Iterable[int]) -> Number:
        """Value the given articles contribute to this packing."""
        lookup = {it.key: it for it in self._items}
        return as_rational(sum(lookup[k].length * lookup[k].hint * self.y[k] for k in subset))

    def weight_of(self, subset: Iterable[int]) -> Number:
        lookup = {it.key: it for it in self._items}
        return as_rational(sum(lookup[k].length * self.y[k] for k in subset))

    def to_dict(self) -> dict:
        enc = lambda x: x if isinstance(x, int) else str(x)
        return {
            "value": enc(self.value),
            "y": {str(k): enc(v) for k, v in sorted(self.y.items())},
            "rho": enc(self.rho),
        }


def kph_items(inst: Instance, subset: Iterable[int] | None = None, lengths=None) -> list[KphItem]:
    idx = range(inst.n) if subset is None else subset
    return [
        KphItem(i, inst.articles[i].hint,
                inst.articles[i].length if lengths is None else lengths[i],
                inst.tie_priority[i])
        for i in idx
    ]


def solve_kph(items: Sequence[KphItem], budget) -> KphSolution:
    """Greedy fractional knapsack in hint order; exact rational output.

    ``rho`` is the hint of the fractional article if there is one, otherwise
    the smallest fully packed hint. With nothing packed it is the largest
    hint (or 0 for an empty item list).
    """
    budget = as_rational(budget)
    if budget < 0:
        raise ValueError("budget must be non-negative")
    items = list(items)
    order = sorted(items, key=lambda it: (-it.hint, it.priority, it.key))
    y: dict = {it.key: 0 for it in items}
    left = budget
    packed, frac = [], None
    for it in order:
        if left <= 0:
            break
        if it.length <= left:
            y[it.key] = 1
            left -= it.length
            packed.append(it)
        else:
            y[it.key] = as_rational(mpq(left) / it.length)
            frac = it
            left = 0
    if frac is not None:
        rho = frac.hint
    elif packed:
        rho = packed[-1].hint
    elif order:
        rho = order[0].hint
    else:
        rho = 0
    value = as_rational(sum(it.length * it.hint * y[it.key] for it in items))
    weight = as_rational(budget - left) if items else 0
    return KphSolution(
        y=y,
        rho=rho,
        fractional_item=frac.key if frac is not None else None,
        integral_set=frozenset(it.key for it in packed),
        value=value,
        weight=weight,
        _items=tuple(items),
    )


def instance_kph(inst: Instance, budget=None, subset=None) -> KphSolution:
    return solve_kph(kph_items(inst, subset), inst.budget if budget is None else budget)


@dataclass(frozen=True)
class IntegralKph:
    value: Number
    chosen: frozenset


def solve_kph_integral(items: Sequence[KphItem], budget, limit: int = DEFAULT_DP_LIMIT) -> IntegralKph:
    """Exact 0/1 knapsack on values ``t*h`` and weights ``t``."""
    items = list(items)
    budget = as_rational(budget)
    if all(isinstance(it.length, int) for it in items):
        cap = int(budget)  # floor is exact for integral weights
        if len(items) * (cap + 1) > limit:
            raise OracleLimitError(f"integral KPH table {len(items)}x{cap + 1} exceeds limit")
        best = [0] * (cap + 1)
        take = [[False] * (cap + 1) for _ in items]
        for k, it in enumerate(items):
            w, v = it.length, it.length * it.hint
            for b in range(cap, w - 1, -1):
                if best[b - w] + v > best[b]:
                    best[b] = best[b - w] + v
                    take[k][b] = True
        chosen, b = set(), cap
        for k in range(len(items) - 1, -1, -1):
            if take[k][b]:
                chosen.add(items[k].key)
                b -= items[k].length
        return IntegralKph(as_rational(best[cap]), frozenset(chosen))
    if len(items) > DEFAULT_SUBSET_LIMIT:
        raise OracleLimitError("fractional lengths need subset enumeration; too many items")
    best_v, best_s = 0, frozenset()
    for r in range(1, len(items) + 1):
        for combo in combinations(items, r):
            if sum(it.length for it in combo) <= budget:
                v = sum(it.length * it.hint for it in combo)
                if v > best_v:
                    best_v, best_s = v, frozenset(it.key for it in combo)
    return IntegralKph(as_rational(best_v), best_s)


@dataclass(frozen=True)
class OfflineOptimum:
    value: Number
    witness: ReadingTranscript


def opt_rao_dp(inst: Instance, limit: int = DEFAULT_DP_LIMIT) -> OfflineOptimum:
    """Exact offline optimum over integer prefix lengths (knapsack DP over the budget)."""
    if not isinstance(inst.budget, int):
        raise OracleLimitError("DP oracle needs an integral budget")
    if any(not isinstance(a.length, int) for a in inst.articles):
        raise OracleLimitError("DP oracle needs integral article lengths")
    cap = inst.budget
    cost = sum((cap + 1) * (min(a.length, cap) + 1) for a in inst.articles)
    if cost > limit:
        raise OracleLimitError(f"DP work {cost} exceeds oracle limit {limit}")

    neg = np.iinfo(np.int64).min // 4
    best = np.zeros(cap + 1, dtype=np.int64)  # best[b]: max info using at most b steps
    choices = []
    for a in inst.articles:
        m = min(a.length, cap)
        gains = np.concatenate([[0], np.cumsum(a.profile.rates()[:m])]).astype(np.int64)
        new = best.copy()
        arg = np.zeros(cap + 1, dtype=np.int64)
        for tau in range(1, m + 1):
            cand = np.full(cap + 1, neg, dtype=np.int64)
            cand[tau:] = best[: cap + 1 - tau] + gains[tau]
            better = cand > new
            new[better] = cand[better]
            arg[better] = tau
        choices.append(arg)
        best = new
    reads = [0] * inst.n
    b = cap
    for i in range(inst.n - 1, -1, -1):
        tau = int(choices[i][b])
        reads[i] = tau
        b -= tau
    witness = ReadingTranscript.from_reads(inst, reads)
    if witness.total_info != int(best[cap]):
        raise AssertionError("DP reconstruction disagrees with table value")
    return OfflineOptimum(witness.total_info, witness)


def opt_rao_waterfill(inst: Instance) -> OfflineOptimum:
    """Offline optimum for non-increasing profiles: take the highest rates first."""
    bad = [i for i, a in enumerate(inst.articles) if not a.non_increasing]
    if bad:
        raise ValueError(f"water-filling needs non-increasing profiles; articles {bad} are not")
    pieces = []
    for i, a in enumerate(inst.articles):
        for k, (length, rate) in enumerate(a.profile.segments):
            pieces.append((-rate, inst.tie_priority[i], i, k, length))
    pieces.sort()
    reads = [0] * inst.n
    left = inst.budget
    for _, _, i, _, length in pieces:
        if left <= 0:
            break
        take = min(length, left)
        reads[i] += take
        left -= take
    witness = ReadingTranscript.from_reads(inst, reads)
    return OfflineOptimum(witness.total_info, witness)
