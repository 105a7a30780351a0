"""Online readers.

A reader is built fresh for every trial. The harness shows it one arrival at
a time (hint, length, tie rank, remaining budget) and the reader answers
with the number of time steps it commits to read, ``0`` meaning skip.
Lengths may be fractional. Readers that set ``observes_steps`` are also
called back after every completed step with the rate they just read and
may stop early; no reader sees a rate it has not paid for.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from gmpy2 import mpq

from .model import Number, as_rational
from .oracles import KphItem, solve_kph


class ContractBreach(RuntimeError):
    """A reader or black box broke the rules of the reading game."""


class LookAheadError(ContractBreach):
    """A reader asked about a round that has not arrived yet."""


class Arrival(NamedTuple):
    round: int
    hint: int
    length: Number
    tie: int

    @property
    def upper_value(self) -> Number:
        return as_rational(self.hint * self.length)

    @property
    def rank_key(self):
        # smaller tie rank wins ties, consistently with the KPH sort
        return (self.upper_value, -self.tie)


class Reader(ABC):
    name = "reader"
    observes_steps = False

    def __init__(self, n: int, budget: Number, rng: np.random.Generator):
        self.n = n
        self.budget = as_rational(budget)
        self.rng = rng
        self.stream = None
        self.info: dict = {}

    @abstractmethod
    def on_arrival(self, arrival: Arrival, remaining: Number) -> Number:
        """Return how many time steps to read of this article (0 skips it)."""

    def on_step(self, step: int, rate: int, remaining: Number) -> bool:
        """Called after each full step when ``observes_steps`` is set; False stops."""
        return True


DEFAULT_G = mpq(215, 10000)


def rejection_length(n: int) -> int:
    return math.floor(n / math.e)


class SecretaryReader(Reader):
    """Classical secretary on ``t*h``: watch floor(n/e) rounds, then take the first improvement."""

    name = "secretary"

    def __init__(self, n, budget, rng):
        super().__init__(n, budget, rng)
        self.cutoff = rejection_length(n)
        self.best = None
        self.done = False

    def on_arrival(self, arrival, remaining):
        if self.done:
            return 0
        key = arrival.rank_key
        if arrival.round < self.cutoff:
            if self.best is None or key > self.best:
                self.best = key
            return 0
        if self.best is None or key > self.best:
            self.done = True
            self.info["selected_round"] = arrival.round
            # lengths exceed the budget only on adversarial instances
            return min(arrival.length, remaining)
        return 0


class OnlineKnapsack(ABC):
    """Black-box online 0/1 knapsack: accept or reject each item once, irrevocably."""

    declared_alpha: float = 1.0
    name = "okp"

    def __init__(self, n: int, capacity: Number, rng: np.random.Generator):
        self.n = n
        self.capacity = as_rational(capacity)
        self.used = 0
        self.rng = rng
        self.seen = 0

    @property
    def remaining(self) -> Number:
        return as_rational(self.capacity - self.used)

    def offer(self, value: Number, weight: Number, tie: int = 0) -> bool:
        accept = self.decide(as_rational(value), as_rational(weight), tie)
        self.seen += 1
        if accept:
            self.used = as_rational(self.used + weight)
        return accept

    @abstractmethod
    def decide(self, value: Number, weight: Number, tie: int) -> bool:
        ...


def sample_threshold(items: list[KphItem], budget: Number) -> Number:
    """Density threshold of the optimal fractional packing of a sample.

    An empty or underfull sample gives 0, i.e. accept everything.
    """
    if sum(it.length for it in items) < budget:
        return 0
    return solve_kph(items, budget).rho


class KnapsackSecretary(OnlineKnapsack):
    """Two-branch baseline: a value secretary or a sampled density threshold, by fair coin."""

    declared_alpha = 10 * math.e
    name = "knapsack-secretary"

    def __init__(self, n, capacity, rng):
        super().__init__(n, capacity, rng)
        self.value_branch = bool(rng.random() < 0.5)
        self.cutoff = rejection_length(n) if self.value_branch else n // 2
        self.best = None
        self.sample: list[KphItem] = []
        self.threshold = None
        self.taken = False

    def decide(self, value, weight, tie):
        t = self.seen
        if self.value_branch:
            key = (value, -tie)
            if t < self.cutoff:
                if self.best is None or key > self.best:
                    self.best = key
                return False
            if self.taken or weight > self.remaining:
                return False
            if self.best is None or key > self.best:
                self.taken = True
                return True
            return False
        density = as_rational(mpq(value) / weight)
        if t < self.cutoff:
            self.sample.append(KphItem(t, density, weight, tie))
            return False
        if self.threshold is None:
            self.threshold = sample_threshold(self.sample, self.capacity)
        return density >= self.threshold and weight <= self.remaining


OKP_REGISTRY: dict[str, type[OnlineKnapsack]] = {
    KnapsackSecretary.name: KnapsackSecretary,
}


class DirectKnapsackReader(Reader):
    """Feed every article to the black box as (t*h, t) and read accepted ones fully."""

    name = "direct"

    def __init__(self, n, budget, rng, okp: type[OnlineKnapsack] = KnapsackSecretary):
        super().__init__(n, budget, rng)
        self.okp = okp(n, budget, rng)

    def on_arrival(self, arrival, remaining):
        if not self.okp.offer(arrival.upper_value, arrival.length, arrival.tie):
            return 0
        if arrival.length > remaining:
            raise ContractBreach(
                f"{self.okp.name} accepted length {arrival.length} with {remaining} left"
            )
        return arrival.length


class ReductionReader(Reader):
    """With probability alpha/(e+alpha) run the knapsack box, otherwise the secretary."""

    name = "reduction"

    def __init__(self, n, budget, rng, okp: type[OnlineKnapsack] = KnapsackSecretary,
                 alpha: float | None = None, coin_rng: np.random.Generator | None = None):
        super().__init__(n, budget, rng)
        self.alpha = okp.declared_alpha if alpha is None else float(alpha)
        if self.alpha < 1:
            raise ValueError("alpha must be at least 1")
        self.delta = reduction_delta(self.alpha)
        coin = coin_rng if coin_rng is not None else rng
        self.branch = int(coin.random() < self.delta)
        self.info["branch"] = self.branch
        if self.branch:
            self.inner: Reader = DirectKnapsackReader(n, budget, rng, okp)
        else:
            self.inner = SecretaryReader(n, budget, rng)

    def on_arrival(self, arrival, remaining):
        s = self.inner.on_arrival(arrival, remaining)
        self.info.update(self.inner.info)
        return s


def reduction_delta(alpha: float) -> float:
    return alpha / (math.e + alpha)


class ThresholdReader(Reader):
    """Sample a Bin(n, 1/2) prefix, learn a hint threshold from it, then read capped prefixes."""

    name = "threshold"

    def __init__(self, n, budget, rng, g=DEFAULT_G, r: int | None = None):
        super().__init__(n, budget, rng)
        self.g = as_rational(g)
        if not 0 < self.g <= 1:
            raise ValueError("g must lie in (0, 1]")
        self.cap = as_rational(self.g * self.budget)
        self.r = int(rng.binomial(n, 0.5)) if r is None else int(r)
        self.sample: list[KphItem] = []
        self.rho = None
        self.info["r"] = self.r

    def on_arrival(self, arrival, remaining):
        if arrival.round < self.r:
            self.sample.append(
                KphItem(arrival.round, arrival.hint, min(arrival.length, self.cap), arrival.tie)
            )
            return 0
        if self.rho is None:
            self.rho = sample_threshold(self.sample, mpq(self.budget) / 2)
            self.info["rho"] = self.rho
        if arrival.hint >= self.rho:
            return max(0, min(arrival.length, self.cap, remaining))
        return 0


class PrefixReader(Reader):
    """Reads the first ``steps`` time steps of the first ``count`` articles.

    Both default to isqrt(n); this is the reference reader for the family
    where rates may exceed hints.
    """

    name = "prefix"

    def __init__(self, n, budget, rng, count: int | None = None, steps=None):
        super().__init__(n, budget, rng)
        self.count = math.isqrt(n) if count is None else int(count)
        self.steps = math.isqrt(n) if steps is None else as_rational(steps)

    def on_arrival(self, arrival, remaining):
        if arrival.round >= self.count:
            return 0
        return min(self.steps, arrival.length, remaining)


@dataclass(frozen=True)
class ReaderSpec:
    """Picklable reader recipe: a registered name plus parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in READERS:
            raise ValueError(f"unknown reader {self.name!r}; choose from {sorted(READERS)}")
        allowed = READER_PARAMS[self.name]
        extra = set(self.params) - allowed
        if extra:
            raise ValueError(f"reader {self.name} does not take {sorted(extra)}")

    def build(self, n: int, budget: Number, seed: np.random.SeedSequence) -> Reader:
        return READERS[self.name](n, budget, seed, dict(self.params))

    @property
    def label(self) -> str:
        if not self.params:
            return self.name
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}{{{inner}}}"


def _okp(params) -> type[OnlineKnapsack]:
    name = params.get("okp", KnapsackSecretary.name)
    try:
        return OKP_REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown knapsack box {name!r}") from None


def _build_reduction(n, budget, ss, params):
    # the coin gets its own child stream so the branch algorithm sees the same
    # randomness as when it runs standalone from the same seed
    coin = np.random.default_rng(ss.spawn(1)[0])
    return ReductionReader(n, budget, np.random.default_rng(ss), _okp(params),
                           params.get("alpha"), coin_rng=coin)


READERS: dict[str, Callable] = {
    "secretary": lambda n, T, ss, p: SecretaryReader(n, T, np.random.default_rng(ss)),
    "direct": lambda n, T, ss, p: DirectKnapsackReader(n, T, np.random.default_rng(ss), _okp(p)),
    "reduction": _build_reduction,
    "threshold": lambda n, T, ss, p: ThresholdReader(
        n, T, np.random.default_rng(ss), as_rational(p.get("g", DEFAULT_G)), p.get("r")
    ),
    "prefix": lambda n, T, ss, p: PrefixReader(
        n, T, np.random.default_rng(ss), p.get("count"), p.get("steps")
    ),
}

READER_PARAMS = {
    "secretary": set(),
    "direct": {"okp"},
    "reduction": {"okp", "alpha"},
    "threshold": {"g", "r"},
    "prefix": {"count", "steps"},
}
