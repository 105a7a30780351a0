"""Articles, instances and the exact information arithmetic they share.

Profiles are run-length encoded: a tuple of ``(length, rate)`` segments.
Step ``j`` (1-based) covers the time interval ``(j - 1, j]`` and yields the
rate of the segment containing it, so reading a fractional length ``s``
gains the full prefix up to ``floor(s)`` plus ``c(ceil(s)) * frac(s)``.
All quantities are ``int`` or ``gmpy2.mpq`` (exact rationals).
"""

from __future__ import annotations

import bisect
import json
from functools import cached_property
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence, Union

from gmpy2 import mpq

Number = Union[int, mpq]


_MPQ = type(mpq(1, 2))


def as_rational(x) -> Number:
    """Coerce ``x`` to an exact ``int``/``mpq`` (floats go through ``str``)."""
    if type(x) is int:
        return x
    if type(x) is _MPQ:
        return int(x.numerator) if x.denominator == 1 else x
    if isinstance(x, bool):
        raise TypeError("booleans are not quantities")
    if isinstance(x, int):
        return int(x)
    if isinstance(x, (Fraction, Rational)):
        return as_rational(mpq(int(x.numerator), int(x.denominator)))
    if isinstance(x, (float, str)):
        return as_rational(mpq(str(x)))
    raise TypeError(f"cannot interpret {x!r} as a rational")


def _encode(x: Number):
    x = as_rational(x)
    return x if isinstance(x, int) else str(x)


@dataclass(frozen=True)
class InformationProfile:
    segments: tuple[tuple[Number, int], ...]
    _ends: tuple[Number, ...] = field(init=False, repr=False, compare=False)
    _prefix: tuple[Number, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        segs = []
        for length, rate in self.segments:
            length = as_rational(length)
            if length <= 0:
                raise ValueError("segment lengths must be positive")
            if int(rate) != rate:
                raise ValueError("rates must be integers")
            rate = int(rate)
            if rate <= 0:
                raise ValueError("rates must be positive")
            if segs and segs[-1][1] == rate:
                segs[-1] = (as_rational(segs[-1][0] + length), rate)
            else:
                segs.append((length, rate))
        if not segs:
            raise ValueError("a profile needs at least one segment")
        ends, prefix = [], [0]
        pos = 0
        for length, rate in segs:
            pos += length
            ends.append(as_rational(pos))
            prefix.append(as_rational(prefix[-1] + length * rate))
        object.__setattr__(self, "segments", tuple(segs))
        object.__setattr__(self, "_ends", tuple(ends))
        object.__setattr__(self, "_prefix", tuple(prefix))

    @classmethod
    def from_rates(cls, rates: Iterable[int]) -> "InformationProfile":
        """Build from a per-step rate list ``[c(1), c(2), ...]``."""
        return cls(tuple((1, r) for r in rates))

    @property
    def length(self) -> Number:
        return self._ends[-1]

    @property
    def total(self) -> Number:
        return self._prefix[-1]

    @property
    def max_rate(self) -> int:
        return max(r for _, r in self.segments)

    @property
    def min_rate(self) -> int:
        return min(r for _, r in self.segments)

    @property
    def non_increasing(self) -> bool:
        rates = [r for _, r in self.segments]
        return all(a >= b for a, b in zip(rates, rates[1:]))

    def rate_at(self, step: int) -> int:
        """Rate ``c(step)`` for a 1-based step index."""
        if step < 1 or step - 1 >= self.length:
            raise IndexError(f"step {step} outside profile of length {self.length}")
        return self.segments[bisect.bisect_right(self._ends, step - 1)][1]

    def prefix(self, s) -> Number:
        """Information gained by reading the first ``s`` time steps."""
        s = as_rational(s)
        if s < 0 or s > self.length:
            raise ValueError(f"reading length {s} outside [0, {self.length}]")
        if s == 0:
            return 0
        k = bisect.bisect_left(self._ends, s)
        start = self._ends[k - 1] if k else 0
        return as_rational(self._prefix[k] + (s - start) * self.segments[k][1])

    def truncate(self, s) -> "InformationProfile":
        s = as_rational(s)
        if s <= 0:
            raise ValueError("truncation point must be positive")
        if s >= self.length:
            return self
        out, pos = [], 0
        for length, rate in self.segments:
            take = min(length, s - pos)
            out.append((take, rate))
            pos += take
            if pos >= s:
                break
        return InformationProfile(tuple(out))

    def rates(self) -> list[int]:
        """Per-step rates; only meaningful for integral segment lengths."""
        out = []
        for length, rate in self.segments:
            out.extend([rate] * int(length))
        return out


@dataclass(frozen=True)
class Article:
    hint: int
    profile: InformationProfile

    @property
    def length(self) -> Number:
        return self.profile.length

    @property
    def non_increasing(self) -> bool:
        return self.profile.non_increasing

    @property
    def upper_value(self) -> Number:
        """``t_i * h_i``, the most information the hint allows."""
        return as_rational(self.length * self.hint)

    @classmethod
    def from_rates(cls, hint: int, rates: Iterable[int]) -> "Article":
        return cls(hint, InformationProfile.from_rates(rates))

    @classmethod
    def constant(cls, hint: int, length: int) -> "Article":
        return cls(hint, InformationProfile(((length, hint),)))


@dataclass(frozen=True)
class Instance:
    budget: Number
    articles: tuple[Article, ...]
    tie_priority: tuple[int, ...] = ()
    adversarial: bool = False
    instance_id: str = ""
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "budget", as_rational(self.budget))
        object.__setattr__(self, "articles", tuple(self.articles))
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if not self.tie_priority:
            object.__setattr__(self, "tie_priority", tuple(range(len(self.articles))))
        if sorted(self.tie_priority) != list(range(len(self.articles))):
            raise ValueError("tie_priority must be a permutation of article indices")
        object.__setattr__(self, "tie_priority", tuple(int(p) for p in self.tie_priority))

    @property
    def n(self) -> int:
        return len(self.articles)

    @cached_property
    def arrival_data(self) -> tuple[tuple[int, Number, int], ...]:
        """``(hint, length, tie rank)`` per article, as revealed on arrival."""
        return tuple((a.hint, a.length, p) for a, p in zip(self.articles, self.tie_priority))

    def to_dict(self) -> dict:
        d = {
            "budget": _encode(self.budget),
            "articles": [
                {
                    "hint": a.hint,
                    "length": _encode(a.length),
                    "segments": [[_encode(l), r] for l, r in a.profile.segments],
                }
                for a in self.articles
            ],
            "tie_priority": list(self.tie_priority),
            "adversarial": self.adversarial,
        }
        if self.instance_id:
            d["id"] = self.instance_id
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        articles = []
        for a in d["articles"]:
            prof = InformationProfile(tuple((as_rational(l), int(r)) for l, r in a["segments"]))
            if "length" in a and as_rational(a["length"]) != prof.length:
                raise ValueError(
                    f"article length {a['length']} disagrees with segments ({prof.length})"
                )
            articles.append(Article(int(a["hint"]), prof))
        return cls(
            budget=as_rational(d["budget"]),
            articles=tuple(articles),
            tie_priority=tuple(d.get("tie_priority", ())),
            adversarial=bool(d.get("adversarial", False)),
            instance_id=d.get("id", ""),
            seed=d.get("seed"),
        )

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class AccuracyReport:
    c_value: Number
    argmax_article: int


@dataclass(frozen=True)
class ReadingTranscript:
    """Outcome of one reading of an instance, indexed by article."""

    reads: tuple[Number, ...]
    gains: tuple[Number, ...]
    order: tuple[int, ...]
    total_info: Number

    @classmethod
    def from_reads(cls, inst: Instance, reads: Sequence, order: Sequence[int] | None = None,
                   coerce: bool = True):
        reads = tuple(as_rational(s) for s in reads) if coerce else tuple(reads)
        gains = tuple(info_gain(a, s) if s else 0 for a, s in zip(inst.articles, reads))
        order = tuple(order) if order is not None else tuple(range(inst.n))
        return cls(reads, gains, order, as_rational(sum(g for g in gains if g)))

    @property
    def time_used(self) -> Number:
        return as_rational(sum(self.reads))


@dataclass(frozen=True)
class Violation:
    code: str
    article: int | None
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(v.message for v in self.violations)


RATE_EXCEEDS_HINT = "rate exceeds hint"
LENGTH_EXCEEDS_BUDGET = "length exceeds budget"
DUPLICATE_HINT = "duplicate hint"
DUPLICATE_PRODUCT = "duplicate hint-length product"


def validate_instance(inst: Instance, assume_a1: bool = True) -> ValidationReport:
    """Report every violated model invariant; an empty report means valid."""
    report = ValidationReport()
    add = report.violations.append
    for i, a in enumerate(inst.articles):
        if a.hint < 1:
            add(Violation("hint not positive", i, f"article {i}: hint {a.hint} < 1"))
        if a.profile.max_rate > a.hint:
            add(Violation(RATE_EXCEEDS_HINT, i,
                          f"article {i}: {RATE_EXCEEDS_HINT} ({a.profile.max_rate} > {a.hint})"))
    if assume_a1:
        for i, a in enumerate(inst.articles):
            if a.length > inst.budget:
                add(Violation(LENGTH_EXCEEDS_BUDGET, i,
                              f"article {i}: {LENGTH_EXCEEDS_BUDGET} ({a.length} > {inst.budget})"))
        for code, key in ((DUPLICATE_HINT, lambda a: a.hint),
                          (DUPLICATE_PRODUCT, lambda a: a.upper_value)):
            first: dict = {}
            for i, a in enumerate(inst.articles):
                k = key(a)
                if k in first:
                    add(Violation(code, i, f"article {i}: {code} {k} (also article {first[k]})"))
                else:
                    first[k] = i
    return report


def accuracy(inst: Instance) -> AccuracyReport:
    """Smallest ``C >= 1`` with ``h_i <= C * mean rate_i`` for every article."""
    if not inst.articles:
        raise ValueError("accuracy of an empty instance is undefined")
    best, arg = None, 0
    for i, a in enumerate(inst.articles):
        ratio = mpq(a.upper_value) / a.profile.total
        if best is None or ratio > best:
            best, arg = ratio, i
    return AccuracyReport(as_rational(max(best, 1)), arg)


def info_gain(article: Article, s) -> Number:
    return article.profile.prefix(s)


def cut_instance(inst: Instance, g) -> Instance:
    """Truncate every article to at most ``g * budget`` time steps."""
    g = as_rational(g)
    if not 0 < g <= 1:
        raise ValueError(f"cut fraction must lie in (0, 1], got {g}")
    cap = as_rational(g * inst.budget)
    articles = tuple(
        a if a.length <= cap else Article(a.hint, a.profile.truncate(cap))
        for a in inst.articles
    )
    if all(x is y for x, y in zip(articles, inst.articles)):
        return inst
    return Instance(
        budget=inst.budget,
        articles=articles,
        tie_priority=inst.tie_priority,
        adversarial=inst.adversarial,
        instance_id=f"{inst.instance_id}@cut{g}" if inst.instance_id else "",
        seed=inst.seed,
    )
