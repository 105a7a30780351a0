"""Instance generators: the three lower-bound families and seeded random corpora."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .model import Article, InformationProfile, Instance

SHAPES = ("constant", "non-increasing-steps", "non-increasing-geometric")
LENGTH_DISTRIBUTIONS = ("uniform", "loguniform")


def gen_lemma3(ell: int) -> Instance:
    """Rates may exceed the hint: ``ell`` articles spike at step ``ell``, the rest at the end.

    n = ell**2 articles, all with budget, length and hint n. The spike is n**2,
    which breaks the rate <= hint rule on purpose.
    """
    if ell < 2:
        raise ValueError("ell must be at least 2")
    n = ell * ell
    spike = n * n
    type_a = InformationProfile(((ell - 1, 1), (1, spike), (n - ell, 1)))
    type_b = InformationProfile(((n - 1, 1), (1, spike)))
    articles = [Article(n, type_a) for _ in range(ell)]
    articles += [Article(n, type_b) for _ in range(n - ell)]
    return Instance(n, tuple(articles), adversarial=True, instance_id=f"lemma3-l{ell}")


def gen_lemma4(n: int, seed: int = 0) -> Instance:
    """Articles longer than the budget (T=2, t=3); one hides M=n in step 2."""
    if n < 2:
        raise ValueError("n must be at least 2")
    m = n
    k = int(np.random.default_rng(seed).integers(n))
    articles = tuple(
        Article.from_rates(m, [1, m, 1] if i == k else [1, 1, m]) for i in range(n)
    )
    return Instance(2, articles, adversarial=True, instance_id=f"lemma4-n{n}", seed=seed)


def gen_lemma5(n: int, c_acc: int, seed: int = 0) -> Instance:
    """Hints all equal ``c_acc``; only one article actually delivers it in step 2."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if c_acc < 1:
        raise ValueError("accuracy must be at least 1")
    k = int(np.random.default_rng(seed).integers(n))
    articles = tuple(
        Article.from_rates(c_acc, [1, c_acc] if i == k else [1, 1]) for i in range(n)
    )
    return Instance(2, articles, instance_id=f"lemma5-n{n}-c{c_acc}", seed=seed)


@dataclass(frozen=True)
class RandomParams:
    n: int
    budget: int
    hint_range: tuple[int, int] = (1, 100)
    length_range: tuple[int, int] = (1, 10)
    length_dist: str = "uniform"
    shape: str = "constant"
    accuracy_range: tuple[float, float] = (1.0, 1.0)
    max_tries: int = 200

    def check(self):
        if self.n < 1 or self.budget < 1:
            raise ValueError("n and budget must be positive")
        lo, hi = self.hint_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad hint range {self.hint_range}")
        if hi - lo + 1 < self.n:
            raise ValueError(
                f"hint range {self.hint_range} too small for {self.n} distinct hints"
            )
        lo, hi = self.length_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad length range {self.length_range}")
        if hi > self.budget:
            raise ValueError("lengths above the budget break the length assumption")
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}; choose from {SHAPES}")
        if self.length_dist not in LENGTH_DISTRIBUTIONS:
            raise ValueError(f"unknown length distribution {self.length_dist!r}")
        clo, chi = self.accuracy_range
        if clo < 1 or chi < clo:
            raise ValueError(f"accuracy range must satisfy 1 <= lo <= hi, got {self.accuracy_range}")

    @classmethod
    def from_dict(cls, d: dict) -> "RandomParams":
        d = dict(d)
        for key in ("hint_range", "length_range", "accuracy_range"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def _draw_lengths(rng, p: RandomParams, size: int) -> np.ndarray:
    lo, hi = p.length_range
    if p.length_dist == "uniform":
        return rng.integers(lo, hi + 1, size=size)
    u = rng.uniform(math.log(lo), math.log(hi + 1), size=size)
    return np.clip(np.floor(np.exp(u)), lo, hi).astype(np.int64)


def _composition(rng, total: int, parts: int) -> list[int]:
    cuts = sorted(rng.choice(np.arange(1, total), size=parts - 1, replace=False).tolist())
    bounds = [0, *cuts, total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def _steps_profile(rng, hint: int, length: int, target: float) -> InformationProfile:
    # two levels: hint for a prefix, then a low rate; prefix length hits the target mean
    low = int(rng.integers(1, max(1, math.floor(hint / target)) + 1))
    if low >= hint or length == 1:
        return InformationProfile(((length, hint),))
    want = hint * length / target
    head = round((want - low * length) / (hint - low))
    head = min(max(head, 0), length)
    segs = [(head, hint), (length - head, low)]
    return InformationProfile(tuple(s for s in segs if s[0] > 0))


def _geometric_profile(rng, hint: int, length: int, target: float) -> InformationProfile:
    # rates floor(hint * q**(k + shift)); the shift lets the top rate sit below the hint
    parts = min(length, int(rng.integers(2, 7)))
    if parts < 2:
        return InformationProfile(((length, hint),))
    lengths = _composition(rng, length, parts)
    best, best_err = None, math.inf
    for shift in range(4):
        for q in np.linspace(0.02, 1.0, 99):
            rates = [max(1, math.floor(hint * q ** (k + shift))) for k in range(parts)]
            total = sum(l * r for l, r in zip(lengths, rates))
            err = abs(hint * length / total - target)
            if err < best_err:
                best, best_err = rates, err
    return InformationProfile(tuple(zip(lengths, best)))


def gen_random(params: RandomParams | dict, seed: int) -> Instance:
    """Seeded random instance with distinct hints and distinct ``t*h`` products."""
    p = params if isinstance(params, RandomParams) else RandomParams.from_dict(params)
    p.check()
    rng = np.random.default_rng(seed)
    lo, hi = p.hint_range
    hints = (rng.choice(hi - lo + 1, size=p.n, replace=False) + lo).tolist()
    lengths = _draw_lengths(rng, p, p.n).tolist()
    for _ in range(p.max_tries):
        seen: dict[int, int] = {}
        clash = []
        for i, (h, t) in enumerate(zip(hints, lengths)):
            if h * t in seen:
                clash.append(i)
            else:
                seen[h * t] = i
        if not clash:
            break
        for i, t in zip(clash, _draw_lengths(rng, p, len(clash)).tolist()):
            lengths[i] = t
    else:
        raise ValueError("could not make hint-length products distinct; widen the ranges")

    clo, chi = p.accuracy_range
    articles = []
    for h, t in zip(hints, lengths):
        target = float(rng.uniform(clo, chi))
        if p.shape == "constant" or h == 1:
            prof = InformationProfile(((t, h),))
        elif p.shape == "non-increasing-steps":
            prof = _steps_profile(rng, h, t, target)
        else:
            prof = _geometric_profile(rng, h, t, target)
        articles.append(Article(int(h), prof))
    priority = rng.permutation(p.n).tolist()
    return Instance(
        budget=p.budget,
        articles=tuple(articles),
        tie_priority=tuple(priority),
        instance_id=f"random-{p.shape}-n{p.n}-s{seed}",
        seed=seed,
    )


GENERATORS = {
    "lemma3": lambda params, seed: gen_lemma3(int(params["ell"])),
    "lemma4": lambda params, seed: gen_lemma4(int(params["n"]), seed),
    "lemma5": lambda params, seed: gen_lemma5(int(params["n"]), int(params["c_acc"]), seed),
    "random": lambda params, seed: gen_random(params, seed),
}


def generate(name: str, params: dict, seed: int = 0) -> Instance:
    try:
        gen = GENERATORS[name]
    except KeyError:
        raise ValueError(f"unknown generator {name!r}; choose from {sorted(GENERATORS)}") from None
    try:
        return gen(params, seed)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad parameters for {name}: {exc}") from exc

