"""Random-order Monte Carlo engine.

Every trial draws its own ``SeedSequence`` from ``(master seed, *key, trial)``
so a trial's outcome never depends on which worker ran it or in what order.
Aggregates are computed from the per-trial values in trial order.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Instance, Number, ReadingTranscript, as_rational, validate_instance
from .oracles import OracleLimitError, instance_kph, opt_rao_dp, opt_rao_waterfill
from .readers import Arrival, ContractBreach, LookAheadError, Reader, ReaderSpec

OPT_SOURCES = ("dp", "waterfill", "kph-upper")
METRICS = ("value", "select_max")
Z95 = 1.959963984540054


class InvalidInstance(ValueError):
    pass


class StreamView:
    """What a reader may legitimately inspect about the arrivals so far."""

    def __init__(self, n: int):
        self.n = n
        self.current = -1
        self._seen: list[Arrival] = []
        self._rates: dict[tuple[int, int], int] = {}
        self.breaches = 0

    def arrival(self, round_: int) -> Arrival:
        if round_ > self.current:
            self.breaches += 1
            raise LookAheadError(f"round {round_} requested during round {self.current}")
        return self._seen[round_]

    def rate(self, round_: int, step: int) -> int:
        try:
            return self._rates[(round_, step)]
        except KeyError:
            self.breaches += 1
            raise LookAheadError(f"rate of step {step} in round {round_} was never read") from None


@dataclass(frozen=True)
class TrialResult:
    transcript: ReadingTranscript
    seed: tuple
    reader: str
    wall_time: float
    info: dict = field(default_factory=dict)


def trial_seed(seed, *key) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=(*seed.spawn_key, *key))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(key))


def check_instance(inst: Instance):
    if inst.adversarial:
        return
    report = validate_instance(inst, assume_a1=False)
    if not report.ok:
        raise InvalidInstance(str(report))


def verify_transcript(inst: Instance, tr: ReadingTranscript):
    if len(tr.reads) != inst.n:
        raise ContractBreach("transcript does not cover every article")
    for i, s in enumerate(tr.reads):
        if s and (s < 0 or s > inst.articles[i].length):
            raise ContractBreach(f"article {i}: read {s} outside [0, {inst.articles[i].length}]")
    if tr.time_used > inst.budget:
        raise ContractBreach(f"used {tr.time_used} > budget {inst.budget}")


def run_trial(inst: Instance, reader: ReaderSpec, seed, check: bool = True) -> TrialResult:
    """Play one uniformly random arrival order of ``inst`` against a fresh reader."""
    start = time.perf_counter()
    if check:
        check_instance(inst)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    perm_ss, reader_ss = ss.spawn(2)
    order = np.random.default_rng(perm_ss).permutation(inst.n).tolist()
    r = reader.build(inst.n, inst.budget, reader_ss)
    stream = StreamView(inst.n)
    r.stream = stream
    reads = [0] * inst.n
    remaining = inst.budget
    seen = stream._seen
    data = inst.arrival_data
    for rnd, idx in enumerate(order):
        hint, length, tie = data[idx]
        arrival = Arrival(rnd, hint, length, tie)
        stream.current = rnd
        seen.append(arrival)
        s = r.on_arrival(arrival, remaining)
        if not s:
            continue
        s = as_rational(s)
        if s < 0 or s > length:
            raise ContractBreach(f"{reader.label}: asked for {s} steps of a length-{length} article")
        if s > remaining:
            raise ContractBreach(f"{reader.label}: asked for {s} steps with {remaining} left")
        if r.observes_steps:
            s = _read_stepwise(r, inst.articles[idx], rnd, s, remaining, stream)
        reads[idx] = s
        remaining = as_rational(remaining - s)
    if stream.breaches:
        raise LookAheadError(f"{reader.label}: {stream.breaches} look-ahead attempts")
    tr = ReadingTranscript.from_reads(inst, reads, order, coerce=False)
    verify_transcript(inst, tr)
    return TrialResult(tr, tuple(ss.spawn_key), reader.label,
                       time.perf_counter() - start, dict(r.info))


def _read_stepwise(r: Reader, art, rnd: int, s: Number, remaining: Number, stream: StreamView):
    read = 0
    step = 0
    while read < s:
        step += 1
        chunk = min(1, s - read)
        rate = art.profile.rate_at(step)
        stream._rates[(rnd, step)] = rate
        read = as_rational(read + chunk)
        if read < s and not r.on_step(step, rate, as_rational(remaining - read)):
            break
    return read


def select_max_index(inst: Instance) -> int:
    return max(range(inst.n), key=lambda i: (inst.articles[i].upper_value, -inst.tie_priority[i]))


def _metric(inst: Instance, tr: ReadingTranscript, metric: str, target: int | None):
    if metric == "value":
        return tr.total_info
    return int(tr.reads[target] > 0)


def _run_chunk(args):
    inst, reader, seed, key, lo, hi, metric = args
    target = select_max_index(inst) if metric == "select_max" else None
    return [
        _metric(inst, run_trial(inst, reader, trial_seed(seed, *key, k), check=False).transcript,
                metric, target)
        for k in range(lo, hi)
    ]


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("RAO_LAB_WORKERS", "1"))
    return max(1, int(workers))


def run_trials(inst: Instance, reader: ReaderSpec, trials: int, seed, key: Sequence[int] = (),
               workers: int | None = None, metric: str = "value") -> list:
    """Per-trial metric values, in trial order."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    check_instance(inst)
    workers = resolve_workers(workers)
    key = tuple(key)
    if workers == 1 or trials < 2 * workers:
        return _run_chunk((inst, reader, seed, key, 0, trials, metric))
    bounds = np.linspace(0, trials, 4 * workers + 1).astype(int)
    jobs = [(inst, reader, seed, key, int(a), int(b), metric)
            for a, b in zip(bounds, bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        out = []
        for part in pool.map(_run_chunk, jobs):
            out.extend(part)
    return out


@dataclass(frozen=True)
class ValueEstimate:
    mean: float
    ci95: float
    trials: int


def summarize(values: Sequence) -> ValueEstimate:
    xs = [float(v) for v in values]
    n = len(xs)
    mean = math.fsum(xs) / n
    if n < 2:
        return ValueEstimate(mean, 0.0, n)
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    return ValueEstimate(mean, Z95 * math.sqrt(var / n), n)


def estimate_value(inst: Instance, reader: ReaderSpec, trials: int, seed, key=(),
                   workers: int | None = None, metric: str = "value") -> ValueEstimate:
    """Sample mean and normal-approximation 95% half-width over seeded trials."""
    return summarize(run_trials(inst, reader, trials, seed, key, workers, metric))


def offline_value(inst: Instance, source: str = "auto") -> tuple[Number, str]:
    """Offline benchmark value and the oracle that produced it."""
    if source == "auto":
        try:
            return opt_rao_dp(inst).value, "dp"
        except OracleLimitError:
            if all(a.non_increasing for a in inst.articles):
                return opt_rao_waterfill(inst).value, "waterfill"
            return instance_kph(inst).value, "kph-upper"
    if source == "dp":
        return opt_rao_dp(inst).value, "dp"
    if source == "waterfill":
        return opt_rao_waterfill(inst).value, "waterfill"
    if source == "kph-upper":
        return instance_kph(inst).value, "kph-upper"
    raise ValueError(f"unknown opt source {source!r}; choose from {OPT_SOURCES} or 'auto'")


@dataclass(frozen=True)
class RatioEstimate:
    mean_alg_value: float
    ci95: float
    opt_value: Number
    opt_source: str
    trials: int

    @property
    def empirical_ratio(self) -> float:
        if self.mean_alg_value <= 0:
            return math.inf
        return float(self.opt_value) / self.mean_alg_value


def estimate_ratio(inst: Instance, reader: ReaderSpec, trials: int, seed, opt_source="auto",
                   key=(), workers: int | None = None) -> RatioEstimate:
    opt, source = offline_value(inst, opt_source)
    est = estimate_value(inst, reader, trials, seed, key, workers)
    return RatioEstimate(est.mean, est.ci95, opt, source, est.trials)


CSV_COLUMNS = ["instance_id", "reader", "params", "trials", "mean", "ci95", "opt", "opt_source", "ratio"]


def results_row(inst: Instance, reader: ReaderSpec, est: ValueEstimate, opt, source) -> dict:
    ratio = math.inf if est.mean <= 0 else float(opt) / est.mean
    return {
        "instance_id": inst.instance_id,
        "reader": reader.name,
        "params": ";".join(f"{k}={v}" for k, v in sorted(reader.params.items())),
        "trials": est.trials,
        "mean": repr(est.mean),
        "ci95": repr(est.ci95),
        "opt": str(opt),
        "opt_source": source,
        "ratio": repr(ratio),
    }


def write_csv(rows: Sequence[dict], path=None) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text
