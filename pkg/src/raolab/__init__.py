"""Simulation lab for reading articles online under a time budget."""

from .generators import RandomParams, gen_lemma3, gen_lemma4, gen_lemma5, gen_random, generate
from .harness import estimate_ratio, estimate_value, run_trial
from .model import (
    AccuracyReport,
    Article,
    InformationProfile,
    Instance,
    ReadingTranscript,
    ValidationReport,
    accuracy,
    cut_instance,
    info_gain,
    validate_instance,
)
from .oracles import opt_rao_dp, opt_rao_waterfill, solve_kph, solve_kph_integral
from .readers import ReaderSpec

__version__ = "0.1.0"
