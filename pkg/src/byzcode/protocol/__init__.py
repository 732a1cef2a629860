"""Simulation of the multi-round variable-rate protocol."""

from .adversary import AdversaryStrategy, Collide, Fabricate, Gibberish, Honest, make_strategy
from .hashing import BinningEncoder, Codebook, find_collision
from .session import (
    DecodeResult,
    PhaseDecoder,
    SessionReport,
    SimParams,
    Transaction,
    decode_phase,
    measure_sum_rate,
    prune_cover,
    run_session,
    trial_params,
)
from .trials import TrialResult, run_trials, summarize

__all__ = [
    "AdversaryStrategy",
    "BinningEncoder",
    "Codebook",
    "Collide",
    "DecodeResult",
    "Fabricate",
    "Gibberish",
    "Honest",
    "PhaseDecoder",
    "SessionReport",
    "SimParams",
    "Transaction",
    "TrialResult",
    "decode_phase",
    "find_collision",
    "make_strategy",
    "measure_sum_rate",
    "prune_cover",
    "run_session",
    "run_trials",
    "summarize",
    "trial_params",
]
