"""
Seeded Monte Carlo trials.

Randomness comes from numpy's Philox4x64 counter-based generator keyed by the
64-bit seed. Trial i uses draw i of that stream, so each trial's uniform is a
pure function of (seed, i): it depends neither on the number of trials nor on
how trials are split across workers.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .consistency_solver import ConsistencyReport, Transaction, classify, resolve_transaction
from .exceptions import DeficitPresent, NotWellPosed
from .scenario import TOLERANCE, History, Setup
from .utils import frame_to_csv
from .wave_engine import EchoProfile, echo_profile

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    outcome_channel: str
    completing_absorber: str
    history: History


@dataclass(frozen=True)
class TrialBatch:
    """
    Results of `run_trials`.

    Attributes
    ----------
    setup_label : str
        Label of the simulated setup.
    seed : int
        Seed of the Philox stream.
    trials : Tuple[TrialRecord, ...]
        One record per trial, ordered by trial index.
    frequencies : Dict[str, float]
        Empirical outcome frequency per channel (empty for an empty batch).
    """
    setup_label: str
    seed: int
    trials: Tuple[TrialRecord, ...] = ()
    frequencies: Dict[str, float] = field(default_factory=dict)

    def __len__(self):
        return len(self.trials)

    def counts(self) -> Dict[str, int]:
        counts = Counter(t.outcome_channel for t in self.trials)
        return {name: counts.get(name, 0) for name in self.frequencies}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'index': [t.trial_index for t in self.trials],
                             'outcome': [t.outcome_channel for t in self.trials],
                             'absorber': [t.completing_absorber for t in self.trials]},
                            columns=['index', 'outcome', 'absorber'])

    def completion_table(self) -> pd.DataFrame:
        """Trials per (outcome, completing absorber), with the share of the outcome's trials."""
        columns = ['outcome', 'absorber', 'count', 'fraction']
        if not self.trials:
            return pd.DataFrame(columns=columns)
        df = self.to_frame().groupby(['outcome', 'absorber'], sort=True).size().reset_index(name='count')
        df['fraction'] = df['count'] / df.groupby('outcome')['count'].transform('sum')
        return df[columns]

    def to_dict(self) -> dict:
        return {
            'setup_label': self.setup_label,
            'seed': self.seed,
            'n': len(self.trials),
            'frequencies': dict(self.frequencies),
            'trials': [{'index': t.trial_index, 'outcome': t.outcome_channel, 'absorber': t.completing_absorber}
                       for t in self.trials],
        }

    def to_csv(self) -> str:
        return frame_to_csv(self.to_frame())


def trial_uniforms(seed: int, n: int, start: int = 0) -> np.ndarray:
    """
    Uniform draws in [0, 1) for trials start, ..., start + n - 1.

    Parameters
    ----------
    seed : int
        Key of the Philox4x64 generator, 0 <= seed < 2**64.
    n : int
        Number of trials.
    start : int, optional
        Index of the first trial (default 0).

    Returns
    -------
    np.ndarray
        Array of n doubles; entry j belongs to trial start + j.
    """
    if not 0 <= seed < MAX_SEED:
        raise ValueError(f"The seed must be a 64-bit unsigned integer, got {seed}.")
    generator = np.random.Generator(np.random.Philox(key=seed))
    return generator.random(start + n)[start:]


def _inverse_cdf(profile: EchoProfile) -> Tuple[List[str], np.ndarray]:
    if profile.deficit > TOLERANCE:
        raise DeficitPresent(f"Echo profile has unabsorbed weight {profile.deficit!r}; "
                             f"the setup is pathological under an Open boundary.")
    names = list(profile.per_channel)
    weights = np.array([profile.per_channel[name] for name in names], dtype=float)
    total = math.fsum(weights)
    if total <= 0:
        raise DeficitPresent("Echo profile carries no weight at all.")
    return names, np.cumsum(weights) / total


def sample_outcomes(profile: EchoProfile, uniforms: Sequence[float]) -> List[str]:
    """Vectorised `sample_outcome` over an array of uniforms."""
    names, cdf = _inverse_cdf(profile)
    # ties go to the later channel; draws above the rounded total go to the last weighted channel
    indices = np.searchsorted(cdf, np.asarray(uniforms, dtype=float), side='right')
    last = int(np.flatnonzero(np.diff(np.concatenate(([0.0], cdf))) > 0)[-1])
    indices = np.minimum(indices, last)
    return [names[i] for i in indices.tolist()]


def sample_outcome(profile: EchoProfile, u: float) -> str:
    """
    Choose an outcome channel with probability proportional to its echo strength.

    Parameters
    ----------
    profile : EchoProfile
        Echo profile without deficit.
    u : float
        The trial's uniform draw in [0, 1).

    Returns
    -------
    str
        The channel whose cumulative interval contains u, channels taken in
        declared order; a draw exactly on a boundary goes to the later channel.

    Raises
    ------
    DeficitPresent
        If the profile has unabsorbed weight.
    """
    return sample_outcomes(profile, [u])[0]


def run_trials(setup: Setup, n: int, seed: int, report: Optional[ConsistencyReport] = None) -> TrialBatch:
    """
    Run n independent transaction trials.

    Parameters
    ----------
    setup : Setup
        A well-posed setup.
    n : int
        Number of trials (>= 0).
    seed : int
        64-bit seed; identical (setup, n, seed) give identical batches.
    report : Optional[ConsistencyReport]
        A classification of the same setup, to avoid enumerating again.

    Returns
    -------
    TrialBatch
        Records ordered by trial index and per-channel frequencies.

    Raises
    ------
    NotWellPosed
        If the setup is pathological.
    """
    if n < 0:
        raise ValueError(f"The number of trials must be non-negative, got {n}.")
    report = report if report is not None else classify(setup)
    if not report.well_posed:
        raise NotWellPosed(setup.label, report.reasons)

    profiles = [echo_profile(setup, h) for h in report.histories]
    profile = profiles[0]
    assert all(profile.matches(p) for p in profiles[1:]), \
        f"The echo profile of well-posed setup '{setup.label}' depends on the history."

    transactions: Dict[str, Transaction] = {
        channel.name: resolve_transaction(setup, channel.name, report)
        for channel in setup.channels if channel.weight > TOLERANCE
    }
    if n == 0:
        return TrialBatch(setup_label=setup.label, seed=seed)

    logger.info(f"Running {n} trials of '{setup.label}' with seed {seed}.")
    outcomes = sample_outcomes(profile, trial_uniforms(seed, n))
    trials = tuple(TrialRecord(trial_index=i, outcome_channel=outcome,
                               completing_absorber=transactions[outcome].completing_absorber,
                               history=transactions[outcome].history)
                   for i, outcome in enumerate(outcomes))

    counts = Counter(outcomes)
    frequencies = {name: counts.get(name, 0) / n for name in setup.channel_names}
    logger.info("\tFrequencies: " + ", ".join(f"{k}={v:.4f}" for k, v in frequencies.items()))
    return TrialBatch(setup_label=setup.label, seed=seed, trials=trials, frequencies=frequencies)
