# Atemporal consistency: enumerate self-consistent histories, classify setups, resolve transactions.
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .exceptions import NoConsistentHistory, NotWellPosed, TooLarge
from .scenario import (BOUNDARY, TOLERANCE, Always, BoundaryCondition, History, Setup, arrival_time,
                       boundary_arrival_time, first_absorber, nearest_active_absorbers)
from .wave_engine import echo_profile

logger = logging.getLogger(__name__)

MAX_ABSORBERS = 20

WELL_POSED = 'WellPosed'
PATHOLOGICAL = 'Pathological'
ESCAPING_OFFER = 'EscapingOffer'
OUTCOME_AMBIGUITY = 'OutcomeAmbiguity'


@dataclass(frozen=True)
class Reason:
    tag: str
    channel: str

    def __str__(self):
        return f"{self.tag}({self.channel})"


@dataclass(frozen=True)
class ConsistencyReport:
    """
    Result of classifying a setup.

    Attributes
    ----------
    histories : Tuple[History, ...]
        Every predicate-consistent history, sorted by outcome channel then
        activation bitmask.
    classification : str
        'WellPosed' or 'Pathological'.
    reasons : Tuple[Reason, ...]
        Offending channels with their reason tag; empty when well-posed.
    per_outcome : Dict[str, int]
        Number of consistent histories per channel.
    """
    histories: Tuple[History, ...]
    classification: str
    reasons: Tuple[Reason, ...] = ()
    per_outcome: Dict[str, int] = field(default_factory=dict)

    @property
    def well_posed(self) -> bool:
        return self.classification == WELL_POSED

    def to_dict(self) -> dict:
        return {
            'classification': self.classification,
            'reasons': [str(r) for r in self.reasons],
            'histories': [h.to_dict() for h in self.histories],
            'per_outcome': dict(self.per_outcome),
        }


@dataclass(frozen=True)
class Transaction:
    """The completed emitter-absorber handshake for one outcome channel."""
    outcome_channel: str
    completing_absorber: str
    history: History

    def __post_init__(self):
        assert self.history.outcome_channel == self.outcome_channel, \
            f"Transaction on '{self.outcome_channel}' witnessed by a history on '{self.history.outcome_channel}'."
        assert self.history.firer == self.completing_absorber, \
            f"'{self.completing_absorber}' completes but '{self.history.firer}' fires."


def _candidate_firings(setup: Setup):
    """Every (channel, firer, firing time) a history could have."""
    for channel in setup.channels:
        for absorber in setup.absorbers_on(channel.name):
            yield channel, absorber.name, arrival_time(setup, absorber)
        if setup.boundary is not BoundaryCondition.OPEN:
            yield channel, BOUNDARY, boundary_arrival_time(setup)


def enumerate_histories(setup: Setup) -> List[History]:
    """
    All predicate-consistent histories of a setup.

    Predicates only look at the firing record, so a candidate firing forces
    every activation. The candidate is kept when the forced activations make
    the firer the first active absorber of its channel (or, for the boundary
    stand-in, leave the channel without any active absorber). Predicates are
    evaluated against the completed history, never a temporal prefix.

    Parameters
    ----------
    setup : Setup
        The setup, with at most 20 absorbers.

    Returns
    -------
    List[History]
        Histories sorted by outcome channel (declared order) then activation bitmask.

    Raises
    ------
    TooLarge
        If the setup has more than 20 absorbers.
    """
    if len(setup.absorbers) > MAX_ABSORBERS:
        raise TooLarge(f"Setup '{setup.label}' has {len(setup.absorbers)} absorbers "
                       f"(at most {MAX_ABSORBERS} can be enumerated).")

    histories = []
    for channel, firer, fired_at in _candidate_firings(setup):
        firing_times: Dict[str, Optional[float]] = {name: None for name in setup.absorber_names}
        firing_times[firer] = fired_at
        activations = {a.name: a.activation.holds(firing_times) for a in setup.absorbers}

        if firer != BOUNDARY and not activations[firer]:
            continue
        history = History(activations=activations, outcome_channel=channel.name, firing_times=firing_times)
        first = first_absorber(setup, channel, history)
        if (first.name if first is not None else BOUNDARY) != firer:
            continue
        histories.append(history)

    order = {name: i for i, name in enumerate(setup.channel_names)}
    histories.sort(key=lambda h: (order[h.outcome_channel], h.bitmask(setup.absorber_names)))
    logger.info(f"Setup '{setup.label}' has {len(histories)} consistent histories.")
    for history in histories:
        logger.debug(f"\t{history.to_dict()}")
    return histories


def classify(setup: Setup) -> ConsistencyReport:
    """
    Classify a setup as well-posed or pathological.

    A nonzero-weight channel is tagged OutcomeAmbiguity when it does not have
    exactly one consistent history or when two active absorbers tie for
    nearest in its history. Under the Open boundary a channel is tagged
    EscapingOffer when no absorber on it is unconditionally present, whatever
    its weight, or when it has nonzero weight and a consistent history leaves
    it without any active absorber.

    Parameters
    ----------
    setup : Setup
        The setup.

    Returns
    -------
    ConsistencyReport
        Histories, classification, reasons and per-outcome counts.
    """
    histories = enumerate_histories(setup)
    counts = Counter(h.outcome_channel for h in histories)
    per_outcome = {name: counts.get(name, 0) for name in setup.channel_names}

    reasons = []
    for channel in setup.channels:
        nonzero = channel.weight > TOLERANCE
        if setup.boundary is BoundaryCondition.OPEN:
            guaranteed = any(isinstance(a.activation, Always) for a in setup.absorbers_on(channel.name))
            escapes = nonzero and any(first_absorber(setup, channel, h) is None for h in histories)
            if escapes or not guaranteed:
                reasons.append(Reason(ESCAPING_OFFER, channel.name))
        if not nonzero:
            continue
        tied = any(len(nearest_active_absorbers(setup, channel, h)) > 1
                   for h in histories if h.outcome_channel == channel.name)
        if per_outcome[channel.name] != 1 or tied:
            reasons.append(Reason(OUTCOME_AMBIGUITY, channel.name))

    classification = PATHOLOGICAL if reasons else WELL_POSED
    logger.info(f"Setup '{setup.label}' is {classification}"
                + (f": {', '.join(str(r) for r in reasons)}" if reasons else "."))
    return ConsistencyReport(histories=tuple(histories), classification=classification,
                             reasons=tuple(reasons), per_outcome=per_outcome)


def resolve_transaction(setup: Setup, outcome: str, report: Optional[ConsistencyReport] = None) -> Transaction:
    """
    The unique transaction completing along an outcome channel.

    Parameters
    ----------
    setup : Setup
        A well-posed setup.
    outcome : str
        Channel name with nonzero weight.
    report : Optional[ConsistencyReport]
        A classification of the same setup, to avoid enumerating again.

    Returns
    -------
    Transaction
        completing_absorber is 'boundary' when the boundary stand-in fires.

    Raises
    ------
    NotWellPosed
        If the setup is pathological.
    NoConsistentHistory
        If no consistent history ends on `outcome`.
    """
    report = report if report is not None else classify(setup)
    if not report.well_posed:
        raise NotWellPosed(setup.label, report.reasons)

    matching = [h for h in report.histories if h.outcome_channel == outcome]
    if not matching or setup.channel(outcome).weight <= TOLERANCE:
        raise NoConsistentHistory(f"No consistent history of '{setup.label}' ends on channel '{outcome}'.")

    history = matching[0]
    first = first_absorber(setup, setup.channel(outcome), history)
    transaction = Transaction(outcome_channel=outcome,
                              completing_absorber=first.name if first is not None else BOUNDARY,
                              history=history)
    return transaction


def source_observable_invariant(setup: Setup, report: Optional[ConsistencyReport] = None) -> bool:
    """
    Whether the source sees the same echo profile in every consistent history.

    When it does, nothing observable before emission distinguishes the
    possible futures.
    """
    report = report if report is not None else classify(setup)
    profiles = [echo_profile(setup, h) for h in report.histories]
    return all(profiles[0].matches(p) for p in profiles[1:])
