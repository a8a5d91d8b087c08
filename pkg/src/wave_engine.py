# Offer and confirmation waves, echo profiles and the advanced-wave ledger.
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple, Union

import pandas as pd

from .exceptions import UnknownAbsorber
from .scenario import (BOUNDARY, TOLERANCE, Absorber, BoundaryCondition, Setup, History, arrival_time,
                       boundary_arrival_time, first_absorber)

logger = logging.getLogger(__name__)

ADVANCED = 'advanced'
REFLECTION = 'reflection'
SOURCE = 'source'


@dataclass(frozen=True)
class OfferAmplitude:
    """Retarded (offer) wave amplitude psi(r_i, t_i) at one absorber."""
    absorber: str
    value: complex
    arrival: float


@dataclass(frozen=True)
class ConfirmationStrength:
    """Strength psi psi* with which an absorber's confirmation reaches the source."""
    absorber: str
    value: float


@dataclass(frozen=True)
class EchoProfile:
    """
    Confirmation strength received at the source at emission time, per channel.

    Attributes
    ----------
    per_channel : Dict[str, float]
        Channel name to echo strength, in declared channel order.
    deficit : float
        Weight of channels that no absorber confirms (Open boundary only).
    """
    per_channel: Dict[str, float]
    deficit: float = 0.0

    @property
    def total(self) -> float:
        return math.fsum(self.per_channel.values()) + self.deficit

    def matches(self, other: 'EchoProfile', tol: float = TOLERANCE) -> bool:
        if list(self.per_channel) != list(other.per_channel):
            return False
        return (all(abs(self.per_channel[k] - other.per_channel[k]) <= tol for k in self.per_channel)
                and abs(self.deficit - other.deficit) <= tol)

    def to_dict(self) -> dict:
        return {'per_channel': dict(self.per_channel), 'deficit': self.deficit}


@dataclass(frozen=True)
class LedgerRegion:
    t_start: float
    t_end: float
    channel: str
    net: complex
    kind: str = ADVANCED
    terms: Tuple[Tuple[str, complex], ...] = ()

    @property
    def flagged(self) -> bool:
        return self.kind == ADVANCED and abs(self.net) > TOLERANCE

    def to_dict(self) -> dict:
        return {'t_start': self.t_start, 't_end': self.t_end, 'channel': self.channel, 'kind': self.kind,
                'net_re': self.net.real, 'net_im': self.net.imag}


@dataclass(frozen=True)
class AdvancedLedger:
    """Net advanced-wave amplitude in every pre-emission region of every channel."""
    regions: Tuple[LedgerRegion, ...]
    boundary_used: BoundaryCondition

    @property
    def max_residual(self) -> float:
        return max((abs(r.net) for r in self.regions if r.kind == ADVANCED), default=0.0)

    @property
    def flagged(self) -> Tuple[LedgerRegion, ...]:
        return tuple(r for r in self.regions if r.flagged)

    @property
    def is_clean(self) -> bool:
        return not self.flagged

    def residual_weight(self) -> float:
        """Sum over channels of |net|^2 in the channel's latest pre-emission region."""
        latest = {}
        for region in self.regions:
            if region.kind == ADVANCED:
                latest[region.channel] = region
        return math.fsum(abs(r.net) ** 2 for r in latest.values())

    def to_records(self) -> List[dict]:
        return [r.to_dict() for r in self.regions]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.to_records(),
                            columns=['t_start', 't_end', 'channel', 'kind', 'net_re', 'net_im'])


def _resolve_absorber(setup: Setup, absorber: Union[Absorber, str]) -> Absorber:
    name = absorber if isinstance(absorber, str) else absorber.name
    try:
        found = setup.absorber(name)
    except KeyError:
        raise UnknownAbsorber(f"Absorber '{name}' is not part of setup '{setup.label}'.")
    if not isinstance(absorber, str) and found != absorber:
        raise UnknownAbsorber(f"Absorber '{name}' differs from the one in setup '{setup.label}'.")
    return found


def offer_amplitude(setup: Setup, history: History, absorber: Union[Absorber, str]) -> OfferAmplitude:
    """
    Offer-wave amplitude reaching an absorber.

    Parameters
    ----------
    setup : Setup
        The setup.
    history : History
        Predicate-consistent history giving the activations.
    absorber : Union[Absorber, str]
        The absorber or its name.

    Returns
    -------
    OfferAmplitude
        The channel amplitude c_k when the absorber is the first active absorber
        of its channel, 0 when it is shadowed or inactive.
    """
    absorber = _resolve_absorber(setup, absorber)
    channel = setup.channel(absorber.channel)
    first = first_absorber(setup, channel, history)
    value = channel.amplitude if first is not None and first.name == absorber.name else 0j
    return OfferAmplitude(absorber=absorber.name, value=complex(value), arrival=arrival_time(setup, absorber))


def confirmation_strength(offer: OfferAmplitude) -> ConfirmationStrength:
    """Confirmation strength psi psi* for an offer amplitude."""
    product = offer.value * offer.value.conjugate()
    assert abs(product.imag) < TOLERANCE, f"psi psi* has an imaginary part {product.imag!r}."
    return ConfirmationStrength(absorber=offer.absorber, value=product.real)


def echo_profile(setup: Setup, history: History) -> EchoProfile:
    """
    Per-channel confirmation strength received at the source.

    A channel without any active absorber is credited its full weight under the
    PerfectAbsorber and BigBangReflector boundaries; under Open that weight is
    reported as deficit.

    Parameters
    ----------
    setup : Setup
        The setup.
    history : History
        Predicate-consistent history.

    Returns
    -------
    EchoProfile
        Echo strengths in declared channel order.
    """
    per_channel = {}
    deficit = []
    for channel in setup.channels:
        confirming = first_absorber(setup, channel, history)
        if confirming is not None:
            per_channel[channel.name] = confirmation_strength(offer_amplitude(setup, history, confirming)).value
        elif setup.boundary is BoundaryCondition.OPEN:
            per_channel[channel.name] = 0.0
            deficit.append(channel.weight)
        else:
            per_channel[channel.name] = channel.weight

    profile = EchoProfile(per_channel=per_channel, deficit=math.fsum(deficit))
    assert abs(profile.total - 1.0) <= TOLERANCE, f"Echo profile of '{setup.label}' sums to {profile.total!r}."
    return profile


def _region_edges(setup: Setup, channel_name: str) -> List[float]:
    t0, v = setup.source.emission_time, setup.source.speed
    earliest = setup.earliest_time
    edges = {t0, earliest}
    edges.update(t0 - a.distance / v for a in setup.absorbers_on(channel_name))
    return sorted(t for t in edges if earliest <= t <= t0)


def confirmation_wave(offer: OfferAmplitude) -> complex:
    """Advanced amplitude -conj(psi) that an absorber sends back to the source."""
    return -offer.value.conjugate()


def _confirmation_terms(setup: Setup, history: History, channel) -> List[Tuple[str, complex]]:
    confirming = first_absorber(setup, channel, history)
    if confirming is not None:
        return [(confirming.name, confirmation_wave(offer_amplitude(setup, history, confirming)))]
    if setup.boundary is BoundaryCondition.PERFECT:
        offer = OfferAmplitude(absorber=BOUNDARY, value=complex(channel.amplitude),
                               arrival=boundary_arrival_time(setup))
        return [(BOUNDARY, confirmation_wave(offer))]
    return []


def advanced_ledger(setup: Setup, history: History) -> AdvancedLedger:
    """
    Net advanced-wave amplitude before emission, per channel and region.

    Every region sums its contributing terms: the source's advanced component
    conj(c_k), the confirmation wave -conj(psi) of the channel's first active
    absorber (or of the boundary absorber under PerfectAbsorber), and under
    BigBangReflector the reflection of whatever remains, phase-shifted by pi.
    A `reflection` row records the reflected amplitude at the singularity.
    Under Open nothing cancels an unconfirmed component.

    Parameters
    ----------
    setup : Setup
        The setup.
    history : History
        Only absorbers active in this history contribute confirmations.

    Returns
    -------
    AdvancedLedger
        Regions ordered by channel (declared order) then time; `terms` of each
        region names every contribution to its net amplitude.
    """
    regions = []
    for channel in setup.channels:
        terms = [(SOURCE, complex(channel.amplitude).conjugate())]
        terms.extend(_confirmation_terms(setup, history, channel))

        if setup.boundary is BoundaryCondition.BIGBANG:
            reflected = -sum((value for _, value in terms), 0j)
            regions.append(LedgerRegion(t_start=setup.earliest_time, t_end=setup.earliest_time,
                                        channel=channel.name, net=reflected, kind=REFLECTION,
                                        terms=((REFLECTION, reflected),)))
            terms.append((REFLECTION, reflected))

        net = sum((value for _, value in terms), 0j)
        edges = _region_edges(setup, channel.name)
        for t_start, t_end in zip(edges[:-1], edges[1:]):
            regions.append(LedgerRegion(t_start=t_start, t_end=t_end, channel=channel.name, net=net,
                                        terms=tuple(terms)))

    ledger = AdvancedLedger(regions=tuple(regions), boundary_used=setup.boundary)
    logger.debug(f"Ledger of '{setup.label}' for outcome {history.outcome_channel}: "
                 f"max residual {ledger.max_residual:.3g}")
    return ledger
