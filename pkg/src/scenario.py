# Experiment vocabulary: sources, channels, absorbers, contingency predicates and histories.
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Mapping, Optional, Tuple, Union

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 1e-6      # seconds; "soon after" a deadline
DEFAULT_HORIZON = 1e6       # meters; distance of the boundary stand-in
TOLERANCE = 1e-12

BOUNDARY = 'boundary'


class BoundaryCondition(str, Enum):
    """Long-distance boundary condition of a setup."""
    OPEN = 'open'
    PERFECT = 'perfect'
    BIGBANG = 'bigbang'


@dataclass(frozen=True)
class Source:
    emission_time: float
    speed: float
    position: float = 0.0


@dataclass(frozen=True)
class Channel:
    """
    One outgoing branch of the offer wave.

    Attributes
    ----------
    name : str
        Channel name, unique within a setup.
    direction : Union[float, str]
        Signed unit (-1 left, +1 right) or a named solid-angle sector.
    amplitude : complex
        Channel amplitude c_k; its modulus squared is the channel weight.
    """
    name: str
    direction: Union[float, str]
    amplitude: complex

    @property
    def weight(self) -> float:
        return abs(self.amplitude) ** 2


@dataclass(frozen=True)
class Always:
    kind = 'always'

    @property
    def references(self) -> Tuple[str, ...]:
        return ()

    def holds(self, firing_times: Mapping[str, Optional[float]]) -> bool:
        return True


@dataclass(frozen=True)
class Fired:
    """Active iff absorber `ref` fired no later than `by`."""
    ref: str
    by: float
    kind = 'fired'

    @property
    def references(self) -> Tuple[str, ...]:
        return (self.ref,)

    def holds(self, firing_times: Mapping[str, Optional[float]]) -> bool:
        fired_at = firing_times.get(self.ref)
        return fired_at is not None and fired_at <= self.by


@dataclass(frozen=True)
class NotFired:
    """Active iff absorber `ref` has not fired by `by` (Maudlin's swing rule)."""
    ref: str
    by: float
    kind = 'not_fired'

    @property
    def references(self) -> Tuple[str, ...]:
        return (self.ref,)

    def holds(self, firing_times: Mapping[str, Optional[float]]) -> bool:
        return not Fired(self.ref, self.by).holds(firing_times)


ContingencyPredicate = Union[Always, Fired, NotFired]


@dataclass(frozen=True)
class Absorber:
    name: str
    channel: str
    distance: float
    activation: ContingencyPredicate = Always()

    @property
    def is_contingent(self) -> bool:
        return not isinstance(self.activation, Always)


@dataclass(frozen=True)
class Setup:
    """
    Immutable experiment description.

    Built and validated by `ScenarioBuilder`; never mutated afterwards, so one
    instance can be shared by any number of trial workers.

    Attributes
    ----------
    label : str
        Scenario label.
    source : Source
        The emitter.
    channels : Tuple[Channel, ...]
        Channels in declared order (the order used for sampling and reports).
    absorbers : Tuple[Absorber, ...]
        Absorbers in declared order (the bit order of activation masks).
    boundary : BoundaryCondition
        Open, PerfectAbsorber or BigBangReflector.
    epsilon : float
        Default slack added to a referenced absorber's arrival time.
    horizon : float
        Distance of the virtual boundary absorber.
    big_bang_time : Optional[float]
        Time of the reflecting singularity; None means the lookback horizon.
    detector_chain : tuple
        Optional chain of `Detector` objects for the entanglement model.
    """
    label: str
    source: Source
    channels: Tuple[Channel, ...]
    absorbers: Tuple[Absorber, ...]
    boundary: BoundaryCondition = BoundaryCondition.OPEN
    epsilon: float = DEFAULT_EPSILON
    horizon: float = DEFAULT_HORIZON
    big_bang_time: Optional[float] = None
    detector_chain: tuple = ()

    def channel(self, name: str) -> Channel:
        for channel in self.channels:
            if channel.name == name:
                return channel
        raise KeyError(f"Channel '{name}' is not part of setup '{self.label}'.")

    def absorber(self, name: str) -> Absorber:
        for absorber in self.absorbers:
            if absorber.name == name:
                return absorber
        raise KeyError(f"Absorber '{name}' is not part of setup '{self.label}'.")

    def absorbers_on(self, channel_name: str) -> Tuple[Absorber, ...]:
        return tuple(a for a in self.absorbers if a.channel == channel_name)

    @property
    def channel_names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.channels)

    @property
    def absorber_names(self) -> Tuple[str, ...]:
        return tuple(a.name for a in self.absorbers)

    @property
    def earliest_time(self) -> float:
        """Earliest time tracked by the advanced-wave ledger."""
        if self.boundary is BoundaryCondition.BIGBANG and self.big_bang_time is not None:
            return self.big_bang_time
        return self.source.emission_time - self.horizon / self.source.speed

    def with_boundary(self, boundary: BoundaryCondition, label: Optional[str] = None) -> 'Setup':
        """Return a copy of the setup under another boundary condition."""
        return Setup(label=label or self.label, source=self.source, channels=self.channels,
                     absorbers=self.absorbers, boundary=BoundaryCondition(boundary),
                     epsilon=self.epsilon, horizon=self.horizon, big_bang_time=self.big_bang_time,
                     detector_chain=self.detector_chain)


@dataclass(frozen=True)
class History:
    """
    One complete space-time account of a run.

    Attributes
    ----------
    activations : Dict[str, bool]
        Whether each absorber is in place (active) in this run.
    outcome_channel : str
        Channel along which the particle is absorbed.
    firing_times : Dict[str, Optional[float]]
        Firing time per absorber (None when it does not fire). Holds the key
        `BOUNDARY` when the boundary stand-in absorbs the particle.
    """
    activations: Dict[str, bool]
    outcome_channel: str
    firing_times: Dict[str, Optional[float]] = field(default_factory=dict)

    def __post_init__(self):
        firing = [n for n, t in self.firing_times.items() if t is not None]
        assert len(firing) == 1, f"Exactly one absorber must fire, got {firing}."
        assert firing[0] == BOUNDARY or self.activations.get(firing[0], False), \
            f"The firing absorber '{firing[0]}' is not active."
        for name, t in self.firing_times.items():
            assert t is None or name == BOUNDARY or self.activations.get(name, False), \
                f"Inactive absorber '{name}' carries a firing time."

    def __hash__(self):
        return hash(self.key())

    def key(self) -> tuple:
        return (self.outcome_channel,
                tuple(sorted(self.activations.items())),
                tuple(sorted((n, t) for n, t in self.firing_times.items() if t is not None)))

    @property
    def firer(self) -> str:
        return next(n for n, t in self.firing_times.items() if t is not None)

    @property
    def firing_time(self) -> float:
        return self.firing_times[self.firer]

    def bitmask(self, absorber_names) -> int:
        """Activation assignment as an integer, bit i for the i-th absorber name."""
        return sum(1 << i for i, name in enumerate(absorber_names) if self.activations.get(name, False))

    def to_dict(self) -> dict:
        return {
            'outcome_channel': self.outcome_channel,
            'activations': dict(self.activations),
            'firer': self.firer,
            'firing_time': self.firing_time,
        }


def arrival_time(setup: Setup, absorber: Absorber) -> float:
    """
    Time at which the offer wave reaches an absorber, t0 + R / v.

    Parameters
    ----------
    setup : Setup
        The setup the absorber belongs to.
    absorber : Absorber
        The absorber.

    Returns
    -------
    float
        Arrival time in seconds.
    """
    return setup.source.emission_time + absorber.distance / setup.source.speed


def boundary_arrival_time(setup: Setup) -> float:
    return setup.source.emission_time + setup.horizon / setup.source.speed


def first_absorber(setup: Setup, channel: Channel, history: History) -> Optional[Absorber]:
    """
    Nearest active absorber on a channel; nearer absorbers shadow farther ones.

    Parameters
    ----------
    setup : Setup
        The setup.
    channel : Channel
        The channel to inspect.
    history : History
        Provides the activation of every absorber on the channel.

    Returns
    -------
    Optional[Absorber]
        The active absorber with minimal distance, or None when no absorber on
        the channel is active (the boundary condition then decides). When
        several active absorbers share that distance the one declared first is
        returned; `nearest_active_absorbers` exposes the tie.
    """
    nearest = nearest_active_absorbers(setup, channel, history)
    return nearest[0] if nearest else None


def nearest_active_absorbers(setup: Setup, channel: Channel, history: History) -> Tuple[Absorber, ...]:
    """All active absorbers of a channel at the minimal active distance, in declared order."""
    active = [a for a in setup.absorbers_on(channel.name) if history.activations[a.name]]
    if not active:
        return ()
    distance = min(a.distance for a in active)
    return tuple(a for a in active if a.distance == distance)
