# Builds validated Setups from scenario documents and writes them back.
import logging
import math
from typing import Any, Dict, List, Mapping, Optional

import networkx as nx

from .entanglement_chain import Detector
from .exceptions import (CyclicContingency, DanglingReference, NormalizationError, SchemaError,
                         TransactionError)
from .scenario import (DEFAULT_EPSILON, DEFAULT_HORIZON, TOLERANCE, Absorber, Always,
                       BoundaryCondition, Channel, Fired, NotFired, Setup, Source, arrival_time)
from .utils import load_json

logger = logging.getLogger(__name__)

TOP_LEVEL_KEYS = {'label', 'source', 'channels', 'absorbers', 'boundary'}
OPTIONAL_TOP_LEVEL_KEYS = {'settings', 'detector_chain'}
PREDICATES = {'always': Always, 'fired': Fired, 'not_fired': NotFired}


class ContingencyGraph(nx.DiGraph):
    """
    Reference graph of contingency predicates.

    There is an edge u -> v when the activation of absorber v depends on
    whether absorber u fired. Edges are labelled FIRED_TO or NOT_FIRED_TO.
    """
    def __init__(self, absorbers: List[Absorber]):
        super().__init__()
        for absorber in absorbers:
            self.add_node(absorber.name, channel=absorber.channel)
        for absorber in absorbers:
            for ref in absorber.activation.references:
                self.add_edge(ref, absorber.name, label=absorber.activation.kind.upper() + '_TO')

    def check_acyclic(self) -> None:
        if not nx.is_directed_acyclic_graph(self):
            cycle = nx.find_cycle(self)
            raise CyclicContingency(f"Contingency predicates form a cycle: {cycle}")


class ScenarioBuilder:
    """
    Single-use builder turning one scenario document into a validated Setup.

    Parameters
    ----------
    document : Mapping[str, Any]
        Scenario description tree (see the README for the schema).
    """
    def __init__(self, document: Mapping[str, Any]):
        if not isinstance(document, Mapping):
            raise SchemaError("A scenario document must be a JSON object.")
        self.document = document
        self._used = False

    def build(self) -> Setup:
        """
        Validate the document and return the Setup it describes.

        Raises
        ------
        SchemaError
            Missing or unknown keys, malformed values, cyclic predicates.
        NormalizationError
            Channel weights do not sum to 1, or an amplitude exceeds 1.
        DanglingReference
            A predicate or absorber names something that does not exist.
        """
        if self._used:
            raise TransactionError("A ScenarioBuilder can only build once.")
        self._used = True

        doc = self.document
        check_keys(doc, TOP_LEVEL_KEYS, OPTIONAL_TOP_LEVEL_KEYS, 'scenario')

        label = doc['label']
        if not isinstance(label, str) or not label:
            raise SchemaError("'label' must be a non-empty string.")

        settings = doc.get('settings', {})
        check_keys(settings, set(), {'epsilon', 'horizon', 'big_bang_time'}, 'settings')
        epsilon = number(settings.get('epsilon', DEFAULT_EPSILON), 'settings.epsilon')
        horizon = number(settings.get('horizon', DEFAULT_HORIZON), 'settings.horizon')
        big_bang_time = settings.get('big_bang_time')
        if big_bang_time is not None:
            big_bang_time = number(big_bang_time, 'settings.big_bang_time')
        if epsilon < 0 or horizon <= 0:
            raise SchemaError("settings.epsilon must be >= 0 and settings.horizon > 0.")

        source = self.parse_source(doc['source'])
        if big_bang_time is not None and big_bang_time >= source.emission_time:
            raise SchemaError("settings.big_bang_time must precede the emission time.")

        channels = self.parse_channels(doc['channels'])
        boundary = self.parse_boundary(doc['boundary'])

        raw_absorbers = doc['absorbers']
        if not isinstance(raw_absorbers, list):
            raise SchemaError("'absorbers' must be a list.")
        # predicates are parsed once every distance is known
        absorbers = [self.parse_absorber(item, i) for i, item in enumerate(raw_absorbers)]
        unique_names([a.name for a in absorbers], 'absorber')

        channel_names = {c.name for c in channels}
        for absorber in absorbers:
            if absorber.channel not in channel_names:
                raise DanglingReference(f"Absorber '{absorber.name}' sits on unknown channel '{absorber.channel}'.")
            if boundary is not BoundaryCondition.OPEN and absorber.distance >= horizon:
                raise SchemaError(f"Absorber '{absorber.name}' lies beyond the boundary horizon ({horizon} m).")

        check_normalization(channels)

        setup = Setup(label=label, source=source, channels=tuple(channels), absorbers=(),
                      boundary=boundary, epsilon=epsilon, horizon=horizon, big_bang_time=big_bang_time)
        by_name = {a.name: a for a in absorbers}
        absorbers = [self.attach_predicate(setup, a, raw.get('activation'), by_name)
                     for a, raw in zip(absorbers, raw_absorbers)]
        ContingencyGraph(absorbers).check_acyclic()

        chain = tuple(self.parse_detector(item) for item in doc.get('detector_chain', []))
        unique_names([d.name for d in chain], 'detector')

        setup = Setup(label=label, source=source, channels=tuple(channels), absorbers=tuple(absorbers),
                      boundary=boundary, epsilon=epsilon, horizon=horizon, big_bang_time=big_bang_time,
                      detector_chain=chain)
        self.warn_on_late_deadlines(setup)
        logger.info(f"Built setup '{label}': {len(channels)} channels, {len(absorbers)} absorbers, "
                    f"boundary {boundary.value}.")
        return setup

    @staticmethod
    def parse_source(raw) -> Source:
        check_keys(raw, {'t0', 'v'}, {'position'}, 'source')
        source = Source(emission_time=number(raw['t0'], 'source.t0'),
                        speed=number(raw['v'], 'source.v'),
                        position=number(raw.get('position', 0.0), 'source.position'))
        if source.speed <= 0:
            raise SchemaError(f"source.v must be positive, got {source.speed}.")
        return source

    @staticmethod
    def parse_channels(raw) -> List[Channel]:
        if not isinstance(raw, list) or not raw:
            raise SchemaError("'channels' must be a non-empty list.")
        channels = []
        for i, item in enumerate(raw):
            check_keys(item, {'name', 'direction', 'amplitude'}, set(), f'channels[{i}]')
            direction = item['direction']
            if isinstance(direction, bool) or not isinstance(direction, (int, float, str)):
                raise SchemaError(f"channels[{i}].direction must be a number or a sector name.")
            channel = Channel(name=text(item['name'], f'channels[{i}].name'),
                              direction=direction,
                              amplitude=parse_complex(item['amplitude'], f'channels[{i}].amplitude'))
            if abs(channel.amplitude) > 1 + TOLERANCE:
                raise NormalizationError(f"Channel '{channel.name}' has |amplitude| > 1.")
            channels.append(channel)
        unique_names([c.name for c in channels], 'channel')
        return channels

    @staticmethod
    def parse_boundary(raw) -> BoundaryCondition:
        try:
            return BoundaryCondition(raw)
        except ValueError:
            raise SchemaError(f"'boundary' must be one of {[b.value for b in BoundaryCondition]}, got {raw!r}.")

    @staticmethod
    def parse_absorber(raw, i: int) -> Absorber:
        check_keys(raw, {'name', 'channel', 'distance'}, {'activation'}, f'absorbers[{i}]')
        absorber = Absorber(name=text(raw['name'], f'absorbers[{i}].name'),
                            channel=text(raw['channel'], f'absorbers[{i}].channel'),
                            distance=number(raw['distance'], f'absorbers[{i}].distance'))
        if absorber.distance <= 0:
            raise SchemaError(f"Absorber '{absorber.name}' must sit at a positive distance.")
        return absorber

    @staticmethod
    def attach_predicate(setup: Setup, absorber: Absorber, raw: Optional[Mapping],
                         absorbers: Dict[str, Absorber]) -> Absorber:
        if raw is None:
            return absorber
        check_keys(raw, {'kind'}, {'ref', 'by'}, f"absorbers['{absorber.name}'].activation")
        kind = raw['kind']
        if kind not in PREDICATES:
            raise SchemaError(f"Unknown activation kind {kind!r} for absorber '{absorber.name}'.")
        if kind == 'always':
            if 'ref' in raw or 'by' in raw:
                raise SchemaError(f"An 'always' activation takes no 'ref' or 'by' (absorber '{absorber.name}').")
            return absorber

        if 'ref' not in raw:
            raise SchemaError(f"Activation '{kind}' of absorber '{absorber.name}' needs a 'ref'.")
        ref = text(raw['ref'], f"absorbers['{absorber.name}'].activation.ref")
        if ref not in absorbers:
            raise DanglingReference(f"Absorber '{absorber.name}' is contingent on unknown absorber '{ref}'.")
        if 'by' in raw:
            by = number(raw['by'], f"absorbers['{absorber.name}'].activation.by")
        else:
            by = arrival_time(setup, absorbers[ref]) + setup.epsilon
        if by < setup.source.emission_time:
            raise SchemaError(f"Deadline of absorber '{absorber.name}' precedes the emission time.")

        return Absorber(name=absorber.name, channel=absorber.channel, distance=absorber.distance,
                        activation=PREDICATES[kind](ref=ref, by=by))

    @staticmethod
    def parse_detector(raw) -> Detector:
        check_keys(raw, {'name', 'c1', 'c2'}, {'irreversible'}, 'detector_chain[]')
        irreversible = raw.get('irreversible', True)
        if not isinstance(irreversible, bool):
            raise SchemaError("detector_chain[].irreversible must be a boolean.")
        return Detector(name=text(raw['name'], 'detector_chain[].name'),
                        c1=parse_complex(raw['c1'], 'detector_chain[].c1'),
                        c2=parse_complex(raw['c2'], 'detector_chain[].c2'),
                        irreversible=irreversible)

    @staticmethod
    def warn_on_late_deadlines(setup: Setup) -> None:
        for absorber in setup.absorbers:
            if absorber.is_contingent and absorber.activation.by > arrival_time(setup, absorber):
                logger.warning(f"Absorber '{absorber.name}' is decided at t={absorber.activation.by} "
                               f"but the offer wave reaches it at t={arrival_time(setup, absorber)}.")


def check_keys(raw, required: set, optional: set, where: str) -> None:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"'{where}' must be a JSON object.")
    missing = required - set(raw)
    unknown = set(raw) - required - optional
    if missing:
        raise SchemaError(f"'{where}' is missing keys: {sorted(missing)}")
    if unknown:
        raise SchemaError(f"'{where}' has unknown keys: {sorted(unknown)}")


def number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"'{where}' must be a finite number, got {value!r}.")
    return float(value)


def integer(value, where: str, lower: int = 0, upper: Optional[int] = None) -> int:
    """Non-bool integer in [lower, upper)."""
    if isinstance(value, bool) or not isinstance(value, int) or value < lower \
            or (upper is not None and value >= upper):
        bounds = f"[{lower}, {upper})" if upper is not None else f">= {lower}"
        raise SchemaError(f"'{where}' must be an integer {bounds}, got {value!r}.")
    return value


def text(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"'{where}' must be a non-empty string, got {value!r}.")
    return value


def parse_complex(raw, where: str) -> complex:
    check_keys(raw, {'re'}, {'im'}, where)
    return complex(number(raw['re'], where + '.re'), number(raw.get('im', 0.0), where + '.im'))


def unique_names(names: List[str], what: str) -> None:
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise SchemaError(f"Duplicate {what} names: {duplicates}")


def check_normalization(channels: List[Channel]) -> None:
    total = math.fsum(c.weight for c in channels)
    if abs(total - 1.0) > TOLERANCE:
        raise NormalizationError(f"Channel weights sum to {total!r}, expected 1.")


def build_scenario(document: Mapping[str, Any]) -> Setup:
    """
    Build a validated Setup from a scenario description tree.

    Parameters
    ----------
    document : Mapping[str, Any]
        Parsed scenario document.

    Returns
    -------
    Setup
        The validated, immutable setup.
    """
    return ScenarioBuilder(document).build()


def load_scenario(file_path: str) -> Setup:
    """Read a scenario document from disk and build it."""
    return build_scenario(load_json(file_path))


def serialize_scenario(setup: Setup) -> Dict[str, Any]:
    """
    Scenario document describing a Setup; building it gives back an equal Setup.

    Contingency deadlines are written out explicitly.
    """
    settings = {'epsilon': setup.epsilon, 'horizon': setup.horizon}
    if setup.big_bang_time is not None:
        settings['big_bang_time'] = setup.big_bang_time

    absorbers = []
    for absorber in setup.absorbers:
        activation = {'kind': absorber.activation.kind}
        if absorber.is_contingent:
            activation.update(ref=absorber.activation.ref, by=absorber.activation.by)
        absorbers.append({'name': absorber.name, 'channel': absorber.channel,
                          'distance': absorber.distance, 'activation': activation})

    document = {
        'label': setup.label,
        'source': {'t0': setup.source.emission_time, 'v': setup.source.speed,
                   'position': setup.source.position},
        'channels': [{'name': c.name, 'direction': c.direction,
                      'amplitude': {'re': c.amplitude.real, 'im': c.amplitude.imag}}
                     for c in setup.channels],
        'absorbers': absorbers,
        'boundary': setup.boundary.value,
        'settings': settings,
    }
    if setup.detector_chain:
        document['detector_chain'] = [d.to_dict() for d in setup.detector_chain]
    return document
