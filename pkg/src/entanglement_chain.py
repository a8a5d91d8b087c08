# Sequential particle-detector entanglement and branch-weight bookkeeping.
import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Tuple

import networkx as nx

from .exceptions import ConservationViolation, DuplicateDetector, NormalizationError
from .scenario import TOLERANCE

logger = logging.getLogger(__name__)

ACTIVATED = 'activated'
READY = 'ready'
ROOT = 'root'


@dataclass(frozen=True)
class Detector:
    """
    A detector the outgoing particle interacts with.

    The interaction takes the particle-detector state to
    c1 * (interacting part, detector activated) + c2 * (rest, detector ready).

    Attributes
    ----------
    name : str
        Detector name, unique within a chain.
    c1 : complex
        Coupling into the activated branch.
    c2 : complex
        Coupling into the ready branch.
    irreversible : bool
        Whether activation is an irreversible (macroscopic) record. Only
        irreversible detectors can send a confirmation wave.
    """
    name: str
    c1: complex
    c2: complex
    irreversible: bool = True

    def __post_init__(self):
        total = abs(self.c1) ** 2 + abs(self.c2) ** 2
        if abs(total - 1.0) > TOLERANCE:
            raise NormalizationError(
                f"Detector '{self.name}' couplings give |c1|^2 + |c2|^2 = {total!r}, expected 1.")

    def to_dict(self) -> dict:
        return {
            'name': self.name,
            'c1': {'re': self.c1.real, 'im': self.c1.imag},
            'c2': {'re': self.c2.real, 'im': self.c2.imag},
            'irreversible': self.irreversible,
        }


@dataclass(frozen=True)
class Leaf:
    path: Tuple[Tuple[str, bool], ...]
    amplitude: complex
    weight: float

    @property
    def label(self) -> str:
        return path_label(self.path)


@dataclass(frozen=True)
class BranchTree:
    chain: Tuple[Detector, ...]
    leaves: Tuple[Leaf, ...]

    @classmethod
    def root(cls) -> 'BranchTree':
        return cls(chain=(), leaves=(Leaf(path=(), amplitude=1 + 0j, weight=1.0),))

    @property
    def total_weight(self) -> float:
        return math.fsum(leaf.weight for leaf in self.leaves)


def path_label(path: Iterable[Tuple[str, bool]]) -> str:
    steps = [f"{name}:{ACTIVATED if activated else READY}" for name, activated in path]
    return "/".join(steps) if steps else ROOT


def interact(tree: BranchTree, detector: Detector) -> BranchTree:
    """
    Let every branch of the tree interact with one more detector.

    Parameters
    ----------
    tree : BranchTree
        Current branch tree.
    detector : Detector
        The next detector reached by the offer wave.

    Returns
    -------
    BranchTree
        New tree in which each leaf of weight w is split into an activated leaf
        of weight w|c1|^2 and a ready leaf of weight w|c2|^2.
    """
    if any(d.name == detector.name for d in tree.chain):
        raise DuplicateDetector(f"Detector '{detector.name}' is already in the chain.")

    leaves: List[Leaf] = []
    for leaf in tree.leaves:
        for activated, coupling in ((True, detector.c1), (False, detector.c2)):
            # zero-coupling branches vanish
            if coupling == 0:
                continue
            amplitude = leaf.amplitude * coupling
            leaves.append(Leaf(path=leaf.path + ((detector.name, activated),),
                               amplitude=amplitude,
                               weight=leaf.weight * abs(coupling) ** 2))
    return BranchTree(chain=tree.chain + (detector,), leaves=tuple(leaves))


def build_tree(chain: Iterable[Detector]) -> BranchTree:
    tree = BranchTree.root()
    for detector in chain:
        tree = interact(tree, detector)
    logger.debug(f"Branch tree over {len(tree.chain)} detectors has {len(tree.leaves)} leaves.")
    return tree


def confirmation_eligible(detector: Detector) -> bool:
    """Reversible (microscopic) entanglement never emits a confirmation wave."""
    return bool(detector.irreversible)


def transaction_capable_leaves(tree: BranchTree) -> Tuple[Leaf, ...]:
    """Leaves containing at least one activated irreversible detector."""
    eligible = {d.name for d in tree.chain if confirmation_eligible(d)}
    return tuple(leaf for leaf in tree.leaves
                 if any(activated and name in eligible for name, activated in leaf.path))


def terminal_distribution(tree: BranchTree) -> Dict[str, float]:
    """
    Leaf weights keyed by path label.

    Raises
    ------
    ConservationViolation
        If the weights do not sum to 1 within 1e-12.
    """
    distribution = {leaf.label: leaf.weight for leaf in tree.leaves}
    total = math.fsum(distribution.values())
    if abs(total - 1.0) > TOLERANCE:
        raise ConservationViolation(f"Branch weights sum to {total!r} over {len(distribution)} leaves.")
    return distribution


def branch_network(tree: BranchTree) -> nx.DiGraph:
    """
    The branch tree as a directed graph, root to leaves.

    Nodes carry the cumulative weight of every leaf below them and their depth;
    edges are labelled ACTIVATED or READY.
    """
    G = nx.DiGraph()
    G.add_node(ROOT, label='Root', weight=0.0, depth=0)
    for leaf in tree.leaves:
        G.nodes[ROOT]['weight'] += leaf.weight
        parent = ROOT
        for depth in range(1, len(leaf.path) + 1):
            node = path_label(leaf.path[:depth])
            if node not in G:
                G.add_node(node, label='Branch', weight=0.0, depth=depth)
            G.nodes[node]['weight'] += leaf.weight
            _, activated = leaf.path[depth - 1]
            G.add_edge(parent, node, label=(ACTIVATED if activated else READY).upper())
            parent = node
        G.nodes[parent]['label'] = 'Leaf'

    assert nx.is_tree(G), 'The branch network is not a tree.'
    return G
