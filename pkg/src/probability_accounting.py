# Big-space and many-spaces probability tables over ensembles of trial batches.
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import pandas as pd

from .exceptions import EmptyBatch, PriorsNotNormalized, SchemaError
from .scenario import BOUNDARY, TOLERANCE, Setup
from .trial_sampler import TrialBatch

logger = logging.getLogger(__name__)

NORMALIZATION_TOLERANCE = 1e-9

CellId = Tuple[str, str]


@dataclass(frozen=True)
class Cell:
    """One (setup, initial state) cell of an ensemble with its batch and prior."""
    setup_id: str
    state_id: str
    batch: TrialBatch
    prior: float = 0.0

    @property
    def cell_id(self) -> CellId:
        return (self.setup_id, self.state_id)


@dataclass(frozen=True)
class RunEnsemble:
    cells: Tuple[Cell, ...]

    def __post_init__(self):
        ids = [c.cell_id for c in self.cells]
        if len(ids) != len(set(ids)):
            raise SchemaError(f"Ensemble cell ids must be unique, got {ids}.")
        for cell in self.cells:
            if not cell.prior >= 0:
                raise SchemaError(f"Prior of cell {cell.cell_id} must be >= 0, got {cell.prior}.")

    @classmethod
    def uniform(cls, cells) -> 'RunEnsemble':
        """Ensemble giving every cell the same prior; the only default prior offered."""
        cells = list(cells)
        return cls(tuple(Cell(c.setup_id, c.state_id, c.batch, 1.0 / len(cells)) for c in cells))

    def priors_normalized(self) -> bool:
        return abs(math.fsum(c.prior for c in self.cells) - 1.0) <= TOLERANCE


@dataclass(frozen=True)
class BigSpaceTables:
    joint: Dict[Tuple[str, str, str], float]
    marginals: Dict[CellId, float]
    conditionals: Dict[CellId, Dict[str, float]]


@dataclass(frozen=True)
class AccountingReport:
    """
    Big-space and many-spaces tables of one ensemble.

    Attributes
    ----------
    joint : Dict[Tuple[str, str, str], float]
        P(setup, state, outcome).
    marginals : Dict[CellId, float]
        P(setup, state), summed over outcomes.
    conditionals : Dict[CellId, Dict[str, float]]
        P(outcome | setup, state); cells with zero prior have no entry.
    many_spaces : Dict[CellId, Dict[str, float]]
        Independent per-cell outcome distributions.
    max_divergence : float
        Largest |conditional - many_spaces| over cells and outcomes.
    """
    joint: Dict[Tuple[str, str, str], float]
    marginals: Dict[CellId, float]
    conditionals: Dict[CellId, Dict[str, float]]
    many_spaces: Dict[CellId, Dict[str, float]]
    max_divergence: float = field(default=0.0)

    def to_dict(self) -> dict:
        joint = {}
        for (setup_id, state_id, outcome), p in self.joint.items():
            joint.setdefault(setup_id, {}).setdefault(state_id, {})[outcome] = p
        return {
            'joint': joint,
            'conditionals': _nest(self.conditionals),
            'many_spaces': _nest(self.many_spaces),
            'max_divergence': self.max_divergence,
        }

    def to_frame(self) -> pd.DataFrame:
        """Flat table with columns setup, state, outcome, mode, probability."""
        rows = [(s, k, x, 'joint', p) for (s, k, x), p in self.joint.items()]
        for mode, table in (('conditional', self.conditionals), ('many_spaces', self.many_spaces)):
            rows.extend((s, k, x, mode, p) for (s, k), dist in table.items() for x, p in dist.items())
        return pd.DataFrame(rows, columns=['setup', 'state', 'outcome', 'mode', 'probability'])


def _nest(table: Dict[CellId, Dict[str, float]]) -> dict:
    nested = {}
    for (setup_id, state_id), dist in table.items():
        nested.setdefault(setup_id, {})[state_id] = dict(dist)
    return nested


def _cell_counts(cell: Cell) -> Tuple[Dict[str, int], int]:
    n = len(cell.batch)
    if n == 0:
        raise EmptyBatch(f"Cell {cell.cell_id} has an empty batch.")
    return cell.batch.counts(), n


def _check_cells(ensemble: RunEnsemble) -> None:
    if not ensemble.cells:
        raise EmptyBatch("The ensemble has no cells.")


def big_space(ensemble: RunEnsemble) -> BigSpaceTables:
    """
    Joint, marginal and conditional tables treating setup and state as random variables.

    The joint probability of a cell and outcome is the cell prior times the
    outcome frequency of the cell's batch; marginals sum the joint over
    outcomes, and conditionals divide the joint by the marginal. Arithmetic is
    carried out on exact rationals and converted to float once.

    Parameters
    ----------
    ensemble : RunEnsemble
        Cells with normalized priors.

    Returns
    -------
    BigSpaceTables
        The joint, marginal and conditional tables.

    Raises
    ------
    PriorsNotNormalized
        If priors do not sum to 1 within 1e-12.
    EmptyBatch
        If the ensemble or any of its batches is empty.
    """
    _check_cells(ensemble)
    if not ensemble.priors_normalized():
        raise PriorsNotNormalized(f"Priors sum to {math.fsum(c.prior for c in ensemble.cells)!r}, expected 1.")

    joint, marginals, conditionals = {}, {}, {}
    for cell in ensemble.cells:
        counts, n = _cell_counts(cell)
        prior = Fraction(cell.prior)
        cell_joint = {x: prior * Fraction(count, n) for x, count in counts.items()}
        marginal = sum(cell_joint.values(), Fraction(0))

        for x, p in cell_joint.items():
            joint[(cell.setup_id, cell.state_id, x)] = float(p)
        marginals[cell.cell_id] = float(marginal)
        if marginal > 0:
            conditionals[cell.cell_id] = {x: float(p / marginal) for x, p in cell_joint.items()}

    return BigSpaceTables(joint=joint, marginals=marginals, conditionals=conditionals)


def many_spaces(ensemble: RunEnsemble) -> Dict[CellId, Dict[str, float]]:
    """
    One independent outcome distribution per cell; priors are ignored.

    Raises
    ------
    EmptyBatch
        If the ensemble or any of its batches is empty.
    """
    _check_cells(ensemble)
    tables = {}
    for cell in ensemble.cells:
        counts, n = _cell_counts(cell)
        tables[cell.cell_id] = {x: float(Fraction(count, n)) for x, count in counts.items()}
    return tables


def compare(report: AccountingReport) -> float:
    """Largest |conditional - many_spaces| over the cells and outcomes both tables hold."""
    if not report.many_spaces:
        raise EmptyBatch("The report holds no cells.")
    divergence = 0.0
    for cell_id, conditional in report.conditionals.items():
        other = report.many_spaces.get(cell_id, {})
        for x in set(conditional) | set(other):
            divergence = max(divergence, abs(conditional.get(x, 0.0) - other.get(x, 0.0)))
    return divergence


def account(ensemble: RunEnsemble, many_spaces_ensemble: Optional[RunEnsemble] = None) -> AccountingReport:
    """
    Build both probability tables and their divergence.

    Parameters
    ----------
    ensemble : RunEnsemble
        Ensemble for the big-space tables (and the many-spaces tables unless
        `many_spaces_ensemble` is given).
    many_spaces_ensemble : Optional[RunEnsemble]
        Independent batches for the same cells, used for the many-spaces tables.

    Returns
    -------
    AccountingReport
        Tables with `max_divergence` filled in.
    """
    tables = big_space(ensemble)
    other = many_spaces_ensemble if many_spaces_ensemble is not None else ensemble
    if {c.cell_id for c in other.cells} != {c.cell_id for c in ensemble.cells}:
        raise SchemaError("Both ensembles must hold the same cells.")
    report = AccountingReport(joint=tables.joint, marginals=tables.marginals,
                              conditionals=tables.conditionals, many_spaces=many_spaces(other))
    divergence = compare(report)
    logger.info(f"Big-space vs many-spaces divergence over {len(ensemble.cells)} cells: {divergence:.3g}")
    return AccountingReport(joint=report.joint, marginals=report.marginals, conditionals=report.conditionals,
                            many_spaces=report.many_spaces, max_divergence=divergence)


def loop_diagnostics(batch: TrialBatch, setup: Setup) -> pd.DataFrame:
    """
    Declared channel weights against loop-conditioned completion frequencies.

    For every absorber (and the boundary stand-in when it completes any
    trial): the weight |c_k|^2 of its channel, its completion frequency over
    the whole batch, and its completion frequency over the trials in which it
    was active in the witnessing history. A contingent absorber such as
    Maudlin's B has declared weight 1/2 yet completes every trial in which it
    is in place.

    Parameters
    ----------
    batch : TrialBatch
        Batch produced by `run_trials` for `setup`.
    setup : Setup
        The simulated setup.

    Returns
    -------
    pd.DataFrame
        Columns absorber, channel, declared_weight, completions,
        completion_frequency, active_trials, conditioned_frequency.
    """
    columns = ['absorber', 'channel', 'declared_weight', 'completions', 'completion_frequency',
               'active_trials', 'conditioned_frequency']
    n = len(batch)
    if n == 0:
        raise EmptyBatch(f"Batch of '{batch.setup_label}' is empty.")

    rows = []
    for absorber in setup.absorbers:
        completions = sum(1 for t in batch.trials if t.completing_absorber == absorber.name)
        active = sum(1 for t in batch.trials if t.history.activations[absorber.name])
        rows.append((absorber.name, absorber.channel, setup.channel(absorber.channel).weight, completions,
                     completions / n, active, completions / active if active else float('nan')))

    boundary_trials = [t for t in batch.trials if t.completing_absorber == BOUNDARY]
    for channel in setup.channels:
        completions = sum(1 for t in boundary_trials if t.outcome_channel == channel.name)
        if completions:
            rows.append((BOUNDARY, channel.name, channel.weight, completions, completions / n,
                         n, completions / n))

    return pd.DataFrame(rows, columns=columns)
