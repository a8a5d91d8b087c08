# Command-line front end: check, run, ledger, compare and chain subcommands.
import os
import math
import logging
from dataclasses import dataclass
from typing import List, Optional

import pandas as pd

from .args import FORMATS, get_runner_args
from .consistency_solver import classify, source_observable_invariant
from .entanglement_chain import branch_network, build_tree, terminal_distribution, transaction_capable_leaves
from .exceptions import DeficitPresent, NotWellPosed, SchemaError, TransactionError, UsageError
from .probability_accounting import Cell, RunEnsemble, account, loop_diagnostics
from .scenario import Setup
from .scenario_builder import check_keys, integer, load_scenario, number, text
from .trial_sampler import MAX_SEED, run_trials
from .utils import dumps_json, frame_to_csv, load_json, network_to_node_link, save_network_to_json, write_text
from .wave_engine import advanced_ledger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PATHOLOGICAL = 2


@dataclass(frozen=True)
class RunConfig:
    """
    Options of one CLI invocation.

    Attributes
    ----------
    command : str
        Subcommand name.
    scenario_path : Optional[str]
        Scenario document (every subcommand but compare).
    trials : int
        Number of trials, >= 0.
    seed : int
        64-bit seed.
    format : str
        'text', 'json' or 'csv'.
    out : Optional[str]
        Report file, stdout when None.
    ensemble_path : Optional[str]
        Ensemble manifest for compare.
    network_path : Optional[str]
        Node-link JSON file for the branch tree of chain.
    """
    command: str
    scenario_path: Optional[str] = None
    trials: int = 100000
    seed: int = 42
    format: str = 'text'
    out: Optional[str] = None
    ensemble_path: Optional[str] = None
    network_path: Optional[str] = None
    verbose: bool = False

    def __post_init__(self):
        if self.trials < 0:
            raise UsageError(f"--trials must be >= 0, got {self.trials}.")
        if self.format not in FORMATS:
            raise UsageError(f"--format must be one of {FORMATS}, got {self.format!r}.")
        if self.command != 'compare' and not self.scenario_path:
            raise UsageError(f"'{self.command}' needs a scenario document.")

    @classmethod
    def from_args(cls, args) -> 'RunConfig':
        scenario = getattr(args, 'scenario', None) or getattr(args, 'scenario_file', None)
        return cls(command=args.command, scenario_path=scenario, trials=args.trials, seed=args.seed,
                   format=args.format, out=args.out, ensemble_path=getattr(args, 'ensemble', None),
                   network_path=getattr(args, 'network', None), verbose=args.verbose)


@dataclass(frozen=True)
class CommandResult:
    status: int
    text: str


def _json_safe(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _records(df: pd.DataFrame) -> List[dict]:
    return _json_safe(df.to_dict(orient='records'))


def _table(df: pd.DataFrame) -> str:
    return df.to_string(index=False) if len(df) else "\t(empty)"


def _activation_string(setup: Setup, history) -> str:
    return ";".join(f"{name}={int(history.activations[name])}" for name in setup.absorber_names)


def cmd_check(config: RunConfig) -> CommandResult:
    """Classify the scenario; exit 0 when well-posed, 2 when pathological."""
    setup = load_scenario(config.scenario_path)
    report = classify(setup)
    invariant = source_observable_invariant(setup, report)
    status = EXIT_OK if report.well_posed else EXIT_PATHOLOGICAL

    if config.format == 'json':
        data = dict(report.to_dict(), label=setup.label, boundary=setup.boundary.value,
                    source_observable_invariant=invariant)
        return CommandResult(status, dumps_json(data))
    if config.format == 'csv':
        df = pd.DataFrame([(h.outcome_channel, h.firer, h.firing_time, _activation_string(setup, h))
                           for h in report.histories],
                          columns=['outcome', 'firer', 'firing_time', 'activations'])
        return CommandResult(status, frame_to_csv(df))

    lines = [f"Setup '{setup.label}' (boundary {setup.boundary.value}): {report.classification}"]
    lines.extend(f"\t- {reason}" for reason in report.reasons)
    lines.append(f"Consistent histories: {len(report.histories)}")
    for h in report.histories:
        lines.append(f"\t{h.outcome_channel}: {h.firer} fires at t={h.firing_time:.9g} "
                     f"[{_activation_string(setup, h)}]")
    lines.append(f"Source observable history-invariant: {invariant}")
    return CommandResult(status, "\n".join(lines) + "\n")


def cmd_run(config: RunConfig) -> CommandResult:
    """Run trials and report frequencies, completions and the seed used."""
    setup = load_scenario(config.scenario_path)
    batch = run_trials(setup, config.trials, config.seed)
    completion = batch.completion_table()
    diagnostics = loop_diagnostics(batch, setup) if len(batch) else pd.DataFrame()

    if config.format == 'json':
        data = {'label': setup.label, 'seed': batch.seed, 'trials': len(batch),
                'frequencies': batch.frequencies, 'completion': _records(completion),
                'loop_diagnostics': _records(diagnostics)}
        return CommandResult(EXIT_OK, dumps_json(data))
    if config.format == 'csv':
        return CommandResult(EXIT_OK, batch.to_csv())

    frequencies = pd.DataFrame(list(batch.frequencies.items()), columns=['outcome', 'frequency'])
    lines = [f"Setup '{setup.label}': {len(batch)} trials, seed {batch.seed}",
             "", "Outcome frequencies:", _table(frequencies),
             "", "Completing absorbers:", _table(completion)]
    if len(diagnostics):
        lines.extend(["", "Declared weight vs loop-conditioned completion:", _table(diagnostics)])
    return CommandResult(EXIT_OK, "\n".join(lines) + "\n")


def cmd_ledger(config: RunConfig) -> CommandResult:
    """Advanced-wave ledger of every consistent history; exit 2 when any region is flagged."""
    setup = load_scenario(config.scenario_path)
    report = classify(setup)
    ledgers = [(h, advanced_ledger(setup, h)) for h in report.histories]
    clean = all(ledger.is_clean for _, ledger in ledgers)
    status = EXIT_OK if clean else EXIT_PATHOLOGICAL

    if config.format == 'json':
        data = {'label': setup.label, 'boundary': setup.boundary.value, 'clean': clean,
                'histories': [{'history': h.to_dict(), 'clean': ledger.is_clean,
                               'max_residual': ledger.max_residual, 'regions': ledger.to_records()}
                              for h, ledger in ledgers]}
        return CommandResult(status, dumps_json(data))

    frames = []
    for i, (h, ledger) in enumerate(ledgers):
        df = ledger.to_frame()
        df.insert(0, 'history', i)
        df.insert(1, 'outcome', h.outcome_channel)
        df.insert(2, 'firer', h.firer)
        df['flagged'] = [r.flagged for r in ledger.regions]
        frames.append(df)
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()
    if config.format == 'csv':
        return CommandResult(status, frame_to_csv(table))

    lines = [f"Advanced-wave ledger of '{setup.label}' (boundary {setup.boundary.value}): "
             + ("clean" if clean else "RESIDUAL before emission")]
    for i, (h, ledger) in enumerate(ledgers):
        flagged = sorted({r.channel for r in ledger.flagged})
        lines.append(f"\thistory {i} ({h.firer} fires on {h.outcome_channel}): "
                     + (f"flagged channels {flagged}" if flagged else "clean"))
    lines.extend(["", _table(table)])
    return CommandResult(status, "\n".join(lines) + "\n")


def load_ensemble(config: RunConfig) -> tuple:
    """Run every cell of an ensemble manifest; returns (ensemble, independent ensemble or None)."""
    manifest = load_json(config.ensemble_path)
    check_keys(manifest, {'cells'}, {'independent'}, 'ensemble')
    if not isinstance(manifest['cells'], list):
        raise SchemaError("'cells' must be a list.")
    base = os.path.dirname(os.path.abspath(config.ensemble_path))

    raw_cells = manifest['cells']
    priors = [raw.get('prior') for raw in raw_cells if isinstance(raw, dict)]
    if any(p is None for p in priors) and not all(p is None for p in priors):
        raise SchemaError("Give a prior for every cell or for none (uniform).")

    cells, independent = [], []
    for i, raw in enumerate(raw_cells):
        where = f'cells[{i}]'
        check_keys(raw, {'setup', 'scenario'}, {'state', 'prior', 'trials', 'seed'}, where)
        name = text(raw['setup'], where + '.setup')
        setup = load_scenario(os.path.join(base, text(raw['scenario'], where + '.scenario')))
        trials = integer(raw.get('trials', config.trials), where + '.trials')
        seed = integer(raw.get('seed', config.seed + i), where + '.seed', upper=MAX_SEED)
        state = text(raw.get('state', 'default'), where + '.state')
        prior = number(raw.get('prior', 1.0 / len(raw_cells)), where + '.prior')
        cells.append(Cell(name, state, run_trials(setup, trials, seed), prior))
        if manifest.get('independent', False):
            independent.append(Cell(name, state, run_trials(setup, trials, (seed + len(raw_cells)) % MAX_SEED),
                                    prior))

    return RunEnsemble(tuple(cells)), (RunEnsemble(tuple(independent)) if independent else None)


def cmd_compare(config: RunConfig) -> CommandResult:
    """Big-space vs many-spaces tables for an ensemble manifest."""
    ensemble, independent = load_ensemble(config)
    report = account(ensemble, independent)

    if config.format == 'json':
        return CommandResult(EXIT_OK, dumps_json(report.to_dict()))
    if config.format == 'csv':
        return CommandResult(EXIT_OK, frame_to_csv(report.to_frame()))

    df = report.to_frame()
    lines = [f"Ensemble of {len(ensemble.cells)} cells; max divergence {report.max_divergence:.6g}", "",
             _table(df[df['mode'] != 'joint']), "", "Joint (big space):", _table(df[df['mode'] == 'joint'])]
    return CommandResult(EXIT_OK, "\n".join(lines) + "\n")


def cmd_chain(config: RunConfig) -> CommandResult:
    """Terminal distribution and transaction-capable leaves of the scenario's detector chain."""
    setup = load_scenario(config.scenario_path)
    tree = build_tree(setup.detector_chain)
    distribution = terminal_distribution(tree)
    capable = [leaf.label for leaf in transaction_capable_leaves(tree)]
    network = branch_network(tree)
    if config.network_path:
        save_network_to_json(network, config.network_path)

    if config.format == 'json':
        data = {'label': setup.label, 'distribution': distribution, 'transaction_capable': capable,
                'tree': network_to_node_link(network)}
        return CommandResult(EXIT_OK, dumps_json(data))

    df = pd.DataFrame([(path, weight, path in capable) for path, weight in distribution.items()],
                      columns=['path', 'weight', 'transaction_capable'])
    if config.format == 'csv':
        return CommandResult(EXIT_OK, frame_to_csv(df))
    lines = [f"Detector chain of '{setup.label}': {len(tree.chain)} detectors, {len(tree.leaves)} leaves",
             _table(df)]
    return CommandResult(EXIT_OK, "\n".join(lines) + "\n")


COMMANDS = {
    'check': cmd_check,
    'run': cmd_run,
    'ledger': cmd_ledger,
    'compare': cmd_compare,
    'chain': cmd_chain,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point; returns the exit status.

    0 on success (well-posed, clean), 2 for pathological setups or flagged
    ledgers, 1 for usage, I/O and schema errors.
    """
    try:
        args = get_runner_args(argv)
        config = RunConfig.from_args(args)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_ERROR

    logging.basicConfig(level=logging.DEBUG if config.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        result = COMMANDS[config.command](config)
        write_text(result.text, config.out)
    except (NotWellPosed, DeficitPresent) as e:
        logger.error(str(e))
        return EXIT_PATHOLOGICAL
    except (TransactionError, OSError, ValueError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_ERROR

    return result.status
