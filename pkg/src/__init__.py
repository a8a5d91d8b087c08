"""
Transaction Loops Package

This package simulates the exchange of offer and confirmation waves between an emitter and (possibly contingent)
absorbers, resolves causal loops atemporally, samples transactions by their confirmation strength and checks
the resulting probability accounting.
"""

# Importing submodules for easier access
from .scenario import (Setup, Source, Channel, Absorber, Always, Fired, NotFired, BoundaryCondition, History,
                       arrival_time, first_absorber)
from .scenario_builder import ScenarioBuilder, build_scenario, load_scenario, serialize_scenario
from .wave_engine import offer_amplitude, confirmation_strength, echo_profile, advanced_ledger
from .consistency_solver import enumerate_histories, classify, resolve_transaction
from .trial_sampler import sample_outcome, run_trials
from .entanglement_chain import Detector, BranchTree, interact, confirmation_eligible, terminal_distribution
from .probability_accounting import RunEnsemble, big_space, many_spaces, compare, account

__all__ = [
    'Setup', 'Source', 'Channel', 'Absorber', 'Always', 'Fired', 'NotFired', 'BoundaryCondition', 'History',
    'arrival_time', 'first_absorber',
    'ScenarioBuilder', 'build_scenario', 'load_scenario', 'serialize_scenario',
    'offer_amplitude', 'confirmation_strength', 'echo_profile', 'advanced_ledger',
    'enumerate_histories', 'classify', 'resolve_transaction',
    'sample_outcome', 'run_trials',
    'Detector', 'BranchTree', 'interact', 'confirmation_eligible', 'terminal_distribution',
    'RunEnsemble', 'big_space', 'many_spaces', 'compare', 'account',
]
