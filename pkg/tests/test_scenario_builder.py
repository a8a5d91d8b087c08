import copy
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.exceptions import (CyclicContingency, DanglingReference, NormalizationError, SchemaError,
                            TransactionError)
from src.scenario import (BOUNDARY, Always, BoundaryCondition, History, NotFired, arrival_time,
                          first_absorber, nearest_active_absorbers)
from src.scenario_builder import ScenarioBuilder, build_scenario, serialize_scenario

from .conftest import INV_SQRT2, SHIPPED, document, random_document, setup_of, single_channel_document


def history(setup, outcome, active, firer):
    activations = {name: name in active for name in setup.absorber_names}
    firing_times = {name: None for name in setup.absorber_names}
    firing_times[firer] = 1.0
    return History(activations=activations, outcome_channel=outcome, firing_times=firing_times)


class TestBuildScenario:

    def test_maudlin_document(self, maudlin_open):
        assert [c.name for c in maudlin_open.channels] == ['L', 'R']
        assert all(abs(c.amplitude - INV_SQRT2) < 1e-15 for c in maudlin_open.channels)
        b = maudlin_open.absorber('B')
        assert b.channel == 'L'
        assert isinstance(b.activation, NotFired)
        assert b.activation.ref == 'A'
        t1 = arrival_time(maudlin_open, maudlin_open.absorber('A'))
        assert b.activation.by == pytest.approx(t1 + 1e-6, abs=1e-15)

    def test_single_channel_identity(self):
        setup = build_scenario(single_channel_document())
        assert setup.channel('X').weight == 1.0
        assert isinstance(setup.absorber('D').activation, Always)

    def test_weights_not_normalized(self):
        doc = single_channel_document()
        doc['channels'] = [{'name': 'L', 'direction': -1, 'amplitude': {'re': 0.8}},
                           {'name': 'R', 'direction': 1, 'amplitude': {'re': 0.7}}]
        doc['absorbers'][0]['channel'] = 'L'
        with pytest.raises(NormalizationError):
            build_scenario(doc)

    def test_missing_key(self):
        doc = single_channel_document()
        del doc['boundary']
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_unknown_key(self):
        doc = single_channel_document()
        doc['source']['mass'] = 1.0
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_dangling_reference(self):
        doc = document('maudlin-open')
        doc['absorbers'][1]['activation']['ref'] = 'Z'
        with pytest.raises(DanglingReference):
            build_scenario(doc)

    def test_absorber_on_unknown_channel(self):
        doc = single_channel_document()
        doc['absorbers'][0]['channel'] = 'Y'
        with pytest.raises(DanglingReference):
            build_scenario(doc)

    def test_cyclic_predicates(self):
        doc = document('maudlin-open')
        doc['absorbers'][0]['activation'] = {'kind': 'fired', 'ref': 'B'}
        with pytest.raises(CyclicContingency):
            build_scenario(doc)

    def test_self_reference_is_a_cycle(self):
        doc = document('maudlin-open')
        doc['absorbers'][1]['activation']['ref'] = 'B'
        with pytest.raises(CyclicContingency):
            build_scenario(doc)

    @pytest.mark.parametrize('section, key, value', [
        ('source', 'v', 0.0),
        ('source', 'v', -3.0),
        ('source', 't0', 'soon'),
    ])
    def test_invalid_source(self, section, key, value):
        doc = single_channel_document()
        doc[section][key] = value
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_non_positive_distance(self):
        doc = single_channel_document()
        doc['absorbers'][0]['distance'] = 0.0
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_open_absorber_beyond_the_horizon(self):
        doc = single_channel_document()
        doc['absorbers'][0]['distance'] = 2e6
        setup = build_scenario(doc)
        assert setup.absorber('D').distance == 2e6

    @pytest.mark.parametrize('boundary', ['perfect', 'bigbang'])
    def test_closed_absorber_beyond_the_horizon(self, boundary):
        doc = single_channel_document(boundary)
        doc['absorbers'][0]['distance'] = 2e6
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_shared_distance_is_accepted(self):
        doc = single_channel_document()
        doc['absorbers'].append({'name': 'D2', 'channel': 'X', 'distance': 1.0, 'activation': {'kind': 'always'}})
        setup = build_scenario(doc)
        assert [a.distance for a in setup.absorbers_on('X')] == [1.0, 1.0]

    def test_duplicate_names(self):
        doc = document('maudlin-with-c')
        doc['absorbers'][2]['name'] = 'B'
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_unknown_boundary(self):
        doc = single_channel_document(boundary='mirror')
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_deadline_before_emission(self):
        doc = document('maudlin-open')
        doc['absorbers'][1]['activation']['by'] = -1.0
        with pytest.raises(SchemaError):
            build_scenario(doc)

    def test_builder_is_single_use(self):
        builder = ScenarioBuilder(single_channel_document())
        builder.build()
        with pytest.raises(TransactionError):
            builder.build()

    def test_late_deadline_is_logged(self, caplog):
        doc = document('maudlin-open')
        doc['absorbers'][1]['activation']['by'] = 1.0
        build_scenario(doc)
        assert "is decided at" in caplog.text

    @pytest.mark.parametrize('name', SHIPPED)
    def test_shipped_scenarios_round_trip(self, name):
        setup = setup_of(name)
        assert build_scenario(serialize_scenario(setup)) == setup

    def test_document_is_not_mutated(self):
        doc = document('maudlin-with-c')
        original = copy.deepcopy(doc)
        build_scenario(doc)
        assert doc == original


class TestArrivalTime:

    def test_direct_substitution(self):
        doc = single_channel_document()
        setup = build_scenario(doc)
        assert arrival_time(setup, setup.absorber('D')) == pytest.approx(0.001)

    def test_shifted_emission(self):
        doc = single_channel_document()
        doc['source'] = {'t0': 10.0, 'v': 2.0}
        doc['absorbers'][0]['distance'] = 4.0
        setup = build_scenario(doc)
        assert arrival_time(setup, setup.absorber('D')) == 12.0

    def test_renninger_ordering(self, renninger):
        assert arrival_time(renninger, renninger.absorber('E2')) > arrival_time(renninger, renninger.absorber('E1'))


class TestFirstAbsorber:

    def test_b_shadows_c(self, maudlin_with_c):
        h = history(maudlin_with_c, 'L', {'B', 'C'}, 'B')
        assert first_absorber(maudlin_with_c, maudlin_with_c.channel('L'), h).name == 'B'

    def test_c_when_b_inactive(self, maudlin_with_c):
        h = history(maudlin_with_c, 'R', {'A', 'C'}, 'A')
        assert first_absorber(maudlin_with_c, maudlin_with_c.channel('L'), h).name == 'C'

    def test_absent_on_open_left(self, maudlin_open):
        h = history(maudlin_open, 'R', {'A'}, 'A')
        assert first_absorber(maudlin_open, maudlin_open.channel('L'), h) is None

    def test_tie_goes_to_the_declared_first(self):
        doc = single_channel_document()
        doc['absorbers'].append({'name': 'D2', 'channel': 'X', 'distance': 1.0, 'activation': {'kind': 'always'}})
        setup = build_scenario(doc)
        h = history(setup, 'X', {'D', 'D2'}, 'D')
        assert first_absorber(setup, setup.channel('X'), h).name == 'D'
        assert [a.name for a in nearest_active_absorbers(setup, setup.channel('X'), h)] == ['D', 'D2']
        h = history(setup, 'X', {'D2'}, 'D2')
        assert [a.name for a in nearest_active_absorbers(setup, setup.channel('X'), h)] == ['D2']

    @settings(max_examples=200, deadline=None, derandomize=True)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 8))
    def test_monotone_in_activations(self, seed, n):
        rng = np.random.default_rng(seed)
        setup = build_scenario(random_document(rng, n, 'perfect'))
        names = setup.absorber_names
        base = {name: bool(rng.random() < 0.5) for name in names}
        extra = dict(base, **{names[int(rng.integers(0, n))]: True})

        def first(activations):
            firing = {name: None for name in names}
            firing[BOUNDARY] = 1.0
            h = History(activations=activations, outcome_channel=setup.channels[0].name, firing_times=firing)
            return {c.name: first_absorber(setup, c, h) for c in setup.channels}

        before, after = first(base), first(extra)
        for channel, absorber in before.items():
            if absorber is not None:
                assert after[channel] is not None
                assert after[channel].distance <= absorber.distance


def test_with_boundary_copies(maudlin_open):
    perfect = maudlin_open.with_boundary(BoundaryCondition.PERFECT)
    assert perfect.boundary is BoundaryCondition.PERFECT
    assert perfect.absorbers == maudlin_open.absorbers
    assert maudlin_open.boundary is BoundaryCondition.OPEN
    assert math.isclose(sum(c.weight for c in perfect.channels), 1.0, abs_tol=1e-12)
