import io
import json
import os

import networkx as nx
import pandas as pd
import pytest
from networkx.readwrite import json_graph

from src.cli_runner import EXIT_ERROR, EXIT_OK, EXIT_PATHOLOGICAL, RunConfig, main
from src.exceptions import UsageError
from src.utils import ENSEMBLE_DIR, scenario_path


def run(capsys, *argv):
    status = main(list(argv))
    return status, capsys.readouterr().out


class TestCheck:

    def test_pathological_exit_code(self, capsys):
        status, out = run(capsys, 'check', scenario_path('maudlin-open'))
        assert status == EXIT_PATHOLOGICAL
        assert 'Pathological' in out
        assert 'EscapingOffer(L)' in out

    def test_well_posed_exit_code(self, capsys):
        status, out = run(capsys, 'check', '--scenario', scenario_path('maudlin-perfect'))
        assert status == EXIT_OK
        assert 'WellPosed' in out

    def test_json(self, capsys):
        status, out = run(capsys, 'check', scenario_path('maudlin-perfect'), '--format', 'json')
        data = json.loads(out)
        assert status == EXIT_OK
        assert data['classification'] == 'WellPosed'
        assert data['source_observable_invariant'] is True
        assert [h['firer'] for h in data['histories']] == ['B', 'A']

    def test_missing_file(self, capsys, tmp_path):
        status, _ = run(capsys, 'check', str(tmp_path / 'nowhere.json'))
        assert status == EXIT_ERROR

    def test_malformed_document(self, capsys, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text(json.dumps({'label': 'broken'}))
        status, _ = run(capsys, 'check', str(path))
        assert status == EXIT_ERROR

    def test_unwritable_out_file(self, capsys, tmp_path):
        blocker = tmp_path / 'blocker'
        blocker.write_text('')
        status, out = run(capsys, 'check', scenario_path('maudlin-perfect'), '--out', str(blocker / 'report.txt'))
        assert status == EXIT_ERROR
        assert out == ''

    def test_no_scenario(self, capsys):
        assert main(['check']) == EXIT_ERROR

    def test_unknown_command(self, capsys):
        assert main(['replay', scenario_path('maudlin-open')]) == EXIT_ERROR


class TestRun:

    def test_json_report(self, capsys):
        status, out = run(capsys, 'run', scenario_path('maudlin-perfect'), '--trials', '10000', '--seed', '7',
                          '--format', 'json')
        data = json.loads(out)
        assert status == EXIT_OK
        assert data['seed'] == 7
        assert data['trials'] == 10000
        assert 0.47 <= data['frequencies']['L'] <= 0.53
        completion = {(row['outcome'], row['absorber']): row['fraction'] for row in data['completion']}
        assert completion == {('L', 'B'): 1.0, ('R', 'A'): 1.0}
        b = next(row for row in data['loop_diagnostics'] if row['absorber'] == 'B')
        assert b['conditioned_frequency'] == 1.0

    def test_csv_report(self, capsys):
        status, out = run(capsys, 'run', scenario_path('renninger'), '--trials', '100', '--format', 'csv')
        df = pd.read_csv(io.StringIO(out))
        assert status == EXIT_OK
        assert list(df.columns) == ['index', 'outcome', 'absorber']
        assert len(df) == 100

    def test_zero_trials(self, capsys):
        status, out = run(capsys, 'run', scenario_path('maudlin-perfect'), '--trials', '0', '--format', 'json')
        data = json.loads(out)
        assert status == EXIT_OK
        assert data['trials'] == 0
        assert data['frequencies'] == {}

    def test_negative_trials(self, capsys):
        status, _ = run(capsys, 'run', scenario_path('maudlin-perfect'), '--trials', '-5')
        assert status == EXIT_ERROR

    def test_pathological_setup(self, capsys, caplog):
        status, out = run(capsys, 'run', scenario_path('maudlin-open'), '--trials', '10')
        assert status == EXIT_PATHOLOGICAL
        assert out == ''
        assert 'maudlin-open' in caplog.text
        assert 'EscapingOffer(L)' in caplog.text

    def test_text_report(self, capsys):
        status, out = run(capsys, 'run', scenario_path('maudlin-perfect'), '--trials', '1000')
        assert status == EXIT_OK
        assert 'seed 42' in out
        assert 'Completing absorbers' in out

    def test_byte_identical_runs(self, capsys):
        outputs = [run(capsys, 'run', scenario_path('renninger'), '--trials', '5000', '--seed', '99',
                       '--format', 'csv')[1] for _ in range(2)]
        assert outputs[0] == outputs[1]

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / 'reports' / 'run.json'
        status, out = run(capsys, 'run', scenario_path('renninger'), '--trials', '100', '--format', 'json',
                          '--out', str(target))
        assert status == EXIT_OK
        assert out == ''
        assert json.loads(target.read_text(encoding='utf-8'))['trials'] == 100


class TestLedger:

    def test_perfect_is_clean(self, capsys):
        status, out = run(capsys, 'ledger', scenario_path('maudlin-perfect'))
        assert status == EXIT_OK
        assert 'clean' in out

    def test_open_is_flagged(self, capsys):
        status, out = run(capsys, 'ledger', scenario_path('maudlin-open'), '--format', 'json')
        data = json.loads(out)
        assert status == EXIT_PATHOLOGICAL
        assert data['clean'] is False
        flagged = [h for h in data['histories'] if not h['clean']]
        assert [h['history']['firer'] for h in flagged] == ['A']

    def test_bigbang_reflection_rows(self, capsys):
        status, out = run(capsys, 'ledger', scenario_path('maudlin-bigbang'), '--format', 'csv')
        df = pd.read_csv(io.StringIO(out))
        assert status == EXIT_OK
        reflections = df[df['kind'] == 'reflection']
        assert len(reflections) == 4
        swung = reflections[(reflections['firer'] == 'A') & (reflections['channel'] == 'L')]
        assert swung['net_re'].iloc[0] == pytest.approx(-0.7071067811865476)


class TestCompare:

    def test_shipped_ensemble(self, capsys):
        status, out = run(capsys, 'compare', '--ensemble', os.path.join(ENSEMBLE_DIR, 'setup-choice.json'),
                          '--format', 'json')
        data = json.loads(out)
        assert status == EXIT_OK
        assert data['max_divergence'] == 0.0
        assert set(data['conditionals']) == {'renninger', 'renninger-no-e2', 'maudlin'}
        assert data['conditionals']['maudlin']['psi']['L'] == pytest.approx(0.5, abs=0.02)

    def test_independent_batches(self, capsys, tmp_path):
        manifest = {'independent': True, 'cells': [
            {'setup': 'maudlin', 'scenario': scenario_path('maudlin-perfect'), 'trials': 50000},
            {'setup': 'renninger', 'scenario': scenario_path('renninger'), 'trials': 50000},
        ]}
        path = tmp_path / 'ensemble.json'
        path.write_text(json.dumps(manifest))
        status, out = run(capsys, 'compare', '--ensemble', str(path), '--format', 'json')
        assert status == EXIT_OK
        assert 0.0 < json.loads(out)['max_divergence'] < 0.02

    def test_partial_priors(self, capsys, tmp_path):
        manifest = {'cells': [
            {'setup': 'maudlin', 'scenario': scenario_path('maudlin-perfect'), 'prior': 1.0},
            {'setup': 'renninger', 'scenario': scenario_path('renninger')},
        ]}
        path = tmp_path / 'ensemble.json'
        path.write_text(json.dumps(manifest))
        status, _ = run(capsys, 'compare', '--ensemble', str(path))
        assert status == EXIT_ERROR

    @pytest.mark.parametrize('key, value', [('trials', '10'), ('trials', -1), ('trials', True), ('trials', 2.5),
                                            ('seed', -1), ('seed', 2 ** 64), ('seed', 'x'),
                                            ('prior', 'one'), ('prior', None), ('state', 3), ('setup', '')])
    def test_malformed_cell(self, capsys, tmp_path, key, value):
        cell = {'setup': 'maudlin', 'scenario': scenario_path('maudlin-perfect'), 'trials': 10}
        cell[key] = value
        path = tmp_path / 'ensemble.json'
        path.write_text(json.dumps({'cells': [cell]}))
        status, _ = run(capsys, 'compare', '--ensemble', str(path))
        assert status == EXIT_ERROR

    def test_missing_ensemble_flag(self, capsys):
        assert main(['compare']) == EXIT_ERROR


class TestChain:

    def test_distribution(self, capsys):
        status, out = run(capsys, 'chain', scenario_path('renninger-chain'), '--format', 'json')
        data = json.loads(out)
        assert status == EXIT_OK
        assert sum(data['distribution'].values()) == pytest.approx(1.0, abs=1e-12)
        assert len(data['transaction_capable']) == 4
        assert len(data['tree']['nodes']) == 1 + 2 + 4 + 4

    def test_network_file(self, capsys, tmp_path):
        target = tmp_path / 'graphs' / 'renninger-chain'
        status, _ = run(capsys, 'chain', scenario_path('renninger-chain'), '--network', str(target))
        assert status == EXIT_OK
        data = json.loads((tmp_path / 'graphs' / 'renninger-chain.json').read_text(encoding='utf-8'))
        G = json_graph.node_link_graph(data)
        assert G.number_of_nodes() == 1 + 2 + 4 + 4
        assert nx.is_tree(G)

    def test_empty_chain(self, capsys):
        status, out = run(capsys, 'chain', scenario_path('maudlin-perfect'), '--format', 'csv')
        assert status == EXIT_OK
        assert out.splitlines() == ['path,weight,transaction_capable', 'root,1.0,False']


class TestRunConfig:

    def test_rejects_negative_trials(self):
        with pytest.raises(UsageError):
            RunConfig(command='run', scenario_path='x.json', trials=-1)

    def test_compare_needs_no_scenario(self):
        assert RunConfig(command='compare', ensemble_path='e.json').scenario_path is None
