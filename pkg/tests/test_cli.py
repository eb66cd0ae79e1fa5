import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from cli import (
    EXIT_FAILED,
    EXIT_INVALID,
    EXIT_OK,
    cmd_bound_check,
    cmd_eval,
    cmd_mixture,
    cmd_sweep_epsilon,
    cmd_sweep_tau,
    cmd_train,
    load_experiment,
)
from cli.commands import EVALUATION_COLUMNS, MIXTURE_COLUMNS, SWEEP_TAU_COLUMNS
from core_nn.errors import ConfigError
from data import Dataset, save_csv
from training import METRIC_COLUMNS

import main as entry


def experiment_document(**training_changes) -> dict:
    training = {
        'method': {'name': 'fat'},
        'epochs': 2,
        'batch_size': 8,
        'lr_schedule': [[0, 0.05]],
        'attack': {'epsilon': 0.3, 'steps': 3},
        'tau_schedule': [[0, 1]],
        'eval_attack': {'epsilon': 0.3, 'steps': 3, 'init': 'uniform'},
        'seed': 3,
    }
    training.update(training_changes)
    return {
        'dataset': {'kind': 'gaussians', 'n_per_class': 20, 'centers': [[-1.5, 0.0], [1.5, 0.0]], 'sigma': 0.6,
                    'seed': 4, 'test_fraction': 0.25},
        'model': {'layer_widths': [2, 8, 2]},
        'training': training,
        'evaluation': {'presets': ['fgsm', 'pgd10']},
    }


def write_document(path, document) -> str:
    path.write_text(json.dumps(document))
    return str(path)


@pytest.fixture
def config_path(tmp_path):
    return write_document(tmp_path / 'experiment.json', experiment_document())


@pytest.fixture(scope='module')
def trained_run(tmp_path_factory):
    root = tmp_path_factory.mktemp('trained')
    config = write_document(root / 'experiment.json', experiment_document())
    assert cmd_train(config, out=str(root / 'run')) == EXIT_OK
    return config, root / 'run'


class TestTrain:
    def test_writes_the_run_directory(self, trained_run):
        _, run = trained_run
        for name in ('model.json', 'model.bin', 'metrics.csv', 'evaluation.csv', 'run.json', 'run.log'):
            assert (run / name).is_file(), name
        metrics = pd.read_csv(run / 'metrics.csv')
        assert tuple(metrics.columns) == METRIC_COLUMNS
        assert metrics['epoch'].tolist() == [0, 1]
        assert pd.read_csv(run / 'evaluation.csv')['attack'].tolist() == ['fgsm', 'pgd10']
        record = json.loads((run / 'run.json').read_text())
        assert record['seeds']['training'] == 3
        assert record['data']['test_examples'] == 10

    def test_rerun_is_byte_identical(self, trained_run, tmp_path):
        config, run = trained_run
        assert cmd_train(config, out=str(tmp_path / 'again')) == EXIT_OK
        for name in ('model.bin', 'metrics.csv', 'evaluation.csv'):
            assert (tmp_path / 'again' / name).read_bytes() == (run / name).read_bytes(), name

    def test_seed_override_changes_the_run(self, trained_run, tmp_path):
        config, run = trained_run
        assert cmd_train(config, out=str(tmp_path / 'other'), seed=11) == EXIT_OK
        assert (tmp_path / 'other' / 'model.bin').read_bytes() != (run / 'model.bin').read_bytes()

    def test_tau_above_k_is_a_config_error(self, tmp_path):
        config = write_document(tmp_path / 'bad.json', experiment_document(tau_schedule=[[0, 5]]))
        assert cmd_train(config, out=str(tmp_path / 'run')) == EXIT_INVALID
        assert not (tmp_path / 'run').exists()

    def test_missing_config(self, tmp_path):
        assert cmd_train(str(tmp_path / 'nowhere.json')) == EXIT_INVALID

    def test_model_must_fit_the_dataset(self, tmp_path):
        document = experiment_document()
        document['model']['layer_widths'] = [3, 8, 2]
        assert cmd_train(write_document(tmp_path / 'dims.json', document)) == EXIT_INVALID


class TestExperimentDocument:
    def test_load_and_override(self, config_path, tmp_path):
        cfg = load_experiment(config_path).with_overrides(seed=9, threads=2, output_dir=str(tmp_path))
        assert (cfg.training.seed, cfg.training.threads, cfg.output_dir) == (9, 2, str(tmp_path))

    def test_dataset_box_reaches_the_attacks(self, tmp_path):
        document = experiment_document()
        document['dataset']['domain_box'] = [-4.0, 4.0]
        cfg = load_experiment(write_document(tmp_path / 'box.json', document)).with_overrides()
        assert cfg.training.attack.domain_box == (-4.0, 4.0)
        assert cfg.training.eval_attack.domain_box == (-4.0, 4.0)

    def test_not_json(self, tmp_path):
        path = tmp_path / 'broken.json'
        path.write_text('{"dataset": ')
        with pytest.raises(ConfigError):
            load_experiment(path)


class TestEval:
    def test_zero_radius_robust_equals_standard(self, trained_run, tmp_path):
        config, run = trained_run
        code = cmd_eval(str(run / 'model.json'), config_path=config, presets=['fgsm', 'pgd10'], epsilon=0.0,
                        out=str(tmp_path))
        assert code == EXIT_OK
        rows = pd.read_csv(tmp_path / 'evaluation.csv')
        assert tuple(rows.columns) == EVALUATION_COLUMNS
        assert (rows['robust_acc'] == rows['standard_acc']).all()

    def test_missing_checkpoint_names_the_path(self, tmp_path, log_messages):
        code = cmd_eval(str(tmp_path / 'absent'), epsilon=0.1, data_path=str(tmp_path / 'data.csv'))
        assert code == EXIT_FAILED
        assert any('absent.json' in message for message in log_messages)

    def test_unknown_preset(self, trained_run):
        config, run = trained_run
        assert cmd_eval(str(run / 'model'), config_path=config, presets=['pgd9000-x']) == EXIT_INVALID


@pytest.fixture
def pinned_data(tmp_path):
    features = np.full((6, 2), 0.5)
    labels = np.array([0, 1, 0, 1, 0, 1])
    return str(save_csv(Dataset(features, labels, class_count=2), tmp_path / 'pinned.csv'))


class TestDomainBox:
    BOX = (0.5, 0.5 + 1e-12)

    def test_box_confines_attacks_on_a_data_file(self, trained_run, pinned_data, tmp_path):
        _, run = trained_run
        code = cmd_eval(str(run / 'model.json'), data_path=pinned_data, presets=['fgsm', 'pgd10'], epsilon=2.0,
                        out=str(tmp_path), domain_box=self.BOX)
        assert code == EXIT_OK
        rows = pd.read_csv(tmp_path / 'evaluation.csv')
        assert (rows['standard_acc'] == 0.5).all()
        assert (rows['robust_acc'] == rows['standard_acc']).all()

    def test_from_the_command_line(self, trained_run, pinned_data, tmp_path):
        _, run = trained_run
        code = entry.main(['bound-check', '--checkpoint', str(run / 'model.json'), '--data', pinned_data,
                           '--epsilon', '2.0', '--rho', '0.1', '--resolution', '5', '--out', str(tmp_path),
                           '--domain-box', '0.5', repr(self.BOX[1])])
        assert code == EXIT_OK
        rows = pd.read_csv(tmp_path / 'bound_check.csv')
        assert rows['r_bdy'].tolist() == [0.0]

    def test_reversed_box(self, trained_run, pinned_data):
        _, run = trained_run
        assert cmd_eval(str(run / 'model.json'), data_path=pinned_data, epsilon=0.1,
                        domain_box=(1.0, 0.0)) == EXIT_INVALID

    def test_box_needs_a_data_file(self, trained_run):
        config, run = trained_run
        assert cmd_mixture(str(run / 'model.json'), config_path=config, domain_box=(0.0, 1.0)) == EXIT_INVALID


class TestSweeps:
    def test_empty_tau_list(self, config_path):
        assert cmd_sweep_tau(config_path, []) == EXIT_INVALID

    def test_tau_outside_budget(self, config_path, tmp_path):
        assert cmd_sweep_tau(config_path, [0, 4], out=str(tmp_path)) == EXIT_INVALID

    def test_tau_sweep_summaries(self, config_path, tmp_path):
        assert cmd_sweep_tau(config_path, [0, 3], out=str(tmp_path), seeds=1, threads=1) == EXIT_OK
        summary = pd.read_csv(tmp_path / 'sweep_tau.csv')
        assert tuple(summary.columns) == SWEEP_TAU_COLUMNS
        assert summary['tau'].tolist() == [0, 3]
        assert summary['runs'].tolist() == [1, 1]
        assert (tmp_path / 'tau_0' / 'seed_3' / 'metrics.csv').is_file()
        assert len(pd.read_csv(tmp_path / 'sweep_tau_runs.csv')) == 2

    def test_epsilon_sweep_pairs_baseline_with_friendly_arms(self, config_path, tmp_path):
        assert cmd_sweep_epsilon(config_path, [0.1], taus=[0], out=str(tmp_path), seeds=1, threads=1) == EXIT_OK
        summary = pd.read_csv(tmp_path / 'sweep_epsilon.csv')
        assert list(zip(summary['method'], summary['tau'])) == [('standard_at', 3), ('fat', 0)]
        assert (summary['epsilon'] == 0.1).all()

    def test_negative_training_radius(self, config_path):
        assert cmd_sweep_epsilon(config_path, [-0.1], taus=[0], seeds=1) == EXIT_INVALID


class TestMixture:
    def test_three_point_clouds(self, trained_run, tmp_path):
        config, run = trained_run
        assert cmd_mixture(str(run / 'model.json'), config_path=config, out=str(tmp_path)) == EXIT_OK
        rows = pd.read_csv(tmp_path / 'mixture.csv')
        assert tuple(rows.columns) == MIXTURE_COLUMNS
        assert len(rows) == 3 * 10
        assert sorted(set(rows['source'])) == ['A', 'B', 'nat']
        fisher = json.loads((tmp_path / 'fisher.json').read_text())
        assert set(fisher['fisher']) == {'nat', 'A', 'B'}
        assert fisher['epsilon'] == 0.3

    def test_missing_hidden_layer(self, trained_run, tmp_path):
        config, run = trained_run
        assert cmd_mixture(str(run / 'model.json'), config_path=config, layer=3, out=str(tmp_path)) == EXIT_FAILED


class TestBoundCheck:
    def test_non_positive_rho(self, trained_run):
        config, run = trained_run
        assert cmd_bound_check(str(run / 'model.json'), [0.1], [0.0], config_path=config) == EXIT_INVALID

    def test_bound_holds_on_a_trained_model(self, trained_run, tmp_path):
        config, run = trained_run
        code = cmd_bound_check(str(run / 'model.json'), [0.0, 0.3], [0.01, 1.0], config_path=config, resolution=5,
                               out=str(tmp_path))
        assert code == EXIT_OK
        rows = pd.read_csv(tmp_path / 'bound_check.csv')
        assert len(rows) == 4
        assert rows['decomposition_holds'].all()
        assert rows['bound_holds'].all()
        assert (rows['r_rob'] <= rows['rhs_bound']).all()


class TestEntryPoint:
    def test_train_subcommand(self, config_path, tmp_path):
        assert entry.main(['--log-level', 'warning', 'train', '--config', config_path,
                           '--out', str(tmp_path / 'run')]) == EXIT_OK
        assert (tmp_path / 'run' / 'metrics.csv').is_file()

    def test_missing_required_flag(self):
        assert entry.main(['train']) == EXIT_INVALID

    def test_unknown_subcommand(self):
        assert entry.main(['dance']) == EXIT_INVALID

    def test_empty_sweep_from_the_command_line(self, config_path):
        assert entry.main(['sweep-tau', '--config', config_path]) == EXIT_INVALID


@pytest.mark.parametrize('name', ['gaussians_fat.json', 'spirals_fat_trades.json'])
def test_shipped_experiments_validate(name):
    path = Path(__file__).resolve().parent.parent / 'experiments' / name
    cfg = load_experiment(path)
    assert cfg.model.input_dim == 2
