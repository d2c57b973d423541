"""Tests for experiment configuration, the runner and the command line.
"""

import json
import math
import os

import pytest

import seplab
from seplab import ConfigInvalid, SeplabError
from seplab.cli import ExperimentConfig, parse_d_range, compute_row, run, main
from seplab.report import load_json


class TestErrors:

    def test_documented(self):
        errors = [getattr(seplab, name) for name in seplab.__all__]
        errors = [cls for cls in errors if isinstance(cls, type) and issubclass(cls, Exception)]
        assert len(errors) == 14
        for cls in errors:
            assert issubclass(cls, SeplabError)
            assert cls.__doc__ and cls.__doc__.strip(), cls.__name__


class TestParseRange:

    @pytest.mark.parametrize('text, expected', [('4', (4, 4)), ('2..10', (2, 10))])
    def test_valid(self, text, expected):
        assert parse_d_range(text) == expected

    @pytest.mark.parametrize('text', ['', 'two', '2..', '2-10'])
    def test_invalid(self, text):
        with pytest.raises(ConfigInvalid):
            parse_d_range(text)


class TestExperimentConfig:

    def test_dimensions(self):
        assert ExperimentConfig('sigma-table', (1, 4)).dimensions() == [1, 2, 3, 4]
        assert ExperimentConfig('kappa', (2, 9)).dimensions() == [1]

    @pytest.mark.parametrize('args, kwargs', [
        (('sep3v2', (1, 3)), {}),
        (('sep5', (2, 3)), {}),
        (('sigma-table', (3, 2)), {}),
        (('verify-fourier', (2, 13)), {}),
        (('sep3v2', (2, 3)), {'mc_samples': 10}),
        (('sep2vrkhs', (2, 3)), {'features': 10}),
        (('bounds-table', (2, 3)), {'overrides': {'sigma': -0.1}}),
        (('bounds-table', (2, 3)), {'overrides': {'width': 1.0}}),
    ])
    def test_invalid(self, args, kwargs):
        with pytest.raises(ConfigInvalid):
            ExperimentConfig(*args, **kwargs)

    def test_config_hash(self):
        first = ExperimentConfig('sep3v2', (2, 4), seed=3, overrides={'x0': 0.1})
        second = ExperimentConfig('sep3v2', (2, 4), seed=3, overrides={'x0': 0.1, 'eps': None})
        assert first.config_hash() == second.config_hash()
        assert len(first.config_hash()) == 64
        assert ExperimentConfig('sep3v2', (2, 4), seed=4,
                                overrides={'x0': 0.1}).config_hash() != first.config_hash()

    def test_seed_wraps(self):
        assert ExperimentConfig('kappa', (1, 1), seed=-1).seed == 2 ** 64 - 1

    def test_specs(self):
        cfg = ExperimentConfig('bounds-table', (2, 3), overrides={'sigma': 0.2, 'ell': 1.5})
        grid = cfg.grid_spec(3)
        assert (grid.d, grid.sigma, grid.x0) == (3, 0.2, 0.125)
        sine = cfg.sine_spec(3)
        assert (sine.sigma, sine.ell) == (0.2, 1.5)
        assert ExperimentConfig('sep2vrkhs', (4, 4)).sine_spec(4).ell == pytest.approx(2.0)


class TestRows:

    def test_kappa(self):
        row = compute_row(ExperimentConfig('kappa', (1, 1)), 1)
        assert row['pass'] is True
        assert row['kappa'] == pytest.approx(4.0 / (3.0 * math.sqrt(3.0)), abs=1e-12)

    def test_sigma_table(self):
        row = compute_row(ExperimentConfig('sigma-table', (1, 3)), 1)
        assert 0.094 < row['sigma_grid'] < 0.095
        assert row['plateau_exact'] >= row['plateau_bound']
        assert row['pass'] is True

    def test_bounds_table(self):
        row = compute_row(ExperimentConfig('bounds-table', (2, 2)), 2)
        assert row['lower_3l'] == pytest.approx(1.0 / (513 * 4 + 1024 + 1))
        assert row['upper_2l'] > 0 and row['rkhs_bound'] > 0
        assert row['pass'] is True

    def test_verify_fourier(self):
        row = compute_row(ExperimentConfig('verify-fourier', (1, 2)), 2)
        assert row['closed_form_max_abs'] <= 1e-6
        assert row['pass'] is True

    def test_sep3v2_threshold(self):
        row = compute_row(ExperimentConfig('sep3v2', (2, 2), mc_samples=1000), 2)
        assert row['d3L_threshold'] == pytest.approx(1.0)

    def test_sep3v2_fails_below_threshold(self):
        # wide mixtures leave little plateau mass, so the gap stays far below 2 - 8 eps
        cfg = ExperimentConfig('sep3v2', (2, 2), mc_samples=1000, overrides={'sigma': 0.35})
        row = compute_row(cfg, 2)
        assert row['d3L_ci_low'] < row['d3L_threshold']
        assert row['pass'] is False


class TestRun:

    def test_kappa_report(self, tmp_path):
        report, path = run(ExperimentConfig('kappa', (1, 1)), str(tmp_path), workers=0)
        assert path == os.path.join(str(tmp_path), 'kappa.csv')
        assert report.passed()
        with open(path) as fd:
            text = fd.read()
        assert text.startswith('# tool: seplab ')
        assert '# config_hash: ' in text

    def test_json(self, tmp_path):
        cfg = ExperimentConfig('sigma-table', (1, 3))
        report, path = run(cfg, str(tmp_path), fmt='json', workers=0)
        restored = load_json(path)
        assert restored == report
        assert [row['d'] for row in restored.rows] == [1, 2, 3]
        assert restored.metadata['config_hash'] == cfg.config_hash()

    def test_worker_processes(self, tmp_path, monkeypatch):
        monkeypatch.delenv('SEPLAB_WORKERS', raising=False)
        cfg = ExperimentConfig('sigma-table', (1, 4))
        parallel, _ = run(cfg, str(tmp_path / 'parallel'), workers=2)
        inline, _ = run(cfg, str(tmp_path / 'inline'), workers=0)
        assert parallel == inline

    def test_deterministic(self, tmp_path):
        cfg = ExperimentConfig('verify-fourier', (1, 2), seed=11)
        _, first = run(cfg, str(tmp_path / 'a'), workers=0)
        _, second = run(cfg, str(tmp_path / 'b'), workers=0)
        with open(first) as fd_a, open(second) as fd_b:
            assert fd_a.read() == fd_b.read()

    def test_bad_format(self, tmp_path):
        with pytest.raises(ConfigInvalid):
            run(ExperimentConfig('kappa', (1, 1)), str(tmp_path), fmt='xml', workers=0)


class TestMain:

    def test_kappa(self, tmp_path, capsys):
        assert main(['kappa', '--out', str(tmp_path), '--workers', '0']) == 0
        assert os.path.exists(str(tmp_path / 'kappa.csv'))
        assert '0 failing' in capsys.readouterr().out

    def test_bounds_table_json(self, tmp_path):
        args = ['bounds-table', '--d', '2..3', '--format', 'json', '--out', str(tmp_path),
                '--workers', '0']
        assert main(args) == 0
        report = load_json(str(tmp_path / 'bounds-table.json'))
        assert [row['d'] for row in report.rows] == [2, 3]

    def test_missing_experiment(self, tmp_path):
        assert main(['--out', str(tmp_path)]) == 2

    def test_invalid_range(self, tmp_path):
        assert main(['sep3v2', '--d', '1..3', '--out', str(tmp_path), '--workers', '0']) == 2
        assert main(['kappa', '--d', 'x', '--out', str(tmp_path)]) == 2

    def test_save_and_load_config(self, tmp_path):
        conf = str(tmp_path / 'seplab.conf')
        out = str(tmp_path / 'out')
        args = ['sigma-table', '--d', '1..2', '--eps', '0.1', '--out', out, '--workers', '0',
                '--save_config', conf]
        assert main(args) == 0
        assert os.path.exists(conf)
        assert not os.path.exists(out)
        with open(conf) as fd:
            saved = json.load(fd)
        assert saved['schema'] == 1
        assert (saved['experiment'], saved['d'], saved['eps']) == ('sigma-table', '1..2', 0.1)
        assert saved['sigma'] is None and saved['workers'] == 0
        assert main(['--config', conf, '--seed', '4']) == 0
        report = os.path.join(out, 'sigma-table.csv')
        with open(report) as fd:
            assert '# seed: 4\n' in fd.read()

    def test_bad_config_file(self, tmp_path):
        assert main(['--config', str(tmp_path / 'none.conf')]) == 2

    @pytest.mark.parametrize('doc', [
        {'schema': 2, 'experiment': 'kappa'},
        {'experiment': 'kappa'},
        {'schema': 1, 'experiment': 'kappa', 'width': 3},
        [1, 'kappa'],
    ])
    def test_rejected_config(self, tmp_path, doc):
        conf = str(tmp_path / 'seplab.conf')
        with open(conf, 'w') as fd:
            json.dump(doc, fd)
        assert main(['--config', conf, '--out', str(tmp_path / 'out')]) == 2
        assert not os.path.exists(str(tmp_path / 'out'))

    def test_config_not_json(self, tmp_path):
        conf = tmp_path / 'seplab.conf'
        conf.write_text('[seplab]\nexperiment = kappa\n')
        assert main(['--config', str(conf)]) == 2


@pytest.mark.slow
class TestSeparationRuns:
    """Small end-to-end runs of the Monte-Carlo and MMD experiments."""

    def test_sep3v2(self, tmp_path):
        args = ['sep3v2', '--d', '2..3', '--mc_samples', '20000', '--out', str(tmp_path),
                '--workers', '0']
        assert main(args) == 0

    def test_sep2vrkhs(self, tmp_path):
        args = ['sep2vrkhs', '--d', '2..3', '--features', '200', '--out', str(tmp_path),
                '--workers', '0']
        assert main(args) == 0
