"""
Experiment runner: builds specs from the command line (or a JSON
configuration file), runs one row per dimension in a SweepCluster and
writes a CSV or JSON report.

    seplab sep3v2 --d 2..10 --seed 0 --out results
"""

import collections
import hashlib
import json
import math
import os
import sys

import numpy as np
import pycos

import seplab
from seplab import logger, SeplabError, ConfigInvalid
from seplab import config
from seplab.numerics import RngStream, SearchConfig
from seplab.distributions import GridPairSpec, SinePairSpec, grid_fourier, \
    grid_fourier_quadrature, grid_plateau_probability
from seplab.bounds import kappa, sigma_d_grid, sigma_d_sine, grid_sigma_residual, \
    sine_sigma_residual, upper_bound_2l_explicit, two_layer_tail_bound, \
    rkhs_upper_bound_explicit, three_layer_lower_formula
from seplab.witness import grid_witness_exact, grid_witness_fourier, two_layer_ipm_search, \
    three_layer_gap, three_layer_certificate, sec4_two_layer_lower, mmd_estimate
from seplab.cluster import SweepCluster
from seplab.report import Report, emit

__all__ = ['ExperimentConfig', 'Experiments', 'parse_d_range', 'compute_row', 'run', 'main']

Experiments = ('verify-fourier', 'sep3v2', 'sep2vrkhs', 'bounds-table', 'kappa', 'sigma-table')
_MonteCarloExperiments = ('sep3v2',)
_OverrideKeys = ('sigma', 'x0', 'eps', 'ell')
# reference value of the maximum of |cos(x) sin(2x)| to 15 digits
KappaReference = 0.769800358917917


class ExperimentConfig(collections.namedtuple('ExperimentConfig',
                                              ['experiment', 'd_range', 'seed', 'mc_samples',
                                               'features', 'overrides'])):
    """Validated experiment description; 'd_range' is an inclusive (lo, hi)
    pair and 'overrides' maps any of sigma, x0, eps, ell to a value.
    """

    __slots__ = ()

    def __new__(cls, experiment, d_range, seed=config.DefaultSeed,
                mc_samples=config.DefaultMcSamples, features=config.DefaultFeatures,
                overrides=None):
        if experiment not in Experiments:
            raise ConfigInvalid('experiment must be one of %s, got %r' %
                                (', '.join(Experiments), experiment))
        lo, hi = int(d_range[0]), int(d_range[1])
        if lo < 1 or hi < lo:
            raise ConfigInvalid('d_range must be a non-empty range of positive integers, got %r' %
                                (d_range,))
        if experiment in ('sep3v2', 'sep2vrkhs', 'bounds-table') and lo < 2:
            raise ConfigInvalid('%s needs d >= 2, got d_range %r' % (experiment, d_range))
        if experiment == 'verify-fourier' and hi > config.ExactWitnessMaxDim:
            raise ConfigInvalid('verify-fourier needs d <= %d, got d_range %r' %
                                (config.ExactWitnessMaxDim, d_range))
        if experiment in _MonteCarloExperiments and int(mc_samples) < config.MinMcSamples:
            raise ConfigInvalid('mc_samples must be at least %d, got %r' %
                                (config.MinMcSamples, mc_samples))
        if experiment == 'sep2vrkhs' and int(features) < config.MinFeatures:
            raise ConfigInvalid('features must be at least %d, got %r' %
                                (config.MinFeatures, features))
        clean = collections.OrderedDict()
        for key, value in sorted((overrides or {}).items()):
            if key not in _OverrideKeys:
                raise ConfigInvalid('unknown override %r' % (key,))
            if value is not None:
                if not float(value) > 0:
                    raise ConfigInvalid('override %s must be positive, got %r' % (key, value))
                clean[key] = float(value)
        return super(ExperimentConfig, cls).__new__(cls, experiment, (lo, hi),
                                                    int(seed) & 0xFFFFFFFFFFFFFFFF,
                                                    int(mc_samples), int(features), clean)

    def dimensions(self):
        if self.experiment == 'kappa':
            return [1]
        return list(range(self.d_range[0], self.d_range[1] + 1))

    def config_hash(self):
        doc = json.dumps({'schema_version': config.SchemaVersion, 'experiment': self.experiment,
                          'd_range': list(self.d_range), 'seed': self.seed,
                          'mc_samples': self.mc_samples, 'features': self.features,
                          'overrides': self.overrides}, sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()

    def grid_spec(self, d):
        eps = self.overrides.get('eps', config.DefaultEps)
        x0 = self.overrides.get('x0', config.DefaultX0)
        sigma = self.overrides.get('sigma')
        if sigma is None:
            return GridPairSpec.at_sigma_d(d, eps, x0)
        return GridPairSpec(d, sigma, x0, eps)

    def sine_spec(self, d):
        sigma = self.overrides.get('sigma')
        if sigma is None:
            sigma = sigma_d_sine(d)
        return SinePairSpec(d, sigma, self.overrides.get('ell', math.sqrt(d)))


def parse_d_range(text):
    """'4' or '2..10' -> (lo, hi).
    """
    try:
        if '..' in text:
            lo, hi = text.split('..', 1)
            return int(lo), int(hi)
        return int(text), int(text)
    except ValueError:
        raise ConfigInvalid('--d must look like 4 or 2..10, got %r' % (text,))


def _kappa_row(cfg, d):
    value, maximizer = kappa()
    return collections.OrderedDict([
        ('d', d), ('kappa', value), ('maximizer', maximizer),
        ('pass', abs(value - KappaReference) <= 5e-12 and
         abs(maximizer - math.atan(1.0 / math.sqrt(2.0))) <= 1e-10)])


def _sigma_row(cfg, d):
    eps = cfg.overrides.get('eps', config.DefaultEps)
    x0 = cfg.overrides.get('x0', config.DefaultX0)
    sigma = sigma_d_grid(d, eps, x0)
    residual = grid_sigma_residual(sigma, d, eps, x0)
    sigma_sine = sigma_d_sine(d)
    residual_sine = sine_sigma_residual(sigma_sine, d)
    plateau = grid_plateau_probability(GridPairSpec(d, sigma, x0, eps))
    decreasing = True
    if d > 1:
        decreasing = sigma < sigma_d_grid(d - 1, eps, x0) and sigma_sine < sigma_d_sine(d - 1)
    ok = (abs(residual) <= 1e-12 and abs(residual_sine) <= 1e-12 and decreasing and
          sigma_sine <= 2.0 and plateau.exact >= plateau.bound)
    if eps == config.DefaultEps and x0 == config.DefaultX0:
        ok = ok and sigma <= 1.0 / 6.0
    return collections.OrderedDict([
        ('d', d), ('sigma_grid', sigma), ('residual_grid', residual),
        ('sigma_sine', sigma_sine), ('residual_sine', residual_sine),
        ('sigma_log_d', sigma * math.log(d + 1.0)), ('plateau_exact', plateau.exact),
        ('plateau_bound', plateau.bound), ('pass', bool(ok))])


def _bounds_row(cfg, d):
    grid = cfg.grid_spec(d)
    sine = cfg.sine_spec(d)
    upper = upper_bound_2l_explicit(d, grid.sigma)
    rkhs = rkhs_upper_bound_explicit(sine)
    values = (upper.total, rkhs.total, three_layer_lower_formula(d))
    return collections.OrderedDict([
        ('d', d), ('sigma_grid', grid.sigma), ('upper_2l', upper.total),
        ('tail_2l', two_layer_tail_bound(d, grid.sigma)), ('sigma_sine', sine.sigma),
        ('rkhs_bound', rkhs.total), ('lower_3l', values[2]),
        ('pass', all(math.isfinite(v) and v > 0 for v in values))])


def _verify_fourier_row(cfg, d):
    spec = cfg.grid_spec(d)
    rng = RngStream(cfg.seed, d)
    g = rng.generator
    b_max = d + math.sqrt(d)
    worst_abs = worst_rel = 0.0
    ok = True
    for _ in range(20):
        theta = g.standard_normal(d)
        theta /= np.linalg.norm(theta)
        b = g.uniform(-b_max, b_max)
        exact = grid_witness_exact(spec, theta, b)
        fourier = grid_witness_fourier(spec, theta, b)
        diff = abs(exact - fourier)
        rel = diff / max(abs(exact), 1e-300)
        worst_abs = max(worst_abs, diff)
        worst_rel = max(worst_rel, min(rel, 1.0))
        ok = ok and (diff <= 1e-6 or rel <= 1e-4)
    closed_form = 0.0
    if d <= 2:
        for _ in range(20):
            w = g.uniform(-4.0, 4.0, size=d)
            closed_form = max(closed_form, abs(grid_fourier(spec, w) -
                                               grid_fourier_quadrature(spec, w)))
        ok = ok and closed_form <= 1e-6
    return collections.OrderedDict([
        ('d', d), ('sigma', spec.sigma), ('route_max_abs', worst_abs),
        ('route_max_rel', worst_rel), ('closed_form_max_abs', closed_form), ('pass', bool(ok))])


def _sep3v2_row(cfg, d):
    spec = cfg.grid_spec(d)
    rng = RngStream(cfg.seed, d)
    search = two_layer_ipm_search(spec, search=SearchConfig(), rng=rng.spawn(0))
    bound = upper_bound_2l_explicit(d, spec.sigma)
    gap = three_layer_gap(spec, cfg.mc_samples, rng.spawn(1))
    lower, certified = three_layer_certificate(spec, estimate=gap)
    ci_low = gap.value - config.PassRadius * gap.std_error
    # plateau mass >= 1 - 2 eps under both labels gives E gap >= 2 - 8 eps
    threshold = 2.0 - 8.0 * spec.eps
    formula = three_layer_lower_formula(d)
    return collections.OrderedDict([
        ('d', d), ('sigma', spec.sigma), ('d2L_search', search.value),
        ('d2L_bound', bound.total), ('d3L_mc', gap.value), ('d3L_se', gap.std_error),
        ('d3L_ci_low', ci_low), ('d3L_threshold', threshold), ('d3L_normalized', lower),
        ('d3L_formula', formula), ('orientation', gap.details['orientation']),
        ('pass', bool(search.value <= bound.total and ci_low >= threshold and certified))])


def _sep2vrkhs_row(cfg, d):
    spec = cfg.sine_spec(d)
    rng = RngStream(cfg.seed, d)
    witness = sec4_two_layer_lower(spec)
    mmd = mmd_estimate(spec, m_features=cfg.features, rng=rng.spawn(0))
    bound = rkhs_upper_bound_explicit(spec)
    ok = witness > 0 and mmd.value <= bound.total + config.PassRadius * mmd.std_error
    return collections.OrderedDict([
        ('d', d), ('sigma', spec.sigma), ('ell', spec.ell), ('witness_2l', witness),
        ('mmd_est', mmd.value), ('mmd_se', mmd.std_error), ('rkhs_bound', bound.total),
        ('pass', bool(ok))])


_RowBuilders = {'kappa': _kappa_row, 'sigma-table': _sigma_row, 'bounds-table': _bounds_row,
                'verify-fourier': _verify_fourier_row, 'sep3v2': _sep3v2_row,
                'sep2vrkhs': _sep2vrkhs_row}


def compute_row(cfg, d):
    """One report row of experiment 'cfg.experiment' at dimension 'd'.
    """
    logger.debug('%s: computing d=%d', cfg.experiment, d)
    return _RowBuilders[cfg.experiment](cfg, d)


def run(cfg, out_dir='.', fmt='csv', workers=None, print_status=False):
    """Run all rows of 'cfg', write the report into 'out_dir' and return
    (report, path).
    """
    if fmt not in ('csv', 'json'):
        raise ConfigInvalid('format must be csv or json, got %r' % (fmt,))
    metadata = collections.OrderedDict([
        ('tool', 'seplab %s' % seplab.__version__), ('schema_version', config.SchemaVersion),
        ('experiment', cfg.experiment), ('d_range', '%d..%d' % cfg.d_range),
        ('seed', cfg.seed), ('config_hash', cfg.config_hash())])
    report = Report(metadata)
    cluster = SweepCluster(compute_row, workers=workers)
    jobs = [cluster.submit_id(d, cfg, d) for d in cfg.dimensions()]
    cluster.wait()
    failed = [job for job in jobs if job.exception]
    if print_status:
        cluster.print_status()
    cluster.close()
    if failed:
        raise SeplabError('%s failed for d=%s:\n%s' %
                          (cfg.experiment, ', '.join(str(job.id) for job in failed),
                           failed[0].exception))
    for job in jobs:
        report.add(job.result)
    report.sort()
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    path = os.path.join(out_dir, '%s.%s' % (cfg.experiment, fmt))
    emit(report, fmt, path)
    return report, path


def _read_config(path, known):
    try:
        with open(path) as fd:
            doc = json.load(fd)
    except (IOError, OSError, ValueError) as exc:
        raise ConfigInvalid('could not read configuration file %s: %s' % (path, exc))
    if not isinstance(doc, dict):
        raise ConfigInvalid('configuration file %s must hold a JSON object' % path)
    version = doc.pop('schema', None)
    if version != config.SchemaVersion:
        raise ConfigInvalid('configuration schema %r in %s, expected %s' %
                            (version, path, config.SchemaVersion))
    unknown = sorted(set(doc) - set(known))
    if unknown:
        raise ConfigInvalid('unknown configuration keys in %s: %s' % (path, ', '.join(unknown)))
    return doc


def _write_config(path, options):
    doc = collections.OrderedDict([('schema', config.SchemaVersion)])
    for key in sorted(options):
        doc[key] = options[key]
    with open(path, 'w') as fd:
        json.dump(doc, fd, indent=1)
        fd.write('\n')


def main(argv=None):
    import argparse

    parser = argparse.ArgumentParser(prog='seplab',
                                     description='depth and feature-learning separation '
                                     'experiments')
    parser.add_argument('experiment', nargs='?', default=None,
                        help='one of %s' % ', '.join(Experiments))
    parser.add_argument('--config', dest='config', default='',
                        help='use configuration in given file')
    parser.add_argument('--save_config', dest='save_config', default='',
                        help='save configuration in given file and exit')
    parser.add_argument('--d', dest='d', default='2..10',
                        help='dimension or inclusive range lo..hi')
    parser.add_argument('--seed', dest='seed', type=int, default=config.DefaultSeed,
                        help='seed of all random streams')
    parser.add_argument('--out', dest='out', default='.',
                        help='directory where the report is written')
    parser.add_argument('--format', dest='format', default='csv', choices=('csv', 'json'),
                        help='report format')
    parser.add_argument('--mc_samples', dest='mc_samples', type=int,
                        default=config.DefaultMcSamples,
                        help='Monte-Carlo samples per distribution')
    parser.add_argument('--features', dest='features', type=int, default=config.DefaultFeatures,
                        help='random features for MMD estimates')
    parser.add_argument('--workers', dest='workers', type=int, default=None,
                        help='number of worker processes (0 runs rows inline); default $%s, '
                        'else the CPU count' % config.WorkersEnv)
    for key in _OverrideKeys:
        parser.add_argument('--%s' % key, dest=key, type=float, default=None,
                            help='override %s' % key)
    parser.add_argument('--debug', action='store_true', dest='loglevel', default=False,
                        help='if given, debug messages are printed')
    _seplab_config = vars(parser.parse_args(argv))

    if _seplab_config['config']:
        try:
            known = [key for key in _seplab_config if key not in ('config', 'save_config')]
            cfg = _read_config(_seplab_config['config'], known)
        except SeplabError as exc:
            logger.error('%s', exc)
            return 2
        for key, value in _seplab_config.items():
            if _seplab_config[key] != parser.get_default(key) or key not in cfg:
                cfg[key] = _seplab_config[key]
        _seplab_config = cfg
    _seplab_config.pop('config', None)

    cfg = _seplab_config.pop('save_config', None)
    if cfg:
        try:
            _write_config(cfg, _seplab_config)
        except (IOError, OSError) as exc:
            logger.error('could not write configuration file %s: %s', cfg, exc)
            return 2
        return 0

    if _seplab_config['loglevel']:
        logger.setLevel(logger.DEBUG)
        pycos.logger.setLevel(pycos.logger.DEBUG)
    else:
        logger.setLevel(logger.INFO)

    try:
        if not _seplab_config['experiment']:
            raise ConfigInvalid('experiment is required (one of %s)' % ', '.join(Experiments))
        overrides = dict((key, _seplab_config[key]) for key in _OverrideKeys)
        try:
            experiment = ExperimentConfig(_seplab_config['experiment'],
                                          parse_d_range(str(_seplab_config['d'])),
                                          _seplab_config['seed'], _seplab_config['mc_samples'],
                                          _seplab_config['features'], overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid('invalid configuration: %s' % exc)
        report, path = run(experiment, _seplab_config['out'], _seplab_config['format'],
                           _seplab_config['workers'],
                           print_status=_seplab_config['loglevel'])
    except SeplabError as exc:
        logger.error('%s', exc)
        return 2

    failing = report.failing()
    for row in failing:
        logger.warning('%s: row d=%s failed: %s', experiment.experiment, row.get('d'),
                       dict(row))
    print('%s: %d rows, %d failing, report in %s' % (experiment.experiment, len(report),
                                                      len(failing), path))
    return 0 if not failing else 1


if __name__ == '__main__':
    sys.exit(main())
