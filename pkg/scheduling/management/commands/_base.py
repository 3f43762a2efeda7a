import logging
import sys
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from scheduling.exceptions import NoConvergence, SchedulingError
from scheduling.forms import EvaluatorConfigForm, LphaConfigForm, WeightsForm
from scheduling.serializers import load_config, load_instance, load_schedule
from scheduling.reports import write_table

logger = logging.getLogger('scheduling')

LPHA_OPTIONS = (
    'alpha',
    'rho0',
    'rho_u1',
    'rho_u2',
    'iterlimit',
    'fix_start',
    'fix_frac',
    'cycle_threshold',
    'max_iters',
    'mode',
    'restarts',
)


def parse_levels(value):
    """``"0.40:0.65:0.05"`` (inclusive) or ``"0.4,0.5"`` as rounded floats."""
    if ':' in value:
        try:
            lo, hi, step = (float(part) for part in value.split(':'))
        except ValueError:
            raise ValueError(f'Range {value!r} must read lo:hi:step')
        if step <= 0:
            raise ValueError('Range step must be positive')
        levels = np.arange(lo, hi + step / 2, step)
    else:
        levels = [float(part) for part in value.split(',') if part.strip()]
    levels = tuple(round(float(level), 10) for level in levels)
    if not levels:
        raise ValueError(f'Range {value!r} is empty')
    return levels


def parse_int_range(value):
    """``"1:3"`` (inclusive) or ``"1,2,3"``."""
    if ':' in value:
        lo, hi = (int(part) for part in value.split(':'))
        values = tuple(range(lo, hi + 1))
    else:
        values = tuple(int(part) for part in value.split(',') if part.strip())
    if not values:
        raise ValueError(f'Range {value!r} is empty')
    return values


def instance_paths(paths):
    """Instance files, expanding directories to their sorted ``*.json`` files."""
    found = []
    for path in map(Path, paths):
        if path.is_dir():
            found.extend(sorted(path.glob('*.json')))
        else:
            found.append(path)
    if not found:
        raise CommandError('No instance files given')
    return found


class SchedulingCommand(BaseCommand):
    """Shared options, config-file merging and error translation.

    Library errors become ``CommandError`` (exit 1); ``NoConvergence`` exits 2.
    """

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON file with option values; explicit flags win')
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def add_solver_arguments(self, parser):
        parser.add_argument('--threads', type=int, help='worker processes')
        parser.add_argument('--seed', type=int, help='random seed (default 0)')
        parser.add_argument('--weights', help='objective weights w1,w2,w3')
        parser.add_argument('--normalize', action='store_true', default=None)

    def add_lpha_arguments(self, parser):
        group = parser.add_argument_group('LPHA')
        group.add_argument('--alpha', type=float)
        group.add_argument('--rho0', type=float)
        group.add_argument('--rho-u1', dest='rho_u1', type=float)
        group.add_argument('--rho-u2', dest='rho_u2', type=float)
        group.add_argument('--iterlimit', type=int)
        group.add_argument('--fix-start', dest='fix_start', type=int)
        group.add_argument('--fix-frac', dest='fix_frac', type=float)
        group.add_argument('--cycle-threshold', dest='cycle_threshold', type=float)
        group.add_argument('--max-iters', dest='max_iters', type=int)
        group.add_argument('--mode', choices=['local_search', 'exhaustive'])
        group.add_argument('--restarts', type=int)

    def add_evaluator_arguments(self, parser):
        group = parser.add_argument_group('evaluator')
        group.add_argument('--nurse-capacity', dest='nurse_capacity', type=int)
        group.add_argument('--tie-break', dest='tie_break', choices=['latest', 'first'])
        group.add_argument('--strict', action='store_true', default=None)

    def handle(self, *args, **options):
        self.configure_logging(options['verbosity'])
        options = self.merge_config(options)
        try:
            self.run(*args, **options)
        except NoConvergence as exc:
            self.stderr.write(f'{exc}; incumbent written where requested')
            sys.exit(2)
        except (SchedulingError, ValueError, OSError) as exc:
            raise CommandError(str(exc)) from exc

    def run(self, *args, **options):
        raise NotImplementedError('subclasses of SchedulingCommand must provide a run() method')

    def configure_logging(self, verbosity):
        level = {0: logging.WARNING, 1: settings.LOG_LEVEL}.get(verbosity, logging.DEBUG)
        logger.setLevel(level)

    def merge_config(self, options):
        if not options.get('config'):
            return options
        try:
            values = load_config(options['config'])
        except (OSError, ValueError) as exc:
            raise CommandError(f'Cannot read config: {exc}') from exc
        unknown = sorted(key for key in values if key not in options)
        if unknown:
            raise CommandError(f'Unknown config keys: {", ".join(unknown)}')
        merged = dict(options)
        for key, value in values.items():
            if merged.get(key) is None:
                merged[key] = value
        return merged

    def threads(self, options):
        return options.get('threads') or settings.CHEMOSCHED['THREADS']

    def seed(self, options):
        seed = options.get('seed')
        return 0 if seed is None else seed

    def weights(self, options, default=None):
        value = options.get('weights') or default
        if value is not None and not isinstance(value, str):
            values = value.as_tuple() if hasattr(value, 'as_tuple') else value
            value = ','.join(str(v) for v in values)
        form = WeightsForm(data={'weights': value, 'normalize': bool(options.get('normalize'))})
        return form.to_weights()

    def lpha_config(self, options, workers=None):
        data = {name: options.get(name) for name in LPHA_OPTIONS}
        data['threads'] = workers or self.threads(options)
        return LphaConfigForm(data=data).to_config()

    def evaluator_config(self, options):
        data = {name: options.get(name) for name in ('nurse_capacity', 'tie_break', 'strict')}
        data['strict'] = bool(data['strict'])
        return EvaluatorConfigForm(data=data).to_config()

    def load_instance(self, path):
        inst = load_instance(path)
        logger.debug('Loaded %s from %s', inst, path)
        return inst

    def load_instances(self, paths):
        return [self.load_instance(path) for path in instance_paths(paths)]

    def load_schedule(self, path):
        return load_schedule(path)

    def write_frame(self, frame, path=None):
        """Write ``frame`` as CSV to ``path``, or print it when no path is given."""
        if path:
            write_table(frame, path)
            self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
        else:
            self.stdout.write(frame.to_string(index=False))
