import pandas as pd

from scheduling.models import SolverRun

from ._base import SchedulingCommand

COLUMNS = [
    'created_at',
    'command',
    'label',
    'method',
    'weights',
    'objective',
    'ewt',
    'eot',
    'eit',
    'iterations',
    'converged',
]


class Command(SchedulingCommand):
    help = 'List recorded solver runs.'

    def add_command_arguments(self, parser):
        parser.add_argument('--instance', help='only runs on this instance label')
        parser.add_argument('--method')
        parser.add_argument('--converged', action='store_true', default=None)
        parser.add_argument('--summary', action='store_true', default=None, help='mean per method')
        parser.add_argument('--limit', type=int, default=20)

    def run(self, *args, **options):
        runs = SolverRun.objects.all()
        if options.get('instance'):
            runs = runs.for_instance(options['instance'])
        if options.get('method'):
            runs = runs.by_method(options['method'])
        if options.get('converged'):
            runs = runs.converged()

        if options.get('summary'):
            frame = pd.DataFrame.from_records(list(runs.summary()))
        else:
            records = list(runs.values(*COLUMNS)[: options['limit']])
            frame = pd.DataFrame.from_records(records, columns=COLUMNS)
        if frame.empty:
            self.stdout.write('No recorded runs.')
            return
        self.write_frame(frame)
