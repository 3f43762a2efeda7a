import pandas as pd

from scheduling.analysis import HEURISTIC_WEIGHTS, compare, gap_table, instance_job, run_many
from scheduling.heuristics import SequencingRule
from scheduling.models import SolverRun

from ._base import SchedulingCommand, parse_levels


class Command(SchedulingCommand):
    help = 'Percent gaps of sequencing and job-hedging heuristics from the LPHA schedule.'

    def add_command_arguments(self, parser):
        parser.add_argument('instances', nargs='+', help='instance files or directories')
        parser.add_argument('--rules', default='spt,lpt,var,cov')
        parser.add_argument('--k', default='0.40:0.65:0.05', help='hedging levels lo:hi:step')
        parser.add_argument('--opt', action='store_true', default=None, help='add the -opt rows')
        parser.add_argument(
            '--no-baseline', dest='no_baseline', action='store_true', default=None
        )
        parser.add_argument(
            '--exact',
            action='store_true',
            default=None,
            help='add the best schedule over all sequences (at most 8 patients)',
        )
        parser.add_argument(
            '--budget', type=int, help='expected-objective evaluations per -opt run'
        )
        parser.add_argument('--out', help='per-instance rows CSV')
        parser.add_argument('--table', help='averaged gap table CSV (printed when omitted)')
        parser.add_argument('--record', action='store_true', default=None)
        self.add_solver_arguments(parser)
        self.add_lpha_arguments(parser)

    def run(self, *args, **options):
        instances = self.load_instances(options['instances'])
        w = self.weights(options, default=HEURISTIC_WEIGHTS)
        threads = self.threads(options)
        parallel = threads if len(instances) > 1 else 1
        cfg = self.lpha_config(options, workers=1 if parallel > 1 else threads)
        rules = [SequencingRule.parse(rule) for rule in options['rules'].split(',') if rule]
        job = instance_job(
            compare,
            w=w,
            rules=rules,
            levels=parse_levels(options['k']),
            opt=bool(options.get('opt')),
            baseline=not options.get('no_baseline'),
            exact=bool(options.get('exact')),
            cfg=cfg,
            seed=self.seed(options),
            budget=options.get('budget'),
        )
        rows = [row for rows in run_many(job, instances, parallel) for row in rows]
        if options.get('out'):
            self.write_frame(pd.DataFrame(rows), options['out'])
        self.write_frame(gap_table(rows), options.get('table'))

        if options.get('record'):
            for row in rows:
                if row['variant'] == 'hedging':
                    continue
                SolverRun.objects.record(
                    'compare_heuristics',
                    row['instance'],
                    row['method'].lower(),
                    w,
                    row['objective'],
                    seed=self.seed(options),
                    report=row,
                )
