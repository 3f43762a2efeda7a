import pandas as pd

from scheduling.analysis import VSS_WEIGHTS, instance_job, run_many, vss_rows
from scheduling.models import SolverRun

from ._base import SchedulingCommand


class Command(SchedulingCommand):
    help = 'Value of the stochastic solution: mean-value schedule against LPHA.'

    def add_command_arguments(self, parser):
        parser.add_argument('instances', nargs='+', help='instance files or directories')
        parser.add_argument('--out', help='CSV output (printed when omitted)')
        parser.add_argument('--record', action='store_true', default=None)
        self.add_solver_arguments(parser)
        self.add_lpha_arguments(parser)

    def run(self, *args, **options):
        instances = self.load_instances(options['instances'])
        weights = [self.weights(options)] if options.get('weights') else list(VSS_WEIGHTS)
        threads = self.threads(options)
        parallel = threads if len(instances) > 1 else 1
        cfg = self.lpha_config(options, workers=1 if parallel > 1 else threads)
        seed = self.seed(options)
        job = instance_job(vss_rows, weights=weights, cfg=cfg, seed=seed)
        rows = [row for rows in run_many(job, instances, parallel) for row in rows]
        frame = pd.DataFrame(rows)
        self.write_frame(frame, options.get('out'))
        self.stderr.write(f'Mean relative VSS {frame["relative_vss"].mean():.2f}%')

        if options.get('record'):
            for row, w in zip(rows, weights * len(instances)):
                for method, key in (('mv', 'mv_objective'), ('lpha', 'lpha_objective')):
                    SolverRun.objects.record(
                        'vss', row['instance'], method, w, row[key], seed=seed, report=row
                    )
