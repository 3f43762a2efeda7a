import itertools

import pandas as pd

from scheduling.analysis import (
    LAMBDA_PRESETS,
    PARAMETER_GRID,
    RESOURCE_GRID,
    SweepSpec,
    instance_job,
    run_many,
    sweep,
    sweep_table,
)

from ._base import SchedulingCommand, parse_int_range

GROUP_BY = {
    'lambda': ('weights',),
    'resources': ('nurses', 'chairs'),
    'parameters': ('parameter', 'value'),
}


class Command(SchedulingCommand):
    help = 'Sensitivity of LPHA schedules to weights, staffing and LPHA parameters.'

    def add_command_arguments(self, parser):
        parser.add_argument('instances', nargs='+', help='instance files or directories')
        parser.add_argument('--kind', choices=sorted(GROUP_BY), default='lambda')
        parser.add_argument('--nurses', help='nurse range, e.g. 1:3')
        parser.add_argument('--chairs', help='chair range, e.g. 4:6')
        parser.add_argument('--repetitions', type=int, help='seeds per grid cell (default 1)')
        parser.add_argument('--out', help='per-instance rows CSV')
        parser.add_argument('--table', help='averaged table CSV (printed when omitted)')
        self.add_solver_arguments(parser)
        self.add_lpha_arguments(parser)

    def resource_grid(self, options):
        if not options.get('nurses') and not options.get('chairs'):
            return RESOURCE_GRID
        nurses = parse_int_range(options.get('nurses') or '1:3')
        chairs = parse_int_range(options.get('chairs') or '4:6')
        return tuple(itertools.product(nurses, chairs))

    def run(self, *args, **options):
        instances = self.load_instances(options['instances'])
        spec = SweepSpec(
            LAMBDA_PRESETS,
            self.resource_grid(options),
            dict(PARAMETER_GRID),
            repetitions=options['repetitions'] or 1,
        )
        threads = self.threads(options)
        parallel = threads if len(instances) > 1 else 1
        cfg = self.lpha_config(options, workers=1 if parallel > 1 else threads)
        job = instance_job(
            sweep,
            spec=spec,
            w=self.weights(options),
            cfg=cfg,
            seed=self.seed(options),
            kind=options['kind'],
        )
        rows = [row for rows in run_many(job, instances, parallel) for row in rows]
        if options.get('out'):
            self.write_frame(pd.DataFrame(rows), options['out'])
        self.write_frame(sweep_table(rows, GROUP_BY[options['kind']]), options.get('table'))
