from scheduling.core import expected_decomposition
from scheduling.exceptions import NoConvergence
from scheduling.lpha import run_lpha
from scheduling.models import SolverRun
from scheduling.reports import write_report, write_trace_csv
from scheduling.serializers import dump_schedule, dumps, schedule_to_dict

from ._base import SchedulingCommand


class Command(SchedulingCommand):
    help = 'Solve an instance with linearized progressive hedging.'

    def add_command_arguments(self, parser):
        parser.add_argument('instance', help='instance JSON file')
        parser.add_argument('--out', help='schedule JSON (printed when omitted)')
        parser.add_argument('--report', help='run report JSON')
        parser.add_argument('--trace', help='convergence trace CSV')
        parser.add_argument('--record', action='store_true', default=None)
        self.add_solver_arguments(parser)
        self.add_lpha_arguments(parser)
        self.add_evaluator_arguments(parser)

    def run(self, *args, **options):
        inst = self.load_instance(options['instance'])
        w = self.weights(options)
        cfg = self.lpha_config(options)
        seed = self.seed(options)
        eval_cfg = self.evaluator_config(options)
        try:
            schedule, report = run_lpha(inst, w, cfg, seed, eval_cfg)
        except NoConvergence as exc:
            self.write_outputs(inst, w, exc.schedule, exc.report, options, eval_cfg)
            raise
        self.write_outputs(inst, w, schedule, report, options, eval_cfg)

    def write_outputs(self, inst, w, schedule, report, options, eval_cfg):
        if options.get('out'):
            dump_schedule(schedule, options['out'])
        else:
            self.stdout.write(dumps(schedule_to_dict(schedule)), ending='')
        if options.get('report'):
            write_report(report, options['report'])
        if options.get('trace'):
            write_trace_csv(report, options['trace'])
        if options.get('record'):
            SolverRun.objects.record(
                'solve',
                inst.label,
                'lpha',
                w,
                report.objective,
                decomposition=expected_decomposition(schedule, inst, w, cfg=eval_cfg),
                iterations=report.iterations,
                wall_time=report.wall_time,
                seed=report.seed,
                converged=report.converged,
                report=report.as_dict(),
            )
        status = 'converged' if report.converged else 'stopped'
        message = (
            f'{inst}: {status} after {report.iterations} iterations, '
            f'objective {report.objective:.4f}'
        )
        if report.converged:
            self.stderr.write(self.style.SUCCESS(message))
        else:
            self.stderr.write(self.style.WARNING(message))
