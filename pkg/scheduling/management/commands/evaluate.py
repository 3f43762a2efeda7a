import pandas as pd

from scheduling.core import expected_decomposition, validate
from scheduling.evaluator import brute_force_second_stage, evaluate
from scheduling.exceptions import InvalidSchedule
from scheduling.reports import outcome_frame

from ._base import SchedulingCommand


class Command(SchedulingCommand):
    help = 'Evaluate a schedule over every scenario, or in detail for one scenario.'

    def add_command_arguments(self, parser):
        parser.add_argument('instance', help='instance JSON file')
        parser.add_argument('schedule', help='schedule JSON file')
        parser.add_argument('--scenario', type=int, help='report one scenario patient by patient')
        parser.add_argument(
            '--brute-force',
            dest='brute_force',
            action='store_true',
            default=None,
            help='also solve the scenario exactly over all assignments',
        )
        parser.add_argument('--out', help='CSV output (printed when omitted)')
        self.add_solver_arguments(parser)
        self.add_evaluator_arguments(parser)

    def run(self, *args, **options):
        inst = self.load_instance(options['instance'])
        schedule = self.load_schedule(options['schedule'])
        violations = validate(schedule, inst)
        if violations:
            raise InvalidSchedule(violations)
        w = self.weights(options)
        eval_cfg = self.evaluator_config(options)

        if options.get('scenario') is None:
            rows = []
            for index, scenario in enumerate(inst.scenarios):
                outcome = evaluate(schedule, scenario, inst, eval_cfg, weights=w)
                wait, overtime, idle = outcome.terms
                rows.append(
                    {
                        'scenario': index,
                        'probability': scenario.probability,
                        'objective': outcome.objective,
                        'wait': wait,
                        'overtime': overtime,
                        'idle': idle,
                        'feasible': outcome.feasible,
                    }
                )
            self.write_frame(pd.DataFrame(rows), options.get('out'))
            decomposition = expected_decomposition(schedule, inst, w, cfg=eval_cfg)
            self.stderr.write(
                'Expected objective {objective:.4f} (EWT {ewt:.2f}, EOT {eot:.2f}, '
                'EIT {eit:.2f})'.format(**decomposition.as_dict())
            )
            return

        index = options['scenario']
        if not 0 <= index < inst.num_scenarios:
            raise ValueError(f'Scenario index {index} outside 0..{inst.num_scenarios - 1}')
        scenario = inst.scenarios[index]
        outcome = evaluate(schedule, scenario, inst, eval_cfg, weights=w)
        self.write_frame(outcome_frame(schedule, outcome), options.get('out'))
        self.stderr.write(f'Scenario {index} objective {outcome.objective:.4f}')
        if options.get('brute_force'):
            exact = brute_force_second_stage(schedule, scenario, inst, weights=w)
            self.stderr.write(f'Exact second stage objective {exact.objective:.4f}')
