from scheduling.core import validate
from scheduling.evaluator import evaluate
from scheduling.exceptions import InvalidSchedule
from scheduling.reports import write_gantt_svg, write_outcome_csv

from ._base import SchedulingCommand


class Command(SchedulingCommand):
    help = 'Draw the chair and nurse Gantt chart of a schedule in one scenario as SVG.'

    def add_command_arguments(self, parser):
        parser.add_argument('instance', help='instance JSON file')
        parser.add_argument('schedule', help='schedule JSON file')
        parser.add_argument('--scenario', type=int, default=0)
        parser.add_argument('--out', required=True, help='SVG path')
        parser.add_argument('--csv', help='also write the per-patient outcome CSV')
        parser.add_argument('--title')
        self.add_evaluator_arguments(parser)

    def run(self, *args, **options):
        inst = self.load_instance(options['instance'])
        schedule = self.load_schedule(options['schedule'])
        violations = validate(schedule, inst)
        if violations:
            raise InvalidSchedule(violations)
        index = options['scenario']
        if not 0 <= index < inst.num_scenarios:
            raise ValueError(f'Scenario index {index} outside 0..{inst.num_scenarios - 1}')
        scenario = inst.scenarios[index]
        outcome = evaluate(schedule, scenario, inst, self.evaluator_config(options))
        path = write_gantt_svg(outcome, scenario, inst, options['out'], title=options.get('title'))
        self.stdout.write(self.style.SUCCESS(f'Wrote {path}'))
        if options.get('csv'):
            write_outcome_csv(schedule, outcome, options['csv'])
