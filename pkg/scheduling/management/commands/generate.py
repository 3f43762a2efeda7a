from scheduling.forms import GenSpecForm
from scheduling.generator import generate_instance
from scheduling.serializers import dump_instance

from ._base import SchedulingCommand

SPEC_OPTIONS = (
    'patients',
    'scenarios',
    'nurses',
    'chairs',
    'shift_length',
    'overtime_limit',
    'seed',
    'target_overtime',
)


class Command(SchedulingCommand):
    help = 'Generate a random instance from the four-class duration model.'

    def add_command_arguments(self, parser):
        parser.add_argument('--patients', type=int, default=8)
        parser.add_argument('--scenarios', type=int, default=50)
        parser.add_argument('--nurses', type=int, default=2)
        parser.add_argument('--chairs', type=int, default=4)
        parser.add_argument('--shift-length', dest='shift_length', type=int)
        parser.add_argument('--overtime-limit', dest='overtime_limit', type=int)
        parser.add_argument('--seed', type=int)
        parser.add_argument(
            '--target-overtime',
            dest='target_overtime',
            type=float,
            help='redraw until expected per-nurse overtime is within 30 minutes of this',
        )
        parser.add_argument('--classes', help='comma separated class ids, one per patient')
        parser.add_argument('--index', type=int, default=1, help='instance number for the label')
        parser.add_argument('--out', required=True, help='instance JSON path')

    def run(self, *args, **options):
        form = GenSpecForm(data={name: options.get(name) for name in SPEC_OPTIONS})
        spec = form.to_config()
        class_ids = None
        if options.get('classes'):
            class_ids = [int(part) for part in str(options['classes']).split(',') if part.strip()]
        inst = generate_instance(spec=spec, class_ids=class_ids, index=options['index'])
        path = dump_instance(inst, options['out'])
        self.stdout.write(self.style.SUCCESS(f'Wrote {inst} to {path}'))
