from pathlib import Path

from django.conf import settings

from scheduling.generator import fixture_instances
from scheduling.serializers import dump_instance

from ._base import SchedulingCommand


class Command(SchedulingCommand):
    help = 'Write the ten 8-patient benchmark instances to the data directory.'

    def add_command_arguments(self, parser):
        parser.add_argument('--scenarios', type=int, default=50)
        parser.add_argument('--out-dir', dest='out_dir', help='defaults to CHEMOSCHED_DATA_DIR')

    def run(self, *args, **options):
        out_dir = Path(options.get('out_dir') or settings.CHEMOSCHED['DATA_DIR'])
        for inst in fixture_instances(num_scenarios=options['scenarios']):
            path = dump_instance(inst, out_dir / f'{inst.label}.json')
            self.stdout.write(f'Wrote {path}')
        self.stdout.write(self.style.SUCCESS(f'Fixtures ready in {out_dir}'))
