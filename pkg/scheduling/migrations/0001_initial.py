from django.db import migrations, models

import scheduling.serializers


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='SolverRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('command', models.CharField(choices=[('solve', 'Solve'), ('vss', 'Value of the stochastic solution'), ('compare_heuristics', 'Heuristic comparison')], max_length=32)),
                ('label', models.CharField(max_length=100)),
                ('method', models.CharField(max_length=32)),
                ('slug', models.SlugField(blank=True, max_length=200)),
                ('weights', models.CharField(max_length=64)),
                ('objective', models.FloatField()),
                ('ewt', models.FloatField(default=0.0)),
                ('eot', models.FloatField(default=0.0)),
                ('eit', models.FloatField(default=0.0)),
                ('iterations', models.IntegerField(blank=True, null=True)),
                ('wall_time', models.FloatField(default=0.0)),
                ('seed', models.IntegerField(blank=True, null=True)),
                ('converged', models.BooleanField(default=True)),
                ('report', models.JSONField(blank=True, default=dict, encoder=scheduling.serializers.SchedulingJSONEncoder)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
                'indexes': [models.Index(fields=['label', 'method'], name='solverrun_label_method_idx')],
            },
        ),
    ]
