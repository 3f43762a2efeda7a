from django.db import models
from django.utils.text import slugify

from .managers import SolverRunManager
from .serializers import SchedulingJSONEncoder


class SolverRun(models.Model):
    COMMAND_CHOICES = [
        ('solve', 'Solve'),
        ('vss', 'Value of the stochastic solution'),
        ('compare_heuristics', 'Heuristic comparison'),
    ]

    command = models.CharField(max_length=32, choices=COMMAND_CHOICES)
    label = models.CharField(max_length=100)
    method = models.CharField(max_length=32)
    slug = models.SlugField(max_length=200, blank=True)
    weights = models.CharField(max_length=64)
    objective = models.FloatField()
    ewt = models.FloatField(default=0.0)
    eot = models.FloatField(default=0.0)
    eit = models.FloatField(default=0.0)
    iterations = models.IntegerField(null=True, blank=True)
    wall_time = models.FloatField(default=0.0)
    seed = models.IntegerField(null=True, blank=True)
    converged = models.BooleanField(default=True)
    report = models.JSONField(default=dict, blank=True, encoder=SchedulingJSONEncoder)
    created_at = models.DateTimeField(auto_now_add=True)

    objects = SolverRunManager()

    class Meta:
        ordering = ['-created_at', '-id']
        indexes = [
            models.Index(fields=['label', 'method'], name='solverrun_label_method_idx'),
        ]

    def __str__(self):
        return f'{self.label} {self.method}: {self.objective:.2f}'

    def save(self, *args, **kwargs):
        if not self.slug:
            self.slug = slugify(f'{self.label}-{self.method}-{self.seed}')
        super().save(*args, **kwargs)
