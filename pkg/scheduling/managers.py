from django.db import models
from django.db.models import Avg, Count


class SolverRunQuerySet(models.QuerySet):
    def for_instance(self, label):
        return self.filter(label=label)

    def by_method(self, method):
        return self.filter(method=method)

    def converged(self):
        return self.filter(converged=True)

    def summary(self):
        """Mean objective, EWT/EOT/EIT and wall time per method."""
        return (
            self.values('method')
            .annotate(
                runs=Count('id'),
                mean_objective=Avg('objective'),
                mean_ewt=Avg('ewt'),
                mean_eot=Avg('eot'),
                mean_eit=Avg('eit'),
                mean_wall_time=Avg('wall_time'),
            )
            .order_by('method')
        )


class SolverRunManager(models.Manager.from_queryset(SolverRunQuerySet)):
    def record(self, command, label, method, weights, objective, decomposition=None, **extra):
        if decomposition is not None:
            extra.update(ewt=decomposition.wait, eot=decomposition.overtime, eit=decomposition.idle)
        return self.create(
            command=command,
            label=label,
            method=method,
            weights=', '.join(f'{w:g}' for w in weights.as_tuple()),
            objective=objective,
            **extra,
        )
