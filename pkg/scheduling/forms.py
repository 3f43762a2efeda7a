from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from .core import ObjectiveWeights
from .evaluator import TIE_BREAKS, EvaluatorConfig
from .generator import GenSpec
from .heuristics import CONVENTIONS, HedgingConfig
from .lpha import LphaConfig
from .subproblem import MODES


def parse_weights(value):
    """``"w1,w2,w3"`` (or a 3-sequence) as a tuple of floats."""
    if isinstance(value, str):
        parts = [part for part in value.replace(' ', '').split(',') if part]
    else:
        parts = list(value)
    if len(parts) != 3:
        raise ValidationError('Weights need exactly three values: wait, overtime, idle.')
    try:
        return tuple(float(part) for part in parts)
    except (TypeError, ValueError):
        raise ValidationError('Weights must be numbers.')


class ConfigForm(forms.Form):
    """Form whose cleaned data becomes an immutable solver config.

    Blank fields fall back to ``defaults()``.
    """

    config_class = None
    field_map = {}

    def defaults(self):
        return {}

    def to_config(self):
        if not self.is_valid():
            raise ValueError(self.errors_as_text())
        values = dict(self.defaults())
        for name, value in self.cleaned_data.items():
            if value is None or value == '':
                continue
            values[self.field_map.get(name, name)] = value
        try:
            return self.config_class(**values)
        except ValueError as exc:
            raise ValueError(f'{self.__class__.__name__}: {exc}') from exc

    def errors_as_text(self):
        return '; '.join(
            f'{field}: {" ".join(messages)}' for field, messages in self.errors.items()
        )


class WeightsForm(forms.Form):
    weights = forms.CharField(required=False)
    normalize = forms.BooleanField(required=False)

    def clean_weights(self):
        value = self.cleaned_data['weights']
        if not value:
            return tuple(settings.CHEMOSCHED['WEIGHTS'])
        values = parse_weights(value)
        if any(v < 0 for v in values):
            raise ValidationError('Weights must be non-negative.')
        if not any(v > 0 for v in values):
            raise ValidationError('At least one weight must be positive.')
        return values

    def to_weights(self):
        if not self.is_valid():
            raise ValueError('; '.join(' '.join(m) for m in self.errors.values()))
        return ObjectiveWeights.from_sequence(
            self.cleaned_data['weights'], normalize=self.cleaned_data['normalize']
        )


class LphaConfigForm(ConfigForm):
    config_class = LphaConfig
    field_map = {
        'fix_start': 'fix_start_iter',
        'fix_frac': 'fix_fraction',
        'max_iters': 'max_iterations',
        'threads': 'workers',
    }

    alpha = forms.FloatField(required=False)
    rho0 = forms.FloatField(required=False)
    rho_u1 = forms.FloatField(required=False, min_value=0)
    rho_u2 = forms.FloatField(required=False, min_value=0)
    iterlimit = forms.IntegerField(required=False, min_value=1)
    fix_start = forms.IntegerField(required=False, min_value=1)
    fix_frac = forms.FloatField(required=False)
    cycle_threshold = forms.FloatField(required=False, min_value=0)
    max_iters = forms.IntegerField(required=False, min_value=1)
    mode = forms.ChoiceField(required=False, choices=[(m, m) for m in MODES])
    threads = forms.IntegerField(required=False, min_value=1)
    restarts = forms.IntegerField(required=False, min_value=0)

    def defaults(self):
        return dict(settings.CHEMOSCHED['LPHA'])

    def clean_alpha(self):
        alpha = self.cleaned_data['alpha']
        if alpha is not None and alpha <= 1:
            raise ValidationError('alpha must be greater than 1.')
        return alpha

    def clean_rho0(self):
        rho0 = self.cleaned_data['rho0']
        if rho0 is not None and rho0 <= 0:
            raise ValidationError('rho0 must be positive.')
        return rho0

    def clean_fix_frac(self):
        fraction = self.cleaned_data['fix_frac']
        if fraction is not None and not 0 < fraction <= 1:
            raise ValidationError('fix-frac must lie in (0, 1].')
        return fraction

    def clean(self):
        cleaned_data = super().clean()
        defaults = self.defaults()
        rho_u1 = cleaned_data.get('rho_u1')
        rho_u2 = cleaned_data.get('rho_u2')
        low = defaults['rho_u1'] if rho_u1 is None else rho_u1
        high = defaults['rho_u2'] if rho_u2 is None else rho_u2
        if low >= high:
            raise ValidationError('rho-u1 must be smaller than rho-u2.')
        return cleaned_data


class GenSpecForm(ConfigForm):
    config_class = GenSpec
    field_map = {
        'patients': 'num_patients',
        'scenarios': 'num_scenarios',
        'nurses': 'num_nurses',
        'chairs': 'num_chairs',
    }

    patients = forms.IntegerField(required=False, min_value=1)
    scenarios = forms.IntegerField(required=False, min_value=1)
    nurses = forms.IntegerField(required=False, min_value=1)
    chairs = forms.IntegerField(required=False, min_value=1)
    shift_length = forms.IntegerField(required=False, min_value=1)
    overtime_limit = forms.IntegerField(required=False, min_value=0)
    seed = forms.IntegerField(required=False, min_value=0)
    target_overtime = forms.FloatField(required=False, min_value=0)

    def defaults(self):
        return {
            'shift_length': settings.CHEMOSCHED['SHIFT_LENGTH'],
            'overtime_limit': settings.CHEMOSCHED['OVERTIME_LIMIT'],
        }


class HedgingForm(ConfigForm):
    config_class = HedgingConfig
    field_map = {'k': 'percentile'}

    k = forms.FloatField(required=False, min_value=0, max_value=1)
    convention = forms.ChoiceField(required=False, choices=[(c, c) for c in CONVENTIONS])


class EvaluatorConfigForm(ConfigForm):
    config_class = EvaluatorConfig
    field_map = {'strict': 'strict_overtime'}

    nurse_capacity = forms.IntegerField(required=False, min_value=1)
    strict = forms.BooleanField(required=False)
    tie_break = forms.ChoiceField(required=False, choices=[(t, t) for t in TIE_BREAKS])
