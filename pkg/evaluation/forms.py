from django import forms

from evaluation.protocols import FEATURE_MODES
from representations.forms import NumberListField, StrictConfigForm

FEATURE_CHOICES = [(mode, mode) for mode in FEATURE_MODES]


class FractionField(forms.FloatField):
    def validate(self, value):
        super().validate(value)
        if value is not None and not 0.0 < value < 1.0:
            raise forms.ValidationError("Fractions must lie strictly between 0 and 1")


class ForecastConfigForm(StrictConfigForm):
    section = "forecast"

    horizons = NumberListField(item_type=int)
    lookback = forms.IntegerField(min_value=1)
    ridge_alphas = NumberListField()
    valid_fraction = FractionField()
    test_fraction = FractionField()

    def clean(self):
        cleaned_data = super().clean()
        valid, test = cleaned_data.get("valid_fraction"), cleaned_data.get("test_fraction")
        if valid is not None and test is not None and valid + test >= 1.0:
            raise forms.ValidationError("Validation and test fractions must leave a training part")
        return cleaned_data


class ClassifyConfigForm(StrictConfigForm):
    section = "classify"

    window = forms.IntegerField(min_value=1)
    c_grid = NumberListField()
    folds = forms.IntegerField(min_value=2)
    test_fraction = FractionField()


class AnomalyConfigForm(StrictConfigForm):
    section = "anomaly"

    trailing_window = forms.IntegerField(min_value=1)
    beta = forms.FloatField(min_value=0.0)
    delay = forms.IntegerField(min_value=0)
    diff_order = forms.IntegerField(min_value=0)
    lookback = forms.IntegerField(min_value=1)
    zscore = forms.BooleanField(required=False)
    valid_fraction = FractionField()
    beta_grid = NumberListField()
    features = forms.ChoiceField(choices=FEATURE_CHOICES)


class WindowedConfigForm(StrictConfigForm):
    section = "windowed"

    window = forms.IntegerField(min_value=1)
    c_grid = NumberListField()
    folds = forms.IntegerField(min_value=2)
    test_fraction = FractionField()
    features = forms.ChoiceField(choices=FEATURE_CHOICES)
