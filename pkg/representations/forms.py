from django import forms
from django.conf import settings

from representations.exceptions import ConfigError
from representations.losses import ABLATIONS, MAX_DELTA, TASKS, ablation_alphas, check_weights
from representations.time_embedding import TIME_EMBEDDING_KINDS


class NumberListField(forms.JSONField):
    """A JSON list of numbers, cast to ``item_type``; every item must be positive."""

    def __init__(self, item_type=float, **kwargs):
        self.item_type = item_type
        super().__init__(**kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        if value is None:
            return value
        if not isinstance(value, (list, tuple)) or not value:
            raise forms.ValidationError("Expected a non-empty list of numbers")
        try:
            items = [self.item_type(item) for item in value]
        except (TypeError, ValueError):
            raise forms.ValidationError("Expected a non-empty list of numbers")
        if any(item <= 0 for item in items):
            raise forms.ValidationError("List items must be positive")
        return items


class StrictConfigForm(forms.Form):
    """One run-config section validated on top of ``settings.TREP[section]``.

    Keys the form does not declare are errors, not silently dropped.
    """

    section = None

    def __init__(self, data=None, **kwargs):
        data = dict(data or {})
        self.given_keys = set(data)
        self.unknown_keys = sorted(set(data) - set(self.base_fields))
        merged = {**settings.TREP[self.section], **data}
        super().__init__(data=merged, **kwargs)

    def clean(self):
        cleaned_data = super().clean()
        if self.unknown_keys:
            raise forms.ValidationError(f"Unknown keys: {', '.join(self.unknown_keys)}")
        return cleaned_data

    def resolve(self):
        if not self.is_valid():
            raise ConfigError(f"invalid [{self.section}] section:\n{self.errors.as_text()}")
        return dict(self.cleaned_data)


class TrainConfigForm(StrictConfigForm):
    section = "train"

    batch_size = forms.IntegerField(min_value=1)
    lr = forms.FloatField(min_value=0.0)
    max_epochs = forms.IntegerField(min_value=1)
    seed = forms.IntegerField(min_value=0, required=False)


class EncoderConfigForm(StrictConfigForm):
    section = "encoder"

    output_dims = forms.IntegerField(min_value=1)
    hidden_dims = forms.IntegerField(min_value=1)
    depth = forms.IntegerField(min_value=1)
    kernel_size = forms.IntegerField(min_value=1)
    mask_prob = forms.FloatField(min_value=0.0)
    te_kind = forms.ChoiceField(choices=[(kind, kind) for kind in TIME_EMBEDDING_KINDS])
    te_dims = forms.IntegerField(min_value=2)
    te_hidden = forms.IntegerField(min_value=1)

    def clean_mask_prob(self):
        mask_prob = self.cleaned_data["mask_prob"]
        if mask_prob >= 1.0:
            raise forms.ValidationError("Mask probability must be below 1")
        return mask_prob


class TaskConfigForm(StrictConfigForm):
    section = "tasks"

    alpha_inst = forms.FloatField(min_value=0.0)
    alpha_temp = forms.FloatField(min_value=0.0)
    alpha_div = forms.FloatField(min_value=0.0)
    alpha_pred = forms.FloatField(min_value=0.0)
    delta_max = forms.IntegerField(min_value=1, max_value=MAX_DELTA)
    n_div_pairs = forms.IntegerField(min_value=1, required=False)
    n_pred_instances = forms.IntegerField(min_value=1, required=False)
    n_pred_timesteps = forms.IntegerField(min_value=1, required=False)
    head_hidden = forms.IntegerField(min_value=1)
    ablation = forms.ChoiceField(choices=[(name, name) for name in ABLATIONS])

    def clean(self):
        cleaned_data = super().clean()
        preset = ablation_alphas(cleaned_data["ablation"]) if cleaned_data.get("ablation") else None
        if preset is not None:
            explicit = sorted(f"alpha_{task}" for task in TASKS if f"alpha_{task}" in self.given_keys)
            if explicit:
                raise forms.ValidationError(f"Set either an ablation or {', '.join(explicit)}, not both")
            cleaned_data.update({f"alpha_{task}": alpha for task, alpha in zip(TASKS, preset)})
        alphas = [cleaned_data.get(f"alpha_{task}") for task in TASKS]
        if None not in alphas:
            try:
                check_weights(alphas)
            except ConfigError as exc:
                raise forms.ValidationError(str(exc))
        return cleaned_data
