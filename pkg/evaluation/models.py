from django.db import models

from representations.models import TrainingRun


class EvaluationReport(models.Model):
    PROTOCOL_CHOICES = (
        ("forecast", "Forecasting"),
        ("classify", "Classification"),
        ("anomaly", "Anomaly detection"),
        ("windowed-anomaly", "Windowed anomaly classification"),
    )

    run = models.ForeignKey(
        TrainingRun,
        blank=True,
        null=True,
        on_delete=models.SET_NULL,
        related_name="reports",
    )
    protocol = models.CharField(max_length=32, choices=PROTOCOL_CHOICES)
    checkpoint = models.CharField(max_length=500)
    data_path = models.CharField(max_length=500)
    summary = models.JSONField(default=dict)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ("-created_at",)

    def __str__(self):
        return f"{self.get_protocol_display()} ({self.checkpoint})"
