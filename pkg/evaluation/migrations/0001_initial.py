# Generated by Django 5.1.1 on 2026-10-17 09:00

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        ("representations", "0001_initial"),
    ]

    operations = [
        migrations.CreateModel(
            name="EvaluationReport",
            fields=[
                (
                    "id",
                    models.BigAutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name="ID",
                    ),
                ),
                (
                    "protocol",
                    models.CharField(
                        choices=[
                            ("forecast", "Forecasting"),
                            ("classify", "Classification"),
                            ("anomaly", "Anomaly detection"),
                            ("windowed-anomaly", "Windowed anomaly classification"),
                        ],
                        max_length=32,
                    ),
                ),
                ("checkpoint", models.CharField(max_length=500)),
                ("data_path", models.CharField(max_length=500)),
                ("summary", models.JSONField(default=dict)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                (
                    "run",
                    models.ForeignKey(
                        blank=True,
                        null=True,
                        on_delete=django.db.models.deletion.SET_NULL,
                        related_name="reports",
                        to="representations.trainingrun",
                    ),
                ),
            ],
            options={
                "ordering": ("-created_at",),
            },
        ),
    ]
