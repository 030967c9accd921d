# Generated by Django 5.1.1 on 2026-10-17 09:00

import django_extensions.db.fields
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="TrainingRun",
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
                ("name", models.CharField(max_length=255)),
                (
                    "slug",
                    django_extensions.db.fields.AutoSlugField(
                        blank=True,
                        editable=False,
                        max_length=100,
                        populate_from=["name"],
                        unique=True,
                    ),
                ),
                ("seed", models.IntegerField(default=0)),
                ("config", models.JSONField(default=dict)),
                ("data_path", models.CharField(blank=True, max_length=500)),
                ("output_dir", models.CharField(max_length=500)),
                ("checkpoint", models.CharField(blank=True, max_length=500)),
                ("history", models.CharField(blank=True, max_length=500)),
                ("final_loss", models.FloatField(blank=True, null=True)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
            ],
            options={
                "ordering": ("-created_at", "name"),
            },
        ),
    ]
