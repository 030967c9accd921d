from django.db import models
from django_extensions.db.fields import AutoSlugField


class TrainingRun(models.Model):
    name = models.CharField(max_length=255)
    slug = AutoSlugField(populate_from=["name"], unique=True, max_length=100)
    seed = models.IntegerField(default=0)
    config = models.JSONField(default=dict)
    data_path = models.CharField(max_length=500, blank=True)
    output_dir = models.CharField(max_length=500)
    checkpoint = models.CharField(max_length=500, blank=True)
    history = models.CharField(max_length=500, blank=True)
    final_loss = models.FloatField(blank=True, null=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ("-created_at", "name")

    def __str__(self):
        return self.name
