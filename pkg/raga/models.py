from django.db import models


class EvaluationRun(models.Model):
    manifest_path = models.CharField(max_length=500)
    relaxation = models.PositiveSmallIntegerField()
    neighbours = models.PositiveSmallIntegerField()
    metric = models.CharField(max_length=8)
    features = models.CharField(max_length=300, default="all")
    accuracy = models.FloatField()
    recordings = models.PositiveIntegerField()
    # softmax logits, one per model, in feature order
    weights = models.JSONField(default=list)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ["-created_at", "-id"]

    def __str__(self) -> str:
        return f"{self.manifest_path} r={self.relaxation} k={self.neighbours} {self.metric}: {self.accuracy:.2%}"


class RecordingResult(models.Model):
    run = models.ForeignKey(EvaluationRun, on_delete=models.CASCADE, related_name="results")
    recording_id = models.CharField(max_length=200)
    true_label = models.CharField(max_length=120)
    predicted_label = models.CharField(max_length=120)
    confidence = models.FloatField(default=0.0)

    class Meta:
        unique_together = [("run", "recording_id")]
        ordering = ["run", "recording_id"]

    @property
    def correct(self) -> bool:
        return self.true_label == self.predicted_label

    def __str__(self) -> str:
        return f"{self.recording_id}: {self.true_label} -> {self.predicted_label}"
