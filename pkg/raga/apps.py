from django.apps import AppConfig

class RagaConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "raga"
    verbose_name = "Raga recognition"
