from django.apps import AppConfig


class AnalysisOpsConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "analysis_ops"
    verbose_name = "Operadores de análisis"
