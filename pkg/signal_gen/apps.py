from django.apps import AppConfig


class SignalGenConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "signal_gen"
    verbose_name = "Generación de señales co-dispersas"
