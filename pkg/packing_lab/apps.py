from django.apps import AppConfig


class PackingLabConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "packing_lab"
    verbose_name = "Laboratorio de empaquetamientos"
