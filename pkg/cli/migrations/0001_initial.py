# Generated by Django 5.2.8 on 2026-10-19 10:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="RunManifest",
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
                    "command",
                    models.CharField(
                        choices=[
                            ("gen-operator", "Generar operador"),
                            ("gen-signal", "Generar señal"),
                            ("measure", "Medir"),
                            ("solve", "Resolver"),
                            ("pack", "Empaquetamiento"),
                            ("verify-pack", "Verificar empaquetamiento"),
                            ("bounds", "Cotas inferiores"),
                            ("phase", "Transición de fase"),
                            ("mc-verify", "Verificación Monte Carlo"),
                        ],
                        max_length=20,
                        verbose_name="Comando",
                    ),
                ),
                (
                    "parameters",
                    models.JSONField(default=dict, verbose_name="Parámetros"),
                ),
                (
                    "master_seed",
                    models.BigIntegerField(verbose_name="Semilla maestra"),
                ),
                (
                    "output_dir",
                    models.CharField(max_length=500, verbose_name="Directorio de salida"),
                ),
                ("version", models.CharField(max_length=20, verbose_name="Versión")),
                (
                    "exit_code",
                    models.PositiveSmallIntegerField(
                        default=0, verbose_name="Código de salida"
                    ),
                ),
                (
                    "diagnostic",
                    models.TextField(blank=True, verbose_name="Diagnóstico"),
                ),
                (
                    "artifacts",
                    models.JSONField(blank=True, default=list, verbose_name="Artefactos"),
                ),
                (
                    "created_at",
                    models.DateTimeField(
                        auto_now_add=True, verbose_name="Fecha de ejecución"
                    ),
                ),
            ],
            options={
                "verbose_name": "Manifiesto de ejecución",
                "verbose_name_plural": "Manifiestos de ejecución",
                "ordering": ["-created_at"],
                "indexes": [
                    models.Index(
                        fields=["-created_at"], name="cli_runmani_created_8c1f2a_idx"
                    ),
                    models.Index(fields=["command"], name="cli_runmani_command_4e7b90_idx"),
                ],
            },
        ),
    ]
