from django.db import models


class RunManifest(models.Model):
    """
    Registro de cada ejecución de la línea de comandos: la configuración
    resuelta, la semilla maestra y los artefactos producidos.
    """
    COMMAND_CHOICES = [
        ('gen-operator', 'Generar operador'),
        ('gen-signal', 'Generar señal'),
        ('measure', 'Medir'),
        ('solve', 'Resolver'),
        ('pack', 'Empaquetamiento'),
        ('verify-pack', 'Verificar empaquetamiento'),
        ('bounds', 'Cotas inferiores'),
        ('phase', 'Transición de fase'),
        ('mc-verify', 'Verificación Monte Carlo'),
    ]

    command = models.CharField(
        max_length=20,
        choices=COMMAND_CHOICES,
        verbose_name="Comando"
    )
    parameters = models.JSONField(
        default=dict,
        verbose_name="Parámetros"
    )
    master_seed = models.BigIntegerField(
        verbose_name="Semilla maestra"
    )
    output_dir = models.CharField(
        max_length=500,
        verbose_name="Directorio de salida"
    )
    version = models.CharField(
        max_length=20,
        verbose_name="Versión"
    )
    exit_code = models.PositiveSmallIntegerField(
        default=0,
        verbose_name="Código de salida"
    )
    diagnostic = models.TextField(
        blank=True,
        verbose_name="Diagnóstico"
    )
    artifacts = models.JSONField(
        default=list,
        blank=True,
        verbose_name="Artefactos"
    )
    created_at = models.DateTimeField(
        auto_now_add=True,
        verbose_name="Fecha de ejecución"
    )

    class Meta:
        verbose_name = "Manifiesto de ejecución"
        verbose_name_plural = "Manifiestos de ejecución"
        ordering = ['-created_at']
        indexes = [
            models.Index(fields=['-created_at'], name='cli_runmani_created_8c1f2a_idx'),
            models.Index(fields=['command'], name='cli_runmani_command_4e7b90_idx'),
        ]

    def __str__(self):
        return f"{self.command} (semilla {self.master_seed})"

    @property
    def succeeded(self):
        return self.exit_code == 0
