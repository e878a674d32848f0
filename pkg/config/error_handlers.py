"""
Errores del dominio y su traducción a códigos de salida de la línea de comandos
"""
from django.core.management.base import CommandError


USAGE_EXIT_CODE = 2
DOMAIN_EXIT_CODE = 1


class CosparseError(Exception):
    """Error base de todos los módulos del proyecto"""


class InvalidDimensionError(CosparseError, ValueError):
    """Dimensiones no positivas o fuera del régimen permitido"""


class DimensionMismatchError(CosparseError, ValueError):
    """Las longitudes de vectores y matrices no coinciden"""


class InvalidArgumentError(CosparseError, ValueError):
    """Argumento con valor inválido (signos, tolerancias, hipótesis de las cotas)"""


class DegenerateOperatorError(CosparseError):
    """El espacio nulo no tiene la dimensión esperada"""


class GenerationFailureError(CosparseError):
    """Se agotaron los reintentos al generar una señal"""


class NoSolutionError(CosparseError):
    """Ningún cosoporte candidato es consistente con las mediciones"""


class PackingFailureError(CosparseError):
    """
    Se agotaron los reinicios al construir un empaquetamiento.
    Conserva la mejor distancia mínima observada.
    """

    def __init__(self, message, best_min_distance):
        super().__init__(message)
        self.best_min_distance = best_min_distance


class UsageError(CosparseError):
    """Claves o banderas desconocidas en la configuración de una corrida"""


def exit_code_for(exc):
    """Código de salida que corresponde a una excepción"""
    if isinstance(exc, UsageError):
        return USAGE_EXIT_CODE
    return DOMAIN_EXIT_CODE


def handle_command_error(exc):
    """
    Convierte una excepción en CommandError con el código de salida correcto.
    Los errores de uso salen con 2, los del dominio y de E/S con 1.
    """
    if isinstance(exc, CommandError):
        return exc
    return CommandError(str(exc), returncode=exit_code_for(exc))
