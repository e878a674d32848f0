"""
Derivación de semillas reproducibles.

Todas las corridas derivan sus semillas de una semilla maestra y de los
índices (fila, columna, ensayo, reinicio) que las identifican, de modo que
el resultado no depende del orden de ejecución ni del número de procesos.
"""
import numpy as np

from config.error_handlers import InvalidArgumentError


def derive_seed(*keys):
    """Semilla entera de 63 bits derivada de una tupla de enteros no negativos"""
    claves = [int(k) for k in keys]
    if any(k < 0 for k in claves):
        raise InvalidArgumentError(f"las semillas deben ser no negativas: {claves}")
    estado = np.random.SeedSequence(claves).generate_state(2, dtype=np.uint32)
    return (int(estado[0]) << 31) ^ int(estado[1])

