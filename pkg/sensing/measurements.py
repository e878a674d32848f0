"""
Modelo de medición y = Ax + z con z ~ N(0, σ²I).

Dos normalizaciones de A: columnas unitarias (la de los experimentos) y
norma de operador igual a uno (la que suponen las cotas inferiores).
"""
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from config.error_handlers import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidDimensionError,
)

logger = logging.getLogger(__name__)


class Normalization(str, Enum):
    UNIT_COLUMNS = "unit-columns"
    OP_NORM_LEQ_ONE = "op-norm"


@dataclass(frozen=True, eq=False)
class SensingInstance:
    A: np.ndarray
    y: np.ndarray
    sigma: float
    x_true: np.ndarray
    normalization: Normalization
    matrix_seed: int
    noise_seed: int

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def d(self):
        return self.A.shape[1]

    @property
    def noise(self):
        return self.y - self.A @ self.x_true


def top_singular_value(A):
    return float(np.linalg.norm(A, 2))


def gen_measurement_matrix(m, d, normalization, seed):
    """Matriz gaussiana normalizada por columnas o por su mayor valor singular"""
    if m < 1 or d < 1:
        raise InvalidDimensionError(f"dimensiones no positivas: m={m}, d={d}")
    normalization = Normalization(normalization)
    if m > d:
        logger.warning("m=%s > d=%s: fuera del régimen de submuestreo", m, d)

    rng = np.random.default_rng(int(seed))
    A = rng.standard_normal((int(m), int(d)))
    if normalization is Normalization.UNIT_COLUMNS:
        A /= np.linalg.norm(A, axis=0)
    else:
        A /= top_singular_value(A)
    return A


def measure(A, x, sigma, noise_seed):
    """y = Ax + z; con σ = 0 las mediciones son exactas"""
    if sigma < 0:
        raise InvalidArgumentError(f"σ debe ser no negativa: {sigma}")
    x = np.asarray(x, dtype=float)
    if x.shape != (A.shape[1],):
        raise DimensionMismatchError(f"A tiene {A.shape[1]} columnas, x tiene forma {x.shape}")
    y = A @ x
    if sigma > 0:
        rng = np.random.default_rng(int(noise_seed))
        y = y + rng.normal(0.0, sigma, size=A.shape[0])
    return y


def make_instance(x_true, m, sigma, normalization, matrix_seed, noise_seed):
    x_true = np.asarray(x_true, dtype=float)
    normalization = Normalization(normalization)
    A = gen_measurement_matrix(m, x_true.shape[0], normalization, matrix_seed)
    return SensingInstance(
        A=A,
        y=measure(A, x_true, sigma, noise_seed),
        sigma=float(sigma),
        x_true=x_true,
        normalization=normalization,
        matrix_seed=int(matrix_seed),
        noise_seed=int(noise_seed),
    )


def _row(v):
    return " ".join(f"{value:.17g}" for value in v)


def write_instance(instance, path):
    """
    Encabezado "m d sigma normalization matrix_seed noise_seed", luego las m
    filas de A, la línea de y y la línea de x_true.
    """
    path = Path(path)
    lineas = [
        f"{instance.m} {instance.d} {instance.sigma:.17g} {instance.normalization.value} "
        f"{instance.matrix_seed} {instance.noise_seed}"
    ]
    lineas.extend(_row(fila) for fila in instance.A)
    lineas.append(_row(instance.y))
    lineas.append(_row(instance.x_true))
    path.write_text("\n".join(lineas) + "\n")
    return path


def read_instance(path):
    lineas = [linea for linea in Path(path).read_text().split("\n") if linea.strip()]
    try:
        m, d, sigma, normalization, matrix_seed, noise_seed = lineas[0].split()
        m, d = int(m), int(d)
        A = np.array([[float(v) for v in linea.split()] for linea in lineas[1:1 + m]])
        y = np.array([float(v) for v in lineas[1 + m].split()])
        x_true = np.array([float(v) for v in lineas[2 + m].split()])
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError(f"archivo de instancia inválido: {path}") from exc
    if A.shape != (m, d) or y.shape != (m,) or x_true.shape != (d,):
        raise DimensionMismatchError(f"dimensiones inconsistentes en {path}")
    return SensingInstance(
        A=A,
        y=y,
        sigma=float(sigma),
        x_true=x_true,
        normalization=Normalization(normalization),
        matrix_seed=int(matrix_seed),
        noise_seed=int(noise_seed),
    )
