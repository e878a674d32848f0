"""
Operadores de análisis Ω ∈ R^{p×d} y estructura de cosoporte.

Dos familias: la diferencia finita cíclica 2D (horizontal sobre vertical) para
imágenes n×n, y las matrices gaussianas reconstruibles desde su semilla.
Los píxeles se ordenan por filas: el píxel (i, j) es la entrada i·n + j.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _csgraph_components

from config.error_handlers import (
    DimensionMismatchError,
    InvalidArgumentError,
    InvalidDimensionError,
)

logger = logging.getLogger(__name__)

DEFAULT_COSUPPORT_TOL = 1e-8


class OperatorKind(str, Enum):
    DIF2D = "dif2d"
    GAUSSIAN = "gaussian"


@dataclass(frozen=True, eq=False)
class AnalysisOperator:
    """
    Operador de análisis denso con metadatos de familia.
    `n` solo aplica a DIF2D y `seed` solo a GAUSSIAN.
    """
    matrix: np.ndarray
    kind: OperatorKind
    n: int | None = None
    seed: int | None = None

    @property
    def p(self):
        return self.matrix.shape[0]

    @property
    def d(self):
        return self.matrix.shape[1]

    def rows(self, index):
        """Submatriz Ω restringida a las filas `index`"""
        return self.matrix[np.asarray(index, dtype=int)]

    def __str__(self):
        return f"{self.kind.value} {self.p}x{self.d}"


@dataclass(frozen=True)
class Cosupport:
    """Filas donde Ωx se anula (complemento del soporte T)"""
    zero_rows: tuple
    support_size: int
    tolerance: float = 0.0

    @property
    def cosparsity(self):
        return len(self.zero_rows)

    @property
    def p(self):
        return len(self.zero_rows) + self.support_size

    @classmethod
    def from_rows(cls, zero_rows, p, tolerance=0.0):
        filas = tuple(sorted(int(i) for i in set(zero_rows)))
        if filas and (filas[0] < 0 or filas[-1] >= p):
            raise InvalidArgumentError(f"filas fuera de rango para p={p}: {filas}")
        return cls(zero_rows=filas, support_size=p - len(filas), tolerance=tolerance)

    def support(self):
        """Índices del soporte T, en orden"""
        ceros = set(self.zero_rows)
        return tuple(i for i in range(self.p) if i not in ceros)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Base ortonormal de K_T = {x : Ω_{T^c} x = 0}"""
    basis: np.ndarray
    dim: int


def _frozen(matrix):
    matrix = np.ascontiguousarray(matrix, dtype=float)
    matrix.setflags(write=False)
    return matrix


def build_dif2d(n):
    """
    Diferencias cíclicas 2D: filas 0..d-1 son H(X)_{i,j} = X_{i,j} - X_{i,j+1},
    filas d..2d-1 son V(X)_{i,j} = X_{i,j} - X_{i+1,j}, índices módulo n.
    """
    if int(n) != n or n < 2:
        raise InvalidDimensionError(f"n debe ser un entero >= 2, se recibió {n}")
    n = int(n)
    d = n * n
    indices = np.arange(d).reshape(n, n)
    derecha = np.roll(indices, -1, axis=1).ravel()
    abajo = np.roll(indices, -1, axis=0).ravel()
    filas = np.arange(d)

    matrix = np.zeros((2 * d, d))
    matrix[filas, filas] = 1.0
    matrix[filas, derecha] = -1.0
    matrix[d + filas, filas] = 1.0
    matrix[d + filas, abajo] = -1.0
    return AnalysisOperator(matrix=_frozen(matrix), kind=OperatorKind.DIF2D, n=n)


def build_gaussian_operator(p, d, seed):
    """Ω con entradas i.i.d. N(0, 1), reconstruible bit a bit desde (p, d, seed)"""
    if p < 1 or d < 1:
        raise InvalidDimensionError(f"dimensiones no positivas: p={p}, d={d}")
    if seed < 0:
        raise InvalidArgumentError(f"la semilla debe ser no negativa: {seed}")
    rng = np.random.default_rng(int(seed))
    matrix = rng.standard_normal((int(p), int(d)))
    return AnalysisOperator(matrix=_frozen(matrix), kind=OperatorKind.GAUSSIAN, seed=int(seed))


def apply(op, x):
    """Ωx; para DIF2D se usa la estructura de diferencias en lugar del producto denso"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != op.d:
        raise DimensionMismatchError(f"se esperaba un vector de longitud {op.d}, se recibió {x.shape}")
    if op.kind is OperatorKind.DIF2D:
        image = x.reshape(op.n, op.n)
        horizontal = image - np.roll(image, -1, axis=1)
        vertical = image - np.roll(image, -1, axis=0)
        return np.concatenate([horizontal.ravel(), vertical.ravel()])
    return op.matrix @ x


def cosupport(op, x, tol=DEFAULT_COSUPPORT_TOL):
    """Filas con |(Ωx)_i| <= tol"""
    if tol < 0:
        raise InvalidArgumentError(f"la tolerancia debe ser no negativa: {tol}")
    valores = np.abs(apply(op, x))
    ceros = np.flatnonzero(valores <= tol)
    return Cosupport(
        zero_rows=tuple(int(i) for i in ceros),
        support_size=op.p - len(ceros),
        tolerance=float(tol),
    )


def rank_threshold(op):
    """Umbral relativo de rango numérico: max(p, d)·ε"""
    return max(op.p, op.d) * np.finfo(float).eps


def subspace_basis(op, cos):
    """
    Base ortonormal del espacio nulo de Ω restringida a las filas cero, por SVD.
    Un cosoporte vacío da el espacio completo (b = d).
    """
    if cos.p != op.p:
        raise DimensionMismatchError(f"cosoporte para p={cos.p}, operador con p={op.p}")
    if not cos.zero_rows:
        return SubspaceBasis(basis=np.eye(op.d), dim=op.d)
    basis = scipy.linalg.null_space(op.rows(cos.zero_rows), rcond=rank_threshold(op))
    return SubspaceBasis(basis=basis, dim=basis.shape[1])


def image_side(d):
    """Lado n de una imagen cuadrada con d píxeles"""
    n = math.isqrt(int(d))
    if n * n != d:
        raise InvalidDimensionError(f"d={d} no es un cuadrado perfecto")
    return n


def connected_components(image, tol=0.0):
    """
    Componentes conexas con vecindad 4 cíclica: dos píxeles adyacentes están
    en la misma componente si sus valores difieren a lo más en `tol`.
    """
    if tol < 0:
        raise InvalidArgumentError(f"la tolerancia debe ser no negativa: {tol}")
    image = np.asarray(image, dtype=float)
    if image.ndim == 1:
        image = image.reshape(image_side(image.size), -1)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise DimensionMismatchError(f"se esperaba una imagen cuadrada, se recibió {image.shape}")

    n = image.shape[0]
    indices = np.arange(n * n).reshape(n, n)
    origen, destino = [], []
    for eje in (0, 1):
        vecino = np.roll(image, -1, axis=eje)
        iguales = np.abs(image - vecino) <= tol
        origen.append(indices[iguales])
        destino.append(np.roll(indices, -1, axis=eje)[iguales])
    origen = np.concatenate(origen)
    destino = np.concatenate(destino)

    grafo = coo_matrix(
        (np.ones(origen.size), (origen, destino)),
        shape=(n * n, n * n),
    )
    total, _ = _csgraph_components(grafo, directed=False)
    return int(total)


def write_operator(op, path):
    """
    Formato de texto: encabezado "p d kind seed"; las filas solo se escriben
    para operadores gaussianos (DIF2D se reconstruye desde el encabezado).
    """
    path = Path(path)
    seed = op.seed if op.kind is OperatorKind.GAUSSIAN else "-"
    lineas = [f"{op.p} {op.d} {op.kind.value} {seed}"]
    if op.kind is OperatorKind.GAUSSIAN:
        for fila in op.matrix:
            lineas.append(" ".join(f"{v:.17g}" for v in fila))
    path.write_text("\n".join(lineas) + "\n")
    logger.debug("Operador %s escrito en %s", op, path)
    return path


def read_operator(path):
    lineas = Path(path).read_text().split("\n")
    try:
        p, d, kind, seed = lineas[0].split()
        p, d, kind = int(p), int(d), OperatorKind(kind)
    except ValueError as exc:
        raise InvalidArgumentError(f"encabezado de operador inválido en {path}: {lineas[0]!r}") from exc

    if kind is OperatorKind.DIF2D:
        op = build_dif2d(image_side(d))
        if op.p != p:
            raise DimensionMismatchError(f"encabezado DIF2D inconsistente: p={p}, d={d}")
        return op

    filas = [linea for linea in lineas[1:] if linea.strip()]
    if not filas:
        return build_gaussian_operator(p, d, int(seed))
    matrix = np.array([[float(v) for v in linea.split()] for linea in filas])
    if matrix.shape != (p, d):
        raise DimensionMismatchError(f"se esperaban {p}x{d} entradas, se leyeron {matrix.shape}")
    return AnalysisOperator(matrix=_frozen(matrix), kind=kind, seed=int(seed))
