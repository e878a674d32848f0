"""
Empaquetamientos aleatorios de K ∩ B^d: construcción por lotes con reinicio,
verificación exhaustiva de distancias y los muestreadores de las dos familias
de señales (patrones 2D-DIF y puntos de K_1 gaussiano).
"""
import functools
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from analysis_ops.seeds import derive_seed
from config.error_handlers import (
    DimensionMismatchError,
    InvalidArgumentError,
    PackingFailureError,
)
from signal_gen.signals import (
    gen_gaussian_k1,
    gen_packing_pattern,
    packing_free_cells,
    random_signs,
)

logger = logging.getLogger(__name__)

MAX_POINTS = 10_000
# por encima de este tamaño la distancia mínima se busca con un árbol k-d
EXHAUSTIVE_LIMIT = 2_000


@dataclass(frozen=True, eq=False)
class Packing:
    points: np.ndarray
    delta: float
    certified: bool
    min_distance: float

    @property
    def count(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]


def min_pairwise_distance(points):
    """Distancia mínima exacta entre pares distintos de filas"""
    points = np.asarray(points, dtype=float)
    if points.shape[0] <= EXHAUSTIVE_LIMIT:
        return float(pdist(points).min())
    distancias, _ = cKDTree(points).query(points, k=2)
    return float(distancias[:, 1].min())


def verify_packing(points, delta):
    """(certificado, distancia mínima): certificado si toda distancia >= delta"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] < 2:
        raise InvalidArgumentError("se necesitan al menos dos puntos")
    if points.shape[0] > MAX_POINTS:
        raise InvalidArgumentError(f"a lo más {MAX_POINTS} puntos, se recibieron {points.shape[0]}")
    minima = min_pairwise_distance(points)
    return minima >= delta, minima


def construct_random_packing(sampler, delta, count, max_restarts=10, seed=0):
    """
    Extrae `count` puntos i.i.d. del muestreador (una función semilla → punto).
    Si algún par queda a distancia menor que delta se descarta el lote completo
    y se reintenta con la semilla seed ⊕ reinicio.
    """
    if count < 2:
        raise InvalidArgumentError(f"count debe ser >= 2, se recibió {count}")
    if count > MAX_POINTS:
        raise InvalidArgumentError(f"count debe ser <= {MAX_POINTS}")
    if delta <= 0:
        raise InvalidArgumentError(f"delta debe ser positivo: {delta}")

    mejor = -math.inf
    for reinicio in range(max_restarts + 1):
        lote = int(seed) ^ reinicio
        points = np.array([sampler(derive_seed(lote, i)) for i in range(count)])
        if np.any(np.linalg.norm(points, axis=1) > 1.0 + 1e-12):
            raise InvalidArgumentError("el muestreador produjo puntos fuera de la bola unitaria")
        certificado, minima = verify_packing(points, delta)
        mejor = max(mejor, minima)
        if certificado:
            logger.info("Empaquetamiento de %s puntos certificado tras %s reinicios", count, reinicio)
            return Packing(points=points, delta=float(delta), certified=True, min_distance=minima)
        logger.debug("Reinicio %s: distancia mínima %.4f < %.4f", reinicio, minima, delta)

    raise PackingFailureError(
        f"no se certificó un empaquetamiento de {count} puntos con delta={delta} "
        f"tras {max_restarts} reinicios (mejor distancia mínima {mejor:.6f})",
        best_min_distance=mejor,
    )


def sample_packing_point_dif2d(n, seed):
    """Patrón 2D-DIF con signos i.i.d. uniformes; vive en K_2 ∩ S^{d-1}"""
    return gen_packing_pattern(n, random_signs(packing_free_cells(n), seed)).x


def sample_packing_point_gaussian(op, seed):
    return gen_gaussian_k1(op, seed).x


def dif2d_sampler(n):
    return functools.partial(sample_packing_point_dif2d, int(n))


def gaussian_sampler(op):
    return functools.partial(sample_packing_point_gaussian, op)


def _uniform_sphere_point(q, d, seed):
    rng = np.random.default_rng(int(seed))
    punto = np.zeros(d)
    direccion = rng.standard_normal(q)
    punto[:q] = direccion / np.linalg.norm(direccion)
    return punto


def uniform_sphere_sampler(q, d=None):
    """Puntos uniformes en la esfera de un subespacio de dimensión q dentro de R^d"""
    d = q if d is None else d
    if q < 1 or q > d:
        raise InvalidArgumentError(f"se requiere 1 <= q <= d, se recibió q={q}, d={d}")
    return functools.partial(_uniform_sphere_point, int(q), int(d))


def estimate_collision_probability(sampler, delta, pairs, seed):
    """η empírico: frecuencia de pares independientes a distancia menor que delta"""
    colisiones = 0
    for k in range(int(pairs)):
        x = sampler(derive_seed(seed, k, 0))
        y = sampler(derive_seed(seed, k, 1))
        colisiones += np.linalg.norm(x - y) < delta
    return colisiones / pairs


def min_distance_bound(count, m):
    """Cota 4/|X|^{1/m} para la distancia mínima de A·X con ‖A‖ <= 1"""
    if count < 1 or m < 1:
        raise InvalidArgumentError(f"se requiere count >= 1 y m >= 1: count={count}, m={m}")
    return 4.0 / count ** (1.0 / m)


def metric_dimension_estimate(packing):
    """log |X| para un 1/2-empaquetamiento certificado: cota inferior de D(K)"""
    if not packing.certified:
        raise InvalidArgumentError("el empaquetamiento no está certificado")
    if packing.delta != 0.5:
        raise InvalidArgumentError(f"se requiere delta = 1/2, se recibió {packing.delta}")
    return math.log(packing.count)


def write_packing(packing, path):
    """Encabezado "count d delta certified" y un punto por línea"""
    path = Path(path)
    lineas = [f"{packing.count} {packing.d} {packing.delta:.17g} {int(packing.certified)}"]
    lineas.extend(" ".join(f"{v:.17g}" for v in punto) for punto in packing.points)
    path.write_text("\n".join(lineas) + "\n")
    return path


def read_packing(path):
    lineas = [linea for linea in Path(path).read_text().split("\n") if linea.strip()]
    try:
        count, d, delta, certified = lineas[0].split()
        count, d = int(count), int(d)
        points = np.array([[float(v) for v in linea.split()] for linea in lineas[1:]])
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError(f"archivo de empaquetamiento inválido: {path}") from exc
    if points.shape != (count, d):
        raise DimensionMismatchError(f"se esperaban {count}x{d} entradas, se leyeron {points.shape}")
    minima = min_pairwise_distance(points) if count >= 2 else math.inf
    return Packing(points=points, delta=float(delta), certified=bool(int(certified)), min_distance=minima)
