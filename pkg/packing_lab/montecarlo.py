"""
Comprobaciones de Monte Carlo de las probabilidades de colisión y de la
contracción de distancias. Cada comprobación es unilateral: pasa si la
frecuencia (o distancia) empírica no supera la cota cerrada. Si además se
conoce la ley exacta (`reference`), la frecuencia debe quedar a `reference_tol`
de ella.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from analysis_ops.operators import build_gaussian_operator
from analysis_ops.seeds import derive_seed
from sensing.measurements import Normalization, gen_measurement_matrix
from signal_gen.signals import gen_gaussian_k1, packing_free_cells, packing_pattern_batch
from .packings import min_distance_bound, min_pairwise_distance

logger = logging.getLogger(__name__)

_BLOQUE = 10_000


@dataclass(frozen=True)
class MonteCarloCheck:
    name: str
    empirical: float
    bound: float
    trials: int
    stderr: float
    # holgura en errores estándar de Monte Carlo
    slack: float = 0.0
    # ley exacta opcional, comparada en ambos sentidos
    reference: float | None = None
    reference_tol: float = 0.0

    @property
    def within_bound(self):
        return self.empirical <= self.bound + self.slack * self.stderr

    @property
    def matches_reference(self):
        if self.reference is None:
            return True
        return abs(self.empirical - self.reference) <= self.reference_tol

    @property
    def passed(self):
        return self.within_bound and self.matches_reference


def _frequency_stderr(frecuencia, trials):
    return math.sqrt(frecuencia * (1 - frecuencia) / trials)


def dif2d_collision_mc(n, pairs, seed):
    """
    Pr{‖x − x'‖² < q/d} para dos patrones 2D-DIF independientes, contra exp(−q/8).
    """
    q = packing_free_cells(n)
    d = n * n
    rng = np.random.default_rng(int(seed))
    colisiones = 0
    restantes = int(pairs)
    while restantes > 0:
        k = min(_BLOQUE, restantes)
        x = packing_pattern_batch(n, rng.choice((-1.0, 1.0), size=(k, q)))
        y = packing_pattern_batch(n, rng.choice((-1.0, 1.0), size=(k, q)))
        colisiones += int(np.sum(np.sum((x - y) ** 2, axis=1) < q / d))
        restantes -= k
    frecuencia = colisiones / pairs
    return MonteCarloCheck(
        name="L3-collision",
        empirical=frecuencia,
        bound=math.exp(-q / 8),
        trials=int(pairs),
        stderr=_frequency_stderr(frecuencia, pairs),
    )


def overlap_threshold(d, p):
    return (d - 1) * (d + p) / (2 * p)


def random_row_sets(d, p, count, rng):
    """Máscaras booleanas (count×p) de subconjuntos uniformes de tamaño d-1"""
    orden = np.argsort(rng.random((count, p)), axis=1)[:, : d - 1]
    mascaras = np.zeros((count, p), dtype=bool)
    np.put_along_axis(mascaras, orden, True, axis=1)
    return mascaras


def overlap_tail_mc(d, p, pairs, seed):
    """Pr{|Λ∩Λ'| >= (d−1)(d+p)/(2p)} contra exp(−(d−1)(p−d+2)/(2p))"""
    rng = np.random.default_rng(int(seed))
    primero = random_row_sets(d, p, int(pairs), rng)
    segundo = random_row_sets(d, p, int(pairs), rng)
    solapamiento = np.sum(primero & segundo, axis=1)
    frecuencia = float(np.mean(solapamiento >= overlap_threshold(d, p)))
    return MonteCarloCheck(
        name="L5-overlap",
        empirical=frecuencia,
        bound=math.exp(-(d - 1) * (p - d + 2) / (2 * p)),
        trials=int(pairs),
        stderr=_frequency_stderr(frecuencia, pairs),
    )


def gaussian_collision_mc(d, p, pairs, seed, operator_seed=0):
    """Pr{‖x − x'‖ <= 1/2} para dos puntos de K_1 contra 3·exp(−(d−1)(p−d+2)/(4p))"""
    op = build_gaussian_operator(p, d, operator_seed)
    colisiones = 0
    for k in range(int(pairs)):
        x = gen_gaussian_k1(op, derive_seed(seed, k, 0)).x
        y = gen_gaussian_k1(op, derive_seed(seed, k, 1)).x
        colisiones += np.linalg.norm(x - y) <= 0.5
    frecuencia = colisiones / pairs
    return MonteCarloCheck(
        name="L4-collision",
        empirical=frecuencia,
        bound=3 * math.exp(-(d - 1) * (p - d + 2) / (4 * p)),
        trials=int(pairs),
        stderr=_frequency_stderr(frecuencia, pairs),
    )


def gaussian_pair_geometry(d, p, pairs, seed):
    """
    Para pares de puntos de K_1 (con Ω nueva en cada par) devuelve el
    solapamiento |Λ∩Λ'| y el cuadrado del producto interno ⟨x, x'⟩².
    Condicionado al solapamiento k, ⟨x, x'⟩² tiene media 1/(d − k).
    """
    solapamientos = np.empty(int(pairs), dtype=int)
    productos = np.empty(int(pairs))
    for k in range(int(pairs)):
        op = build_gaussian_operator(p, d, derive_seed(seed, k, 2))
        x = gen_gaussian_k1(op, derive_seed(seed, k, 0))
        y = gen_gaussian_k1(op, derive_seed(seed, k, 1))
        solapamientos[k] = len(set(x.rows) & set(y.rows))
        productos[k] = float(x.x @ y.x) ** 2
    return solapamientos, productos


def projected_min_distance_mc(points, m, trials, seed):
    """
    Proyecta los puntos con `trials` matrices de norma uno y reporta la mayor
    de las distancias mínimas medidas frente a la cota 4/|X|^{1/m}.
    """
    points = np.asarray(points, dtype=float)
    mayor = 0.0
    for trial in range(int(trials)):
        A = gen_measurement_matrix(m, points.shape[1], Normalization.OP_NORM_LEQ_ONE, derive_seed(seed, trial))
        minima = min_pairwise_distance(points @ A.T)
        mayor = max(mayor, minima)
        logger.debug("Proyección %s: distancia mínima %.4f", trial, minima)
    return MonteCarloCheck(
        name="L6-distance",
        empirical=mayor,
        bound=min_distance_bound(points.shape[0], m),
        trials=int(trials),
        stderr=0.0,
    )


def hamming_sampled_points(n, count, seed):
    """`count` patrones 2D-DIF con signos aleatorios, sin certificar separación"""
    rng = np.random.default_rng(int(seed))
    return packing_pattern_batch(n, rng.choice((-1.0, 1.0), size=(int(count), packing_free_cells(n))))
