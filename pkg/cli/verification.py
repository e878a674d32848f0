"""
Verificaciones de Monte Carlo de las cotas cerradas, identificadas por etiqueta.
"""
import logging
import math
from enum import Enum

from config.error_handlers import UsageError
from packing_lab.montecarlo import (
    MonteCarloCheck,
    dif2d_collision_mc,
    gaussian_collision_mc,
    overlap_tail_mc,
    projected_min_distance_mc,
)
from packing_lab.packings import construct_random_packing, dif2d_sampler
from solvers.recovery import bayes_success_for_ratio

logger = logging.getLogger(__name__)


class Lemma(str, Enum):
    L3_COLLISION = "L3-collision"
    L5_OVERLAP = "L5-overlap"
    L4_COLLISION = "L4-collision"
    L6_DISTANCE = "L6-distance"
    L7_BAYES = "L7-bayes"


DEFAULTS = {
    Lemma.L3_COLLISION: {"n": 12, "trials": 100_000},
    Lemma.L5_OVERLAP: {"d": 20, "p": 60, "trials": 10_000},
    Lemma.L4_COLLISION: {"d": 20, "p": 60, "trials": 10_000},
    Lemma.L6_DISTANCE: {"n": 12, "count": 10, "m": 4, "trials": 50},
    Lemma.L7_BAYES: {"ratio": 0.5, "trials": 100_000},
}

BAYES_SLACK = 3.0
# distancia máxima admitida entre la frecuencia y Φ(ε/2σ)
BAYES_REFERENCE_TOL = 0.01


def bayes_success_upper_bound(ratio):
    """
    Cota cerrada del acierto de la prueba de dos puntos: 3/4 mientras
    ε/2σ <= 1/2 y, en general, 1/2 + (ε/2σ)/√(2π) porque la densidad normal
    no supera 1/√(2π).
    """
    lineal = min(1.0, 0.5 + ratio / math.sqrt(2 * math.pi))
    return 0.75 if ratio <= 0.5 else lineal


def _bayes_check(ratio, trials, seed):
    report = bayes_success_for_ratio(ratio, trials, seed)
    return MonteCarloCheck(
        name=Lemma.L7_BAYES.value,
        empirical=report.empirical,
        bound=bayes_success_upper_bound(ratio),
        trials=report.trials,
        stderr=report.stderr,
        slack=BAYES_SLACK,
        reference=report.theoretical,
        reference_tol=BAYES_REFERENCE_TOL,
    )


def parse_lemma(etiqueta):
    try:
        return Lemma(etiqueta)
    except ValueError:
        raise UsageError(f"etiqueta desconocida: {etiqueta!r}") from None


def mc_verify(lemma, params=None, trials=None, seed=0):
    """Corre la comprobación de la etiqueta con los parámetros dados o los por defecto"""
    lemma = parse_lemma(lemma) if not isinstance(lemma, Lemma) else lemma
    valores = {**DEFAULTS[lemma], **{k: v for k, v in (params or {}).items() if v is not None}}
    if trials is not None:
        valores["trials"] = int(trials)
    logger.info("Verificación %s con %s", lemma.value, valores)

    if lemma is Lemma.L3_COLLISION:
        return dif2d_collision_mc(int(valores["n"]), valores["trials"], seed)
    if lemma is Lemma.L5_OVERLAP:
        return overlap_tail_mc(int(valores["d"]), int(valores["p"]), valores["trials"], seed)
    if lemma is Lemma.L4_COLLISION:
        return gaussian_collision_mc(int(valores["d"]), int(valores["p"]), valores["trials"], seed)
    if lemma is Lemma.L6_DISTANCE:
        packing = construct_random_packing(
            dif2d_sampler(int(valores["n"])), 0.5, int(valores["count"]), seed=seed
        )
        return projected_min_distance_mc(packing.points, int(valores["m"]), valores["trials"], seed)
    return _bayes_check(float(valores["ratio"]), valores["trials"], seed)


def format_check(check):
    estado = "PASS" if check.passed else "FAIL"
    ley = "" if check.reference is None else f" ley={check.reference:.6g}±{check.reference_tol:g}"
    return (
        f"{check.name}: empírico={check.empirical:.6g} cota={check.bound:.6g}{ley} "
        f"ensayos={check.trials} error_estándar={check.stderr:.3g} {estado}"
    )
