"""
Cotas inferiores minimax con constantes explícitas y su contraparte empírica.

Las constantes publicadas salen de componer la cota genérica de
empaquetamiento (δσ|X|^{1/m}/32, con δ = 1/2) con los tamaños de empaquetamiento
conocidos para cada modelo. Son la instanciación más débil que da esa
composición, no los valores óptimos de C y c.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from analysis_ops.seeds import derive_seed
from config.error_handlers import InvalidArgumentError
from sensing.measurements import measure, top_singular_value
from solvers.recovery import solve_analysis_l1

logger = logging.getLogger(__name__)

PACKING_DELTA = 0.5
CONSTANTS_NOTE = "constantes explícitas: delta=1/2, factor 1/32 (una instanciación válida de C y c)"


class BoundModel(str, Enum):
    DIF2D_K2 = "dif2d"
    GAUSSIAN_K1 = "gaussian"


@dataclass(frozen=True)
class BoundQuery:
    d: int
    m: int
    sigma: float
    model: BoundModel
    p: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "model", BoundModel(self.model))
        if self.m < 1:
            raise InvalidArgumentError(f"m debe ser >= 1, se recibió {self.m}")
        if self.sigma < 0:
            raise InvalidArgumentError(f"sigma debe ser no negativa, se recibió {self.sigma}")

        if self.model is BoundModel.DIF2D_K2:
            lado = math.isqrt(self.d) if self.d >= 0 else -1
            if self.d < 64 or lado * lado != self.d:
                raise InvalidArgumentError(f"se requiere d cuadrado y >= 64, se recibió d={self.d}")
        else:
            if self.p is None:
                raise InvalidArgumentError("el modelo gaussiano requiere p")
            if self.d < 3:
                raise InvalidArgumentError(f"se requiere d >= 3, se recibió d={self.d}")
            if self.p < self.d:
                raise InvalidArgumentError(f"se requiere p >= d, se recibió p={self.p}, d={self.d}")


def packing_lower_bound(delta, count, m, sigma):
    """Cota genérica δσ|X|^{1/m}/32 para un δ-empaquetamiento X de K ∩ B^d"""
    if count < 1 or m < 1:
        raise InvalidArgumentError(f"se requiere count >= 1 y m >= 1: count={count}, m={m}")
    return delta * sigma * count ** (1.0 / m) / 32


def minimax_rescaling(count, m, sigma):
    """
    Factor λ = 4/(|X|^{1/m}σ). Las señales x̃/λ con x̃ en el empaquetamiento
    forman la instancia difícil: su ruido basta para confundir cualquier
    estimador.
    """
    if sigma <= 0:
        raise InvalidArgumentError(f"sigma debe ser positiva, se recibió {sigma}")
    if count < 1 or m < 1:
        raise InvalidArgumentError(f"se requiere count >= 1 y m >= 1: count={count}, m={m}")
    return 4.0 / (count ** (1.0 / m) * sigma)


def tv_lower_bound(query):
    """σ·exp(d/(64m))/64 para K_2 con el operador 2D-DIF"""
    if query.model is not BoundModel.DIF2D_K2:
        raise InvalidArgumentError(f"tv_lower_bound requiere el modelo dif2d, se recibió {query.model.value}")
    return query.sigma * math.exp(query.d / (64 * query.m)) / 64


def gaussian_lower_bound(query):
    """(σ/64)·3^{-1/(2m)}·exp((d-1)(1-(d-2)/p)/(8m)) para K_1 con Ω gaussiana"""
    if query.model is not BoundModel.GAUSSIAN_K1:
        raise InvalidArgumentError(f"gaussian_lower_bound requiere el modelo gaussiano, se recibió {query.model.value}")
    d, p, m = query.d, query.p, query.m
    exponente = (d - 1) * (1 - (d - 2) / p) / (8 * m)
    return query.sigma / 64 * 3 ** (-1 / (2 * m)) * math.exp(exponente)


def evaluate(query):
    if query.model is BoundModel.DIF2D_K2:
        return tv_lower_bound(query)
    return gaussian_lower_bound(query)


def zero_estimator(d):
    def estimate(y):
        return np.zeros(d)
    return estimate


def pseudoinverse_estimator(A):
    pseudo = np.linalg.pinv(A)

    def estimate(y):
        return pseudo @ y
    return estimate


def l1_estimator(A, omega, sigma, opts=None):
    def estimate(y):
        return solve_analysis_l1(A, omega, y, sigma, opts).x_hat
    return estimate


@dataclass(frozen=True, eq=False)
class RiskProfile:
    means: np.ndarray
    stderrs: np.ndarray
    trials: int

    @property
    def worst_point(self):
        return int(np.argmax(self.means))

    @property
    def max_risk(self):
        return float(self.means[self.worst_point])

    @property
    def max_risk_stderr(self):
        return float(self.stderrs[self.worst_point])


def minimax_risk_profile(estimator, packing, A, sigma, trials, seed, scale=1.0):
    """
    Media y error estándar de ‖x̂ − x‖ en cada punto del empaquetamiento,
    con x = scale·x̃. El ruido de la medición t del punto i usa la semilla
    derivada (seed, i, t).
    """
    if trials < 1:
        raise InvalidArgumentError(f"trials debe ser >= 1, se recibió {trials}")
    if top_singular_value(A) > 1 + 1e-9:
        logger.warning("‖A‖ = %.4f > 1: la comparación con la cota inferior no está garantizada", top_singular_value(A))

    points = np.asarray(packing.points, dtype=float) * scale
    means = np.empty(points.shape[0])
    stderrs = np.empty(points.shape[0])
    for i, x in enumerate(points):
        errores = np.array([
            np.linalg.norm(estimator(measure(A, x, sigma, derive_seed(seed, i, t))) - x)
            for t in range(int(trials))
        ])
        means[i] = errores.mean()
        stderrs[i] = errores.std(ddof=1) / math.sqrt(trials) if trials > 1 else 0.0
        logger.debug("Punto %s: riesgo medio %.6g", i, means[i])
    return RiskProfile(means=means, stderrs=stderrs, trials=int(trials))


def minimax_mc(estimator, packing, A, sigma, trials, seed, scale=1.0):
    """Máximo sobre el empaquetamiento del error medio del estimador"""
    return minimax_risk_profile(estimator, packing, A, sigma, trials, seed, scale=scale).max_risk
