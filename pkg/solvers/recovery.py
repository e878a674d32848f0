"""
Solucionadores de recuperación co-dispersa.

    ℓ1 de análisis:  min ‖Ωx‖₁  s.a.  ‖y − Ax‖₂ ≤ √m·σ
    ℓ0 de análisis:  min ‖Ωx‖₀  s.a.  y = Ax        (enumeración, escala mínima)
    prueba de Bayes entre dos puntos: el candidato con menor residuo ‖Ax − y‖
"""
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.stats import norm

from analysis_ops.operators import Cosupport, cosupport, subspace_basis
from config.error_handlers import (
    DimensionMismatchError,
    InvalidArgumentError,
    NoSolutionError,
)
from sensing.measurements import Normalization, gen_measurement_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class L1Options:
    """
    Opciones del esquema de separación de operadores (ADMM con tres bloques).
    `tol` se aplica a los residuos primal y dual normalizados.
    """
    tol: float = 1e-8
    max_iter: int = 5000
    # holgura absoluta sobre el radio √m·σ exigida para declarar convergencia
    feasibility_tol: float = 1e-6
    rho: float = 1.0
    residual_balancing: bool = False
    balancing_mu: float = 10.0
    balancing_tau: float = 2.0

    @classmethod
    def from_settings(cls, **overrides):
        from django.conf import settings

        valores = {
            "tol": settings.COSPARSE_L1_TOL,
            "max_iter": settings.COSPARSE_L1_MAX_ITER,
            "rho": settings.COSPARSE_L1_RHO,
        }
        valores.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**valores)


@dataclass(frozen=True)
class L0Options:
    """`eq_tol` None significa 1e-8·(1 + ‖y‖₂)"""
    b_max: int = 2
    eq_tol: float | None = None
    cosupport_tol: float = 1e-8

    @classmethod
    def from_settings(cls, **overrides):
        from django.conf import settings

        valores = {"b_max": settings.COSPARSE_L0_B_MAX}
        valores.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**valores)

    def tolerance_for(self, y):
        if self.eq_tol is not None:
            return self.eq_tol
        return 1e-8 * (1.0 + float(np.linalg.norm(y)))


@dataclass(frozen=True, eq=False)
class SolverReport:
    x_hat: np.ndarray
    objective: float
    residual: float
    iterations: int
    converged: bool
    primal_residual: float = 0.0
    dual_residual: float = 0.0
    cosupport: tuple | None = field(default=None)

    def relative_error(self, x_true):
        return float(np.linalg.norm(self.x_hat - x_true) / np.linalg.norm(x_true))


def _check_dimensions(A, omega, y):
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.ndim != 2 or A.shape[1] != omega.d:
        raise DimensionMismatchError(f"A {A.shape} no es compatible con Ω {omega.p}x{omega.d}")
    if y.shape != (A.shape[0],):
        raise DimensionMismatchError(f"y tiene forma {y.shape}, se esperaba ({A.shape[0]},)")
    return A, y


def soft_threshold(v, umbral):
    return np.sign(v) * np.maximum(np.abs(v) - umbral, 0.0)


def project_ball(v, centro, radio):
    """Proyección sobre la bola ℓ2 de radio `radio` centrada en `centro`"""
    diferencia = v - centro
    distancia = np.linalg.norm(diferencia)
    if distancia <= radio:
        return v
    return centro + (radio / distancia) * diferencia


class _CouplingSystem:
    """Factorización (ΩᵀΩ + AᵀA) hecha una vez por instancia"""

    def __init__(self, matrix):
        try:
            self._cholesky = scipy.linalg.cho_factor(matrix, check_finite=False)
            self._pinv = None
        except scipy.linalg.LinAlgError:
            logger.warning("ΩᵀΩ + AᵀA es singular; se usa la pseudoinversa")
            self._cholesky = None
            self._pinv = scipy.linalg.pinvh(matrix)

    def solve(self, rhs):
        if self._cholesky is not None:
            return scipy.linalg.cho_solve(self._cholesky, rhs, check_finite=False)
        return self._pinv @ rhs


def solve_analysis_l1(A, omega, y, sigma, opts=None):
    """
    ADMM escalado sobre x con variables auxiliares u ≈ Ωx (umbral suave) y
    v ≈ Ax (proyección sobre la bola de radio √m·σ alrededor de y).
    Agotar las iteraciones no es un error: el reporte sale con converged=False.
    """
    opts = opts or L1Options()
    if sigma < 0:
        raise InvalidArgumentError(f"σ debe ser no negativa: {sigma}")
    A, y = _check_dimensions(A, omega, y)
    W = omega.matrix
    m = A.shape[0]
    radio = math.sqrt(m) * sigma
    rho = float(opts.rho)
    diminuto = np.finfo(float).tiny

    sistema = _CouplingSystem(W.T @ W + A.T @ A)

    x = np.zeros(omega.d)
    u = np.zeros(omega.p)
    v = project_ball(np.zeros(m), y, radio)
    a = np.zeros(omega.p)
    b = np.zeros(m)

    converged = False
    r_norm = s_norm = np.inf
    iteracion = 0
    for iteracion in range(1, opts.max_iter + 1):
        x = sistema.solve(W.T @ (u - a) + A.T @ (v - b))
        Wx = W @ x
        Ax = A @ x

        u_previo, v_previo = u, v
        u = soft_threshold(Wx + a, 1.0 / rho)
        v = project_ball(Ax + b, y, radio)
        a = a + Wx - u
        b = b + Ax - v

        primal = math.hypot(np.linalg.norm(Wx - u), np.linalg.norm(Ax - v))
        dual = rho * np.linalg.norm(W.T @ (u - u_previo) + A.T @ (v - v_previo))
        escala_primal = max(
            math.hypot(np.linalg.norm(Wx), np.linalg.norm(Ax)),
            math.hypot(np.linalg.norm(u), np.linalg.norm(v)),
            diminuto,
        )
        # ‖Ωᵀa + Aᵀb‖ tiende a cero en el óptimo; ‖(a, b)‖ no
        escala_dual = max(rho * math.hypot(np.linalg.norm(a), np.linalg.norm(b)), diminuto)
        r_norm = primal / escala_primal
        s_norm = dual / escala_dual
        factible = np.linalg.norm(Ax - y) <= radio + opts.feasibility_tol

        if r_norm <= opts.tol and s_norm <= opts.tol and factible:
            converged = True
            break

        if opts.residual_balancing:
            if primal > opts.balancing_mu * dual:
                rho *= opts.balancing_tau
                a, b = a / opts.balancing_tau, b / opts.balancing_tau
            elif dual > opts.balancing_mu * primal:
                rho /= opts.balancing_tau
                a, b = a * opts.balancing_tau, b * opts.balancing_tau

    if not converged:
        logger.debug(
            "ℓ1 sin converger tras %s iteraciones (primal %.2e, dual %.2e)",
            iteracion, r_norm, s_norm,
        )

    return SolverReport(
        x_hat=x,
        objective=float(np.abs(W @ x).sum()),
        residual=float(np.linalg.norm(y - A @ x)),
        iterations=iteracion,
        converged=converged,
        primal_residual=float(r_norm),
        dual_residual=float(s_norm),
    )


def solve_analysis_l0(A, omega, y, b_max=None, opts=None):
    """
    Recorre cosoportes Z de mayor a menor tamaño (orden lexicográfico dentro
    de cada tamaño), ajusta y en null(Ω_Z) por mínimos cuadrados y acepta el
    primer candidato con residuo <= eq_tol. Los subespacios de dimensión
    mayor que b_max se omiten.
    """
    opts = opts or L0Options()
    b_max = opts.b_max if b_max is None else int(b_max)
    A, y = _check_dimensions(A, omega, y)
    eq_tol = opts.tolerance_for(y)
    p, d = omega.p, omega.d

    # rank(Ω_Z) <= |Z|, así que por debajo de d - b_max ningún Z sirve
    menor_tamano = max(0, d - b_max)
    candidatos = 0
    for tamano in range(p, menor_tamano - 1, -1):
        for filas in itertools.combinations(range(p), tamano):
            candidatos += 1
            base = subspace_basis(omega, Cosupport.from_rows(filas, p))
            if base.dim > b_max:
                continue
            if base.dim == 0:
                x = np.zeros(d)
            else:
                coeficientes, *_ = np.linalg.lstsq(A @ base.basis, y, rcond=None)
                x = base.basis @ coeficientes
            residuo = float(np.linalg.norm(y - A @ x))
            if residuo <= eq_tol:
                logger.debug("ℓ0: cosoporte de tamaño %s tras %s candidatos", tamano, candidatos)
                medido = cosupport(omega, x, opts.cosupport_tol)
                return SolverReport(
                    x_hat=x,
                    objective=float(medido.support_size),
                    residual=residuo,
                    iterations=candidatos,
                    converged=True,
                    cosupport=filas,
                )

    raise NoSolutionError(
        f"ningún cosoporte con dimensión <= {b_max} es consistente (tolerancia {eq_tol:.3e})"
    )


def bayes_two_point_batch(A, x1, x2, Y):
    """Índices 1 o 2 para cada fila de Y; empates hacia 1"""
    Y = np.atleast_2d(Y)
    r1 = np.linalg.norm(Y - A @ x1, axis=1)
    r2 = np.linalg.norm(Y - A @ x2, axis=1)
    return np.where(r1 <= r2, 1, 2)


def bayes_two_point(A, x1, x2, y):
    if np.array_equal(x1, x2):
        raise InvalidArgumentError("los dos candidatos deben ser distintos")
    return int(bayes_two_point_batch(A, x1, x2, y)[0])


@dataclass(frozen=True)
class TwoPointReport:
    ratio: float
    empirical: float
    stderr: float
    theoretical: float
    trials: int


def bayes_success_mc(A, x1, x2, sigma, trials, seed):
    """
    Frecuencia con que la prueba elige x1 cuando y = A·x1 + z. La ley teórica
    es Φ(ε/2σ) con ε = ‖A(x1 − x2)‖₂.
    """
    if sigma <= 0:
        raise InvalidArgumentError(f"σ debe ser positiva: {sigma}")
    rng = np.random.default_rng(int(seed))
    Y = A @ x1 + sigma * rng.standard_normal((int(trials), A.shape[0]))
    aciertos = bayes_two_point_batch(A, x1, x2, Y) == 1
    tasa = float(aciertos.mean())
    epsilon = float(np.linalg.norm(A @ (x1 - x2)))
    return TwoPointReport(
        ratio=epsilon / (2 * sigma),
        empirical=tasa,
        stderr=math.sqrt(tasa * (1 - tasa) / trials),
        theoretical=float(norm.cdf(epsilon / (2 * sigma))),
        trials=int(trials),
    )


def bayes_success_for_ratio(ratio, trials, seed, sigma=0.01, m=4, d=8):
    """Arma dos puntos con ε/2σ = ratio bajo una A con ‖A‖ = 1 y estima el acierto"""
    if ratio <= 0:
        raise InvalidArgumentError(f"ε/2σ debe ser positivo: {ratio}")
    rng = np.random.default_rng(int(seed))
    A = gen_measurement_matrix(m, d, Normalization.OP_NORM_LEQ_ONE, int(rng.integers(2**31)))
    x1 = rng.standard_normal(d)
    x1 /= np.linalg.norm(x1)
    direccion = rng.standard_normal(d)
    paso = 2 * sigma * ratio / np.linalg.norm(A @ direccion)
    x2 = x1 + paso * direccion
    return bayes_success_mc(A, x1, x2, sigma, trials, int(rng.integers(2**31)))
