"""
Mallas de transición de fase para la recuperación por ℓ1 de análisis.

Cada celda es una función pura de (parámetros, fila, columna): las semillas
de cada ensayo se derivan de (semilla maestra, fila, columna, ensayo), así que
el resultado no depende del orden de evaluación ni del número de procesos.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from analysis_ops.operators import build_gaussian_operator
from analysis_ops.seeds import derive_seed
from config.error_handlers import (
    DegenerateOperatorError,
    GenerationFailureError,
    InvalidArgumentError,
    InvalidDimensionError,
)
from sensing.measurements import Normalization, gen_measurement_matrix, measure
from signal_gen.signals import dif2d_operator, gen_gaussian_k1, gen_randomwalk_image
from solvers.recovery import L1Options, solve_analysis_l1

logger = logging.getLogger(__name__)

SUCCESS_TOLERANCE = 1e-3
GENERATION_BUDGET_PER_TRIAL = 500
PILOT_SIZE = 1000


@dataclass(frozen=True)
class GridCell:
    mse_mean: float
    mse_median: float
    raw_mse_mean: float
    raw_mse_median: float
    trials: int
    failures: int
    generation_failures: int
    success_rate: float
    values: tuple = field(default=(), compare=False)

    @property
    def empty(self):
        return self.trials == 0


@dataclass(frozen=True, eq=False)
class PhaseGridResult:
    """`cells[i][j]` corresponde a y_axis[i] y x_axis[j]"""
    x_axis: tuple
    y_axis: tuple
    y_label: str
    cells: tuple
    meta: dict

    def cell(self, i, j):
        return self.cells[i][j]

    def matrix(self, attribute="mse_mean"):
        return np.array([[getattr(c, attribute) for c in fila] for fila in self.cells], dtype=float)

    def iter_cells(self):
        """Recorre las celdas en orden y-mayor"""
        for i, y in enumerate(self.y_axis):
            for j, x in enumerate(self.x_axis):
                yield x, y, self.cells[i][j]


@dataclass(frozen=True)
class CosparsityBin:
    low: float
    high: float
    inclusive_high: bool = False

    def contains(self, value):
        if value < self.low:
            return False
        return value <= self.high if self.inclusive_high else value < self.high

    @property
    def center(self):
        return (self.low + self.high) / 2


def round_count(fraction, d):
    """m = floor(δ·d + 1/2), con la misma regla para p = floor(ρ·d + 1/2)"""
    valor = math.floor(fraction * d + 0.5)
    if valor < 1:
        raise InvalidArgumentError(f"{fraction}·{d} redondea a {valor}; se requiere un entero positivo")
    return valor


def _aggregate(raw, energies, failures, generation_failures):
    if not raw:
        nan = float("nan")
        return GridCell(nan, nan, nan, nan, 0, failures, generation_failures, nan)
    raw = np.array(raw)
    normalizado = raw / np.array(energies)
    return GridCell(
        mse_mean=float(normalizado.mean()),
        mse_median=float(np.median(normalizado)),
        raw_mse_mean=float(raw.mean()),
        raw_mse_median=float(np.median(raw)),
        trials=int(raw.size),
        failures=int(failures),
        generation_failures=int(generation_failures),
        success_rate=float(np.mean(np.sqrt(normalizado) <= SUCCESS_TOLERANCE)),
        values=tuple(float(v) for v in normalizado),
    )


def _recover(x, m, omega, sigma, opts, matrix_seed, noise_seed):
    A = gen_measurement_matrix(m, x.shape[0], Normalization.UNIT_COLUMNS, matrix_seed)
    y = measure(A, x, sigma, noise_seed)
    report = solve_analysis_l1(A, omega, y, sigma, opts)
    return float(np.sum((report.x_hat - x) ** 2)), report.converged


def _gaussian_cell(task):
    d, p, m, sigma, trials, master_seed, row, col, opts = task
    raw, energias = [], []
    fallas = generacion = 0
    for t in range(trials):
        op = build_gaussian_operator(p, d, derive_seed(master_seed, row, col, t, 0))
        try:
            x = gen_gaussian_k1(op, derive_seed(master_seed, row, col, t, 1)).x
        except DegenerateOperatorError:
            generacion += 1
            continue
        error, convergio = _recover(
            x, m, op, sigma, opts,
            derive_seed(master_seed, row, col, t, 2),
            derive_seed(master_seed, row, col, t, 3),
        )
        raw.append(error)
        energias.append(float(x @ x))
        fallas += not convergio
    return _aggregate(raw, energias, fallas, generacion)


def _dif_cell(task):
    n, bin_, m, sigma, trials, master_seed, row, col, opts, budget = task
    aceptadas = []
    intento = 0
    while len(aceptadas) < trials and intento < budget:
        try:
            signal = gen_randomwalk_image(n, derive_seed(master_seed, row, col, 0, intento))
        except GenerationFailureError:
            signal = None
        if signal is not None and bin_.contains(signal.cosupport.cosparsity):
            aceptadas.append(signal.x)
        intento += 1

    if len(aceptadas) < trials:
        logger.warning(
            "Celda (%s, %s) sin llenar: %s de %s imágenes en %s intentos para la cosparsidad [%s, %s]",
            row, col, len(aceptadas), trials, budget, bin_.low, bin_.high,
        )
        return _aggregate([], [], 0, trials)

    omega = dif2d_operator(n)
    raw, energias = [], []
    fallas = 0
    for t, x in enumerate(aceptadas):
        error, convergio = _recover(
            x, m, omega, sigma, opts,
            derive_seed(master_seed, row, col, 1, t),
            derive_seed(master_seed, row, col, 2, t),
        )
        raw.append(error)
        energias.append(float(x @ x))
        fallas += not convergio
    return _aggregate(raw, energias, fallas, 0)


def _run_cells(worker, tasks, jobs):
    if jobs <= 1:
        return [worker(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, tasks, chunksize=1))


def _reshape(flat, rows, cols):
    return tuple(tuple(flat[i * cols:(i + 1) * cols]) for i in range(rows))


def _solver_meta(opts):
    return {"l1_tol": opts.tol, "l1_max_iter": opts.max_iter, "l1_rho": opts.rho}


def phase_grid_gaussian(d, rho_list, delta_list, sigma, trials, master_seed, opts=None, jobs=1):
    """
    Por celda: Ω gaussiana nueva, señal de K_1 nueva, A de columnas unitarias,
    medición con σ y ℓ1 de análisis. Se registra ‖x̂ − x‖² (la señal tiene
    energía uno, así que es un error relativo).
    """
    opts = opts or L1Options()
    if trials < 1:
        raise InvalidArgumentError(f"trials debe ser >= 1, se recibió {trials}")
    if sigma < 0:
        raise InvalidArgumentError(f"sigma debe ser no negativa, se recibió {sigma}")
    ps = [round_count(rho, d) for rho in rho_list]
    ms = [round_count(delta, d) for delta in delta_list]
    for rho, p in zip(rho_list, ps):
        if p < d - 1:
            raise InvalidDimensionError(f"ρ={rho} da p={p} < d-1={d - 1}: K_1 queda vacío")

    tasks = [
        (d, p, m, float(sigma), int(trials), int(master_seed), i, j, opts)
        for i, p in enumerate(ps)
        for j, m in enumerate(ms)
    ]
    logger.info("Malla gaussiana d=%s: %s celdas de %s ensayos", d, len(tasks), trials)
    cells = _run_cells(_gaussian_cell, tasks, jobs)

    meta = {
        "model": "gaussian",
        "d": d,
        "sigma": float(sigma),
        "trials": int(trials),
        "master_seed": int(master_seed),
        "rounding": "floor(x*d+0.5)",
        "error_metric": "squared error / signal energy",
        "color_scale": "log",
        **_solver_meta(opts),
    }
    return PhaseGridResult(
        x_axis=tuple(float(v) for v in delta_list),
        y_axis=tuple(float(v) for v in rho_list),
        y_label="rho",
        cells=_reshape(cells, len(ps), len(ms)),
        meta=meta,
    )


def pilot_cosparsity_bins(n, bins, pilot_size=PILOT_SIZE, seed=0):
    """
    Bins de igual ancho sobre el rango de cosparsidad observado en un piloto
    de imágenes de caminata aleatoria. El último bin es cerrado a la derecha.
    """
    if bins < 1:
        raise InvalidArgumentError(f"bins debe ser >= 1, se recibió {bins}")
    observadas = []
    for k in range(int(pilot_size)):
        try:
            observadas.append(gen_randomwalk_image(n, derive_seed(seed, k)).cosupport.cosparsity)
        except GenerationFailureError:
            continue
    if not observadas:
        raise GenerationFailureError(f"el piloto de {pilot_size} imágenes no produjo ninguna señal")

    bordes = np.linspace(min(observadas), max(observadas), bins + 1)
    logger.info("Piloto de cosparsidad n=%s: rango [%s, %s]", n, min(observadas), max(observadas))
    return [
        CosparsityBin(float(bordes[k]), float(bordes[k + 1]), inclusive_high=k == bins - 1)
        for k in range(bins)
    ]


def _as_bin(value):
    if isinstance(value, CosparsityBin):
        return value
    low, high = value
    return CosparsityBin(float(low), float(high), inclusive_high=True)


def phase_grid_dif(n, cosparsity_bins, delta_list, sigma, trials, master_seed, opts=None, jobs=1,
                   generation_budget=None):
    """
    Imágenes de caminata aleatoria (b = 2) agrupadas por cosparsidad medida.
    El error se divide por ‖x‖² para que las celdas sean comparables con la
    malla gaussiana; una celda que no se llena dentro del presupuesto de
    generación queda vacía.
    """
    opts = opts or L1Options()
    if n < 6:
        raise InvalidDimensionError(f"n debe ser >= 6, se recibió {n}")
    if trials < 1:
        raise InvalidArgumentError(f"trials debe ser >= 1, se recibió {trials}")
    bins = sorted((_as_bin(b) for b in cosparsity_bins), key=lambda b: b.low)
    if not bins:
        raise InvalidArgumentError("se requiere al menos un bin de cosparsidad")
    d = n * n
    ms = [round_count(delta, d) for delta in delta_list]
    budget = int(generation_budget or GENERATION_BUDGET_PER_TRIAL * trials)

    tasks = [
        (n, bin_, m, float(sigma), int(trials), int(master_seed), i, j, opts, budget)
        for i, bin_ in enumerate(bins)
        for j, m in enumerate(ms)
    ]
    logger.info("Malla 2D-DIF n=%s: %s celdas de %s ensayos", n, len(tasks), trials)
    cells = _run_cells(_dif_cell, tasks, jobs)

    meta = {
        "model": "dif2d",
        "n": n,
        "sigma": float(sigma),
        "trials": int(trials),
        "master_seed": int(master_seed),
        "rounding": "floor(x*d+0.5)",
        "error_metric": "squared error / signal energy",
        "color_scale": "log",
        "generation_budget": budget,
        "bins": ";".join(f"{b.low:g}-{b.high:g}" for b in bins),
        **_solver_meta(opts),
    }
    return PhaseGridResult(
        x_axis=tuple(float(v) for v in delta_list),
        y_axis=tuple(b.center for b in bins),
        y_label="cosparsity",
        cells=_reshape(cells, len(bins), len(ms)),
        meta=meta,
    )
