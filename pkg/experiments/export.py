"""
Exportación de mallas de transición de fase: CSV determinista, mapa de calor
SVG con escala logarítmica y curvas de error contra δ.
"""
import csv
import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np
from django.conf import settings
from matplotlib.colors import LogNorm
from matplotlib.figure import Figure

from config.error_handlers import InvalidArgumentError
from .grids import GridCell, PhaseGridResult

logger = logging.getLogger(__name__)

CSV_COLUMNS = (
    "delta",
    "rho_or_cosparsity",
    "mse_mean",
    "mse_median",
    "trials",
    "failures",
    "raw_mse_mean",
    "raw_mse_median",
    "generation_failures",
    "success_rate",
)
COLORMAP = "viridis"
# piso de la escala de color cuando ninguna celda tiene error positivo
ZERO_FLOOR = 1e-12

_Y_LABELS = {"rho": "ρ = p/d", "cosparsity": "cosparsidad ℓ"}


def _format(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".10g")


def _parse(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def export_csv(result, path):
    """
    Encabezado de comentarios `# clave=valor` con la configuración, una fila
    de nombres de columna y una fila por celda en orden y-mayor.
    """
    path = Path(path)
    meta = {**result.meta, "y_axis": result.y_label}
    with path.open("w", newline="", encoding="utf-8") as archivo:
        for clave in sorted(meta):
            archivo.write(f"# {clave}={meta[clave]}\n")
        writer = csv.writer(archivo, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for x, y, cell in result.iter_cells():
            writer.writerow([
                _format(x),
                _format(y),
                _format(cell.mse_mean),
                _format(cell.mse_median),
                _format(cell.trials),
                _format(cell.failures),
                _format(cell.raw_mse_mean),
                _format(cell.raw_mse_median),
                _format(cell.generation_failures),
                _format(cell.success_rate),
            ])
    logger.info("CSV escrito en %s", path)
    return path


def load_csv(path):
    meta = {}
    filas = []
    with Path(path).open(encoding="utf-8") as archivo:
        datos = []
        for linea in archivo:
            if linea.startswith("#"):
                clave, _, valor = linea[1:].strip().partition("=")
                meta[clave] = _parse(valor)
            else:
                datos.append(linea)
        filas = list(csv.DictReader(datos))

    y_label = str(meta.pop("y_axis", "rho"))
    x_axis, y_axis = [], []
    for fila in filas:
        x, y = float(fila["delta"]), float(fila["rho_or_cosparsity"])
        if x not in x_axis:
            x_axis.append(x)
        if y not in y_axis:
            y_axis.append(y)
    if len(filas) != len(x_axis) * len(y_axis):
        raise InvalidArgumentError(f"el CSV {path} no describe una malla completa")

    cells = [
        GridCell(
            mse_mean=float(fila["mse_mean"]),
            mse_median=float(fila["mse_median"]),
            raw_mse_mean=float(fila["raw_mse_mean"]),
            raw_mse_median=float(fila["raw_mse_median"]),
            trials=int(fila["trials"]),
            failures=int(fila["failures"]),
            generation_failures=int(fila["generation_failures"]),
            success_rate=float(fila["success_rate"]),
        )
        for fila in filas
    ]
    columnas = len(x_axis)
    return PhaseGridResult(
        x_axis=tuple(x_axis),
        y_axis=tuple(y_axis),
        y_label=y_label,
        cells=tuple(tuple(cells[i * columnas:(i + 1) * columnas]) for i in range(len(y_axis))),
        meta=meta,
    )


def _check_not_empty(result):
    if not result.x_axis or not result.y_axis:
        raise InvalidArgumentError("la malla está vacía")


def heatmap_norm(values):
    """
    Normalización logarítmica del mapa de calor. Las celdas con error cero
    quedan en el mínimo de la escala; las vacías (NaN) no se pintan.
    """
    finitos = values[np.isfinite(values)]
    positivos = finitos[finitos > 0]
    vmin = float(positivos.min()) if positivos.size else ZERO_FLOOR
    if positivos.size and np.any(finitos <= 0):
        vmin /= 10
    vmax = float(positivos.max()) if positivos.size else vmin
    if vmax <= vmin:
        vmax = vmin * 10
    return LogNorm(vmin=vmin, vmax=vmax, clip=True)


def heatmap_levels(result, attribute="mse_mean"):
    """Posición en [0, 1] de cada celda dentro de la escala de color"""
    _check_not_empty(result)
    values = result.matrix(attribute)
    norm = heatmap_norm(values)
    recortados = np.ma.masked_invalid(np.clip(values, norm.vmin, None))
    return norm(recortados)


def heatmap_colors(result, attribute="mse_mean"):
    return matplotlib.colormaps[COLORMAP](heatmap_levels(result, attribute))


def _save_svg(figure, path):
    path = Path(path)
    with matplotlib.rc_context({"svg.hashsalt": settings.COSPARSE_SVG_HASHSALT}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    return path


def _tick_labels(values):
    return [format(v, "g") for v in values]


def render_heatmap(result, path, attribute="mse_mean"):
    """Un rectángulo por celda, color logarítmico sobre el MSE medio"""
    _check_not_empty(result)
    values = result.matrix(attribute)
    norm = heatmap_norm(values)
    recortados = np.ma.masked_invalid(np.clip(values, norm.vmin, None))

    figure = Figure(figsize=(6.4, 4.8))
    ax = figure.add_subplot()
    malla = ax.pcolormesh(
        np.arange(len(result.x_axis) + 1) - 0.5,
        np.arange(len(result.y_axis) + 1) - 0.5,
        recortados,
        cmap=COLORMAP,
        norm=norm,
        shading="flat",
    )
    ax.set_xticks(range(len(result.x_axis)), _tick_labels(result.x_axis))
    ax.set_yticks(range(len(result.y_axis)), _tick_labels(result.y_axis))
    ax.set_xlabel("δ = m/d")
    ax.set_ylabel(_Y_LABELS.get(result.y_label, result.y_label))
    figure.colorbar(malla, ax=ax, label="MSE medio (escala log)")
    logger.info("Mapa de calor de %sx%s celdas en %s", len(result.y_axis), len(result.x_axis), path)
    return _save_svg(figure, path)


def render_error_curves(result, path, attribute="mse_mean"):
    """Error contra δ en escala logarítmica, una curva por fila de la malla"""
    _check_not_empty(result)
    values = result.matrix(attribute)
    piso = heatmap_norm(values).vmin

    figure = Figure(figsize=(6.4, 4.8))
    ax = figure.add_subplot()
    for i, y in enumerate(result.y_axis):
        fila = np.clip(values[i], piso, None)
        etiqueta = _Y_LABELS.get(result.y_label, result.y_label).split(" ")[0]
        ax.plot(result.x_axis, fila, marker="o", label=f"{etiqueta} = {y:g}")
    ax.set_yscale("log")
    ax.set_xlabel("δ = m/d")
    ax.set_ylabel("MSE medio")
    if len(result.y_axis) <= 12:
        ax.legend()
    return _save_svg(figure, path)


def success_rate_gap(result, column=0):
    """Tasa de éxito del bin superior menos la del inferior en una columna"""
    tasas = [fila[column].success_rate for fila in result.cells]
    if any(math.isnan(t) for t in (tasas[0], tasas[-1])):
        raise InvalidArgumentError("el bin superior o el inferior quedó vacío")
    return tasas[-1] - tasas[0]
