import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase, override_settings, tag

from analysis_ops.seeds import derive_seed
from config.error_handlers import InvalidArgumentError, InvalidDimensionError
from solvers.recovery import L1Options
from .export import (
    export_csv,
    heatmap_colors,
    heatmap_levels,
    load_csv,
    render_error_curves,
    render_heatmap,
    success_rate_gap,
)
from .grids import (
    CosparsityBin,
    GridCell,
    PhaseGridResult,
    phase_grid_dif,
    phase_grid_gaussian,
    pilot_cosparsity_bins,
    round_count,
)

# umbrales fijados con una corrida piloto (semilla 0)
NOISY_ERROR_RATIO = 5.0
DIF_SUCCESS_GAP = 0.3
DIF_GAP_DELTA = 0.2


def celda(mse):
    return GridCell(mse, mse, mse, mse, 5, 0, 0, float(mse <= 1e-6))


def malla_artificial(valores, x_axis=None, y_axis=None):
    valores = np.atleast_2d(valores)
    return PhaseGridResult(
        x_axis=tuple(x_axis or [0.1 * (j + 1) for j in range(valores.shape[1])]),
        y_axis=tuple(y_axis or [1.0 + i for i in range(valores.shape[0])]),
        y_label="rho",
        cells=tuple(tuple(celda(float(v)) for v in fila) for fila in valores),
        meta={"model": "gaussian", "d": 50, "sigma": 0.0, "master_seed": 0},
    )


class RoundingTests(SimpleTestCase):

    def test_redondeo(self):
        self.assertEqual(round_count(0.2, 50), 10)
        self.assertEqual(round_count(0.25, 10), 3)
        self.assertEqual(round_count(1.0, 144), 144)

    def test_redondeo_a_cero(self):
        with self.assertRaises(InvalidArgumentError):
            round_count(0.01, 20)


class GaussianGridTests(SimpleTestCase):

    def test_anclaje_cuadrado_invertible(self):
        resultado = phase_grid_gaussian(
            10, [1.0], [1.0], 0.0, trials=3, master_seed=0, opts=L1Options(max_iter=20_000, tol=1e-10)
        )
        self.assertLessEqual(resultado.cell(0, 0).mse_mean, 1e-8)
        self.assertEqual(resultado.cell(0, 0).success_rate, 1.0)

    def test_ensayos_y_fallas_de_generacion(self):
        resultado = phase_grid_gaussian(12, [1.0, 2.0], [0.3, 0.6], 0.01, trials=4, master_seed=3,
                                        opts=L1Options(max_iter=300))
        self.assertEqual(len(resultado.cells), 2)
        for _, _, cell in resultado.iter_cells():
            self.assertEqual(cell.trials, 4 - cell.generation_failures)
            self.assertGreaterEqual(cell.mse_mean, 0.0)
            self.assertGreaterEqual(cell.mse_median, 0.0)
            self.assertLessEqual(cell.failures, cell.trials)
        self.assertEqual(resultado.meta["rounding"], "floor(x*d+0.5)")
        self.assertEqual(resultado.meta["color_scale"], "log")

    def test_exito_con_rho_uno(self):
        resultado = phase_grid_gaussian(
            50, [1.0], [0.2], 0.0, trials=10, master_seed=1, opts=L1Options(max_iter=20_000)
        )
        self.assertLessEqual(resultado.cell(0, 0).mse_median, 1e-6)

    def test_error_crece_al_bajar_las_mediciones(self):
        resultado = phase_grid_gaussian(50, [3.0], [0.3, 0.9], 0.01, trials=20, master_seed=2)
        self.assertGreater(resultado.cell(0, 0).mse_mean, resultado.cell(0, 1).mse_mean)

    @tag("slow")
    def test_inestabilidad_con_rho_tres(self):
        deltas = [0.3, 0.5, 0.7, 0.9]
        resultado = phase_grid_gaussian(50, [3.0], deltas, 0.01, trials=50, master_seed=0)
        errores = resultado.matrix("mse_mean")[0]
        # log(mse) crece con 1/δ
        self.assertTrue(np.all(np.diff(errores) < 0))
        self.assertGreaterEqual(errores[0] / errores[-1], NOISY_ERROR_RATIO)

    def test_rho_demasiado_pequeno(self):
        with self.assertRaises(InvalidDimensionError):
            phase_grid_gaussian(20, [0.5], [0.5], 0.0, trials=1, master_seed=0)

    def test_independiente_del_numero_de_procesos(self):
        argumentos = (12, [1.0, 1.5], [0.4, 0.8], 0.01)
        opts = L1Options(max_iter=200)
        secuencial = phase_grid_gaussian(*argumentos, trials=2, master_seed=9, opts=opts, jobs=1)
        paralelo = phase_grid_gaussian(*argumentos, trials=2, master_seed=9, opts=opts, jobs=2)
        with tempfile.TemporaryDirectory() as tmp:
            primero = export_csv(secuencial, Path(tmp) / "a.csv").read_bytes()
            segundo = export_csv(paralelo, Path(tmp) / "b.csv").read_bytes()
        self.assertEqual(primero, segundo)


class DifGridTests(SimpleTestCase):

    def test_bins_del_piloto(self):
        bins = pilot_cosparsity_bins(6, 3, pilot_size=100, seed=0)
        self.assertEqual(len(bins), 3)
        self.assertTrue(bins[-1].inclusive_high)
        self.assertLessEqual(bins[-1].high, 2 * 36 - 6)
        self.assertAlmostEqual(bins[0].high - bins[0].low, bins[1].high - bins[1].low)

    def test_bin_contiene(self):
        bin_ = CosparsityBin(10, 20)
        self.assertTrue(bin_.contains(10))
        self.assertFalse(bin_.contains(20))
        self.assertTrue(CosparsityBin(10, 20, inclusive_high=True).contains(20))

    def test_celdas_llenas_o_vacias(self):
        bins = pilot_cosparsity_bins(6, 2, pilot_size=100, seed=1)
        resultado = phase_grid_dif(6, bins, [0.5], 0.0, trials=3, master_seed=0,
                                   opts=L1Options(max_iter=500))
        self.assertEqual(resultado.y_label, "cosparsity")
        self.assertEqual(resultado.y_axis, tuple(b.center for b in bins))
        for _, _, cell in resultado.iter_cells():
            self.assertEqual(cell.trials + cell.generation_failures, 3)

    def test_repeticion_identica(self):
        bins = pilot_cosparsity_bins(6, 2, pilot_size=100, seed=1)
        argumentos = (6, bins, [0.4, 0.7], 0.01)
        opts = L1Options(max_iter=300)
        with tempfile.TemporaryDirectory() as tmp:
            archivos = [
                export_csv(
                    phase_grid_dif(*argumentos, trials=2, master_seed=5, opts=opts, jobs=jobs),
                    Path(tmp) / f"dif_{jobs}.csv",
                ).read_bytes()
                for jobs in (1, 1, 2)
            ]
        self.assertEqual(archivos[0], archivos[1])
        self.assertEqual(archivos[0], archivos[2])

    def test_bin_imposible_queda_vacio(self):
        with self.assertLogs("experiments.grids", level="WARNING"):
            resultado = phase_grid_dif(6, [(0, 1)], [0.5], 0.0, trials=2, master_seed=0,
                                       generation_budget=20)
        cell = resultado.cell(0, 0)
        self.assertTrue(cell.empty)
        self.assertTrue(math.isnan(cell.mse_mean))
        self.assertEqual(cell.generation_failures, 2)

    def test_cosparsidad_alta_se_recupera_mejor(self):
        bins = pilot_cosparsity_bins(12, 5, pilot_size=1000, seed=derive_seed(0, 4))
        resultado = phase_grid_dif(
            12, [bins[0], bins[-1]], [DIF_GAP_DELTA], 0.0, trials=20, master_seed=0,
            generation_budget=40_000,
        )
        baja, alta = resultado.cell(0, 0), resultado.cell(1, 0)
        self.assertFalse(baja.empty)
        self.assertFalse(alta.empty)
        self.assertGreaterEqual(success_rate_gap(resultado), DIF_SUCCESS_GAP)


class CsvExportTests(SimpleTestCase):

    def test_filas_y_encabezado(self):
        resultado = malla_artificial([[0.5, 0.25], [1.0, 0.125]])
        with tempfile.TemporaryDirectory() as tmp:
            lineas = export_csv(resultado, Path(tmp) / "malla.csv").read_text().splitlines()
        datos = [linea for linea in lineas if not linea.startswith("#")]
        self.assertEqual(len(datos), 5)
        self.assertTrue(datos[0].startswith("delta,rho_or_cosparsity,mse_mean,mse_median,trials,failures"))
        self.assertTrue(datos[1].startswith("0.1,1,0.5,"))
        self.assertTrue(datos[2].startswith("0.2,1,0.25,"))
        self.assertIn("# master_seed=0", lineas)

    def test_reexportacion_identica(self):
        resultado = malla_artificial([[1 / 3, 2 / 7]])
        with tempfile.TemporaryDirectory() as tmp:
            primero = export_csv(resultado, Path(tmp) / "a.csv").read_bytes()
            segundo = export_csv(resultado, Path(tmp) / "a.csv").read_bytes()
        self.assertEqual(primero, segundo)

    def test_lectura_a_diez_cifras(self):
        resultado = malla_artificial([[1 / 3, 2 / 7], [math.pi / 10, 0.0]])
        with tempfile.TemporaryDirectory() as tmp:
            leido = load_csv(export_csv(resultado, Path(tmp) / "a.csv"))
        self.assertEqual(leido.x_axis, resultado.x_axis)
        self.assertEqual(leido.y_axis, resultado.y_axis)
        self.assertEqual(leido.meta["d"], 50)
        for (_, _, original), (_, _, copia) in zip(resultado.iter_cells(), leido.iter_cells()):
            self.assertEqual(format(original.mse_mean, ".10g"), format(copia.mse_mean, ".10g"))
            self.assertEqual(original.trials, copia.trials)


@override_settings(COSPARSE_SVG_HASHSALT="pruebas")
class HeatmapTests(SimpleTestCase):

    def test_celda_unica_con_error_cero(self):
        niveles = heatmap_levels(malla_artificial([[0.0]]))
        self.assertEqual(float(niveles[0, 0]), 0.0)

    def test_progresion_monotona(self):
        niveles = heatmap_levels(malla_artificial([[1e-6, 1e-4, 1e-2, 1.0]]))
        self.assertTrue(np.all(np.diff(niveles[0]) > 0))
        colores = heatmap_colors(malla_artificial([[1e-6, 1.0]]))
        self.assertEqual(colores.shape, (1, 2, 4))
        self.assertFalse(np.allclose(colores[0, 0], colores[0, 1]))

    def test_celda_vacia_queda_enmascarada(self):
        niveles = heatmap_levels(malla_artificial([[float("nan"), 0.5]]))
        self.assertTrue(np.ma.is_masked(niveles[0, 0]))

    def test_malla_vacia(self):
        vacia = PhaseGridResult(x_axis=(), y_axis=(), y_label="rho", cells=(), meta={})
        with tempfile.TemporaryDirectory() as tmp, self.assertRaises(InvalidArgumentError):
            render_heatmap(vacia, Path(tmp) / "vacia.svg")

    def test_svg_determinista(self):
        resultado = malla_artificial([[1e-5, 1e-2], [0.3, 1.0]])
        with tempfile.TemporaryDirectory() as tmp:
            primero = render_heatmap(resultado, Path(tmp) / "a.svg").read_bytes()
            segundo = render_heatmap(resultado, Path(tmp) / "a.svg").read_bytes()
            curvas = render_error_curves(resultado, Path(tmp) / "curvas.svg").read_text()
        self.assertEqual(primero, segundo)
        self.assertIn(b"<svg", primero)
        self.assertIn("<svg", curvas)
