import itertools

import numpy as np
from django.test import SimpleTestCase, override_settings, tag
from scipy.optimize import linprog
from scipy.stats import norm

from analysis_ops.operators import build_dif2d, build_gaussian_operator
from config.error_handlers import InvalidArgumentError, NoSolutionError
from sensing.measurements import Normalization, gen_measurement_matrix, measure
from signal_gen.signals import gen_gaussian_k1, gen_gaussian_kb, gen_randomwalk_image
from .recovery import (
    L0Options,
    L1Options,
    bayes_success_for_ratio,
    bayes_two_point,
    project_ball,
    soft_threshold,
    solve_analysis_l0,
    solve_analysis_l1,
)


def l1_por_programacion_lineal(A, W, y):
    """Oráculo independiente: min Σt s.a. -t <= Wx <= t, Ax = y"""
    p, d = W.shape
    costo = np.concatenate([np.zeros(d), np.ones(p)])
    desigualdades = np.block([[W, -np.eye(p)], [-W, -np.eye(p)]])
    igualdades = np.hstack([A, np.zeros((A.shape[0], p))])
    resultado = linprog(
        costo,
        A_ub=desigualdades,
        b_ub=np.zeros(2 * p),
        A_eq=igualdades,
        b_eq=y,
        bounds=[(None, None)] * d + [(0, None)] * p,
        method="highs",
    )
    return resultado.fun


class ProximalStepTests(SimpleTestCase):

    def test_umbral_suave(self):
        np.testing.assert_array_equal(
            soft_threshold(np.array([-3.0, -0.5, 0.0, 0.5, 3.0]), 1.0),
            np.array([-2.0, 0.0, 0.0, 0.0, 2.0]),
        )

    def test_proyeccion_a_la_bola(self):
        centro = np.array([1.0, 0.0])
        np.testing.assert_allclose(project_ball(np.array([4.0, 0.0]), centro, 1.0), [2.0, 0.0])
        np.testing.assert_array_equal(project_ball(np.array([1.5, 0.0]), centro, 1.0), [1.5, 0.0])
        np.testing.assert_array_equal(project_ball(np.array([9.0, 9.0]), centro, 0.0), centro)


class AnalysisL1Tests(SimpleTestCase):

    def test_sistema_cuadrado_invertible(self):
        omega = build_gaussian_operator(9, 6, seed=1)
        A = gen_measurement_matrix(6, 6, Normalization.UNIT_COLUMNS, seed=2)
        x = np.random.default_rng(3).standard_normal(6)
        y = A @ x
        report = solve_analysis_l1(A, omega, y, 0.0, L1Options(max_iter=20_000, tol=1e-10))
        np.testing.assert_allclose(report.x_hat, np.linalg.solve(A, y), atol=1e-5)

    def test_sigma_negativa(self):
        omega = build_gaussian_operator(4, 4, seed=0)
        with self.assertRaises(InvalidArgumentError):
            solve_analysis_l1(np.eye(4), omega, np.zeros(4), -0.1)

    def test_tope_de_iteraciones_no_es_excepcion(self):
        omega = build_gaussian_operator(20, 10, seed=0)
        A = gen_measurement_matrix(4, 10, Normalization.UNIT_COLUMNS, seed=1)
        report = solve_analysis_l1(A, omega, A @ np.ones(10), 0.0, L1Options(max_iter=3))
        self.assertFalse(report.converged)
        self.assertEqual(report.iterations, 3)

    def test_converge_con_ruido(self):
        d, p, m, sigma = 50, 150, 45, 0.01
        omega = build_gaussian_operator(p, d, seed=11)
        x = gen_gaussian_k1(omega, 12).x
        A = gen_measurement_matrix(m, d, Normalization.UNIT_COLUMNS, seed=13)
        y = measure(A, x, sigma, noise_seed=14)
        opts = L1Options(max_iter=100_000, tol=1e-6)
        report = solve_analysis_l1(A, omega, y, sigma, opts)
        self.assertTrue(report.converged)
        self.assertLess(report.iterations, opts.max_iter)
        self.assertLessEqual(report.residual, np.sqrt(m) * sigma + opts.feasibility_tol)
        self.assertLessEqual(report.dual_residual, opts.tol)

    def test_convergencia_implica_factibilidad(self):
        for seed in range(4):
            omega = build_gaussian_operator(30, 10, seed=seed)
            x = gen_gaussian_k1(omega, seed).x
            A = gen_measurement_matrix(6, 10, Normalization.UNIT_COLUMNS, seed=seed + 30)
            y = measure(A, x, 0.05, noise_seed=seed + 60)
            report = solve_analysis_l1(A, omega, y, 0.05, L1Options(max_iter=100_000, tol=1e-7))
            self.assertTrue(report.converged)
            self.assertLessEqual(report.residual, np.sqrt(6) * 0.05 + 1e-6)

    def test_factibilidad_y_certificado_de_optimalidad(self):
        revisados = 0
        for seed in range(6):
            omega = build_gaussian_operator(15, 10, seed=seed)
            x = gen_gaussian_k1(omega, seed).x
            A = gen_measurement_matrix(8, 10, Normalization.UNIT_COLUMNS, seed=seed + 50)
            sigma = 0.05
            y = measure(A, x, sigma, noise_seed=seed + 100)
            report = solve_analysis_l1(A, omega, y, sigma, L1Options(max_iter=20_000, tol=1e-10))
            radio = np.sqrt(8) * sigma
            self.assertLessEqual(report.residual, radio + 1e-4)
            if np.linalg.norm(y - A @ x) <= radio:
                revisados += 1
                self.assertLessEqual(report.objective, np.abs(omega.matrix @ x).sum() + 1e-4)
        self.assertGreater(revisados, 0)

    def test_coincide_con_programacion_lineal(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            d = int(rng.integers(4, 11))
            p = int(rng.integers(d, 2 * d + 1))
            m = int(rng.integers(2, d))
            omega = build_gaussian_operator(p, d, seed=trial)
            A = gen_measurement_matrix(m, d, Normalization.UNIT_COLUMNS, seed=trial + 20)
            y = A @ rng.standard_normal(d)
            report = solve_analysis_l1(A, omega, y, 0.0, L1Options(max_iter=50_000, tol=1e-11))
            oraculo = l1_por_programacion_lineal(A, omega.matrix, y)
            self.assertAlmostEqual(report.objective, oraculo, delta=1e-5 * max(1.0, oraculo))

    def test_recuperacion_con_rho_uno(self):
        d, m, ensayos = 50, 10, 20
        errores = []
        for trial in range(ensayos):
            omega = build_gaussian_operator(d, d, seed=1000 + trial)
            x = gen_gaussian_k1(omega, trial).x
            A = gen_measurement_matrix(m, d, Normalization.UNIT_COLUMNS, seed=2000 + trial)
            report = solve_analysis_l1(A, omega, A @ x, 0.0, L1Options(max_iter=20_000))
            errores.append(report.relative_error(x))
        self.assertLessEqual(np.median(errores), 1e-3)

    def test_falla_con_rho_dos(self):
        d, m, ensayos = 40, 20, 10
        fallas = 0
        for trial in range(ensayos):
            omega = build_gaussian_operator(2 * d, d, seed=3000 + trial)
            x = gen_gaussian_k1(omega, trial).x
            A = gen_measurement_matrix(m, d, Normalization.UNIT_COLUMNS, seed=4000 + trial)
            report = solve_analysis_l1(A, omega, A @ x, 0.0)
            fallas += report.relative_error(x) > 0.1
        self.assertGreaterEqual(fallas, 0.8 * ensayos)

    def _errores_relativos(self, d, p, m, ensayos, semilla):
        errores = []
        for trial in range(ensayos):
            omega = build_gaussian_operator(p, d, seed=semilla + trial)
            x = gen_gaussian_k1(omega, semilla + 500 + trial).x
            A = gen_measurement_matrix(m, d, Normalization.UNIT_COLUMNS, seed=semilla + 1000 + trial)
            report = solve_analysis_l1(A, omega, A @ x, 0.0, L1Options(max_iter=20_000))
            errores.append(report.relative_error(x))
        return np.array(errores)

    @tag("slow")
    def test_rho_uno_a_escala_completa(self):
        # d=200, p=200, δ=0.1: 50 ensayos
        errores = self._errores_relativos(200, 200, 20, 50, semilla=7000)
        self.assertGreaterEqual(np.mean(errores <= 1e-3), 0.9)

    @tag("slow")
    def test_rho_dos_a_escala_completa(self):
        # d=200, p=400, δ=0.5: 50 ensayos
        errores = self._errores_relativos(200, 400, 100, 50, semilla=8000)
        self.assertGreaterEqual(np.mean(errores > 0.1), 0.9)

    def test_variacion_total_con_dif2d(self):
        omega = build_dif2d(6)
        x = gen_randomwalk_image(6, seed=2).x
        A = gen_measurement_matrix(30, 36, Normalization.UNIT_COLUMNS, seed=5)
        report = solve_analysis_l1(A, omega, A @ x, 0.0, L1Options(max_iter=20_000))
        self.assertLessEqual(report.residual, 1e-4)

    @override_settings(COSPARSE_L1_TOL=1e-6, COSPARSE_L1_MAX_ITER=100, COSPARSE_L1_RHO=2.0)
    def test_opciones_desde_settings(self):
        opts = L1Options.from_settings(rho=None, max_iter=7)
        self.assertEqual((opts.tol, opts.max_iter, opts.rho), (1e-6, 7, 2.0))


class AnalysisL0Tests(SimpleTestCase):

    def _cosoportes_mayores_consistentes(self, A, omega, y, tamano, b_max, eq_tol):
        """Re-enumeración independiente de los cosoportes más grandes"""
        for k in range(omega.p, tamano, -1):
            for filas in itertools.combinations(range(omega.p), k):
                _, s, vt = np.linalg.svd(omega.matrix[list(filas)])
                rango = int(np.sum(s > max(omega.p, omega.d) * np.finfo(float).eps * s[0]))
                base = vt[rango:].T
                if base.shape[1] > b_max:
                    continue
                if base.shape[1] == 0:
                    residuo = np.linalg.norm(y)
                else:
                    c, *_ = np.linalg.lstsq(A @ base, y, rcond=None)
                    residuo = np.linalg.norm(y - A @ base @ c)
                if residuo <= eq_tol:
                    return True
        return False

    def test_k1_con_dos_mediciones(self):
        for trial in range(20):
            omega = build_gaussian_operator(12, 8, seed=trial)
            x = gen_gaussian_k1(omega, trial + 100).x
            A = gen_measurement_matrix(2, 8, Normalization.UNIT_COLUMNS, seed=trial + 200)
            report = solve_analysis_l0(A, omega, A @ x, b_max=2)
            self.assertLessEqual(np.linalg.norm(report.x_hat - x), 1e-8)
            self.assertEqual(len(report.cosupport), 7)

    def test_k2_con_cuatro_mediciones(self):
        for trial in range(20):
            omega = build_gaussian_operator(12, 8, seed=trial + 40)
            x = gen_gaussian_kb(omega, 2, trial + 140).x
            A = gen_measurement_matrix(4, 8, Normalization.UNIT_COLUMNS, seed=trial + 240)
            report = solve_analysis_l0(A, omega, A @ x, b_max=2)
            self.assertLessEqual(np.linalg.norm(report.x_hat - x), 1e-8)

    def test_y_cero_da_la_senal_cero(self):
        omega = build_gaussian_operator(12, 8, seed=1)
        A = gen_measurement_matrix(3, 8, Normalization.UNIT_COLUMNS, seed=1)
        report = solve_analysis_l0(A, omega, np.zeros(3), b_max=2)
        np.testing.assert_array_equal(report.x_hat, np.zeros(8))
        self.assertEqual(report.objective, 0.0)
        self.assertEqual(len(report.cosupport), 12)

    def test_cosparsidad_maxima(self):
        omega = build_gaussian_operator(10, 6, seed=3)
        x = gen_gaussian_kb(omega, 2, 5).x
        A = gen_measurement_matrix(4, 6, Normalization.UNIT_COLUMNS, seed=6)
        y = A @ x
        report = solve_analysis_l0(A, omega, y, b_max=2)
        eq_tol = L0Options().tolerance_for(y)
        self.assertFalse(
            self._cosoportes_mayores_consistentes(A, omega, y, len(report.cosupport), 2, eq_tol)
        )

    def test_sin_solucion(self):
        omega = build_gaussian_operator(6, 4, seed=2)
        A = gen_measurement_matrix(3, 4, Normalization.UNIT_COLUMNS, seed=2)
        y = np.random.default_rng(0).standard_normal(3)
        with self.assertRaises(NoSolutionError):
            solve_analysis_l0(A, omega, y, b_max=1)


class BayesTwoPointTests(SimpleTestCase):

    def test_medicion_exacta_elige_el_primero(self):
        A = gen_measurement_matrix(3, 5, Normalization.OP_NORM_LEQ_ONE, seed=0)
        x1, x2 = np.eye(5)[0], np.eye(5)[1]
        self.assertEqual(bayes_two_point(A, x1, x2, A @ x1), 1)
        self.assertEqual(bayes_two_point(A, x1, x2, A @ x2), 2)

    def test_empate_va_al_primero(self):
        A = np.eye(2)
        self.assertEqual(bayes_two_point(A, np.array([1.0, 0]), np.array([-1.0, 0]), np.zeros(2)), 1)

    def test_candidatos_iguales(self):
        with self.assertRaises(InvalidArgumentError):
            bayes_two_point(np.eye(2), np.ones(2), np.ones(2), np.zeros(2))

    def test_ley_de_exito(self):
        for ratio in (0.1, 0.5, 1.0, 2.0):
            report = bayes_success_for_ratio(ratio, trials=100_000, seed=int(ratio * 10))
            self.assertAlmostEqual(report.ratio, ratio, places=9)
            self.assertAlmostEqual(report.theoretical, norm.cdf(ratio), places=12)
            self.assertLess(abs(report.empirical - report.theoretical), 0.01)

    def test_cota_de_tres_cuartos(self):
        report = bayes_success_for_ratio(0.5, trials=100_000, seed=99)
        self.assertAlmostEqual(report.theoretical, 0.6915, places=4)
        self.assertLessEqual(report.empirical, 0.75)
