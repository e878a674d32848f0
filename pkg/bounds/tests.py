import math

import numpy as np
from django.test import SimpleTestCase, tag

from analysis_ops.operators import build_dif2d, build_gaussian_operator
from config.error_handlers import InvalidArgumentError
from packing_lab.packings import construct_random_packing, dif2d_sampler, gaussian_sampler
from sensing.measurements import Normalization, gen_measurement_matrix
from solvers.recovery import L1Options
from .minimax import (
    BoundModel,
    BoundQuery,
    gaussian_lower_bound,
    l1_estimator,
    minimax_mc,
    minimax_rescaling,
    minimax_risk_profile,
    packing_lower_bound,
    pseudoinverse_estimator,
    tv_lower_bound,
    zero_estimator,
)


class BoundQueryTests(SimpleTestCase):

    def test_dif2d_requiere_cuadrado(self):
        with self.assertRaises(InvalidArgumentError):
            BoundQuery(d=65, m=1, sigma=1.0, model=BoundModel.DIF2D_K2)

    def test_dif2d_requiere_d_al_menos_64(self):
        with self.assertRaises(InvalidArgumentError):
            BoundQuery(d=49, m=1, sigma=1.0, model="dif2d")

    def test_gaussiano_requiere_p_mayor_que_d(self):
        with self.assertRaises(InvalidArgumentError):
            BoundQuery(d=10, m=1, sigma=1.0, model="gaussian", p=9)

    def test_m_positivo(self):
        with self.assertRaises(InvalidArgumentError):
            BoundQuery(d=64, m=0, sigma=1.0, model="dif2d")


class TvLowerBoundTests(SimpleTestCase):

    def test_valores_conocidos(self):
        self.assertAlmostEqual(tv_lower_bound(BoundQuery(64, 1, 1.0, "dif2d")), math.e / 64, places=15)
        self.assertAlmostEqual(
            tv_lower_bound(BoundQuery(256, 2, 0.01, "dif2d")), 0.01 * math.e**2 / 64, places=15
        )
        self.assertAlmostEqual(tv_lower_bound(BoundQuery(256, 2, 0.01, "dif2d")), 1.155e-3, places=6)

    def test_modelo_equivocado(self):
        with self.assertRaises(InvalidArgumentError):
            tv_lower_bound(BoundQuery(64, 1, 1.0, "gaussian", p=64))

    def test_composicion_con_la_cota_de_empaquetamiento(self):
        d, m, sigma = 144, 4, 0.01
        self.assertAlmostEqual(
            tv_lower_bound(BoundQuery(d, m, sigma, "dif2d")),
            packing_lower_bound(0.5, math.exp(d / 64), m, sigma),
            places=15,
        )

    def test_monotonia(self):
        for d in (64, 100, 144, 196):
            valores = [tv_lower_bound(BoundQuery(d, m, 0.01, "dif2d")) for m in range(1, 10)]
            self.assertTrue(all(a > b for a, b in zip(valores, valores[1:])))
        for m in (1, 3, 7):
            valores = [tv_lower_bound(BoundQuery(n * n, m, 0.01, "dif2d")) for n in range(8, 16)]
            self.assertTrue(all(a < b for a, b in zip(valores, valores[1:])))


class GaussianLowerBoundTests(SimpleTestCase):

    def test_valor_de_referencia(self):
        d, p, m, sigma = 200, 400, 20, 0.01
        # misma cantidad escrita en forma logarítmica
        esperado = math.exp(
            math.log(sigma) - math.log(64) - math.log(3) / (2 * m) + 199 * (202 / 400) / 160
        )
        self.assertAlmostEqual(
            gaussian_lower_bound(BoundQuery(d, m, sigma, "gaussian", p=p)) / esperado, 1.0, places=12
        )

    def test_limite_p_grande(self):
        d, m, sigma = 30, 3, 1.0
        limite = sigma / 64 * 3 ** (-1 / (2 * m)) * math.exp((d - 1) / (8 * m))
        valor = gaussian_lower_bound(BoundQuery(d, m, sigma, "gaussian", p=10**9))
        self.assertAlmostEqual(valor / limite, 1.0, places=6)

    def test_exponente_a_la_mitad(self):
        d, m = 30, 2
        mitad = gaussian_lower_bound(BoundQuery(d, m, 1.0, "gaussian", p=2 * (d - 2)))
        completo = gaussian_lower_bound(BoundQuery(d, m, 1.0, "gaussian", p=10**12))
        base = 3 ** (-1 / (2 * m)) / 64
        self.assertAlmostEqual(math.log(mitad / base), math.log(completo / base) / 2, places=6)

    def test_monotonia(self):
        for d in (10, 30, 60):
            valores = [gaussian_lower_bound(BoundQuery(d, m, 0.01, "gaussian", p=3 * d)) for m in range(1, 8)]
            self.assertTrue(all(a > b for a, b in zip(valores, valores[1:])))
        for m in (1, 4):
            valores = [gaussian_lower_bound(BoundQuery(d, m, 0.01, "gaussian", p=3 * d)) for d in range(3, 40)]
            self.assertTrue(all(a < b for a, b in zip(valores, valores[1:])))


class RescalingTests(SimpleTestCase):

    def test_lambda(self):
        self.assertAlmostEqual(minimax_rescaling(16, 4, 0.5), 4.0, places=12)

    def test_sigma_cero(self):
        with self.assertRaises(InvalidArgumentError):
            minimax_rescaling(10, 4, 0.0)


class MinimaxMonteCarloTests(SimpleTestCase):
    sigma = 0.01

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dif_packing = construct_random_packing(dif2d_sampler(12), 0.5, 10, max_restarts=10, seed=0)
        cls.gauss_op = build_gaussian_operator(90, 30, seed=7)
        cls.gauss_packing = construct_random_packing(
            gaussian_sampler(cls.gauss_op), 0.5, 7, max_restarts=10, seed=0
        )

    def test_estimador_cero_en_la_esfera(self):
        A = gen_measurement_matrix(4, 144, Normalization.OP_NORM_LEQ_ONE, seed=1)
        riesgo = minimax_mc(zero_estimator(144), self.dif_packing, A, self.sigma, trials=5, seed=0)
        self.assertAlmostEqual(riesgo, 1.0, places=12)

    def _comparar(self, estimador, packing, A, m, cota, trials):
        escala = 1 / minimax_rescaling(packing.count, m, self.sigma)
        perfil = minimax_risk_profile(estimador, packing, A, self.sigma, trials, seed=m, scale=escala)
        self.assertGreaterEqual(perfil.max_risk, cota - 3 * perfil.max_risk_stderr)
        self.assertTrue(np.all(perfil.means >= 0))

    def test_dif2d_contra_la_cota(self):
        omega = build_dif2d(12)
        for m in (2, 4, 8):
            A = gen_measurement_matrix(m, 144, Normalization.OP_NORM_LEQ_ONE, seed=10 + m)
            cota = tv_lower_bound(BoundQuery(144, m, self.sigma, "dif2d"))
            self._comparar(zero_estimator(144), self.dif_packing, A, m, cota, trials=20)
            self._comparar(pseudoinverse_estimator(A), self.dif_packing, A, m, cota, trials=100)
            self._comparar(
                l1_estimator(A, omega, self.sigma, L1Options(max_iter=500, tol=1e-6)),
                self.dif_packing, A, m, cota, trials=5,
            )

    def test_gaussiano_contra_la_cota(self):
        for m in (2, 5):
            A = gen_measurement_matrix(m, 30, Normalization.OP_NORM_LEQ_ONE, seed=20 + m)
            cota = gaussian_lower_bound(BoundQuery(30, m, self.sigma, "gaussian", p=90))
            self._comparar(zero_estimator(30), self.gauss_packing, A, m, cota, trials=20)
            self._comparar(pseudoinverse_estimator(A), self.gauss_packing, A, m, cota, trials=100)
            self._comparar(
                l1_estimator(A, self.gauss_op, self.sigma, L1Options(max_iter=500, tol=1e-6)),
                self.gauss_packing, A, m, cota, trials=5,
            )

    def test_determinismo(self):
        A = gen_measurement_matrix(4, 144, Normalization.OP_NORM_LEQ_ONE, seed=3)
        estimador = pseudoinverse_estimator(A)
        primero = minimax_risk_profile(estimador, self.dif_packing, A, self.sigma, 10, seed=5)
        segundo = minimax_risk_profile(estimador, self.dif_packing, A, self.sigma, 10, seed=5)
        np.testing.assert_array_equal(primero.means, segundo.means)

    def test_repeticion_identica_con_l1(self):
        omega = build_dif2d(12)
        A = gen_measurement_matrix(4, 144, Normalization.OP_NORM_LEQ_ONE, seed=8)
        escala = 1 / minimax_rescaling(self.dif_packing.count, 4, self.sigma)
        riesgos = [
            minimax_mc(
                l1_estimator(A, omega, self.sigma, L1Options(max_iter=200, tol=1e-6)),
                self.dif_packing, A, self.sigma, trials=3, seed=11, scale=escala,
            )
            for _ in range(2)
        ]
        self.assertEqual(riesgos[0], riesgos[1])

    @tag("slow")
    def test_criterio_con_cien_ensayos(self):
        m = 4
        omega = build_dif2d(12)
        A = gen_measurement_matrix(m, 144, Normalization.OP_NORM_LEQ_ONE, seed=10 + m)
        cota = tv_lower_bound(BoundQuery(144, m, self.sigma, "dif2d"))
        for estimador in (
            zero_estimator(144),
            pseudoinverse_estimator(A),
            l1_estimator(A, omega, self.sigma, L1Options(max_iter=2000, tol=1e-6)),
        ):
            self._comparar(estimador, self.dif_packing, A, m, cota, trials=100)

    def test_norma_mayor_que_uno_advierte(self):
        A = 2 * gen_measurement_matrix(4, 144, Normalization.OP_NORM_LEQ_ONE, seed=3)
        with self.assertLogs("bounds.minimax", level="WARNING"):
            minimax_mc(zero_estimator(144), self.dif_packing, A, self.sigma, trials=2, seed=0)
