import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from config.error_handlers import InvalidArgumentError, InvalidDimensionError
from .measurements import (
    Normalization,
    gen_measurement_matrix,
    make_instance,
    measure,
    read_instance,
    top_singular_value,
    write_instance,
)


class MeasurementMatrixTests(SimpleTestCase):

    def test_escalar_unitario(self):
        A = gen_measurement_matrix(1, 1, Normalization.UNIT_COLUMNS, seed=3)
        self.assertEqual(abs(A[0, 0]), 1.0)

    def test_columnas_unitarias(self):
        A = gen_measurement_matrix(20, 200, Normalization.UNIT_COLUMNS, seed=1)
        self.assertEqual(A.shape, (20, 200))
        np.testing.assert_allclose(np.linalg.norm(A, axis=0), np.ones(200), atol=1e-12)

    def test_norma_de_operador_uno(self):
        A = gen_measurement_matrix(30, 80, Normalization.OP_NORM_LEQ_ONE, seed=2)
        self.assertAlmostEqual(top_singular_value(A), 1.0, delta=1e-10)

    def test_columnas_unitarias_no_cumplen_la_hipotesis_de_norma(self):
        for seed in range(20):
            A = gen_measurement_matrix(200, 200, Normalization.UNIT_COLUMNS, seed=seed)
            self.assertTrue(1.7 <= top_singular_value(A) <= 2.3)

    def test_m_mayor_que_d_se_permite(self):
        with self.assertLogs("sensing.measurements", level="WARNING"):
            A = gen_measurement_matrix(5, 3, "unit-columns", seed=0)
        self.assertEqual(A.shape, (5, 3))

    def test_dimensiones_invalidas(self):
        with self.assertRaises(InvalidDimensionError):
            gen_measurement_matrix(0, 3, Normalization.UNIT_COLUMNS, seed=0)

    def test_determinismo(self):
        a = gen_measurement_matrix(4, 9, Normalization.UNIT_COLUMNS, seed=5)
        b = gen_measurement_matrix(4, 9, Normalization.UNIT_COLUMNS, seed=5)
        np.testing.assert_array_equal(a, b)


class MeasureTests(SimpleTestCase):

    def test_sin_ruido_es_exacto(self):
        A = gen_measurement_matrix(6, 10, Normalization.UNIT_COLUMNS, seed=0)
        x = np.arange(10.0)
        np.testing.assert_array_equal(measure(A, x, 0.0, noise_seed=4), A @ x)

    def test_x_cero_devuelve_el_ruido(self):
        A = gen_measurement_matrix(6, 10, Normalization.UNIT_COLUMNS, seed=0)
        y = measure(A, np.zeros(10), 0.5, noise_seed=4)
        z = np.random.default_rng(4).normal(0.0, 0.5, size=6)
        np.testing.assert_allclose(y, z)

    def test_energia_del_ruido(self):
        m, sigma = 200, 0.01
        A = np.zeros((m, 1))
        energias = [np.sum(measure(A, np.zeros(1), sigma, seed) ** 2) for seed in range(10_000)]
        self.assertAlmostEqual(np.mean(energias) / (m * sigma**2), 1.0, delta=0.02)

    def test_sigma_negativa(self):
        with self.assertRaises(InvalidArgumentError):
            measure(np.eye(2), np.zeros(2), -1.0, 0)


class InstanceFileTests(SimpleTestCase):

    def test_escritura_y_lectura(self):
        instancia = make_instance(np.linspace(-1, 1, 8), 3, 0.1, "op-norm", 7, 8)
        with tempfile.TemporaryDirectory() as tmp:
            ruta = write_instance(instancia, Path(tmp) / "instancia.txt")
            self.assertTrue(ruta.read_text().startswith("3 8 0.10000000000000001 op-norm 7 8\n"))
            leida = read_instance(ruta)
        np.testing.assert_array_equal(leida.A, instancia.A)
        np.testing.assert_array_equal(leida.y, instancia.y)
        np.testing.assert_array_equal(leida.x_true, instancia.x_true)
        self.assertIs(leida.normalization, Normalization.OP_NORM_LEQ_ONE)

    def test_regenerable_desde_el_encabezado(self):
        instancia = make_instance(np.ones(5), 2, 0.0, "unit-columns", 11, 12)
        A = gen_measurement_matrix(2, 5, Normalization.UNIT_COLUMNS, seed=11)
        np.testing.assert_array_equal(instancia.A, A)
