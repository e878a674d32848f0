import tempfile
from pathlib import Path
from unittest import mock

import numpy as np
from django.test import SimpleTestCase
from PIL import Image

from analysis_ops.operators import (
    AnalysisOperator,
    OperatorKind,
    apply,
    build_dif2d,
    build_gaussian_operator,
    connected_components,
    cosupport,
)
from config.error_handlers import (
    DegenerateOperatorError,
    GenerationFailureError,
    InvalidArgumentError,
    InvalidDimensionError,
)
from .signals import (
    SignalSource,
    gen_gaussian_k1,
    gen_gaussian_kb,
    gen_packing_pattern,
    gen_randomwalk_image,
    packing_free_cells,
    random_signs,
    read_signal,
    save_image_png,
    write_signal,
)


class GaussianK1Tests(SimpleTestCase):

    def test_anulado_por_las_filas_elegidas_y_unitario(self):
        op = build_gaussian_operator(40, 20, seed=1)
        for seed in range(10):
            signal = gen_gaussian_k1(op, seed)
            self.assertLessEqual(np.abs(op.rows(signal.rows) @ signal.x).max(), 1e-8)
            self.assertAlmostEqual(np.linalg.norm(signal.x), 1.0, delta=1e-10)
            self.assertEqual(signal.b, 1)
            self.assertIs(signal.source, SignalSource.GAUSSIAN_K1)

    def test_cosparsidad_exacta_d_menos_uno(self):
        op = build_gaussian_operator(400, 200, seed=2)
        for seed in range(100):
            signal = gen_gaussian_k1(op, seed)
            self.assertEqual(signal.cosupport.cosparsity, 199)

    def test_caso_cuadrado(self):
        op = build_gaussian_operator(12, 12, seed=4)
        signal = gen_gaussian_k1(op, 0)
        self.assertEqual(len(signal.rows), 11)
        self.assertLessEqual(np.abs(op.rows(signal.rows) @ signal.x).max(), 1e-10)

    def test_determinismo(self):
        op = build_gaussian_operator(30, 10, seed=5)
        a = gen_gaussian_k1(op, 8)
        b = gen_gaussian_k1(build_gaussian_operator(30, 10, seed=5), 8)
        np.testing.assert_array_equal(a.x, b.x)
        self.assertEqual(a.rows, b.rows)

    def test_operador_degenerado(self):
        op = AnalysisOperator(matrix=np.zeros((6, 4)), kind=OperatorKind.GAUSSIAN, seed=0)
        with self.assertRaises(DegenerateOperatorError):
            gen_gaussian_k1(op, 0)

    def test_k2_vive_en_un_subespacio_de_dimension_dos(self):
        op = build_gaussian_operator(12, 8, seed=6)
        signal = gen_gaussian_kb(op, 2, seed=3)
        self.assertEqual(len(signal.rows), 6)
        self.assertEqual(signal.cosupport.cosparsity, 6)
        self.assertAlmostEqual(np.linalg.norm(signal.x), 1.0, delta=1e-10)

    def test_requiere_operador_gaussiano(self):
        with self.assertRaises(InvalidArgumentError):
            gen_gaussian_k1(build_dif2d(3), 0)


class RandomWalkImageTests(SimpleTestCase):

    def test_imagenes_aceptadas_tienen_dos_componentes(self):
        for seed in range(0, 400, 20):
            signal = gen_randomwalk_image(12, seed)
            self.assertEqual(connected_components(signal.image()), 2)
            self.assertEqual(len(np.unique(signal.x)), 2)
            self.assertEqual(signal.b, 2)

    def test_la_caminata_marca_al_menos_dos_pixeles(self):
        for seed in range(50):
            signal = gen_randomwalk_image(6, seed)
            valores, cuentas = np.unique(signal.x, return_counts=True)
            # el valor de la caminata es el negativo
            self.assertGreaterEqual(cuentas[valores < 0][0], 2)

    def test_cosparsidad_variable_y_acotada(self):
        d = 144
        niveles = {gen_randomwalk_image(12, seed).cosupport.cosparsity for seed in range(200)}
        self.assertGreater(len(niveles), 3)
        # dos píxeles adyacentes ya tienen seis aristas de borde
        self.assertLessEqual(max(niveles), 2 * d - 6)

    def test_reintentos_agotados(self):
        with mock.patch("signal_gen.signals.connected_components", return_value=3):
            with self.assertRaises(GenerationFailureError):
                gen_randomwalk_image(6, seed=0, max_retries=3)

    def test_n_pequeno(self):
        with self.assertRaises(InvalidDimensionError):
            gen_randomwalk_image(2, seed=0)


class PackingPatternTests(SimpleTestCase):

    def test_celdas_libres(self):
        self.assertEqual(packing_free_cells(12), 40)

    def test_todos_positivos(self):
        signal = gen_packing_pattern(12, np.ones(40))
        self.assertEqual(connected_components(signal.image()), 2)
        self.assertLessEqual(abs(np.linalg.norm(signal.x) - 1.0), 1e-12)
        np.testing.assert_allclose(np.abs(signal.x), np.full(144, 1 / 12))

    def test_dos_componentes_para_signos_aleatorios(self):
        for seed in range(200):
            signal = gen_packing_pattern(12, random_signs(40, seed))
            self.assertEqual(connected_components(signal.image()), 2)
            self.assertLessEqual(abs(np.linalg.norm(signal.x) - 1.0), 1e-12)

    def test_espinas_fijas(self):
        image = gen_packing_pattern(9, random_signs(21, 1)).image()
        np.testing.assert_array_equal(image[:, 0], np.full(9, 1 / 9))
        np.testing.assert_array_equal(image[:, -1], np.full(9, -1 / 9))

    def test_distancia_segun_hamming(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = random_signs(40, int(rng.integers(1 << 30)))
            b = a.copy()
            k = int(rng.integers(0, 41))
            b[rng.choice(40, size=k, replace=False)] *= -1
            x, y = gen_packing_pattern(12, a).x, gen_packing_pattern(12, b).x
            self.assertAlmostEqual(144 * np.sum((x - y) ** 2), 4 * k, places=9)

    def test_media_de_la_distancia(self):
        n, q, pares = 12, 40, 10_000
        distancias = np.empty(pares)
        for k in range(pares):
            x = gen_packing_pattern(n, random_signs(q, 2 * k)).x
            y = gen_packing_pattern(n, random_signs(q, 2 * k + 1)).x
            distancias[k] = np.sum((x - y) ** 2)
        esperado = 2 * q / n**2
        error_estandar = distancias.std(ddof=1) / np.sqrt(pares)
        self.assertLess(abs(distancias.mean() - esperado), 3 * error_estandar)

    def test_argumentos_invalidos(self):
        with self.assertRaises(InvalidArgumentError):
            gen_packing_pattern(10, np.ones(26))
        with self.assertRaises(InvalidArgumentError):
            gen_packing_pattern(12, np.ones(39))


class SignalFilesTests(SimpleTestCase):

    def test_lectura_recupera_entradas_y_cosoporte(self):
        signal = gen_randomwalk_image(6, seed=4)
        with tempfile.TemporaryDirectory() as tmp:
            ruta = write_signal(signal, Path(tmp) / "x.txt")
            self.assertTrue(ruta.read_text().startswith("36 2 random-walk-image\n"))
            leida = read_signal(ruta)
        np.testing.assert_array_equal(leida.x, signal.x)
        self.assertEqual(leida.cosupport, signal.cosupport)

    def test_gaussiana_con_operador(self):
        op = build_gaussian_operator(20, 10, seed=1)
        signal = gen_gaussian_k1(op, 2)
        with tempfile.TemporaryDirectory() as tmp:
            leida = read_signal(write_signal(signal, Path(tmp) / "x.txt"), op=op)
        self.assertEqual(leida.cosupport.cosparsity, 9)
        np.testing.assert_allclose(apply(op, leida.x), apply(op, signal.x), atol=0)

    def test_png(self):
        signal = gen_packing_pattern(6, random_signs(8, 0))
        with tempfile.TemporaryDirectory() as tmp:
            ruta = save_image_png(signal, Path(tmp) / "x.png", scale=4)
            with Image.open(ruta) as image:
                self.assertEqual(image.size, (24, 24))
                self.assertEqual(set(image.getdata()), {0, 255})

    def test_cosoporte_de_patron_medido_con_dif2d(self):
        signal = gen_packing_pattern(6, np.ones(8))
        esperado = cosupport(build_dif2d(6), signal.x)
        self.assertEqual(signal.cosupport, esperado)
