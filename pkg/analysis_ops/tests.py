import itertools
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from config.error_handlers import DimensionMismatchError, InvalidDimensionError
from .operators import (
    Cosupport,
    OperatorKind,
    apply,
    build_dif2d,
    build_gaussian_operator,
    connected_components,
    cosupport,
    read_operator,
    subspace_basis,
    write_operator,
)
from .seeds import derive_seed


def componentes_por_union_find(image):
    """Oráculo de fuerza bruta con vecindad 4 cíclica"""
    n = image.shape[0]
    padre = list(range(n * n))

    def raiz(i):
        while padre[i] != i:
            padre[i] = padre[padre[i]]
            i = padre[i]
        return i

    for i in range(n):
        for j in range(n):
            for vi, vj in (((i + 1) % n, j), (i, (j + 1) % n)):
                if image[i, j] == image[vi, vj]:
                    padre[raiz(i * n + j)] = raiz(vi * n + vj)
    return len({raiz(k) for k in range(n * n)})


class Dif2DTests(SimpleTestCase):

    def test_constante_se_anula(self):
        op = build_dif2d(2)
        self.assertEqual(op.p, 8)
        np.testing.assert_array_equal(apply(op, np.full(4, 3.7)), np.zeros(8))

    def test_diferencia_ciclica_n3(self):
        op = build_dif2d(3)
        x = np.zeros(9)
        x[0] = 1.0
        salida = apply(op, x)
        self.assertEqual(salida[0], 1.0)
        # fila H del píxel (0, 2): X_{0,2} - X_{0,0}
        self.assertEqual(salida[2], -1.0)

    def test_dimensiones_n12(self):
        op = build_dif2d(12)
        self.assertEqual((op.p, op.d), (288, 144))
        np.testing.assert_array_equal(op.matrix.sum(axis=1), np.zeros(288))

    def test_cada_fila_tiene_un_mas_uno_y_un_menos_uno(self):
        op = build_dif2d(5)
        for fila in op.matrix:
            self.assertEqual(np.count_nonzero(fila == 1.0), 1)
            self.assertEqual(np.count_nonzero(fila == -1.0), 1)
            self.assertEqual(np.count_nonzero(fila), 2)

    def test_apply_estructurado_coincide_con_matriz(self):
        op = build_dif2d(6)
        x = np.random.default_rng(3).standard_normal(36)
        np.testing.assert_allclose(apply(op, x), op.matrix @ x, atol=1e-14)

    def test_n_invalido(self):
        with self.assertRaises(InvalidDimensionError):
            build_dif2d(1)


class GaussianOperatorTests(SimpleTestCase):

    def test_media_muestral_cercana_a_cero(self):
        op = build_gaussian_operator(200, 200, seed=7)
        self.assertLess(abs(op.matrix.mean()), 4 / np.sqrt(200 * 200))

    def test_determinismo(self):
        a = build_gaussian_operator(1, 1, seed=0)
        b = build_gaussian_operator(1, 1, seed=0)
        np.testing.assert_array_equal(a.matrix, b.matrix)

    def test_forma_del_borde_de_la_grilla(self):
        op = build_gaussian_operator(700, 200, seed=1)
        self.assertEqual(op.matrix.shape, (700, 200))
        self.assertIs(op.kind, OperatorKind.GAUSSIAN)

    def test_dimensiones_no_positivas(self):
        with self.assertRaises(InvalidDimensionError):
            build_gaussian_operator(0, 5, seed=1)

    def test_apply_primer_vector_canonico_da_primera_columna(self):
        op = build_gaussian_operator(10, 4, seed=2)
        np.testing.assert_array_equal(apply(op, np.eye(4)[0]), op.matrix[:, 0])

    def test_linealidad(self):
        rng = np.random.default_rng(11)
        for op in (build_gaussian_operator(30, 20, seed=5), build_dif2d(5)):
            x, y = rng.standard_normal((2, op.d))
            alfa, beta = rng.standard_normal(2)
            izquierda = apply(op, alfa * x + beta * y)
            derecha = alfa * apply(op, x) + beta * apply(op, y)
            np.testing.assert_allclose(izquierda, derecha, rtol=1e-12, atol=1e-12)

    def test_longitud_incorrecta(self):
        op = build_gaussian_operator(5, 3, seed=0)
        with self.assertRaises(DimensionMismatchError):
            apply(op, np.zeros(4))


class CosupportTests(SimpleTestCase):

    def test_constante_tiene_cosparsidad_maxima(self):
        op = build_dif2d(4)
        cos = cosupport(op, np.ones(16), tol=1e-10)
        self.assertEqual(cos.cosparsity, 32)
        self.assertEqual(cos.support_size, 0)

    def test_imagen_de_dos_componentes_cuenta_bordes(self):
        image = np.zeros((4, 4))
        image[1:3, 1:3] = 1.0
        op = build_dif2d(4)
        cos = cosupport(op, image.ravel())
        bordes = sum(
            image[i, j] != image[i, (j + 1) % 4] for i in range(4) for j in range(4)
        ) + sum(
            image[i, j] != image[(i + 1) % 4, j] for i in range(4) for j in range(4)
        )
        self.assertEqual(cos.support_size, bordes)
        self.assertEqual(cos.support_size, 8)
        self.assertEqual(cos.cosparsity + cos.support_size, op.p)

    def test_particion(self):
        cos = Cosupport.from_rows([4, 1, 1], p=6)
        self.assertEqual(cos.zero_rows, (1, 4))
        self.assertEqual(sorted(cos.zero_rows + cos.support()), list(range(6)))


class SubspaceBasisTests(SimpleTestCase):

    def test_filas_en_posicion_general_dan_b_uno(self):
        rng = np.random.default_rng(0)
        for trial in range(100):
            d = int(rng.integers(2, 21))
            op = build_gaussian_operator(d + 5, d, seed=trial)
            filas = rng.choice(op.p, size=d - 1, replace=False)
            base = subspace_basis(op, Cosupport.from_rows(filas, op.p))
            self.assertEqual(base.dim, 1)

    def test_anula_filas_y_es_ortonormal(self):
        rng = np.random.default_rng(1)
        for trial in range(10):
            op = build_gaussian_operator(60, 50, seed=100 + trial)
            filas = rng.choice(60, size=int(rng.integers(1, 50)), replace=False)
            cos = Cosupport.from_rows(filas, op.p)
            base = subspace_basis(op, cos)
            self.assertEqual(base.dim, 50 - len(filas))
            self.assertLessEqual(np.abs(op.rows(cos.zero_rows) @ base.basis).max(), 1e-8)
            np.testing.assert_allclose(base.basis.T @ base.basis, np.eye(base.dim), atol=1e-10)

    def test_cosoporte_vacio(self):
        op = build_gaussian_operator(7, 5, seed=3)
        base = subspace_basis(op, Cosupport.from_rows([], op.p))
        self.assertEqual(base.dim, 5)
        np.testing.assert_array_equal(base.basis, np.eye(5))

    def test_dif2d_completo_deja_las_constantes(self):
        op = build_dif2d(4)
        base = subspace_basis(op, Cosupport.from_rows(range(op.p), op.p))
        self.assertEqual(base.dim, 1)
        columna = base.basis[:, 0]
        np.testing.assert_allclose(np.abs(columna), np.full(16, 0.25), atol=1e-12)


class ConnectedComponentsTests(SimpleTestCase):

    def test_constante(self):
        self.assertEqual(connected_components(np.ones((5, 5))), 1)

    def test_mancha(self):
        image = np.zeros((6, 6))
        image[2:4, 1:5] = 1.0
        self.assertEqual(connected_components(image), 2)

    def test_tablero_de_ajedrez(self):
        # n par: ningún vecino cíclico comparte valor
        image = np.indices((4, 4)).sum(axis=0) % 2
        self.assertEqual(connected_components(image), 16)

    def test_coincide_con_union_find_en_todas_las_grillas_3x3(self):
        for bits in itertools.product((0.0, 1.0), repeat=9):
            image = np.array(bits).reshape(3, 3)
            self.assertEqual(connected_components(image), componentes_por_union_find(image))

    def test_tolerancia_une_valores_cercanos(self):
        image = np.zeros((3, 3))
        image[0, 0] = 1e-9
        self.assertEqual(connected_components(image, tol=0.0), 2)
        self.assertEqual(connected_components(image, tol=1e-8), 1)


class SerializationTests(SimpleTestCase):

    def test_gaussiano_conserva_entradas(self):
        op = build_gaussian_operator(4, 3, seed=9)
        with tempfile.TemporaryDirectory() as tmp:
            ruta = write_operator(op, Path(tmp) / "omega.txt")
            self.assertTrue(ruta.read_text().startswith("4 3 gaussian 9\n"))
            leido = read_operator(ruta)
        np.testing.assert_array_equal(leido.matrix, op.matrix)

    def test_dif2d_solo_encabezado(self):
        op = build_dif2d(3)
        with tempfile.TemporaryDirectory() as tmp:
            ruta = write_operator(op, Path(tmp) / "omega.txt")
            self.assertEqual(ruta.read_text(), "18 9 dif2d -\n")
            leido = read_operator(ruta)
        np.testing.assert_array_equal(leido.matrix, op.matrix)


class SeedTests(SimpleTestCase):

    def test_derivacion_determinista_y_distinta(self):
        self.assertEqual(derive_seed(1, 2, 3), derive_seed(1, 2, 3))
        self.assertNotEqual(derive_seed(1, 2, 3), derive_seed(1, 3, 2))
