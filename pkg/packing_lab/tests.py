import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from analysis_ops.operators import build_gaussian_operator, connected_components
from config.error_handlers import InvalidArgumentError, PackingFailureError
from .montecarlo import (
    dif2d_collision_mc,
    gaussian_collision_mc,
    gaussian_pair_geometry,
    hamming_sampled_points,
    overlap_tail_mc,
    projected_min_distance_mc,
)
from .packings import (
    Packing,
    construct_random_packing,
    dif2d_sampler,
    estimate_collision_probability,
    gaussian_sampler,
    metric_dimension_estimate,
    min_distance_bound,
    read_packing,
    sample_packing_point_dif2d,
    uniform_sphere_sampler,
    verify_packing,
    write_packing,
)


def antipodal_sampler(seed):
    return np.array([1.0, 0.0]) if seed % 2 == 0 else np.array([-1.0, 0.0])


class VerifyPackingTests(SimpleTestCase):

    def test_par_ortonormal(self):
        certificado, minima = verify_packing(np.eye(2), 1.4)
        self.assertTrue(certificado)
        self.assertAlmostEqual(minima, math.sqrt(2), places=15)

    def test_punto_duplicado(self):
        self.assertEqual(verify_packing(np.array([[0.5, 0.1], [0.5, 0.1]]), 0.1), (False, 0.0))

    def test_frontera_exacta_certifica(self):
        certificado, _ = verify_packing(np.array([[0.0, 0.0], [0.5, 0.0]]), 0.5)
        self.assertTrue(certificado)

    def test_un_solo_punto(self):
        with self.assertRaises(InvalidArgumentError):
            verify_packing(np.ones((1, 3)), 0.1)

    def test_arbol_coincide_con_busqueda_exhaustiva(self):
        puntos = np.random.default_rng(0).uniform(-1, 1, size=(2500, 3))
        _, minima = verify_packing(puntos, 0.0)
        diferencias = puntos[:, None, :] - puntos[None, :, :]
        distancias = np.sqrt(np.sum(diferencias**2, axis=2))
        np.fill_diagonal(distancias, np.inf)
        self.assertAlmostEqual(minima, distancias.min(), places=12)


class ConstructRandomPackingTests(SimpleTestCase):

    def test_par_antipodal(self):
        # cada lote coincide con probabilidad 1/2
        packing = construct_random_packing(antipodal_sampler, 1.0, 2, max_restarts=20, seed=0)
        self.assertTrue(packing.certified)

    def test_empaquetamiento_dif2d_de_diez_puntos(self):
        self.assertGreaterEqual(10, math.exp(144 / 64))
        exitos = 0
        for seed in range(10):
            try:
                packing = construct_random_packing(dif2d_sampler(12), 0.5, 10, max_restarts=3, seed=seed)
            except PackingFailureError:
                continue
            exitos += 1
            self.assertEqual(verify_packing(packing.points, 0.5), (True, packing.min_distance))
            for punto in packing.points:
                self.assertEqual(connected_components(punto.reshape(12, 12)), 2)
        self.assertGreaterEqual(exitos, 8)

    def test_empaquetamiento_gaussiano(self):
        d, p = 30, 90
        count = math.floor(3 ** -0.5 * math.exp((29 / 8) * (1 - 28 / 90)))
        op = build_gaussian_operator(p, d, seed=4)
        exitos = 0
        for seed in range(20):
            try:
                construct_random_packing(gaussian_sampler(op), 0.5, count, max_restarts=0, seed=seed)
                exitos += 1
            except PackingFailureError:
                pass
        self.assertGreaterEqual(exitos, 18)

    def test_falla_con_la_mejor_distancia(self):
        with self.assertRaises(PackingFailureError) as contexto:
            construct_random_packing(uniform_sphere_sampler(1), 3.0, 3, max_restarts=2, seed=0)
        self.assertLessEqual(contexto.exception.best_min_distance, 2.0)

    def test_consistencia_con_la_probabilidad_de_colision(self):
        sampler = uniform_sphere_sampler(6)
        eta = estimate_collision_probability(sampler, 0.5, pairs=4000, seed=1)
        count = max(2, int(eta ** -0.5 / 2))
        exitos = 0
        for seed in range(40):
            try:
                construct_random_packing(sampler, 0.5, count, max_restarts=3, seed=seed)
                exitos += 1
            except PackingFailureError:
                pass
        self.assertGreaterEqual(exitos, 38)

    def test_limites(self):
        with self.assertRaises(InvalidArgumentError):
            construct_random_packing(antipodal_sampler, 1.0, 1)


class SamplerTests(SimpleTestCase):

    def test_punto_dif2d_en_la_esfera(self):
        x = sample_packing_point_dif2d(12, seed=3)
        self.assertAlmostEqual(np.linalg.norm(x), 1.0, places=12)

    def test_ley_binomial_de_distancias(self):
        muestras = np.array([
            144 * np.sum((sample_packing_point_dif2d(12, 2 * k) - sample_packing_point_dif2d(12, 2 * k + 1)) ** 2)
            for k in range(2000)
        ])
        hamming = np.round(muestras / 4)
        np.testing.assert_allclose(muestras, 4 * hamming, atol=1e-9)
        # Binomial(40, 1/2): media 20, varianza 10
        self.assertAlmostEqual(hamming.mean(), 20.0, delta=4 * math.sqrt(10 / 2000))

    def test_distancia_tipo_esfera_segun_solapamiento(self):
        d = 10
        solapamientos, productos = gaussian_pair_geometry(d, 20, pairs=3000, seed=5)
        valores, cuentas = np.unique(solapamientos, return_counts=True)
        k = int(valores[np.argmax(cuentas)])
        grupo = productos[solapamientos == k]
        error_estandar = grupo.std(ddof=1) / math.sqrt(grupo.size)
        self.assertLess(abs(grupo.mean() - 1 / (d - k)), 4 * error_estandar)


class MonteCarloBoundTests(SimpleTestCase):

    def test_colision_dif2d(self):
        check = dif2d_collision_mc(12, pairs=100_000, seed=0)
        self.assertAlmostEqual(check.bound, math.exp(-5), places=12)
        self.assertTrue(check.passed)

    def test_cola_del_solapamiento(self):
        check = overlap_tail_mc(20, 60, pairs=10_000, seed=0)
        self.assertAlmostEqual(check.bound, math.exp(-19 * 42 / 120), places=12)
        self.assertTrue(check.passed)

    def test_repeticion_identica(self):
        self.assertEqual(overlap_tail_mc(20, 60, pairs=2000, seed=4), overlap_tail_mc(20, 60, pairs=2000, seed=4))
        self.assertEqual(dif2d_collision_mc(9, pairs=2000, seed=4), dif2d_collision_mc(9, pairs=2000, seed=4))

    def test_colision_gaussiana(self):
        check = gaussian_collision_mc(20, 60, pairs=10_000, seed=0)
        self.assertAlmostEqual(check.bound, 3 * math.exp(-19 * 42 / 240), places=12)
        self.assertTrue(check.passed)

    def test_contraccion_de_distancias(self):
        packing = construct_random_packing(dif2d_sampler(12), 0.5, 10, max_restarts=5, seed=0)
        check = projected_min_distance_mc(packing.points, m=4, trials=50, seed=1)
        self.assertAlmostEqual(check.bound, 4 / 10**0.25, places=12)
        self.assertTrue(check.passed)

    def test_contraccion_con_diez_mil_puntos(self):
        puntos = hamming_sampled_points(12, 10_000, seed=2)
        check = projected_min_distance_mc(puntos, m=4, trials=3, seed=3)
        self.assertAlmostEqual(check.bound, 0.4, places=12)
        self.assertTrue(check.passed)


class BoundAndDimensionTests(SimpleTestCase):

    def test_cota_de_distancia_minima(self):
        self.assertEqual(min_distance_bound(1, 3), 4.0)
        self.assertAlmostEqual(min_distance_bound(10, 4), 2.2493653, places=6)

    def test_dimension_metrica(self):
        packing = Packing(points=np.eye(10), delta=0.5, certified=True, min_distance=math.sqrt(2))
        self.assertAlmostEqual(metric_dimension_estimate(packing), math.log(10))

    def test_dimension_metrica_requiere_delta_un_medio(self):
        packing = Packing(points=np.eye(3), delta=0.4, certified=True, min_distance=math.sqrt(2))
        with self.assertRaises(InvalidArgumentError):
            metric_dimension_estimate(packing)

    def test_dimension_metrica_dif2d(self):
        packing = construct_random_packing(dif2d_sampler(12), 0.5, 10, max_restarts=5, seed=3)
        self.assertGreaterEqual(metric_dimension_estimate(packing), 144 / 64)

    def test_dimension_crece_con_el_subespacio(self):
        estimaciones = []
        for q in (2, 4, 8):
            sampler = uniform_sphere_sampler(q)
            eta = estimate_collision_probability(sampler, 0.5, pairs=20_000, seed=q)
            count = max(2, int(eta ** -0.5))
            packing = construct_random_packing(sampler, 0.5, count, max_restarts=10, seed=q)
            estimaciones.append(metric_dimension_estimate(packing))
        self.assertLess(estimaciones[0], estimaciones[1])
        self.assertLess(estimaciones[1], estimaciones[2])


class PackingFileTests(SimpleTestCase):

    def test_escritura_y_lectura(self):
        packing = construct_random_packing(dif2d_sampler(9), 0.5, 4, max_restarts=10, seed=0)
        with tempfile.TemporaryDirectory() as tmp:
            ruta = write_packing(packing, Path(tmp) / "pack.txt")
            self.assertTrue(ruta.read_text().startswith("4 81 0.5 1\n"))
            leido = read_packing(ruta)
        np.testing.assert_array_equal(leido.points, packing.points)
        self.assertTrue(leido.certified)
