import json
import math
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.db import DatabaseError
from django.test import TestCase, override_settings
from scipy.stats import norm

from config.error_handlers import UsageError
from packing_lab.montecarlo import MonteCarloCheck
from .models import RunManifest
from .runner import Command, resolve_config, run
from .verification import Lemma, bayes_success_upper_bound, format_check, mc_verify


def cosparse(*args):
    salida = StringIO()
    call_command("cosparse", *[str(a) for a in args], stdout=salida)
    return salida.getvalue()


class TemporaryOutputMixin:

    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()

    def escribir_config(self, contenido, nombre="corrida.env"):
        ruta = self.tmp / nombre
        ruta.write_text(contenido)
        return ruta


class BoundsCommandTests(TemporaryOutputMixin, TestCase):

    def test_cota_gaussiana(self):
        salida = cosparse(
            "bounds", "eval", "--model", "gaussian", "--d", 200, "--p", 400, "--m", 20,
            "--sigma", 0.01, "--output-dir", self.tmp,
        )
        esperado = 0.01 / 64 * 3 ** (-1 / 40) * math.exp(199 * (1 - 198 / 400) / 160)
        self.assertEqual(salida.splitlines()[0], f"{esperado:.6g}")

    def test_cota_de_variacion_total(self):
        salida = cosparse("bounds", "eval", "--model", "dif2d", "--d", 64, "--m", 1, "--output-dir", self.tmp)
        self.assertEqual(salida.splitlines()[0], f"{math.e / 64:.6g}")

    def test_hipotesis_violada_sale_con_uno(self):
        with self.assertRaises(CommandError) as contexto:
            cosparse("bounds", "eval", "--model", "dif2d", "--d", 50, "--m", 1, "--output-dir", self.tmp)
        self.assertEqual(contexto.exception.returncode, 1)
        manifiesto = json.loads((self.tmp / "manifest.json").read_text())
        self.assertEqual(manifiesto["exit_code"], 1)
        self.assertIn("cuadrado", manifiesto["diagnostic"])

    def test_manifiesto_identico_al_repetir(self):
        argumentos = ("bounds", "eval", "--model", "dif2d", "--d", 144, "--m", 4, "--seed", 3,
                      "--output-dir", self.tmp)
        cosparse(*argumentos)
        primero = (self.tmp / "manifest.json").read_bytes()
        cosparse(*argumentos)
        self.assertEqual(primero, (self.tmp / "manifest.json").read_bytes())
        self.assertEqual(RunManifest.objects.filter(command="bounds").count(), 2)


class PackCommandTests(TemporaryOutputMixin, TestCase):

    def test_empaquetamiento_dif2d(self):
        salida = cosparse("pack", "--model", "dif2d", "--n", 12, "--count", 10, "--delta", 0.5,
                          "--output-dir", self.tmp)
        self.assertIn("certificado", salida)
        self.assertTrue((self.tmp / "packing.txt").exists())
        manifiesto = json.loads((self.tmp / "manifest.json").read_text())
        self.assertEqual(manifiesto["artifacts"], ["packing.txt"])
        self.assertEqual(manifiesto["parameters"]["count"], 10)
        registro = RunManifest.objects.get()
        self.assertTrue(registro.succeeded)
        self.assertEqual(registro.command, "pack")

    def test_verificacion(self):
        cosparse("pack", "--n", 9, "--count", 4, "--output-dir", self.tmp / "pack")
        archivo = self.tmp / "pack" / "packing.txt"
        salida = cosparse("verify-pack", "--packing", archivo, "--output-dir", self.tmp / "ok")
        self.assertIn("CERTIFICADO", salida)
        with self.assertRaises(CommandError) as contexto:
            cosparse("verify-pack", "--packing", archivo, "--delta", 5, "--output-dir", self.tmp / "falla")
        self.assertEqual(contexto.exception.returncode, 1)


class PipelineCommandTests(TemporaryOutputMixin, TestCase):

    def test_imagen_medicion_y_recuperacion(self):
        cosparse("gen-operator", "--model", "dif2d", "--n", 6, "--output-dir", self.tmp / "op")
        cosparse("gen-signal", "--model", "random-walk", "--n", 6, "--output-dir", self.tmp / "sig")
        self.assertTrue((self.tmp / "sig" / "signal.png").exists())
        cosparse("measure", "--signal", self.tmp / "sig" / "signal.txt", "--m", 30,
                 "--output-dir", self.tmp / "med")
        salida = cosparse(
            "solve", "--instance", self.tmp / "med" / "instance.txt",
            "--operator", self.tmp / "op" / "operator.txt", "--l1-max-iter", 500,
            "--output-dir", self.tmp / "sol",
        )
        self.assertIn("error_relativo", salida)
        self.assertTrue((self.tmp / "sol" / "solution.txt").exists())

    def test_recuperacion_l0_de_k1(self):
        cosparse("gen-signal", "--model", "gaussian-k1", "--d", 8, "--p", 12, "--output-dir", self.tmp / "sig")
        cosparse("measure", "--signal", self.tmp / "sig" / "signal.txt", "--m", 2,
                 "--output-dir", self.tmp / "med")
        cosparse(
            "solve", "--solver", "l0", "--instance", self.tmp / "med" / "instance.txt",
            "--operator", self.tmp / "sig" / "operator.txt", "--output-dir", self.tmp / "sol",
        )
        lineas = (self.tmp / "sol" / "solution.txt").read_text().splitlines()
        self.assertTrue(lineas[0].startswith("8 l0 1"))


class PhaseCommandTests(TemporaryOutputMixin, TestCase):

    def test_malla_pequena_determinista(self):
        argumentos = ("phase", "--model", "gaussian", "--d", 10, "--rho", "1,2", "--delta", "0.5,1",
                      "--trials", 2, "--sigma", 0, "--l1-max-iter", 200)
        cosparse(*argumentos, "--output-dir", self.tmp / "a")
        cosparse(*argumentos, "--output-dir", self.tmp / "b", "--jobs", 2)
        for nombre in ("phase.csv", "phase.svg", "curves.svg"):
            self.assertTrue((self.tmp / "a" / nombre).exists())
        self.assertEqual(
            (self.tmp / "a" / "phase.csv").read_bytes(), (self.tmp / "b" / "phase.csv").read_bytes()
        )


class McVerifyCommandTests(TemporaryOutputMixin, TestCase):

    def test_dos_puntos(self):
        salida = cosparse("mc-verify", "--lemma", "L7-bayes", "--trials", 100_000, "--output-dir", self.tmp)
        self.assertIn("L7-bayes", salida)
        self.assertIn("PASS", salida)

    def test_distancia_proyectada(self):
        check = mc_verify(Lemma.L6_DISTANCE, {"n": 12, "count": 10, "m": 4}, trials=5, seed=0)
        self.assertAlmostEqual(check.bound, 4 / 10**0.25, places=12)
        self.assertTrue(check.passed)

    def test_ley_de_dos_puntos_en_ambos_sentidos(self):
        for ratio in (0.1, 0.5, 1.0, 2.0):
            check = mc_verify(Lemma.L7_BAYES, {"ratio": ratio}, trials=100_000, seed=1)
            self.assertAlmostEqual(check.reference, norm.cdf(ratio), places=12)
            self.assertTrue(check.matches_reference)
            self.assertTrue(check.passed)

    def test_cota_cerrada_independiente_de_la_ley(self):
        self.assertEqual(bayes_success_upper_bound(0.5), 0.75)
        self.assertAlmostEqual(bayes_success_upper_bound(1.0), 0.5 + 1 / math.sqrt(2 * math.pi), places=12)
        self.assertEqual(bayes_success_upper_bound(3.0), 1.0)
        for ratio in np.linspace(0.01, 4.0, 50):
            self.assertGreaterEqual(bayes_success_upper_bound(ratio), norm.cdf(ratio))

    def test_desvio_de_la_ley_falla(self):
        check = MonteCarloCheck(
            name="L7-bayes", empirical=0.60, bound=0.75, trials=100_000, stderr=0.0015,
            slack=3.0, reference=0.6915, reference_tol=0.01,
        )
        self.assertTrue(check.within_bound)
        self.assertFalse(check.passed)
        self.assertIn("FAIL", format_check(check))

    def test_etiqueta_desconocida(self):
        with self.assertRaises(UsageError):
            mc_verify("L9-desconocida")


class ConfigResolutionTests(TemporaryOutputMixin, TestCase):

    def test_bandera_gana_al_archivo(self):
        ruta = self.escribir_config("d=20\ntrials=7\nseed=11\n")
        cfg = resolve_config("phase", {"d": 30}, config_path=ruta, output_dir=self.tmp)
        self.assertEqual(cfg.parameters["d"], 30)
        self.assertEqual(cfg.parameters["trials"], 7)
        self.assertEqual(cfg.master_seed, 11)

    def test_listas_separadas_por_comas(self):
        ruta = self.escribir_config("rho=1, 2.5\ndelta=0.1,0.2\n")
        cfg = resolve_config("phase", config_path=ruta, output_dir=self.tmp)
        self.assertEqual(cfg.parameters["rho"], (1.0, 2.5))
        self.assertEqual(cfg.parameters["delta"], (0.1, 0.2))

    @override_settings(COSPARSE_SEED=17, COSPARSE_L1_MAX_ITER=321)
    def test_valores_del_entorno(self):
        cfg = resolve_config(Command.PHASE, output_dir=self.tmp)
        self.assertEqual(cfg.master_seed, 17)
        self.assertEqual(cfg.parameters["l1.max_iter"], 321)

    def test_escala_completa(self):
        cfg = resolve_config("phase", full_scale=True, output_dir=self.tmp)
        self.assertEqual((cfg.parameters["d"], cfg.parameters["trials"]), (200, 500))
        cfg = resolve_config("phase", {"d": 40}, full_scale=True, output_dir=self.tmp)
        self.assertEqual(cfg.parameters["d"], 40)

    def test_bandera_de_escala_completa(self):
        for bandera in ("--paper-scale", "--full-scale"):
            salida = self.tmp / bandera.strip("-")
            cosparse("bounds", "eval", "--model", "dif2d", "--d", 64, "--m", 1, bandera, "--output-dir", salida)
            manifiesto = json.loads((salida / "manifest.json").read_text())
            self.assertTrue(manifiesto["full_scale"])

    def test_clave_desconocida_es_error_de_uso(self):
        ruta = self.escribir_config("sigma=0.1\nvelocidad=3\n")
        with self.assertRaises(CommandError) as contexto:
            cosparse("phase", "--config", ruta, "--output-dir", self.tmp)
        self.assertEqual(contexto.exception.returncode, 2)

    def test_parametro_obligatorio(self):
        with self.assertRaises(CommandError) as contexto:
            cosparse("measure", "--m", 3, "--output-dir", self.tmp)
        self.assertEqual(contexto.exception.returncode, 2)

    def test_valor_invalido(self):
        with self.assertRaises(UsageError):
            resolve_config("phase", {"trials": "muchos"}, output_dir=self.tmp)


class ManifestPersistenceTests(TemporaryOutputMixin, TestCase):

    def test_falla_de_base_de_datos_solo_advierte(self):
        cfg = resolve_config("bounds", {"model": "dif2d", "d": 64, "m": 2}, output_dir=self.tmp)
        with mock.patch.object(RunManifest.objects, "create", side_effect=DatabaseError("sin tabla")):
            with self.assertLogs("cli.runner", level="WARNING"):
                outcome = run(cfg)
        self.assertEqual(outcome.exit_code, 0)
        self.assertTrue(outcome.manifest_path.exists())
        self.assertEqual(RunManifest.objects.count(), 0)

    def test_manifiesto_sin_marcas_de_tiempo(self):
        cfg = resolve_config("bounds", {"model": "dif2d", "d": 64, "m": 2}, output_dir=self.tmp)
        datos = json.loads(run(cfg).manifest_path.read_text())
        self.assertEqual(
            sorted(datos),
            ["artifacts", "command", "diagnostic", "exit_code", "full_scale", "master_seed",
             "output_dir", "parameters", "version"],
        )
        self.assertEqual(datos["parameters"]["action"], "eval")
