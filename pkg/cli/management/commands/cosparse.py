import argparse

from django.core.management.base import BaseCommand, CommandError

from config.error_handlers import CosparseError, handle_command_error
from cli.runner import PARAMETERS, Command as RunCommand, resolve_config, run


def _flag(clave):
    return "--" + clave.replace(".", "-").replace("_", "-")


def _argument_type(param):
    if param.cast in (int, float):
        return param.cast
    return str


class Command(BaseCommand):
    help = "Modelo co-disperso de análisis: operadores, señales, solucionadores, empaquetamientos y cotas"

    def add_arguments(self, parser):
        comunes = argparse.ArgumentParser(add_help=False)
        comunes.add_argument("--config", help="archivo clave=valor con parámetros de la corrida")
        comunes.add_argument("--seed", type=int, help="semilla maestra (por defecto COSPARSE_SEED)")
        comunes.add_argument("--output-dir", dest="output_dir", help="directorio de salida")
        comunes.add_argument("--jobs", type=int, help="procesos para las mallas de fase")
        comunes.add_argument(
            "--paper-scale",
            "--full-scale",
            dest="full_scale",
            action="store_true",
            help="usa la escala completa de los experimentos (d=200, 500 ensayos)",
        )

        subcomandos = parser.add_subparsers(dest="subcommand", required=True)
        for comando, tabla in PARAMETERS.items():
            sub = subcomandos.add_parser(comando.value, parents=[comunes])
            for clave, param in tabla.items():
                if comando is RunCommand.BOUNDS and clave == "action":
                    sub.add_argument("action", nargs="?", choices=param.choices)
                    continue
                sub.add_argument(
                    _flag(clave),
                    dest=clave,
                    type=_argument_type(param),
                    choices=param.choices or None,
                    help=param.help or None,
                )

    def handle(self, *args, **options):
        comando = RunCommand(options["subcommand"])
        flags = {clave: options.get(clave) for clave in PARAMETERS[comando]}
        try:
            cfg = resolve_config(
                comando,
                flags,
                config_path=options.get("config"),
                seed=options.get("seed"),
                output_dir=options.get("output_dir"),
                jobs=options.get("jobs"),
                full_scale=options.get("full_scale", False),
            )
        except CosparseError as exc:
            raise handle_command_error(exc) from exc

        outcome = run(cfg, write=self.stdout.write)
        if outcome.exit_code:
            raise CommandError(outcome.diagnostic, returncode=outcome.exit_code)
        self.stdout.write(self.style.SUCCESS(f"Manifiesto escrito en {outcome.manifest_path}"))
