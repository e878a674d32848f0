"""
Corridas reproducibles de la línea de comandos.

Cada parámetro se resuelve en este orden: bandera, archivo de configuración
(texto plano clave=valor), entorno o settings del proyecto, valor por
defecto. Toda corrida escribe `manifest.json` en su directorio de salida.
"""
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from decouple import Csv, RepositoryEnv, strtobool
from django.conf import settings
from django.db import DatabaseError

from analysis_ops.operators import build_dif2d, build_gaussian_operator, read_operator, write_operator
from analysis_ops.seeds import derive_seed
from bounds.minimax import CONSTANTS_NOTE, BoundQuery, evaluate
from config import __version__
from config.error_handlers import (
    CosparseError,
    InvalidArgumentError,
    PackingFailureError,
    UsageError,
    exit_code_for,
)
from experiments.export import export_csv, render_error_curves, render_heatmap, success_rate_gap
from experiments.grids import phase_grid_dif, phase_grid_gaussian, pilot_cosparsity_bins
from packing_lab.packings import (
    construct_random_packing,
    dif2d_sampler,
    gaussian_sampler,
    metric_dimension_estimate,
    read_packing,
    verify_packing,
    write_packing,
)
from sensing.measurements import make_instance, read_instance, top_singular_value, write_instance
from signal_gen.signals import (
    gen_gaussian_kb,
    gen_packing_pattern,
    gen_randomwalk_image,
    packing_free_cells,
    random_signs,
    read_signal,
    save_image_png,
    write_signal,
)
from solvers.recovery import L0Options, L1Options, solve_analysis_l0, solve_analysis_l1
from .verification import Lemma, format_check, mc_verify

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class Command(str, Enum):
    GEN_OPERATOR = "gen-operator"
    GEN_SIGNAL = "gen-signal"
    MEASURE = "measure"
    SOLVE = "solve"
    PACK = "pack"
    VERIFY_PACK = "verify-pack"
    BOUNDS = "bounds"
    PHASE = "phase"
    MC_VERIFY = "mc-verify"


def _bool(value):
    return value if isinstance(value, bool) else bool(strtobool(str(value)))


def _float_list(value):
    if isinstance(value, str):
        return tuple(Csv(cast=float)(value))
    return tuple(float(v) for v in value)


@dataclass(frozen=True)
class Param:
    cast: object
    default: object = None
    choices: tuple = ()
    required: bool = False
    help: str = ""

    def resolve_default(self):
        return self.default() if callable(self.default) else self.default


def _setting(nombre):
    return lambda: getattr(settings, nombre)


_L1_PARAMS = {
    "l1.tol": Param(float, _setting("COSPARSE_L1_TOL"), help="tolerancia de los residuos"),
    "l1.max_iter": Param(int, _setting("COSPARSE_L1_MAX_ITER"), help="tope de iteraciones"),
    "l1.rho": Param(float, _setting("COSPARSE_L1_RHO"), help="parámetro de penalización"),
    "l1.feasibility_tol": Param(float, 1e-6, help="holgura sobre el radio √m·σ"),
    "l1.balancing": Param(_bool, False, help="balanceo de residuos"),
}

PARAMETERS = {
    Command.GEN_OPERATOR: {
        "model": Param(str, "dif2d", ("dif2d", "gaussian")),
        "n": Param(int, 12, help="lado de la imagen (dif2d)"),
        "d": Param(int, 50),
        "p": Param(int, 100),
        "operator_seed": Param(int),
    },
    Command.GEN_SIGNAL: {
        "model": Param(str, "random-walk", ("gaussian-k1", "gaussian-kb", "random-walk", "packing-pattern")),
        "n": Param(int, 12),
        "d": Param(int, 50),
        "p": Param(int, 100),
        "b": Param(int, 2, help="dimensión del subespacio (gaussian-kb)"),
        "operator": Param(str, help="archivo de operador gaussiano"),
        "operator_seed": Param(int),
        "signal_seed": Param(int),
    },
    Command.MEASURE: {
        "signal": Param(str, required=True, help="archivo de señal"),
        "m": Param(int, required=True),
        "sigma": Param(float, 0.0),
        "normalization": Param(str, "unit-columns", ("unit-columns", "op-norm")),
        "matrix_seed": Param(int),
        "noise_seed": Param(int),
    },
    Command.SOLVE: {
        "instance": Param(str, required=True, help="archivo de instancia"),
        "operator": Param(str, required=True, help="archivo de operador"),
        "solver": Param(str, "l1", ("l1", "l0")),
        **_L1_PARAMS,
        "l0.b_max": Param(int, _setting("COSPARSE_L0_B_MAX"), help="dimensión máxima del subespacio"),
    },
    Command.PACK: {
        "model": Param(str, "dif2d", ("dif2d", "gaussian")),
        "n": Param(int, 12),
        "d": Param(int, 30),
        "p": Param(int, 90),
        "operator_seed": Param(int),
        "count": Param(int, 10),
        "delta": Param(float, 0.5),
        "max_restarts": Param(int, 10),
    },
    Command.VERIFY_PACK: {
        "packing": Param(str, required=True, help="archivo de empaquetamiento"),
        "delta": Param(float, help="por defecto el del archivo"),
    },
    Command.BOUNDS: {
        "action": Param(str, "eval", ("eval",)),
        "model": Param(str, required=True, choices=("dif2d", "gaussian")),
        "d": Param(int, required=True),
        "m": Param(int, required=True),
        "p": Param(int),
        "sigma": Param(float, 1.0),
    },
    Command.PHASE: {
        "model": Param(str, "gaussian", ("gaussian", "dif2d")),
        "d": Param(int, 50),
        "n": Param(int, 12),
        "rho": Param(_float_list, "1,1.5,2,2.5,3", help="lista de ρ separada por comas"),
        "delta": Param(_float_list, "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9", help="lista de δ separada por comas"),
        "sigma": Param(float, 0.0),
        "trials": Param(int, 50),
        "bins": Param(int, 5, help="bins de cosparsidad (dif2d)"),
        "pilot_size": Param(int, 1000),
        "generation_budget": Param(int),
        **_L1_PARAMS,
    },
    Command.MC_VERIFY: {
        "lemma": Param(str, required=True, choices=tuple(l.value for l in Lemma)),
        "trials": Param(int),
        "n": Param(int),
        "d": Param(int),
        "p": Param(int),
        "m": Param(int),
        "count": Param(int),
        "ratio": Param(float),
    },
}

# claves válidas en cualquier archivo de configuración
GLOBAL_KEYS = {"seed", "output_dir", "jobs"}

FULL_SCALE = {
    Command.PHASE: {"d": 200, "trials": 500},
}


@dataclass(frozen=True)
class RunConfig:
    command: Command
    parameters: dict
    master_seed: int
    output_dir: Path
    jobs: int = 1
    full_scale: bool = False

    def seed_for(self, nombre, proposito):
        """Semilla explícita del parámetro o una derivada de la semilla maestra"""
        valor = self.parameters.get(nombre)
        return int(valor) if valor is not None else derive_seed(self.master_seed, proposito)


@dataclass
class RunOutcome:
    exit_code: int
    diagnostic: str = ""
    artifacts: list = field(default_factory=list)
    manifest_path: Path | None = None


def parse_command(nombre):
    try:
        return Command(nombre)
    except ValueError:
        raise UsageError(f"comando desconocido: {nombre!r}") from None


def read_config_file(path):
    """Pares clave=valor del archivo; las líneas `#` son comentarios"""
    try:
        return dict(RepositoryEnv(str(path)).data)
    except OSError as exc:
        raise UsageError(f"no se pudo leer el archivo de configuración {path}: {exc}") from exc


def _cast(param, clave, valor):
    try:
        valor = param.cast(valor)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"valor inválido para {clave}: {valor!r}") from exc
    if param.choices and valor not in param.choices:
        raise UsageError(f"{clave} debe ser uno de {', '.join(param.choices)}; se recibió {valor!r}")
    return valor


def resolve_config(command, flags=None, config_path=None, seed=None, output_dir=None, jobs=None,
                   full_scale=False):
    command = parse_command(command) if not isinstance(command, Command) else command
    tabla = PARAMETERS[command]
    flags = {k: v for k, v in (flags or {}).items() if v is not None}
    archivo = read_config_file(config_path) if config_path else {}

    desconocidas = sorted(set(flags) - set(tabla)) + sorted(set(archivo) - set(tabla) - GLOBAL_KEYS)
    if desconocidas:
        raise UsageError(f"claves desconocidas para {command.value}: {', '.join(desconocidas)}")

    escala = FULL_SCALE.get(command, {}) if full_scale else {}
    parametros = {}
    for clave, param in tabla.items():
        if clave in flags:
            valor = flags[clave]
        elif clave in archivo:
            valor = archivo[clave]
        elif clave in escala:
            valor = escala[clave]
        else:
            valor = param.resolve_default()
        if valor is None:
            if param.required:
                raise UsageError(f"falta el parámetro obligatorio {clave} para {command.value}")
            parametros[clave] = None
            continue
        parametros[clave] = _cast(param, clave, valor)

    def _global(valor, clave, cast, defecto):
        if valor is not None:
            return cast(valor)
        if clave in archivo:
            return _cast(Param(cast), clave, archivo[clave])
        return cast(defecto)

    master_seed = _global(seed, "seed", int, settings.COSPARSE_SEED)
    if master_seed < 0:
        raise UsageError(f"la semilla maestra debe ser no negativa: {master_seed}")
    return RunConfig(
        command=command,
        parameters=parametros,
        master_seed=master_seed,
        output_dir=_global(output_dir, "output_dir", Path, Path(settings.COSPARSE_OUTPUT_DIR) / command.value),
        jobs=max(1, _global(jobs, "jobs", int, settings.COSPARSE_JOBS)),
        full_scale=bool(full_scale),
    )


def _l1_options(p):
    return L1Options(
        tol=p["l1.tol"],
        max_iter=p["l1.max_iter"],
        rho=p["l1.rho"],
        feasibility_tol=p["l1.feasibility_tol"],
        residual_balancing=p["l1.balancing"],
    )


def _gen_operator(cfg, write):
    p = cfg.parameters
    if p["model"] == "dif2d":
        op = build_dif2d(p["n"])
    else:
        op = build_gaussian_operator(p["p"], p["d"], cfg.seed_for("operator_seed", 0))
    ruta = write_operator(op, cfg.output_dir / "operator.txt")
    write(f"Operador {op}: p={op.p}, d={op.d}")
    return [ruta]


def _gen_signal(cfg, write):
    p = cfg.parameters
    semilla = cfg.seed_for("signal_seed", 1)
    artefactos = []
    if p["model"] in ("gaussian-k1", "gaussian-kb"):
        if p["operator"]:
            op = read_operator(p["operator"])
        else:
            op = build_gaussian_operator(p["p"], p["d"], cfg.seed_for("operator_seed", 0))
            artefactos.append(write_operator(op, cfg.output_dir / "operator.txt"))
        signal = gen_gaussian_kb(op, 1 if p["model"] == "gaussian-k1" else p["b"], semilla)
    elif p["model"] == "random-walk":
        signal = gen_randomwalk_image(p["n"], semilla)
    else:
        signal = gen_packing_pattern(p["n"], random_signs(packing_free_cells(p["n"]), semilla))

    artefactos.append(write_signal(signal, cfg.output_dir / "signal.txt"))
    if p["model"] in ("random-walk", "packing-pattern"):
        artefactos.append(save_image_png(signal, cfg.output_dir / "signal.png"))
    write(f"Señal {signal.source.value}: d={signal.d}, b={signal.b}, cosparsidad={signal.cosupport.cosparsity}")
    return artefactos


def _measure(cfg, write):
    p = cfg.parameters
    signal = read_signal(p["signal"])
    instance = make_instance(
        signal.x,
        p["m"],
        p["sigma"],
        p["normalization"],
        cfg.seed_for("matrix_seed", 2),
        cfg.seed_for("noise_seed", 3),
    )
    ruta = write_instance(instance, cfg.output_dir / "instance.txt")
    write(f"Instancia m={instance.m}, d={instance.d}, ‖A‖={top_singular_value(instance.A):.6g}")
    return [ruta]


def _write_solution(report, path, solver):
    entradas = " ".join(f"{v:.17g}" for v in report.x_hat)
    path.write_text(
        f"{report.x_hat.shape[0]} {solver} {int(report.converged)} {report.iterations}\n{entradas}\n"
    )
    return path


def _solve(cfg, write):
    p = cfg.parameters
    instance = read_instance(p["instance"])
    op = read_operator(p["operator"])
    if p["solver"] == "l1":
        report = solve_analysis_l1(instance.A, op, instance.y, instance.sigma, _l1_options(p))
        if not report.converged:
            logger.warning("ℓ1 no convergió en %s iteraciones", report.iterations)
    else:
        report = solve_analysis_l0(instance.A, op, instance.y, opts=L0Options(b_max=p["l0.b_max"]))
    ruta = _write_solution(report, cfg.output_dir / "solution.txt", p["solver"])
    write(
        f"Objetivo={report.objective:.6g} residuo={report.residual:.3e} "
        f"iteraciones={report.iterations} convergió={report.converged} "
        f"error_relativo={report.relative_error(instance.x_true):.3e}"
    )
    return [ruta]


def _pack(cfg, write):
    p = cfg.parameters
    if p["model"] == "dif2d":
        sampler = dif2d_sampler(p["n"])
    else:
        sampler = gaussian_sampler(build_gaussian_operator(p["p"], p["d"], cfg.seed_for("operator_seed", 0)))
    packing = construct_random_packing(sampler, p["delta"], p["count"], p["max_restarts"], seed=cfg.master_seed)
    ruta = write_packing(packing, cfg.output_dir / "packing.txt")
    write(f"Empaquetamiento certificado: {packing.count} puntos, distancia mínima {packing.min_distance:.6g}")
    if packing.delta == 0.5:
        write(f"Dimensión métrica >= {metric_dimension_estimate(packing):.6g}")
    return [ruta]


def _verify_pack(cfg, write):
    p = cfg.parameters
    packing = read_packing(p["packing"])
    delta = packing.delta if p["delta"] is None else p["delta"]
    certificado, minima = verify_packing(packing.points, delta)
    if not certificado:
        raise PackingFailureError(
            f"NO CERTIFICADO: distancia mínima {minima:.6g} < delta={delta:g}", best_min_distance=minima
        )
    write(f"CERTIFICADO: distancia mínima {minima:.6g} >= delta={delta:g}")
    return []


def _bounds(cfg, write):
    p = cfg.parameters
    query = BoundQuery(d=p["d"], m=p["m"], sigma=p["sigma"], model=p["model"], p=p["p"])
    write(f"{evaluate(query):.6g}")
    write(CONSTANTS_NOTE)
    return []


def _phase(cfg, write):
    p = cfg.parameters
    opts = _l1_options(p)
    if p["model"] == "gaussian":
        result = phase_grid_gaussian(
            p["d"], p["rho"], p["delta"], p["sigma"], p["trials"], cfg.master_seed, opts, cfg.jobs
        )
    else:
        bins = pilot_cosparsity_bins(p["n"], p["bins"], p["pilot_size"], seed=derive_seed(cfg.master_seed, 4))
        result = phase_grid_dif(
            p["n"], bins, p["delta"], p["sigma"], p["trials"], cfg.master_seed, opts, cfg.jobs,
            generation_budget=p["generation_budget"],
        )
    artefactos = [
        export_csv(result, cfg.output_dir / "phase.csv"),
        render_heatmap(result, cfg.output_dir / "phase.svg"),
        render_error_curves(result, cfg.output_dir / "curves.svg"),
    ]
    vacias = sum(cell.empty for _, _, cell in result.iter_cells())
    write(f"Malla {len(result.y_axis)}x{len(result.x_axis)} ({vacias} celdas vacías)")
    if p["model"] == "dif2d" and len(result.y_axis) > 1:
        for j, delta in enumerate(result.x_axis):
            try:
                write(f"δ={delta:g}: éxito bin superior - bin inferior = {success_rate_gap(result, j):+.3f}")
            except InvalidArgumentError as exc:
                logger.warning("δ=%g: %s", delta, exc)
    return artefactos


def _mc_verify(cfg, write):
    p = cfg.parameters
    params = {k: v for k, v in p.items() if k not in ("lemma", "trials")}
    check = mc_verify(p["lemma"], params, p["trials"], seed=cfg.master_seed)
    write(format_check(check))
    if not check.passed:
        raise CosparseError(f"{check.name} no respeta la cota")
    return []


HANDLERS = {
    Command.GEN_OPERATOR: _gen_operator,
    Command.GEN_SIGNAL: _gen_signal,
    Command.MEASURE: _measure,
    Command.SOLVE: _solve,
    Command.PACK: _pack,
    Command.VERIFY_PACK: _verify_pack,
    Command.BOUNDS: _bounds,
    Command.PHASE: _phase,
    Command.MC_VERIFY: _mc_verify,
}


def _jsonable(valor):
    if isinstance(valor, (tuple, list)):
        return [_jsonable(v) for v in valor]
    if isinstance(valor, Path):
        return str(valor)
    return valor


def manifest_data(cfg, exit_code, diagnostic, artifacts):
    """Sin marcas de tiempo: la misma corrida produce el mismo manifiesto"""
    return {
        "command": cfg.command.value,
        "parameters": {k: _jsonable(v) for k, v in cfg.parameters.items()},
        "master_seed": cfg.master_seed,
        "output_dir": str(cfg.output_dir),
        "full_scale": cfg.full_scale,
        "version": __version__,
        "exit_code": exit_code,
        "diagnostic": diagnostic,
        "artifacts": sorted(Path(a).name for a in artifacts),
    }


def write_manifest(cfg, data):
    ruta = cfg.output_dir / MANIFEST_NAME
    ruta.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
    return ruta


def record_manifest(data):
    from .models import RunManifest

    try:
        return RunManifest.objects.create(
            command=data["command"],
            parameters=data["parameters"],
            master_seed=data["master_seed"],
            output_dir=data["output_dir"],
            version=data["version"],
            exit_code=data["exit_code"],
            diagnostic=data["diagnostic"],
            artifacts=data["artifacts"],
        )
    except DatabaseError as exc:
        logger.warning("El manifiesto no se guardó en la base de datos: %s", exc)
        return None


def run(cfg, write=None):
    """
    Ejecuta el comando y escribe el manifiesto. El código de salida es 0 si
    todo salió bien, 1 ante errores del dominio o de E/S y 2 ante errores de uso.
    """
    write = write or (lambda linea: None)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Corrida %s con semilla %s en %s", cfg.command.value, cfg.master_seed, cfg.output_dir)

    try:
        artifacts = HANDLERS[cfg.command](cfg, write)
        outcome = RunOutcome(exit_code=0, artifacts=artifacts)
    except (CosparseError, OSError) as exc:
        logger.error("La corrida %s falló: %s", cfg.command.value, exc)
        outcome = RunOutcome(exit_code=exit_code_for(exc), diagnostic=str(exc))

    data = manifest_data(cfg, outcome.exit_code, outcome.diagnostic, outcome.artifacts)
    outcome.manifest_path = write_manifest(cfg, data)
    record_manifest(data)
    return outcome
