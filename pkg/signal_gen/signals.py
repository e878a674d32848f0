"""
Familias de señales co-dispersas: señales K_b para Ω gaussiana, imágenes de
dos componentes generadas por caminata aleatoria y las imágenes de patrón fijo
con las que se construyen los empaquetamientos 2D-DIF.
"""
import functools
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image

from analysis_ops.operators import (
    Cosupport,
    OperatorKind,
    build_dif2d,
    connected_components,
    cosupport,
    image_side,
    subspace_basis,
)
from config.error_handlers import (
    DegenerateOperatorError,
    DimensionMismatchError,
    GenerationFailureError,
    InvalidArgumentError,
    InvalidDimensionError,
)

logger = logging.getLogger(__name__)


class SignalSource(str, Enum):
    GAUSSIAN_K1 = "gaussian-k1"
    GAUSSIAN_KB = "gaussian-kb"
    RANDOM_WALK_IMAGE = "random-walk-image"
    PACKING_PATTERN = "packing-pattern"


@dataclass(frozen=True, eq=False)
class CosparseSignal:
    """
    Señal x con su cosoporte medido y la dimensión b del subespacio al que
    pertenece. `rows` guarda Λ para las señales gaussianas.
    """
    x: np.ndarray
    cosupport: Cosupport | None
    b: int
    source: SignalSource
    rows: tuple | None = None

    @property
    def d(self):
        return self.x.shape[0]

    def image(self):
        n = image_side(self.d)
        return self.x.reshape(n, n)


@functools.lru_cache(maxsize=16)
def dif2d_operator(n):
    """Operador DIF2D compartido (inmutable) para un lado n"""
    return build_dif2d(n)


def gen_gaussian_kb(op, b, seed):
    """
    Elige Λ de tamaño d-b uniformemente sin reemplazo, toma el espacio nulo
    (de dimensión b) de Ω_Λ y devuelve un punto uniforme de la esfera unitaria
    dentro de ese subespacio.
    """
    if op.kind is not OperatorKind.GAUSSIAN:
        raise InvalidArgumentError(f"se requiere un operador gaussiano, se recibió {op.kind.value}")
    if b < 1 or b > op.d:
        raise InvalidDimensionError(f"b={b} fuera de rango para d={op.d}")
    if op.p < op.d - b:
        raise InvalidDimensionError(f"p={op.p} es menor que d-b={op.d - b}")

    rng = np.random.default_rng(int(seed))
    filas = np.sort(rng.choice(op.p, size=op.d - b, replace=False))
    base = subspace_basis(op, Cosupport.from_rows(filas, op.p))
    if base.dim != b:
        raise DegenerateOperatorError(
            f"el espacio nulo de Ω_Λ tiene dimensión {base.dim}, se esperaba {b}"
        )

    if b == 1:
        signo = rng.choice((-1.0, 1.0))
        x = signo * base.basis[:, 0]
    else:
        x = base.basis @ rng.standard_normal(b)
    x = x / np.linalg.norm(x)

    source = SignalSource.GAUSSIAN_K1 if b == 1 else SignalSource.GAUSSIAN_KB
    return CosparseSignal(
        x=x,
        cosupport=cosupport(op, x),
        b=b,
        source=source,
        rows=tuple(int(i) for i in filas),
    )


def gen_gaussian_k1(op, seed):
    """Señal unitaria de K_1: espacio nulo de d-1 filas de Ω escogidas al azar"""
    return gen_gaussian_kb(op, 1, seed)


_PASOS = ((0, 1), (0, -1), (1, 0), (-1, 0))


def _random_walk_image(n, rng):
    fondo = rng.uniform(0.0, 1.0)
    valor = rng.uniform(-1.0, 0.0)
    image = np.full((n, n), fondo)

    actual = (int(rng.integers(n)), int(rng.integers(n)))
    visitados = {actual}
    while True:
        di, dj = _PASOS[int(rng.integers(4))]
        siguiente = ((actual[0] + di) % n, (actual[1] + dj) % n)
        # la caminata termina al volver a un píxel ya visitado
        if siguiente in visitados:
            break
        visitados.add(siguiente)
        actual = siguiente

    for i, j in visitados:
        image[i, j] = valor
    return image


def gen_randomwalk_image(n, seed, max_retries=100):
    """
    Imagen de dos componentes: fondo uniforme en [0, 1] y una caminata
    aleatoria cíclica con un único valor en [-1, 0]. Las imágenes con más de
    dos componentes se descartan y se regeneran con semilla seed + intento.
    """
    if n < 3:
        raise InvalidDimensionError(f"n debe ser >= 3, se recibió {n}")
    if max_retries < 1:
        raise InvalidArgumentError(f"max_retries debe ser >= 1, se recibió {max_retries}")

    op = dif2d_operator(int(n))
    for intento in range(max_retries):
        rng = np.random.default_rng(int(seed) + intento)
        image = _random_walk_image(int(n), rng)
        componentes = connected_components(image)
        if componentes == 2:
            x = image.ravel()
            return CosparseSignal(
                x=x,
                cosupport=cosupport(op, x),
                b=2,
                source=SignalSource.RANDOM_WALK_IMAGE,
            )
        logger.debug("Imagen descartada (semilla %s): %s componentes", int(seed) + intento, componentes)

    raise GenerationFailureError(
        f"no se obtuvo una imagen de dos componentes en {max_retries} intentos (semilla {seed})"
    )


def packing_free_cells(n):
    """Número q = n(n-2)/3 de celdas libres del patrón"""
    return n * (n - 2) // 3


def gen_packing_pattern(n, signs):
    """
    Patrón de periodo 3 por filas con entradas ±1/n:
      fila ≡ 0 (mod 3): +1/n en columnas 0..n-2, -1/n en la última
      fila ≡ 2 (mod 3): +1/n en la columna 0, -1/n en 1..n-1
      fila ≡ 1 (mod 3): columna 0 en +1/n, última en -1/n y las columnas
                        1..n-2 toman signs[k]/n en orden
    La columna 0 es toda +1/n y la última toda -1/n; cada celda libre toca una
    celda fija de cada valor, así que siempre hay exactamente dos componentes.
    """
    signs = np.asarray(signs, dtype=float)
    q = packing_free_cells(n)
    if signs.shape != (q,):
        raise InvalidArgumentError(f"se esperaban q={q} signos, se recibieron {signs.shape}")

    x = packing_pattern_batch(n, signs[np.newaxis, :])[0]
    return CosparseSignal(
        x=x,
        cosupport=cosupport(dif2d_operator(n), x),
        b=2,
        source=SignalSource.PACKING_PATTERN,
    )


def packing_pattern_batch(n, signs):
    """Una imagen de patrón (vectorizada, forma k×d) por cada fila de `signs`"""
    if n < 6 or n % 3 != 0:
        raise InvalidArgumentError(f"n debe ser múltiplo de 3 y >= 6, se recibió {n}")
    signs = np.atleast_2d(np.asarray(signs, dtype=float))
    q = packing_free_cells(n)
    if signs.shape[1] != q:
        raise InvalidArgumentError(f"se esperaban q={q} signos por patrón, se recibieron {signs.shape[1]}")
    if not np.all(np.abs(signs) == 1.0):
        raise InvalidArgumentError("los signos deben ser ±1")

    images = np.empty((signs.shape[0], n, n))
    libres = signs.reshape(-1, n // 3, n - 2)
    for fila in range(n):
        resto = fila % 3
        if resto == 0:
            images[:, fila, :] = 1.0
            images[:, fila, -1] = -1.0
        elif resto == 2:
            images[:, fila, :] = -1.0
            images[:, fila, 0] = 1.0
        else:
            images[:, fila, 0] = 1.0
            images[:, fila, -1] = -1.0
            images[:, fila, 1:-1] = libres[:, fila // 3]
    return images.reshape(signs.shape[0], n * n) / n


def random_signs(q, seed):
    """Vector de q signos ±1 i.i.d. uniformes"""
    rng = np.random.default_rng(int(seed))
    return rng.choice((-1.0, 1.0), size=int(q))


def save_image_png(signal, path, scale=16):
    """
    Vista previa en escala de grises de una señal con forma de imagen;
    el mínimo se pinta negro y el máximo blanco.
    """
    image = signal.image() if isinstance(signal, CosparseSignal) else np.asarray(signal, dtype=float)
    bajo, alto = float(image.min()), float(image.max())
    rango = alto - bajo if alto > bajo else 1.0
    niveles = np.round(255 * (image - bajo) / rango).astype(np.uint8)
    lado = image.shape[0] * int(scale)
    Image.fromarray(niveles).resize((lado, lado), Image.Resampling.NEAREST).save(path, format="PNG")
    return Path(path)


def write_signal(signal, path):
    """Formato de texto: "d b source" y una línea con las entradas"""
    path = Path(path)
    entradas = " ".join(f"{v:.17g}" for v in signal.x)
    path.write_text(f"{signal.d} {signal.b} {signal.source.value}\n{entradas}\n")
    return path


def read_signal(path, op=None):
    """
    Lee una señal; el cosoporte se recalcula con `op` o, para imágenes,
    con el operador DIF2D. Sin operador las señales gaussianas quedan sin cosoporte.
    """
    lineas = Path(path).read_text().split("\n")
    try:
        d, b, source = lineas[0].split()
        d, b, source = int(d), int(b), SignalSource(source)
        x = np.array([float(v) for v in lineas[1].split()])
    except (ValueError, IndexError) as exc:
        raise InvalidArgumentError(f"archivo de señal inválido: {path}") from exc
    if x.shape != (d,):
        raise DimensionMismatchError(f"se esperaban {d} entradas, se leyeron {x.size}")

    if op is None and source in (SignalSource.RANDOM_WALK_IMAGE, SignalSource.PACKING_PATTERN):
        op = dif2d_operator(image_side(d))
    cos = cosupport(op, x) if op is not None else None
    return CosparseSignal(x=x, cosupport=cos, b=b, source=source)
