# Maximização quase-Newton (BFGS) com gradiente por diferenças finitas e
# reinícios aleatórios

import logging
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from src import config
from src.errors import ConfigError, NumericalError, OptimError

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class OptimOptions:
    max_iterations: int = config.DEFAULT_MAX_ITERATIONS
    gradient_step: float = config.DEFAULT_GRADIENT_STEP
    convergence_tol: float = config.DEFAULT_CONVERGENCE_TOL
    n_restarts: int = config.DEFAULT_N_RESTARTS
    restart_scale: float = config.DEFAULT_RESTART_SCALE
    seed: int = 0

    def __post_init__(self):
        for name in ("max_iterations", "gradient_step", "convergence_tol", "restart_scale"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"OptimOptions.{name} deve ser positivo")
        if self.n_restarts < 1:
            raise ConfigError("OptimOptions.n_restarts deve ser ≥ 1")


@dataclass(frozen=True, eq=False)
class RestartResult:
    start: np.ndarray
    x: np.ndarray
    value: float
    iterations: int
    evaluations: int
    converged: bool
    failed: bool
    message: str


@dataclass(frozen=True, eq=False)
class OptimResult:
    x: np.ndarray
    value: float
    restarts: Tuple[RestartResult, ...]

    @property
    def final_values(self):
        return [r.value for r in self.restarts]


class _CountingObjective:
    def __init__(self, f: Objective):
        self.f = f
        self.calls = 0

    def __call__(self, x) -> float:
        self.calls += 1
        return float(self.f(x))

    def safe(self, x) -> float:
        # Falhas do objetivo na busca linear viram passos rejeitados
        try:
            value = self(x)
        except NumericalError as e:
            logger.debug("Objetivo falhou em %s: %s", x, e)
            return -np.inf
        return value if np.isfinite(value) else -np.inf


def finite_diff_gradient(f: Objective, x, step: float = config.DEFAULT_GRADIENT_STEP) -> np.ndarray:
    """Diferenças centrais com h_i = step·(1 + |x_i|)."""
    x = np.asarray(x, dtype=float)
    gradient = np.empty_like(x)
    for i in range(x.shape[0]):
        h = step * (1.0 + abs(x[i]))
        forward, backward = x.copy(), x.copy()
        forward[i] += h
        backward[i] -= h
        values = []
        for point in (forward, backward):
            try:
                value = float(f(point))
            except NumericalError as e:
                raise OptimError(f"objetivo falhou no ponto de prova {point.tolist()}: {e}", point)
            if not np.isfinite(value):
                raise OptimError(f"objetivo não finito no ponto de prova {point.tolist()}", point)
            values.append(value)
        gradient[i] = (values[0] - values[1]) / (forward[i] - backward[i])
    return gradient


def _maximize_from(f: _CountingObjective, x0: np.ndarray, opts: OptimOptions) -> RestartResult:
    start = x0.copy()
    x = x0.copy()
    fx = f.safe(x)
    if not np.isfinite(fx):
        return RestartResult(start, x, -np.inf, 0, f.calls, False, True, "objetivo não finito no ponto inicial")
    try:
        g = finite_diff_gradient(f, x, opts.gradient_step)
    except OptimError as e:
        return RestartResult(start, x, fx, 0, f.calls, False, True, f"gradiente falhou no ponto inicial: {e}")
    n = x.shape[0]
    H = np.eye(n)
    first_update = True
    tol = opts.convergence_tol

    for iteration in range(opts.max_iterations):
        if np.linalg.norm(g) <= tol:
            return RestartResult(start, x, fx, iteration, f.calls, True, False, "norma do gradiente abaixo da tolerância")
        direction = H @ g
        slope = g @ direction
        if not slope > 0:
            H = np.eye(n)
            direction, slope = g.copy(), g @ g

        # Retrocesso de Armijo: nunca aceita ponto com objetivo menor que o atual
        alpha, accepted = 1.0, False
        for _ in range(config.MAX_BACKTRACKS):
            candidate = x + alpha * direction
            f_candidate = f.safe(candidate)
            if f_candidate >= fx + config.ARMIJO_C1 * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if iteration == 0:
                return RestartResult(start, x, fx, 0, f.calls, False, True, "busca linear falhou no primeiro passo")
            return RestartResult(start, x, fx, iteration, f.calls, True, False, "busca linear sem progresso")

        try:
            g_new = finite_diff_gradient(f, candidate, opts.gradient_step)
        except OptimError as e:
            # O reinício termina no último ponto aceito
            return RestartResult(start, candidate, f_candidate, iteration + 1, f.calls, False, False,
                                 f"gradiente falhou: {e}")
        s = candidate - x
        y = g - g_new  # variação do gradiente de -f
        sy = s @ y
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(y):
            if first_update:
                H = np.eye(n) * (sy / (y @ y))
                first_update = False
            rho = 1.0 / sy
            left = np.eye(n) - rho * np.outer(s, y)
            H = left @ H @ left.T + rho * np.outer(s, s)

        change = f_candidate - fx
        x, fx, g = candidate, f_candidate, g_new
        if abs(change) <= tol ** 2 * (1.0 + abs(fx)):
            return RestartResult(start, x, fx, iteration + 1, f.calls, True, False, "variação do objetivo abaixo da tolerância")

    return RestartResult(start, x, fx, opts.max_iterations, f.calls, False, False, "máximo de iterações atingido")


def bfgs_maximize(f: Objective, x0, opts: OptimOptions = OptimOptions()) -> OptimResult:
    """BFGS a partir de x0 e de n_restarts - 1 pontos x0 + restart_scale·N(0, I).

    Devolve o melhor iterando final entre os reinícios.
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    rng = np.random.default_rng(opts.seed)
    starts = [x0.copy()]
    starts += [x0 + opts.restart_scale * rng.standard_normal(x0.shape[0]) for _ in range(opts.n_restarts - 1)]

    results = []
    for index, start in enumerate(starts):
        counted = _CountingObjective(f)
        result = _maximize_from(counted, start, opts)
        logger.debug("Reinício %d: f=%.6g, %d iterações, %d avaliações (%s)",
                     index, result.value, result.iterations, result.evaluations, result.message)
        results.append(result)

    usable = [r for r in results if not r.failed]
    if not usable:
        raise OptimError("a busca linear falhou no primeiro passo de todos os reinícios", x0)
    best = max(usable, key=lambda r: r.value)
    return OptimResult(best.x.copy(), best.value, tuple(results))
