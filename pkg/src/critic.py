# src/critic.py
# Crítico em lote e fora da política: estima a recompensa média η e os pesos v
# do valor diferencial resolvendo as equações de estimação penalizadas

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src import config
from src.errors import ConfigError, CriticError, DataError
from src.features import FeatureMap, feature_matrix
from src.policy import PolicyParams, importance_weights
from src.trajectory import Dataset

logger = logging.getLogger(__name__)

OBJECTIVES = ("eta", "empirical")
SOLVERS = ("auto", "primal", "dual")


@dataclass(frozen=True, eq=False)
class CriticSystem:
    """Â (p+1)×(p+1) e b̂ (p+1); a primeira coordenada corresponde a η."""
    A_hat: np.ndarray
    b_hat: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A_hat, dtype=float))
        b = np.asarray(self.b_hat, dtype=float).reshape(-1)
        if A.shape != (b.shape[0], b.shape[0]):
            raise CriticError(f"dimensões inconsistentes: Â {A.shape}, b̂ {b.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise CriticError("Â ou b̂ com entradas não finitas")
        object.__setattr__(self, "A_hat", A)
        object.__setattr__(self, "b_hat", b)

    @property
    def dimension(self) -> int:
        return self.b_hat.shape[0] - 1


@dataclass(frozen=True, eq=False)
class CriticFit:
    eta_hat: float
    v_hat: np.ndarray
    lambda_c: float
    residual_norm: float
    rhs_norm: float = 0.0
    cv_table: Tuple[Tuple[float, float], ...] = ()
    condition_estimate: float = float("nan")
    used_fallback: bool = False
    objective_value: Optional[float] = None

    @property
    def solution(self) -> np.ndarray:
        return np.concatenate([[self.eta_hat], self.v_hat])

    @property
    def J(self) -> float:
        # J(θ): η̂ por padrão, ou a variante empírica quando configurada
        return self.eta_hat if self.objective_value is None else self.objective_value

    @property
    def residual_ok(self) -> bool:
        return self.residual_norm <= config.CRITIC_RESIDUAL_TOL * (1.0 + self.rhs_norm)

    def to_json(self, include_v: bool = False) -> dict:
        payload = {
            "eta_hat": self.eta_hat,
            "J": self.J,
            "lambda_c": self.lambda_c,
            "residual_norm": self.residual_norm,
            "condition_estimate": None if np.isnan(self.condition_estimate) else self.condition_estimate,
            "used_fallback": self.used_fallback,
            "p": int(self.v_hat.shape[0]),
            "cv_table": [{"lambda": lam, "score": None if not np.isfinite(s) else s} for lam, s in self.cv_table],
        }
        if include_v:
            payload["v_hat"] = self.v_hat.tolist()
        return payload


@dataclass(frozen=True)
class CriticOptions:
    lambda_grid: Tuple[float, ...] = config.DEFAULT_LAMBDA_GRID
    folds: int = config.DEFAULT_CV_FOLDS
    fold_seed: int = config.DEFAULT_FOLD_SEED
    objective: str = "eta"
    solver: str = "auto"

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        if not self.lambda_grid or any(lam < 0 for lam in self.lambda_grid):
            raise ConfigError("a grade de λ_c deve ser não vazia e com valores ≥ 0")
        if self.folds < 2:
            raise ConfigError("a validação cruzada precisa de k ≥ 2")
        if self.objective not in OBJECTIVES:
            raise ConfigError(f"objetivo do crítico desconhecido '{self.objective}' (use {', '.join(OBJECTIVES)})")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver desconhecido '{self.solver}' (use {', '.join(SOLVERS)})")


def solve_penalized(sys: CriticSystem, lambda_c: float) -> CriticFit:
    """Resolve (Â^TÂ + λ_c Ĩ)(η; v) = Â^T b̂, com Ĩ sem penalizar η."""
    if lambda_c < 0:
        raise ConfigError(f"λ_c deve ser ≥ 0, recebido {lambda_c}")
    A, b = sys.A_hat, sys.b_hat
    normal = A.T @ A
    normal[1:, 1:] += lambda_c * np.eye(sys.dimension)
    rhs = A.T @ b
    used_fallback = False
    condition = float("nan")
    try:
        factor = linalg.cho_factor(normal, lower=True)
        pivots = np.abs(np.diag(factor[0]))
        condition = float((pivots.max() / pivots.min()) ** 2) if pivots.min() > 0 else float("inf")
        if lambda_c == 0 and condition > config.SINGULAR_CONDITION:
            raise CriticError("matriz normal singular com λ_c = 0; use λ_c > 0 para garantir unicidade")
        x = linalg.cho_solve(factor, rhs)
    except linalg.LinAlgError:
        if lambda_c == 0:
            raise CriticError("matriz normal singular com λ_c = 0; use λ_c > 0 para garantir unicidade")
        x = linalg.lstsq(normal, rhs)[0]
        used_fallback = True

    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(normal @ x - rhs))
    tolerance = config.CRITIC_RESIDUAL_TOL * (1.0 + rhs_norm)
    if residual > tolerance and not used_fallback:
        refined = linalg.lstsq(normal, rhs)[0]
        refined_residual = float(np.linalg.norm(normal @ refined - rhs))
        if refined_residual < residual:
            x, residual, used_fallback = refined, refined_residual, True
    if residual > tolerance:
        logger.warning("Resíduo das equações normais %.3e acima da tolerância %.3e (λ_c=%g)", residual, tolerance, lambda_c)
    return CriticFit(float(x[0]), x[1:].copy(), float(lambda_c), residual, rhs_norm,
                     condition_estimate=condition, used_fallback=used_fallback)


class CriticProblem:
    """Blocos z_t = (1, f_t) e (1, f_t - f_{t+1}) pré-calculados para um par (dataset, features).

    Chamadas repetidas de J(θ) só mudam os pesos ρ_t. A soma temporal vai até T
    quando há estados terminais e até T-1 caso contrário.
    """

    def __init__(self, d: Dataset, fm: FeatureMap, solver: str = "auto"):
        if fm.state_dim != d.state_dim:
            raise CriticError(f"mapa de features para p1={fm.state_dim}, dataset com p1={d.state_dim}")
        if solver not in SOLVERS:
            raise ConfigError(f"solver desconhecido '{solver}'")
        self.dataset = d
        self.feature_map = fm
        self.solver = solver
        n, length = d.actions.shape
        f = feature_matrix(fm, d.decision_states).reshape(n, length, -1)
        if d.has_terminal_states:
            terminal = feature_matrix(fm, d.terminal_states)[:, None, :]
            f_now, f_next = f, np.concatenate([f[:, 1:], terminal], axis=1)
        else:
            f_now, f_next = f[:, :-1], f[:, 1:]
        self.n_individuals = n
        self.n_terms = f_now.shape[1]
        if self.n_terms < 1:
            raise DataError("trajetórias curtas demais para o crítico")
        ones = np.ones(f_now.shape[:2] + (1,))
        width = fm.dimension + 1
        self.Z = np.concatenate([ones, f_now], axis=2).reshape(-1, width)
        self.D = np.concatenate([ones, f_now - f_next], axis=2).reshape(-1, width)
        self.y = d.rewards[:, :self.n_terms].reshape(-1)
        self.owner = np.repeat(np.arange(n), self.n_terms)
        self._gram_z = None
        self._gram_dv = None

    @property
    def p(self) -> int:
        return self.feature_map.dimension

    def weights(self, policy: PolicyParams) -> np.ndarray:
        return importance_weights(policy, self.dataset)[:, :self.n_terms].reshape(-1)

    def _rows(self, individuals):
        if individuals is None:
            return np.arange(self.Z.shape[0]), self.n_individuals
        individuals = np.asarray(individuals, dtype=int)
        return np.flatnonzero(np.isin(self.owner, individuals)), len(individuals)

    def system(self, policy: PolicyParams, individuals=None, weights=None) -> CriticSystem:
        weights = self.weights(policy) if weights is None else weights
        rows, count = self._rows(individuals)
        scaled = (self.Z[rows] * weights[rows, None]).T / count
        return CriticSystem(scaled @ self.D[rows], scaled @ self.y[rows])

    def _use_dual(self, n_rows: int, lambda_c: float) -> bool:
        if lambda_c <= 0:
            return False
        return self.solver == "dual" or (self.solver == "auto" and self.p + 1 > n_rows)

    def solve(self, policy: PolicyParams, lambda_c: float, individuals=None, weights=None) -> CriticFit:
        if lambda_c < 0:
            raise ConfigError(f"λ_c deve ser ≥ 0, recebido {lambda_c}")
        weights = self.weights(policy) if weights is None else weights
        rows, count = self._rows(individuals)
        if self._use_dual(rows.size, lambda_c):
            return self._solve_dual(rows, count, weights[rows], lambda_c)
        return solve_penalized(self.system(policy, individuals, weights), lambda_c)

    def _solve_dual(self, rows, count, w, lambda_c) -> CriticFit:
        # Mesmo minimizador, resolvido num sistema N×N (N = transições observadas)
        # pela identidade (B^T M B + λI)^{-1} B^T M = B^T (M B B^T + λI)^{-1} M
        if self._gram_z is None:
            self._gram_z = self.Z @ self.Z.T
            self._gram_dv = self.D[:, 1:] @ self.D[:, 1:].T
        block = np.ix_(rows, rows)
        M = w[:, None] * self._gram_z[block] * w[None, :] / count ** 2
        K = self._gram_dv[block]
        y = self.y[rows]
        ones = np.ones_like(y)
        try:
            Q = linalg.solve(M @ K + lambda_c * np.eye(rows.size), M @ np.column_stack([y, ones]))
        except linalg.LinAlgError as e:
            raise CriticError(f"falha no sistema dual do crítico: {e}")
        qa, qb = Q[:, 0], Q[:, 1]
        Kqa, Kqb = K @ qa, K @ qb
        ea, eb = y - Kqa, ones - Kqb
        Meb = M @ eb
        denominator = eb @ Meb + lambda_c * (qb @ Kqb)
        if not denominator > 0:
            raise CriticError("η não identificável: pesos de importância nulos nas linhas usadas")
        eta = float((ea @ Meb + lambda_c * (qa @ Kqb)) / denominator)
        q = qa - eta * qb
        D = self.D[rows]
        v = D[:, 1:].T @ q
        gradient = D.T @ (M @ (ea - eta * eb))
        gradient[1:] -= lambda_c * v
        rhs_norm = float(np.linalg.norm(D.T @ (M @ y)))
        return CriticFit(eta, v, float(lambda_c), float(np.linalg.norm(gradient)), rhs_norm)

    def validation_score(self, solution, individuals, weights) -> float:
        """‖b̂_val - Â_val (η; v)‖² no sistema do fold de validação."""
        rows, count = self._rows(individuals)
        u = weights[rows] * (self.y[rows] - self.D[rows] @ solution)
        r = self.Z[rows].T @ u / count
        return float(r @ r)

    def empirical_objective(self, fit: CriticFit, weights) -> float:
        # P_n[Σ_t ρ_t (R_{t+1} + v^T f_{t+1} - v^T f_t)], normalizado por termo temporal
        delta = self.y - self.D[:, 1:] @ fit.v_hat
        return float((weights * delta).sum() / (self.n_individuals * self.n_terms))


def assemble_system(d: Dataset, p: PolicyParams, fm: FeatureMap) -> CriticSystem:
    return CriticProblem(d, fm).system(p)


def make_folds(n: int, k: int, seed: int):
    """Divide indivíduos (não instantes) em k folds, com semente fixa."""
    if k < 2:
        raise ConfigError("a validação cruzada precisa de k ≥ 2")
    if n < k:
        raise DataError(f"n = {n} indivíduos é menor que k = {k} folds")
    permutation = np.random.default_rng(seed).permutation(n)
    return [np.sort(fold) for fold in np.array_split(permutation, k)]


def select_lambda(problem: CriticProblem, policy: PolicyParams, grid: Sequence[float], k: int,
                  seed: int = config.DEFAULT_FOLD_SEED, folds=None, weights=None):
    grid = [float(lam) for lam in grid]
    if not grid or any(lam < 0 for lam in grid):
        raise ConfigError("a grade de λ_c deve ser não vazia e com valores ≥ 0")
    if folds is None:
        folds = make_folds(problem.n_individuals, k, seed)
    weights = problem.weights(policy) if weights is None else weights
    everyone = np.arange(problem.n_individuals)

    table = []
    for lam in grid:
        score = 0.0
        for fold in folds:
            train = np.setdiff1d(everyone, fold)
            try:
                fit = problem.solve(policy, lam, individuals=train, weights=weights)
            except CriticError as e:
                logger.debug("λ_c=%g descartado na validação cruzada: %s", lam, e)
                score = float("inf")
                break
            score += problem.validation_score(fit.solution, fold, weights)
        table.append((lam, score))

    best = min(score for _, score in table)
    if not np.isfinite(best):
        raise CriticError("nenhum λ_c da grade produziu um ajuste válido")
    tied = [lam for lam, score in table if score <= best + config.CV_TIE_TOL * (1.0 + abs(best))]
    chosen = max(tied)
    logger.debug("λ_c escolhido por validação cruzada: %g", chosen)
    return chosen, tuple(table)


def cross_validate_lambda(d: Dataset, p: PolicyParams, fm: FeatureMap, grid: Sequence[float], k: int,
                          seed: int = config.DEFAULT_FOLD_SEED, folds=None):
    return select_lambda(CriticProblem(d, fm), p, grid, k, seed, folds)


def fit_policy(problem: CriticProblem, policy: PolicyParams, options: CriticOptions = CriticOptions(),
               lambda_c: Optional[float] = None) -> CriticFit:
    """Algoritmo do crítico num problema pré-calculado; λ_c por validação cruzada se não for dado."""
    weights = problem.weights(policy)
    cv_table = ()
    if lambda_c is None:
        lambda_c, cv_table = select_lambda(problem, policy, options.lambda_grid, options.folds,
                                           options.fold_seed, weights=weights)
    fit = problem.solve(policy, lambda_c, weights=weights)
    objective = fit.eta_hat
    if options.objective == "empirical":
        objective = problem.empirical_objective(fit, weights)
    return replace(fit, cv_table=cv_table, objective_value=objective)


def critic(theta: PolicyParams, d: Dataset, fm: FeatureMap, options: CriticOptions = CriticOptions()) -> CriticFit:
    """Validação cruzada de λ_c + montagem de Â, b̂ + solução; J(θ) = η̂."""
    return fit_policy(CriticProblem(d, fm, options.solver), theta, options)
