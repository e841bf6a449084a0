# src/actor.py
# Passo do ator (maximização penalizada de J(θ)) e o laço externo que aumenta
# λ_a até a política aprendida satisfazer a restrição de estocasticidade

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from src import config
from src.critic import CriticOptions, CriticProblem, fit_policy
from src.errors import ActorError, ConfigError
from src.features import FeatureMap
from src.optim import OptimOptions, bfgs_maximize
from src.policy import PolicyFeatureMap, PolicyParams, stochasticity_fraction
from src.trajectory import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ActorConfig:
    p0: float = config.DEFAULT_P0
    alpha: float = config.DEFAULT_ALPHA
    lambda_a_min: float = config.DEFAULT_LAMBDA_A_MIN
    delta: Optional[float] = None          # None -> 0.1·(|J(0)| + 1)
    optim: OptimOptions = field(default_factory=OptimOptions)
    max_penalty_rounds: int = config.DEFAULT_MAX_PENALTY_ROUNDS
    critic: CriticOptions = field(default_factory=CriticOptions)
    strict_critic: bool = False            # refaz a validação cruzada de λ_c a cada J(θ)

    def __post_init__(self):
        if not 0.0 < self.p0 < 0.5:
            raise ConfigError(f"p0 deve estar em (0, 1/K), recebido {self.p0}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha deve estar em (0, 1), recebido {self.alpha}")
        if self.lambda_a_min < 0:
            raise ConfigError("lambda_a_min deve ser ≥ 0")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError("delta (Δ) deve ser positivo")
        if self.max_penalty_rounds < 1:
            raise ConfigError("max_penalty_rounds deve ser ≥ 1")


@dataclass(frozen=True, eq=False)
class SigmaMatrix:
    sigma: np.ndarray

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        if sigma.shape[0] != sigma.shape[1] or not np.allclose(sigma, sigma.T):
            raise ConfigError("Σ deve ser uma matriz quadrada simétrica")
        scale = max(1.0, float(np.abs(sigma).max(initial=0.0)))
        if sigma.size and np.linalg.eigvalsh(sigma).min() < -1e-10 * scale:
            raise ConfigError("Σ deve ser semidefinida positiva")
        object.__setattr__(self, "sigma", sigma)

    def quadratic(self, theta) -> float:
        theta = np.asarray(theta, dtype=float)
        return float(theta @ self.sigma @ theta)


@dataclass(frozen=True)
class TraceRow:
    round: int
    lambda_a: float
    lambda_c: float
    J: float
    penalized: float
    fraction: float


@dataclass
class ActorTrace:
    delta: float
    rows: List[TraceRow] = field(default_factory=list)

    def add(self, row: TraceRow):
        self.rows.append(row)

    @property
    def lambdas(self) -> List[float]:
        return [row.lambda_a for row in self.rows]

    def as_records(self) -> List[dict]:
        return [row.__dict__.copy() for row in self.rows]


def compute_sigma(d: Dataset, pf: PolicyFeatureMap) -> SigmaMatrix:
    """Σ = P_n Σ_t φφ^T nos pontos de decisão observados.

    Com K > 2 ações o bloco φ(s)φ(s)^T se repete para cada ação a ≥ 1.
    """
    phi = pf.phi(d.decision_states)
    block = phi.T @ phi / d.n_individuals
    block = (block + block.T) / 2.0
    return SigmaMatrix(np.kron(np.eye(pf.n_actions - 1), block))


def penalized_objective(theta, lambda_a: float, sigma, critic_fn: Callable[[np.ndarray], float]) -> float:
    """J(θ) - λ_a θ^T Σ θ."""
    theta = np.asarray(theta, dtype=float)
    sigma = sigma if isinstance(sigma, SigmaMatrix) else SigmaMatrix(sigma)
    return critic_fn(theta) - lambda_a * sigma.quadratic(theta)


class PolicyValue:
    """J(θ) via crítico, com λ_c congelado ou revalidado a cada chamada."""

    def __init__(self, problem: CriticProblem, template: PolicyParams, options: CriticOptions,
                 lambda_c: Optional[float] = None):
        self.problem = problem
        self.template = template
        self.options = options
        self.lambda_c = lambda_c

    def fit(self, theta):
        return fit_policy(self.problem, self.template.with_theta(theta), self.options, self.lambda_c)

    def __call__(self, theta) -> float:
        return self.fit(theta).J


def _actor_round(problem: CriticProblem, pf: PolicyFeatureMap, lambda_a: float, sigma: SigmaMatrix,
                 cfg: ActorConfig, theta_start, lambda_c, gated: bool, optim: OptimOptions):
    template = PolicyParams.zeros(pf, gated)
    if not cfg.strict_critic and lambda_c is None:
        lambda_c = fit_policy(problem, template.with_theta(theta_start), cfg.critic).lambda_c
    value = PolicyValue(problem, template, cfg.critic, None if cfg.strict_critic else lambda_c)
    result = bfgs_maximize(lambda theta: penalized_objective(theta, lambda_a, sigma, value), theta_start, optim)
    return template.with_theta(result.x, objective=result.value), value


def actor_step(d: Dataset, fm: FeatureMap, pf: PolicyFeatureMap, lambda_a: float, sigma: SigmaMatrix,
               cfg: ActorConfig, theta_start=None, lambda_c: Optional[float] = None,
               problem: Optional[CriticProblem] = None, gated: bool = False) -> PolicyParams:
    """θ̂ = argmax {J(θ) - λ_a θ^T Σ θ}; o valor atingido fica em PolicyParams.objective."""
    problem = problem or CriticProblem(d, fm, cfg.critic.solver)
    theta_start = np.zeros(pf.q) if theta_start is None else np.asarray(theta_start, dtype=float)
    policy, _ = _actor_round(problem, pf, lambda_a, sigma, cfg, theta_start, lambda_c, gated, cfg.optim)
    return policy


def run_actor_critic(d: Dataset, fm: FeatureMap, pf: PolicyFeatureMap, cfg: ActorConfig = ActorConfig(),
                     gated: bool = False, problem: Optional[CriticProblem] = None) -> Tuple[PolicyParams, ActorTrace]:
    """Algoritmo ator–crítico em lote e fora da política.

    Começa em λ_a = λ_a^min e soma Δ enquanto a fração de pontos com todas as
    ações em [p0, 1 - p0] ficar abaixo de 1 - α.
    """
    if not cfg.p0 < 1.0 / pf.n_actions:
        raise ConfigError(f"p0 = {cfg.p0} deve ser menor que 1/K = {1.0 / pf.n_actions:.3f}")
    if pf.q > d.n_individuals:
        logger.warning("A política tem q = %d parâmetros para apenas n = %d indivíduos", pf.q, d.n_individuals)
    problem = problem or CriticProblem(d, fm, cfg.critic.solver)
    sigma = compute_sigma(d, pf)

    zero_fit = fit_policy(problem, PolicyParams.zeros(pf, gated), cfg.critic)
    delta = cfg.delta if cfg.delta is not None else config.DEFAULT_DELTA_FACTOR * (abs(zero_fit.J) + 1.0)
    trace = ActorTrace(delta)

    theta = np.zeros(pf.q)
    lambda_c = zero_fit.lambda_c
    for round_index in range(cfg.max_penalty_rounds):
        lambda_a = cfg.lambda_a_min + round_index * delta
        # Reinícios novos a cada rodada; o ponto inicial é o θ̂ da rodada anterior
        optim = replace(cfg.optim, seed=cfg.optim.seed + round_index)
        policy, value = _actor_round(problem, pf, lambda_a, sigma, cfg, theta,
                                     lambda_c if round_index == 0 else None, gated, optim)
        fit = value.fit(policy.theta)
        fraction = stochasticity_fraction(policy, d, cfg.p0)
        trace.add(TraceRow(round_index, lambda_a, fit.lambda_c, fit.J, float(policy.objective), fraction))
        logger.info("Rodada %d: λ_a=%.4g, λ_c=%.3g, J=%.4f, fração=%.3f",
                    round_index, lambda_a, fit.lambda_c, fit.J, fraction)
        if fraction >= 1.0 - cfg.alpha:
            return policy, trace
        theta = policy.theta

    raise ActorError(f"restrição de estocasticidade não satisfeita em {cfg.max_penalty_rounds} rodadas", trace)
