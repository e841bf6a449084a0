# src/simenv.py
# Ambientes de simulação: o modelo gerador com burden (família S1–S4), um MDP
# de dois estados com solução exata, geração de dados sob a política de
# comportamento, avaliação do average reward por rollout e políticas de
# referência (constante e ótima)

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from src import config
from src.actor import ActorConfig
from src.errors import ConfigError, NumericalError
from src.optim import bfgs_maximize
from src.policy import (PolicyFeatureMap, PolicyParams, action_probabilities,
                        stochasticity_fraction)
from src.trajectory import Dataset, default_state_names

logger = logging.getLogger(__name__)

REWARD_FORMS = ("product", "additive")


def ar_covariance(p1: int, rho: float = config.AR_RHO) -> np.ndarray:
    """(AR(ρ))_ij = ρ^|i-j|."""
    index = np.arange(p1)
    return rho ** np.abs(index[:, None] - index[None, :])


@dataclass(frozen=True)
class SimConfig:
    """Modelo gerador indexado por p1 e τ.

    Componentes 1–3 do estado são estruturais (S3 é o burden); as demais são
    ruído que nunca entra na recompensa.
    """
    p1: int = config.DEFAULT_P1
    tau: float = config.DEFAULT_TAU
    mu1: float = config.DEFAULT_MU1
    reward_form: str = config.DEFAULT_REWARD_FORM
    treatment_effect_scale: float = 1.0    # 0 com τ = 0 dá recompensa constante 10 + ruído
    seed: int = 0

    def __post_init__(self):
        if int(self.p1) != self.p1 or self.p1 < 3:
            raise ConfigError(f"p1 deve ser um inteiro ≥ 3 (componentes 1–3 são estruturais), recebido {self.p1}")
        if not 0.0 < self.mu1 < 1.0:
            raise ConfigError(f"mu1 deve estar em (0, 1), recebido {self.mu1}")
        if self.reward_form not in REWARD_FORMS:
            raise ConfigError(f"reward_form deve ser um de {REWARD_FORMS}, recebido '{self.reward_form}'")

    @property
    def state_dim(self) -> int:
        return self.p1

    @property
    def state_names(self) -> Tuple[str, ...]:
        return default_state_names(self.p1)

    @property
    def noise_dim(self) -> int:
        # ξ ∈ R^{p1+1} seguido de U ∈ [0,1]^2
        return self.p1 + 3

    def initial_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.multivariate_normal(np.zeros(self.p1), ar_covariance(self.p1), size=n, method="cholesky")

    def draw_noise(self, size: int, rng: np.random.Generator) -> np.ndarray:
        xi = rng.standard_normal((size, self.p1 + 1))
        u = rng.random((size, 2))
        return np.hstack([xi, u])

    def transition(self, s, a, noise) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = np.asarray(a, dtype=float)
        xi, u = noise[..., :self.p1 + 1], noise[..., self.p1 + 1:]
        nxt = np.empty_like(s)
        nxt[..., 0] = 0.5 * s[..., 0] + 2.0 * xi[..., 0]
        nxt[..., 1] = 0.25 * s[..., 1] + 0.125 * a + 2.0 * xi[..., 1]
        nxt[..., 2] = 0.9 * s[..., 2] + 0.1 * s[..., 2] * u[..., 0] * a + u[..., 1] * a
        nxt[..., 3:] = 0.25 * s[..., 3:] + xi[..., 3:self.p1]
        return nxt

    def reward(self, s, a, noise) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        a = np.asarray(a, dtype=float)
        s1, s2, s3 = s[..., 0], s[..., 1], s[..., 2]
        effect = 0.04 + 0.02 * s1 + 0.02 * s2
        if self.reward_form == "product":
            modelled = 0.25 * s1 * a * effect
        else:
            modelled = 0.25 * s1 + a * effect
        return 10.0 + self.treatment_effect_scale * modelled - self.tau * s3 + 0.16 * noise[..., self.p1]


@dataclass(frozen=True)
class TwoStateMDP:
    """MDP de teste com estados {0, 1}: recompensa = s + action_bonus·a.

    A ação 1 leva ao estado 1 com probabilidade 0.8, a ação 0 com 0.2,
    independentemente do estado atual.
    """
    action_bonus: float = 0.0
    mu1: float = 0.5
    p_high_treat: float = 0.8
    p_high_control: float = 0.2
    start_prob: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.mu1 < 1.0:
            raise ConfigError(f"mu1 deve estar em (0, 1), recebido {self.mu1}")
        for name in ("p_high_treat", "p_high_control", "start_prob"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} deve ser uma probabilidade")

    state_dim = 1
    state_names = ("s1",)
    noise_dim = 1

    def initial_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return (rng.random((n, 1)) < self.start_prob).astype(float)

    def draw_noise(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.random((size, 1))

    def transition(self, s, a, noise) -> np.ndarray:
        p_high = np.where(np.asarray(a) == 1, self.p_high_treat, self.p_high_control)
        return (noise[..., 0] < p_high)[..., None].astype(float)

    def reward(self, s, a, noise) -> np.ndarray:
        return np.asarray(s, dtype=float)[..., 0] + self.action_bonus * np.asarray(a, dtype=float)

    def exact_average_reward(self, policy: PolicyParams) -> float:
        """η^π pela distribuição estacionária da cadeia induzida por π."""
        states = np.array([[0.0], [1.0]])
        treat = action_probabilities(policy, states)[:, 1]
        p_high = treat * self.p_high_treat + (1.0 - treat) * self.p_high_control
        P = np.column_stack([1.0 - p_high, p_high])
        # d (P - I) = 0 com Σ d = 1
        system = np.vstack([(P - np.eye(2)).T, np.ones(2)])
        stationary = np.linalg.lstsq(system, np.array([0.0, 0.0, 1.0]), rcond=None)[0]
        return float(stationary @ (states[:, 0] + self.action_bonus * treat))


@dataclass(frozen=True)
class RolloutSpec:
    horizon: int = config.DEFAULT_HORIZON
    burn_in: int = config.DEFAULT_BURN_IN
    seed: int = 0

    def __post_init__(self):
        if self.horizon < 1 or not 0 <= self.burn_in < self.horizon:
            raise ConfigError(f"burn_in ({self.burn_in}) deve ser < horizon ({self.horizon})")


def initial_state(cfg, rng: np.random.Generator) -> np.ndarray:
    """S_0 ~ Normal_{p1}(0, AR(0.5))."""
    return cfg.initial_states(1, rng)[0]


def step(cfg, state, action: int, rng: np.random.Generator) -> Tuple[np.ndarray, float]:
    """(S_{t+1}, R_{t+1}) a partir de (S_t, A_t)."""
    state = np.asarray(state, dtype=float)
    if state.shape != (cfg.state_dim,):
        raise ConfigError(f"estado com dimensão {state.shape}, esperado ({cfg.state_dim},)")
    noise = cfg.draw_noise(1, rng)[0]
    return cfg.transition(state, action, noise), float(cfg.reward(state, action, noise))


def generate_dataset(cfg, n: int, T: int, rng: np.random.Generator) -> Dataset:
    """n trajetórias com T+1 pontos de decisão sob μ(1|s) = mu1, com estado terminal S_{T+1}."""
    if n < 1 or T < 1:
        raise ConfigError(f"n e T devem ser ≥ 1, recebidos n={n}, T={T}")
    length = T + 1
    states = np.empty((n, length, cfg.state_dim))
    actions = np.empty((n, length), dtype=int)
    rewards = np.empty((n, length))
    s = cfg.initial_states(n, rng)
    for t in range(length):
        states[:, t] = s
        actions[:, t] = rng.random(n) < cfg.mu1
        noise = cfg.draw_noise(n, rng)
        rewards[:, t] = cfg.reward(s, actions[:, t], noise)
        s = cfg.transition(s, actions[:, t], noise)
    behavior_probs = np.where(actions == 1, cfg.mu1, 1.0 - cfg.mu1)
    return Dataset.from_arrays(states, actions, rewards, behavior_probs, terminal_states=s,
                               state_names=cfg.state_names)


def _decision_rule(policy: PolicyParams):
    """Ação por inversão da CDF a partir de um uniforme, como em sample_actions."""
    if policy.is_constant:
        action = policy.constant_action
        return lambda s, u: action
    fm = policy.feature_map
    if policy.n_actions == 2:
        columns = list(fm.columns)
        bias = policy.theta[0] if fm.intercept else 0.0
        weights = policy.theta[1:] if fm.intercept else policy.theta
        return lambda s, u: int(u >= 1.0 - expit(bias + s[columns] @ weights))
    last = policy.n_actions - 1
    return lambda s, u: min(int((u >= np.cumsum(action_probabilities(policy, s)[0])).sum()), last)


def rollout(cfg, policy: PolicyParams, horizon: int, rng: np.random.Generator):
    """Uma trajetória de comprimento `horizon` com ações amostradas de π."""
    decide = _decision_rule(policy)
    s = cfg.initial_states(1, rng)[0]
    noise = cfg.draw_noise(horizon, rng)
    uniforms = rng.random(horizon)
    states = np.empty((horizon, cfg.state_dim))
    actions = np.empty(horizon, dtype=int)
    for t in range(horizon):
        states[t] = s
        actions[t] = decide(s, uniforms[t])
        s = cfg.transition(s, actions[t], noise[t])
    return states, actions, cfg.reward(states, actions, noise)


def _rollout_rng(spec: RolloutSpec, rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(spec.seed)


def evaluate_average_reward(cfg, p: PolicyParams, spec: RolloutSpec = RolloutSpec(),
                            rng: Optional[np.random.Generator] = None) -> float:
    """Média das recompensas após o burn-in numa trajetória longa sob π."""
    _, _, rewards = rollout(cfg, p, spec.horizon, _rollout_rng(spec, rng))
    return float(rewards[spec.burn_in:].mean())


def evaluate_with_error(cfg, p: PolicyParams, spec: RolloutSpec = RolloutSpec(),
                        rng: Optional[np.random.Generator] = None,
                        n_batches: int = config.SE_BATCHES) -> Tuple[float, float]:
    """(η, erro padrão por médias em lote) após o burn-in."""
    _, _, rewards = rollout(cfg, p, spec.horizon, _rollout_rng(spec, rng))
    tail = rewards[spec.burn_in:]
    n_batches = max(2, min(n_batches, tail.size // 2))
    means = np.array([batch.mean() for batch in np.array_split(tail, n_batches)])
    return float(tail.mean()), float(means.std(ddof=1) / np.sqrt(n_batches))


def constant_policy(n_actions: int = config.DEFAULT_N_ACTIONS, action: int = 1) -> PolicyParams:
    """π_const(1|s) ≡ 1."""
    return PolicyParams.constant(action, PolicyFeatureMap((), intercept=True, n_actions=n_actions))


def oracle_policy(cfg, pf: PolicyFeatureMap, actor_cfg: ActorConfig = ActorConfig(),
                  spec: RolloutSpec = RolloutSpec(), seed: int = 0,
                  n_reference: int = config.ORACLE_REFERENCE_N, T_reference: int = config.DEFAULT_T,
                  penalty: Optional[float] = None) -> PolicyParams:
    """Política de referência: maximiza η^{π_θ} por rollout com penalidade exata.

    Todas as avaliações usam os mesmos números aleatórios (semente de `spec`);
    a fração de estocasticidade é medida em trajetórias novas da política de
    comportamento.
    """
    rng = np.random.default_rng(seed)
    reference = generate_dataset(cfg, n_reference, T_reference, rng)
    if penalty is None:
        penalty = config.ORACLE_PENALTY_FACTOR * max(1.0, float(np.abs(reference.rewards).mean()))
    template = PolicyParams.zeros(pf)

    def objective(theta) -> float:
        policy = template.with_theta(theta)
        eta = evaluate_average_reward(cfg, policy, spec)
        shortfall = (1.0 - actor_cfg.alpha) - stochasticity_fraction(policy, reference, actor_cfg.p0)
        return eta - penalty * max(0.0, shortfall)

    options = replace(actor_cfg.optim, gradient_step=config.ORACLE_GRADIENT_STEP,
                      n_restarts=config.ORACLE_N_RESTARTS, seed=seed)
    try:
        result = bfgs_maximize(objective, np.zeros(pf.q), options)
    except NumericalError:
        logger.error("Falha ao otimizar a política de referência (c = %.3g)", penalty)
        raise
    logger.debug("Política de referência: θ=%s, objetivo=%.4f", np.round(result.x, 4).tolist(), result.value)
    return template.with_theta(result.x, objective=result.value)
