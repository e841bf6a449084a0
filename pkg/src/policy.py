# src/policy.py
# Políticas estocásticas parametrizadas π_θ, amostragem de ações, pesos de
# importância e a fração de estocasticidade usada na restrição do ator

import json
import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, softmax

from src import config
from src.errors import ConfigError, DataError, PolicyError
from src.trajectory import Dataset, Step

logger = logging.getLogger(__name__)

INTERCEPT_NAME = "Intercept"


@dataclass(frozen=True)
class PolicyFeatureMap:
    """φ(s): intercepto opcional mais as componentes `columns` do estado.

    Para K ações usa-se φ(s,a) = e_a ⊗ φ(s) para a ≥ 1 e φ(s,0) ≡ 0; com K = 2
    isso é exatamente a forma logística π_θ(1|s) = σ(θ^T φ(s)).
    """
    columns: Tuple[int, ...]
    names: Tuple[str, ...] = ()
    intercept: bool = True
    n_actions: int = config.DEFAULT_N_ACTIONS

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(int(c) for c in self.columns))
        if self.n_actions < 2:
            raise ConfigError("a política precisa de pelo menos duas ações")
        if not self.names:
            object.__setattr__(self, "names", tuple(f"s{c + 1}" for c in self.columns))
        else:
            object.__setattr__(self, "names", tuple(self.names))
        if len(self.names) != len(self.columns):
            raise ConfigError("names e columns devem ter o mesmo tamanho")
        if self.base_dim == 0:
            raise ConfigError("a política precisa de ao menos uma feature (intercepto ou coluna)")

    @classmethod
    def from_names(cls, names: Sequence[str], state_names: Sequence[str], intercept=True, n_actions=2):
        state_names = list(state_names)
        missing = [name for name in names if name not in state_names]
        if missing:
            raise ConfigError(f"colunas da política inexistentes no dataset: {', '.join(missing)}")
        return cls(tuple(state_names.index(name) for name in names), tuple(names), intercept, n_actions)

    @property
    def base_dim(self) -> int:
        return len(self.columns) + int(self.intercept)

    @property
    def q(self) -> int:
        return self.base_dim * (self.n_actions - 1)

    @property
    def base_names(self) -> Tuple[str, ...]:
        return ((INTERCEPT_NAME,) if self.intercept else ()) + self.names

    @property
    def coefficient_names(self) -> Tuple[str, ...]:
        if self.n_actions == 2:
            return self.base_names
        return tuple(f"{name}[a={a}]" for a in range(1, self.n_actions) for name in self.base_names)

    def phi(self, states) -> np.ndarray:
        """φ(s) para vários estados, (N, base_dim)."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        parts = [states[:, list(self.columns)]]
        if self.intercept:
            parts.insert(0, np.ones((states.shape[0], 1)))
        return np.hstack(parts)

    def phi_sa(self, state, action: int) -> np.ndarray:
        out = np.zeros(self.q)
        if action > 0:
            start = (action - 1) * self.base_dim
            out[start:start + self.base_dim] = self.phi(state)[0]
        return out

    def to_json(self) -> dict:
        return {"columns": list(self.columns), "feature_names": list(self.names),
                "intercept": self.intercept, "n_actions": self.n_actions}


@dataclass(frozen=True, eq=False)
class PolicyParams:
    theta: np.ndarray
    feature_map: PolicyFeatureMap
    gated_by_availability: bool = False
    constant_action: Optional[int] = None
    objective: Optional[float] = None

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        object.__setattr__(self, "theta", theta)
        if self.constant_action is not None:
            if not 0 <= self.constant_action < self.feature_map.n_actions:
                raise ConfigError(f"ação constante {self.constant_action} fora do intervalo")
            return
        if theta.shape[0] != self.feature_map.q:
            raise ConfigError(f"θ tem {theta.shape[0]} entradas, a política espera q = {self.feature_map.q}")
        if not np.all(np.isfinite(theta)):
            raise PolicyError("θ deve ter todas as entradas finitas")

    @classmethod
    def zeros(cls, feature_map: PolicyFeatureMap, gated_by_availability=False):
        return cls(np.zeros(feature_map.q), feature_map, gated_by_availability)

    @classmethod
    def constant(cls, action: int = 1, feature_map: Optional[PolicyFeatureMap] = None, gated_by_availability=False):
        feature_map = feature_map or PolicyFeatureMap((), intercept=True)
        return cls(np.zeros(0), feature_map, gated_by_availability, constant_action=action)

    @property
    def is_constant(self) -> bool:
        return self.constant_action is not None

    @property
    def n_actions(self) -> int:
        return self.feature_map.n_actions

    def with_theta(self, theta, objective=None) -> "PolicyParams":
        return replace(self, theta=np.asarray(theta, dtype=float).copy(), objective=objective)

    def coefficients(self) -> dict:
        return {name: float(value) for name, value in zip(self.feature_map.coefficient_names, self.theta)}

    def to_json(self) -> dict:
        payload = {
            "kind": "constant" if self.is_constant else "parametric",
            "theta": self.coefficients(),
            "coefficients": [float(v) for v in self.theta],
            "gated_by_availability": self.gated_by_availability,
            "constant_action": self.constant_action,
            "objective": None if self.objective is None else float(self.objective),
        }
        payload.update(self.feature_map.to_json())
        return payload

    @classmethod
    def from_json(cls, payload: dict) -> "PolicyParams":
        feature_map = PolicyFeatureMap(tuple(payload["columns"]), tuple(payload["feature_names"]),
                                       bool(payload["intercept"]), int(payload.get("n_actions", 2)))
        return cls(np.asarray(payload.get("coefficients", []), dtype=float), feature_map,
                   bool(payload.get("gated_by_availability", False)), payload.get("constant_action"),
                   payload.get("objective"))

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f, indent=2, ensure_ascii=False)

    @classmethod
    def load(cls, path: str) -> "PolicyParams":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def action_probabilities(p: PolicyParams, states, avail=None) -> np.ndarray:
    """π_θ(a|s) para vários estados, (N, K); cada linha soma 1."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n_states, n_actions = states.shape[0], p.n_actions
    if p.is_constant:
        probs = np.zeros((n_states, n_actions))
        probs[:, p.constant_action] = 1.0
    else:
        phi = p.feature_map.phi(states)
        scores = phi @ p.theta.reshape(n_actions - 1, -1).T
        if not np.all(np.isfinite(scores)):
            raise PolicyError("θ^T φ(s) não finito")
        if n_actions == 2:
            # Convenção de sinal: π_θ(1|s) = σ(θ^T φ(s))
            treat = expit(scores[:, 0])
            probs = np.column_stack([1.0 - treat, treat])
        else:
            probs = softmax(np.hstack([np.zeros((n_states, 1)), scores]), axis=1)
    if p.gated_by_availability and avail is not None:
        unavailable = ~np.asarray(avail, dtype=bool).reshape(-1)
        probs[unavailable] = 0.0
        probs[unavailable, 0] = 1.0
    return probs


def action_probability(p: PolicyParams, state, avail: bool, action: int) -> float:
    if not 0 <= action < p.n_actions:
        raise ConfigError(f"ação {action} fora de {{0,…,{p.n_actions - 1}}}")
    return float(action_probabilities(p, state, [avail])[0, action])


def sample_actions(p: PolicyParams, states, avail, rng: np.random.Generator) -> np.ndarray:
    """Amostra uma ação por estado por inversão da CDF, um uniforme por estado."""
    probs = action_probabilities(p, states, avail)
    u = rng.random(probs.shape[0])
    actions = (u[:, None] >= np.cumsum(probs, axis=1)).sum(axis=1)
    return np.minimum(actions, p.n_actions - 1)


def sample_action(p: PolicyParams, state, avail: bool, rng: np.random.Generator) -> int:
    return int(sample_actions(p, state, [avail], rng)[0])


def importance_weight(p: PolicyParams, step: Step) -> float:
    behavior = step.behavior_prob if step.availability else 1.0
    return action_probability(p, step.state, step.availability, step.action) / behavior


def importance_weights(p: PolicyParams, d: Dataset) -> np.ndarray:
    """ρ_t = π_θ(A_t|S_t)/μ(A_t|S_t) para todo o dataset, (n, T+1).

    Nos pontos indisponíveis a política de comportamento também força a ação 0,
    então μ(0|S_t) = 1 independentemente do bprob registrado.
    """
    avail = d.availability.reshape(-1)
    probs = action_probabilities(p, d.decision_states, avail)
    chosen = probs[np.arange(probs.shape[0]), d.actions.reshape(-1)]
    behavior = np.where(avail, d.behavior_probs.reshape(-1), 1.0)
    return (chosen / behavior).reshape(d.actions.shape)


def stochasticity_fraction(p: PolicyParams, d: Dataset, p0: float) -> float:
    """min_a da fração de pontos de decisão com p0 ≤ π(a|S_t) ≤ 1 - p0.

    Para políticas condicionadas à disponibilidade a fração é calculada apenas
    entre os pontos disponíveis.
    """
    if not 0.0 < p0 < 1.0 / p.n_actions:
        raise ConfigError(f"p0 deve estar em (0, 1/K) = (0, {1.0 / p.n_actions:.3f}), recebido {p0}")
    avail = d.availability.reshape(-1)
    probs = action_probabilities(p, d.decision_states, avail)
    mask = avail if p.gated_by_availability else np.ones_like(avail)
    if not mask.any():
        raise DataError("nenhum ponto de decisão disponível para calcular a fração de estocasticidade")
    inside = (probs >= p0) & (probs <= 1.0 - p0)
    return float(inside[mask].mean(axis=0).min())
