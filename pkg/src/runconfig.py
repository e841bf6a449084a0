# Arquivo de configuração declarativo (JSON) de uma execução, com valores
# padrão de src/config.py e sobrescrita pelas flags da linha de comando

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

from src import config
from src.actor import ActorConfig
from src.critic import CriticOptions
from src.errors import ConfigError
from src.optim import OptimOptions
from src.policy import PolicyFeatureMap
from src.simenv import RolloutSpec, SimConfig, TwoStateMDP

logger = logging.getLogger(__name__)

ENVIRONMENTS = ("generative", "two_state")

SECTIONS = {
    "seed": None, "output_dir": None, "jobs": None,
    "data": ("path", "format", "n_actions"),
    "simulation": ("environment", "p1", "tau", "mu1", "reward_form", "treatment_effect_scale",
                   "action_bonus", "n", "T"),
    "features": ("prune_threshold",),
    "policy": ("columns", "intercept", "gated_by_availability"),
    "actor": ("p0", "alpha", "lambda_a_min", "delta", "max_penalty_rounds", "strict_critic", "critic", "optim"),
    "rollout": ("horizon", "burn_in"),
}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output_dir: str = config.DEFAULT_OUTPUT_DIR
    jobs: int = 1
    data_path: Optional[str] = None
    data_format: Optional[str] = None
    n_actions: int = config.DEFAULT_N_ACTIONS
    simulation: Optional[dict] = None
    n: int = config.DEFAULT_N
    T: int = config.DEFAULT_T
    prune_threshold: float = config.DEFAULT_PRUNE_THRESHOLD
    policy_columns: Optional[Tuple[str, ...]] = None     # None -> todas as componentes do estado
    intercept: bool = True
    gated_by_availability: bool = False
    actor: ActorConfig = field(default_factory=ActorConfig)
    rollout: RolloutSpec = field(default_factory=RolloutSpec)

    def __post_init__(self):
        if self.jobs < 1:
            raise ConfigError("jobs deve ser ≥ 1")
        if not 0.0 < self.prune_threshold <= 1.0:
            raise ConfigError("prune_threshold deve estar em (0, 1]")
        if self.n < 1 or self.T < 1:
            raise ConfigError("n e T devem ser ≥ 1")
        if not self.actor.p0 < 1.0 / self.n_actions:
            raise ConfigError(f"p0 = {self.actor.p0} deve ser menor que 1/K = {1.0 / self.n_actions:.3f}")
        if self.simulation is not None:
            environment = self.environment()
            if self.policy_columns is not None:
                self.policy_feature_map(environment.state_names)

    @property
    def has_simulation(self) -> bool:
        return self.simulation is not None

    def environment(self):
        """SimConfig (modelo gerador) ou TwoStateMDP descrito na seção `simulation`."""
        if self.simulation is None:
            raise ConfigError("a configuração não tem seção 'simulation' (modelo gerador)")
        section = dict(self.simulation)
        kind = section.pop("environment", "generative")
        section.pop("n", None)
        section.pop("T", None)
        try:
            if kind == "generative":
                section.pop("action_bonus", None)
                return SimConfig(seed=self.seed, **section)
            if kind == "two_state":
                return TwoStateMDP(**{k: v for k, v in section.items() if k in ("action_bonus", "mu1")})
        except TypeError as e:
            raise ConfigError(f"seção 'simulation' inválida: {e}")
        raise ConfigError(f"ambiente desconhecido '{kind}'; válidos: {', '.join(ENVIRONMENTS)}")

    def policy_feature_map(self, state_names) -> PolicyFeatureMap:
        names = tuple(state_names) if self.policy_columns is None else self.policy_columns
        return PolicyFeatureMap.from_names(names, state_names, self.intercept, self.n_actions)

    def to_json(self) -> dict:
        return asdict(self)


def _check_keys(raw: dict, allowed, where: str):
    unknown = sorted(set(raw) - set(allowed))
    if unknown:
        raise ConfigError(f"chaves desconhecidas em {where}: {', '.join(unknown)}")


def _build(cls, values: dict, where: str):
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigError(f"{where} inválido: {e}")


def _actor_from_json(raw: dict, seed: int) -> ActorConfig:
    raw = dict(raw)
    critic = _build(CriticOptions, {**raw.pop("critic", {}), "fold_seed": seed}, "actor.critic")
    optim = _build(OptimOptions, {**raw.pop("optim", {}), "seed": seed}, "actor.optim")
    return _build(ActorConfig, {**raw, "critic": critic, "optim": optim}, "actor")


def run_config_from_json(raw: dict, overrides: Optional[dict] = None) -> RunConfig:
    """Monta a RunConfig; flags (seed, output_dir, jobs) têm precedência sobre o arquivo."""
    if not isinstance(raw, dict):
        raise ConfigError("o arquivo de configuração deve conter um objeto JSON")
    _check_keys(raw, SECTIONS, "configuração")
    for name, allowed in SECTIONS.items():
        if allowed is not None and name in raw:
            if not isinstance(raw[name], dict):
                raise ConfigError(f"a seção '{name}' deve ser um objeto")
            _check_keys(raw[name], allowed, f"'{name}'")

    raw = {**raw, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    seed = int(raw.get("seed", 0))
    data = raw.get("data", {})
    simulation = raw.get("simulation")
    features = raw.get("features", {})
    policy = raw.get("policy", {})
    columns = policy.get("columns")

    return RunConfig(
        seed=seed,
        output_dir=raw.get("output_dir", config.DEFAULT_OUTPUT_DIR),
        jobs=int(raw.get("jobs", 1)),
        data_path=data.get("path"),
        data_format=data.get("format"),
        n_actions=int(data.get("n_actions", config.DEFAULT_N_ACTIONS)),
        simulation=None if simulation is None else dict(simulation),
        n=int((simulation or {}).get("n", config.DEFAULT_N)),
        T=int((simulation or {}).get("T", config.DEFAULT_T)),
        prune_threshold=float(features.get("prune_threshold", config.DEFAULT_PRUNE_THRESHOLD)),
        policy_columns=None if columns is None else tuple(columns),
        intercept=bool(policy.get("intercept", True)),
        gated_by_availability=bool(policy.get("gated_by_availability", False)),
        actor=_actor_from_json(raw.get("actor", {}), seed),
        rollout=_build(RolloutSpec, {**raw.get("rollout", {}), "seed": seed}, "rollout"),
    )


def load_run_config(path: Optional[str] = None, overrides: Optional[dict] = None) -> RunConfig:
    raw = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"arquivo de configuração {path} não encontrado")
        except json.JSONDecodeError as e:
            raise ConfigError(f"arquivo de configuração {path} não é JSON válido: {e}")
        logger.debug("Configuração carregada de %s", path)
    return run_config_from_json(raw, overrides)

