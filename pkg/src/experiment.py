# Experimentos de Monte Carlo dos cenários S1-S4: uma varredura de um
# parâmetro do modelo gerador, com replicações independentes do conjunto de
# treinamento e avaliação por rollout das políticas aprendida, constante e ótima

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from src import config
from src.actor import ActorConfig, run_actor_critic
from src.errors import ConfigError, ExperimentError
from src.features import build_feature_map
from src.policy import PolicyFeatureMap, PolicyParams
from src.simenv import (RolloutSpec, SimConfig, constant_policy, evaluate_average_reward,
                        generate_dataset, oracle_policy)
from src.statistics import ExperimentStatistics, ResultsTable

logger = logging.getLogger(__name__)

# Subfluxos nomeados de cada replicação
STREAMS = ("data", "folds", "optim", "rollout")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    scale: str = "desk"
    replications: Optional[int] = None
    sweep_values: Optional[Tuple] = None
    seed: int = 0
    n: int = config.DEFAULT_N
    T: int = config.DEFAULT_T
    jobs: int = 1
    reward_form: str = config.DEFAULT_REWARD_FORM
    actor: ActorConfig = field(default_factory=ActorConfig)
    rollout: RolloutSpec = field(default_factory=RolloutSpec)
    oracle_rollout: RolloutSpec = field(default_factory=RolloutSpec)
    include_oracle: bool = True

    def __post_init__(self):
        if self.scenario not in config.SCENARIOS:
            raise ConfigError(f"cenário desconhecido '{self.scenario}'; válidos: {', '.join(config.SCENARIOS)}")
        if self.scale not in config.SCALES:
            raise ConfigError(f"escala desconhecida '{self.scale}'; válidas: {', '.join(config.SCALES)}")
        if self.replications is None:
            object.__setattr__(self, "replications", config.SCALES[self.scale]["replications"])
        if self.sweep_values is None:
            object.__setattr__(self, "sweep_values", tuple(self.definition["values"][self.scale]))
        else:
            object.__setattr__(self, "sweep_values", tuple(self.sweep_values))
        if self.replications < 0:
            raise ConfigError("replications deve ser ≥ 0")
        if self.jobs < 1:
            raise ConfigError("--jobs deve ser ≥ 1")
        if self.n < self.actor.critic.folds:
            raise ConfigError(f"n = {self.n} é menor que o número de folds ({self.actor.critic.folds})")

    @property
    def definition(self) -> dict:
        return config.SCENARIOS[self.scenario]

    @property
    def sweep_name(self) -> str:
        return self.definition["sweep"]

    def sim_config(self, value) -> SimConfig:
        p1, tau = self.definition["p1"], self.definition["tau"]
        if self.sweep_name == "tau":
            tau = float(value)
        elif self.sweep_name == "p1":
            p1 = int(value)
        return SimConfig(p1=p1, tau=tau, reward_form=self.reward_form)

    def policy_columns(self, value) -> Tuple[int, ...]:
        p1 = self.sim_config(value).p1
        if self.definition["policy_columns"] == "all":
            return tuple(range(p1))
        columns = config.STRUCTURAL_COLUMNS
        if self.sweep_name == "omitted" and int(value) > 0:
            columns = tuple(c for c in columns if c != int(value) - 1)
        return columns

    def policy_feature_map(self, value) -> PolicyFeatureMap:
        cfg = self.sim_config(value)
        columns = self.policy_columns(value)
        return PolicyFeatureMap(columns, tuple(cfg.state_names[c] for c in columns))


def substreams(seed: int, sweep_index: int, replication: int) -> Dict[str, np.random.SeedSequence]:
    """Sementes independentes do agendamento: uma por (varredura, replicação) e finalidade."""
    children = np.random.SeedSequence([seed, sweep_index, replication]).spawn(len(STREAMS))
    return dict(zip(STREAMS, children))


def _as_seed(sequence: np.random.SeedSequence) -> int:
    return int(sequence.generate_state(1)[0])


def compute_oracle(exp: ExperimentConfig, sweep_index: int) -> PolicyParams:
    value = exp.sweep_values[sweep_index]
    seed = _as_seed(np.random.SeedSequence([exp.seed, sweep_index]))
    spec = replace(exp.oracle_rollout, seed=seed)
    return oracle_policy(exp.sim_config(value), exp.policy_feature_map(value), exp.actor, spec, seed=seed)


def run_replication(exp: ExperimentConfig, sweep_index: int, replication: int,
                    oracle: Optional[PolicyParams] = None) -> Dict[str, float]:
    """Gera o treinamento, aprende π_θ̂ e avalia as políticas com os mesmos números aleatórios."""
    value = exp.sweep_values[sweep_index]
    streams = substreams(exp.seed, sweep_index, replication)
    cfg = exp.sim_config(value)

    d = generate_dataset(cfg, exp.n, exp.T, np.random.default_rng(streams["data"]))
    fm = build_feature_map(d)
    actor_cfg = replace(exp.actor,
                        critic=replace(exp.actor.critic, fold_seed=_as_seed(streams["folds"])),
                        optim=replace(exp.actor.optim, seed=_as_seed(streams["optim"])))
    learned, trace = run_actor_critic(d, fm, exp.policy_feature_map(value), actor_cfg)
    logger.debug("Replicação %d (%s=%s): %d rodadas do ator", replication, exp.sweep_name, value, len(trace.rows))

    spec = replace(exp.rollout, seed=_as_seed(streams["rollout"]))
    etas = {
        "learned": evaluate_average_reward(cfg, learned, spec),
        "const": evaluate_average_reward(cfg, constant_policy(), spec),
    }
    if oracle is not None:
        etas["oracle"] = evaluate_average_reward(cfg, oracle, spec)
    return etas


def _replication_task(exp, sweep_index, replication, oracle):
    # Erros viajam como texto: nem toda exceção é reconstruível após pickle.
    # Qualquer falha de uma replicação é registrada pelo nome da classe.
    try:
        return sweep_index, replication, run_replication(exp, sweep_index, replication, oracle), None
    except Exception as e:
        return sweep_index, replication, None, f"{type(e).__name__}: {e}"


def _oracle_task(exp, sweep_index):
    try:
        return sweep_index, compute_oracle(exp, sweep_index), None
    except Exception as e:
        return sweep_index, None, f"{type(e).__name__}: {e}"


def _run_tasks(exp: ExperimentConfig, function, arguments, on_done: Callable):
    if exp.jobs == 1:
        for args in arguments:
            on_done(function(exp, *args))
        return
    with ProcessPoolExecutor(max_workers=exp.jobs) as pool:
        futures = [pool.submit(function, exp, *args) for args in arguments]
        for future in as_completed(futures):
            on_done(future.result())


def monte_carlo_experiment(exp: ExperimentConfig, stats: Optional[ExperimentStatistics] = None,
                           on_progress: Optional[Callable[[int], None]] = None) -> ResultsTable:
    """Roda todas as replicações de um cenário e devolve a tabela de η.

    Falhas individuais são registradas e o experimento continua; acima de 20%
    de falhas levanta ExperimentError com a tabela parcial.
    """
    stats = stats or ExperimentStatistics()
    table = ResultsTable(exp.scenario, exp.sweep_name)
    if exp.replications == 0 or not exp.sweep_values:
        return table

    oracles: Dict[int, PolicyParams] = {}
    if exp.include_oracle:
        def keep_oracle(outcome):
            sweep_index, policy, error = outcome
            if error is not None:
                logger.warning("Política de referência indisponível para %s=%s: %s",
                               exp.sweep_name, exp.sweep_values[sweep_index], error)
                return
            oracles[sweep_index] = policy
        _run_tasks(exp, _oracle_task, [(i,) for i in range(len(exp.sweep_values))], keep_oracle)

    outcomes = {}

    def keep_replication(outcome):
        sweep_index, replication, etas, error = outcome
        outcomes[(sweep_index, replication)] = (etas, error)
        if error is None:
            stats.add_success()
        else:
            stats.add_failure(error.split(":", 1)[0])
            logger.warning("Replicação %d (%s=%s) falhou: %s", replication, exp.sweep_name,
                           exp.sweep_values[sweep_index], error)
        if on_progress is not None:
            on_progress(1)

    tasks = [(i, r, oracles.get(i)) for i in range(len(exp.sweep_values)) for r in range(exp.replications)]
    _run_tasks(exp, _replication_task, tasks, keep_replication)

    # Linhas em ordem determinística, independente do agendamento dos processos
    for (sweep_index, replication) in sorted(outcomes):
        etas, error = outcomes[(sweep_index, replication)]
        if error is not None:
            continue
        for kind, eta in etas.items():
            table.add(exp.sweep_values[sweep_index], replication, kind, eta)

    failed = sum(1 for _, error in outcomes.values() if error is not None)
    if failed / len(outcomes) > config.MAX_FAILURE_RATE:
        raise ExperimentError(f"{failed} de {len(outcomes)} replicações falharam (limite de "
                              f"{config.MAX_FAILURE_RATE:.0%})", table)
    return table
