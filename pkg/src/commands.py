# Operações da linha de comando: simulate, train, evaluate e reproduce

import logging
import os
from typing import Dict

import numpy as np

from src import config, exporter, visual
from src.actor import run_actor_critic
from src.critic import CriticProblem, fit_policy
from src.errors import ConfigError
from src.experiment import ExperimentConfig, monte_carlo_experiment
from src.features import build_feature_map
from src.manifest import write_manifest
from src.policy import PolicyFeatureMap, PolicyParams, stochasticity_fraction
from src.runconfig import RunConfig
from src.simenv import TwoStateMDP, constant_policy, evaluate_with_error, generate_dataset
from src.statistics import ExperimentResult, ExperimentStatistics, ResultsTable
from src.trajectory import load_dataset, save_dataset
from src.utils import format_size, get_default_output_path

logger = logging.getLogger(__name__)

# Políticas de referência aceitas por `evaluate` no lugar de um arquivo
NAMED_POLICIES = ("const", "uniform")


def _training_data(cfg: RunConfig):
    if cfg.data_path:
        d = load_dataset(cfg.data_path, cfg.data_format, cfg.n_actions)
        visual.print_dataset_info(d, cfg.data_path, format_size(cfg.data_path))
        return d
    if not cfg.has_simulation:
        raise ConfigError("informe um dataset (seção 'data') ou um modelo gerador (seção 'simulation')")
    d = generate_dataset(cfg.environment(), cfg.n, cfg.T, np.random.default_rng(cfg.seed))
    visual.print_dataset_info(d)
    return d


def cmd_simulate(cfg: RunConfig, fmt: str = config.DEFAULT_DATA_FORMAT) -> str:
    """Gera um dataset sob a política de comportamento e grava com manifesto."""
    environment = cfg.environment()
    d = generate_dataset(environment, cfg.n, cfg.T, np.random.default_rng(cfg.seed))
    path = get_default_output_path(f"dataset.{fmt}", cfg.output_dir)
    save_dataset(d, path, fmt)
    write_manifest(path, "simulate", cfg.to_json(), cfg.seed)
    visual.print_dataset_info(d, path, format_size(path))
    return path


def cmd_train(cfg: RunConfig) -> Dict[str, str]:
    """Features + ator–crítico; grava política, resumo do crítico e trajetória do ator."""
    d = _training_data(cfg)
    fm = build_feature_map(d, cfg.prune_threshold)
    pf = cfg.policy_feature_map(d.state_names)
    logger.info("Crítico com p = %d features; política com q = %d parâmetros", fm.dimension, pf.q)

    policy, trace = run_actor_critic(d, fm, pf, cfg.actor, gated=cfg.gated_by_availability)
    fit = fit_policy(CriticProblem(d, fm, cfg.actor.critic.solver), policy, cfg.actor.critic)
    if not fit.residual_ok:
        logger.warning("Resíduo das equações normais do crítico acima da tolerância: %.3g", fit.residual_norm)
    fraction = stochasticity_fraction(policy, d, cfg.actor.p0)

    paths = {
        "policy": get_default_output_path("policy.json", cfg.output_dir),
        "critic": get_default_output_path("critic.json", cfg.output_dir),
        "trace": get_default_output_path("trace.csv", cfg.output_dir),
    }
    exporter.export_policy(policy, paths["policy"], fit)
    exporter.export_critic_fit(fit, paths["critic"])
    exporter.export_trace(trace, paths["trace"])
    for path in paths.values():
        write_manifest(path, "train", cfg.to_json(), cfg.seed)

    visual.render_trace(trace)
    visual.render_policy(policy, fraction)
    visual.print_output_file_info(paths["policy"])
    return paths


def _load_policy(policy_path: str) -> PolicyParams:
    if policy_path == "const":
        return constant_policy()
    if policy_path == "uniform":
        return PolicyParams.zeros(PolicyFeatureMap((), intercept=True))
    try:
        return PolicyParams.load(policy_path)
    except FileNotFoundError:
        raise ConfigError(f"arquivo de política {policy_path} não encontrado")
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigError(f"arquivo de política {policy_path} inválido: {e}")


def cmd_evaluate(cfg: RunConfig, policy_path: str) -> dict:
    """η^π por rollout no modelo gerador, com erro padrão por médias em lote."""
    if not cfg.has_simulation:
        raise ConfigError("avaliação sem modelo gerador não é suportada: a configuração precisa de uma "
                          "seção 'simulation' (um dataset real não permite rollouts)")
    environment = cfg.environment()
    policy = _load_policy(policy_path)
    columns = policy.feature_map.columns
    if columns and max(columns) >= environment.state_dim:
        raise ConfigError(f"a política usa a componente {max(columns) + 1} do estado, "
                          f"o ambiente tem p1 = {environment.state_dim}")

    eta, se = evaluate_with_error(environment, policy, cfg.rollout)
    report = {"policy": policy_path, "eta": eta, "se": se,
              "horizon": cfg.rollout.horizon, "burn_in": cfg.rollout.burn_in}
    if isinstance(environment, TwoStateMDP):
        report["exact_eta"] = environment.exact_average_reward(policy)

    stem = os.path.splitext(os.path.basename(policy_path))[0]
    path = get_default_output_path(f"eta_{stem}.json", cfg.output_dir)
    exporter.export_eta_report(report, path)
    write_manifest(path, "evaluate", {**cfg.to_json(), "policy": policy_path}, cfg.seed)
    visual.print_eta_report(eta, se, stem)
    return report


def cmd_reproduce(cfg: RunConfig, scenario: str, scale: str = "desk", replications: int = None) -> Dict[str, str]:
    """Experimento de Monte Carlo de um cenário; grava a tabela por replicação e o resumo."""
    reward_form = (cfg.simulation or {}).get("reward_form", config.DEFAULT_REWARD_FORM)
    exp = ExperimentConfig(scenario, scale, replications=replications, seed=cfg.seed, n=cfg.n, T=cfg.T,
                           jobs=cfg.jobs, reward_form=reward_form, actor=cfg.actor,
                           rollout=cfg.rollout, oracle_rollout=cfg.rollout)
    logger.info("Cenário %s (%s): %s ∈ %s, %d replicações", scenario, scale, exp.sweep_name,
                list(exp.sweep_values), exp.replications)

    stats = ExperimentStatistics()
    table = None
    with visual.create_progress() as progress:
        task = progress.add_task(f"Cenário {scenario}", total=exp.replications * len(exp.sweep_values))
        try:
            table = monte_carlo_experiment(exp, stats, on_progress=lambda k: progress.advance(task, k))
        except KeyboardInterrupt:
            pass

    if table is None:
        ExperimentResult(ResultsTable(exp.scenario, exp.sweep_name), stats, was_interrupted=True).display_statistics(visual)
        return {}

    paths = {
        "results": get_default_output_path(f"results_{scenario}_{scale}.csv", cfg.output_dir),
        "summary": get_default_output_path(f"summary_{scenario}_{scale}.csv", cfg.output_dir),
    }
    exporter.export_results(table, paths["results"])
    exporter.export_summary(table, paths["summary"])
    run_config = {**cfg.to_json(), "scenario": scenario, "scale": scale, "replications": exp.replications}
    for path in paths.values():
        write_manifest(path, "reproduce", run_config, cfg.seed)
    ExperimentResult(table, stats).display_statistics(visual, paths["results"])
    return paths

