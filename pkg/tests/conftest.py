import numpy as np
import pytest

from src.features import BasisFunction, KnotGrid, fit_centering
from src.policy import PolicyFeatureMap, PolicyParams
from src.simenv import SimConfig, TwoStateMDP, generate_dataset
from src.trajectory import Dataset


def tabular_feature_map(d):
    # f(s) = s - s̄ para o MDP de dois estados: um único hinge (s - 0)+
    return fit_centering(KnotGrid([[0.0]]), [BasisFunction.singleton(0, 0, "+")], d)


def with_rewards(d, rewards):
    return Dataset.from_arrays(d.states, d.actions, rewards, d.behavior_probs, d.availability,
                               d.terminal_states, state_names=d.state_names)


@pytest.fixture
def two_state_data():
    def make(n=200, T=50, mu1=0.5, action_bonus=0.0, seed=0):
        mdp = TwoStateMDP(action_bonus=action_bonus, mu1=mu1)
        return mdp, generate_dataset(mdp, n, T, np.random.default_rng(seed))
    return make


@pytest.fixture
def s1_dataset():
    return generate_dataset(SimConfig(p1=3, tau=0.4), 25, 25, np.random.default_rng(7))


@pytest.fixture
def constant_reward_dataset():
    # Estados e ações do modelo gerador, recompensa sempre igual a 10
    d = generate_dataset(SimConfig(p1=3, tau=0.0), 12, 10, np.random.default_rng(3))
    return with_rewards(d, np.full(d.rewards.shape, 10.0))


@pytest.fixture
def intercept_policy():
    return PolicyParams.zeros(PolicyFeatureMap((), intercept=True))
