# src/features.py
# Base de splines lineares por partes (caso especial de MARS com nós nos decis)
# usada na aproximação linear do valor diferencial v^T f(s)

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np

from src import config
from src.errors import ConfigError, DataError
from src.trajectory import Dataset

logger = logging.getLogger(__name__)

ORIENTATIONS = ("+", "-")  # "+" -> (s_j - c)_+ ; "-" -> (c - s_j)_+
DECILE_PROBS = np.arange(1, config.N_KNOTS + 1) / config.N_KNOTS


@dataclass(frozen=True, eq=False)
class KnotGrid:
    """Nós c_{j,k}: uma linha por componente do estado, N_KNOTS colunas."""
    knots: np.ndarray

    def __post_init__(self):
        knots = np.atleast_2d(np.asarray(self.knots, dtype=float))
        if np.any(np.diff(knots, axis=1) < 0):
            raise ConfigError("os nós de cada dimensão devem ser não decrescentes")
        object.__setattr__(self, "knots", knots)

    @property
    def state_dim(self) -> int:
        return self.knots.shape[0]

    @property
    def n_knots(self) -> int:
        return self.knots.shape[1]


@dataclass(frozen=True, order=True)
class HingeAtom:
    dim: int
    knot: int
    orientation: str

    def index(self, n_knots: int = config.N_KNOTS) -> int:
        # Mesma ordem das colunas de hinge_matrix: (dim, nó, orientação)
        return (self.dim * n_knots + self.knot) * 2 + ORIENTATIONS.index(self.orientation)

    def label(self, state_names=None) -> str:
        name = state_names[self.dim] if state_names else f"s{self.dim + 1}"
        if self.orientation == "+":
            return f"({name}-c{self.knot + 1})+"
        return f"(c{self.knot + 1}-{name})+"


@dataclass(frozen=True)
class BasisFunction:
    kind: str
    terms: Tuple[HingeAtom, ...]

    def __post_init__(self):
        expected = {"singleton": 1, "product": 2}
        if self.kind not in expected or len(self.terms) != expected[self.kind]:
            raise ConfigError(f"função de base inválida: {self.kind} com {len(self.terms)} termo(s)")
        if self.kind == "product" and self.terms[0] == self.terms[1]:
            raise ConfigError("os termos de um produto devem ser átomos distintos")

    @classmethod
    def singleton(cls, dim, knot, orientation="+"):
        return cls("singleton", (HingeAtom(dim, knot, orientation),))

    @classmethod
    def product(cls, first: HingeAtom, second: HingeAtom):
        return cls("product", (first, second))


@dataclass(frozen=True, eq=False)
class FeatureMap:
    knot_grid: KnotGrid
    basis: Tuple[BasisFunction, ...]
    centering_means: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "basis", tuple(self.basis))
        object.__setattr__(self, "centering_means", np.asarray(self.centering_means, dtype=float).reshape(-1))
        if self.centering_means.shape[0] != len(self.basis):
            raise ConfigError("centering_means deve ter um valor por função de base")

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def state_dim(self) -> int:
        return self.knot_grid.state_dim

    @cached_property
    def _term_indices(self):
        n_knots = self.knot_grid.n_knots
        left = np.array([b.terms[0].index(n_knots) for b in self.basis], dtype=int)
        right = np.array([b.terms[1].index(n_knots) if b.kind == "product" else -1 for b in self.basis], dtype=int)
        return left, right

    def to_json(self) -> dict:
        return {
            "knots": self.knot_grid.knots.tolist(),
            "basis": [[[a.dim, a.knot, a.orientation] for a in b.terms] for b in self.basis],
            "centering_means": self.centering_means.tolist(),
        }

    @classmethod
    def from_json(cls, payload: dict) -> "FeatureMap":
        basis = []
        for terms in payload["basis"]:
            atoms = tuple(HingeAtom(int(d), int(k), str(o)) for d, k, o in terms)
            basis.append(BasisFunction("singleton" if len(atoms) == 1 else "product", atoms))
        return cls(KnotGrid(np.asarray(payload["knots"])), tuple(basis), np.asarray(payload["centering_means"]))

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_json(), f)

    @classmethod
    def load(cls, path: str) -> "FeatureMap":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def compute_deciles(d: Dataset, dim: int) -> np.ndarray:
    """Decis amostrais (10%, …, 100%) da componente `dim`, juntando indivíduos e instantes.

    Convenção: interpolação linear entre estatísticas de ordem vizinhas na
    probabilidade k/10 (o esquema "tipo 7").
    """
    if not d.trajectories:
        raise DataError("não é possível calcular decis de um dataset vazio")
    values = d.decision_states[:, dim]
    if values.size == 0:
        raise DataError("não é possível calcular decis de um dataset vazio")
    return np.quantile(values, DECILE_PROBS, method="linear")


def knot_grid_from_dataset(d: Dataset) -> KnotGrid:
    return KnotGrid(np.vstack([compute_deciles(d, j) for j in range(d.state_dim)]))


def hinge_matrix(knot_grid: KnotGrid, states) -> np.ndarray:
    """Todos os átomos (s_j - c_{j,k})+ e (c_{j,k} - s_j)+ para cada estado, (N, 2·K·p1)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    diff = states[:, :, None] - knot_grid.knots[None, :, :]
    atoms = np.stack([np.maximum(diff, 0.0), np.maximum(-diff, 0.0)], axis=-1)
    return atoms.reshape(states.shape[0], -1)


def raw_features(fm: FeatureMap, states) -> np.ndarray:
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[1] != fm.state_dim:
        raise DataError(f"dimensão do estado {states.shape[1]} difere da do mapa de features ({fm.state_dim})")
    hinges = hinge_matrix(fm.knot_grid, states)
    left, right = fm._term_indices
    values = hinges[:, left]
    products = right >= 0
    values[:, products] *= hinges[:, right[products]]
    return values


def feature_matrix(fm: FeatureMap, states) -> np.ndarray:
    """Features centradas f(s) para vários estados, (N, p)."""
    return raw_features(fm, states) - fm.centering_means


def evaluate_features(fm: FeatureMap, state) -> np.ndarray:
    state = np.asarray(state, dtype=float).reshape(-1)
    if state.shape[0] != fm.state_dim:
        raise DataError(f"dimensão do estado {state.shape[0]} difere da do mapa de features ({fm.state_dim})")
    return feature_matrix(fm, state[None, :])[0]


def fit_centering(knot_grid: KnotGrid, basis: Sequence[BasisFunction], d: Dataset) -> FeatureMap:
    """FeatureMap para uma base explícita, centrada nos estados de treino de `d`."""
    provisional = FeatureMap(knot_grid, tuple(basis), np.zeros(len(basis)))
    means = raw_features(provisional, d.decision_states).mean(axis=0)
    return FeatureMap(knot_grid, tuple(basis), means)


def candidate_count(state_dim: int, n_knots: int = config.N_KNOTS) -> int:
    # Singletons mais pares não ordenados de átomos distintos, antes da poda
    n_atoms = 2 * n_knots * state_dim
    return n_atoms + n_atoms * (n_atoms - 1) // 2


def _all_atoms(state_dim: int, n_knots: int):
    return [HingeAtom(j, k, o) for j in range(state_dim) for k in range(n_knots) for o in ORIENTATIONS]


def build_feature_map(d: Dataset, prune_threshold: float = config.DEFAULT_PRUNE_THRESHOLD) -> FeatureMap:
    """Gera singletons e produtos dois a dois dos átomos, poda e centra.

    Uma função de base é descartada somente se for nula em mais de
    prune_threshold dos estados de treino; exatamente no limiar ela fica.
    Colunas idênticas nos dados de treino são deduplicadas (fica a primeira na ordem de geração).
    """
    if not 0.0 <= prune_threshold <= 1.0:
        raise ConfigError(f"prune_threshold deve estar em [0, 1], recebido {prune_threshold}")
    knot_grid = knot_grid_from_dataset(d)
    states = d.decision_states
    n_states = states.shape[0]
    hinges = hinge_matrix(knot_grid, states)
    atoms = _all_atoms(d.state_dim, knot_grid.n_knots)

    # Contagens inteiras de zeros evitam ambiguidade de ponto flutuante no limiar
    nonzero = (hinges > 0).astype(float)
    limit = prune_threshold * n_states + 1e-6
    single_zero = n_states - nonzero.sum(axis=0)
    pair_zero = n_states - nonzero.T @ nonzero
    first, second = np.triu_indices(len(atoms), k=1)

    keep_single = np.flatnonzero(single_zero <= limit)
    keep_pair = np.flatnonzero(pair_zero[first, second] <= limit)
    total = len(atoms) + first.size

    basis = [BasisFunction("singleton", (atoms[a],)) for a in keep_single]
    basis += [BasisFunction("product", (atoms[first[i]], atoms[second[i]])) for i in keep_pair]
    if not basis:
        raise DataError("nenhuma função de base sobreviveu à poda; aumente prune_threshold")

    columns = np.hstack([hinges[:, keep_single], hinges[:, first[keep_pair]] * hinges[:, second[keep_pair]]])
    _, unique_index = np.unique(columns.T, axis=0, return_index=True)
    unique_index = np.sort(unique_index)
    basis = [basis[i] for i in unique_index]
    columns = columns[:, unique_index]

    logger.debug("Features: %d candidatas, %d após poda, %d após deduplicação",
                 total, len(keep_single) + len(keep_pair), len(basis))
    return FeatureMap(knot_grid, tuple(basis), columns.mean(axis=0))
