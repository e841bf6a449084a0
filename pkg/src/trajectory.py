# Modelo de dados das trajetórias (vários indivíduos) e leitura/validação do dataset em lote

import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from src.errors import DataError

logger = logging.getLogger(__name__)

# Colunas fixas do CSV; as colunas de estado vêm depois de "bprob"
CSV_FIXED_COLUMNS = ("id", "t", "avail", "action", "reward", "bprob")
SUPPORTED_FORMATS = ("csv", "json")


@dataclass(frozen=True, eq=False)
class Step:
    """Um ponto de decisão: S_t, I_t, A_t, R_{t+1} e μ(A_t|S_t)."""
    state: np.ndarray
    availability: bool
    action: int
    reward: float
    behavior_prob: float

    def __post_init__(self):
        object.__setattr__(self, "state", np.asarray(self.state, dtype=float).reshape(-1))
        object.__setattr__(self, "availability", bool(self.availability))
        object.__setattr__(self, "action", int(self.action))
        object.__setattr__(self, "reward", float(self.reward))
        object.__setattr__(self, "behavior_prob", float(self.behavior_prob))


@dataclass(frozen=True, eq=False)
class Trajectory:
    id: str
    steps: Tuple[Step, ...]
    terminal_state: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.terminal_state is not None:
            object.__setattr__(self, "terminal_state", np.asarray(self.terminal_state, dtype=float).reshape(-1))

    @property
    def horizon(self) -> int:
        # T: os pontos de decisão vão de 0 a T
        return len(self.steps) - 1


@dataclass(frozen=True, eq=False)
class Dataset:
    """Trajetórias de n indivíduos, todas com o mesmo T, p1 e K.

    O dataset é imutável; as matrizes empilhadas são calculadas sob demanda e
    reaproveitadas pelo crítico, pelo ator e pelas features.
    """
    trajectories: Tuple[Trajectory, ...]
    state_dim: int
    n_actions: int = 2
    state_names: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "trajectories", tuple(self.trajectories))
        if not self.state_names:
            object.__setattr__(self, "state_names", default_state_names(self.state_dim))
        else:
            object.__setattr__(self, "state_names", tuple(self.state_names))

    @classmethod
    def from_arrays(cls, states, actions, rewards, behavior_probs, availability=None,
                    terminal_states=None, ids=None, n_actions=2, state_names=None):
        """Monta um Dataset a partir de matrizes (n, T+1, ...)."""
        states = np.asarray(states, dtype=float)
        if states.ndim == 2:
            states = states[:, :, None]
        n, length, state_dim = states.shape
        actions = np.asarray(actions, dtype=int).reshape(n, length)
        rewards = np.asarray(rewards, dtype=float).reshape(n, length)
        behavior_probs = np.asarray(behavior_probs, dtype=float).reshape(n, length)
        if availability is None:
            availability = np.ones((n, length), dtype=bool)
        availability = np.asarray(availability, dtype=bool).reshape(n, length)
        if terminal_states is not None:
            terminal_states = np.asarray(terminal_states, dtype=float).reshape(n, state_dim)
        if ids is None:
            ids = [str(i + 1) for i in range(n)]
        trajectories = []
        for i in range(n):
            steps = tuple(
                Step(states[i, t], availability[i, t], actions[i, t], rewards[i, t], behavior_probs[i, t])
                for t in range(length)
            )
            terminal = None if terminal_states is None else terminal_states[i]
            trajectories.append(Trajectory(ids[i], steps, terminal))
        return cls(tuple(trajectories), state_dim, n_actions, tuple(state_names or ()))

    @property
    def n_individuals(self) -> int:
        return len(self.trajectories)

    @property
    def horizon(self) -> int:
        return self.trajectories[0].horizon if self.trajectories else -1

    @property
    def has_terminal_states(self) -> bool:
        return bool(self.trajectories) and all(tr.terminal_state is not None for tr in self.trajectories)

    def select(self, indices: Iterable[int]) -> "Dataset":
        """Subconjunto de indivíduos (a ordem de `indices` é preservada)."""
        return Dataset(tuple(self.trajectories[i] for i in indices), self.state_dim, self.n_actions, self.state_names)

    def column_index(self, name: str) -> int:
        try:
            return self.state_names.index(name)
        except ValueError:
            raise DataError(f"coluna de estado '{name}' não existe no dataset (colunas: {', '.join(self.state_names)})")

    def _stack(self, getter):
        try:
            return np.array([[getter(step) for step in tr.steps] for tr in self.trajectories])
        except ValueError as e:
            raise DataError(f"dataset irregular, valide antes de usar: {e}")

    @cached_property
    def states(self) -> np.ndarray:
        # (n, T+1, p1)
        return self._stack(lambda s: s.state).astype(float).reshape(self.n_individuals, -1, self.state_dim)

    @cached_property
    def availability(self) -> np.ndarray:
        return self._stack(lambda s: s.availability).astype(bool)

    @cached_property
    def actions(self) -> np.ndarray:
        return self._stack(lambda s: s.action).astype(int)

    @cached_property
    def rewards(self) -> np.ndarray:
        return self._stack(lambda s: s.reward).astype(float)

    @cached_property
    def behavior_probs(self) -> np.ndarray:
        return self._stack(lambda s: s.behavior_prob).astype(float)

    @cached_property
    def terminal_states(self) -> Optional[np.ndarray]:
        if not self.has_terminal_states:
            return None
        return np.array([tr.terminal_state for tr in self.trajectories], dtype=float)

    @cached_property
    def decision_states(self) -> np.ndarray:
        """Todos os estados observados nos pontos de decisão, (n·(T+1), p1)."""
        return self.states.reshape(-1, self.state_dim)


def default_state_names(state_dim: int) -> Tuple[str, ...]:
    return tuple(f"s{j + 1}" for j in range(state_dim))


# ---------------------------------------------------------------------------
# Validação
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    checked: int = 0
    failed: int = 0
    first_failure: Optional[Tuple[str, Optional[int]]] = None

    @property
    def passed(self) -> bool:
        return self.failed == 0

    def record(self, ok: bool, individual: str, time_index: Optional[int] = None):
        self.checked += 1
        if not ok:
            self.failed += 1
            if self.first_failure is None:
                self.first_failure = (individual, time_index)


@dataclass
class ValidationReport:
    checks: Dict[str, CheckResult] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def failed_checks(self) -> List[CheckResult]:
        return [check for check in self.checks.values() if not check.passed]

    def raise_for_failures(self):
        failed = self.failed_checks()
        if not failed:
            return
        first = failed[0]
        individual, time_index = first.first_failure or (None, None)
        summary = ", ".join(f"{c.name}: {c.failed} falha(s)" for c in failed)
        raise DataError(f"dataset inválido ({summary})", individual, time_index)


VALIDATION_CHECKS = (
    "behavior_prob_range",
    "availability_rule",
    "action_range",
    "state_dimension",
    "finite_values",
    "trajectory_length",
    "equal_lengths",
    "terminal_state_consistency",
)


def validate_dataset(d: Dataset) -> ValidationReport:
    """Confere todos os invariantes de Step/Trajectory/Dataset; nunca lança exceção."""
    report = ValidationReport({name: CheckResult(name) for name in VALIDATION_CHECKS})
    checks = report.checks
    if not d.trajectories:
        return report

    reference_length = len(d.trajectories[0].steps)
    reference_terminal = d.trajectories[0].terminal_state is not None
    for tr in d.trajectories:
        checks["trajectory_length"].record(len(tr.steps) >= 2, tr.id)
        checks["equal_lengths"].record(len(tr.steps) == reference_length, tr.id)
        checks["terminal_state_consistency"].record((tr.terminal_state is not None) == reference_terminal, tr.id)
        for t, step in enumerate(tr.steps):
            b = step.behavior_prob
            checks["behavior_prob_range"].record(math.isfinite(b) and 0.0 < b < 1.0, tr.id, t)
            checks["availability_rule"].record(step.availability or step.action == 0, tr.id, t)
            checks["action_range"].record(0 <= step.action < d.n_actions, tr.id, t)
            checks["state_dimension"].record(step.state.shape[0] == d.state_dim, tr.id, t)
            checks["finite_values"].record(
                bool(np.all(np.isfinite(step.state))) and math.isfinite(step.reward), tr.id, t)
        if tr.terminal_state is not None:
            t_end = len(tr.steps)
            checks["state_dimension"].record(tr.terminal_state.shape[0] == d.state_dim, tr.id, t_end)
            checks["finite_values"].record(bool(np.all(np.isfinite(tr.terminal_state))), tr.id, t_end)
    return report


# ---------------------------------------------------------------------------
# Leitura e escrita (CSV / JSON)
# ---------------------------------------------------------------------------

def _resolve_format(path: str, fmt: Optional[str]) -> str:
    if fmt is None:
        fmt = os.path.splitext(path)[1].lstrip(".").lower()
    fmt = fmt.lower()
    if fmt not in SUPPORTED_FORMATS:
        raise DataError(f"formato de dataset desconhecido '{fmt}' (use csv ou json)")
    return fmt


def _parse_float(raw, column, individual, t):
    if raw is None or str(raw).strip() == "":
        raise DataError(f"valor ausente na coluna '{column}'", individual, t)
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise DataError(f"valor não numérico '{raw}' na coluna '{column}'", individual, t)
    if not math.isfinite(value):
        raise DataError(f"valor não finito '{raw}' na coluna '{column}'", individual, t)
    return value


def _parse_int(raw, column, individual, t):
    value = _parse_float(raw, column, individual, t)
    if value != int(value):
        raise DataError(f"valor inteiro esperado na coluna '{column}', recebido '{raw}'", individual, t)
    return int(value)


def _parse_bool(raw, column, individual, t):
    if isinstance(raw, bool):
        return raw
    text = "" if raw is None else str(raw).strip().lower()
    if text in ("1", "true", "1.0"):
        return True
    if text in ("0", "false", "0.0"):
        return False
    if text == "":
        raise DataError(f"valor ausente na coluna '{column}'", individual, t)
    raise DataError(f"indicador inválido '{raw}' na coluna '{column}' (use 0/1)", individual, t)


def _parse_step(fields, state_values, n_actions, individual, t) -> Step:
    avail = _parse_bool(fields.get("avail"), "avail", individual, t)
    action = _parse_int(fields.get("action"), "action", individual, t)
    if not 0 <= action < n_actions:
        raise DataError(f"ação {action} fora de {{0,…,{n_actions - 1}}}", individual, t)
    reward = _parse_float(fields.get("reward"), "reward", individual, t)
    bprob = _parse_float(fields.get("bprob"), "bprob", individual, t)
    if not 0.0 < bprob < 1.0:
        raise DataError("probabilidade de comportamento deve estar estritamente em (0,1)", individual, t)
    return Step(np.asarray(state_values, dtype=float), avail, action, reward, bprob)


def _read_csv(path: str, n_actions: int) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"arquivo vazio: {path}")
        if tuple(header[:len(CSV_FIXED_COLUMNS)]) != CSV_FIXED_COLUMNS or len(header) <= len(CSV_FIXED_COLUMNS):
            raise DataError(f"cabeçalho inválido, esperado '{','.join(CSV_FIXED_COLUMNS)},s1,…,sP'")
        state_names = tuple(header[len(CSV_FIXED_COLUMNS):])

        # Agrupa as linhas por indivíduo, preservando a ordem de aparição
        rows_by_id: Dict[str, List[List[str]]] = {}
        for line_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"linha {line_number} malformada: {len(row)} campos, esperado {len(header)}")
            rows_by_id.setdefault(row[0].strip(), []).append(row)

    trajectories = []
    for individual, rows in rows_by_id.items():
        steps: List[Step] = []
        terminal = None
        for row in rows:
            fields = dict(zip(header, (cell.strip() for cell in row)))
            t = _parse_int(fields["t"], "t", individual, None)
            state_values = [_parse_float(fields[name], name, individual, t) for name in state_names]
            if terminal is not None:
                raise DataError("linha após o estado terminal", individual, t)
            if fields["action"] == "":
                # Linha de estado terminal S_{T+1}: só o estado é lido
                if t != len(steps) or not steps:
                    raise DataError(f"estado terminal deve ter t = T+1 = {len(steps)}", individual, t)
                terminal = np.asarray(state_values, dtype=float)
                continue
            if t != len(steps):
                raise DataError(f"instante fora de ordem, esperado t={len(steps)}", individual, t)
            steps.append(_parse_step(fields, state_values, n_actions, individual, t))
        trajectories.append(Trajectory(individual, tuple(steps), terminal))
    return Dataset(tuple(trajectories), len(state_names), n_actions, state_names)


def _read_json(path: str, n_actions: int) -> Dataset:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as e:
            raise DataError(f"JSON inválido em {path}: {e}")
    if not isinstance(payload, list):
        raise DataError("o JSON do dataset deve ser uma lista de trajetórias")

    trajectories = []
    state_dim = None
    for position, item in enumerate(payload):
        individual = str(item.get("id", position + 1)) if isinstance(item, dict) else str(position + 1)
        if not isinstance(item, dict) or not isinstance(item.get("steps"), list):
            raise DataError("trajetória malformada (esperado objeto com 'steps')", individual)
        steps = []
        for t, raw in enumerate(item["steps"]):
            if not isinstance(raw, dict) or not isinstance(raw.get("state"), list):
                raise DataError("passo malformado (esperado objeto com 'state')", individual, t)
            if "t" in raw and _parse_int(raw["t"], "t", individual, t) != t:
                raise DataError(f"instante fora de ordem, esperado t={t}", individual, t)
            state_values = [_parse_float(v, "state", individual, t) for v in raw["state"]]
            steps.append(_parse_step(raw, state_values, n_actions, individual, t))
        terminal = item.get("terminal_state")
        if terminal is not None:
            terminal = np.asarray([_parse_float(v, "terminal_state", individual, len(steps)) for v in terminal])
        if state_dim is None and steps:
            state_dim = steps[0].state.shape[0]
        trajectories.append(Trajectory(individual, tuple(steps), terminal))
    return Dataset(tuple(trajectories), state_dim or 0, n_actions)


def load_dataset(path: str, format: Optional[str] = None, n_actions: int = 2) -> Dataset:
    """Lê um dataset CSV/JSON e devolve-o já validado.

    A ordem das linhas de cada indivíduo é a ordem temporal. Qualquer linha
    malformada, valor ausente ou fora de domínio gera DataError com o
    identificador do indivíduo e o instante.
    """
    fmt = _resolve_format(path, format)
    if not os.path.isfile(path):
        raise DataError(f"arquivo de dataset não encontrado: {path}")
    d = _read_csv(path, n_actions) if fmt == "csv" else _read_json(path, n_actions)
    if not d.trajectories:
        raise DataError(f"dataset sem trajetórias: {path}")
    validate_dataset(d).raise_for_failures()
    logger.debug("Dataset %s: n=%d, T=%d, p1=%d", path, d.n_individuals, d.horizon, d.state_dim)
    return d


def _fmt(value) -> str:
    # repr de float é o menor texto que reproduz exatamente o mesmo double
    return repr(float(value))


def save_dataset(d: Dataset, path: str, format: Optional[str] = None) -> None:
    fmt = _resolve_format(path, format)
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    if fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(list(CSV_FIXED_COLUMNS) + list(d.state_names))
            for tr in d.trajectories:
                for t, step in enumerate(tr.steps):
                    writer.writerow([tr.id, t, int(step.availability), step.action, _fmt(step.reward),
                                     _fmt(step.behavior_prob)] + [_fmt(v) for v in step.state])
                if tr.terminal_state is not None:
                    writer.writerow([tr.id, len(tr.steps), "", "", "", ""] + [_fmt(v) for v in tr.terminal_state])
    else:
        payload = []
        for tr in d.trajectories:
            payload.append({
                "id": tr.id,
                "steps": [
                    {"t": t, "state": [float(v) for v in step.state], "avail": step.availability,
                     "action": step.action, "reward": step.reward, "bprob": step.behavior_prob}
                    for t, step in enumerate(tr.steps)
                ],
                "terminal_state": None if tr.terminal_state is None else [float(v) for v in tr.terminal_state],
            })
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=1)
