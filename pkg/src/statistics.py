import time
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

POLICY_KINDS = ("learned", "const", "oracle")


@dataclass(frozen=True)
class ResultRow:
    scenario: str
    sweep_value: float
    replication: int
    policy_kind: str
    eta: float


@dataclass(frozen=True)
class SummaryRow:
    sweep_value: float
    policy_kind: str
    count: int
    mean: float
    se: float
    p5: float
    p95: float


class ResultsTable:
    """η por replicação, valor da varredura e tipo de política."""

    COLUMNS = ("scenario", "sweep_value", "replication", "policy_kind", "eta")

    def __init__(self, scenario: str, sweep_name: str, rows: Optional[List[ResultRow]] = None):
        self.scenario = scenario
        self.sweep_name = sweep_name
        self.rows = list(rows or [])

    def add(self, sweep_value, replication: int, policy_kind: str, eta: float):
        if policy_kind not in POLICY_KINDS:
            raise ValueError(f"tipo de política desconhecido: {policy_kind}")
        self.rows.append(ResultRow(self.scenario, sweep_value, int(replication), policy_kind, float(eta)))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[ResultRow]:
        return iter(self.rows)

    @property
    def sweep_values(self) -> list:
        # Ordem de aparição
        return list(dict.fromkeys(row.sweep_value for row in self.rows))

    def values(self, sweep_value, policy_kind: str) -> np.ndarray:
        return np.array([row.eta for row in self.rows
                         if row.sweep_value == sweep_value and row.policy_kind == policy_kind])

    def summary(self) -> List[SummaryRow]:
        """Média, erro padrão e percentis 5 e 95 por (valor da varredura, política)."""
        out = []
        for sweep_value in self.sweep_values:
            for kind in POLICY_KINDS:
                etas = self.values(sweep_value, kind)
                if etas.size == 0:
                    continue
                se = float(etas.std(ddof=1) / np.sqrt(etas.size)) if etas.size > 1 else float("nan")
                p5, p95 = np.percentile(etas, [5, 95])
                out.append(SummaryRow(sweep_value, kind, int(etas.size), float(etas.mean()), se, float(p5), float(p95)))
        return out

    def records(self) -> List[dict]:
        return [row.__dict__.copy() for row in self.rows]


class ExperimentStatistics:
    def __init__(self):
        self.start_time = time.time()
        self.replications_done = 0
        self.replications_failed = 0
        self.failure_reasons = defaultdict(int)

    def add_success(self, count=1):
        self.replications_done += count

    def add_failure(self, reason, count=1):
        self.replications_failed += count
        self.failure_reasons[reason] += count

    @property
    def total(self):
        return self.replications_done + self.replications_failed

    def failure_rate(self):
        if self.total == 0:
            return 0.0
        return self.replications_failed / self.total

    def get_elapsed_time(self):
        return time.time() - self.start_time

    def get_average_time_per_replication(self):
        if self.total == 0:
            return 0
        return self.get_elapsed_time() / self.total


class ExperimentResult:
    """Encapsula o resultado de um experimento de Monte Carlo."""

    def __init__(self, table: ResultsTable, stats: ExperimentStatistics, was_interrupted=False):
        self.table = table
        self.stats = stats
        self.was_interrupted = was_interrupted
        self.elapsed_time = stats.get_elapsed_time()

    def successful(self):
        return not self.was_interrupted

    def display_statistics(self, visual_module, output_path=None):
        visual_module.render_experiment_statistics(
            self.table, self.stats.replications_done, self.stats.replications_failed,
            self.elapsed_time, self.stats.get_average_time_per_replication(),
            dict(self.stats.failure_reasons),
            None if self.was_interrupted else output_path
        )
        if self.was_interrupted:
            visual_module.print_error("\nInterrompido pelo usuário.")
