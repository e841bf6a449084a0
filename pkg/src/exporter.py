import csv
import json

from src.actor import ActorTrace
from src.critic import CriticFit
from src.policy import PolicyParams
from src.statistics import ResultsTable

TRACE_COLUMNS = ("round", "lambda_a", "lambda_c", "J", "penalized", "fraction")
SUMMARY_COLUMNS = ("scenario", "sweep_value", "policy_kind", "count", "mean", "se", "p5", "p95")


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, ensure_ascii=False)
        f.write("\n")


def export_policy(policy: PolicyParams, path: str, critic_fit: CriticFit = None):
    """
    Escreve a política (θ com coeficientes nomeados) em JSON, com o resumo do crítico
    em θ̂ quando disponível.
    """
    payload = policy.to_json()
    if critic_fit is not None:
        payload["critic"] = critic_fit.to_json()
    _write_json(payload, path)


def export_critic_fit(fit: CriticFit, path: str, include_v: bool = False):
    _write_json(fit.to_json(include_v), path)


def export_trace(trace: ActorTrace, path: str):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in trace.rows:
            writer.writerow([row.round, repr(row.lambda_a), repr(row.lambda_c), repr(row.J),
                             repr(row.penalized), repr(row.fraction)])


def export_results(table: ResultsTable, path: str):
    # Uma linha por (varredura, replicação, política)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(ResultsTable.COLUMNS)
        for row in table:
            writer.writerow([row.scenario, row.sweep_value, row.replication, row.policy_kind, repr(row.eta)])


def export_summary(table: ResultsTable, path: str):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for row in table.summary():
            writer.writerow([table.scenario, row.sweep_value, row.policy_kind, row.count,
                             repr(row.mean), repr(row.se), repr(row.p5), repr(row.p95)])


def export_eta_report(report: dict, path: str):
    _write_json(report, path)
