import logging

from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn, BarColumn, TimeElapsedColumn, TimeRemainingColumn
from rich.table import Table

from src.utils import format_duration

# Inicializa o console compartilhado para exibição
console = Console()


# Encaminha o logging das bibliotecas para o console do rich
def setup_logging(verbose=False):
    handler = RichHandler(console=console, show_path=verbose, rich_tracebacks=True, markup=False)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format="%(message)s",
                        datefmt="[%X]", handlers=[handler], force=True)


# Cria e configura a barra de progresso das replicações
def create_progress():
    progress = Progress(
        SpinnerColumn(),  # Ícone de carregamento
        TextColumn("[bold blue]{task.description}"),  # Descrição da tarefa
        BarColumn(bar_width=50, complete_style="green", finished_style="green"),  # Barra de progresso
        TextColumn("[bold]{task.completed}/{task.total}"),  # Texto com contagem
        TextColumn("{task.percentage:>3.1f}%"),  # Percentual de conclusão
        TimeElapsedColumn(),
        "[cyan]ETA:[/]",  # Rótulo para ETA
        TimeRemainingColumn(),  # Coluna com tempo restante
        console=console,
        transient=True,  # A barra desaparece ao término
        refresh_per_second=5
    )
    return progress


# Estilo para erro
def print_error(message):
    console.print(f"[bold red]{message}[/bold red]")


# Estilo para sucesso
def print_success(message):
    console.print(f"[bold green]{message}[/bold green]")


# Cabeçalho principal do programa
def print_main_header():
    console.print("\n[bold blue]📈 mHealth Actor–Critic[/bold blue]", justify="center")


# Configurações utilizadas no comando
def print_configurations(command, cfg):
    console.print("[bold cyan]⚙️  Configurações:[/bold cyan]")
    console.print(f"▶️  Comando:         [cyan]{command}[/cyan]")
    console.print(f"🎲 Semente:         [cyan]{cfg.seed}[/cyan]")
    if cfg.data_path:
        console.print(f"📥 Dataset:         [cyan]{cfg.data_path}[/cyan]")
    if cfg.simulation is not None:
        details = ", ".join(f"{k}={v}" for k, v in cfg.simulation.items())
        console.print(f"🧪 Simulação:       [cyan]{details}[/cyan]")
    console.print(f"🎯 p0 / α:          [cyan]{cfg.actor.p0} / {cfg.actor.alpha}[/cyan]")
    console.print(f"🧵 Processos:       [cyan]{cfg.jobs}[/cyan]")
    console.print(f"📤 Saída:           [cyan]{cfg.output_dir}[/cyan]\n")


# Resumo do dataset carregado ou gerado
def print_dataset_info(d, path=None, size=None):
    where = f" de [magenta]{path}[/] ([cyan]{size}[/])" if path else ""
    console.print(f"Dataset{where}: [cyan]{d.n_individuals}[/] indivíduos × [cyan]{d.horizon + 1}[/] "
                  f"pontos de decisão, p1 = [cyan]{d.state_dim}[/]"
                  f"{', com estados terminais' if d.has_terminal_states else ''}")


# Coeficientes da política aprendida e probabilidades de tratamento
def render_policy(policy, fraction=None):
    table = Table(box=None, show_header=True, width=60)
    table.add_column("Variável", style="bold cyan", justify="left")
    table.add_column("Coeficiente", justify="right")
    for name, value in policy.coefficients().items():
        table.add_row(name, f"{value:.2f}")
    subtitle = f"fração estocástica = {fraction:.3f}" if fraction is not None else None
    console.print(Panel(table, title="[bold green]Política Estimada[/]", subtitle=subtitle,
                        border_style="green", padding=(1, 1), width=64, title_align="center"))


# Trajetória do laço de penalização do ator
def render_trace(trace):
    table = Table(show_header=True, width=76)
    table.add_column("Rodada", justify="center")
    table.add_column("λ_a", justify="right")
    table.add_column("λ_c", justify="right")
    table.add_column("J(θ̂)", justify="right")
    table.add_column("Fração", justify="right")
    for row in trace.rows:
        table.add_row(str(row.round), f"{row.lambda_a:.4g}", f"{row.lambda_c:.1e}", f"{row.J:.4f}", f"{row.fraction:.3f}")
    console.print(table)


def print_eta_report(eta, se, policy_kind):
    console.print(f"η^π ({policy_kind}) = [bold cyan]{eta:.4f}[/] ± [cyan]{se:.4f}[/] (erro padrão por lotes)")


# Renderiza as estatísticas finais de um experimento de Monte Carlo
def render_experiment_statistics(table, done, failed, total_time, average_time, failure_reasons, output_path=None):
    print_end_stats(table.scenario, done, failed)
    print_performance_stats(total_time, average_time, done + failed)
    if failed > 0:
        print_failure_reasons(failure_reasons, failed)
    if len(table) > 0:
        print_summary(table)
    if output_path:
        print_output_file_info(output_path)


# Painel com replicações concluídas e falhas
def print_end_stats(scenario, done, failed):
    stats_panel = Panel(
        f"[bold cyan]Cenário:[/] [white]{scenario}[/]  •  "
        f"[bold green]Replicações concluídas:[/] [white]{done}[/]  •  "
        f"[bold red]Falhas:[/] [white]{failed}[/]",
        title="[bold cyan]Estatísticas do Experimento[/]",
        border_style="cyan",
        padding=(1, 2),
        width=80,
        title_align="center"
    )
    console.print(stats_panel)


def print_performance_stats(total_time, average_time, total):
    perf_table = Table(box=None, show_header=False, width=76)
    perf_table.add_column("Métrica", style="bold cyan", justify="right", width=40)
    perf_table.add_column("Valor", style="white", justify="left")
    perf_table.add_row("Tempo total:", format_duration(total_time))
    perf_table.add_row("Tempo médio por replicação:", f"{average_time:.2f}s")
    perf_table.add_row("Replicações:", str(total))
    console.print(Panel(perf_table, title="[bold blue]Desempenho[/]", border_style="blue",
                        padding=(1, 1), width=80, title_align="center"))


# Painel dos motivos de falha (classe do erro)
def print_failure_reasons(failure_reasons, failed):
    reasons_table = Table(box=None, show_header=True, width=76)
    reasons_table.add_column("Motivo", style="bold", justify="left")
    reasons_table.add_column("Quantidade", justify="center")
    reasons_table.add_column("Porcentagem", justify="right")
    for reason, count in sorted(failure_reasons.items(), key=lambda x: x[1], reverse=True):
        reasons_table.add_row(reason, str(count), f"{count / failed * 100:.1f}%", style="red")
    console.print(Panel(reasons_table, title="[bold red]Falhas[/]", border_style="red",
                        padding=(1, 1), width=80, title_align="center"))


# Média, erro padrão e percentis 5/95 por valor da varredura e política
def print_summary(table):
    summary_table = Table(box=None, show_header=True, width=76)
    summary_table.add_column(table.sweep_name, style="bold", justify="center")
    summary_table.add_column("Política", justify="left")
    summary_table.add_column("Média η", justify="right")
    summary_table.add_column("EP", justify="right")
    summary_table.add_column("P5", justify="right")
    summary_table.add_column("P95", justify="right")
    styles = {"learned": "green", "const": "yellow", "oracle": "cyan"}
    for row in table.summary():
        summary_table.add_row(str(row.sweep_value), row.policy_kind, f"{row.mean:.4f}", f"{row.se:.4f}",
                              f"{row.p5:.4f}", f"{row.p95:.4f}", style=styles.get(row.policy_kind, "white"))
    console.print(Panel(summary_table, title="[bold green]Average Reward por Política[/]", border_style="green",
                        padding=(1, 1), width=80, title_align="center"))


# Exibe a informação do arquivo de saída
def print_output_file_info(output_path):
    console.print(f"\n[bold blue]Resultados salvos em:[/] [magenta]{output_path}[/]")
