import argparse
import sys

from src import commands
from src import config
from src import visual
from src.errors import EXIT_CONFIG, EXIT_OK, ActorCriticError
from src.runconfig import load_run_config


def build_parser():
    # Flags comuns a todos os comandos; sobrescrevem os valores do arquivo de configuração
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", "-c", help="Arquivo JSON de configuração da execução")
    common.add_argument("--seed", "-s", type=int, help="Semente global (padrão: a do arquivo, ou 0)")
    common.add_argument("--jobs", "-j", type=int, help="Máximo de replicações simultâneas (padrão: 1)")
    common.add_argument("--out", "-o", help=f"Diretório de saída (padrão: {config.DEFAULT_OUTPUT_DIR}/)")
    common.add_argument("--verbose", "-v", action="store_true", help="Mostrar saída verbosa (logs de depuração)")

    parser = argparse.ArgumentParser(description="Ator–crítico em lote e fora da política para intervenções mHealth")
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", parents=[common], help="Gerar um dataset com o modelo gerador")
    simulate.add_argument("--format", "-f", choices=("csv", "json"), default=config.DEFAULT_DATA_FORMAT,
                          help=f"Formato do dataset (padrão: {config.DEFAULT_DATA_FORMAT})")

    subparsers.add_parser("train", parents=[common], help="Aprender uma política com o algoritmo ator–crítico")

    evaluate = subparsers.add_parser("evaluate", parents=[common], help="Estimar η^π de uma política por rollout")
    evaluate.add_argument("policy", help=f"Arquivo JSON da política, ou um de: {', '.join(commands.NAMED_POLICIES)}")

    reproduce = subparsers.add_parser("reproduce", parents=[common], help="Rodar um experimento de Monte Carlo")
    reproduce.add_argument("scenario", help=f"Cenário: {', '.join(config.SCENARIOS)}")
    reproduce.add_argument("scale", nargs="?", default="desk", help=f"Escala: {', '.join(config.SCALES)} (padrão: desk)")
    reproduce.add_argument("--replications", "-r", type=int, help="Substitui o número de replicações da escala")
    return parser


def run(args):
    cfg = load_run_config(args.config, {"seed": args.seed, "jobs": args.jobs, "output_dir": args.out})
    visual.print_configurations(args.command, cfg)
    if args.command == "simulate":
        commands.cmd_simulate(cfg, args.format)
    elif args.command == "train":
        commands.cmd_train(cfg)
    elif args.command == "evaluate":
        commands.cmd_evaluate(cfg, args.policy)
    elif args.command == "reproduce":
        commands.cmd_reproduce(cfg, args.scenario, args.scale, args.replications)


def main(argv=None):
    args = build_parser().parse_args(argv)
    visual.setup_logging(args.verbose)
    visual.print_main_header()

    try:
        run(args)
        visual.print_success("Processo concluído com sucesso!")
        return EXIT_OK
    except ActorCriticError as e:
        visual.print_error(f"Erro: {e}")
        return e.exit_code
    except KeyboardInterrupt:
        visual.print_error("\nInterrompido pelo usuário.")
        return EXIT_CONFIG
    except Exception as e:
        visual.print_error(f"Erro durante a execução: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
