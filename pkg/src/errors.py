# Hierarquia de exceções do toolkit e os códigos de saída usados pela CLI

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class ActorCriticError(Exception):
    """Erro base do toolkit."""
    exit_code = EXIT_CONFIG


class ConfigError(ActorCriticError):
    """Configuração inválida (arquivo, flags ou parâmetros de dataclass)."""
    exit_code = EXIT_CONFIG


class DataError(ActorCriticError):
    """Falha ao ler ou validar um dataset."""
    exit_code = EXIT_DATA

    def __init__(self, message, individual=None, time_index=None):
        # Sempre que possível o erro aponta o indivíduo e o instante de decisão
        location = []
        if individual is not None:
            location.append(f"indivíduo {individual}")
        if time_index is not None:
            location.append(f"t={time_index}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.individual = individual
        self.time_index = time_index


class NumericalError(ActorCriticError):
    exit_code = EXIT_NUMERICAL


class PolicyError(NumericalError):
    """θ^Tφ não finito."""


class CriticError(NumericalError):
    """Sistema do crítico singular ou mal dimensionado."""


class OptimError(NumericalError):
    """Falha do otimizador (ponto de prova não finito, busca linear)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class ActorError(NumericalError):
    """O laço de penalização excedeu o número máximo de rodadas."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ExperimentError(NumericalError):
    """Muitas replicações de Monte Carlo falharam."""

    def __init__(self, message, table=None):
        super().__init__(message)
        self.table = table
