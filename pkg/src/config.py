# src/config.py
# Configurações centralizadas do toolkit ator–crítico

ARTIFACT_NAME = "mhealth-actor-critic"

# Dataset
DEFAULT_N_ACTIONS = 2              # Ações binárias: 0 = sem tratamento, 1 = tratamento
DEFAULT_DATA_FORMAT = "csv"

# Features do crítico (MARS com nós fixos nos decis)
N_KNOTS = 10                       # Decis amostrais por componente do estado
DEFAULT_PRUNE_THRESHOLD = 0.8      # Descarta funções nulas em mais de 80% dos estados

# Crítico
DEFAULT_LAMBDA_GRID = tuple(10.0 ** k for k in range(-6, 3))   # 1e-6 … 1e2, 9 pontos
DEFAULT_CV_FOLDS = 2               # Validação cruzada em 2 partes, como nos experimentos
DEFAULT_FOLD_SEED = 0
CRITIC_RESIDUAL_TOL = 1e-8         # Tolerância relativa do resíduo das equações normais
SINGULAR_CONDITION = 1e14          # Acima disso a matriz normal é tratada como singular
CV_TIE_TOL = 1e-10                 # Empates na validação cruzada favorecem o maior λ

# Otimizador (BFGS com gradiente por diferenças finitas)
DEFAULT_MAX_ITERATIONS = 200
DEFAULT_GRADIENT_STEP = 1e-4
DEFAULT_CONVERGENCE_TOL = 1e-6
DEFAULT_N_RESTARTS = 10
DEFAULT_RESTART_SCALE = 1.0
ARMIJO_C1 = 1e-4                   # Condição de aumento suficiente
MAX_BACKTRACKS = 60

# Ator
DEFAULT_P0 = 0.05                  # Probabilidade mínima de cada ação
DEFAULT_ALPHA = 0.05               # Folga da restrição de estocasticidade
DEFAULT_LAMBDA_A_MIN = 0.0
DEFAULT_DELTA_FACTOR = 0.1         # Δ = 0.1 · (|J(0)| + 1) quando não informado
DEFAULT_MAX_PENALTY_ROUNDS = 100

# Modelo gerador
DEFAULT_P1 = 3
DEFAULT_TAU = 0.4
DEFAULT_MU1 = 0.6                  # Política de comportamento: trata com probabilidade 0.6
DEFAULT_REWARD_FORM = "product"
AR_RHO = 0.5                       # Covariância AR(0.5) do estado inicial
DEFAULT_N = 25
DEFAULT_T = 25

# Avaliação por rollout
DEFAULT_HORIZON = 10000
DEFAULT_BURN_IN = 1000             # Média das últimas 9.000 recompensas
SE_BATCHES = 30                    # Lotes para o erro padrão por médias em lote

# Política ótima de referência (penalidade exata)
ORACLE_PENALTY_FACTOR = 100.0      # c = 100 × escala das recompensas observadas
ORACLE_REFERENCE_N = 200           # Trajetórias de comportamento para estimar a fração
ORACLE_GRADIENT_STEP = 0.05        # Passo maior: o rollout com números aleatórios comuns é por partes
ORACLE_N_RESTARTS = 4

# Experimentos de Monte Carlo
MAX_FAILURE_RATE = 0.2
SCALES = {
    "desk": {"replications": 20},
    "full": {"replications": 100},
}

# Cenários: varredura e colunas da política (índices base 0 das componentes do estado)
SCENARIOS = {
    "S1": {
        "description": "efeito do burden τ, p1 = 3, q = 4",
        "sweep": "tau",
        "values": {"desk": (0.2, 0.4, 0.6), "full": (0.2, 0.3, 0.4, 0.5, 0.6)},
        "p1": 3, "tau": None, "policy_columns": "structural", "omitted": None,
    },
    "S2": {
        "description": "variáveis de ruído só no crítico, τ = 0.4, q = 4",
        "sweep": "p1",
        "values": {"desk": (3, 6, 10), "full": tuple(range(3, 11))},
        "p1": None, "tau": 0.4, "policy_columns": "structural", "omitted": None,
    },
    "S3": {
        "description": "variáveis de ruído no crítico e na política, τ = 0.4, q = p1 + 1",
        "sweep": "p1",
        "values": {"desk": (3, 6, 10), "full": tuple(range(3, 11))},
        "p1": None, "tau": 0.4, "policy_columns": "all", "omitted": None,
    },
    "S4": {
        "description": "uma variável omitida da política, p1 = 3, τ = 0.4, q = 3",
        "sweep": "omitted",
        "values": {"desk": (0, 3), "full": (0, 1, 2, 3)},   # 0 = nenhuma omitida
        "p1": 3, "tau": 0.4, "policy_columns": "structural", "omitted": None,
    },
}
STRUCTURAL_COLUMNS = (0, 1, 2)     # S_{t,1}, S_{t,2}, S_{t,3}

# Saídas
DEFAULT_OUTPUT_DIR = "runs"
