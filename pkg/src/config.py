"""
Configuration Module - Tolerances, search budgets and CLI defaults
Every value can be overridden from the environment (or a .env file) with the OSLOCAL_ prefix
"""
import os
from dotenv import load_dotenv

load_dotenv()

ENV_PREFIX = 'OSLOCAL_'


def _env(name: str, default: str) -> str:
    return os.getenv(f'{ENV_PREFIX}{name}', default)


# Linear algebra tolerances
RANK_TOL = float(_env('RANK_TOL', '1e-10'))       # smallest Gram eigenvalue / largest
PSD_TOL = float(_env('PSD_TOL', '1e-10'))         # scaled by (1 + trace)

# Superoperator norm (power iteration on M^dagger M)
POWER_RTOL = 1e-12
POWER_MAX_ITER = 10_000
POWER_SEED = 20240601
SVD_DIMENSION_CUTOFF = 64   # full SVD when the smaller side of M is at most this

# PSD-restricted alternating maximization
PSD_RESTARTS = int(_env('PSD_RESTARTS', '32'))
PSD_MAX_ITER = 10_000
PSD_STALL_WINDOW = 50
PSD_STALL_RTOL = 1e-9

# Tuple ascent (lower bounds on pi_{2,oh})
ASCENT_RESTARTS = int(_env('RESTARTS', '32'))
ASCENT_ITERATIONS = int(_env('ITERATIONS', '2000'))
ASCENT_STEP = 0.1
ASCENT_BACKTRACK = 40
ASCENT_STALL_RTOL = 1e-12
ASCENT_STALL_STEPS = 25
TIE_RTOL = 1e-7

# Certificates (column generation over (y, z) atoms)
MAX_ATOMS = 64
ATOM_PRUNE = 1e-10
CERT_EIG_TOL = 1e-8
CERT_ROUNDS = 12
CERT_STALL_RTOL = 1e-6

# Factorization / distances
DISTANCE_RESTARTS = int(_env('DISTANCE_RESTARTS', '16'))
LEWIS_MAX_ROUNDS = int(_env('LEWIS_MAX_ROUNDS', '200'))
LEWIS_STALL_ROUNDS = 10
LEWIS_RTOL = 1e-6
PINV_CUTOFF = 1e-12
AMPLIFICATION_MAX_LEVEL = 4
AMPLIFICATION_RESTARTS = 16
AMPLIFICATION_ITERATIONS = 200

# Report policy
EXACT_SLACK = 1e-6          # absolute slack for exact constructions
HEURISTIC_BAND = 0.05       # relative band for heuristic searches
SCHEMA_VERSION = 1

# CLI defaults (flags fall back to these; env overrides apply first)
DEFAULT_SEED = int(_env('SEED', '0'))
DEFAULT_K = _env('K', '')
DEFAULT_N = int(_env('N', '3'))
DEFAULT_SPACE = _env('SPACE', 'row')
DEFAULT_TOL = float(_env('TOL', '1e-6'))
DEFAULT_LEVEL = _env('LEVEL', '')
DEFAULT_FORMAT = _env('FORMAT', 'pretty')
DEFAULT_OUT = _env('OUT', '')
DEFAULT_WORKERS = int(_env('WORKERS', '1'))
LEDGER_PATH = _env('LEDGER', '')
LOG_LEVEL = _env('LOG_LEVEL', 'WARNING')

# paper-table command budgets (kept small so nmax = 5 runs in well under a minute)
PAPER_TABLE_NMAX = 5
PAPER_TABLE_RESTARTS = int(_env('PAPER_TABLE_RESTARTS', '3'))
PAPER_TABLE_ITERATIONS = int(_env('PAPER_TABLE_ITERATIONS', '200'))
PAPER_TABLE_PSD_RESTARTS = int(_env('PAPER_TABLE_PSD_RESTARTS', '8'))
PAPER_TABLE_CERT_ROUNDS = int(_env('PAPER_TABLE_CERT_ROUNDS', '4'))

MODEL_KINDS = ('row', 'column', 'oh', 'clifford')
SPACE_LABELS = ('generic',) + MODEL_KINDS
OUTPUT_FORMATS = ('json', 'csv', 'pretty')
