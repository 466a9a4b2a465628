"""This module provides application names, environment variables and defaults shared across modules."""

APP_NAME = 'upsilon'

# Environment variable providing a default seed; the seed is always echoed in reports.
ENV_SEED = 'UPSILON_SEED'

SCHEMA_VERSION = 1

# Largest graph for which per-vertex neighbor bit-vectors are kept (one uint64 word).
BITSET_MAX_N = 64

DEFAULT_EXACT_CAP = 24
DEFAULT_HEIGHT_CAP = 64
DEFAULT_SLACK = 0.1
DEFAULT_MAX_ATTEMPTS = 10
DEFAULT_SPECTRAL_TOL = 1e-6
DEFAULT_SPECTRAL_MAX_ITER = 10_000

# Names of files in a serialized enemy-graph bundle directory.
BUNDLE_GRAPH_FILE = 'graph.edges'
BUNDLE_SIDECAR_FILE = 'bundle.json'

# Exit statuses of the command line interface.
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_CERTIFICATION = 4
