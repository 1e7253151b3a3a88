"""Analysis and simulation of beacon-less IEEE 802.15.4 multi-hop tree networks."""

from .config import ConfigError, RunConfig, bundled, load_config, parse_config
from .qna import qna_sweep
from .simulator import SimConfig, replicate, run
from .solver import SolverOptions, solve
from .timing import MacParams
from .topology import NetworkSpec, NodeSpec

__version__ = "0.1.0"
__all__ = ["ConfigError", "MacParams", "NetworkSpec", "NodeSpec", "RunConfig", "SimConfig",
           "SolverOptions", "bundled", "load_config", "parse_config", "qna_sweep",
           "replicate", "run", "solve"]
