"""Packet-level datacenter network simulator with RDMA transports.

Core pieces: a deterministic event engine (simcore), sequence bitmaps
(bitmap), selective-retransmit and go-back-N transports (transport_irn,
transport_gbn), pluggable congestion control (ccontrol), fat-tree
fabrics with pause-capable switches (fabric), traffic generation
(workload), flow metrics and CSV schemas (metrics), remote-operation
queue-pair semantics (verbs), and the run orchestration (runner) with
its INI-driven command line (cli).
"""

from .config import (CcConfig, ConfigError, Resolved, RunConfig,
                     TopologyConfig, TransportConfig, WorkloadConfig)
from .metrics import FlowRecord, Summary, aggregate, ideal_fct_ns, ratio_table
from .runner import Run, RunResult, run_config

__version__ = "0.1.0"

__all__ = [
    "CcConfig", "ConfigError", "Resolved", "RunConfig", "TopologyConfig",
    "TransportConfig", "WorkloadConfig", "FlowRecord", "Summary",
    "aggregate", "ideal_fct_ns", "ratio_table", "Run", "RunResult",
    "run_config", "__version__",
]
