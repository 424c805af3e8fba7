"""LTE random access with q-ary tree-splitting collision resolution.

Simulator, closed-form model and sweep harness for massive synchronous
M2M arrivals.
"""

from rachtree.config import SchemeConfig, SystemConfig, Scheme, validate_config
from rachtree.engine.simulator import RunTrace, run_scenario
from rachtree.metrics import RunMetrics, aggregate, pool

__all__ = [
    "Scheme",
    "SchemeConfig",
    "SystemConfig",
    "validate_config",
    "RunTrace",
    "run_scenario",
    "RunMetrics",
    "aggregate",
    "pool",
]

__version__ = "0.1.0"
