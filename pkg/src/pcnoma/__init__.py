"""Polar-coded NOMA link-level toolkit.

Factor graphs and detecting-order scheduling, message passing detection,
mutual-information driven polar code construction, the JSC/PSC receiver
chains and a reproducible Monte-Carlo BLER driver.
"""

from .factor_graph import FactorGraph, get_graph
from .noma_phy import NomaSystem, default_system
from .simulation import SimConfig, __version__, run_bler

__all__ = ["FactorGraph", "NomaSystem", "SimConfig", "__version__", "default_system", "get_graph", "run_bler"]
