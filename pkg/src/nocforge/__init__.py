"""Cycle-accurate network-on-chip construction and simulation kit."""

from .kernel import ModuleDescriptor, Netlist, QueryNode, Simulator, UpdateNode, elaborate, step
from .router import Flit, Router, RouterConfig, make_router
from .topology import TopologySpec, build_topology

__version__ = "0.1.0"

__all__ = [
    "Flit", "ModuleDescriptor", "Netlist", "QueryNode", "Router", "RouterConfig", "Simulator",
    "TopologySpec", "UpdateNode", "build_topology", "elaborate", "make_router", "step",
]
