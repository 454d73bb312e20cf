"""Exact ride-request dispatching over (customizable) contraction hierarchies."""
from .baseline import BaselineEngine
from .buckets import BucketIndex
from .cch import CustomizableHierarchy
from .ch import build_ch, load_hierarchy
from .dispatch import Decision, EngineOptions, LoudEngine
from .fleet import CostParameters, Fleet, Request, Vehicle
from .graph import INF, Location, PathDescription, RoadNetwork, load_network, parse_network
from .instance import Instance, generate_instance, load_instance, write_instance
from .sim import ENGINES, SimResult, Simulation, simulate

__all__ = [
    "BaselineEngine", "BucketIndex", "CostParameters", "CustomizableHierarchy", "Decision", "ENGINES",
    "EngineOptions", "Fleet", "INF", "Instance", "Location", "LoudEngine", "PathDescription", "Request",
    "RoadNetwork", "SimResult", "Simulation", "Vehicle", "build_ch", "generate_instance", "load_hierarchy",
    "load_instance", "load_network", "parse_network", "simulate", "write_instance",
]
