"""Structural and behavioral analyses over a transformed model graph."""

from .behavioral import (
    activity_routes, conditions_into_state, lost_outputs, object_usage, state_paths,
    unreachable_states,
)
from .common import ANALYSES, NodeRef
from .structural import (
    add_volatile_flows, anomaly_suggestions, datapath, fault_candidates, parts_of, port_census,
    power_source_of, remove_volatile_flows, short_fallout, type_queries, volatile_flows,
)

__all__ = [
    "ANALYSES", "NodeRef", "activity_routes", "add_volatile_flows", "anomaly_suggestions",
    "conditions_into_state", "datapath", "fault_candidates", "lost_outputs", "object_usage",
    "parts_of", "port_census", "power_source_of", "remove_volatile_flows", "short_fallout",
    "state_paths", "type_queries", "unreachable_states", "volatile_flows",
]
