"""Turn SysML models into a property graph and query it."""

from .errors import SysGraphError
from .export import ExportOptions, import_graph_json
from .graph_store import PropertyGraph
from .lint import lint_model
from .model_ir import ModelIR, parse_model_json, serialize_model_json, validate_ir
from .taxonomy import Taxonomy
from .transform import transform
from .xmi_ingest import parse_xmi

__version__ = "0.1.0"

__all__ = [
    "ExportOptions", "ModelIR", "PropertyGraph", "SysGraphError", "Taxonomy",
    "import_graph_json", "lint_model", "parse_model_json", "parse_xmi", "serialize_model_json",
    "transform", "validate_ir",
]
