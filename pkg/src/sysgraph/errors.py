"""Exception hierarchy shared by all sysgraph modules."""

from __future__ import annotations


class SysGraphError(Exception):
    """Base class for every error raised by sysgraph."""


class ParseError(SysGraphError):
    """Input bytes could not be decoded (bad JSON, bad XML, bad graph file)."""

    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class IrError(SysGraphError):
    """A ModelIR document violates one of its invariants."""


class IrReferenceError(IrError):
    def __init__(self, ref: str, message: str):
        self.ref = ref
        super().__init__(message)


class IrDuplicateError(IrError):
    def __init__(self, ref: str, message: str):
        self.ref = ref
        super().__init__(message)


class XmiElementError(SysGraphError):
    """A recognized XMI element lacks a mandatory attribute."""

    def __init__(self, xmi_id: str | None, message: str):
        self.xmi_id = xmi_id
        super().__init__(f"{message} (xmi:id={xmi_id})")


class GraphError(SysGraphError):
    """Invalid graph mutation or query."""


class DuplicateIdError(GraphError):
    pass


class SchemaViolation(GraphError):
    """A node label or edge endpoint combination is outside the schema."""


class UnknownNodeError(GraphError):
    pass


class AnalysisError(SysGraphError):
    """Domain-level failure of an analysis (exit status 1 on the CLI)."""


class UnknownNameError(AnalysisError):
    def __init__(self, name: str, what: str = "node"):
        self.name = name
        super().__init__(f"unknown {what} {name!r}")


class AmbiguousNameError(AnalysisError):
    def __init__(self, name: str, candidates: list[str], what: str = "node"):
        self.name = name
        self.candidates = candidates
        super().__init__(
            f"ambiguous {what} name {name!r}; candidates by id: {', '.join(candidates)}"
        )


class NoUpstreamFuseError(AnalysisError):
    def __init__(self, component: str):
        super().__init__(f"no upstream fuse for component {component!r}")


class CapabilityError(AnalysisError):
    """The model lacks information an analysis depends on (see lint rules)."""
