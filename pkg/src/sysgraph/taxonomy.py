"""Names of the classification blocks that the power and telemetry analyses rely on."""

from __future__ import annotations

import os
from dataclasses import dataclass


@dataclass(frozen=True)
class Taxonomy:
    physical: str = "physical flowitem"
    fuse: str = "electrical fuse"
    data: str = "data"

    @classmethod
    def from_env(cls, environ: dict[str, str] | None = None) -> "Taxonomy":
        env = os.environ if environ is None else environ
        base = cls()
        return cls(
            physical=env.get("SYSGRAPH_CLASS_PHYSICAL") or base.physical,
            fuse=env.get("SYSGRAPH_CLASS_FUSE") or base.fuse,
            data=env.get("SYSGRAPH_CLASS_DATA") or base.data,
        )
