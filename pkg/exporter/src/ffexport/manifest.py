"""Provenance sidecar written next to every exported file."""

from __future__ import annotations

from dataclasses import dataclass, field

from .serialize import write_json

__all__ = ["ExportManifest"]


@dataclass(frozen=True)
class ExportManifest:
    """What was exported, from where, and what was left behind.

    ``dropped`` lists every component that was skipped instead of exported
    (training-harness metadata, no-op modules).  Anything whose removal
    would change the computed function is never dropped; it aborts the
    export instead.  No timestamps: two exports of the same source must
    produce byte-identical files.
    """

    kind: str
    source_framework: str
    source_digest: str | None
    shapes: tuple = ()
    dropped: tuple = ()
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("weights", "dataset"):
            raise ValueError(f"kind must be 'weights' or 'dataset', got {self.kind!r}")

    def to_dict(self) -> dict:
        doc = {
            "kind": self.kind,
            "source_framework": self.source_framework,
            "source_digest": self.source_digest,
            "shapes": [[int(r), int(c)] for r, c in self.shapes],
            "dropped": list(self.dropped),
        }
        doc.update(self.extra)
        return doc

    def write(self, exported_path) -> str:
        sidecar = f"{exported_path}.manifest.json"
        write_json(self.to_dict(), sidecar)
        return sidecar
