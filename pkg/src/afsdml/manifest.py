"""Run manifests: everything needed to audit or reproduce an output set.

A manifest records the tool version, the resolved configuration hash, the
fully resolved alloy properties (so non-tabulated, config-supplied constants
are auditable), all seeds, and a sha256 digest per emitted file.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

from .fileio import atomic_write_text, sha256_of_file


def write_manifest(
    path,
    *,
    command: str,
    config_hash: str | None = None,
    seeds: dict | None = None,
    alloys: dict | None = None,
    outputs: dict | None = None,
    extra: dict | None = None,
) -> dict:
    """Write the manifest JSON and return it. `outputs` maps labels to file
    paths; digests are computed from the files as written."""
    from . import __version__

    doc = {
        "tool": "afsdml",
        "version": __version__,
        "command": command,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config_hash": config_hash,
        "seeds": seeds or {},
        "alloys": alloys or {},
        "outputs": {
            label: {"path": str(p), "sha256": sha256_of_file(p)}
            for label, p in (outputs or {}).items()
        },
    }
    if extra:
        doc.update(extra)
    atomic_write_text(Path(path), json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc
