"""Extraction manifest: inputs, tool backends, outputs with checksums."""

from __future__ import annotations

import hashlib
import json
import sys
from pathlib import Path


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


class ExtractionManifest:
    def __init__(self, transcript_path: str | Path):
        self.transcript_path = str(transcript_path)
        self.transcript_sha256 = sha256_file(transcript_path)
        self.tools: dict[str, str] = {"python": sys.version.split()[0]}
        self.outputs: list[dict] = []

    def record_tool(self, role: str, backend: str) -> None:
        self.tools[role] = backend

    def record_output(self, path: str | Path, **extra) -> None:
        entry = {"path": Path(path).name, "sha256": sha256_file(path)}
        entry.update(extra)
        self.outputs.append(entry)

    def dumps(self) -> str:
        return json.dumps(
            {
                "transcript": {
                    "path": self.transcript_path,
                    "sha256": self.transcript_sha256,
                },
                "tools": self.tools,
                "outputs": self.outputs,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps())

    @staticmethod
    def verify(manifest_path: str | Path) -> list[str]:
        """Return the names of outputs whose checksum no longer matches."""
        manifest_path = Path(manifest_path)
        payload = json.loads(manifest_path.read_text())
        stale = []
        for entry in payload["outputs"]:
            target = manifest_path.parent / entry["path"]
            if not target.exists() or sha256_file(target) != entry["sha256"]:
                stale.append(entry["path"])
        return stale
