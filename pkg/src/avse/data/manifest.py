"""Line-delimited JSON manifests naming the files of each scene."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

from avse.errors import ManifestError

_REQUIRED = ("id", "target_path", "interferer_path", "frames_path", "snr_db")


@dataclass
class ManifestEntry:
    """Paths and mixing SNR for one scene."""

    id: str
    target_path: str
    interferer_path: str
    frames_path: str
    snr_db: float


def load_manifest(path) -> list[ManifestEntry]:
    """Parse one JSON object per line; relative paths resolve against the
    manifest's own directory."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ManifestError(0, f"cannot read {path}: {exc}") from exc
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(line_no, f"invalid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ManifestError(line_no, "entry is not a JSON object")
        for field in _REQUIRED:
            if field not in raw:
                raise ManifestError(line_no, f"missing field {field!r}")
        for field in ("id", "target_path", "interferer_path", "frames_path"):
            value = raw[field]
            if not isinstance(value, str) or not value:
                raise ManifestError(line_no, f"field {field!r} must be a non-empty string")
        snr = raw["snr_db"]
        if isinstance(snr, bool) or not isinstance(snr, (int, float)) or not math.isfinite(snr):
            raise ManifestError(line_no, f"field 'snr_db' must be a finite number, got {snr!r}")
        entries.append(
            ManifestEntry(
                id=raw["id"],
                target_path=os.path.join(base, raw["target_path"]),
                interferer_path=os.path.join(base, raw["interferer_path"]),
                frames_path=os.path.join(base, raw["frames_path"]),
                snr_db=float(snr),
            )
        )
    return entries
