"""Run manifests and data emission.

Every run writes its data files through a staging step: content goes to a
temporary path, checksums are computed, the manifest is written, and only
then are the data files moved to their final names.  The manifest therefore
always describes exactly the files that exist, and each emitted file is
referenced by exactly one manifest.

The scan CSV carries a wall-time column, which is inherently nonreproducible;
the manifest therefore also records a deterministic checksum computed with
that column masked, and reproducibility claims refer to it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

NONDETERMINISTIC_COLUMNS = ("wall_time_s",)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header, rows) -> str:
    """CSV text: header row mandatory, LF line endings, full-precision floats."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def render_gnuplot(header, rows) -> str:
    """Whitespace-separated plot data with a commented header line."""
    lines = ["# " + " ".join(header)]
    for row in rows:
        lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def masked_csv_checksum(text: str, masked_columns=NONDETERMINISTIC_COLUMNS) -> str:
    """Checksum of a CSV with the named columns blanked out."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        return sha256_text("")
    header = rows[0]
    idx = [i for i, name in enumerate(header) if name in masked_columns]
    for row in rows[1:]:
        for i in idx:
            if i < len(row):
                row[i] = ""
    return sha256_text(render_csv(header, rows[1:]))


@dataclass
class RunWriter:
    """Stages data files for one run and finalizes them behind a manifest."""

    out_dir: Path
    config_text: str
    tool_version: str
    seeds: tuple[int, ...]
    command: str
    _staged: dict[str, str] = field(default_factory=dict)
    _deterministic: dict[str, str] = field(default_factory=dict)
    _started: str = ""

    def __post_init__(self):
        self.out_dir = Path(self.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._started = datetime.now(timezone.utc).isoformat()

    def stage(self, name: str, text: str, deterministic_checksum: str | None = None):
        path = self.out_dir / (name + ".tmp")
        path.write_text(text, encoding="utf-8", newline="")
        self._staged[name] = sha256_text(text)
        if deterministic_checksum is not None:
            self._deterministic[name] = deterministic_checksum
        return path

    def stage_table(self, name: str, header, rows, formats=("csv",)):
        """Stage a table in the requested formats; returns the staged names."""
        names = []
        csv_text = render_csv(header, rows)
        mask = any(col in header for col in NONDETERMINISTIC_COLUMNS)
        self.stage(name + ".csv", csv_text,
                   masked_csv_checksum(csv_text) if mask else None)
        names.append(name + ".csv")
        if "gnuplot" in formats:
            self.stage(name + ".dat", render_gnuplot(header, rows))
            names.append(name + ".dat")
        return names

    def finalize(self) -> Path:
        """Write the manifest, then move all staged files to their final names."""
        manifest = {
            "tool": "ampsim",
            "version": self.tool_version,
            "command": self.command,
            "config": self.config_text,
            "seeds": list(self.seeds),
            "started": self._started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "files": {name: {"sha256": digest} for name, digest in sorted(self._staged.items())},
        }
        for name, digest in self._deterministic.items():
            manifest["files"][name]["deterministic_sha256"] = digest
        manifest_path = self.out_dir / "manifest.json"
        manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
        for name in self._staged:
            os.replace(self.out_dir / (name + ".tmp"), self.out_dir / name)
        return manifest_path


def read_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / "manifest.json").read_text(encoding="utf-8"))


def verify_manifest(out_dir) -> list[str]:
    """Return a list of problems (empty when every checksum matches)."""
    out_dir = Path(out_dir)
    manifest = read_manifest(out_dir)
    problems = []
    for name, entry in manifest["files"].items():
        path = out_dir / name
        if not path.exists():
            problems.append(f"missing file {name}")
            continue
        digest = sha256_text(path.read_text(encoding="utf-8"))
        if digest != entry["sha256"]:
            problems.append(f"checksum mismatch for {name}")
    return problems
