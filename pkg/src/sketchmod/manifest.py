"""Dataset manifests and run configuration files."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    shape_id: str
    mesh_path: Path | None = None
    sketch_path: Path | None = None
    category: str = ""
    viewpoint_id: int | None = None


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    root: Path = field(default_factory=Path)

    def __post_init__(self):
        counts = Counter(e.shape_id for e in self.entries)
        dupes = sorted(k for k, n in counts.items() if n > 1)
        if dupes:
            raise ManifestError(f"duplicate shape_id(s): {', '.join(dupes)}")

    @property
    def ids(self) -> list[str]:
        return [e.shape_id for e in self.entries]

    def by_id(self) -> dict[str, ManifestEntry]:
        return {e.shape_id: e for e in self.entries}

    def missing_paths(self, kind: str = "mesh_path") -> list[str]:
        """Shape ids whose ``kind`` path is absent or does not exist."""
        out = []
        for e in self.entries:
            p = getattr(e, kind)
            if p is None or not p.exists():
                out.append(e.shape_id)
        return out


def load_manifest(path) -> DatasetManifest:
    """Read a JSON manifest ``{"root": ..., "entries": [{shape_id, mesh_path, ...}]}``.

    A bare list of entries is accepted too. Relative paths resolve against
    ``root``, which itself resolves against the manifest's directory.
    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    if isinstance(data, list):
        data = {"entries": data}
    root = path.parent / data.get("root", ".")
    entries = []
    for i, raw in enumerate(data.get("entries", [])):
        if "shape_id" not in raw:
            raise ManifestError(f"{path}: entry {i} has no shape_id")

        def resolve(key):
            value = raw.get(key)
            return None if value in (None, "") else root / value

        vid = raw.get("viewpoint_id")
        entries.append(
            ManifestEntry(
                shape_id=str(raw["shape_id"]),
                mesh_path=resolve("mesh_path"),
                sketch_path=resolve("sketch_path"),
                category=str(raw.get("category", "")),
                viewpoint_id=None if vid is None else int(vid),
            )
        )
    return DatasetManifest(tuple(entries), root)


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out
