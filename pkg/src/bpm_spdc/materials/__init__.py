"""Bundled material files (*.mat) and helpers to locate them."""

from __future__ import annotations

from importlib import resources


def material_dir():
    """Traversable directory containing the bundled material files."""
    return resources.files(__name__)


def builtin_names() -> list[str]:
    return sorted(p.name[: -len(".mat")] for p in material_dir().iterdir() if p.name.endswith(".mat"))


def builtin_path(name: str):
    """Path-like resource for a bundled material, by bare name or file name."""
    fname = name if name.endswith(".mat") else name + ".mat"
    path = material_dir() / fname
    if not path.is_file():
        raise FileNotFoundError(
            f"no bundled material {name!r}; available: {', '.join(builtin_names())}"
        )
    return path
