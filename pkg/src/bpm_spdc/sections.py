"""Parser for the sectioned key=value text format used by material and run files.

Grammar
-------
- ``#`` starts a comment that runs to the end of the line.
- Blank lines are ignored.
- ``[name]`` opens a section; keys before the first section are top level.
- ``key = value`` assigns within the current scope. Values are kept verbatim
  (leading/trailing whitespace stripped).
- A line that starts with whitespace continues the previous value, joined with
  a single space. This keeps long tabulated values readable.

Duplicate keys within one scope and duplicate section names are errors.
All errors carry the 1-based line number of the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class SectionedFormatError(ValueError):
    """Raised when a sectioned file violates the grammar."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}: "
        elif where:
            where += " "
        super().__init__(where + message)


@dataclass
class SectionedFile:
    """Parsed document: top-level keys plus named sections.

    Values are stored as ``(text, line_number)`` so schema-level validation
    can point at the source line.
    """

    top: dict[str, tuple[str, int]] = field(default_factory=dict)
    sections: dict[str, dict[str, tuple[str, int]]] = field(default_factory=dict)
    section_lines: dict[str, int] = field(default_factory=dict)
    path: str | None = None

    def get(self, section: str | None, key: str, default: str | None = None) -> str | None:
        scope = self.top if section is None else self.sections.get(section, {})
        if key in scope:
            return scope[key][0]
        return default

    def require(self, section: str | None, key: str) -> str:
        value = self.get(section, key)
        if value is None:
            where = "top level" if section is None else f"section [{section}]"
            raise SectionedFormatError(f"missing required key {key!r} in {where}", path=self.path)
        return value

    def line_of(self, section: str | None, key: str) -> int | None:
        scope = self.top if section is None else self.sections.get(section, {})
        if key in scope:
            return scope[key][1]
        return None


def parse_sections(text: str, path: str | None = None) -> SectionedFile:
    doc = SectionedFile(path=path)
    current: dict[str, tuple[str, int]] = doc.top
    last_key: str | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        # Strip comment; '#' never appears inside legal values.
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue

        is_continuation = line[0] in (" ", "\t")
        stripped = line.strip()

        if stripped.startswith("[") and not is_continuation:
            if not stripped.endswith("]"):
                raise SectionedFormatError("malformed section header", lineno, path)
            name = stripped[1:-1].strip()
            if not name:
                raise SectionedFormatError("empty section name", lineno, path)
            if name in doc.sections:
                raise SectionedFormatError(f"duplicate section [{name}]", lineno, path)
            doc.sections[name] = {}
            doc.section_lines[name] = lineno
            current = doc.sections[name]
            last_key = None
            continue

        if is_continuation:
            if last_key is None:
                raise SectionedFormatError("continuation line with no preceding key", lineno, path)
            old, first_line = current[last_key]
            current[last_key] = (old + " " + stripped, first_line)
            continue

        if "=" not in stripped:
            raise SectionedFormatError(f"expected 'key = value', got {stripped!r}", lineno, path)
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise SectionedFormatError("empty key", lineno, path)
        if key in current:
            raise SectionedFormatError(f"duplicate key {key!r}", lineno, path)
        current[key] = (value, lineno)
        last_key = key

    return doc


def parse_sections_file(path) -> SectionedFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sections(fh.read(), path=str(path))


def parse_float(doc: SectionedFile, section: str | None, key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise SectionedFormatError(
            f"key {key!r}: expected a number, got {text!r}",
            doc.line_of(section, key),
            doc.path,
        ) from None
