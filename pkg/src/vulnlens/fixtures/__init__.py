"""The shipped fixture corpus and its expected-findings manifest."""

from __future__ import annotations

import shlex
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

VERSIONS = ("v0", "v1", "v2", "v3", "v4", "v5")
FILENAME = "fileReaderServer.java"
CATEGORIES = (
    "J2EE Bad Practices: Sockets", "Denial of Service", "System Information Leak", "Poor Logging Practice",
    "Leftover Debug Code", "Resource Injection", "Path Manipulation", "Unreleased Resource: Streams",
)
VULNERABILITIES = ("Resource Injection", "Path Manipulation", "System Information Leak",
                   "Denial of Service", "Unreleased Resource: Streams")
KINDS = ("semantic", "structural", "dataflow", "controlflow")
SEVERITIES = ("low", "medium", "high")
ORACLES = ("binding-scan", "def-use-walk", "path-enumeration")
# the category each version's fix removes, keyed by the fixed version
FIXES = {"v1": ("Resource Injection", "Leftover Debug Code"), "v2": ("Path Manipulation",),
         "v3": ("System Information Leak",), "v4": ("Denial of Service",),
         "v5": ("Unreleased Resource: Streams",)}


class ManifestError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class Expectation:
    version: str
    category: str
    kind: str
    severity: str
    count: int
    lines: tuple[int, ...] = ()
    tag: str = ""

    @property
    def provenance(self) -> str:
        return self.tag.partition(":")[0]


@dataclass
class ExpectationManifest:
    entries: list[Expectation] = field(default_factory=list)

    def for_version(self, version: str) -> list[Expectation]:
        return [e for e in self.entries if e.version == version]

    def categories(self, version: str) -> set[str]:
        return {e.category for e in self.for_version(version)}

    def findings(self, version: str) -> list[tuple[str, str, str, Optional[int]]]:
        """Expanded (category, kind, severity, line) tuples, one per expected finding."""
        out = []
        for e in self.for_version(version):
            lines = list(e.lines) if e.lines else [None] * e.count
            out.extend((e.category, e.kind, e.severity, ln) for ln in lines)
        return sorted(out, key=lambda t: (t[3] or 0, t[0]))


def fixture_dir(version: Optional[str] = None) -> Path:
    base = Path(str(resources.files(__name__)))
    if version is None:
        return base
    if version not in VERSIONS:
        raise KeyError(version)
    return base / version


def fixture_path(version: str) -> Path:
    return fixture_dir(version) / FILENAME


def fixture_text(version: str) -> str:
    return fixture_path(version).read_text(encoding="utf-8")


def parse_manifest(text: str) -> ExpectationManifest:
    manifest = ExpectationManifest()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        try:
            words = shlex.split(raw, comments=True)
        except ValueError as e:
            raise ManifestError(str(e), lineno) from None
        if not words:
            continue
        fields: dict[str, str] = {}
        for w in words:
            key, eq, value = w.partition("=")
            if not eq:
                raise ManifestError(f"expected key=value, got {w!r}", lineno)
            if key in fields:
                raise ManifestError(f"repeated key {key!r}", lineno)
            fields[key] = value
        unknown = set(fields) - {"version", "category", "kind", "severity", "count", "lines", "tag"}
        if unknown:
            raise ManifestError(f"unknown key(s) {', '.join(sorted(unknown))}", lineno)
        for key in ("version", "category", "kind", "severity", "count"):
            if key not in fields:
                raise ManifestError(f"missing {key}", lineno)
        tag = fields.get("tag", "")
        source, _, ref = tag.partition(":")
        if source not in ("PAPER", "DERIVED") or not ref:
            raise ManifestError("missing provenance tag (tag=PAPER:<ref> or tag=DERIVED:<oracle>)", lineno)
        if source == "DERIVED" and ref not in ORACLES:
            raise ManifestError(f"unknown oracle {ref!r}", lineno)
        if fields["category"] not in CATEGORIES:
            raise ManifestError(f"unknown category {fields['category']!r}", lineno)
        if fields["kind"] not in KINDS:
            raise ManifestError(f"unknown kind {fields['kind']!r}", lineno)
        if fields["severity"] not in SEVERITIES:
            raise ManifestError(f"unknown severity {fields['severity']!r}", lineno)
        if not fields["count"].isdigit():
            raise ManifestError(f"count must be a number, got {fields['count']!r}", lineno)
        count = int(fields["count"])
        lines: tuple[int, ...] = ()
        if fields.get("lines"):
            try:
                lines = tuple(int(x) for x in fields["lines"].split(","))
            except ValueError:
                raise ManifestError(f"bad lines {fields['lines']!r}", lineno) from None
            if len(lines) != count:
                raise ManifestError(f"{len(lines)} line(s) pinned for count={count}", lineno)
        manifest.entries.append(Expectation(fields["version"], fields["category"], fields["kind"],
                                            fields["severity"], count, lines, tag))
    return manifest


def load_expectations(path: Union[str, Path, None] = None) -> ExpectationManifest:
    if path is None:
        path = fixture_dir() / "expected.manifest"
    return parse_manifest(Path(path).read_text(encoding="utf-8"))
