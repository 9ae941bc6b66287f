"""Reports: fingerprints, suppression, text rendering, ``.vlr`` files and diffs.

Instance ids are ``blake2b(digest_size=16)`` over the canonical string

    category|kind|basename|sinkText|traceShape|rulepackVersion|method|anchor|ordinal

rendered as 32 uppercase hex digits.  Nothing in it depends on absolute line
numbers or paths.  ``anchor`` is a layout-insensitive description of the
flagged construct (the call's token text, a variable, a method shape) and
``ordinal`` numbers findings whose other fields coincide, in report order.
Changing this recipe requires bumping :data:`SCHEMA`.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import posixpath
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Union

import jsonschema

from .findings import Finding, TraceStep
from .rulepack import GROUPS, SEVERITIES

SCHEMA = "vulnlens-report/1"
ID_RE = re.compile(r"^[0-9A-F]{32}$")

REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema", "tool", "rulepack", "root", "files", "suppressions", "findings", "findings_digest"],
    "properties": {
        "schema": {"const": SCHEMA},
        "tool": {"type": "object", "required": ["name", "version"],
                 "properties": {"name": {"type": "string"}, "version": {"type": "string"}}},
        "rulepack": {"type": "object", "required": ["version"], "properties": {"version": {"type": "string"}}},
        "root": {"type": "string"},
        "files": {"type": "array", "items": {
            "type": "object", "required": ["path", "sha256"],
            "properties": {"path": {"type": "string"}, "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"}}}},
        "suppressions": {"type": "array", "items": {
            "type": "object", "required": ["id"],
            "properties": {"id": {"type": "string", "pattern": ID_RE.pattern},
                           "date": {"type": ["string", "null"]}, "reason": {"type": ["string", "null"]}}}},
        "findings": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "rule", "severity", "group", "category", "subcategory", "kind",
                         "file", "line", "sink", "method", "anchor", "trace", "suppressed"],
            "properties": {
                "id": {"type": "string", "pattern": ID_RE.pattern},
                "rule": {"type": "string"},
                "severity": {"enum": list(SEVERITIES)},
                "group": {"enum": sorted(set(GROUPS.values()))},
                "category": {"type": "string"},
                "subcategory": {"type": ["string", "null"]},
                "kind": {"enum": ["semantic", "structural", "dataflow", "controlflow"]},
                "file": {"type": "string"},
                "line": {"type": "integer", "minimum": 1},
                "sink": {"type": "string"},
                "method": {"type": "string"},
                "anchor": {"type": "string"},
                "suppressed": {"type": "boolean"},
                "trace": {"type": "array", "items": {
                    "type": "object", "required": ["kind", "file", "line", "text"],
                    "properties": {"kind": {"enum": ["Source", "PassThrough", "Assignment", "SinkEntry"]},
                                   "file": {"type": "string"}, "line": {"type": "integer"},
                                   "text": {"type": "string"}}}},
            }}},
        "findings_digest": {"type": "string", "pattern": "^[0-9a-f]{64}$"},
    },
}

_KNOWN_TOP = set(REPORT_SCHEMA["properties"])
_KNOWN_FINDING = set(REPORT_SCHEMA["properties"]["findings"]["items"]["properties"])


class ReportFormatError(Exception):
    pass


class SuppressionError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


# -- fingerprints -----------------------------------------------------------

def trace_shape(trace: Iterable[TraceStep]) -> str:
    return ";".join(s.shape for s in trace)


def fingerprint_key(f: Finding, rulepack_version: str) -> str:
    base = posixpath.basename(f.file.replace("\\", "/"))
    return "|".join([f.full_category, f.kind, base, f.sink_text, trace_shape(f.trace),
                     rulepack_version, f.method, f.anchor])


def fingerprint(f: Finding, rulepack_version: str, ordinal: int = 0) -> str:
    text = f"{fingerprint_key(f, rulepack_version)}|{ordinal}"
    return hashlib.blake2b(text.encode("utf-8"), digest_size=16).hexdigest().upper()


def assign_ids(findings: Iterable[Finding], rulepack_version: str) -> list[Finding]:
    """Fingerprint findings; duplicates get increasing ordinals in (file, line, rule) order."""
    ordered = sorted(findings, key=lambda f: (f.file, f.line, f.rule_id, f.anchor))
    seen: Counter[str] = Counter()
    out = []
    for f in ordered:
        key = fingerprint_key(f, rulepack_version)
        out.append(f.with_(instance_id=fingerprint(f, rulepack_version, seen[key])))
        seen[key] += 1
    return out


# -- suppressions -----------------------------------------------------------

@dataclass(frozen=True)
class Suppression:
    id: str
    date: Optional[str] = None
    reason: Optional[str] = None

    def to_line(self) -> str:
        parts = [self.id]
        if self.date:
            parts.append(self.date)
        if self.reason:
            parts.append(f"# {self.reason}")
        return " ".join(parts)


@dataclass
class SuppressionList:
    entries: dict[str, Suppression] = field(default_factory=dict)

    def __contains__(self, instance_id: str) -> bool:
        return instance_id in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def ids(self) -> set[str]:
        return set(self.entries)

    def add(self, instance_id: str, reason: Optional[str] = None, date: Optional[str] = None) -> bool:
        """Add an entry; returns False (and changes nothing) if the id is already present."""
        if not ID_RE.match(instance_id):
            raise SuppressionError(f"malformed instance id {instance_id!r}")
        if instance_id in self.entries:
            return False
        self.entries[instance_id] = Suppression(instance_id, date, reason)
        return True

    def remove(self, instance_id: str) -> bool:
        return self.entries.pop(instance_id, None) is not None

    def dumps(self) -> str:
        return "".join(s.to_line() + "\n" for s in self.entries.values())


def parse_suppressions(text: str) -> SuppressionList:
    """One entry per line: ``ID [YYYY-MM-DD] [# reason]``; blank and ``#`` lines skipped."""
    sup = SuppressionList()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body, hash_, reason = raw.partition("#")
        body = body.strip()
        if not body:
            continue
        words = body.split()
        if len(words) > 2 or not ID_RE.match(words[0]):
            raise SuppressionError(f"expected 'ID [YYYY-MM-DD] [# reason]', got {raw.strip()!r}", lineno)
        date = None
        if len(words) == 2:
            try:
                _dt.date.fromisoformat(words[1])
            except ValueError:
                raise SuppressionError(f"bad date {words[1]!r}", lineno) from None
            date = words[1]
        if words[0] not in sup.entries:
            sup.entries[words[0]] = Suppression(words[0], date, reason.strip() if hash_ and reason.strip() else None)
    return sup


def load_suppressions(path: Union[str, Path]) -> SuppressionList:
    p = Path(path)
    if not p.exists():
        return SuppressionList()
    return parse_suppressions(p.read_text(encoding="utf-8"))


# -- reports ----------------------------------------------------------------

@dataclass(frozen=True)
class FileDigest:
    path: str
    sha256: str


@dataclass
class Report:
    tool_version: str
    rulepack_version: str
    root: str = "."
    files: list[FileDigest] = field(default_factory=list)
    findings: list[Finding] = field(default_factory=list)
    suppressions: list[Suppression] = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.findings = sort_report_findings(self.findings)

    def by_id(self) -> dict[str, Finding]:
        return {f.instance_id: f for f in self.findings}

    def visible(self, show_suppressed: bool = False) -> list[Finding]:
        return [f for f in self.findings if show_suppressed or not f.suppressed]

    def gating(self) -> list[Finding]:
        """Unsuppressed findings that fail a build (groups hot and warning)."""
        return [f for f in self.findings if not f.suppressed and f.group in ("hot", "warning")]


def sort_report_findings(findings: Iterable[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: (f.file, f.line, f.full_category, f.instance_id))


def build_report(findings: Iterable[Finding], rulepack_version: str, tool_version: str,
                 files: Iterable[FileDigest] = (), root: str = ".") -> Report:
    return Report(tool_version, rulepack_version, root, sorted(files, key=lambda d: d.path),
                  assign_ids(findings, rulepack_version))


def apply_suppressions(report: Report, sup: SuppressionList) -> Report:
    ids = sup.ids()
    findings = [f.with_(suppressed=f.instance_id in ids) for f in report.findings]
    return replace(report, findings=findings, suppressions=sorted(sup.entries.values(), key=lambda s: s.id))


def _header(f: Finding) -> str:
    cols = [f.instance_id, f.severity, f.category]
    if f.subcategory:
        cols.append(f.subcategory)
    cols.append(f.kind)
    return "[" + " : ".join(cols) + " ]"


def render_finding(f: Finding) -> list[str]:
    lines = [_header(f), f"{f.file}({f.line}) : {f.sink_text}"]
    lines.extend(step.render() for step in f.trace[1:])
    return lines


def render_text(report: Report, show_suppressed: bool = False) -> str:
    lines = [f"[{report.root}]"]
    shown = report.visible(show_suppressed)
    for f in shown:
        lines.extend(render_finding(f))
        if f.suppressed:
            lines.append("(suppressed)")
    hidden = len(report.findings) - len(shown)
    tail = f"{len(shown)} issue" + ("" if len(shown) == 1 else "s")
    if hidden:
        tail += f" ({hidden} suppressed)"
    lines.append(tail)
    return "\n".join(lines) + "\n"


# -- serialization ----------------------------------------------------------

def _finding_to_dict(f: Finding) -> dict:
    d = dict(f.extra)
    d.update({
        "id": f.instance_id, "rule": f.rule_id, "severity": f.severity, "group": f.group,
        "category": f.category, "subcategory": f.subcategory, "kind": f.kind, "file": f.file,
        "line": f.line, "sink": f.sink_text, "method": f.method, "anchor": f.anchor,
        "trace": [{"kind": s.kind, "file": s.file, "line": s.line, "text": s.text} for s in f.trace],
        "suppressed": f.suppressed,
    })
    return d


def _finding_from_dict(d: dict) -> Finding:
    trace = tuple(TraceStep(s["kind"], s["file"], s["line"], s["text"]) for s in d["trace"])
    extra = {k: v for k, v in d.items() if k not in _KNOWN_FINDING}
    f = Finding(d["rule"], d["category"], d["subcategory"], d["kind"], d["severity"], d["file"], d["line"],
                d["sink"], d["method"], d["anchor"], trace, d["id"], d["suppressed"], extra)
    if f.group != d["group"]:
        raise ReportFormatError(f"finding {f.instance_id}: group {d['group']!r} does not match severity")
    return f


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def findings_digest(findings_json: list) -> str:
    return hashlib.sha256(_canonical(findings_json).encode("utf-8")).hexdigest()


def report_to_dict(report: Report) -> dict:
    findings = [_finding_to_dict(f) for f in report.findings]
    d = dict(report.extra)
    d.update({
        "schema": SCHEMA,
        "tool": {"name": "vulnlens", "version": report.tool_version},
        "rulepack": {"version": report.rulepack_version},
        "root": report.root,
        "files": [{"path": x.path, "sha256": x.sha256} for x in report.files],
        "suppressions": [{"id": s.id, "date": s.date, "reason": s.reason} for s in report.suppressions],
        "findings": findings,
        "findings_digest": findings_digest(findings),
    })
    return d


def dumps_report(report: Report) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def loads_report(text: str) -> Report:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ReportFormatError(f"not a report file: {e}") from None
    try:
        jsonschema.validate(data, REPORT_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path)
        raise ReportFormatError(f"schema violation at {where or '<root>'}: {e.message}") from None
    if findings_digest(data["findings"]) != data["findings_digest"]:
        raise ReportFormatError("findings digest mismatch (report was modified)")
    return Report(
        data["tool"]["version"], data["rulepack"]["version"], data["root"],
        [FileDigest(x["path"], x["sha256"]) for x in data["files"]],
        [_finding_from_dict(f) for f in data["findings"]],
        [Suppression(s["id"], s.get("date"), s.get("reason")) for s in data["suppressions"]],
        {k: v for k, v in data.items() if k not in _KNOWN_TOP},
    )


def write_report(report: Report, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps_report(report), encoding="utf-8")


def read_report(path: Union[str, Path]) -> Report:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ReportFormatError(f"cannot read {path}: {e.strerror}") from None
    return loads_report(text)


# -- diff -------------------------------------------------------------------

@dataclass
class ReportDiff:
    removed: list[Finding]
    added: list[Finding]

    @property
    def empty(self) -> bool:
        return not self.removed and not self.added

    def removed_categories(self) -> Counter[str]:
        return Counter(f.full_category for f in self.removed)

    def added_categories(self) -> Counter[str]:
        return Counter(f.full_category for f in self.added)

    def render(self) -> str:
        lines = []
        for title, items, counts in (("removed", self.removed, self.removed_categories()),
                                     ("added", self.added, self.added_categories())):
            lines.append(f"{title}: {len(items)}")
            for cat in sorted(counts):
                lines.append(f"  {cat} x{counts[cat]}")
            for f in items:
                lines.append(f"    {f.instance_id} {f.full_category} {f.file}({f.line})")
        return "\n".join(lines) + "\n"


def diff_reports(old: Report, new: Report) -> ReportDiff:
    old_ids, new_ids = old.by_id(), new.by_id()
    removed = [f for i, f in old_ids.items() if i not in new_ids]
    added = [f for i, f in new_ids.items() if i not in old_ids]
    return ReportDiff(sort_report_findings(removed), sort_report_findings(added))
