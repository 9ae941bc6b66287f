"""Finding and trace-step records shared by the analyses and the reporter."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .rulepack import GROUPS

STEP_KINDS = ("Source", "PassThrough", "Assignment", "SinkEntry")


@dataclass(frozen=True)
class TraceStep:
    kind: str  # Source | PassThrough | Assignment | SinkEntry
    file: str
    line: int
    text: str

    def render(self) -> str:
        return f"{self.file}({self.line}) : {self.text}"

    @property
    def shape(self) -> str:
        return f"{self.kind}:{self.text}"


@dataclass(frozen=True)
class Finding:
    rule_id: str
    category: str
    subcategory: str | None
    kind: str
    severity: str
    file: str
    line: int
    sink_text: str
    method: str = ""
    anchor: str = ""  # location-independent identity of the flagged construct
    trace: tuple[TraceStep, ...] = ()
    instance_id: str = ""
    suppressed: bool = False
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    @property
    def group(self) -> str:
        return GROUPS[self.severity]

    @property
    def full_category(self) -> str:
        return f"{self.category}: {self.subcategory}" if self.subcategory else self.category

    def with_(self, **changes) -> "Finding":
        return replace(self, **changes)
