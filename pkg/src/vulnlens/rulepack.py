"""Declarative rule sets.

A rulepack file is line oriented.  A header ``version = <tag>`` is followed
by sections; each entry is split with shell-like quoting.  See
``data/default.rules`` for the shipped pack, which doubles as the grammar
reference.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .semantics import CTOR, ApiCatalog, Signature, Unresolved

SEVERITIES = ("low", "medium", "high")
GROUPS = {"high": "hot", "medium": "warning", "low": "info"}
KINDS = ("semantic", "structural", "dataflow", "controlflow")
SECTIONS = (
    "semantic", "structural", "dataflow.sources", "dataflow.passthrough",
    "dataflow.validators", "dataflow.sinks", "controlflow.resources",
)
STRUCTURAL_SHAPES = ("entry-with-params",)
BUILTIN_PASSTHROUGHS = ("assignment", "concat")

_PATTERN = re.compile(r"^(new\s+)?([A-Za-z_$][\w$]*)(?:\.([A-Za-z_$][\w$]*))?\((\*|\d+)\)$")


class RulepackError(Exception):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def severity_group(severity: str) -> str:
    return GROUPS[severity]


@dataclass(frozen=True)
class SigPattern:
    """``new C(n)``, ``C.m(n)`` or a user method ``m(n)``; arity ``None`` is a wildcard."""

    class_name: Optional[str]
    member: str
    arity: Optional[int]

    @classmethod
    def parse(cls, text: str) -> "SigPattern":
        m = _PATTERN.match(text.strip())
        if not m:
            raise ValueError(f"bad signature pattern {text!r}")
        is_new, first, second, arity = m.groups()
        n = None if arity == "*" else int(arity)
        if is_new:
            if second is not None:
                raise ValueError(f"bad constructor pattern {text!r}")
            return cls(first, CTOR, n)
        if second is None:
            return cls(None, first, n)
        return cls(first, second, n)

    @property
    def is_user(self) -> bool:
        return self.class_name is None

    def matches(self, binding) -> bool:
        if self.arity is not None and self._arity(binding) != self.arity:
            return False
        if isinstance(binding, Signature):
            return binding.class_name == self.class_name and binding.member == self.member
        if isinstance(binding, Unresolved):
            return self.is_user and binding.is_user_method and binding.name == self.member
        return False

    @staticmethod
    def _arity(binding) -> Optional[int]:
        if isinstance(binding, Signature):
            return binding.arity
        if isinstance(binding, Unresolved) and binding.decl is not None:
            return len(binding.decl.params)
        return None

    def __str__(self) -> str:
        n = "*" if self.arity is None else str(self.arity)
        if self.member == CTOR:
            return f"new {self.class_name}({n})"
        if self.class_name is None:
            return f"{self.member}({n})"
        return f"{self.class_name}.{self.member}({n})"


@dataclass(frozen=True)
class Rule:
    id: str
    category: str
    subcategory: Optional[str]
    kind: str
    severity: str
    patterns: tuple[SigPattern, ...] = ()
    shape: Optional[str] = None  # structural
    arg: Optional[int] = None  # dataflow sink argument
    resource_types: tuple[str, ...] = ()  # controlflow
    release: tuple[str, ...] = ()

    @property
    def group(self) -> str:
        return GROUPS[self.severity]

    @property
    def full_category(self) -> str:
        return f"{self.category}: {self.subcategory}" if self.subcategory else self.category


@dataclass(frozen=True)
class Source:
    id: str
    where: str  # param | return | arg<N>
    pattern: Optional[SigPattern]  # None for entry parameters

    @property
    def out_arg(self) -> Optional[int]:
        return int(self.where[3:]) if self.where.startswith("arg") else None


@dataclass(frozen=True)
class PassThrough:
    id: str
    pattern: Optional[SigPattern]
    from_arg: Optional[int] = None
    builtin: Optional[str] = None


@dataclass(frozen=True)
class Validator:
    id: str
    pattern: SigPattern
    arg: int
    success: str  # literal text compared against


@dataclass
class Rulepack:
    version: str
    rules: list[Rule] = field(default_factory=list)
    sources: list[Source] = field(default_factory=list)
    passthroughs: list[PassThrough] = field(default_factory=list)
    validators: list[Validator] = field(default_factory=list)
    catalog: Optional[ApiCatalog] = field(default=None, compare=False, repr=False)

    def rules_of(self, kind: str) -> list[Rule]:
        return [r for r in self.rules if r.kind == kind]

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def has_builtin(self, name: str) -> bool:
        return any(p.builtin == name for p in self.passthroughs)

    def without(self, *ids: str) -> "Rulepack":
        """Copy with the named entries (rules, sources, passthroughs, validators) removed."""
        drop = set(ids)
        return Rulepack(
            self.version,
            [r for r in self.rules if r.id not in drop],
            [s for s in self.sources if s.id not in drop],
            [p for p in self.passthroughs if p.id not in drop],
            [v for v in self.validators if v.id not in drop],
            self.catalog,
        )

    def dumps(self) -> str:
        q = shlex.quote
        out = [f"version = {self.version}"]

        def section(name: str, lines: list[str]) -> None:
            out.append("")
            out.append(f"[{name}]")
            out.extend(lines)

        def head(r: Rule) -> str:
            return f"{r.id} {r.severity} {q(r.full_category)}"

        section("semantic", [head(r) + " " + " ".join(q(str(p)) for p in r.patterns)
                             for r in self.rules_of("semantic")])
        section("structural", [f"{head(r)} {r.shape}" for r in self.rules_of("structural")])
        section("dataflow.sources", [
            f"{s.id} {s.where} {q(str(s.pattern)) if s.pattern else 'entry'}" for s in self.sources])
        section("dataflow.passthrough", [
            f"{p.id} builtin {p.builtin}" if p.builtin else f"{p.id} {q(str(p.pattern))} {p.from_arg}->return"
            for p in self.passthroughs])
        section("dataflow.validators", [
            f"{v.id} {q(str(v.pattern))} arg={v.arg} success={q(v.success)}" for v in self.validators])
        section("dataflow.sinks", [f"{head(r)} {q(str(r.patterns[0]))} arg={r.arg}"
                                   for r in self.rules_of("dataflow")])
        section("controlflow.resources", [
            f"{head(r)} {' '.join(r.resource_types)} release={','.join(r.release)}"
            for r in self.rules_of("controlflow")])
        return "\n".join(out) + "\n"


# -- loading ----------------------------------------------------------------

class _Loader:
    def __init__(self, catalog: Optional[ApiCatalog]):
        self.catalog = catalog
        self.ids: set[str] = set()
        self.lineno = 0

    def error(self, message: str) -> RulepackError:
        return RulepackError(message, self.lineno)

    def new_id(self, rule_id: str) -> str:
        if rule_id in self.ids:
            raise self.error(f"duplicate id {rule_id!r}")
        self.ids.add(rule_id)
        return rule_id

    def pattern(self, text: str) -> SigPattern:
        try:
            p = SigPattern.parse(text)
        except ValueError as e:
            raise self.error(str(e)) from None
        if p.is_user or self.catalog is None:
            return p
        members = self.catalog.classes.get(p.class_name)
        if members is None:
            raise self.error(f"unknown signature {p}: class {p.class_name} is not in the catalog")
        if not any(m == p.member and (p.arity is None or a == p.arity) for m, a in members):
            raise self.error(f"unknown signature {p}")
        return p

    def head(self, words: list[str], kind: str, min_len: int) -> tuple[str, str, Optional[str], str, list[str]]:
        if len(words) < min_len:
            raise self.error(f"{kind} entry needs at least {min_len} fields")
        rule_id, severity, category, *rest = words
        if severity not in SEVERITIES:
            raise self.error(f"unknown severity {severity!r}")
        cat, _, sub = category.partition(": ")
        if not cat:
            raise self.error("empty category")
        return self.new_id(rule_id), severity, cat, sub or None, rest

    @staticmethod
    def keyed(word: str, key: str) -> Optional[str]:
        return word[len(key) + 1:] if word.startswith(key + "=") else None

    def int_key(self, word: str, key: str) -> int:
        value = self.keyed(word, key)
        if value is None or not value.isdigit():
            raise self.error(f"expected {key}=<n>, got {word!r}")
        return int(value)

    def load(self, text: str) -> Rulepack:
        version: Optional[str] = None
        pack = Rulepack(version="", catalog=self.catalog)
        section: Optional[str] = None
        for self.lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in SECTIONS:
                    raise self.error(f"unknown section [{section}]")
                continue
            if section is None:
                key, eq, value = line.partition("=")
                if not eq or key.strip() != "version" or not value.strip():
                    raise self.error("expected 'version = <tag>' before the first section")
                version = value.strip()
                continue
            try:
                words = shlex.split(line, comments=True)
            except ValueError as e:
                raise self.error(str(e)) from None
            if words:
                self.entry(section, words, pack)
        if version is None:
            raise RulepackError("missing version header")
        pack.version = version
        return pack

    def entry(self, section: str, words: list[str], pack: Rulepack) -> None:
        if section == "semantic":
            rid, sev, cat, sub, rest = self.head(words, "semantic", 4)
            pack.rules.append(Rule(rid, cat, sub, "semantic", sev, tuple(self.pattern(w) for w in rest)))
        elif section == "structural":
            rid, sev, cat, sub, rest = self.head(words, "structural", 4)
            if len(rest) != 1 or rest[0] not in STRUCTURAL_SHAPES:
                raise self.error(f"unknown structural shape {' '.join(rest)!r}")
            pack.rules.append(Rule(rid, cat, sub, "structural", sev, shape=rest[0]))
        elif section == "dataflow.sinks":
            rid, sev, cat, sub, rest = self.head(words, "sink", 5)
            if len(rest) != 2:
                raise self.error("sink entry is: id severity category pattern arg=<n>")
            pattern = self.pattern(rest[0])
            arg = self.int_key(rest[1], "arg")
            if pattern.arity is not None and arg >= pattern.arity:
                raise self.error(f"argument {arg} out of range for {pattern}")
            pack.rules.append(Rule(rid, cat, sub, "dataflow", sev, (pattern,), arg=arg))
        elif section == "controlflow.resources":
            rid, sev, cat, sub, rest = self.head(words, "resource", 5)
            release = self.keyed(rest[-1], "release")
            if not release:
                raise self.error("resource entry must end with release=<method>[,<method>]")
            types = rest[:-1]
            methods = tuple(release.split(","))
            if self.catalog is not None:
                for t in types:
                    if t not in self.catalog.classes:
                        raise self.error(f"unknown resource type {t!r}")
                    for m in methods:
                        if not self.catalog.has_member(t, m):
                            raise self.error(f"unknown signature {t}.{m}")
            pack.rules.append(Rule(rid, cat, sub, "controlflow", sev,
                                   resource_types=tuple(types), release=methods))
        elif section == "dataflow.sources":
            if len(words) != 3:
                raise self.error("source entry is: id where pattern")
            sid, where, target = words
            if where == "param":
                if target != "entry":
                    raise self.error("param sources apply to 'entry' only")
                pack.sources.append(Source(self.new_id(sid), where, None))
                return
            if where != "return" and not re.fullmatch(r"arg\d+", where):
                raise self.error(f"unknown source position {where!r}")
            pattern = self.pattern(target)
            pack.sources.append(Source(self.new_id(sid), where, pattern))
        elif section == "dataflow.passthrough":
            if len(words) != 3:
                raise self.error("passthrough entry is: id pattern <n>->return, or id builtin <name>")
            pid, first, second = words
            if first == "builtin":
                if second not in BUILTIN_PASSTHROUGHS:
                    raise self.error(f"unknown builtin passthrough {second!r}")
                pack.passthroughs.append(PassThrough(self.new_id(pid), None, builtin=second))
                return
            m = re.fullmatch(r"(\d+)->return", second)
            if not m:
                raise self.error(f"expected <n>->return, got {second!r}")
            pack.passthroughs.append(PassThrough(self.new_id(pid), self.pattern(first), int(m.group(1))))
        elif section == "dataflow.validators":
            if len(words) != 4:
                raise self.error("validator entry is: id pattern arg=<n> success=<literal>")
            vid, pat, arg, success = words
            value = self.keyed(success, "success")
            if not value:
                raise self.error(f"expected success=<literal>, got {success!r}")
            pack.validators.append(Validator(self.new_id(vid), self.pattern(pat), self.int_key(arg, "arg"), value))


def parse_rulepack(text: str, catalog: Optional[ApiCatalog] = None) -> Rulepack:
    return _Loader(catalog).load(text)


def load_rulepack(path: Union[str, Path, None] = None, catalog: Optional[ApiCatalog] = None) -> Rulepack:
    """Load a rulepack file; with no path, the shipped default pack."""
    if path is None:
        text = resources.files("vulnlens").joinpath("data/default.rules").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_rulepack(text, catalog)
