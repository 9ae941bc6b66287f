"""Semantic (call-site) and structural (declaration-shape) rules."""

from __future__ import annotations

from .findings import Finding
from .frontend import ast as A
from .rulepack import Rule, Rulepack
from .semantics import SemanticModel, Signature


def sink_text(binding: Signature) -> str:
    return f"{binding.render()}(<>)"


def _finding(rule: Rule, model: SemanticModel, line: int, text: str, method: str, anchor: str) -> Finding:
    return Finding(rule.id, rule.category, rule.subcategory, rule.kind, rule.severity,
                   model.path, line, text, method, anchor)


def _enclosing_methods(model: SemanticModel) -> dict[A.Node, str]:
    owner: dict[A.Node, str] = {}
    for m in model.unit.class_decl.methods:
        for node in m.walk():
            owner[node] = m.name
    return owner


def run_semantic_rules(model: SemanticModel, pack: Rulepack) -> list[Finding]:
    owner = _enclosing_methods(model)
    out: list[Finding] = []
    for rule in pack.rules_of("semantic"):
        for call, binding in model.calls.items():
            if not isinstance(binding, Signature):
                continue
            if any(p.matches(binding) for p in rule.patterns):
                out.append(_finding(rule, model, call.line, sink_text(binding), owner.get(call, ""),
                                    A.token_text(model.unit, call)))
    return sort_findings(out)


def run_structural_rules(model: SemanticModel, pack: Rulepack) -> list[Finding]:
    out: list[Finding] = []
    for rule in pack.rules_of("structural"):
        if rule.shape == "entry-with-params":
            for m in model.entry_methods:
                if m.params:
                    text = f"{model.class_name}.{m.name}({len(m.params)})"
                    out.append(_finding(rule, model, m.line, text, m.name, f"{m.name}/{len(m.params)}"))
    return sort_findings(out)


def sort_findings(findings: list[Finding]) -> list[Finding]:
    return sorted(findings, key=lambda f: (f.file, f.line, f.rule_id, f.anchor))
