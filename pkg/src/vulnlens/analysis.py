"""The analysis pipeline: parse, resolve, build CFGs, run every rule kind."""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from . import __version__
from .cfg import Cfg, DomMap, build_cfg, dominators
from .findings import Finding
from .frontend import CompilationUnit, LexError, ParseError, parse_source
from .matchers import run_semantic_rules, run_structural_rules
from .reporting import FileDigest, Report, build_report
from .rulepack import Rulepack, load_rulepack
from .semantics import ApiCatalog, ResolveError, SemanticModel, load_api_catalog, resolve
from .taintflow import analyze_dataflow
from .typestate import analyze_resources


class AnalysisError(Exception):
    """A file that cannot be analyzed (lexing, parsing or name resolution failed)."""

    def __init__(self, path: str, cause: Exception):
        super().__init__(f"{path}: {cause}")
        self.path = path
        self.cause = cause


@dataclass
class FileResult:
    path: str  # relative to the analysis root
    sha256: str
    unit: CompilationUnit
    model: SemanticModel
    cfgs: dict[str, Cfg] = field(default_factory=dict)
    doms: dict[str, DomMap] = field(default_factory=dict)
    findings: list[Finding] = field(default_factory=list)


def analyze_source(text: str, path: str, pack: Rulepack, catalog: ApiCatalog) -> FileResult:
    try:
        unit = parse_source(text, path)
        model = resolve(unit, catalog)
    except (LexError, ParseError, ResolveError) as e:
        raise AnalysisError(path, e) from e
    result = FileResult(path, hashlib.sha256(text.encode("utf-8")).hexdigest(), unit, model)
    for method in unit.class_decl.methods:
        cfg = build_cfg(method, model)
        result.cfgs[method.name] = cfg
        result.doms[method.name] = dominators(cfg)
    result.findings = (run_semantic_rules(model, pack) + run_structural_rules(model, pack)
                       + analyze_dataflow(model, pack, result.cfgs, result.doms)
                       + analyze_resources(model, pack, result.cfgs))
    return result


def expand_inputs(paths: Sequence[Union[str, Path]]) -> tuple[Path, list[Path]]:
    """Analysis root and the sorted list of ``.java`` files named by ``paths``."""
    if not paths:
        raise ValueError("no input paths")
    files: list[Path] = []
    anchors: list[str] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.rglob("*.java")))
            anchors.append(str(p))
        elif p.is_file():
            files.append(p)
            anchors.append(str(p.parent))
        else:
            raise FileNotFoundError(f"no such file or directory: {raw}")
    root = Path(os.path.commonpath([os.path.abspath(a) for a in anchors]))
    shown = Path(anchors[0]) if len(set(anchors)) == 1 else root
    unique = sorted(set(files), key=lambda f: Path(os.path.relpath(os.path.abspath(f), root)).as_posix())
    return shown, unique


def analyze_paths(paths: Sequence[Union[str, Path]], pack: Optional[Rulepack] = None,
                  catalog: Optional[ApiCatalog] = None, workers: Optional[int] = None
                  ) -> tuple[Report, list[FileResult]]:
    catalog = catalog or load_api_catalog()
    pack = pack or load_rulepack(catalog=catalog)
    shown_root, files = expand_inputs(paths)
    root = os.path.abspath(shown_root)

    def one(f: Path) -> FileResult:
        rel = Path(os.path.relpath(os.path.abspath(f), root)).as_posix()
        text = f.read_bytes().decode("utf-8")
        return analyze_source(text, rel, pack, catalog)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, files))
    report = report_for(results, pack, str(shown_root))
    return report, results


def report_for(results: Iterable[FileResult], pack: Rulepack, root: str = ".") -> Report:
    results = list(results)
    findings = [f for r in results for f in r.findings]
    digests = [FileDigest(r.path, r.sha256) for r in results]
    return build_report(findings, pack.version, __version__, digests, root)
