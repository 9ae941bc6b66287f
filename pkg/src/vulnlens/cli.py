"""Command-line interface: ``vulnlens analyze | suppress | diff``."""

from __future__ import annotations

import argparse
import datetime as _dt
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import AnalysisError, analyze_paths
from .reporting import (ID_RE, ReportFormatError, SuppressionError, apply_suppressions, diff_reports,
                        load_suppressions, read_report, render_text, write_report)
from .rulepack import RulepackError, load_rulepack
from .semantics import CatalogError, load_api_catalog

EXIT_CLEAN, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2
DEFAULT_SUPPRESSIONS = ".vulnlens-suppress"

_out_lock = threading.Lock()


def _emit(text: str, stream=None) -> None:
    with _out_lock:
        (stream or sys.stdout).write(text)


@dataclass
class AnalyzeConfig:
    inputs: list[str]
    rules: Optional[str] = None
    catalog: Optional[str] = None
    report: Optional[str] = None
    suppress: Optional[str] = None
    flags: set[str] = field(default_factory=set)  # show-suppressed | dump-cfg | text-only


def cmd_analyze(cfg: AnalyzeConfig) -> int:
    try:
        catalog = load_api_catalog(cfg.catalog)
        pack = load_rulepack(cfg.rules, catalog)
        sup = load_suppressions(cfg.suppress) if cfg.suppress else None
        report, results = analyze_paths(cfg.inputs, pack, catalog)
    except (CatalogError, RulepackError, SuppressionError, AnalysisError, OSError, ValueError) as e:
        _emit(f"vulnlens: error: {e}\n", sys.stderr)
        return EXIT_ERROR
    if sup is not None:
        report = apply_suppressions(report, sup)
    if "dump-cfg" in cfg.flags:
        for r in results:
            for cfg_ in r.cfgs.values():
                _emit(f"# {r.path}\n{cfg_.dump()}")
    if cfg.report:
        try:
            write_report(report, cfg.report)
        except OSError as e:
            _emit(f"vulnlens: error: cannot write {cfg.report}: {e.strerror}\n", sys.stderr)
            return EXIT_ERROR
    if not cfg.report or "text-only" in cfg.flags:
        _emit(render_text(report, "show-suppressed" in cfg.flags))
    else:
        shown = len(report.visible())
        _emit(f"{cfg.report}: {shown} issues ({len(report.gating())} gating) in {len(report.files)} file(s)\n")
    return EXIT_FINDINGS if report.gating() else EXIT_CLEAN


def cmd_suppress(report_path: str, instance_id: str, reason: Optional[str],
                 suppress_file: str = DEFAULT_SUPPRESSIONS, date: Optional[str] = None) -> int:
    instance_id = instance_id.strip().upper()
    if not ID_RE.match(instance_id):
        _emit(f"vulnlens: error: malformed instance id {instance_id!r} (expected 32 hex digits)\n", sys.stderr)
        return EXIT_ERROR
    try:
        report = read_report(report_path)
        sup = load_suppressions(suppress_file)
    except (ReportFormatError, SuppressionError) as e:
        _emit(f"vulnlens: error: {e}\n", sys.stderr)
        return EXIT_ERROR
    if instance_id not in report.by_id():
        _emit(f"vulnlens: warning: {instance_id} is not in {report_path}; suppressing anyway\n", sys.stderr)
    if reason:
        reason = " ".join(reason.split())
    if sup.add(instance_id, reason, date or _dt.date.today().isoformat()):
        path = Path(suppress_file)
        existing = path.read_text(encoding="utf-8") if path.exists() else ""
        if existing and not existing.endswith("\n"):
            existing += "\n"
        path.write_text(existing + sup.entries[instance_id].to_line() + "\n", encoding="utf-8")
        _emit(f"suppressed {instance_id}\n")
    else:
        _emit(f"{instance_id} already suppressed\n")
    return EXIT_CLEAN


def cmd_diff(old_path: str, new_path: str) -> int:
    try:
        old, new = read_report(old_path), read_report(new_path)
    except ReportFormatError as e:
        _emit(f"vulnlens: error: {e}\n", sys.stderr)
        return EXIT_ERROR
    _emit(diff_reports(old, new).render())
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vulnlens", description="Static security analyzer for a Java subset.")
    p.add_argument("--version", action="version", version=f"vulnlens {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze source files or directories")
    a.add_argument("inputs", nargs="+", metavar="PATH")
    a.add_argument("-f", dest="report", metavar="REPORT", help="write a .vlr report file")
    a.add_argument("--rules", help="rulepack file (default: shipped pack)")
    a.add_argument("--catalog", help="API catalog file (default: shipped catalog)")
    a.add_argument("--suppress", metavar="FILE", help="suppression file to apply")
    a.add_argument("--show-suppressed", action="store_true", help="include suppressed findings in text output")
    a.add_argument("--dump-cfg", action="store_true", help="print each method's control-flow graph")
    a.add_argument("--text-only", action="store_true", help="print the text rendering even with -f")

    s = sub.add_parser("suppress", help="add an instance id to a suppression file")
    s.add_argument("report")
    s.add_argument("instance_id", metavar="ID")
    s.add_argument("--reason")
    s.add_argument("--suppress", metavar="FILE", default=DEFAULT_SUPPRESSIONS)
    s.add_argument("--date", help="entry date (YYYY-MM-DD, default today)")

    d = sub.add_parser("diff", help="compare two reports")
    d.add_argument("old")
    d.add_argument("new")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits 2 on usage errors already
        return int(e.code or 0)
    if args.command == "analyze":
        flags = {name for name, on in (("show-suppressed", args.show_suppressed), ("dump-cfg", args.dump_cfg),
                                       ("text-only", args.text_only)) if on}
        return cmd_analyze(AnalyzeConfig(args.inputs, args.rules, args.catalog, args.report, args.suppress, flags))
    if args.command == "suppress":
        if args.date:
            try:
                _dt.date.fromisoformat(args.date)
            except ValueError:
                _emit(f"vulnlens: error: bad date {args.date!r}\n", sys.stderr)
                return EXIT_ERROR
        return cmd_suppress(args.report, args.instance_id, args.reason, args.suppress, args.date)
    return cmd_diff(args.old, args.new)


if __name__ == "__main__":
    sys.exit(main())
