import pytest

from conftest import wrap_main
from microgen import resource_program, taint_program
from oracles import brute_dominators
from vulnlens.cfg import EXCEPTION, FALSE, FINALLY_ENTRY, NORMAL, TRUE, build_cfg, dominators, may_throw
from vulnlens.fixtures import VERSIONS, fixture_text
from vulnlens.frontend import ast as A
from vulnlens.frontend import parse_source
from vulnlens.semantics import parse_catalog, resolve


def cfg_of(text, catalog, method="main"):
    model = resolve(parse_source(text, "T.java"), catalog)
    decl = next(m for m in model.unit.class_decl.methods if m.name == method)
    return build_cfg(decl, model), model


def reachable(cfg, start, banned=()):
    seen, stack = set(), [start]
    while stack:
        n = stack.pop()
        if n in seen or n in banned:
            continue
        seen.add(n)
        stack.extend(cfg.succs(n))
    return seen


def test_bare_return():
    cfg, _ = cfg_of("class A { static void m(){ return; } }", parse_catalog(""), "m")
    assert [n.kind for n in cfg.nodes if n.kind == "stmt"] == ["stmt"]
    assert len(cfg.edges) == 2
    [ret] = cfg.statement_nodes()
    assert cfg.succs(cfg.entry) == [ret] and cfg.succs(ret) == [cfg.exit]


def test_every_node_reachable(catalog):
    for v in VERSIONS:
        cfg, _ = cfg_of(fixture_text(v), catalog)
        live = reachable(cfg, cfg.entry)
        assert all(n in live for n in cfg.nodes if n.kind not in ("exit", "exc-exit"))


def test_v0_exception_edges_target_the_catch(catalog):
    cfg, model = cfg_of(fixture_text("v0"), catalog)
    [catch] = [n for n in cfg.nodes if n.kind == "catch"]
    assert catch.line == 39
    tried = [n for n in cfg.statement_nodes() if n.region == "try"]
    assert {n.line for n in tried} >= {9, 11, 13, 15, 16, 18, 20, 21, 22, 26, 28, 32, 33, 35, 36, 37}
    for n in tried:
        exc = [e.dst for e in cfg.out_edges(n) if e.kind == EXCEPTION]
        assert exc == ([catch] if may_throw(n.ast, model) else []), n


@pytest.mark.parametrize("version", VERSIONS)
def test_exception_edge_count(catalog, version):
    cfg, model = cfg_of(fixture_text(version), catalog)
    for n in cfg.nodes:
        count = sum(e.kind == EXCEPTION for e in cfg.out_edges(n))
        if n.ast is None or n.kind not in ("stmt", "cond") or not may_throw(n.ast, model):
            assert count == 0
        elif n.region == "try" and n.try_stmt.catches:
            assert count == len(n.try_stmt.catches)
        else:
            assert count == 1


def test_v5_finally_is_unavoidable(catalog):
    cfg, _ = cfg_of(fixture_text("v5"), catalog)
    fin = {n for n in cfg.nodes if n.in_region("finally")}
    assert fin
    for n in cfg.nodes:
        if n.region == "try":
            escape = reachable(cfg, n, banned=fin)
            assert cfg.exit not in escape and cfg.exc_exit not in escape, n


def test_v5_without_finally_keeps_catch_edges(catalog):
    text = fixture_text("v5")
    model = resolve(parse_source(text, "T.java"), catalog)
    main = next(m for m in model.unit.class_decl.methods if m.name == "main")
    with_fin = build_cfg(main, model)
    [tcf] = [s for s in main.body.statements if isinstance(s, A.TryCatchFinally)]
    tcf.finally_ = None
    without = build_cfg(main, model)

    def catch_edges(cfg):
        return {(e.src.ast.span, e.dst.line) for e in cfg.edges if e.kind == EXCEPTION and e.dst.kind == "catch"}

    assert catch_edges(with_fin) == catch_edges(without)
    assert len(without.nodes) < len(with_fin.nodes)
    assert not any(n.kind == "finally" for n in without.nodes)


def test_finally_copies_per_route(catalog):
    body = """
        FileReader f = null;
        try {
            f = new FileReader("a.txt");
            if (f == null) { return; }
            f.close();
        }
        catch (IOException e) { System.out.println("x"); }
        finally { f = null; }
    """
    cfg, _ = cfg_of(wrap_main(body), catalog)
    routes = sorted(n.route for n in cfg.nodes if n.kind == "finally")
    assert routes == ["exception", "normal", "return"]
    entries = [e for e in cfg.edges if e.kind == FINALLY_ENTRY]
    assert {e.dst.route for e in entries} == {"normal", "return"}
    [exc_copy] = [n for n in cfg.nodes if n.kind == "finally" and n.route == "exception"]
    assert {e.kind for e in cfg.in_edges(exc_copy)} == {EXCEPTION}


def test_return_inside_try_runs_finally(catalog):
    body = """
        try { System.out.println("a"); return; }
        finally { System.out.println("b"); }
    """
    cfg, _ = cfg_of(wrap_main(body), catalog)
    [ret] = [n for n in cfg.nodes if isinstance(n.ast, A.Return)]
    [marker] = cfg.succs(ret)
    assert marker.kind == "finally" and marker.route == "return"
    assert cfg.exit in reachable(cfg, marker)


def test_while_has_back_edge(catalog):
    cfg, _ = cfg_of(wrap_main("int i = 0; while (i < 3){ i++; }"), catalog)
    [cond] = [n for n in cfg.nodes if n.kind == "cond"]
    [body] = [e.dst for e in cfg.out_edges(cond) if e.kind == TRUE]
    assert cond in cfg.succs(body)
    assert [e.kind for e in cfg.out_edges(cond)] == [TRUE, FALSE]


def test_for_loop_order(catalog):
    cfg, _ = cfg_of(wrap_main("for (int k = 0; k < 3; k++){ System.out.println(\"x\"); }"), catalog)
    init = next(n for n in cfg.nodes if isinstance(n.ast, A.LocalVarDecl))
    cond = next(n for n in cfg.nodes if n.kind == "cond")
    update = next(n for n in cfg.nodes if isinstance(n.ast, A.UnaryOp))
    assert cfg.succs(init) == [cond]
    assert cond in cfg.succs(update)


def test_infinite_for_has_no_false_edge(catalog):
    cfg, _ = cfg_of(wrap_main("for (;;){ System.out.println(\"x\"); }"), catalog)
    [cond] = [n for n in cfg.nodes if n.kind == "cond"]
    assert [e.kind for e in cfg.out_edges(cond)] == [TRUE]
    assert not cfg.in_edges(cfg.exit)


def test_dump_is_ordered_by_source(catalog):
    cfg, _ = cfg_of(wrap_main("int a = 1;\nif (a > 0){ a = 2; }"), catalog)
    text = cfg.dump()
    lines = [l for l in text.splitlines() if l.startswith("  n")]
    assert lines[0].endswith("entry")
    assert "L6 LocalVarDecl" in lines[1] and "cond L7" in lines[2]
    assert lines[-2].endswith("exit") and lines[-1].endswith("exc-exit")
    assert f"-> n{cfg.exit.id} {NORMAL}" in text


# ---------- dominators ----------


def test_straight_line_idoms(catalog):
    cfg, _ = cfg_of(wrap_main("int a = 1;\nint b = 2;"), catalog)
    dom = dominators(cfg)
    s1, s2 = cfg.statement_nodes()
    assert dom[cfg.entry] is None and dom[s1] is cfg.entry and dom[s2] is s1


def test_diamond_join(catalog):
    cfg, _ = cfg_of(wrap_main("int a = 1;\nif (a > 0){ a = 2; } else { a = 3; }\nint b = a;"), catalog)
    dom = dominators(cfg)
    [cond] = [n for n in cfg.nodes if n.kind == "cond"]
    join = next(n for n in cfg.nodes if isinstance(n.ast, A.LocalVarDecl) and n.ast.name == "b")
    assert dom[join] is cond


def test_v2_file_reader_dominated_by_sanitize_true_branch(catalog):
    cfg, model = cfg_of(fixture_text("v2"), catalog)
    dom = dominators(cfg)
    [guard] = [n for n in cfg.nodes if n.kind == "cond" and "sanitize" in A.token_text(model.unit, n.ast)]
    [true_edge] = [e for e in cfg.out_edges(guard) if e.kind == TRUE]
    fr = [n for n in cfg.nodes if any(isinstance(c, A.ConstructorCall) and c.class_name == "FileReader"
                                      for c in A.calls_in(n.ast or A.Block(guard.ast.span)))]
    assert fr
    for n in fr:
        assert dom.dominates(true_edge.dst, n)
        assert dom.edge_dominates(cfg, true_edge, n)


def _check_against_brute(cfg):
    dom = dominators(cfg)
    brute = brute_dominators(cfg)
    assert set(dom) == set(brute)
    for b in brute:
        for a in brute:
            assert dom.dominates(a, b) == (a in brute[b])


@pytest.mark.parametrize("version", VERSIONS)
def test_dominators_match_brute_force_on_fixtures(catalog, version):
    model = resolve(parse_source(fixture_text(version)), catalog)
    for m in model.unit.class_decl.methods:
        _check_against_brute(build_cfg(m, model))


@pytest.mark.parametrize("seed", range(40))
def test_dominators_match_brute_force_on_generated(catalog, seed):
    for text in (taint_program(seed), resource_program(seed).source()):
        model = resolve(parse_source(text), catalog)
        for m in model.unit.class_decl.methods:
            _check_against_brute(build_cfg(m, model))


def test_idom_relation_is_acyclic(catalog):
    cfg, _ = cfg_of(fixture_text("v5"), catalog)
    dom = dominators(cfg)
    for n in dom:
        seen = set()
        while n is not None:
            assert n not in seen
            seen.add(n)
            n = dom[n]
        assert cfg.entry in seen
