"""Seeded generators of small programs for the oracle and property tests."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

HEADER = "import java.io.*;\nimport java.net.*;\nimport java.util.*;\n\nclass Gen {\n"
SANITIZE = (
    "    public static int sanitize(String name){\n"
    "        if (name.endsWith(\".txt\")){\n"
    "            return 0;\n"
    "        }\n"
    "        return -1;\n"
    "    }\n"
)


@dataclass
class _Ctx:
    rng: random.Random
    budget: int
    strings: list[str]
    ints: list[str]
    has_args: bool
    fresh: int = 0
    lines: list[str] = field(default_factory=list)

    def name(self, prefix: str) -> str:
        self.fresh += 1
        return f"{prefix}{self.fresh}"


def _s(c: _Ctx) -> str:
    return c.rng.choice(c.strings)


def _i(c: _Ctx) -> str:
    return c.rng.choice(c.ints)


def _simple(c: _Ctx) -> str:
    r = c.rng
    choices = [
        lambda: f"{_s(c)} = br.readLine();",
        lambda: f"{_i(c)} = sc.nextInt();",
        lambda: f"{_i(c)} = br.read(buf, 0, 20);",
        lambda: f"{_s(c)} = new String(buf);",
        lambda: f"{_i(c)} = Integer.parseInt({_s(c)});",
        lambda: f"{_s(c)} = {_s(c)} + {_s(c)};",
        lambda: f"{_s(c)} = {_s(c)} + \"x\";",
        lambda: f"{_s(c)} = {_s(c)};",
        lambda: f"{_s(c)} = \"lit.txt\";",
        lambda: f"{_i(c)} = {_i(c)} + {_i(c)} * 2;",
        lambda: f"{_i(c)} = -{_i(c)};",
        lambda: f"{_i(c)} = (int) {_i(c)};",
        lambda: f"{_i(c)} = {_i(c)};",
        lambda: f"{_i(c)} = 7;",
        lambda: f"{_i(c)} = ports[{_i(c)}];",
        lambda: f"{_i(c)} = vals[{_i(c)}];",
        lambda: f"vals[0] = {_i(c)};",
        lambda: f"{_i(c)} = sanitize({_s(c)});",
        lambda: f"{_i(c)}++;",
        lambda: f"System.out.println({_s(c)});",
        lambda: f"ServerSocket {c.name('ss')} = new ServerSocket({_i(c)});",
        lambda: f"ServerSocket {c.name('ss')} = new ServerSocket(ports[{_i(c)}]);",
        lambda: f"FileReader {c.name('fr')} = new FileReader({_s(c)});",
        lambda: f"FileReader {c.name('fr')} = new FileReader({_s(c)} + \".txt\");",
    ]
    if c.has_args:
        choices.append(lambda: f"{_s(c)} = args[{_i(c)}];")
        choices.append(lambda: f"{_i(c)} = Integer.parseInt(args[0]);")
    return r.choice(choices)()


def _block(c: _Ctx, depth: int, indent: str, n: int) -> None:
    for _ in range(n):
        if c.budget <= 0:
            return
        c.budget -= 1
        r = c.rng.random()
        if depth >= 2 or r < 0.55:
            c.lines.append(indent + _simple(c))
            continue
        pick = c.rng.randrange(7)
        inner = indent + "    "
        if pick == 0:
            c.lines.append(f"{indent}if (sanitize({_s(c)}) == 0){{")
            _block(c, depth + 1, inner, c.rng.randint(1, 3))
            if c.rng.random() < 0.5:
                c.lines.append(f"{indent}}} else {{")
                _block(c, depth + 1, inner, c.rng.randint(1, 2))
            c.lines.append(f"{indent}}}")
        elif pick == 1:
            guarded = _s(c)
            temp = c.name("r")
            c.lines.append(f"{indent}int {temp} = sanitize({guarded});")
            op = c.rng.choice(["==", "!="])
            c.lines.append(f"{indent}if ({temp} {op} 0){{")
            _block(c, depth + 1, inner, c.rng.randint(1, 3))
            c.lines.append(f"{indent}}}")
        elif pick == 2:
            c.lines.append(f"{indent}if ({_i(c)} > {_i(c)}){{")
            _block(c, depth + 1, inner, c.rng.randint(1, 2))
            if c.rng.random() < 0.3:
                c.lines.append(f"{inner}return;")
            c.lines.append(f"{indent}}}")
        elif pick == 3:
            c.lines.append(f"{indent}while ({_i(c)} < 10){{")
            _block(c, depth + 1, inner, c.rng.randint(1, 3))
            c.lines.append(f"{inner}{_i(c)}++;")
            c.lines.append(f"{indent}}}")
        elif pick == 4:
            k = c.name("k")
            c.lines.append(f"{indent}for (int {k} = 0; {k} < 3; {k}++){{")
            _block(c, depth + 1, inner, c.rng.randint(1, 2))
            c.lines.append(f"{indent}}}")
        elif pick == 5:
            c.lines.append(f"{indent}try{{")
            _block(c, depth + 1, inner, c.rng.randint(1, 3))
            c.lines.append(f"{indent}}}")
            c.lines.append(f"{indent}catch(IOException {c.name('e')}){{")
            _block(c, depth + 1, inner, c.rng.randint(0, 2))
            c.lines.append(f"{indent}}}")
        else:
            c.lines.append(f"{indent}if ({_s(c)} != null){{")
            _block(c, depth + 1, inner, c.rng.randint(1, 2))
            c.lines.append(f"{indent}}} else {{")
            _block(c, depth + 1, inner, c.rng.randint(1, 2))
            c.lines.append(f"{indent}}}")


def taint_program(seed: int, max_statements: int = 30) -> str:
    """A random program over sources, passthroughs, validators and sinks of the default pack."""
    rng = random.Random(seed)
    has_args = rng.random() < 0.5
    prelude = [
        "BufferedReader br = new BufferedReader(new InputStreamReader(System.in));",
        "Scanner sc = new Scanner(System.in);",
        "int[] ports = {2345, 1234, 8943};",
        "int[] vals = {1, 2, 3};",
        "char[] buf = new char[20];",
        "String s1 = \"a.txt\";",
        "String s2 = null;",
        "int i1 = 0;",
        "int i2 = 1;",
    ]
    c = _Ctx(rng, max_statements - len(prelude), ["s1", "s2"], ["i1", "i2"], has_args)
    _block(c, 0, "            ", max_statements)
    body = ["            " + p for p in prelude] + c.lines
    tail = "        }\n        catch(IOException ie){\n            System.out.println(\"error\");\n        }\n"
    if rng.random() < 0.4:
        tail += "        finally{\n            System.out.println(\"done\");\n        }\n"
    params = "String[] args" if has_args else ""
    return (HEADER + SANITIZE + f"\n    public static void main({params}){{\n        try{{\n"
            + "\n".join(body) + "\n" + tail + "    }\n}\n")


# -- resource programs ------------------------------------------------------

RESOURCES = [
    ("BufferedReader", "new BufferedReader(new FileReader(\"in.txt\"))"),
    ("FileReader", "new FileReader(\"in.txt\")"),
    ("PrintStream", "new PrintStream(sock.getOutputStream())"),
    ("BufferedReader", "new BufferedReader(new InputStreamReader(sock.getInputStream()))"),
]


@dataclass
class ResourceProgram:
    """Parts of a generated resource program, re-assemblable with closes moved around."""

    names: list[str]
    decls: list[str]
    body: list[list[str]]  # each item is one top-level try-body statement (possibly multi-line)
    close_items: list[int]  # indexes into ``body`` that are plain closes
    catch_body: list[str]
    finally_body: list[str]

    def source(self, closes: str = "try", add_finally: bool = False) -> str:
        """``closes``: keep closes in the try body ("try"), move them into the catch ("catch")."""
        lines = [HEADER, "    public static void main(){\n"]
        lines += [f"        {d}\n" for d in self.decls]
        lines.append("        try{\n")
        for i, item in enumerate(self.body):
            if i in self.close_items and closes != "try":
                continue
            lines += [f"            {ln}\n" for ln in item]
        lines.append("        }\n        catch(IOException ie){\n")
        lines += [f"            {ln}\n" for ln in self.catch_body]
        if closes == "catch":
            lines += [f"            {ln}\n" for i in self.close_items for ln in self.body[i]]
        lines.append("        }\n")
        fin = list(self.finally_body)
        if add_finally:
            for n in self.names:
                fin += [f"if ({n} != null)", f"    {n}.close();"]
        if fin:
            lines.append("        finally{\n")
            lines += [f"            {ln}\n" for ln in fin]
            lines.append("        }\n")
        lines.append("    }\n}\n")
        return "".join(lines)


def resource_program(seed: int) -> ResourceProgram:
    rng = random.Random(seed)
    count = rng.randint(1, 3)
    names = [f"res{k}" for k in range(count)]
    kinds = [rng.choice(RESOURCES) for _ in names]
    decls = ["Socket sock = new Socket();", "String line = null;"] + [f"{t} {n} = null;" for (t, _), n in zip(kinds, names)]
    body: list[list[str]] = []
    closes: list[int] = []
    pending = list(zip(names, kinds))
    rng.shuffle(pending)
    acquired: list[str] = []
    while pending or rng.random() < 0.3:
        roll = rng.random()
        if pending and roll < 0.45:
            n, (t, ctor) = pending.pop()
            if rng.random() < 0.3:
                body.append([f"if (line == null){{", f"    {n} = {ctor};", "}"])
            else:
                body.append([f"{n} = {ctor};"])
            acquired.append(n)
        elif roll < 0.7:
            body.append(["line = \"x\";"] if rng.random() < 0.4 else ["sock.close();"])
        elif roll < 0.8:
            body.append(["if (line == null){", "    return;", "}"])
        elif roll < 0.9:
            body.append(["while (line == null){", "    sock.close();", "}"])
        elif acquired:
            n = rng.choice(acquired)
            closes.append(len(body))
            body.append([f"{n}.close();"])
        if len(body) > 12:
            break
    for n, _ in pending:
        body.append([f"{n} = null;"])
    for n in acquired:
        if rng.random() < 0.7:
            closes.append(len(body))
            body.append([f"{n}.close();"])
    catch_body = [rng.choice(["System.out.println(\"error\");", "line = null;"])]
    finally_body: list[str] = []
    if rng.random() < 0.3:
        finally_body.append("line = null;")
    return ResourceProgram(names, decls, body, sorted(set(closes)), catch_body, finally_body)
