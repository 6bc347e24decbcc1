import itertools

from conftest import compile_src, errors_of

HIERARCHY = '''package main
private interface I end
private interface J extends I end
private object A implements I end
private object B extends A end
private object C extends B end
private object D extends C implements J end
private object E extends D end
public object Program
    public fun run [ ]
end
'''

NAMES = ["I", "J", "A", "B", "C", "D", "E"]

# declared edges, straight from the source above
EDGES = {
    "J": {"I"}, "A": {"I"}, "B": {"A"}, "C": {"B"}, "D": {"C", "J"}, "E": {"D"},
    "I": set(),
}


def reachability_oracle(s, t):
    """Brute-force graph reachability over the declared edges."""
    seen = set()
    work = [s]
    while work:
        cur = work.pop()
        if cur == t:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        work.extend(EDGES.get(cur, ()))
    return False


def test_full_subtype_matrix_matches_reachability():
    program = compile_src(HIERARCHY)
    assert not program.reporter.has_errors(), program.reporter.format_all()
    table = program.table
    for s, t in itertools.product(NAMES, NAMES):
        assert table.is_subtype(s, t) == reachability_oracle(s, t), (s, t)


def test_paper_supertype_claims():
    program = compile_src(HIERARCHY)
    table = program.table
    # J and D are supertypes of E; I is a supertype of every other type
    assert table.is_subtype("E", "J") and table.is_subtype("E", "D")
    for n in NAMES:
        assert table.is_subtype(n, "I")
    # B is a supertype of C, D, and E
    for n in ("C", "D", "E"):
        assert table.is_subtype(n, "B")


def test_reflexivity():
    program = compile_src(HIERARCHY)
    for n in NAMES:
        assert program.table.is_subtype(n, n)


def test_nil_assignable_to_everything():
    program = compile_src(HIERARCHY)
    for n in NAMES + ["Int", "String", "Any", "Array<Int>"]:
        program.table.resolve_canonical(n)
        assert program.table.is_subtype("Nil", n)


LEGAL_PAIRS = [("i", "j"), ("i", "a"), ("a", "e"), ("j", "d"), ("b", "d"), ("j", "e")]
DECLS = {"i": "I", "j": "J", "a": "A", "b": "B", "d": "D", "e": "E"}


def _assign_program(dst, src):
    decls = "".join(f"        :{v} {t};\n" for v, t in DECLS.items())
    inits = "".join(f"        {v} = {t};\n" for v, t in DECLS.items()
                    if t not in ("I", "J"))
    return HIERARCHY.replace("    public fun run [ ]", f'''    public fun run [
{decls}{inits}        {dst} = {src};
    ]''')


def test_every_legal_assignment_checks_clean():
    for dst, src in LEGAL_PAIRS:
        msgs = errors_of(_assign_program(dst, src))
        assert not msgs, f"{dst} = {src}: {msgs}"


def test_every_reversed_assignment_is_a_diagnostic():
    for dst, src in LEGAL_PAIRS:
        msgs = errors_of(_assign_program(src, dst))
        assert "is not a subtype of" in msgs, f"{src} = {dst} should fail, got: {msgs}"


def test_restricted_not_subtype_of_any():
    program = compile_src(HIERARCHY)
    table = program.table
    blk = table.block_type([], "Void")               # Block, restricted
    ublk = table.block_type([], "Void", restricted=False)
    assert not table.is_subtype(blk, "Any")
    assert table.is_subtype(ublk, "Any")
    assert table.is_subtype(ublk, blk)               # u-blocks usable as r-blocks
    assert not table.is_subtype(blk, ublk)


def test_generic_instantiation_memoized():
    program = compile_src('''package main
private object Stack<:T>
    public fun init [ ]
end
public object Program
    public fun run [
        :a = Stack<Int> new;
        :b = Stack<Int> new;
    ]
end
''')
    assert not program.reporter.has_errors(), program.reporter.format_all()
    t1 = program.table.get("Stack<Int>")
    t2 = program.table.get("Stack<Int>")
    assert t1 is t2 and t1 is not None


def test_generic_bound_violation():
    msgs = errors_of('''package main
private object Base end
private object Sub extends Base end
private object Keeper<:T Base>
    public fun init [ ]
end
public object Program
    public fun run [
        :ok = Keeper<Sub> new;
        :bad = Keeper<Int> new;
    ]
end
''')
    assert "does not satisfy the bound" in msgs


def test_interface_cannot_extend_prototype_and_viceversa():
    msgs = errors_of('''package main
private object P end
private interface K extends P end
public object Program
    public fun run [ ]
end
''')
    assert "cannot extend non-interface" in msgs
    msgs = errors_of('''package main
private interface K end
private object P extends K end
public object Program
    public fun run [ ]
end
''')
    assert "cannot extend interface" in msgs


def test_duplicate_prototype_name():
    msgs = errors_of('''package main
private object P end
private object P end
public object Program
    public fun run [ ]
end
''')
    assert "duplicate prototype name" in msgs


def test_prelude_registered():
    program = compile_src("package main\npublic object Program\n public fun run [ ]\nend")
    table = program.table
    for name in ("Any", "Int", "String", "CySymbol", "CyException", "CatchAll",
                 "StrException", "In", "Out", "System", "Block", "UBlock",
                 "AnyBlock", "AnyUBlock", "ContextObject", "Nil"):
        assert table.get(name) is not None, name
    assert table.get("Int").supertype == "Any"
    assert table.get("Int").is_final
