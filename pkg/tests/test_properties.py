"""Cross-module property tests: random hierarchies against the reachability
oracle, random regexes against the derivation rules, bl monotonicity,
and static-resolution soundness by exhaustive runtime enumeration."""

import itertools

from hypothesis import given, settings, strategies as st

from conftest import compile_src
from cyanine.cyast import GAlt, GOpt, GPlus, GSel, GSeq, GStar, TypeExpr
from cyanine.grammar_methods import derive_parameter_type
from cyanine.interp import Interp


# --- random hierarchies: is_subtype == brute-force reachability ---------------

@st.composite
def hierarchies(draw):
    """A random single-inheritance DAG with interfaces."""
    n_proto = draw(st.integers(min_value=1, max_value=6))
    n_iface = draw(st.integers(min_value=0, max_value=3))
    protos = [f"P{i}" for i in range(n_proto)]
    ifaces = [f"K{i}" for i in range(n_iface)]
    edges = {}
    lines = []
    for i, name in enumerate(ifaces):
        supers = draw(st.lists(st.sampled_from(ifaces[:i]), unique=True, max_size=2)) \
            if i else []
        edges[name] = set(supers)
        ext = (" extends " + ", ".join(supers)) if supers else ""
        lines.append(f"private interface {name}{ext} end")
    for i, name in enumerate(protos):
        sup = draw(st.sampled_from(protos[:i])) if i and draw(st.booleans()) else None
        impls = draw(st.lists(st.sampled_from(ifaces), unique=True, max_size=2)) \
            if ifaces else []
        edges[name] = set(impls) | ({sup} if sup else set())
        ext = f" extends {sup}" if sup else ""
        imp = (" implements " + ", ".join(impls)) if impls else ""
        lines.append(f"private object {name}{ext}{imp} end")
    src = "package main\n" + "\n".join(lines) + \
        "\npublic object Program\n    public fun run [ ]\nend\n"
    return src, edges, protos + ifaces


def reach(edges, s, t):
    seen, work = set(), [s]
    while work:
        cur = work.pop()
        if cur == t:
            return True
        if cur in seen:
            continue
        seen.add(cur)
        work.extend(edges.get(cur, ()))
    return False


@given(hierarchies())
@settings(max_examples=40, deadline=None)
def test_random_hierarchy_subtype_equals_reachability(data):
    src, edges, names = data
    program = compile_src(src)
    assert not program.reporter.has_errors(), program.reporter.format_all()
    table = program.table
    for s, t in itertools.product(names, names):
        assert table.is_subtype(s, t) == reach(edges, s, t), (s, t, src)


# --- random regexes: the derivation is compositional ---------------------------

def T(n):
    return TypeExpr(n, [])


@st.composite
def regexes(draw, depth=2):
    if depth == 0:
        kind = draw(st.sampled_from(["none", "types", "star"]))
        sel = draw(st.sampled_from(["a:", "b:", "c:"]))
        if kind == "none":
            return GSel(sel, ("none",))
        ty = draw(st.sampled_from(["Int", "String"]))
        if kind == "types":
            return GSel(sel, ("types", [[T(ty)]]))
        return GSel(sel, ("star", [T(ty)]))
    knd = draw(st.sampled_from(["seq", "alt", "star", "plus", "opt", "leaf"]))
    if knd == "leaf":
        return draw(regexes(depth=0))
    if knd in ("seq", "alt"):
        items = draw(st.lists(regexes(depth=depth - 1), min_size=2, max_size=3))
        return GSeq(items) if knd == "seq" else GAlt(items)
    inner = draw(regexes(depth=depth - 1))
    return {"star": GStar, "plus": GPlus, "opt": GOpt}[knd](inner)


@given(regexes())
@settings(max_examples=80, deadline=None)
def test_derivation_is_compositional(regex):
    derived = derive_parameter_type(regex)
    if isinstance(regex, GSeq):
        parts = [derive_parameter_type(x) for x in regex.items]
        want = parts[0].canonical() if len(parts) == 1 else \
            "UTuple<" + ", ".join(p.canonical() for p in parts) + ">"
        assert derived.canonical() == want
    elif isinstance(regex, GAlt):
        parts = [derive_parameter_type(x) for x in regex.items]
        assert derived.canonical() == "UUnion<" + ", ".join(p.canonical() for p in parts) + ">"
    elif isinstance(regex, (GStar, GPlus)):
        inner = derive_parameter_type(regex.item)
        assert derived.canonical() == f"Array<{inner.canonical()}>"
    elif isinstance(regex, GOpt):
        inner = derive_parameter_type(regex.item)
        assert derived.canonical() == f"UUnion<{inner.canonical()}>"


# --- bl monotonicity ------------------------------------------------------------

@given(st.integers(min_value=1, max_value=3), st.booleans())
@settings(max_examples=30, deadline=None)
def test_bl_monotonic(level_of_access, has_return):
    from cyanine.parser import parse_source
    from cyanine.desugar import desugar_units
    from cyanine.block_analysis import analyze_method
    from cyanine.cyast import MethodDecl
    decl_lines = {1: ":a1 = 1;", 2: "", 3: ""}
    access = f"a{level_of_access}"
    ret = "return;" if has_return else ""
    src = f'''package p
object T
public fun test [
    :a1 = 1;
    if ( true ) [
        :a2 = 2;
        if ( true ) [
            :a3 = 3;
            :probe = [ {ret} Out println: {access}; ];
        ];
    ];
]
end
'''
    cu, rep = parse_source(src)
    units, _ = desugar_units(cu.units, rep)
    m = [s for s in units[0].slots if isinstance(s, MethodDecl) and s.name == "test"][0]
    infos = analyze_method(m, rep)
    probe = infos[-1]
    base = 0 if has_return else -1
    assert probe.bl == max(base, level_of_access)


# --- static resolution soundness --------------------------------------------------

def test_statically_checked_sends_never_raise_method_not_found():
    """Exhaustively enumerate runtime receiver/argument types for a statically
    resolved send: a runtime overload is always reachable."""
    hierarchy = '''package main
private object Food end
private object Grass extends Food end
private object FishMeat extends Food end
private object Animal
    public fun eat: (:food Food) -> Int [ return 0 ]
end
private object Cow extends Animal
     public override fun eat: (:food Grass) -> Int [ return 1 ]
end
private object Fish extends Animal
    public override fun eat: (:food FishMeat) -> Int [ return 2 ]
end
public object Program
    public fun run [
        :animal Animal;
        :food Food;
        animal = Cow;
        food = Grass;
        :r = animal eat: food;
    ]
end
'''
    program = compile_src(hierarchy)
    assert not program.reporter.has_errors()
    interp = Interp(program)
    interp.setup()
    table = program.table
    receivers = ["Animal", "Cow", "Fish"]          # runtime subtypes of Animal
    args = ["Food", "Grass", "FishMeat"]           # runtime subtypes of Food
    for recv, arg in itertools.product(receivers, args):
        robj = table.get(recv).proto_object
        aobj = table.get(arg).proto_object
        hit = interp.lookup(robj, [("eat:", [aobj])])
        assert hit is not None, (recv, arg)


# --- generic instantiation is referentially transparent -----------------------------

def test_generic_instantiation_referentially_transparent():
    from cyanine.cyast import pp_unit, to_sexpr
    from cyanine.parser import parse_source
    from cyanine.desugar import Desugarer
    from cyanine.diagnostics import Reporter
    src = '''package main
private object Pair<:T>
    public fun set: (:x T) [ kept = x ]
    public fun get -> T [ ^kept ]
    private :kept T
end
public object Program
    public fun run [
        :p = Pair<Int> new;
        p set: 3;
        Out println: (p get);
    ]
end
'''
    program = compile_src(src)
    assert not program.reporter.has_errors(), program.reporter.format_all()
    entry = program.table.get("Pair<Int>")
    assert entry is not None
    # dump the instantiated prototype, re-parse, re-desugar: structurally equal
    printed = "package main\n" + pp_unit(entry.decl).replace("Pair<Int>", "PairInt2")
    cu, rep = parse_source(printed)
    assert not rep.has_errors(), rep.format_all() + printed
    redone = Desugarer(cu.units, Reporter()).run()
    import re as _re
    def norm(units):
        s = to_sexpr(units)
        s = s.replace("PairInt2", "Pair<Int>")
        return _re.sub(r"\$\d+", "$N", s)
    assert norm(redone) == norm([entry.decl])
