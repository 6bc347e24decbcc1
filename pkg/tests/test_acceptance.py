"""Acceptance criteria, one test per criterion.

Each test exercises its criterion at the stated tolerance (byte-exact output,
exact derived types, exact diagnostics, wall-clock budgets) and prints a
`PASS criterion N` line on success.
"""

import glob
import itertools
import os
import time

import pytest

from conftest import compile_src, errors_of, run_src
from cyanine.corpus import run_case
from cyanine.grammar_methods import NoMatch, build_automaton, match_message
from cyanine.interp import Interp

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")


def corpus_file(name):
    with open(os.path.join(CORPUS, name), encoding="utf-8") as fh:
        return fh.read()


def ok(n, text):
    print(f"PASS criterion {n}: {text}")


# -- 1 ------------------------------------------------------------------------

def test_criterion_1_multimethods():
    src = corpus_file("03_multimethods.cyan")
    t0 = time.perf_counter()
    code, out, _ = run_src(src)
    elapsed = time.perf_counter() - t0
    expected = "".join(line + "\n" for line in [
        "eating grass", "eating food", "eating grass", "eating food",
        "eating fish meat", "eating plants", "eating food",
        "eating fish meat", "eating plants", "eating food"])
    assert code == 0
    assert out == expected
    assert elapsed < 1.0, f"took {elapsed:.2f}s"
    ok(1, "multimethod dispatch prints the 10 commented lines byte-exact")


# -- 2 ------------------------------------------------------------------------

def test_criterion_2_block_semantics():
    code, out, _ = run_src('''package main
public object Program
    public fun run [
        :b0 = [ |:x Int| ^x*x ];
        Out println: (b0 eval: 5);
    ]
end
''')
    assert out == "25\n"
    code, out, _ = run_src(corpus_file("05_block_capture.cyan"))
    assert out == "7\n8\n3\n10\n5\n"
    code, out, _ = run_src(corpus_file("06_block_percent.cyan"))
    assert out == "8\n2\n8\n4\n"
    ok(2, "block eval 25; capture prints 7, 8, 3, 10, 5; % prints 8, 2, 8, 4")


# -- 3 ------------------------------------------------------------------------

def test_criterion_3_grammar_methods():
    from test_grammar_methods import DERIVATION_ROWS, derive_parameter_type
    assert len(DERIVATION_ROWS) >= 17
    for regex, expected in DERIVATION_ROWS:
        assert derive_parameter_type(regex).canonical() == expected
    code, out, _ = run_src(corpus_file("34_grammar_greedy.cyan"))
    assert out == "2 0\n"
    code, out, _ = run_src(corpus_file("32_grammar_intset.cyan"))
    assert out.splitlines()[0] == "0 2 4"
    code, out, _ = run_src(corpus_file("37_grammar_defaults.cyan"))
    assert out.splitlines()[0] == "0 0 300 150 7"   # width=300, color default
    ok(3, f"{len(DERIVATION_ROWS)} derivation rows exact; greedy [0,1]/[];"
          " IntSet packs 3 ints; Window defaults fill")


# -- 4 ------------------------------------------------------------------------

def test_criterion_4_matching_oracle():
    from test_grammar_methods import (CORPUS_SIGNATURES, oracle_possessive,
                                      same_type, subtype_flat, symbols_of)
    t0 = time.perf_counter()
    total = 0
    for regex in CORPUS_SIGNATURES:
        auto = build_automaton(regex)
        alphabet = symbols_of(regex)
        max_len = 8
        while len(alphabet) ** max_len > 150_000:
            max_len -= 1
        for length in range(0, max_len + 1):
            for combo in itertools.product(alphabet, repeat=length):
                shape = [(s, list(a)) for s, a in combo]
                want = oracle_possessive(regex, shape, same_type, subtype_flat)
                try:
                    match_message(auto, shape, same_type, subtype_flat)
                    got = len(shape)
                except NoMatch:
                    got = None
                assert got == want, (regex, shape)
                total += 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"took {elapsed:.1f}s"
    ok(4, f"automaton matching agrees with the brute-force oracle on {total}"
          f" shapes in {elapsed:.1f}s")


# -- 5 ------------------------------------------------------------------------

def test_criterion_5_subtyping():
    from test_subtype import (HIERARCHY, LEGAL_PAIRS, NAMES, _assign_program,
                              reachability_oracle)
    program = compile_src(HIERARCHY)
    table = program.table
    for s, t in itertools.product(NAMES, NAMES):
        assert table.is_subtype(s, t) == reachability_oracle(s, t), (s, t)
    for dst, src in LEGAL_PAIRS:
        assert not errors_of(_assign_program(dst, src))
        assert "is not a subtype of" in errors_of(_assign_program(src, dst))
    ok(5, "subtype matrix equals reachability; legal assignments clean,"
          " reversed ones diagnosed")


# -- 6 ------------------------------------------------------------------------

def test_criterion_6_rblock_rules():
    rejected = {
        "09_err_rblock_ivar.cyan": "[rule b]",
        "10_err_rblock_return.cyan": "[rule c]",
        "11_err_rblock_ivar_int.cyan": "[rule b]",
        "12_err_rblock_assign.cyan": "[rule d]",
        "13_err_rblock_nested.cyan": "[rule c]",
    }
    for name, letter in rejected.items():
        msgs = errors_of(corpus_file(name))
        assert letter in msgs, f"{name}: wanted {letter}, got {msgs}"
    accepted = ["07_blocks_ok_same_level.cyan", "08_blocks_ok_return_block.cyan"]
    for name in accepted:
        code, _out, _ = run_src(corpus_file(name))
        assert code == 0, name
    ok(6, "five closure-problem programs rejected with their rule letters;"
          " the two safe ones run to completion")


# -- 7 ------------------------------------------------------------------------

def test_criterion_7_ehs():
    base = corpus_file("15_ehs_selecting_zero.cyan")
    program_src = "package main" + base.split("package main", 1)[1]
    for stdin, want in [("0", "zero number"), ("-1", "negative number"),
                        ("1001", "big number"), ("4", "even number"),
                        ("7", None)]:
        code, out, _ = run_src(program_src, stdin=stdin)
        expected = (want + "\n" if want else "") + "this is the end\n"
        assert out == expected, (stdin, out)
    code, out, _ = run_src(corpus_file("20_ehs_retry.cyan"), stdin="-1 -2 3.5")
    assert out == "Negative radius. Type it again\nNegative radius. Type it again\n3.5\n"
    code, out, _ = run_src(corpus_file("21_ehs_times5.cyan"))
    assert out == "attempts: 5\n"
    # finally executes exactly once per frame pop in all paths
    code, out, _ = run_src('''package main
private object Boom extends CyException end
public object Program
    private :count Int = 0
    public fun run [
        [ :x = 1; ] finally: [ ++count ];
        [ [ throw: Boom; ] finally: [ ++count ]; ] catch: CatchAll;
        [ [ throw: Boom; ] catch: [ |:e Boom| ] finally: [ ++count ]; ] catch: CatchAll;
        Out println: count;
    ]
end
''')
    assert out == "3\n"
    ok(7, "Selecting prints per input; retry re-prompts; Times(5) tries 5;"
          " finally once per frame pop")


# -- 8 ------------------------------------------------------------------------

def test_criterion_8_mixins():
    code, out, _ = run_src(corpus_file("26_mixin_static.cyan"))
    assert out == "draw border\ndraw window\n"
    code, out, _ = run_src(corpus_file("27_mixin_dynamic.cyan"))
    assert out == ("draw window\nwith shade\ndraw window\ntrue\n"
                   "draw window\nfalse\n")
    ok(8, "static mixin runs Border.draw, drawBorder, then the host draw;"
          " attachMixin/popMixin answer true then false")


# -- 9 ------------------------------------------------------------------------

def test_criterion_9_desugar_fidelity():
    from cyanine.cyast import pp_unit
    program = compile_src('''package main
private object University
    public :name String = ""
end
public object Program
    public fun run [ ]
end
''')
    text = "\n".join(pp_unit(u) for u in program.units)
    assert "_name" in text
    assert "name -> String" in text
    assert "name: (:newValue$ String)" in text
    src = corpus_file("29_init_meta.cyan")
    code, out, _ = run_src(src)
    assert out.splitlines()[1] == "Peter 3"     # new: "Peter", 3 accepted
    msgs = errors_of(corpus_file("30_err_init_order.cyan"))
    assert "age: _ name: _" in msgs             # reversed selector order rejected
    ok(9, "dump-desugar shows the accessors; @init accepts new: and rejects"
          " the reversed selector order at check time")


# -- 10 -----------------------------------------------------------------------

def test_criterion_10_builtins():
    code, out, _ = run_src(corpus_file("52_builtins_interval_array.cyan"))
    lines = out.splitlines()
    assert lines[0] == "0 1 2" and lines[1] == "0 1 2"
    assert lines[2] == "a e i o u"
    code, out, _ = run_src(corpus_file("53_switch.cyan"), stdin="1 5 6")
    assert out == "one\nprime\nfour or six\n"
    code, out, _ = run_src(corpus_file("54_symbols.cyan"))
    assert "asserts passed" in out
    ok(10, "interval/repeat print 0 1 2 twice; slice gives a e i o u; switch"
           " prints one/prime/four or six; eq: asserts pass")


# -- 11 -----------------------------------------------------------------------

def test_criterion_11_determinism_and_performance():
    files = sorted(glob.glob(os.path.join(CORPUS, "*.cyan")))
    assert len(files) >= 40
    t0 = time.perf_counter()
    outputs = []
    for _round in range(2):
        snapshot = []
        for path in files:
            result = run_case(path)
            assert result.ok, f"{path}: {result.detail}"
            snapshot.append((os.path.basename(path), result.ok))
        outputs.append(snapshot)
    elapsed = time.perf_counter() - t0
    assert outputs[0] == outputs[1]
    # byte-identical stdout across runs, per file
    for path in files:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        from cyanine.corpus import parse_directives
        stdin_text, _e, errs, _x = parse_directives(text)
        if errs:
            continue
        outs = []
        for _ in range(2):
            program = compile_src(text)
            interp = Interp(program, stdin_text=stdin_text)
            interp.run()
            outs.append(interp.stdout())
        assert outs[0] == outs[1], path
    assert elapsed < 10.0, f"corpus twice took {elapsed:.1f}s"
    ok(11, f"{len(files)} programs checked and run twice in {elapsed:.1f}s"
           f" with byte-identical outputs")
