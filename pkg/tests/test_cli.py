import subprocess
import sys

import pytest

from cyanine.cli import main as cli_main


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


HELLO = '''package main
public object Program
    public fun run [
        Out println: "hello";
    ]
end
'''

BAD_RBLOCK = '''package main
private object T
    private :block Block
end
public object Program
    public fun run [ ]
end
'''


def run_cli(args, stdin=""):
    proc = subprocess.run([sys.executable, "-m", "cyanine.cli"] + args,
                          capture_output=True, text=True, input=stdin,
                          timeout=60)
    return proc.returncode, proc.stdout, proc.stderr


def test_run_mode(tmp_path):
    src = write(tmp_path, "hello.cyan", HELLO)
    code, out, err = run_cli(["run", src])
    assert code == 0
    assert out == "hello\n"


def test_stdin_file(tmp_path):
    src = write(tmp_path, "echo.cyan", '''package main
public object Program
    public fun run [
        Out println: (In readString);
    ]
end
''')
    stdin = write(tmp_path, "in.txt", "Ana\n")
    code, out, _ = run_cli(["run", src, "--stdin-file", stdin])
    assert code == 0
    assert out == "Ana\n"


def test_check_mode_reports_rule_b(tmp_path):
    src = write(tmp_path, "bad.cyan", BAD_RBLOCK)
    code, out, err = run_cli(["--check", src])
    assert code == 1
    assert "[rule b]" in err


def test_uncaught_exception_is_exit_2(tmp_path):
    src = write(tmp_path, "boom.cyan", '''package main
private object Boom extends CyException end
public object Program
    public fun run [ throw: Boom; ]
end
''')
    code, out, _ = run_cli(["run", src])
    assert code == 2
    assert out.startswith("uncaught exception: Boom")


def test_bad_usage_is_64():
    code, _out, _err = run_cli([])
    assert code == 64
    code, _out, _err = run_cli(["/nonexistent/path.cyan"])
    assert code == 64


def test_dump_tokens(tmp_path):
    src = write(tmp_path, "empty.cyan", "")
    code, out, _ = run_cli(["--dump-tokens", src])
    assert code == 0
    assert out.strip().endswith("eof")
    src2 = write(tmp_path, "two.cyan", "object A end")
    code, out, _ = run_cli(["--dump-tokens", src2])
    lines = out.strip().splitlines()
    assert lines[0].split() == ["1:1", "keyword", "object"]


def test_dump_ast(tmp_path):
    src = write(tmp_path, "a.cyan", "package p\nobject A end")
    code, out, _ = run_cli(["--dump-ast", src])
    assert code == 0
    assert "(CompilationUnit" in out
    assert "(PrototypeDecl" in out
    # stable across runs
    code2, out2, _ = run_cli(["--dump-ast", src])
    assert out == out2


def test_dump_desugar_shows_accessors(tmp_path):
    src = write(tmp_path, "uni.cyan", '''package main
private object University
    public :name String = ""
end
public object Program
    public fun run [ ]
end
''')
    code, out, _ = run_cli(["--dump-desugar", src])
    assert code == 0
    assert "_name" in out
    assert "name -> String" in out
    assert "name: (:newValue$ String)" in out


def test_dump_blocks(tmp_path):
    src = write(tmp_path, "b.cyan", '''package main
public object Program
    public fun run [
        :i = 0;
        :b = [ ^ i < 5 ];
        :u = [ |:x Int| ^x ];
    ]
end
''')
    code, out, _ = run_cli(["--dump-blocks", src])
    assert code == 0
    assert "r-block Block<Boolean>" in out
    assert "u-block UBlock<Int><Int>" in out
    assert "bl=1" in out and "bl=-1" in out


def test_dump_grammar(tmp_path):
    src = write(tmp_path, "g.cyan", '''package main
private object IntSet
    public fun (add: (Int)+) :t [ ]
end
public object Program
    public fun run [ ]
end
''')
    code, out, _ = run_cli(["--dump-grammar", "IntSet", src])
    assert code == 0
    assert "add:" in out
    assert "derived: Array<Int>" in out
    assert "automaton states:" in out


def test_multi_file_program(tmp_path):
    lib = write(tmp_path, "person.cyan", '''package program
public object Person
    @init(name)
    public :name String
end
''')
    main = write(tmp_path, "main.cyan", '''package main
public object Program
    public fun run [
        :p = Person new: "Ada";
        Out println: (p name);
    ]
end
''')
    code, out, _ = run_cli(["run", lib, main])
    assert code == 0
    assert out == "Ada\n"


def test_main_flag(tmp_path):
    src = write(tmp_path, "alt.cyan", '''package main
public object Launcher
    public fun run [ Out println: "alt main"; ]
end
''')
    code, out, _ = run_cli(["run", src, "--main", "Launcher"])
    assert code == 0
    assert out == "alt main\n"


def test_prelude_override(tmp_path):
    prelude = write(tmp_path, "prelude.cyan", '''package cyan.lang
public object CyException end
public object CastException extends CyException end
public object AssertException extends CyException end
public object DoesNotUnderstandException extends CyException end
public object ExceptionCannotCallAbstractMethod extends CyException end
public object ExceptionCannotCallInterfaceMethod extends CyException end
public object StrException(public :message String) extends CyException end
public object CatchAll
    public fun eval: (:e CyException) [ ]
end
public object Greeter
    public fun hello [ Out println: "from prelude override" ]
end
''')
    src = write(tmp_path, "use.cyan", '''package main
public object Program
    public fun run [ Greeter hello; ]
end
''')
    code, out, _ = run_cli(["run", src, "--prelude", prelude])
    assert code == 0
    assert out == "from prelude override\n"
