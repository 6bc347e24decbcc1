"""Pipeline orchestration: sources -> tokens -> AST -> desugared units ->
prototype table -> checks -> a runnable Program."""

import copy

from .block_analysis import analyze_method
from .checker import Checker
from .cyast import InterfaceDecl, MethodDecl, PrototypeDecl
from .desugar import Desugarer
from .diagnostics import Reporter
from .lexer import tokenize
from .parser import Parser
from .prelude import PRELUDE_SOURCE
from .prototypes import PrototypeTable

_prelude_cache = {}


class Program:
    def __init__(self, table, reporter, units, main_name):
        self.table = table
        self.reporter = reporter
        self.units = units
        self.main_name = main_name
        self.block_infos = {}

    def ok(self):
        return not self.reporter.has_errors()


def parse_file(text, filename, reporter):
    tokens, _ = tokenize(text, reporter)
    parser = Parser(tokens, reporter, filename)
    return parser.parse_unit(filename)


def _parsed_prelude(prelude_text):
    key = prelude_text
    if key not in _prelude_cache:
        rep = Reporter("<prelude>")
        tokens, _ = tokenize(prelude_text, rep)
        parser = Parser(tokens, rep, "<prelude>")
        cu = parser.parse_unit("<prelude>")
        # the prelude intentionally has many public units in one source
        rep.items = [d for d in rep.items
                     if "exactly one public" not in d.message]
        if rep.has_errors():
            raise RuntimeError("prelude does not parse:\n" + rep.format_all())
        _prelude_cache[key] = cu
    return copy.deepcopy(_prelude_cache[key])


def compile_program(sources, main_name="Program", reporter=None, prelude_text=None):
    """sources: list of (filename, text).  Returns a Program."""
    reporter = reporter if reporter is not None else Reporter()
    prelude_cu = _parsed_prelude(prelude_text or PRELUDE_SOURCE)
    file_units = [(prelude_cu, True)]
    for filename, text in sources:
        sub = Reporter(filename)
        cu = parse_file(text, filename, sub)
        reporter.extend(sub)
        file_units.append((cu, False))
    if reporter.has_errors():
        return Program(PrototypeTable(reporter), reporter, [], main_name)

    all_units = []
    meta = {}
    for cu, is_prelude in file_units:
        for u in cu.units:
            all_units.append(u)
            meta[id(u)] = (cu.package, cu.filename)

    desugarer = Desugarer([u for u in all_units], reporter)
    templates = [u for u in all_units
                 if isinstance(u, PrototypeDecl) and u.template_params]
    plain = [u for u in all_units
             if not (isinstance(u, PrototypeDecl) and u.template_params)]
    desugarer.units = plain
    for u in all_units:
        if isinstance(u, PrototypeDecl):
            desugarer.proto_info.setdefault(u.name, u)
    units = desugarer.run()

    table = PrototypeTable(reporter)
    for t in templates:
        pkg, fn = meta.get(id(t), ("main", "<source>"))
        table.add_template(t, pkg, fn)
    for u in units:
        pkg, fn = meta.get(id(u), ("main", "<generated>"))
        entry = table.register_unit(u, pkg, fn)
    # link and check until the queue drains (instantiation adds entries)
    checker = Checker(table, reporter)
    while table.check_queue:
        batch = table.check_queue
        table.check_queue = []
        for entry in batch:
            table.link_unit(entry, desugarer.visible_vars)
        for entry in batch:
            checker.check_entry(entry)

    program = Program(table, reporter, units, main_name)
    program.block_infos = checker.block_infos
    main = table.get(main_name)
    if main is None or main.is_interface:
        reporter.error(0, 0, f"the program needs a prototype named '{main_name}'"
                             f" with a 'run' method")
    else:
        has_run = "run" in main.groups or "run:" in main.groups
        if not has_run:
            reporter.error(main.decl.line if main.decl else 0,
                           main.decl.col if main.decl else 0,
                           f"'{main_name}' does not define 'run' or"
                           f" 'run: Array<String>'")
    return program


def check_source(text, filename="<source>", main_name="Program"):
    """Convenience: compile one source string."""
    return compile_program([(filename, text)], main_name)
