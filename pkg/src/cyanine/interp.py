"""Tree-walking interpreter: object model, textual-order multimethod dispatch,
closures with %-snapshots, dynamic mixins, method objects, and the
object-oriented exception machinery."""

import time

from . import builtins as bi
from .cyast import *
from .desugar import CTX_BIND, CTX_NEW, CTX_NEWOBJECT
from .grammar_methods import NoMatch, first_selectors, match_message, plan_packing
from .prototypes import BASIC_TYPES, split_generic
from .values import (NIL, NOOBJECT, UNIT, ArrayV, BlockV, Cell, IntervalV, MethodV,
                     NativeBlockV, ObjectV, PrimV, TupleV, UnionV)


class CyThrow(Exception):
    def __init__(self, value, stack):
        self.value = value
        self.stack = stack


class ReturnSignal(Exception):
    def __init__(self, ctx, value):
        self.ctx = ctx
        self.value = value


class BlockReturn(Exception):
    def __init__(self, value):
        self.value = value


class ExitSignal(Exception):
    def __init__(self, code):
        self.code = code


class DeadCellRead(Exception):
    pass


class FieldProxy:
    """A reference parameter: reads and writes land on the bound location."""
    __slots__ = ("owner", "name")

    def __init__(self, owner, name):
        self.owner = owner
        self.name = name


class Scope:
    __slots__ = ("vars", "parent")

    def __init__(self, parent=None):
        self.vars = {}
        self.parent = parent

    def declare(self, name, value, eternal=False):
        cell = Cell(value, eternal)
        self.vars[name] = cell
        return cell

    def find(self, name):
        cur = self
        while cur is not None:
            cell = cur.vars.get(name)
            if cell is not None:
                return cell
            cur = cur.parent
        return None

    def kill(self):
        for cell in self.vars.values():
            if not cell.eternal:
                cell.alive = False


class Frame:
    __slots__ = ("entry_name", "method_name", "receiver", "fields_owner", "ctx",
                 "found_owner", "mixin_index", "method_entry")

    def __init__(self, entry_name, method_name, receiver, fields_owner,
                 found_owner=None, mixin_index=None):
        self.entry_name = entry_name
        self.method_name = method_name
        self.receiver = receiver
        self.fields_owner = fields_owner
        self.ctx = object()
        self.found_owner = found_owner
        self.mixin_index = mixin_index


_INT_RANGE = {"Byte": (-2 ** 7, 2 ** 7 - 1), "Short": (-2 ** 15, 2 ** 15 - 1),
              "Int": (-2 ** 31, 2 ** 31 - 1), "Long": (-2 ** 63, 2 ** 63 - 1)}

_DEFAULTS = {"Byte": 0, "Short": 0, "Int": 0, "Long": 0, "Float": 0.0,
             "Double": 0.0, "Char": "\0", "Boolean": False, "String": ""}


class Interp:
    def __init__(self, program, stdin_text="", argv=(), check_liveness=True):
        self.program = program
        self.table = program.table
        self.out = []
        self.stdin_text = stdin_text
        self.stdin_pos = 0
        self.argv = list(argv)
        self.frames = []
        self.check_liveness = check_liveness
        self.max_steps = 10_000_000
        self.steps = 0
        self._init_done = set()
        self._chain_cache = {}

    # -- top level ---------------------------------------------------------------

    def stdout(self):
        return "".join(self.out)

    def run(self):
        try:
            self.setup()
            main = self.table.get(self.program.main_name)
            recv = main.proto_object
            if "run:" in main.groups:
                args = ArrayV("Array<String>", "String",
                              [PrimV("String", a) for a in self.argv])
                self.send(recv, [("run:", [args])])
            else:
                self.send(recv, [("run", [])])
            return 0
        except CyThrow as t:
            name = self.runtime_type(t.value)
            self.write(f"uncaught exception: {name}\n")
            for proto, meth in t.stack:
                self.write(f"  at {proto}::{meth}\n")
            return 2
        except ExitSignal as ex:
            return ex.code

    def write(self, text):
        self.out.append(text)

    # single cursor over standard input shared by every In method
    def read_token(self):
        text, n = self.stdin_text, len(self.stdin_text)
        i = self.stdin_pos
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            return None
        j = i
        while j < n and not text[j].isspace():
            j += 1
        self.stdin_pos = j
        return text[i:j]

    def read_line(self):
        text, n = self.stdin_text, len(self.stdin_text)
        if self.stdin_pos >= n:
            return None
        j = text.find("\n", self.stdin_pos)
        if j < 0:
            out = text[self.stdin_pos:]
            self.stdin_pos = n
        else:
            out = text[self.stdin_pos:j]
            self.stdin_pos = j + 1
        return out

    def read_char(self):
        text, n = self.stdin_text, len(self.stdin_text)
        i = self.stdin_pos
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            return None
        self.stdin_pos = i + 1
        return text[i]

    # -- startup: prototype objects and initialization order -----------------------

    def setup(self):
        table = self.table
        for entry in table.entries.values():
            if entry.proto_object is None:
                entry.proto_object = ObjectV(entry.name, is_prototype=True)
                entry.shared_store = {}
                entry.const_store = {}
        for entry in list(table.entries.values()):
            self.init_prototype(entry)

    def init_prototype(self, entry):
        if entry.name in self._init_done or entry.builtin:
            self._init_done.add(entry.name)
            return
        self._init_done.add(entry.name)
        if entry.supertype:
            sup = self.table.get(entry.supertype)
            if sup is not None:
                self.init_prototype(sup)
        obj = entry.proto_object
        frame = Frame(entry.name, "<init>", obj, obj)
        self.frames.append(frame)
        try:
            scope = Scope()
            for c in entry.consts:
                entry.const_store[c.name] = self.eval_expr(c.init, scope, frame) \
                    if c.init is not None else self.default_value(c.resolved_type)
            for s in entry.shared_vars:
                entry.shared_store[s.name] = self.eval_expr(s.init, scope, frame) \
                    if s.init is not None else self.default_value(s.resolved_type)
            self.init_fields(obj, frame_scope=scope)
            for m in entry.methods:
                if m.decl is not None and m.decl.body_expr is not None:
                    m.bound_value = self.eval_expr(m.decl.body_expr, scope, frame)
            if entry.init_once is not None:
                self.invoke_body(entry.init_once.body or [], entry, "initOnce", obj, obj)
        finally:
            self.frames.pop()

    def field_template(self, entry):
        """Instance variables of the whole chain, ancestors first."""
        out = []
        for anc in reversed(self.table.chain(entry.name)):
            for var in anc.ivars:
                out.append(var)
        return out

    def init_fields(self, obj, frame_scope=None):
        entry = self.table.get(obj.proto)
        frame = Frame(entry.name, "<fields>", obj, obj)
        self.frames.append(frame)
        try:
            scope = Scope()
            for var in self.field_template(entry):
                if var.init is not None:
                    obj.fields[var.name] = self.eval_expr(var.init, scope, frame)
                else:
                    obj.fields[var.name] = self.default_value(var.resolved_type)
        finally:
            self.frames.pop()

    def default_value(self, type_name):
        if type_name in _DEFAULTS:
            kind = type_name
            return PrimV(kind, _DEFAULTS[kind])
        return NIL

    # -- value typing ---------------------------------------------------------------

    def runtime_type(self, v):
        if isinstance(v, PrimV):
            return v.kind
        if v is NIL:
            return "Nil"
        if v is NOOBJECT:
            return "Void"
        if v is UNIT:
            return "Any"
        if isinstance(v, (ArrayV, TupleV, UnionV, IntervalV)):
            return v.type_name
        if isinstance(v, ObjectV):
            return v.proto
        if isinstance(v, (BlockV, MethodV, NativeBlockV)):
            return v.type_name
        raise TypeError(v)

    def dispatch_chain(self, type_name):
        """Like table.chain, but interface-rooted types also reach their
        super-interfaces and Any (method objects are typed by interfaces)."""
        cached = self._chain_cache.get(type_name)
        if cached is not None:
            return cached
        out = []
        seen = set()
        work = [type_name]
        while work:
            cur = work.pop(0)
            if cur in seen:
                continue
            seen.add(cur)
            e = self.table.get(cur)
            if e is None:
                continue
            out.append(e)
            if e.supertype:
                work.append(e.supertype)
            if e.is_interface:
                work.extend(e.interfaces)
        if out and out[-1].name != "Any":
            any_e = self.table.get("Any")
            if any_e is not None and any_e not in out:
                out.append(any_e)
        self._chain_cache[type_name] = out
        return out

    def reaches(self, s, t):
        """Runtime subtype walk: pure reachability (the restricted gate is a
        compile-time rule)."""
        if s == t or t == "Any" or s == "Nil":
            return True
        seen = set()
        work = [s]
        while work:
            cur = work.pop()
            if cur == t:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            e = self.table.get(cur)
            if e is None:
                continue
            if e.supertype:
                work.append(e.supertype)
            work.extend(e.interfaces)
        return False

    # -- exceptions -------------------------------------------------------------------

    def stack_snapshot(self):
        return [(f.entry_name, f.method_name) for f in reversed(self.frames)]

    def throw_name(self, proto_name, message=None):
        entry = self.table.get(proto_name)
        if entry is None:
            raise CyThrow(PrimV("String", message or proto_name), self.stack_snapshot())
        obj = self.instantiate(entry)
        if message is not None and entry.ctx_params:
            field = entry.ctx_params[0]
            fname = field.name if field.qualifier == "private" else "_" + field.name
            obj.fields[fname] = PrimV("String", message)
        elif message is not None:
            for cand in ("message", "_message", "messageName", "_messageName"):
                if cand in obj.fields:
                    obj.fields[cand] = PrimV("String", message)
                    break
        raise CyThrow(obj, self.stack_snapshot())

    def str_exception(self, message):
        self.throw_name("StrException", message)

    # -- object creation ----------------------------------------------------------------

    def instantiate(self, entry):
        obj = ObjectV(entry.name)
        self.init_fields(obj)
        return obj

    # -- cells and fields ------------------------------------------------------------------

    def cell_read(self, cell):
        if self.check_liveness and not cell.alive:
            raise DeadCellRead("read of a captured local after its frame was popped")
        return cell.value

    def field_read(self, obj, name):
        v = obj.fields[name]
        if isinstance(v, Cell):
            return self.cell_read(v)
        if isinstance(v, FieldProxy):
            return self.field_read(v.owner, v.name)
        return v

    def field_write(self, obj, name, value):
        cur = obj.fields.get(name)
        if isinstance(cur, Cell):
            cur.value = value
            return
        if isinstance(cur, FieldProxy):
            self.field_write(cur.owner, cur.name, value)
            return
        obj.fields[name] = value

    def find_shared(self, frame, name):
        start = frame.entry_name
        owner = frame.fields_owner
        if isinstance(owner, ObjectV):
            start = owner.proto
        for root in (start, frame.entry_name):
            for anc in self.table.chain(root):
                if name in getattr(anc, "shared_store", {}):
                    return anc.shared_store, name
                if name in getattr(anc, "const_store", {}):
                    return anc.const_store, name
        return None, None

    # -- dispatch ---------------------------------------------------------------------------

    def send(self, recv, shape, arg_nodes=None, scope=None, super_frame=None):
        self.steps += 1
        name = "".join(sel for sel, _ in shape)
        if recv is NIL:
            # nil redefines isNil/notNil and still answers the final identity
            # tests of Any; everything else is DoesNotUnderstandException
            if len(shape) == 1 and shape[0][0] in ("isNil", "notNil") and not shape[0][1]:
                return PrimV("Boolean", shape[0][0] == "isNil")
            allowed = {"eq:": "eq", "neq:": "neq", "==": "eq_op", "!=": "neq_op",
                       "ifNil:": "if_nil", "isA:": "is_a", "prototype": "prototype",
                       "prototypeName": "prototype_name", "hashCode": "hash_code"}
            if name in allowed:
                any_e = self.table.get("Any")
                for m in any_e.groups.get(name, MethodGroupStub()).entries:
                    if m.builtin == allowed[name]:
                        return bi.call(self, m, recv, [a for _s, aa in shape for a in aa],
                                       shape)
            self.throw_name("DoesNotUnderstandException",
                            f"message '{name}' sent to nil")
        if recv is NOOBJECT:
            self.str_exception(f"message '{name}' sent to noObject")
        hit = self.lookup(recv, shape, super_frame=super_frame)
        if hit is None:
            if name == "doesNotUnderstand:":
                self.throw_name("DoesNotUnderstandException", "doesNotUnderstand: loop")
            sym = PrimV("CySymbol", name)
            flat = [a for _s, args in shape for a in args]
            arr = ArrayV("Array<Any>", "Any", flat)
            return self.send(recv, [("doesNotUnderstand:", [sym, arr])])
        kind, payload = hit
        if kind == "own":
            return self.call_added_method(payload, recv, shape)
        if kind == "dyn":
            body, owner_entry = payload
            return self.call_added_method(body, recv, shape)
        m, owner_entry, mixin_obj, plan = payload
        return self.invoke(m, recv, shape, owner_entry, mixin_obj, plan,
                           arg_nodes=arg_nodes, scope=scope)

    def lookup(self, recv, shape, super_frame=None):
        name = "".join(sel for sel, _ in shape)
        if super_frame is None:
            if isinstance(recv, ObjectV):
                own = recv.own_methods.get(name)
                if own is not None:
                    return ("own", own)
                for idx, mobj in enumerate(recv.mixins):
                    hit = self._search_chain(self._mixin_chain(mobj.proto), shape, name)
                    if hit is not None:
                        m, owner, plan = hit
                        return ("static", (m, owner, (mobj, idx), plan))
            chain = self.dispatch_chain(self.runtime_type(recv))
        elif super_frame.mixin_index is not None:
            # super inside a dynamically attached mixin: remaining mixins first
            for idx in range(super_frame.mixin_index + 1, len(recv.mixins)):
                mobj = recv.mixins[idx]
                hit = self._search_chain(self._mixin_chain(mobj.proto), shape, name)
                if hit is not None:
                    m, owner, plan = hit
                    return ("static", (m, owner, (mobj, idx), plan))
            chain = self.dispatch_chain(self.runtime_type(recv))
        else:
            full = self.dispatch_chain(self.runtime_type(recv))
            names = [e.name for e in full]
            onm = super_frame.found_owner.name if super_frame.found_owner else None
            chain = full[names.index(onm) + 1:] if onm in names else full[1:]
        hit = self._search_chain(chain, shape, name)
        if hit is None:
            return None
        m, owner, plan = hit
        return ("static", (m, owner, None, plan))

    def _search_chain(self, chain, shape, name):
        flat = [a for _s, args in shape for a in args]
        plain = [(sel, [self.runtime_type(a) for a in args]) for sel, args in shape]
        for entry in chain:
            dyn = entry.dyn_methods.get(name)
            if dyn is not None:
                return (None, entry, ("dyn", dyn))
            g = entry.groups.get(name)
            if g is not None:
                for m in g.entries:
                    if m.is_stub:
                        continue
                    if not m.arity_matches(plain):
                        continue
                    types = [t for _s, ts in plain for t in ts]
                    if all(self.reaches(a, p) for a, p in zip(types, m.param_types)):
                        return (m, entry, None)
            for m in entry.methods:
                if m.kind == "grammar" and m.automaton is not None:
                    if shape[0][0] not in first_selectors(m.regex):
                        continue
                    try:
                        tree = match_message(m.automaton, shape, self.runtime_type,
                                             self.reaches)
                        return (m, entry, ("match", tree))
                    except NoMatch:
                        continue
        return None

    def invoke(self, m, recv, shape, owner_entry, mixin_obj, plan,
               arg_nodes=None, scope=None):
        if plan is not None and plan[0] == "dyn":
            return self.call_added_method(plan[1], recv, shape)
        args = [a for _s, aa in shape for a in aa]
        if m is None:
            return NOOBJECT
        if m.builtin is not None and m.bound_value is None:
            return bi.call(self, m, recv, args, shape)
        if m.ctx_marker is not None:
            return self.call_ctx_native(m, recv, shape, arg_nodes, scope, owner_entry)
        if m.bound_value is not None:
            return self.call_block_like(m.bound_value, shape)
        decl = m.decl
        if m.is_abstract or decl is None or (decl.body is None and decl.body_expr is None):
            exc = "ExceptionCannotCallInterfaceMethod" if owner_entry.is_interface \
                else "ExceptionCannotCallAbstractMethod"
            self.throw_name(exc, f"{owner_entry.name}::{m.name}")
        if m.kind == "grammar":
            packed = self.execute_plan(plan_packing(m.regex, plan[1]), recv, owner_entry)
            args = [packed]
        fields_owner = mixin_obj[0] if mixin_obj else recv
        self_obj = recv
        if m.ctx_self_field is not None:
            self_obj = self.field_read(recv, m.ctx_self_field)
            fields_owner = self_obj if isinstance(self_obj, ObjectV) else recv
        frame = Frame(owner_entry.name, m.name, self_obj, fields_owner,
                      found_owner=owner_entry,
                      mixin_index=mixin_obj[1] if mixin_obj else None)
        frame.method_entry = m
        if len(self.frames) > 2000:
            self.str_exception("method call stack overflow")
        self.frames.append(frame)
        mscope = Scope()
        for pname, pval in zip(m.param_names, args):
            mscope.declare(pname, pval, eternal=True)
        try:
            self.eval_stats(decl.body, mscope, frame)
            return NOOBJECT
        except ReturnSignal as r:
            if r.ctx is frame.ctx:
                return r.value
            raise
        finally:
            mscope.kill()
            self.frames.pop()

    def invoke_body(self, body, entry, name, recv, fields_owner):
        frame = Frame(entry.name, name, recv, fields_owner, found_owner=entry)
        self.frames.append(frame)
        scope = Scope()
        try:
            self.eval_stats(body, scope, frame)
            return NOOBJECT
        except ReturnSignal as r:
            if r.ctx is frame.ctx:
                return r.value
            raise
        finally:
            scope.kill()
            self.frames.pop()

    # -- context-object natives ------------------------------------------------------------

    def ctx_field_name(self, entry, cp):
        if cp.mode == "%" and cp.qualifier in ("public", "protected"):
            return "_" + cp.name
        return cp.name

    def call_ctx_native(self, m, recv, shape, arg_nodes, scope, owner_entry):
        args = [a for _s, aa in shape for a in aa]
        nodes = arg_nodes or [None] * len(args)
        if m.ctx_marker == CTX_NEW:
            inst = self.instantiate(owner_entry)
            self.ctx_bind(owner_entry, inst, args, nodes, scope)
            return inst
        if m.ctx_marker == CTX_BIND:
            self.ctx_bind(owner_entry, recv, args, nodes, scope)
            return NOOBJECT
        if m.ctx_marker == CTX_NEWOBJECT:
            inst = self.instantiate(owner_entry)
            self.ctx_bind(owner_entry, inst, args, nodes, scope)
            return inst
        raise RuntimeError(m.ctx_marker)

    def ctx_bind(self, entry, inst, args, nodes, scope):
        cps = entry.ctx_params
        if not cps:
            # lowered context blocks bind their self object
            if args:
                inst.fields["newSelf$"] = args[0]
            return
        owner_arg = None
        if any(cp.mode == "*" for cp in cps) and len(args) == len(cps) + 1:
            owner_arg = args[-1]
            args = args[:-1]
            nodes = nodes[:-1]
        for cp, val, node in zip(cps, args, nodes):
            fname = self.ctx_field_name(entry, cp)
            if cp.mode == "%":
                self.field_write(inst, fname, val)
            elif cp.mode == "&":
                cell = None
                if isinstance(node, NameRef) and scope is not None:
                    cell = scope.find(node.name)
                if cell is None:
                    self.str_exception("the argument of a '&' context parameter must be"
                                       " a local variable")
                inst.fields[fname] = cell
            else:  # '*'
                owner = owner_arg
                field = None
                if isinstance(node, NameRef):
                    field = node.name
                elif isinstance(node, SelfRef):
                    field = node.field_name
                if owner is None or field is None or field not in owner.fields:
                    self.str_exception("the argument of a '*' context parameter must be"
                                       " an instance variable")
                inst.fields[fname] = FieldProxy(owner, field)

    # -- dynamically added methods ------------------------------------------------------------

    def call_added_method(self, body, recv, shape):
        """body implements ContextObject (or is a plain override block)."""
        args = [a for _s, aa in shape for a in aa]
        if isinstance(body, _BoundOverride):
            return self.send(body.value, self._eval_shape_for(args, shape))
        bound = self.send(body, [("newObject:", [recv])])
        return self.send(bound, self._eval_shape_for(args, shape))

    @staticmethod
    def _eval_shape_for(args, shape):
        if not args:
            return [("eval", [])]
        return [("eval:", list(args))]

    def call_block_like(self, value, shape):
        args = [a for _s, aa in shape for a in aa]
        return self.send(value, self._eval_shape_for(args, shape))

    # -- packing plans ------------------------------------------------------------------------

    def execute_plan(self, plan, recv, owner_entry):
        op = plan.op
        if op == "value":
            return plan.value
        if op == "unit":
            return UNIT
        if op == "array":
            base, groups = split_generic(plan.type_name)
            elem = groups[0][0]
            return ArrayV(plan.type_name, elem,
                          [self.execute_plan(c, recv, owner_entry) for c in plan.children])
        if op == "tuple":
            entry = self.table.get(plan.type_name)
            names = [n for n, _t in entry.tuple_fields]
            vals = [self.execute_plan(c, recv, owner_entry) for c in plan.children]
            return TupleV(plan.type_name, names, vals)
        if op == "union":
            entry = self.table.get(plan.type_name)
            names = [n for n, _t in entry.union_fields]
            return UnionV(plan.type_name, names, plan.tag,
                          self.execute_plan(plan.children[0], recv, owner_entry))
        if op == "empty_union":
            entry = self.table.get(plan.type_name)
            names = [n for n, _t in entry.union_fields]
            return UnionV(plan.type_name, names, None, None)
        if op == "default":
            owner = owner_entry.proto_object or recv
            frame = Frame(owner_entry.name, "<default>", owner, owner)
            self.frames.append(frame)
            try:
                return self.eval_expr(plan.expr, Scope(), frame)
            finally:
                self.frames.pop()
        raise RuntimeError(op)

    # -- statements ------------------------------------------------------------------------------

    def eval_stats(self, stats, scope, frame):
        for st in stats:
            self.eval_stat(st, scope, frame)

    def eval_stat(self, st, scope, frame):
        match st:
            case ExprStat(expr=e):
                self.eval_expr(e, scope, frame)
            case VarDeclStat(decls=ds):
                types = getattr(st, "resolved_types", None)
                for i, (name, _t, init) in enumerate(ds):
                    if init is not None:
                        v = self.eval_expr(init, scope, frame)
                    else:
                        tname = types[i] if types else None
                        v = self.default_value(tname)
                    scope.declare(name, v)
            case AssignStat(targets=ts, value=ve):
                v = self.eval_expr(ve, scope, frame)
                self.assign(ts[0], v, scope, frame)
            case ReturnStat(value=ve, is_caret=c):
                v = self.eval_expr(ve, scope, frame) if ve is not None else NOOBJECT
                if c:
                    raise BlockReturn(v)
                raise ReturnSignal(frame.ctx, v)
            case IfStat(arms=arms, else_body=eb):
                for cond, body in arms:
                    if self.truthy(self.eval_expr(cond, scope, frame)):
                        inner = Scope(scope)
                        try:
                            self.eval_stats(body, inner, frame)
                        finally:
                            inner.kill()
                        return
                if eb is not None:
                    inner = Scope(scope)
                    try:
                        self.eval_stats(eb, inner, frame)
                    finally:
                        inner.kill()
            case WhileStat(cond=cond, body=body):
                while self.truthy(self.eval_expr(cond, scope, frame)):
                    inner = Scope(scope)
                    try:
                        self.eval_stats(body, inner, frame)
                    finally:
                        inner.kill()
            case EmptyStat():
                pass
            case _:
                raise RuntimeError(f"cannot execute {st!r}")

    def truthy(self, v):
        if isinstance(v, PrimV) and v.kind == "Boolean":
            return v.v
        self.str_exception("a Boolean value was expected")

    def assign(self, target, value, scope, frame):
        if isinstance(target, PercentRef):
            cell = scope.find(target.name)
            if cell is None:
                self.str_exception(f"unknown variable '%{target.name}'")
            cell.value = value
            return
        if isinstance(target, NameRef):
            cell = scope.find(target.name)
            if cell is not None:
                cell.value = value
                return
            owner = frame.fields_owner
            if isinstance(owner, ObjectV) and target.name in owner.fields:
                self.field_write(owner, target.name, value)
                return
            store, key = self.find_shared(frame, target.name)
            if store is not None:
                store[key] = value
                return
            self.str_exception(f"unknown variable '{target.name}' in assignment")
        elif isinstance(target, SelfRef) and target.field_name is not None:
            self.field_write(frame.fields_owner, target.field_name, value)
        elif isinstance(target, MethodAccess):
            self.replace_method(target, value, scope, frame)
        else:
            self.str_exception("illegal assignment target")

    def replace_method(self, target, value, scope, frame):
        recv = self.eval_expr(target.receiver, scope, frame)
        m = self.resolve_sig(recv, target.sig)
        if isinstance(recv, ObjectV) and not recv.is_prototype:
            recv.own_methods[m.name] = _BoundOverride(value)
        else:
            m.bound_value = value

    def _mixin_chain(self, proto_name):
        return [e for e in self.table.chain(proto_name) if e.is_mixin]

    def resolve_sig(self, recv, sig):
        rty = self.runtime_type(recv)
        for anc in self.dispatch_chain(rty):
            g = anc.groups.get(sig.name)
            if g is None:
                continue
            for m in g.entries:
                if len(m.param_types) == len(sig.param_types):
                    if m.builtin == "block_eval":
                        self.str_exception("it is illegal to retrieve a primitive"
                                           " 'eval' method")
                    return m
        self.str_exception(f"'{rty}' has no method '{sig.name}'")

    # -- expressions --------------------------------------------------------------------------------

    def eval_expr(self, e, scope, frame):
        match e:
            case Lit(kind=k, value=v):
                if k == "Nil":
                    return NIL
                if k == "NoObject":
                    return NOOBJECT
                if k == "Symbol":
                    return PrimV("CySymbol", v)
                if k == "RawString":
                    return PrimV("String", v)
                return PrimV(k, v)
            case ArrayLit(elems=xs):
                vals = [self.eval_expr(x, scope, frame) for x in xs]
                tname = getattr(e, "resolved_type", None) or "Array<Any>"
                _b, groups = split_generic(tname)
                return ArrayV(tname, groups[0][0], vals)
            case TupleLit(items=items):
                vals = [self.eval_expr(x, scope, frame) for _n, x in items]
                tname = getattr(e, "resolved_type", None)
                if tname is None:
                    tname = "UTuple<" + ", ".join(self.runtime_type(v) for v in vals) + ">"
                entry = self.table.get(tname)
                names = [n for n, _t in entry.tuple_fields] if entry is not None \
                    else [n or f"f{i + 1}" for i, (n, _x) in enumerate(items)]
                return TupleV(tname, names, vals)
            case NameRef(name=name):
                return self.resolve_name(name, e, scope, frame)
            case GenericRef():
                tname = self.table.resolve_type(e.type_expr())
                entry = self.table.get(tname)
                if entry.proto_object is None:
                    entry.proto_object = ObjectV(entry.name, is_prototype=True)
                    entry.shared_store = {}
                    entry.const_store = {}
                self.init_prototype(entry)
                return entry.proto_object
            case SelfRef(field_name=f):
                if f is None:
                    return frame.receiver
                return self.field_read(frame.fields_owner, f)
            case PercentRef(name=name):
                cell = scope.find(name)
                if cell is None:
                    self.str_exception(f"unknown variable '%{name}'")
                return self.cell_read(cell)
            case UnarySend(receiver=r, selector=sel):
                if isinstance(r, SuperRef):
                    return self.send(frame.receiver, [(sel, [])], super_frame=frame)
                recv = self.eval_expr(r, scope, frame)
                return self.send(recv, [(sel, [])])
            case KeywordSend(receiver=r, parts=parts):
                shape = []
                nodes = []
                for sel, argexprs in parts:
                    vals = [self.eval_expr(a, scope, frame) for a in argexprs]
                    shape.append((sel, vals))
                    nodes.extend(argexprs)
                if r is None:
                    return self.send(frame.receiver, shape, arg_nodes=nodes, scope=scope)
                if isinstance(r, SuperRef):
                    return self.send(frame.receiver, shape, arg_nodes=nodes, scope=scope,
                                     super_frame=frame)
                recv = self.eval_expr(r, scope, frame)
                return self.send(recv, shape, arg_nodes=nodes, scope=scope)
            case BinarySend(left=l, op=op, right=r):
                lv = self.eval_expr(l, scope, frame)
                rv = self.eval_expr(r, scope, frame)
                if op == "..":
                    return self.make_interval(lv, rv)
                return self.send(lv, [(op, [rv])])
            case PrefixOp(op=op, operand=x):
                v = self.eval_expr(x, scope, frame)
                return self.send(v, [(op, [])])
            case BlockLit():
                return self.make_block(e, scope, frame)
            case MethodAccess(receiver=r, sig=sig):
                recv = self.eval_expr(r, scope, frame)
                m = self.resolve_sig(recv, sig)
                groups = []
                if m.kind == "keyword":
                    i = 0
                    for _s, n in m.sel_arity:
                        groups.append(m.param_types[i:i + n])
                        i += n
                elif m.param_types:
                    groups = [list(m.param_types)]
                tname = self.table.block_type(None, m.return_type, restricted=False,
                                              groups=groups)
                return MethodV(recv, m, tname, recv)
            case AssignExpr(target=t, value=ve):
                v = self.eval_expr(ve, scope, frame)
                self.assign(t, v, scope, frame)
                return v
            case IfExpr(cond=c, then=t, otherwise=o):
                if self.truthy(self.eval_expr(c, scope, frame)):
                    return self.eval_expr(t, scope, frame)
                return self.eval_expr(o, scope, frame)
            case LetExpr(name=n, init=i, body=b):
                inner = Scope(scope)
                inner.declare(n, self.eval_expr(i, scope, frame))
                try:
                    return self.eval_expr(b, inner, frame)
                finally:
                    inner.kill()
        raise RuntimeError(f"cannot evaluate {e!r}")

    def resolve_name(self, name, node, scope, frame):
        cell = scope.find(name)
        if cell is not None:
            return self.cell_read(cell)
        owner = frame.fields_owner
        if isinstance(owner, ObjectV) and name in owner.fields:
            return self.field_read(owner, name)
        store, key = self.find_shared(frame, name)
        if store is not None:
            return store[key]
        entry = self.table.get(name)
        if entry is not None:
            if entry.proto_object is None:
                entry.proto_object = ObjectV(entry.name, is_prototype=True)
                entry.shared_store = {}
                entry.const_store = {}
            self.init_prototype(entry)
            return entry.proto_object
        # unary self-send
        return self.send(frame.receiver, [(name, [])])

    def make_interval(self, lv, rv):
        kind = lv.kind if isinstance(lv, PrimV) else "Int"
        a = ord(lv.v) if kind == "Char" else (int(lv.v) if kind != "Boolean" else int(lv.v))
        b = ord(rv.v) if kind == "Char" else (int(rv.v) if kind != "Boolean" else int(rv.v))
        if a > b:
            self.str_exception("end < start in interval")
        tname = self.table.instantiate_generic("Interval", [[kind]], (0, 0))
        return IntervalV(tname, kind, a, b)

    def make_block(self, e, scope, frame):
        snapshot = {}
        if e.info is not None:
            for name in e.info.percent_vars:
                cell = scope.find(name)
                snapshot[name] = self.cell_read(cell) if cell is not None else NIL
        tname = getattr(e, "runtime_type", None) or "UBlockProto|UBlock"
        entry = self.table.get(frame.entry_name)
        return BlockV(e, scope, frame.receiver, frame.fields_owner, frame.ctx,
                      tname, snapshot, entry)

    # -- block evaluation (the block_eval builtin lands here) --------------------------------------

    def eval_block_value(self, blk, args):
        if isinstance(blk, NativeBlockV):
            return blk.fn(args)
        if isinstance(blk, MethodV):
            m = blk.entry
            if m.kind == "keyword":
                shape = []
                i = 0
                for sel, n in m.sel_arity:
                    shape.append((sel, args[i:i + n]))
                    i += n
            elif m.kind in ("unary",) or not m.param_types:
                shape = [(m.name, [])]
            else:
                shape = [(m.name, args)]
            owner = self.table.get(m.owner)
            return self.invoke(m, blk.receiver, shape, owner, None, None)
        if isinstance(blk, ObjectV):
            # a context object or prototype used where a block is expected
            return self.send(blk, self._eval_shape_for(args, None))
        decl = blk.decl
        home = blk.home_entry.name if blk.home_entry is not None else self.runtime_type(blk)
        frame = Frame(home, "eval", blk.self_obj, blk.fields_owner)
        frame.ctx = blk.method_ctx     # `return` unwinds the enclosing method
        self.frames.append(frame)
        bscope = Scope(blk.scope)
        params = [p for sec in decl.param_sections for p in sec]
        for p, v in zip(params, args):
            bscope.declare(p.name, v, eternal=True)
        for name, v in blk.snapshot.items():
            bscope.declare(name, v)
        try:
            self.eval_stats(decl.body, bscope, frame)
            return NOOBJECT
        except BlockReturn as r:
            return r.value
        finally:
            bscope.kill()
            self.frames.pop()


class _BoundOverride:
    """Per-object method override installed through `obj.{sig}. = block`."""
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value


class MethodGroupStub:
    entries = ()
