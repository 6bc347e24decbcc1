"""Static checks: declaration validation (overloads, overrides, interfaces,
abstract/final), body checking with static message resolution, and the
restricted-block rules (letters refer to the r-block rule list):

  (a) no restriction on UBlock types
  (b) instance variables cannot have a restricted type
  (c) methods and blocks cannot return a restricted type
  (d) a level-k restricted variable accepts only sources of level m <= k
  (e) restricted-type parameters act as level-0 variables, any-level arguments
  (f) unrestricted targets (Any included) never receive an r-block
"""

from .cyast import *
from .block_analysis import analyze_method, block_interface_type
from .desugar import CTX_BIND, CTX_NEW, CTX_NEWOBJECT
from .grammar_methods import NoMatch, first_selectors, match_message
from .prototypes import split_generic

INIT_FAMILY = ("init", "new", "clone", "initOnce", "primitiveNew")


class _Env:
    def __init__(self, parent=None, level=1):
        self.parent = parent
        self.level = level
        self.names = {}       # name -> (type, level, is_param)

    def declare(self, name, ty, is_param=False, level=None):
        self.names[name] = (ty, self.level if level is None else level, is_param)

    def lookup(self, name):
        cur = self
        while cur is not None:
            if name in cur.names:
                return cur.names[name]
            cur = cur.parent
        return None

    def child(self, bump=1):
        return _Env(self, self.level + bump)


class Checker:
    def __init__(self, table, reporter):
        self.table = table
        self.reporter = reporter
        self.block_infos = {}    # (proto, sequence) -> [BlockInfo]
        self._body_counter = 0

    def error(self, node, msg):
        self.reporter.error(node.line, node.col, msg)

    # ======================================================================
    # prototype-level checks

    def check_entry(self, entry):
        if entry.builtin:
            return
        decl = entry.decl
        if entry.is_mixin:
            # mixin templates are checked through their flattened copies,
            # which sit in a real inheritance chain
            return
        self.check_prototype(entry)
        if isinstance(decl, InterfaceDecl):
            return
        self.infer_constant_types(entry)
        for slot in decl.slots:
            if isinstance(slot, VarDecl):
                self.check_var_slot(entry, slot)
        for m in entry.methods:
            if m.decl is not None:
                self.check_body(entry, m)

    def infer_constant_types(self, entry):
        env = _Env()
        for group in (entry.consts, entry.shared_vars, entry.ivars):
            for slot in group:
                if slot.resolved_type is None and slot.init is not None:
                    self.current_entry = entry
                    self.current_method = None
                    ty = self.type_of(slot.init, env)
                    slot.resolved_type = "Any" if ty == "Nil" else ty

    def check_var_slot(self, entry, slot):
        ty = slot.resolved_type
        if ty is None:
            if slot.init is None:
                self.error(slot, f"variable '{slot.name}' needs a type or an initial value")
                slot.resolved_type = "Any"
            return
        if ty == "Void":
            self.error(slot, "'Void' is not a legal variable type")
        if not slot.is_const and not slot.is_shared and self.table.is_restricted(ty):
            self.error(slot, f"instance variables cannot have the restricted type"
                             f" '{ty}' [rule b]")
        self.check_block_shaped_type(ty, slot)

    def check_block_shaped_type(self, ty, node):
        """Rule (c) on the spelled-out type: a block type whose return part is
        restricted cannot be declared anywhere."""
        base, groups = split_generic(ty)
        if base in ("Block", "UBlock", "AnyBlock", "AnyUBlock") and groups:
            ret = groups[-1][0]
            if self.table.is_restricted(ret):
                self.error(node, f"a block cannot have the restricted type '{ret}'"
                                 f" as its return type [rule c]")

    def check_prototype(self, entry):
        decl = entry.decl
        table = self.table
        chain = table.chain(entry.supertype) if entry.supertype else []
        if isinstance(decl, InterfaceDecl):
            return
        # overload contiguity and same-return
        seen = {}
        last = None
        for m in entry.methods:
            if m.synthetic:
                continue
            if m.name in seen and last != m.name:
                self.error(m.decl or decl,
                           f"all overloads of '{m.name}' should appear in sequence")
            seen.setdefault(m.name, m)
            last = m.name
            first = seen[m.name]
            if first is not m and first.return_type != m.return_type:
                self.error(m.decl or decl,
                           f"overloads of '{m.name}' should have the same return value type")
        # per-method declaration rules
        for m in entry.methods:
            d = m.decl or decl
            if m.is_abstract and not entry.is_abstract:
                self.error(d, f"abstract method '{m.name}' in non-abstract"
                              f" prototype '{entry.name}'")
            if m.return_type != "Void" and table.is_restricted(m.return_type) \
                    and m.ctx_marker is None and not m.synthetic:
                self.error(d, f"a method cannot return the restricted type"
                              f" '{m.return_type}' [rule c]")
            if m.return_type != "Void":
                self.check_block_shaped_type(m.return_type, d)
            if getattr(m, "indexing", False):
                np = len(m.param_types)
                if not ((m.name == "at:" and np == 1) or (m.name == "at:put:" and np == 2)):
                    self.error(d, "only three signatures are allowed after '[]':"
                                  " 'at: T', 'at: T put: W', and 'at: T put: W -> V'")
            if m.name == "init" or m.name.startswith("init:"):
                if not m.synthetic:
                    if m.return_type != "Void":
                        self.error(d, "'init' methods cannot declare a return value type")
                    if m.qualifier != "public":
                        self.error(d, "'init' methods should be public")
                    if entry.ctx_params:
                        self.error(d, "a context object cannot define 'init' methods")
            if m.name in ("new", "clone") or m.name.startswith("new:"):
                if not m.synthetic and entry.ctx_params:
                    self.error(d, f"a context object cannot define '{m.name}' methods")
                if (m.name == "new" or m.name.startswith("new:")) and not m.synthetic \
                        and m.return_type != entry.name:
                    self.error(d, f"'new' methods must return '{entry.name}'")
            # override bookkeeping
            if m.synthetic or m.name.startswith(("init", "new")) or m.name == "initOnce":
                continue
            inherited = []
            for anc in chain:
                g = anc.groups.get(m.name)
                if g is not None:
                    inherited.extend(x for x in g.entries
                                     if x.qualifier in ("public", "protected"))
            if inherited:
                if any(x.is_final for x in inherited):
                    self.error(d, f"the final method '{m.name}' cannot be redefined")
                if not m.is_override and not m.is_abstract and not inherited[0].synthetic:
                    self.error(d, f"method '{m.name}' redefines an inherited method and"
                                  f" should be declared with the word 'override'")
                sup_ret = inherited[0].return_type
                if sup_ret != "Void" and not table.is_subtype(m.return_type, sup_ret):
                    self.error(d, f"the return type of '{m.name}' must be '{sup_ret}'"
                                  f" or a subtype of it")
            elif m.is_override:
                self.error(d, f"method '{m.name}' is declared 'override' but does not"
                              f" redefine an inherited method")
            # grammar methods are final
            for anc in chain:
                for g in anc.methods:
                    if g.kind == "grammar" and g.automaton is not None \
                            and self._shape_in_grammar(m, g):
                        self.error(d, f"'{m.name}' matches the grammar method"
                                      f" '{g.name}' of '{anc.name}'; it is not possible"
                                      f" to override grammar methods")
        # instance variable names vs method names
        method_names = {m.name for m in entry.methods}
        for var in entry.ivars + entry.shared_vars + entry.consts:
            if var.name in method_names:
                self.error(var, f"variable '{var.name}' has the same name as a method")
        # abstract completeness
        if not entry.is_abstract and entry.kind == "prototype":
            pending = {}
            for anc in reversed(chain):
                for m in anc.methods:
                    if m.is_abstract:
                        pending[(m.name, tuple(m.param_types))] = m
                    else:
                        pending.pop((m.name, tuple(m.param_types)), None)
            for m in entry.methods:
                pending.pop((m.name, tuple(m.param_types)), None)
            for (name, _), m in pending.items():
                self.error(decl, f"'{entry.name}' must define the inherited abstract"
                                 f" method '{name}' or be declared abstract")
        # interface completeness
        if not entry.is_abstract and entry.kind == "prototype" and not entry.is_mixin:
            for iname in self._interface_closure(entry):
                ie = table.get(iname)
                if ie is None or ie.kind == "blockInterface":
                    continue
                for req in ie.methods:
                    if not self._implements(entry, req):
                        self.error(decl, f"'{entry.name}' should implement method"
                                         f" '{req.name}' of interface '{iname}'")
        # mixin host compatibility
        host_base = getattr(entry, "mixin_host_base", None)
        if host_base and entry.supertype:
            if not table.is_subtype(entry.supertype, host_base) and \
                    not table.is_subtype(entry.name, host_base):
                self.error(decl, f"mixin requires a host compatible with '{host_base}'")

    def _interface_closure(self, entry):
        out = []
        work = list(entry.interfaces)
        cur = entry.supertype
        while cur:
            e = self.table.get(cur)
            if e is None:
                break
            work.extend(e.interfaces)
            cur = e.supertype
        seen = set()
        while work:
            i = work.pop()
            if i in seen or i in ("AnyInterface", "ContextObject"):
                continue
            seen.add(i)
            out.append(i)
            ie = self.table.get(i)
            if ie is not None:
                work.extend(ie.interfaces)
        return out

    def _implements(self, entry, req):
        for anc in self.table.chain(entry.name):
            g = anc.groups.get(req.name)
            if g is None:
                continue
            for m in g.entries:
                if len(m.param_types) == len(req.param_types) and all(
                        a == b for a, b in zip(m.param_types, req.param_types)) \
                        and self.table.is_subtype(m.return_type, req.return_type):
                    return True
        return False

    def _shape_in_grammar(self, m, g):
        if m.kind == "keyword":
            shape = m.sel_arity
        elif m.kind == "unary":
            return False
        else:
            return False

        def match(label, sym):
            sel, count = sym
            if label.selector != sel:
                return False
            spec = label.argspec
            if spec[0] == "none":
                return count == 0
            if spec[0] == "types":
                return count == len(spec[1])
            if spec[0] == "star":
                return True
            if spec[0] == "plus":
                return count >= 1
            if spec[0] == "default":
                return count == 1
            return False

        return g.automaton.accepts_symbols(shape, match)

    # ======================================================================
    # body checking

    def check_body(self, entry, m):
        decl = m.decl
        self.current_entry = entry
        self.current_method = m
        self.method_returns = []
        infos = analyze_method(decl, self.reporter)
        self._body_counter += 1
        self.block_infos[(entry.name, self._body_counter)] = infos
        env = _Env(level=1)
        params = _Env(level=-1)
        for name, ty in zip(m.param_names, m.param_types):
            params.declare(name, ty, is_param=True, level=-1)
        env.parent = params
        if m.kind == "grammar":
            params.declare(m.param_names[0], m.derived, is_param=True, level=-1)
            self.grammar_param = m.param_names[0] if \
                self.table.is_restricted(m.derived) or "Block" in m.derived else None
        else:
            self.grammar_param = None
        if m.ctx_marker is not None or m.is_stub:
            return
        if m.ctx_self_field is not None:
            # context-block body: self is the bound object
            self.current_self_type = entry.ctx_self_type_name
        else:
            self.current_self_type = entry.name
        if decl.body is not None:
            self.check_stats(decl.body, env)
            if m.return_type != "Void" and not m.is_abstract and not m.synthetic \
                    and not self._always_returns(decl.body):
                self.error(decl, f"method '{m.name}' must return a value of type"
                                 f" '{m.return_type}'")
        elif decl.body_expr is not None:
            ty = self.type_of(decl.body_expr, env)
            want = self.table.block_type(None, m.return_type, restricted=False,
                                         groups=[[t] for t in m.param_types]
                                         if m.param_types else [])
            if not self.table.assignable(ty, want):
                self.error(decl, f"the expression assigned to '{m.name}' has type"
                                 f" '{ty}' which does not implement '{want}'")

    def _always_returns(self, stats):
        for st in stats:
            if isinstance(st, ReturnStat) and not st.is_caret:
                return True
            if isinstance(st, IfStat) and st.else_body is not None:
                if all(self._always_returns(b) for _c, b in st.arms) and \
                        self._always_returns(st.else_body):
                    return True
        return False

    # -- statements -------------------------------------------------------------

    def check_stats(self, stats, env):
        for st in stats:
            self.check_stat(st, env)

    def check_stat(self, st, env):
        match st:
            case ExprStat(expr=e):
                self.type_of(e, env)
            case VarDeclStat(decls=ds):
                st.resolved_types = []
                for name, texpr, init in ds:
                    declared = self.resolve_var_type(texpr, env) if texpr is not None else None
                    self.guard_grammar_param(init, st)
                    ity = self.type_of(init, env) if init is not None else None
                    if declared is None:
                        declared = "Any" if ity in (None, "Nil") else ity
                        if ity == "Void":
                            self.error(st, f"expression assigned to '{name}' has no value")
                            declared = "Any"
                    elif declared == "Void":
                        self.error(st, "'Void' is not a legal variable type")
                        declared = "Any"
                    elif ity is not None:
                        self.check_assign_types(st, init, ity, declared, env.level)
                    self.check_block_shaped_type(declared, st)
                    if env.lookup(name) is not None:
                        self.error(st, f"redeclaration of variable '{name}'")
                    env.declare(name, declared)
                    st.resolved_types.append(declared)
            case AssignStat(targets=ts, value=v):
                vty = self.type_of(v, env)
                target = ts[0]
                self.check_assign_target(st, target, vty, env)
            case ReturnStat(value=v, is_caret=c):
                ret = self.current_method.return_type if self.current_method else "Void"
                if c:
                    return      # block-level returns checked inside block literals
                self.guard_grammar_param(v, st)
                vty = self.type_of(v, env) if v is not None else "Void"
                if ret == "Void":
                    if v is not None:
                        self.error(st, "a 'return' with a value is not allowed in a"
                                       " method returning Void")
                elif v is None:
                    self.error(st, f"'return' needs a value of type '{ret}'")
                elif not self.table.assignable(vty, ret):
                    self.error(st, f"cannot return '{vty}' from a method declared"
                                   f" to return '{ret}'")
            case IfStat(arms=arms, else_body=eb):
                for cond, body in arms:
                    cty = self.type_of(cond, env)
                    if cty not in ("Boolean", "Any", "Nil"):
                        self.error(st, f"the 'if' condition must be a Boolean, not '{cty}'")
                    self.check_stats(body, env.child())
                if eb is not None:
                    self.check_stats(eb, env.child())
            case WhileStat(cond=c, body=b):
                cty = self.type_of(c, env)
                if cty not in ("Boolean", "Any", "Nil"):
                    self.error(st, f"the 'while' condition must be a Boolean, not '{cty}'")
                self.check_stats(b, env.child())
            case EmptyStat():
                pass

    def check_assign_target(self, st, target, vty, env):
        if isinstance(target, PercentRef):
            # writes land on the block-local %-copy
            target = NameRef(target.name, line=target.line, col=target.col)
        if isinstance(target, NameRef):
            self.guard_grammar_param(st.value, st)
            hit = env.lookup(target.name)
            if hit is not None:
                ty, level, is_param = hit
                if is_param:
                    self.error(st, f"parameters are read-only: cannot assign"
                                   f" to '{target.name}'")
                    return
                self.check_assign_types(st, None, vty, ty, level, source_expr=st.value)
                return
            var = self._find_field(target.name)
            if var is not None:
                if var.is_const:
                    self.error(st, f"cannot assign to the constant '{target.name}'")
                    return
                self.check_assign_types(st, None, vty, var.resolved_type or "Any", 10 ** 6,
                                        source_expr=st.value)
                return
            self.error(st, f"unknown variable '{target.name}' in assignment")
            return
        if isinstance(target, SelfRef) and target.field_name is not None:
            var = self._find_field(target.field_name)
            if var is None:
                self.error(st, f"'{self.current_entry.name}' has no instance variable"
                               f" '{target.field_name}'")
                return
            self.check_assign_types(st, None, vty, var.resolved_type or "Any", 10 ** 6,
                                    source_expr=st.value)
            return
        if isinstance(target, MethodAccess):
            self.type_of(target.receiver, env)
            return
        self.error(st, "illegal assignment target")

    def check_assign_types(self, node, _init, src_type, dst_type, dst_level, source_expr=None):
        table = self.table
        if not table.assignable(src_type, dst_type):
            if table.is_restricted(src_type) and not table.is_restricted(dst_type):
                self.error(node, f"an r-block of type '{src_type}' cannot flow into the"
                                 f" unrestricted type '{dst_type}' [rule f]")
            else:
                self.error(node, f"'{src_type}' is not a subtype of '{dst_type}'")
            return
        if table.is_restricted(dst_type):
            src = source_expr if source_expr is not None else _init
            m = self._source_level(src)
            if m is not None and m > dst_level:
                self.error(node, f"a restricted value of level {m} cannot be assigned to"
                                 f" a variable of level {dst_level} [rule d]")

    def _source_level(self, expr):
        """Lifetime level of a restricted source; None when unknown/always fine."""
        if expr is None:
            return None
        if isinstance(expr, BlockLit) and expr.info is not None:
            return expr.info.bl
        if isinstance(expr, NameRef):
            hit = self.env_hint.lookup(expr.name) if self.env_hint else None
            if hit is not None:
                ty, level, is_param = hit
                return 0 if is_param else level
        if isinstance(expr, KeywordSend) and expr.parts and expr.parts[0][0] == "new:":
            recv = expr.receiver
            base = recv.name if isinstance(recv, (NameRef, GenericRef)) else None
            entry = self.table.get(self._entry_name_for(recv)) if base else None
            if entry is not None and entry.ctx_params:
                level = -1
                for cp, arg in zip(entry.ctx_params, expr.parts[0][1]):
                    if cp.mode == "&" and isinstance(arg, NameRef) and self.env_hint:
                        hit = self.env_hint.lookup(arg.name)
                        if hit is not None:
                            level = max(level, hit[1])
                return level
        return None

    def _entry_name_for(self, recv):
        if isinstance(recv, GenericRef):
            return self.table.resolve_type(recv.type_expr())
        if isinstance(recv, NameRef):
            return recv.name
        return None

    def _find_field(self, name):
        entry = self.current_entry
        for anc in self.table.chain(entry.name):
            for var in anc.ivars + anc.shared_vars + anc.consts:
                if var.name == name:
                    if anc is not entry and var.qualifier == "private" and not var.is_shared \
                            and not var.is_const:
                        return None
                    return var
        return None

    def resolve_var_type(self, texpr, env):
        if texpr is None:
            return None
        if texpr.name.startswith("type(") and texpr.name.endswith(")"):
            inner = texpr.name[5:-1]
            hit = env.lookup(inner)
            if hit is None:
                self.error(texpr, f"'type({inner})' does not name a visible local variable")
                return "Any"
            return hit[0]
        return self.table.resolve_type(texpr)

    # -- expressions -----------------------------------------------------------------

    LIT_TYPES = {"Int": "Int", "Byte": "Byte", "Short": "Short", "Long": "Long",
                 "Float": "Float", "Double": "Double", "Char": "Char",
                 "Boolean": "Boolean", "String": "String", "RawString": "String",
                 "Symbol": "CySymbol", "Nil": "Nil", "NoObject": "Void"}

    def type_of(self, e, env):
        self.env_hint = env
        match e:
            case None:
                return "Void"
            case Lit(kind=k):
                return self.LIT_TYPES[k]
            case ArrayLit(elems=xs):
                if not xs:
                    e.resolved_type = self.table.instantiate_generic("Array", [["Any"]], e.pos())
                    return e.resolved_type
                types = [self.type_of(x, env) for x in xs]
                elem = types[0] if types[0] != "Nil" else "Any"
                for k, t in enumerate(types[1:], 1):
                    if not self.table.assignable(t, elem):
                        self.error(xs[k], f"array element {k + 1} has type '{t}', not a"
                                          f" subtype of the first element's type '{elem}'")
                e.resolved_type = self.table.instantiate_generic("Array", [[elem]], e.pos())
                return e.resolved_type
            case TupleLit(items=items):
                types = [self.type_of(x, env) for _n, x in items]
                types = [("Any" if t == "Nil" else t) for t in types]
                if items[0][0] is None:
                    e.resolved_type = self.table.instantiate_generic("UTuple", [types], e.pos())
                    return e.resolved_type
                args = []
                for (n, _x), t in zip(items, types):
                    args.extend([n, t])
                e.resolved_type = self.table.instantiate_generic("Tuple", [args], e.pos())
                return e.resolved_type
            case NameRef():
                return self.type_of_name(e, env)
            case GenericRef():
                return self.table.resolve_type(e.type_expr())
            case SelfRef(field_name=f):
                if f is None:
                    return self.current_self_type
                var = self._find_field(f)
                if var is None:
                    self.error(e, f"'{self.current_entry.name}' has no instance"
                                  f" variable '{f}'")
                    return "Any"
                return var.resolved_type or "Any"
            case SuperRef():
                self.error(e, "'super' can only be used as a message receiver")
                return "Any"
            case PercentRef(name=n):
                hit = env.lookup(n)
                if hit is None:
                    return "Any"
                return hit[0]
            case UnarySend():
                return self.check_unary_send(e, env)
            case KeywordSend():
                return self.check_keyword_send(e, env)
            case BinarySend():
                return self.check_binary_send(e, env)
            case PrefixOp(op=op, operand=x):
                rty = self.type_of(x, env)
                if rty == "Any":
                    return "Any"
                ret, _m = self.resolve_send(rty, [(op, [])], e, is_operator=True)
                return ret
            case BlockLit():
                return self.check_block_lit(e, env)
            case MethodAccess():
                return self.check_method_access(e, env)
            case AssignExpr(target=t, value=v):
                vty = self.type_of(v, env)
                fake = AssignStat([t], v, line=e.line, col=e.col)
                self.check_assign_target(fake, t, vty, env)
                return vty
            case IfExpr(cond=c, then=t, otherwise=o):
                self.type_of(c, env)
                tty = self.type_of(t, env)
                self.type_of(o, env)
                return tty
            case LetExpr(name=n, init=i, body=b):
                ity = self.type_of(i, env)
                inner = env.child(0)
                inner.declare(n, "Any" if ity == "Nil" else ity)
                return self.type_of(b, inner)
            case Creation():
                self.error(e, "internal: creation expression survived desugaring")
                return "Any"
            case IndexGet():
                self.error(e, "internal: indexing expression survived desugaring")
                return "Any"
        self.error(e, f"cannot type expression {type(e).__name__}")
        return "Any"

    def type_of_name(self, e, env):
        name = e.name
        if e.package is not None and self.table.get(name) is not None:
            return name          # package-qualified prototype reference
        hit = env.lookup(name)
        if hit is not None:
            self.check_grammar_param_use(e)
            return hit[0]
        var = self._find_field(name)
        if var is not None:
            return var.resolved_type or "Any"
        entry = self.table.get(name)
        if entry is not None:
            return name
        # implicit unary self-send
        ret, m = self.resolve_send(self.current_self_type, [(name, [])], e,
                                   is_operator=False, quiet=True)
        if m is not None:
            return ret
        self.error(e, f"unknown identifier '{name}'")
        return "Any"

    def check_grammar_param_use(self, e):
        pass   # reads are fine; stores are caught by the assignment root check

    def guard_grammar_param(self, expr, node):
        """A grammar parameter with a Block anywhere in its derived type is
        read-only: no field of it may be stored or returned."""
        if self.grammar_param is None or expr is None:
            return
        if self.root_name(expr) == self.grammar_param:
            self.error(node, f"the grammar parameter '{self.grammar_param}' mentions a"
                             f" restricted Block type and is read-only: its fields"
                             f" cannot be stored or returned")

    def root_name(self, expr):
        while True:
            if isinstance(expr, (UnarySend, KeywordSend, MethodAccess)):
                expr = expr.receiver
            elif isinstance(expr, BinarySend):
                expr = expr.left
            elif isinstance(expr, NameRef):
                return expr.name
            else:
                return None

    def check_unary_send(self, e, env):
        if isinstance(e.receiver, SuperRef):
            start = self.current_entry.supertype or "Any"
            ret, m = self.resolve_send(start, [(e.selector, [])], e, is_operator=False)
            return ret
        rty = self.type_of(e.receiver, env)
        if e.mode == "?":
            return "Any"
        if self._abstract_proto_receiver(e.receiver):
            self.error(e, f"cannot send a message to the abstract prototype"
                          f" '{e.receiver.name}'")
        ret, m = self.resolve_send(rty, [(e.selector, [])], e, is_operator=False)
        if m is not None and m.builtin in ("clone", "prototype") and m.owner == "Any":
            return rty
        if m is not None and m.builtin == "primitive_new":
            if not isinstance(e.receiver, SelfRef):
                self.error(e, "'primitiveNew' is private: send it to 'self'")
            return self.current_entry.name
        return ret

    def _abstract_proto_receiver(self, recv):
        if isinstance(recv, NameRef):
            entry = self.table.get(recv.name)
            return entry is not None and entry.is_abstract and entry.kind == "prototype" \
                and self.env_hint.lookup(recv.name) is None
        return False

    def check_binary_send(self, e, env):
        lty = self.type_of(e.left, env)
        rty = self.type_of(e.right, env)
        if e.op == "..":
            if lty in ("Byte", "Short", "Int", "Long", "Char", "Boolean") and rty == lty:
                return self.table.instantiate_generic("Interval", [[lty]], e.pos())
            self.error(e, f"'..' needs two equal discrete basic types, found"
                          f" '{lty}' and '{rty}'")
            return "Any"
        if lty == "Any":
            return "Any"
        shape = [(e.op, [(rty, e.right)])]
        ret, _m = self.resolve_send(lty, shape, e, is_operator=True)
        return ret

    def check_keyword_send(self, e, env):
        modes = getattr(e, "part_modes", None) or [e.mode] * len(e.parts)
        if len(set(modes)) > 1:
            self.error(e, "selectors of one message send must be all checked or all"
                          " '?'-prefixed")
        arg_types = []
        for _sel, args in e.parts:
            arg_types.append([(self.type_of(a, env), a) for a in args])
        name = e.message_name
        if e.receiver is None:
            rty = self.current_self_type
            recv_expr = SelfRef(line=e.line, col=e.col)
        elif isinstance(e.receiver, SuperRef):
            rty = self.current_entry.supertype or "Any"
            recv_expr = e.receiver
        else:
            rty = self.type_of(e.receiver, env)
            recv_expr = e.receiver
            if e.mode != "?" and self._abstract_proto_receiver(e.receiver):
                self.error(e, f"cannot send a message to the abstract prototype"
                              f" '{e.receiver.name}'")
        if e.mode == "?":
            return "Any"
        shape = [(sel, ats) for (sel, _a), ats in zip(e.parts, arg_types)]
        # init-call restriction
        if name == "init" or name.startswith("init:"):
            cur = self.current_method
            caller_is_init = cur is not None and (cur.synthetic or cur.name == "init"
                                                  or cur.name.startswith("init:"))
            if not caller_is_init or not isinstance(e.receiver, (SuperRef, type(None))):
                if not (cur is not None and cur.synthetic):
                    self.error(e, "'init' methods can only be called from 'init' methods"
                                  " of the same prototype or a direct sub-prototype")
        if (name == "new" or name.startswith("new:")) and not (
                self.current_method is not None and self.current_method.synthetic):
            if not (isinstance(recv_expr, (NameRef, GenericRef))
                    and self.table.get(self._entry_name_for(recv_expr)) is not None
                    and self.env_hint.lookup(getattr(recv_expr, "name", "")) is None):
                self.error(e, "'new' methods are only accessible through prototypes")
        if rty == "Any":
            return "Any"
        ret, m = self.resolve_send(rty, shape, e, is_operator=False)
        if m is None:
            return ret
        # metaobject-backed special checks
        if m.builtin == "if_nil":
            aty = arg_types[0][0][0]
            if not self.table.assignable(aty, rty):
                self.error(e, f"the argument of 'ifNil:' must have the receiver type"
                              f" '{rty}', found '{aty}'")
            return rty
        if m.builtin == "cast":
            if not isinstance(recv_expr, (NameRef, GenericRef)) or \
                    self.env_hint.lookup(getattr(recv_expr, "name", "")) is not None:
                self.error(e, "'cast:' can only be sent to a prototype")
                return "Any"
            return rty
        if m.builtin == "is_a":
            arg = e.parts[0][1][0]
            if not (isinstance(arg, (NameRef, GenericRef))
                    and self.table.get(self._entry_name_for(arg)) is not None
                    and self.env_hint.lookup(getattr(arg, "name", "")) is None):
                self.error(e, "the argument of 'isA:' must be a prototype or interface")
            return "Boolean"
        if m.builtin == "throw":
            aty = arg_types[0][0][0]
            entry = self.table.get(aty)
            if entry is not None and entry.restricted:
                self.error(e, "a restricted context object cannot be thrown")
        if m.builtin in ("t_f", "f_t"):
            a1, a2 = arg_types[0][0][0], arg_types[1][0][0]
            if a1 != a2 and "Nil" not in (a1, a2):
                self.error(e, f"the arguments of 'T:F:' must have the same type,"
                              f" found '{a1}' and '{a2}'")
            return a1 if a1 != "Nil" else a2
        if m.builtin == "switch":
            for (sel, args), ats in zip(e.parts, arg_types):
                if sel == "case:":
                    for (aty, aexpr) in ats:
                        if aty != rty and not self.table.assignable(aty, rty):
                            self.error(aexpr, f"'case:' expressions must have the"
                                              f" receiver type '{rty}', found '{aty}'")
        if m.builtin == "catch_family":
            self._check_catch_args(e, arg_types)
        if m.builtin == "attach_mixin":
            arg = e.parts[0][1][0]
            aentry = self.table.get(self._entry_name_for(arg) or "")
            if aentry is None or not aentry.is_mixin:
                self.error(e, "the argument of 'attachMixin:' must be a mixin prototype")
            elif aentry.mixin_base is not None:
                base = self.table.resolve_type(aentry.mixin_base)
                if not self.table.is_subtype(rty, base):
                    self.error(e, f"mixin '{aentry.name}' can only be attached to"
                                  f" '{base}' objects")
        if m.builtin in ("clone", "prototype") and m.owner == "Any":
            return rty
        if m.kind == "grammar" and self.grammar_param is None:
            pass
        return ret

    def _check_catch_args(self, e, arg_types):
        for (sel, _args), ats in zip(e.parts, arg_types):
            if sel != "catch:":
                continue
            for aty, aexpr in ats:
                if not self._is_catch_object(aty):
                    self.error(aexpr, f"a 'catch:' argument must have an 'eval:' method"
                                      f" taking a CyException; '{aty}' has none")

    def _is_catch_object(self, ty):
        for anc in self.table.chain(ty):
            g = anc.groups.get("eval:")
            if g is None:
                continue
            for m in g.entries:
                if len(m.param_types) == 1 and \
                        self.table.is_subtype(m.param_types[0], "CyException"):
                    return True
        e = self.table.get(ty)
        if e is not None:
            for i in e.interfaces:
                if self._is_catch_object(i):
                    return True
        return False

    def check_block_lit(self, e, env):
        info = e.info
        sections = []
        for sec in e.param_sections:
            group = []
            for p in sec:
                if p.type is None:
                    self.error(p, f"block parameter '{p.name}' needs a type")
                    group.append("Any")
                else:
                    group.append(self.table.resolve_type(p.type))
            sections.append(group)
        inner = env.child()
        pscope = _Env(env, -1)
        for sec, tysec in zip(e.param_sections, sections):
            for p, t in zip(sec, tysec):
                pscope.declare(p.name, t, is_param=True, level=-1)
        for name in (info.percent_vars if info else {}):
            hit = env.lookup(name)
            pscope.declare(name, hit[0] if hit else "Any", is_param=False,
                           level=inner.level)
        inner.parent = pscope
        saved_returns = self.method_returns
        self.block_rets = rets = []
        prev_rets = getattr(self, "_block_ret_stack", [])
        self._block_ret_stack = prev_rets + [rets]
        self._check_block_stats(e.body, inner, rets)
        self._block_ret_stack = prev_rets
        self.method_returns = saved_returns
        declared = self.table.resolve_type(e.return_type) if e.return_type is not None else None
        if declared is not None:
            for ty, node in rets:
                if not self.table.assignable(ty, declared):
                    self.error(node, f"the block returns '{ty}' but declares '{declared}'")
            ret = declared
        elif rets:
            ret = rets[0][0]
            if ret == "Nil":
                ret = "Any"
            for ty, node in rets[1:]:
                if not self.table.assignable(ty, ret):
                    self.error(node, "all values returned by a block should have the"
                                     " same type")
            if self.table.is_restricted(ret):
                self.error(e, f"a block cannot return the restricted type '{ret}'"
                              f" [rule c]")
        else:
            ret = "Void"
        restricted = info.restricted if info is not None else False
        param_groups = [g for g in sections if g] if any(sections) else []
        iface = block_interface_type(self.table, param_groups, ret, restricted)
        if info is not None:
            info.interface_type = iface
        e.runtime_type = self.table.literal_block_proto(param_groups, ret, restricted)
        return e.runtime_type

    def _check_block_stats(self, stats, env, rets):
        for st in stats:
            if isinstance(st, ReturnStat) and st.is_caret:
                ty = self.type_of(st.value, env) if st.value is not None else "Void"
                rets.append((ty, st))
            elif isinstance(st, IfStat):
                for cond, body in st.arms:
                    cty = self.type_of(cond, env)
                    if cty not in ("Boolean", "Any", "Nil"):
                        self.error(st, f"the 'if' condition must be a Boolean,"
                                       f" not '{cty}'")
                    self._check_block_stats(body, env.child(), rets)
                if st.else_body is not None:
                    self._check_block_stats(st.else_body, env.child(), rets)
            elif isinstance(st, WhileStat):
                self.type_of(st.cond, env)
                self._check_block_stats(st.body, env.child(), rets)
            else:
                self.check_stat(st, env)

    def check_method_access(self, e, env):
        sig = e.sig
        rty = self.type_of(e.receiver, env)
        entry = self.table.get(rty)
        ret = self.table.resolve_type(sig.return_type) if sig.return_type else "Void"
        ptypes = [self.table.resolve_type(t) for t in sig.param_types]
        found = None
        for anc in self.table.chain(rty):
            g = anc.groups.get(sig.name)
            if g is None:
                continue
            for m in g.entries:
                if m.param_types == ptypes and (sig.return_type is None
                                                or m.return_type == ret):
                    found = m
                    break
            if found:
                break
        if found is None:
            self.error(e, f"'{rty}' has no method with signature '{sig.name}'")
            return "Any"
        groups = []
        if found.kind == "keyword":
            i = 0
            for _sel, n in found.sel_arity:
                groups.append(found.param_types[i:i + n])
                i += n
        elif found.param_types:
            groups = [list(found.param_types)]
        return self.table.block_type(None, found.return_type, restricted=False,
                                     groups=groups)

    # -- resolution ------------------------------------------------------------------

    def resolve_send(self, recv_type, shape, node, is_operator=False, quiet=False):
        """Static method resolution starting at the declared receiver type.
        shape: [(selector, [(argtype, argexpr), ...]), ...]"""
        table = self.table
        name = "".join(sel for sel, _ in shape) if not is_operator else shape[0][0]
        plain_shape = [(sel, [t for t, _x in args]) for sel, args in shape]
        rule_f = None
        for anc in self._resolution_chain(recv_type):
            g = anc.groups.get(name)
            if g is not None:
                candidates = [m for m in g.entries if m.arity_matches(plain_shape)]
                accept = None
                for m in candidates:
                    flat = [t for _sel, args in plain_shape for t in args]
                    bad = [(a, p) for a, p in zip(flat, m.param_types)
                           if not (table.assignable(a, p) or a == "Any")]
                    if self._private_ok(m, anc) and not bad:
                        accept = m
                        break
                    if bad and all(table.is_restricted(a) and not table.is_restricted(p)
                                   for a, p in bad) and not m.lenient_restricted:
                        rule_f = bad[0]
                if accept is not None:
                    return accept.return_type, accept
            for m in anc.methods:
                if m.kind != "grammar" or m.automaton is None:
                    continue
                if plain_shape[0][0] not in first_selectors(m.regex):
                    continue
                oracle = (lambda s, t: t == "Any" or table.is_subtype(s, t)) \
                    if m.lenient_restricted else \
                    (lambda s, t: s == "Any" or table.is_subtype(s, t))
                try:
                    flat_shape = [(sel, [t for t, _x in args]) for sel, args in shape]
                    match_message(m.automaton, flat_shape, lambda a: a, oracle)
                    return m.return_type, m
                except NoMatch:
                    continue
        if not quiet:
            if rule_f is not None:
                self.error(node, f"an r-block of type '{rule_f[0]}' cannot be the"
                                 f" argument of a parameter of type '{rule_f[1]}' [rule f]")
            else:
                pretty = " ".join(f"{sel}{'' if not args else ' _' * len(args)}"
                                  for sel, args in shape)
                self.error(node, f"'{recv_type}' has no method matching '{pretty.strip()}'")
        return "Any", None

    def _resolution_chain(self, recv_type):
        entry = self.table.get(recv_type)
        out = []
        seen = set()
        work = [recv_type]
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
            if e.is_interface or e.kind == "blockInterface":
                work.extend(e.interfaces)
        if entry is not None and (entry.is_interface or entry.supertype is None) \
                and "Any" not in seen:
            any_e = self.table.get("Any")
            if any_e is not None:
                out.append(any_e)
        return out

    def _private_ok(self, m, owner_entry):
        if m.qualifier == "private":
            return owner_entry.name == self.current_entry.name or m.builtin is not None
        if m.qualifier == "protected":
            return self.table.is_subtype(self.current_entry.name, owner_entry.name)
        return True

