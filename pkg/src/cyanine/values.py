"""Runtime value representations for the tree-walking interpreter."""


class Cell:
    """A mutable variable slot; liveness is tracked so the classification
    soundness property can assert no dead captured slot is ever read."""
    __slots__ = ("value", "alive", "eternal")

    def __init__(self, value, eternal=False):
        self.value = value
        self.alive = True
        self.eternal = eternal

    def __repr__(self):
        return f"Cell({self.value!r}{'' if self.alive else ', dead'})"


class PrimV:
    __slots__ = ("kind", "v")

    def __init__(self, kind, v):
        self.kind = kind    # Byte Short Int Long Float Double Char Boolean String CySymbol
        self.v = v

    def __repr__(self):
        return f"{self.kind}({self.v!r})"


class _Singleton:
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name

    def __repr__(self):
        return self.name


NIL = _Singleton("nil")
NOOBJECT = _Singleton("noObject")
UNIT = _Singleton("unit")      # value of argument-less grammar selectors (type Any)


class ArrayV:
    __slots__ = ("type_name", "elem_type", "elems")

    def __init__(self, type_name, elem_type, elems):
        self.type_name = type_name
        self.elem_type = elem_type
        self.elems = elems


class TupleV:
    __slots__ = ("type_name", "names", "values")

    def __init__(self, type_name, names, values):
        self.type_name = type_name
        self.names = names
        self.values = values


class UnionV:
    __slots__ = ("type_name", "names", "tag", "payload")

    def __init__(self, type_name, names, tag=None, payload=None):
        self.type_name = type_name
        self.names = names
        self.tag = tag          # field index or None when empty
        self.payload = payload


class IntervalV:
    __slots__ = ("type_name", "elem_kind", "first", "last")

    def __init__(self, type_name, elem_kind, first, last):
        self.type_name = type_name
        self.elem_kind = elem_kind
        self.first = first      # raw python int (chars use ord)
        self.last = last


class ObjectV:
    __slots__ = ("proto", "fields", "mixins", "own_methods", "is_prototype")

    def __init__(self, proto, is_prototype=False):
        self.proto = proto
        self.fields = {}
        self.mixins = []        # most recently attached first
        self.own_methods = {}
        self.is_prototype = is_prototype

    def __repr__(self):
        return f"<{'proto ' if self.is_prototype else ''}{self.proto}>"


class BlockV:
    __slots__ = ("decl", "scope", "self_obj", "fields_owner", "method_ctx",
                 "type_name", "snapshot", "home_entry")

    def __init__(self, decl, scope, self_obj, fields_owner, method_ctx,
                 type_name, snapshot, home_entry):
        self.decl = decl
        self.scope = scope
        self.self_obj = self_obj
        self.fields_owner = fields_owner
        self.method_ctx = method_ctx      # return target of `return` in the body
        self.type_name = type_name
        self.snapshot = snapshot          # %-var name -> value at creation
        self.home_entry = home_entry      # entry whose method created the block

    def __repr__(self):
        return f"<block {self.type_name}>"


class MethodV:
    __slots__ = ("receiver", "entry", "type_name", "fields_owner")

    def __init__(self, receiver, entry, type_name, fields_owner):
        self.receiver = receiver
        self.entry = entry
        self.type_name = type_name
        self.fields_owner = fields_owner

    def __repr__(self):
        return f"<method {self.entry.owner}::{self.entry.name}>"


class NativeBlockV:
    __slots__ = ("fn", "type_name")

    def __init__(self, fn, type_name):
        self.fn = fn
        self.type_name = type_name
