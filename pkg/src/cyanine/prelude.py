"""The part of cyan.lang that is written in Cyan itself.

Everything else (basic types, Any, Array, tuples, unions, intervals, blocks,
In/Out/System) is registered as builtin table entries.
"""

PRELUDE_SOURCE = """package cyan.lang

public object CyException
end

public object CastException extends CyException
end

public object AssertException extends CyException
end

public object DoesNotUnderstandException extends CyException
    @init(messageName)
    public :messageName String
end

public object ExceptionCannotCallAbstractMethod(public :message String) extends CyException
end

public object ExceptionCannotCallInterfaceMethod(public :message String) extends CyException
end

public object StrException(public :message String) extends CyException
    public fun eval: (:e StrException) [
        Out println: (e message);
        System exit: 2
    ]
end

public object CatchAll
    public fun eval: (:e CyException) [ ]
end

public object CatchIgnore<:T1>
    public fun eval: (:e T1) [ ]
end

public object CatchIgnore<:T1, :T2>
    public fun eval: (:e T1) [ ]
    public fun eval: (:e T2) [ ]
end

public object CatchIgnore<:T1, :T2, :T3>
    public fun eval: (:e T1) [ ]
    public fun eval: (:e T2) [ ]
    public fun eval: (:e T3) [ ]
end

public object CatchMany<:T1, :T2>(:b UBlock)
    public fun eval: (:e T1) [ b eval ]
    public fun eval: (:e T2) [ b eval ]
end

public object CatchMany<:T1, :T2, :T3>(:b UBlock)
    public fun eval: (:e T1) [ b eval ]
    public fun eval: (:e T2) [ b eval ]
    public fun eval: (:e T3) [ b eval ]
end

public object Ref<:T>(:v &T)
    public fun value -> T [ ^v ]
    public fun value: (:newValue T) [ v = newValue ]
end
"""
