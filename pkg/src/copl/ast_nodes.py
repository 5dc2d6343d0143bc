"""AST node classes and a canonical pretty-printer.

Nodes are plain dataclasses so structural equality comes for free; the
pretty-printer emits source that re-parses to an equal tree.
"""

from dataclasses import dataclass, field


@dataclass
class Node:
    pass


@dataclass
class TypeRef(Node):
    name: str
    context: str | None = None  # context prefix `Ctx :`; concept-or-variable name

    def __str__(self):
        return f"{self.context} : {self.name}" if self.context else self.name


# --- expressions -------------------------------------------------------------

@dataclass
class Expr(Node):
    pass


@dataclass
class Num(Expr):
    value: float
    line: int = 0
    col: int = 0


@dataclass
class Str(Expr):
    value: str
    line: int = 0
    col: int = 0


@dataclass
class Bool(Expr):
    value: bool
    line: int = 0
    col: int = 0


@dataclass
class Null(Expr):
    line: int = 0
    col: int = 0


@dataclass
class Var(Expr):
    name: str
    line: int = 0
    col: int = 0


@dataclass
class This(Expr):
    line: int = 0
    col: int = 0


@dataclass
class Super(Expr):
    line: int = 0
    col: int = 0


@dataclass
class Sub(Expr):
    line: int = 0
    col: int = 0


@dataclass
class ConceptName(Expr):
    """A name statically known to denote a concept (inserted by analysis)."""
    name: str
    line: int = 0
    col: int = 0


@dataclass
class FieldAccess(Expr):
    obj: Expr
    name: str
    line: int = 0
    col: int = 0


@dataclass
class MethodCall(Expr):
    obj: Expr
    name: str
    args: list
    line: int = 0
    col: int = 0


@dataclass
class Call(Expr):
    """Bare call: user function, context-block member, or `continue()`."""
    name: str
    args: list
    line: int = 0
    col: int = 0


@dataclass
class DualCall(Expr):
    """`.name(args)` — call of this object's method from reference code."""
    name: str
    args: list
    line: int = 0
    col: int = 0


@dataclass
class Builtin(Expr):
    name: str  # print | length | instanceof | contextof | conceptof
    args: list
    line: int = 0
    col: int = 0


@dataclass
class New(Expr):
    name: str
    args: list
    line: int = 0
    col: int = 0


@dataclass
class ColonForm(Expr):
    """Neutral `a : b`; analysis rewrites to LeftCast/RightCast/Concat."""
    left: Expr
    right: Expr
    line: int = 0
    col: int = 0


@dataclass
class LeftCast(Expr):
    concept: str
    operand: Expr
    line: int = 0
    col: int = 0


@dataclass
class RightCast(Expr):
    operand: Expr
    concept: str
    line: int = 0
    col: int = 0


@dataclass
class Concat(Expr):
    left: Expr
    right: Expr
    line: int = 0
    col: int = 0


@dataclass
class LeadingColon(Expr):
    """`:expr` inside a context block — concatenate onto the block context."""
    operand: Expr
    line: int = 0
    col: int = 0


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    line: int = 0
    col: int = 0


@dataclass
class Unary(Expr):
    op: str
    operand: Expr
    line: int = 0
    col: int = 0


# --- statements ---------------------------------------------------------------

@dataclass
class Stmt(Node):
    pass


@dataclass
class VarDeclStmt(Stmt):
    type_ref: TypeRef
    name: str
    init: Expr | None = None
    line: int = 0
    col: int = 0


@dataclass
class DeclCreate(Stmt):
    """`Type name.method(args);` — declare and immediately run a creation method."""
    type_ref: TypeRef
    name: str
    method: str
    args: list = field(default_factory=list)
    line: int = 0
    col: int = 0


@dataclass
class Assign(Stmt):
    target: Expr
    value: Expr
    line: int = 0
    col: int = 0


@dataclass
class ExprStmt(Stmt):
    expr: Expr
    line: int = 0
    col: int = 0


@dataclass
class Return(Stmt):
    value: Expr | None = None
    line: int = 0
    col: int = 0


@dataclass
class If(Stmt):
    cond: Expr
    then_body: list = field(default_factory=list)
    else_body: list | None = None
    line: int = 0
    col: int = 0


@dataclass
class ContextBlock(Stmt):
    context: Expr
    body: list = field(default_factory=list)
    line: int = 0
    col: int = 0


# --- declarations ---------------------------------------------------------------

@dataclass
class Param(Node):
    type_ref: TypeRef
    name: str


@dataclass
class FieldDecl(Node):
    type_ref: TypeRef
    name: str
    init: Expr | None = None
    line: int = 0
    col: int = 0


@dataclass
class MethodDecl(Node):
    type_ref: TypeRef
    name: str
    params: list = field(default_factory=list)
    body: list = field(default_factory=list)
    line: int = 0
    col: int = 0

    @property
    def arity(self):
        return len(self.params)


@dataclass
class ConceptDecl(Node):
    name: str
    parent: str | None = None
    ref_members: list = field(default_factory=list)
    obj_members: list = field(default_factory=list)
    has_ref_block: bool = False
    has_obj_block: bool = False
    line: int = 0
    col: int = 0


@dataclass
class FuncDecl(Node):
    type_ref: TypeRef
    name: str
    params: list = field(default_factory=list)
    body: list = field(default_factory=list)
    line: int = 0
    col: int = 0

    @property
    def arity(self):
        return len(self.params)


@dataclass
class StaticVarDecl(Node):
    decl: VarDeclStmt
    line: int = 0
    col: int = 0


@dataclass
class Program(Node):
    concepts: list = field(default_factory=list)
    functions: list = field(default_factory=list)
    statics: list = field(default_factory=list)
    statements: list = field(default_factory=list)
    # Original interleaved order of top-level items, used for printing.
    items: list = field(default_factory=list)


# --- pretty printing -------------------------------------------------------------

def pp_expr(e):
    match e:
        case Num(value=v):
            return repr(v) if not float(v).is_integer() else str(int(v))
        case Str(value=v):
            return f'"{v}"'
        case Bool(value=v):
            return "true" if v else "false"
        case Null():
            return "null"
        case Var(name=n) | ConceptName(name=n):
            return n
        case This():
            return "this"
        case Super():
            return "super"
        case Sub():
            return "sub"
        case FieldAccess(obj=o, name=n):
            return f"{pp_expr(o)}.{n}"
        case MethodCall(obj=o, name=n, args=a):
            return f"{pp_expr(o)}.{n}({', '.join(pp_expr(x) for x in a)})"
        case Call(name=n, args=a) | Builtin(name=n, args=a) | New(name=n, args=a):
            prefix = "new " if isinstance(e, New) else ""
            return f"{prefix}{n}({', '.join(pp_expr(x) for x in a)})"
        case DualCall(name=n, args=a):
            return f".{n}({', '.join(pp_expr(x) for x in a)})"
        case ColonForm(left=l, right=r) | Concat(left=l, right=r):
            return f"({pp_expr(l)} : {pp_expr(r)})"
        case LeftCast(concept=c, operand=o):
            return f"({c} : {pp_expr(o)})"
        case RightCast(operand=o, concept=c):
            return f"({pp_expr(o)} : {c})"
        case LeadingColon(operand=o):
            return f":{pp_expr(o)}"
        case Binary(op=op, left=l, right=r):
            return f"({pp_expr(l)} {op} {pp_expr(r)})"
        case Unary(op=op, operand=o):
            return f"({op}{pp_expr(o)})"
    raise TypeError(f"unprintable expression: {e!r}")


def pp_stmt(s, indent=""):
    inner = indent + "    "
    match s:
        case VarDeclStmt(type_ref=t, name=n, init=i):
            head = f"{indent}{t} {n}"
            return head + (f" = {pp_expr(i)};" if i is not None else ";")
        case DeclCreate(type_ref=t, name=n, method=m, args=a):
            return f"{indent}{t} {n}.{m}({', '.join(pp_expr(x) for x in a)});"
        case Assign(target=t, value=v):
            return f"{indent}{pp_expr(t)} = {pp_expr(v)};"
        case ExprStmt(expr=e):
            return f"{indent}{pp_expr(e)};"
        case Return(value=None):
            return f"{indent}return;"
        case Return(value=v):
            return f"{indent}return {pp_expr(v)};"
        case If(cond=c, then_body=tb, else_body=eb):
            text = f"{indent}if ({pp_expr(c)}) {{\n"
            text += "".join(pp_stmt(x, inner) + "\n" for x in tb)
            text += indent + "}"
            if eb is not None:
                text += " else {\n"
                text += "".join(pp_stmt(x, inner) + "\n" for x in eb)
                text += indent + "}"
            return text
        case ContextBlock(context=c, body=b):
            text = f"{indent}{pp_expr(c)} : {{\n"
            text += "".join(pp_stmt(x, inner) + "\n" for x in b)
            return text + indent + "}"
    raise TypeError(f"unprintable statement: {s!r}")


def _pp_member(m, indent):
    if isinstance(m, FieldDecl):
        init = f" = {pp_expr(m.init)}" if m.init is not None else ""
        return f"{indent}{m.type_ref} {m.name}{init};"
    params = ", ".join(f"{p.type_ref} {p.name}" for p in m.params)
    text = f"{indent}{m.type_ref} {m.name}({params}) {{\n"
    text += "".join(pp_stmt(s, indent + "    ") + "\n" for s in m.body)
    return text + indent + "}"


def pretty_print(program):
    """Emit canonical source for a parsed program."""
    parts = []
    for item in program.items:
        if isinstance(item, ConceptDecl):
            head = f"concept {item.name}"
            if item.parent:
                head += f" in {item.parent}"
            text = head + "\n"
            if item.has_ref_block:
                text += "    reference {\n"
                text += "".join(_pp_member(m, "        ") + "\n" for m in item.ref_members)
                text += "    }\n"
            if item.has_obj_block:
                text += "    object {\n"
                text += "".join(_pp_member(m, "        ") + "\n" for m in item.obj_members)
                text += "    }\n"
            parts.append(text.rstrip("\n"))
        elif isinstance(item, FuncDecl):
            params = ", ".join(f"{p.type_ref} {p.name}" for p in item.params)
            text = f"{item.type_ref} {item.name}({params}) {{\n"
            text += "".join(pp_stmt(s, "    ") + "\n" for s in item.body)
            parts.append(text + "}")
        elif isinstance(item, StaticVarDecl):
            parts.append("static " + pp_stmt(item.decl).strip())
        else:
            parts.append(pp_stmt(item))
    return "\n".join(parts) + "\n"
