"""Semantic analysis: concept table, inclusion hierarchy, name binding.

`analyze` builds the ConceptTable from a parsed program, rewrites every
neutral ColonForm into LeftCast / RightCast / Concat using concept-name
knowledge, substitutes `conceptof` statically, and binds identifiers.
The rewritten program plus the table feed the evaluator.
"""

from . import ast_nodes as A
from .errors import (
    AnalyzeError, ArityMismatch, ConceptofTarget, CycleDetected,
    DuplicateConcept, DuplicateMember, NotAnAncestor, UnknownConcept,
    UnknownIdentifier, UnknownParent,
)

ROOT = "Root"
PRIMITIVE_KINDS = {"void", "double", "boolean", "String", "Map", "Root"}


class ConceptInfo:
    """One concept: a named pair of reference-class and object-class tables."""

    def __init__(self, name, decl=None):
        self.name = name
        self.decl = decl
        self.parent = None  # ConceptInfo; None only for Root
        self.depth = 0
        self.ref_fields = {}
        self.ref_methods = {}
        self.obj_fields = {}
        self.obj_methods = {}

    @property
    def has_custom_identity(self):
        return bool(self.ref_fields)

    def ancestors(self):
        """Chain from this concept up to and including Root."""
        c = self
        while c is not None:
            yield c
            c = c.parent

    def is_ancestor_or_self(self, other):
        """True if self lies on other's parent chain (or equals it)."""
        return any(c is self for c in other.ancestors())

    def ref_method(self, name, arity=None):
        m = self.ref_methods.get(name)
        if m is not None and arity is not None and m.arity != arity:
            return None
        return m

    def obj_method(self, name, arity=None):
        m = self.obj_methods.get(name)
        if m is not None and arity is not None and m.arity != arity:
            return None
        return m

    def __repr__(self):
        return f"ConceptInfo({self.name})"


class ConceptTable:
    def __init__(self):
        self.root = ConceptInfo(ROOT)
        self.concepts = {ROOT: self.root}
        self.warnings = []

    def has(self, name):
        return name in self.concepts

    def get(self, name, line=None, col=None):
        try:
            return self.concepts[name]
        except KeyError:
            raise UnknownConcept(f"unknown concept '{name}'", line, col) from None

    def path(self, ancestor, descendant):
        """Concepts from ancestor (excluded) down to descendant (included)."""
        chain = []
        c = descendant
        while c is not None and c is not ancestor:
            chain.append(c)
            c = c.parent
        if c is not ancestor:
            raise NotAnAncestor(
                f"'{ancestor.name}' is not an ancestor of '{descendant.name}'")
        chain.reverse()
        return chain


def length_concept(table, name):
    """Number of concepts from Root (excluded) down to the named concept."""
    return table.get(name).depth


def length_interval(table, a, b):
    """Number of concepts from a (excluded) to b (included) along b's chain."""
    ca, cb = table.get(a), table.get(b)
    if not ca.is_ancestor_or_self(cb):
        raise NotAnAncestor(f"'{a}' is not an ancestor of '{b}'")
    return cb.depth - ca.depth


class DeclType:
    """Resolved declared type of a variable, parameter, field, or return."""

    def __init__(self, kind, concept=None, context_concept=None, context_var=None):
        self.kind = kind  # one of PRIMITIVE_KINDS or 'concept'
        self.concept = concept
        self.context_concept = context_concept  # explicit concept context
        self.context_var = context_var          # explicit context held in a variable

    @property
    def is_concept(self):
        return self.kind == "concept"

    def __repr__(self):
        return f"DeclType({self.kind}, {self.concept})"


def analyze(program):
    """Validate a parsed program and return its ConceptTable.

    The program tree is rewritten in place (colon forms classified,
    conceptof substituted) and annotated with resolved declared types.
    """
    table = _build_table(program)
    binder = _Binder(table, program)
    binder.run()
    _continuation_warnings(table, binder)
    return table


def _build_table(program):
    table = ConceptTable()
    for decl in program.concepts:
        if table.has(decl.name):
            raise DuplicateConcept(f"concept '{decl.name}' already defined",
                                   decl.line, decl.col)
        table.concepts[decl.name] = ConceptInfo(decl.name, decl)
    for decl in program.concepts:
        info = table.concepts[decl.name]
        parent_name = decl.parent or ROOT
        if not table.has(parent_name):
            raise UnknownParent(f"unknown parent concept '{parent_name}'",
                                decl.line, decl.col)
        info.parent = table.concepts[parent_name]
    # Cycle check: every parent walk must reach Root.
    for info in table.concepts.values():
        seen = []
        c = info
        while c is not None:
            if c.name in seen:
                path = " -> ".join(seen + [c.name])
                raise CycleDetected(f"inclusion cycle: {path}",
                                    info.decl.line if info.decl else None,
                                    info.decl.col if info.decl else None)
            seen.append(c.name)
            c = c.parent
    for info in table.concepts.values():
        info.depth = sum(1 for _ in info.ancestors()) - 1
    for decl in program.concepts:
        info = table.concepts[decl.name]
        _register_members(decl.ref_members, info.ref_fields, info.ref_methods)
        _register_members(decl.obj_members, info.obj_fields, info.obj_methods)
    return table


def _register_members(members, fields, methods):
    for m in members:
        if m.name in fields or m.name in methods:
            raise DuplicateMember(f"member '{m.name}' already declared in this class",
                                  m.line, m.col)
        if isinstance(m, A.FieldDecl):
            fields[m.name] = m
        else:
            methods[m.name] = m


def _continuation_warnings(table, binder):
    for name in binder.used_concept_types:
        info = table.concepts.get(name)
        if info is None or info is table.root:
            continue
        first = table.path(table.root, info)[0]
        if first.has_custom_identity and "continue" not in first.ref_methods \
                and "create" not in first.ref_methods:
            table.warnings.append(
                f"concept '{first.name}' has reference fields but no 'continue' "
                f"method; references of type '{name}' rely on the built-in "
                f"resolution fallback")


class _Scope:
    def __init__(self, parent=None):
        self.parent = parent
        self.names = {}

    def define(self, name, decl_type):
        self.names[name] = decl_type

    def lookup(self, name):
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None


class _MethodEnv:
    def __init__(self, concept, side):
        self.concept = concept  # ConceptInfo
        self.side = side        # 'ref' | 'obj'


class _BlockEnv:
    def __init__(self, concept):
        self.concept = concept  # ConceptInfo or None when not statically known


class _Binder:
    def __init__(self, table, program):
        self.table = table
        self.program = program
        self.functions = {}
        self.statics = {}
        self.used_concept_types = set()
        self.method_env = None
        self.block_envs = []

    def run(self):
        for f in self.program.functions:
            if f.name in self.functions:
                raise AnalyzeError(f"function '{f.name}' already defined",
                                   f.line, f.col)
            self.functions[f.name] = f
        for s in self.program.statics:
            self.statics[s.decl.name] = self.resolve_type(s.decl.type_ref, None,
                                                          s.decl.line, s.decl.col)
        global_scope = _Scope()
        for s in self.program.statics:
            if s.decl.init is not None:
                s.decl.init = self.expr(s.decl.init, global_scope)
            s.decl.decl_type = self.statics[s.decl.name]
        for decl in self.program.concepts:
            info = self.table.concepts[decl.name]
            for m in decl.ref_members:
                self.member(m, info, "ref")
            for m in decl.obj_members:
                self.member(m, info, "obj")
        for f in self.program.functions:
            self.function(f)
        script = _Scope(global_scope)
        for st in self.program.statements:
            self.stmt(st, script)

    # --- declarations ---

    def resolve_type(self, type_ref, scope, line, col):
        name = type_ref.name
        if name in PRIMITIVE_KINDS:
            kind = name
            concept = None
        elif self.table.has(name):
            kind = "concept"
            concept = name
            self.used_concept_types.add(name)
        else:
            raise UnknownConcept(f"unknown type '{name}'", line, col)
        ctx_concept = None
        ctx_var = None
        if type_ref.context is not None:
            if kind != "concept":
                raise AnalyzeError(
                    f"context prefix is only valid on concept types", line, col)
            if self.table.has(type_ref.context):
                ctx_concept = type_ref.context
                info = self.table.get(concept)
                ctx_info = self.table.get(ctx_concept)
                if not ctx_info.is_ancestor_or_self(info):
                    raise AnalyzeError(
                        f"context '{ctx_concept}' is not an ancestor of '{concept}'",
                        line, col)
                if ctx_concept == concept:
                    self.table.warnings.append(
                        f"declared context '{ctx_concept}' equals the declared "
                        f"type; the reference is empty until cast or assigned")
            else:
                binding = scope.lookup(type_ref.context) if scope else None
                if binding is None or not binding.is_concept:
                    raise UnknownIdentifier(
                        f"context '{type_ref.context}' names neither a concept "
                        f"nor a reference variable", line, col)
                ctx_var = type_ref.context
                ctx_concept = binding.concept
        return DeclType(kind, concept, ctx_concept, ctx_var)

    def member(self, m, info, side):
        if isinstance(m, A.FieldDecl):
            m.decl_type = self.resolve_type(m.type_ref, None, m.line, m.col)
            if m.init is not None:
                m.init = self.expr(m.init, _Scope())
            return
        self.method_env = _MethodEnv(info, side)
        try:
            self.callable_body(m)
        finally:
            self.method_env = None

    def function(self, f):
        self.callable_body(f)

    def callable_body(self, decl):
        scope = _Scope()
        for p in decl.params:
            p.decl_type = self.resolve_type(p.type_ref, scope, decl.line, decl.col)
            scope.define(p.name, p.decl_type)
        decl.type_ref_type = self.resolve_type(decl.type_ref, scope, decl.line, decl.col) \
            if decl.type_ref.name != "void" else None
        for st in decl.body:
            self.stmt(st, scope)

    # --- statements ---

    def stmt(self, st, scope):
        match st:
            case A.VarDeclStmt():
                st.decl_type = self.resolve_type(st.type_ref, scope, st.line, st.col)
                if st.init is not None:
                    st.init = self.expr(st.init, scope)
                scope.define(st.name, st.decl_type)
            case A.DeclCreate():
                st.decl_type = self.resolve_type(st.type_ref, scope, st.line, st.col)
                if not (st.decl_type.is_concept or st.decl_type.kind == "Root"):
                    raise AnalyzeError(
                        "declaration-creation needs a concept or Root type",
                        st.line, st.col)
                st.args = [self.expr(a, scope) for a in st.args]
                scope.define(st.name, st.decl_type)
            case A.Assign():
                st.target = self.expr(st.target, scope, write=True)
                st.value = self.expr(st.value, scope)
            case A.ExprStmt():
                st.expr = self.expr(st.expr, scope)
            case A.Return():
                if st.value is not None:
                    st.value = self.expr(st.value, scope)
            case A.If():
                st.cond = self.expr(st.cond, scope)
                inner = _Scope(scope)
                for s in st.then_body:
                    self.stmt(s, inner)
                if st.else_body is not None:
                    inner = _Scope(scope)
                    for s in st.else_body:
                        self.stmt(s, inner)
            case A.ContextBlock():
                st.context = self.expr(st.context, scope)
                st.concept_name = self.static_concept_of(st.context, scope)
                self.block_envs.append(_BlockEnv(
                    self.table.concepts.get(st.concept_name)
                    if st.concept_name else None))
                try:
                    inner = _Scope(scope)
                    for s in st.body:
                        self.stmt(s, inner)
                finally:
                    self.block_envs.pop()
            case _:
                raise AnalyzeError(f"unsupported statement {st!r}")

    def static_concept_of(self, expr, scope):
        if isinstance(expr, A.Var):
            binding = scope.lookup(expr.name) or self.statics.get(expr.name)
            if binding is not None and binding.is_concept:
                return binding.concept
        return None

    # --- expressions ---

    def expr(self, e, scope, write=False):
        match e:
            case A.Num() | A.Str() | A.Bool() | A.Null() | A.This() | A.Super() \
                    | A.Sub() | A.ConceptName():
                return e
            case A.Var():
                self.bind_name(e.name, scope, e.line, e.col, write)
                return e
            case A.FieldAccess():
                e.obj = self.expr(e.obj, scope)
                return e
            case A.MethodCall():
                e.obj = self.expr(e.obj, scope)
                e.args = [self.expr(a, scope) for a in e.args]
                return e
            case A.Call():
                e.args = [self.expr(a, scope) for a in e.args]
                if e.name == "continue" and not e.args and self.method_env:
                    return e
                f = self.functions.get(e.name)
                if f is not None:
                    if f.arity != len(e.args):
                        raise ArityMismatch(
                            f"function '{e.name}' takes {f.arity} argument(s), "
                            f"got {len(e.args)}", e.line, e.col)
                elif not self.in_dynamic_block() and not self.block_member(e.name):
                    if not self.member_exists_anywhere(e.name):
                        raise UnknownIdentifier(f"unknown function '{e.name}'",
                                                e.line, e.col)
                return e
            case A.DualCall():
                e.args = [self.expr(a, scope) for a in e.args]
                return e
            case A.Builtin():
                return self.builtin(e, scope)
            case A.New():
                if e.name != "Map" and not self.table.has(e.name):
                    raise UnknownConcept(f"unknown concept '{e.name}'", e.line, e.col)
                e.args = [self.expr(a, scope) for a in e.args]
                return e
            case A.ColonForm():
                return self.colon_form(e, scope)
            case A.LeadingColon():
                if isinstance(e.operand, (A.MethodCall, A.FieldAccess)):
                    lifted = _lift_postfix(e.operand,
                                           lambda base: A.LeadingColon(base, e.line, e.col))
                    return self.expr(lifted, scope)
                e.operand = self.expr(e.operand, scope)
                return e
            case A.Binary():
                e.left = self.expr(e.left, scope)
                e.right = self.expr(e.right, scope)
                return e
            case A.Unary():
                e.operand = self.expr(e.operand, scope)
                return e
            case A.LeftCast():
                e.operand = self.expr(e.operand, scope)
                return e
            case A.RightCast():
                e.operand = self.expr(e.operand, scope)
                return e
            case A.Concat():
                e.left = self.expr(e.left, scope)
                e.right = self.expr(e.right, scope)
                return e
        raise AnalyzeError(f"unsupported expression {e!r}")

    def colon_form(self, e, scope):
        # `a : b.m()` accesses a member of the concatenation, so postfix
        # operators re-root around the colon before classification.
        if isinstance(e.right, (A.MethodCall, A.FieldAccess)):
            lifted = _lift_postfix(
                e.right, lambda base: A.ColonForm(e.left, base, e.line, e.col))
            return self.expr(lifted, scope)
        left_concept = self.concept_operand(e.left, scope)
        if left_concept is not None:
            operand = self.expr(e.right, scope)
            return A.LeftCast(left_concept, operand, e.line, e.col)
        left = self.expr(e.left, scope)
        right_concept = self.concept_operand(e.right, scope)
        if right_concept is not None:
            return A.RightCast(left, right_concept, e.line, e.col)
        right = self.expr(e.right, scope)
        return A.Concat(left, right, e.line, e.col)

    def concept_operand(self, e, scope):
        """Concept name denoted by a cast operand, or None."""
        if isinstance(e, A.Var) and self.table.has(e.name):
            if scope.lookup(e.name) is None and e.name not in self.statics:
                return e.name
        if isinstance(e, A.ConceptName):
            return e.name
        if isinstance(e, A.Builtin) and e.name == "conceptof":
            sub = self.builtin(e, scope)
            if isinstance(sub, A.ConceptName):
                return sub.name
        return None

    def builtin(self, e, scope):
        if e.name == "conceptof":
            if len(e.args) != 1 or not isinstance(e.args[0], A.Var):
                raise ConceptofTarget(
                    "conceptof applies to a declared variable", e.line, e.col)
            name = e.args[0].name
            binding = scope.lookup(name) or self.statics.get(name)
            if binding is None or not binding.is_concept:
                raise ConceptofTarget(
                    f"conceptof target '{name}' is not a reference variable",
                    e.line, e.col)
            return A.ConceptName(binding.concept, e.line, e.col)
        if e.name == "length":
            if len(e.args) == 2:
                e.args = [self.concept_arg(a, scope) for a in e.args]
                return e
            if len(e.args) != 1:
                raise ArityMismatch("length takes one or two arguments",
                                    e.line, e.col)
            a = e.args[0]
            if isinstance(a, A.Var) and self.table.has(a.name) \
                    and scope.lookup(a.name) is None and a.name not in self.statics:
                e.args = [A.ConceptName(a.name, a.line, a.col)]
            else:
                e.args = [self.expr(a, scope)]
            return e
        if e.name in ("instanceof", "contextof"):
            if len(e.args) != 1:
                raise ArityMismatch(f"{e.name} takes one argument", e.line, e.col)
            e.args = [self.expr(e.args[0], scope)]
            return e
        # print
        e.args = [self.expr(a, scope) for a in e.args]
        return e

    def concept_arg(self, a, scope):
        if isinstance(a, A.Var) and self.table.has(a.name):
            return A.ConceptName(a.name, a.line, a.col)
        raise UnknownConcept("expected a concept name", a.line, a.col)

    # --- name binding ---

    def bind_name(self, name, scope, line, col, write=False):
        in_scope = scope.lookup(name) is not None
        member = self.block_member(name)
        if member and in_scope:
            self.table.warnings.append(
                f"context member '{name}' shadows an outer binding inside "
                f"a context block")
            return
        if in_scope or member:
            return
        if self.in_dynamic_block():
            return
        env = self.method_env
        if env is not None:
            if name in env.concept.ref_fields:
                return
            for c in env.concept.ancestors():
                if name in c.obj_fields:
                    return
        if name in self.statics:
            return
        if not write and name in self.functions:
            return
        raise UnknownIdentifier(f"unknown identifier '{name}'", line, col)

    def in_dynamic_block(self):
        return any(b.concept is None for b in self.block_envs)

    def block_member(self, name):
        for b in reversed(self.block_envs):
            if b.concept is None:
                continue
            for c in b.concept.ancestors():
                if name in c.obj_fields or name in c.obj_methods \
                        or name in c.ref_fields:
                    return True
        return False

    def member_exists_anywhere(self, name):
        env = self.method_env
        if env is None:
            return False
        for c in env.concept.ancestors():
            if name in c.obj_methods or name in c.ref_methods:
                return True
        return False


def _lift_postfix(node, wrap):
    """Re-root a postfix access chain around a new base expression."""
    if isinstance(node, (A.MethodCall, A.FieldAccess)):
        node.obj = _lift_postfix(node.obj, wrap)
        return node
    return wrap(node)
