"""Program execution: environments, values, builtins, and method bodies.

The evaluator drives statements and expressions; every access to a
concept-typed value goes through the runtime pipeline.  The runtime in
turn calls back into `exec_method` to run method bodies, so the two
modules recurse into each other through one Interpreter instance, which
is single-threaded by contract.
"""

import sys

from . import ast_nodes as A
from . import refops
from .errors import (
    CoplRuntimeError, DanglingHandle, FuelExhausted, NoSuchMember,
    NotInReferenceMethod, NullReference, ResolutionFailed, RuntimeTypeError,
    UnknownIdentifier, UnsetField,
)
from .refs import UNSET, ComplexReference
from .runtime import Handle, MethodContext, Runtime

DEFAULT_MAX_STEPS = 10_000_000


class MapValue:
    """Mutable string-keyed map; copied by handle, matching global maps."""

    __slots__ = ("data",)

    def __init__(self):
        self.data = {}

    def __repr__(self):
        return f"<Map:{len(self.data)}>"


class _SubMarker:
    """Value of bare `sub` when a child segment exists."""

    def __repr__(self):
        return "<sub>"


SUB_PRESENT = _SubMarker()


class ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


class Binding:
    __slots__ = ("decl_type", "value", "explicit_context")

    def __init__(self, decl_type, value, explicit_context=None):
        self.decl_type = decl_type
        self.value = value
        self.explicit_context = explicit_context


class Environment:
    """Lexical frame chain; a frame may carry an active context block."""

    __slots__ = ("parent", "vars", "block_ctx")

    def __init__(self, parent=None):
        self.parent = parent
        self.vars = {}
        self.block_ctx = None

    def define(self, name, binding):
        self.vars[name] = binding

    def lookup(self, name):
        env = self
        while env is not None:
            b = env.vars.get(name)
            if b is not None:
                return b
            env = env.parent
        return None


class BlockContext:
    """One entered context block: the resolved request plus its reference."""

    __slots__ = ("request", "ref")

    def __init__(self, request, ref):
        self.request = request
        self.ref = ref


def _copy_value(v):
    return v.copy() if isinstance(v, ComplexReference) else v


def display(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if v == int(v) and abs(v) < 1e16:
            return f"{v:.1f}"
        return repr(v)
    if isinstance(v, str):
        return v
    if isinstance(v, ComplexReference):
        return v.debug_form()
    if v is UNSET:
        raise UnsetField("use of an unset reference field")
    return repr(v)


class Interpreter:
    def __init__(self, program, table, stdout=None, stderr=None,
                 trace=False, max_steps=DEFAULT_MAX_STEPS):
        self.program = program
        self.table = table
        self.stdout = stdout if stdout is not None else sys.stdout
        self.stderr = stderr if stderr is not None else sys.stderr
        self.max_steps = max_steps
        self.steps = 0
        self.functions = {f.name: f for f in program.functions}
        self.runtime = Runtime(table, self,
                               trace=self._trace_line if trace else None)
        self.globals = Environment()
        self.warned = set()

    # ------------------------------------------------------------------

    def _trace_line(self, line):
        self.stderr.write(line + "\n")

    def _step(self):
        self.steps += 1
        if self.steps > self.max_steps:
            raise FuelExhausted(f"evaluation exceeded {self.max_steps} steps")

    def run(self):
        """Initialize statics in order, then run top-level statements."""
        for s in self.program.statics:
            d = s.decl
            value = self.eval(d.init, self.globals, None) if d.init is not None \
                else self._default_value(d.decl_type)
            self.globals.define(d.name, Binding(d.decl_type, _copy_value(value)))
        script = Environment(self.globals)
        try:
            for st in self.program.statements:
                self.exec_stmt(st, script, None)
        except ReturnSignal:
            pass
        if hasattr(self.stdout, "flush"):
            self.stdout.flush()
        return 0

    def _default_value(self, decl_type):
        if decl_type.kind == "double":
            return 0.0
        if decl_type.kind == "boolean":
            return False
        return None

    # ------------------------------------------------------------------
    # executor protocol (called by the runtime)

    def exec_method(self, decl, mctx, args):
        self._step()
        env = Environment()
        for p, a in zip(decl.params, args):
            env.define(p.name, Binding(p.decl_type, _copy_value(a)))
        try:
            for st in decl.body:
                self.exec_stmt(st, env, mctx)
        except ReturnSignal as r:
            return r.value
        return None

    def object_field_inits(self, info):
        fields = {}
        for name, decl in info.obj_fields.items():
            if decl.init is not None:
                fields[name] = _copy_value(self.eval(decl.init, self.globals, None))
            else:
                fields[name] = self._default_value(decl.decl_type)
        return fields

    def ref_field_defaults(self, info):
        fields = {}
        for name, decl in info.ref_fields.items():
            if decl.init is not None:
                fields[name] = _copy_value(self.eval(decl.init, self.globals, None))
            else:
                fields[name] = self._default_value(decl.decl_type)
        return fields

    # ------------------------------------------------------------------
    # statements

    def exec_stmt(self, st, env, mctx):
        self._step()
        match st:
            case A.VarDeclStmt():
                value = self.eval(st.init, env, mctx) if st.init is not None \
                    else self._default_value(st.decl_type)
                binding = Binding(st.decl_type, _copy_value(value))
                if st.decl_type.context_var is not None:
                    ctx_b = self._find_binding(st.decl_type.context_var, env)
                    if ctx_b is not None and isinstance(ctx_b.value, ComplexReference):
                        binding.explicit_context = ctx_b.value.copy()
                env.define(st.name, binding)
            case A.DeclCreate():
                self._exec_decl_create(st, env, mctx)
            case A.Assign():
                value = self.eval(st.value, env, mctx)
                self._assign(st.target, value, env, mctx)
            case A.ExprStmt():
                self.eval(st.expr, env, mctx)
            case A.Return():
                value = self.eval(st.value, env, mctx) if st.value is not None else None
                raise ReturnSignal(value)
            case A.If():
                cond = self.eval(st.cond, env, mctx)
                if not isinstance(cond, bool):
                    raise RuntimeTypeError("if condition must be boolean",
                                           st.line, st.col)
                body = st.then_body if cond else st.else_body
                if body is not None:
                    inner = Environment(env)
                    for s in body:
                        self.exec_stmt(s, inner, mctx)
            case A.ContextBlock():
                self._exec_context_block(st, env, mctx)
            case _:
                raise CoplRuntimeError(f"cannot execute {st!r}")

    def _exec_decl_create(self, st, env, mctx):
        if st.decl_type.kind == "Root":
            if st.method != "create":
                raise CoplRuntimeError(
                    f"'{st.method}' cannot declare a primitive handle",
                    st.line, st.col)
            h = self.runtime.handle_create(self._require_mctx(mctx, st))
            env.define(st.name, Binding(st.decl_type, h))
            return
        args = [self.eval(a, env, mctx) for a in st.args]
        if st.method != "create":
            raise CoplRuntimeError(
                f"declaration statements support only 'create', not "
                f"'{st.method}'", st.line, st.col)
        ref = self.runtime.create_reference(
            st.decl_type.concept, st.decl_type.context_concept, args)
        env.define(st.name, Binding(st.decl_type, ref))

    def _require_mctx(self, mctx, node):
        if mctx is None:
            raise CoplRuntimeError(
                "primitive handles can only be created inside a reference "
                "create method", node.line, node.col)
        return mctx

    def _exec_context_block(self, st, env, mctx):
        ctx_val = self.eval(st.context, env, mctx)
        if ctx_val is None:
            raise NullReference("context block on a null reference",
                                st.line, st.col)
        if not isinstance(ctx_val, ComplexReference):
            raise RuntimeTypeError("context block needs a reference",
                                   st.line, st.col)

        def body(request):
            benv = Environment(env)
            benv.block_ctx = BlockContext(request, ctx_val)
            for s in st.body:
                self.exec_stmt(s, benv, mctx)

        self.runtime.enter_context(ctx_val, body)

    # ------------------------------------------------------------------
    # name resolution

    def _find_binding(self, name, env):
        b = env.lookup(name)
        if b is not None:
            return b
        return self.globals.vars.get(name)

    def _block_layers(self, env):
        layers = []
        frame = env
        while frame is not None:
            if frame.block_ctx is not None:
                layers.append(frame.block_ctx)
            frame = frame.parent
        return layers

    def _block_member_concepts(self, block):
        concept = self.table.get(block.ref.last_concept())
        return list(concept.ancestors())

    def _read_name(self, name, env, mctx, node):
        # innermost frames first; a frame's own locals shadow its block
        # members, block members shadow everything further out
        frame = env
        while frame is not None:
            if name in frame.vars:
                return self._binding_value(frame.vars[name], node)
            if frame.block_ctx is not None:
                block = frame.block_ctx
                for c in self._block_member_concepts(block):
                    if name in c.obj_fields:
                        return self.runtime.obj_field_read(
                            block.request, len(block.request.stack) - 1, name)
                    if name in c.ref_fields:
                        return self._segment_field_from_block(block, c, name, node)
            frame = frame.parent
        if mctx is not None and mctx.side == "ref":
            seg = mctx.segment
            if seg is not None and name in seg.fields:
                return self._checked_field(seg, name, node)
        if mctx is not None and mctx.side == "obj":
            value = self._obj_side_field_read(mctx, name, search=True)
            if value is not UNSET:
                return value
        if name in self.globals.vars:
            return self._binding_value(self.globals.vars[name], node)
        if mctx is not None and mctx.side == "ref":
            # last resort: this concept's object field, crossing the border
            for c in mctx.concept.ancestors():
                if name in c.obj_fields:
                    return self.runtime.dual_field_read(mctx, name)
        raise UnknownIdentifier(f"unknown identifier '{name}'",
                                node.line, node.col)

    def _binding_value(self, binding, node):
        return binding.value

    def _checked_field(self, seg, name, node):
        v = seg.fields[name]
        if v is UNSET:
            raise UnsetField(f"reference field '{name}' was never assigned",
                             node.line, node.col)
        return v

    def _segment_field_from_block(self, block, concept, name, node):
        for seg in block.ref.segments:
            if seg.concept == concept.name and name in seg.fields:
                return self._checked_field(seg, name, node)
        raise UnknownIdentifier(f"unknown identifier '{name}'", node.line, node.col)

    def _obj_side_field_read(self, mctx, name, search):
        """Read an object field for obj-side code; UNSET means not found."""
        if mctx.index is not None:
            req = mctx.request
            for d in range(mctx.index, -1, -1):
                e = req.stack.entries[d]
                slab = self.runtime.heap.get(e.handle, e.concept)
                if name in slab.fields:
                    return slab.fields[name]
                if not search:
                    break
            return UNSET
        slab = self.runtime.heap.get(mctx.handle, mctx.concept.name)
        if name in slab.fields:
            return slab.fields[name]
        return UNSET

    def _write_name(self, name, value, env, mctx, node):
        frame = env
        while frame is not None:
            if name in frame.vars:
                frame.vars[name].value = _copy_value(value)
                return
            if frame.block_ctx is not None:
                block = frame.block_ctx
                for c in self._block_member_concepts(block):
                    if name in c.obj_fields:
                        self.runtime.obj_field_write(
                            block.request, len(block.request.stack) - 1,
                            name, _copy_value(value))
                        return
            frame = frame.parent
        if mctx is not None and mctx.side == "ref":
            seg = mctx.segment
            if seg is not None and name in seg.fields:
                seg.fields[name] = _copy_value(value)
                return
        if mctx is not None and mctx.side == "obj":
            if self._obj_side_field_write(mctx, name, value):
                return
        if name in self.globals.vars:
            self.globals.vars[name].value = _copy_value(value)
            return
        raise UnknownIdentifier(f"cannot assign to unknown identifier '{name}'",
                                node.line, node.col)

    def _obj_side_field_write(self, mctx, name, value):
        if mctx.index is not None:
            req = mctx.request
            for d in range(mctx.index, -1, -1):
                e = req.stack.entries[d]
                slab = self.runtime.heap.get(e.handle, e.concept)
                if name in slab.fields:
                    slab.fields[name] = _copy_value(value)
                    return True
            return False
        slab = self.runtime.heap.get(mctx.handle, mctx.concept.name)
        if name in slab.fields:
            slab.fields[name] = _copy_value(value)
            return True
        return False

    def _assign(self, target, value, env, mctx):
        match target:
            case A.Var(name=name):
                self._write_name(name, value, env, mctx, target)
            case A.FieldAccess(obj=A.This(), name=name):
                self._assign_this_field(name, value, mctx, target)
            case A.FieldAccess(obj=A.Super(), name=name):
                if mctx is None:
                    raise CoplRuntimeError("'super' outside any access",
                                           target.line, target.col)
                self.runtime.super_field_write(mctx, name, _copy_value(value))
            case A.FieldAccess(obj=obj, name=name):
                receiver = self.eval(obj, env, mctx)
                if receiver is None:
                    raise NullReference(f"field '{name}' of a null reference",
                                        target.line, target.col)
                if not isinstance(receiver, ComplexReference):
                    raise RuntimeTypeError("field assignment needs a reference",
                                           target.line, target.col)
                self.runtime.field_write(receiver, name, _copy_value(value))
            case _:
                raise CoplRuntimeError("invalid assignment target",
                                       target.line, target.col)

    def _assign_this_field(self, name, value, mctx, node):
        if mctx is None:
            raise CoplRuntimeError("'this' outside any method", node.line, node.col)
        if mctx.side == "ref":
            seg = mctx.segment
            if seg is None or name not in seg.fields:
                raise NoSuchMember(f"no reference field '{name}' in "
                                   f"'{mctx.concept.name}'", node.line, node.col)
            seg.fields[name] = _copy_value(value)
            return
        if not self._obj_side_field_write(mctx, name, value):
            raise NoSuchMember(f"no object field '{name}'", node.line, node.col)

    # ------------------------------------------------------------------
    # expressions

    def eval(self, e, env, mctx):
        self._step()
        match e:
            case A.Num(value=v):
                return v
            case A.Str(value=v):
                return v
            case A.Bool(value=v):
                return v
            case A.Null():
                return None
            case A.ConceptName(name=n):
                return n
            case A.Var(name=n):
                return self._read_name(n, env, mctx, e)
            case A.This():
                return self._this_value(mctx, e)
            case A.Sub():
                if mctx is None or mctx.side != "ref":
                    raise CoplRuntimeError("'sub' outside reference-side code",
                                           e.line, e.col)
                return None if self.runtime.sub_is_null(mctx) else SUB_PRESENT
            case A.Super():
                raise CoplRuntimeError("'super' needs a member access",
                                       e.line, e.col)
            case A.FieldAccess():
                return self._eval_field_access(e, env, mctx)
            case A.MethodCall():
                return self._eval_method_call(e, env, mctx)
            case A.Call():
                return self._eval_call(e, env, mctx)
            case A.DualCall():
                if mctx is None:
                    raise NotInReferenceMethod(
                        "'.method()' outside reference-side code", e.line, e.col)
                args = [self.eval(a, env, mctx) for a in e.args]
                return self.runtime.dual_call(mctx, e.name, args)
            case A.Builtin():
                return self._eval_builtin(e, env, mctx)
            case A.New():
                if e.name == "Map":
                    return MapValue()
                args = [self.eval(a, env, mctx) for a in e.args]
                return self.runtime.create_reference(e.name, None, args)
            case A.LeftCast():
                return self._eval_left_cast(e, env, mctx)
            case A.RightCast():
                operand = self._ref_operand(e.operand, env, mctx, "right cast")
                return refops.right_cast(self.table, operand, e.concept)
            case A.Concat():
                return self._eval_concat(e, env, mctx)
            case A.LeadingColon():
                combined, _ = self._eval_leading_colon(e, env, mctx)
                return combined
            case A.Binary():
                return self._eval_binary(e, env, mctx)
            case A.Unary():
                v = self.eval(e.operand, env, mctx)
                if e.op == "-":
                    if not isinstance(v, float) or isinstance(v, bool):
                        raise RuntimeTypeError("unary '-' needs a double",
                                               e.line, e.col)
                    return -v
                raise CoplRuntimeError(f"unknown operator {e.op}", e.line, e.col)
            case A.ColonForm():
                return self._eval_concat(e, env, mctx)
        raise CoplRuntimeError(f"cannot evaluate {e!r}")

    def _this_value(self, mctx, node):
        if mctx is None:
            raise CoplRuntimeError("'this' outside any method",
                                   node.line, node.col)
        return THIS_MARKER

    # --- member access ---

    def _eval_field_access(self, e, env, mctx):
        if isinstance(e.obj, A.This):
            if mctx is None:
                raise CoplRuntimeError("'this' outside any method", e.line, e.col)
            if mctx.side == "ref":
                seg = mctx.segment
                if seg is not None and e.name in seg.fields:
                    return self._checked_field(seg, e.name, e)
                raise NoSuchMember(f"no reference field '{e.name}' in "
                                   f"'{mctx.concept.name}'", e.line, e.col)
            value = self._obj_side_field_read(mctx, e.name, search=True)
            if value is UNSET:
                raise NoSuchMember(f"no object field '{e.name}'", e.line, e.col)
            return value
        if isinstance(e.obj, A.Super):
            if mctx is None:
                raise CoplRuntimeError("'super' outside any access", e.line, e.col)
            return self.runtime.super_field_read(mctx, e.name)
        if isinstance(e.obj, A.Sub):
            raise CoplRuntimeError("field access through 'sub' is not supported",
                                   e.line, e.col)
        receiver = self.eval(e.obj, env, mctx)
        if receiver is None:
            raise NullReference(f"field '{e.name}' of a null reference",
                                e.line, e.col)
        if isinstance(receiver, ComplexReference):
            return self.runtime.field_read(receiver, e.name)
        raise RuntimeTypeError(f"value {display(receiver)!r} has no fields",
                               e.line, e.col)

    def _eval_method_call(self, e, env, mctx):
        obj = e.obj
        if isinstance(obj, A.This):
            return self._call_this(e, env, mctx)
        if isinstance(obj, A.Super):
            if mctx is None:
                raise CoplRuntimeError("'super' outside any access", e.line, e.col)
            args = [self.eval(a, env, mctx) for a in e.args]
            return self.runtime.super_call(mctx, e.name, args)
        if isinstance(obj, A.Sub):
            return self._call_sub(e, env, mctx)
        if isinstance(obj, A.LeadingColon):
            combined, pre = self._eval_leading_colon(obj, env, mctx)
            args = [self.eval(a, env, mctx) for a in e.args]
            return self.runtime.invoke(combined, e.name, args, pre_stack=pre)
        # handle-valued receivers get the special border operations
        if isinstance(obj, A.Var):
            binding = self._find_binding(obj.name, env)
            if binding is not None and binding.decl_type.kind == "Root" \
                    and e.name in ("create", "continue", "delete"):
                return self._handle_op(e, binding, env, mctx)
            if binding is not None and binding.decl_type.is_concept \
                    and e.name in ("create", "delete"):
                return self._lifecycle_op(e, binding, env, mctx)
        receiver = self.eval(obj, env, mctx)
        args = [self.eval(a, env, mctx) for a in e.args]
        return self._dispatch_value_call(e, receiver, args, mctx)

    def _dispatch_value_call(self, e, receiver, args, mctx):
        if receiver is None:
            raise NullReference(f"call of '{e.name}' on null", e.line, e.col)
        if isinstance(receiver, MapValue):
            return self._map_call(e, receiver, args)
        if isinstance(receiver, Handle):
            if e.name == "continue":
                return self.runtime.handle_continue(
                    self._require_mctx(mctx, e), receiver)
            if e.name == "delete":
                return self.runtime.handle_delete(
                    self._require_mctx(mctx, e), receiver)
            raise CoplRuntimeError(f"primitive handles have no method "
                                   f"'{e.name}'", e.line, e.col)
        if isinstance(receiver, ComplexReference):
            if e.name == "delete":
                self.runtime.delete_reference(receiver)
                return None
            return self.runtime.invoke(receiver, e.name, args)
        raise RuntimeTypeError(f"cannot call '{e.name}' on "
                               f"{display(receiver)!r}", e.line, e.col)

    def _map_call(self, e, receiver, args):
        if e.name == "get" and len(args) == 1:
            return receiver.data.get(display(args[0]))
        if e.name == "add" and len(args) == 2:
            receiver.data[display(args[0])] = args[1]
            return None
        if e.name == "remove" and len(args) == 1:
            receiver.data.pop(display(args[0]), None)
            return None
        raise NoSuchMember(f"Map has no method '{e.name}' with "
                           f"{len(args)} argument(s)", e.line, e.col)

    def _handle_op(self, e, binding, env, mctx):
        m = self._require_mctx(mctx, e)
        if e.name == "create":
            h = self.runtime.handle_create(m)
            binding.value = h
            return h
        if binding.value is None and e.name == "continue":
            raise ResolutionFailed("cannot continue on a null handle",
                                   e.line, e.col)
        if e.name == "continue":
            return self.runtime.handle_continue(m, binding.value)
        return self.runtime.handle_delete(m, binding.value)

    def _lifecycle_op(self, e, binding, env, mctx):
        args = [self.eval(a, env, mctx) for a in e.args]
        if e.name == "create":
            ref = self.runtime.create_reference(
                binding.decl_type.concept, binding.decl_type.context_concept,
                args, existing=binding.value)
            binding.value = ref
            return None
        if binding.value is None:
            raise DanglingHandle("delete of a null reference", e.line, e.col)
        self.runtime.delete_reference(binding.value)
        return None

    def _call_this(self, e, env, mctx):
        if mctx is None:
            raise CoplRuntimeError("'this' outside any method", e.line, e.col)
        args = [self.eval(a, env, mctx) for a in e.args]
        info = mctx.concept
        if mctx.side == "ref":
            decl = info.ref_method(e.name, len(args))
            if decl is None:
                raise NoSuchMember(f"no reference method '{e.name}' in "
                                   f"'{info.name}'", e.line, e.col)
            sub_ctx = MethodContext("ref", None, mctx.request, None,
                                    mctx.index, info)
            return self.exec_method(decl, sub_ctx, args)
        decl = info.obj_method(e.name, len(args))
        if decl is None:
            raise NoSuchMember(f"no object method '{e.name}' in "
                               f"'{info.name}'", e.line, e.col)
        sub_ctx = MethodContext("obj", None, mctx.request, None,
                                mctx.index, info, handle=mctx.handle)
        return self.exec_method(decl, sub_ctx, args)

    def _call_sub(self, e, env, mctx):
        if mctx is None or mctx.side != "ref":
            raise CoplRuntimeError("'sub' outside reference-side code",
                                   e.line, e.col)
        if mctx.special == "continue" and e.name == "continue" and not e.args:
            return self.runtime.sub_continue(mctx)
        if mctx.special == "create" and e.name == "create":
            args = [self.eval(a, env, mctx) for a in e.args]
            return self.runtime.sub_create(mctx, args)
        if mctx.special == "delete" and e.name == "delete" and not e.args:
            return self.runtime.sub_delete(mctx)
        args = [self.eval(a, env, mctx) for a in e.args]
        return self.runtime.sub_method(mctx, e.name, args)

    def _eval_call(self, e, env, mctx):
        if e.name == "continue" and not e.args and mctx is not None \
                and mctx.side == "obj" and mctx.special == "continue":
            return self.runtime.object_proceed(mctx)
        # context-block members take precedence over outer names
        frame = env
        while frame is not None:
            if frame.block_ctx is not None:
                block = frame.block_ctx
                for c in self._block_member_concepts(block):
                    if e.name in c.obj_methods:
                        args = [self.eval(a, env, mctx) for a in e.args]
                        return self.runtime.call_member(block.request, e.name, args)
            frame = frame.parent
        f = self.functions.get(e.name)
        if f is not None:
            args = [self.eval(a, env, mctx) for a in e.args]
            return self._exec_function(f, args)
        if mctx is not None:
            info = mctx.concept
            methods = info.ref_methods if mctx.side == "ref" else info.obj_methods
            if e.name in methods:
                call = A.MethodCall(A.This(), e.name, e.args, e.line, e.col)
                return self._eval_method_call(call, env, mctx)
        raise UnknownIdentifier(f"unknown function '{e.name}'", e.line, e.col)

    def _exec_function(self, f, args):
        self._step()
        env = Environment()
        for p, a in zip(f.params, args):
            env.define(p.name, Binding(p.decl_type, _copy_value(a)))
        try:
            for st in f.body:
                self.exec_stmt(st, env, None)
        except ReturnSignal as r:
            return r.value
        return None

    # --- builtins ---

    def _eval_builtin(self, e, env, mctx):
        name = e.name
        if name == "print":
            args = [self.eval(a, env, mctx) for a in e.args]
            self.stdout.write(" ".join(display(a) for a in args) + "\n")
            return None
        if name == "length":
            return self._eval_length(e, env, mctx)
        if name in ("instanceof", "contextof"):
            v = self.eval(e.args[0], env, mctx)
            if v is None:
                raise NullReference(f"{name} of a null reference", e.line, e.col)
            if not isinstance(v, ComplexReference):
                raise RuntimeTypeError(f"{name} needs a reference", e.line, e.col)
            return refops.instanceof_ref(v) if name == "instanceof" \
                else refops.contextof_ref(v)
        raise CoplRuntimeError(f"unresolved builtin '{name}'", e.line, e.col)

    def _eval_length(self, e, env, mctx):
        from .semantics import length_concept, length_interval
        if len(e.args) == 2:
            a, b = e.args
            return float(length_interval(self.table, a.name, b.name))
        arg = e.args[0]
        if isinstance(arg, A.ConceptName):
            return float(length_concept(self.table, arg.name))
        v = self.eval(arg, env, mctx)
        if v is None:
            raise NullReference("length of a null reference", e.line, e.col)
        if isinstance(v, str) and self.table.has(v):
            return float(length_concept(self.table, v))
        if isinstance(v, ComplexReference):
            return float(refops.length_ref(v))
        raise RuntimeTypeError("length needs a reference or concept name",
                               e.line, e.col)

    # --- reference expressions ---

    def _ref_operand(self, expr, env, mctx, op):
        v = self.eval(expr, env, mctx)
        if v is None:
            raise NullReference(f"{op} of a null reference",
                                getattr(expr, "line", None),
                                getattr(expr, "col", None))
        if not isinstance(v, ComplexReference):
            raise RuntimeTypeError(f"{op} needs a reference",
                                   getattr(expr, "line", None),
                                   getattr(expr, "col", None))
        return v

    def _implicit_context(self, expr, env, mctx):
        """Segment sources for left-cast extension, innermost first."""
        sources = {}
        for block in reversed(self._block_layers(env)):
            for seg in block.ref.segments:
                sources[seg.concept] = seg
        if isinstance(expr, A.Var):
            binding = self._find_binding(expr.name, env)
            if binding is not None and binding.explicit_context is not None:
                for seg in binding.explicit_context.segments:
                    sources[seg.concept] = seg
        if mctx is not None and mctx.request is not None:
            for entry in mctx.request.stack.entries:
                sources[entry.concept] = entry.segment
            for seg in mctx.request.ref.segments:
                sources.setdefault(seg.concept, seg)
        return sources

    def _eval_left_cast(self, e, env, mctx):
        operand = self._ref_operand(e.operand, env, mctx, "left cast")
        implicit = self._implicit_context(e.operand, env, mctx)
        return refops.left_cast(self.table, e.concept, operand, implicit)

    def _eval_concat(self, e, env, mctx):
        left = self.eval(e.left, env, mctx)
        right = self.eval(e.right, env, mctx)
        if isinstance(left, str) and self.table.has(left):
            if not isinstance(right, ComplexReference):
                raise RuntimeTypeError("cast needs a reference", e.line, e.col)
            implicit = self._implicit_context(e.right, env, mctx)
            return refops.left_cast(self.table, left, right, implicit)
        if isinstance(right, str) and self.table.has(right):
            if not isinstance(left, ComplexReference):
                raise RuntimeTypeError("cast needs a reference", e.line, e.col)
            return refops.right_cast(self.table, left, right)
        if isinstance(left, ComplexReference) and isinstance(right, ComplexReference):
            return refops.concat(self.table, left, right)
        raise RuntimeTypeError("':' needs references or a concept name",
                               e.line, e.col)

    def _eval_leading_colon(self, e, env, mctx):
        blocks = self._block_layers(env)
        if not blocks:
            raise CoplRuntimeError("':expr' outside a context block",
                                   e.line, e.col)
        block = blocks[0]
        operand = self._ref_operand(e.operand, env, mctx, "':' concatenation")
        combined = refops.concat(self.table, block.ref, operand)
        pre = block.request.stack.entries[:len(block.ref.segments)]
        return combined, list(pre)

    # --- operators ---

    def _eval_binary(self, e, env, mctx):
        op = e.op
        if op == "&&":
            left = self.eval(e.left, env, mctx)
            self._need_bool(left, e)
            if not left:
                return False
            right = self.eval(e.right, env, mctx)
            self._need_bool(right, e)
            return right
        if op == "||":
            left = self.eval(e.left, env, mctx)
            self._need_bool(left, e)
            if left:
                return True
            right = self.eval(e.right, env, mctx)
            self._need_bool(right, e)
            return right
        left = self.eval(e.left, env, mctx)
        right = self.eval(e.right, env, mctx)
        if op == "==":
            return self._equal(left, right)
        if op == "!=":
            return not self._equal(left, right)
        if op == "+":
            if isinstance(left, str) or isinstance(right, str):
                return display(left) + display(right) \
                    if not isinstance(left, str) else left + display(right)
            self._need_num(left, e)
            self._need_num(right, e)
            return left + right
        if op == "-":
            self._need_num(left, e)
            self._need_num(right, e)
            return left - right
        if op in ("<", ">"):
            self._need_num(left, e)
            self._need_num(right, e)
            return left < right if op == "<" else left > right
        raise CoplRuntimeError(f"unknown operator {op}", e.line, e.col)

    def _need_bool(self, v, e):
        if not isinstance(v, bool):
            raise RuntimeTypeError("logical operator needs booleans",
                                   e.line, e.col)

    def _need_num(self, v, e):
        if not isinstance(v, float) or isinstance(v, bool):
            raise RuntimeTypeError("arithmetic needs doubles", e.line, e.col)

    def _equal(self, a, b):
        if a is None or b is None:
            return a is None and b is None
        if isinstance(a, _SubMarker) or isinstance(b, _SubMarker):
            return isinstance(a, _SubMarker) and isinstance(b, _SubMarker)
        if isinstance(a, bool) != isinstance(b, bool):
            return False
        return a == b


THIS_MARKER = object()


def run_program(program, table, stdout=None, stderr=None, trace=False,
                max_steps=DEFAULT_MAX_STEPS):
    """Execute an analyzed program; returns the interpreter for inspection."""
    interp = Interpreter(program, table, stdout, stderr, trace, max_steps)
    interp.run()
    return interp
