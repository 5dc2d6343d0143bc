"""Core runtime: object heap, context stack, and the access pipeline.

An access travels in three phases.  Reference methods run first, parent
segment before child (`sub` descends one interception level).  When the
reference side is exhausted, each segment's continuation crosses the
border to the object world and its handle is pushed on the context
stack.  Finally the target member dispatches to the most specific object
definition, with `super` walking the stack directly — no re-resolution.

The pipeline nests: a continuation's bare `continue()` runs the rest of
the access inside its own dynamic extent, so cleanup code after it wraps
the real work.  Each segment resolves at most once per access.
"""

from .errors import (
    CoplRuntimeError, CreateFailed, DanglingHandle, MissingContinuation,
    NoParent, NoSuchMember, NotInReferenceMethod, NullReference,
    ResolutionFailed,
)
from .refs import ComplexReference, ReferenceSegment


class Handle:
    """Opaque primitive reference into the runtime heap (language type Root)."""

    __slots__ = ("id",)

    def __init__(self, id):
        self.id = id

    def __repr__(self):
        return f"<Root:#{self.id}>"

    def __eq__(self, other):
        return isinstance(other, Handle) and self.id == other.id

    def __hash__(self):
        return hash(("handle", self.id))


class ObjectSegment:
    """Per-concept object state behind a handle."""

    __slots__ = ("concept", "fields")

    def __init__(self, concept, fields=None):
        self.concept = concept
        self.fields = dict(fields) if fields else {}

    def __repr__(self):
        return f"ObjectSegment({self.concept}, {self.fields})"


class _HeapEntry:
    __slots__ = ("primary", "slabs", "alive")

    def __init__(self, primary):
        self.primary = primary
        self.slabs = {}
        self.alive = True


class Heap:
    """Handle-addressed store.  Ids are monotonic and never reused, so a
    stale handle is always detectable."""

    def __init__(self):
        self._entries = {}
        self._next_id = 1
        self.alloc_count = 0

    def alloc(self, concept_name, fields):
        h = Handle(self._next_id)
        self._next_id += 1
        entry = _HeapEntry(concept_name)
        entry.slabs[concept_name] = ObjectSegment(concept_name, fields)
        self._entries[h.id] = entry
        self.alloc_count += 1
        return h

    def _live_entry(self, handle):
        if not isinstance(handle, Handle):
            raise DanglingHandle("not a primitive reference")
        entry = self._entries.get(handle.id)
        if entry is None or not entry.alive:
            raise DanglingHandle(f"handle #{handle.id} is no longer valid")
        return entry

    def validate(self, handle):
        self._live_entry(handle)

    def get(self, handle, concept=None):
        entry = self._live_entry(handle)
        name = concept or entry.primary
        slab = entry.slabs.get(name)
        if slab is None:
            raise DanglingHandle(
                f"handle #{handle.id} holds no object segment for '{name}'")
        return slab

    def has_slab(self, handle, concept):
        return concept in self._live_entry(handle).slabs

    def ensure_slab(self, handle, concept, fields):
        entry = self._live_entry(handle)
        if concept not in entry.slabs:
            entry.slabs[concept] = ObjectSegment(concept, fields)
        return entry.slabs[concept]

    def drop_slab(self, handle, concept):
        entry = self._live_entry(handle)
        entry.slabs.pop(concept, None)

    def primary_concept(self, handle):
        return self._live_entry(handle).primary

    def free(self, handle):
        entry = self._live_entry(handle)
        entry.alive = False
        entry.slabs.clear()

    def is_alive(self, handle):
        entry = self._entries.get(handle.id)
        return entry is not None and entry.alive

    @property
    def live_count(self):
        return sum(1 for e in self._entries.values() if e.alive)


class StackEntry:
    __slots__ = ("concept", "handle", "segment")

    def __init__(self, concept, handle, segment):
        self.concept = concept
        self.handle = handle
        self.segment = segment


class ContextStack:
    """Resolved (concept, handle) pairs for one access, first segment at
    the bottom; grows strictly in segment order."""

    def __init__(self):
        self.entries = []

    def push(self, concept, handle, segment):
        self.entries.append(StackEntry(concept, handle, segment))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def pairs(self):
        return [(e.concept, e.handle) for e in self.entries]


class AccessRequest:
    """One top-level access travelling through the pipeline."""

    def __init__(self, ref, member, args, kind):
        self.ref = ref
        self.member = member
        self.args = args
        self.kind = kind  # method | field_read | field_write | create | delete | resolve | block
        self.stack = ContextStack()
        self.resolving = set()


class _PipelineRun:
    """One bounded pass over the pipeline: resolve segments up to `goal`,
    then run `payload` exactly once."""

    def __init__(self, goal, payload):
        self.goal = goal
        self.payload = payload
        self.payload_done = False
        self.aborted = False
        self.result = None


class _Frame:
    """Per-continuation bookkeeping: the proceed token fires at most once."""

    __slots__ = ("proceeded",)

    def __init__(self):
        self.proceeded = False


class MethodContext:
    """Where a method body is executing: which side of the border, which
    segment or stack depth, and for which request."""

    __slots__ = ("side", "special", "request", "run", "index", "concept",
                 "frame", "handle")

    def __init__(self, side, special, request, run, index, concept,
                 frame=None, handle=None):
        self.side = side        # 'ref' | 'obj'
        self.special = special  # None | 'continue' | 'create' | 'delete'
        self.request = request
        self.run = run
        self.index = index      # segment index (ref) or stack depth (obj)
        self.concept = concept  # ConceptInfo
        self.frame = frame
        self.handle = handle    # object side: the handle being acted on

    @property
    def segment(self):
        if self.request is None or self.index is None:
            return None
        segs = self.request.ref.segments
        return segs[self.index] if self.index < len(segs) else None


class RuntimeStats:
    def __init__(self):
        self.continuation_runs = 0
        self.accesses = 0

    def reset(self):
        self.continuation_runs = 0
        self.accesses = 0


class Runtime:
    """The access engine.  Method bodies themselves are executed by the
    evaluator, injected as `executor`."""

    def __init__(self, table, executor, trace=None):
        self.table = table
        self.executor = executor
        self.heap = Heap()
        self.trace = trace
        self.stats = RuntimeStats()

    def _trace(self, line):
        if self.trace is not None:
            self.trace(line)

    # ------------------------------------------------------------------
    # entry points

    def invoke(self, ref, member, args, kind="method", start=0, pre_stack=None):
        if ref is None:
            raise NullReference(f"access '{member}' on a null reference")
        if ref.is_empty:
            raise ResolutionFailed(f"access '{member}' on an empty reference")
        self._check_well_formed(ref)
        self._check_member(ref, member, args, kind)
        req = AccessRequest(ref, member, args, kind)
        if pre_stack:
            for e in pre_stack:
                req.stack.entries.append(e)
            start = max(start, len(pre_stack))
        self.stats.accesses += 1
        return self._ref_phase(req, start)

    def field_read(self, ref, name):
        return self.invoke(ref, name, [], kind="field_read")

    def field_write(self, ref, name, value):
        return self.invoke(ref, name, [value], kind="field_write")

    def resolve(self, ref, pre_stack=None):
        """Resolve every segment of a reference; returns the context stack."""
        if ref is None:
            raise NullReference("resolve of a null reference")
        self._check_well_formed(ref)
        req = AccessRequest(ref, None, [], "resolve")
        if pre_stack:
            for e in pre_stack:
                req.stack.entries.append(e)
        self._pipeline(req, len(ref.segments) - 1, None)
        return req.stack

    def enter_context(self, ref, body, pre_stack=None):
        """Resolve a context reference once and run `body(request)` inside
        the resolved continuations (context blocks)."""
        if ref is None:
            raise NullReference("context block on a null reference")
        if ref.is_empty:
            raise ResolutionFailed("context block on an empty reference")
        self._check_well_formed(ref)
        req = AccessRequest(ref, None, [], "block")
        if pre_stack:
            for e in pre_stack:
                req.stack.entries.append(e)
        self.stats.accesses += 1
        return self._pipeline(req, len(ref.segments) - 1, lambda: body(req))

    def _check_well_formed(self, ref):
        prev = self.table.get(ref.context)
        for seg in ref.segments:
            info = self.table.get(seg.concept)
            if info.parent is not prev:
                raise ResolutionFailed(
                    f"ill-formed reference: '{seg.concept}' is not a direct "
                    f"child of '{prev.name}'")
            prev = info

    def _check_member(self, ref, member, args, kind):
        arity = len(args)
        for name in ref.concepts():
            c = self.table.get(name)
            if kind == "method":
                if c.ref_method(member, arity) or c.obj_method(member, arity):
                    return
            elif kind == "field_read":
                if member in c.obj_fields or c.ref_method(member, 0):
                    return
            elif kind == "field_write":
                if member in c.obj_fields:
                    return
        raise NoSuchMember(f"no member '{member}' along reference "
                           f"{' > '.join(ref.concepts())}")

    # ------------------------------------------------------------------
    # reference phase

    def _ref_phase(self, req, i):
        segs = req.ref.segments
        if i >= len(segs):
            return self._pipeline(req, len(segs) - 1, lambda: self._target(req))
        info = self.table.get(segs[i].concept)
        decl = None
        if req.kind == "method":
            decl = info.ref_method(req.member, len(req.args))
        elif req.kind == "field_read":
            decl = info.ref_method(req.member, 0)
        if decl is None:
            # default reference method: pass control to the child
            return self._ref_phase(req, i + 1)
        mctx = MethodContext("ref", None, req, None, i, info)
        self._trace(f"REF-ENTER {info.name}.{req.member}")
        try:
            call_args = req.args if req.kind == "method" else []
            return self.executor.exec_method(decl, mctx, call_args)
        finally:
            self._trace(f"REF-EXIT {info.name}.{req.member}")

    def sub_method(self, mctx, member, args):
        """`sub.member(args)` inside a reference method: descend one level.
        At the last segment this is where meta-transition takes over."""
        req = mctx.request
        if member != req.member or mctx.side != "ref" or mctx.special is not None:
            return self._nested_sub(mctx, member, args)
        return self._ref_phase(req, mctx.index + 1)

    def _nested_sub(self, mctx, member, args):
        # sub with a different member: a fresh access on the tail below
        # the current level, sharing this request's resolution.
        req = mctx.request
        tail = ComplexReference(mctx.concept.name,
                                [s for s in req.ref.segments[mctx.index + 1:]])
        if tail.is_empty:
            return None
        return self.invoke(tail, member, args)

    def sub_is_null(self, mctx):
        return mctx.index is None or \
            mctx.index >= len(mctx.request.ref.segments) - 1

    # ------------------------------------------------------------------
    # the resolution pipeline

    def _pipeline(self, req, goal, payload):
        run = _PipelineRun(goal, payload)
        self._drive(req, run)
        return run.result

    def _drive(self, req, run):
        while not run.aborted:
            k = len(req.stack)
            if k <= run.goal:
                self._resolve_segment(req, run, k)
                if run.aborted or run.payload_done:
                    break
                if len(req.stack) == k:
                    name = req.ref.segments[k].concept
                    raise ResolutionFailed(
                        f"continuation of '{name}' finished without crossing "
                        f"the border")
            elif not run.payload_done:
                self._run_payload(req, run)
                break
            else:
                break

    def _run_payload(self, req, run):
        run.payload_done = True
        if run.payload is not None:
            run.result = run.payload()

    def _proceed(self, req, run, frame):
        if frame.proceeded:
            raise CoplRuntimeError("continuation already proceeded once here")
        frame.proceeded = True
        if run.payload_done:
            raise CoplRuntimeError("access already completed; cannot proceed again")
        self._drive(req, run)

    def _resolve_segment(self, req, run, k):
        seg = req.ref.segments[k]
        info = self.table.get(seg.concept)
        if k in req.resolving:
            raise ResolutionFailed(f"recursive resolution of segment '{info.name}'")
        req.resolving.add(k)
        self.stats.continuation_runs += 1
        try:
            decl = info.ref_method("continue", 0)
            if decl is not None:
                frame = _Frame()
                mctx = MethodContext("ref", "continue", req, run, k, info, frame)
                self._trace(f"REF-ENTER {info.name}.continue")
                try:
                    self.executor.exec_method(decl, mctx, [])
                finally:
                    self._trace(f"REF-EXIT {info.name}.continue")
            else:
                self._default_resolve(req, run, k, info, seg)
        finally:
            req.resolving.discard(k)

    def _default_resolve(self, req, run, k, info, seg):
        h = seg.handle
        if h is None:
            if info.has_custom_identity:
                raise MissingContinuation(
                    f"concept '{info.name}' has a custom identity but no "
                    f"continuation method and no substituted handle")
            if not req.stack.entries:
                raise ResolutionFailed(
                    f"segment '{info.name}' is not bound to any object")
            # empty reference class: the segment inherits the parent's
            # identity; object fields live side by side under one handle.
            h = req.stack.entries[-1].handle
            self.heap.ensure_slab(h, info.name,
                                  self.executor.object_field_inits(info))
            seg.handle = h
        self._border_cross(req, run, k, info, h)

    def _border_cross(self, req, run, k, info, handle):
        """h.continue(): push the resolved handle and run the object-side
        continuation, whose bare continue() proceeds deeper."""
        if len(req.stack) != k:
            raise CoplRuntimeError(
                f"segment '{info.name}' is already resolved in this access")
        self.heap.validate(handle)
        if not self.heap.has_slab(handle, info.name):
            self.heap.ensure_slab(handle, info.name,
                                  self.executor.object_field_inits(info))
        self._trace(f"META {info.name}")
        req.stack.push(info.name, handle, req.ref.segments[k])
        decl = info.obj_method("continue", 0)
        if decl is not None:
            frame = _Frame()
            mctx = MethodContext("obj", "continue", req, run, k, info, frame,
                                 handle)
            self._trace(f"OBJ-ENTER {info.name}.continue")
            try:
                ret = self.executor.exec_method(decl, mctx, [])
            finally:
                self._trace(f"OBJ-EXIT {info.name}.continue")
            if not frame.proceeded and not run.payload_done:
                # withholding the proceed token aborts the access with the
                # continuation's own return
                run.aborted = True
                run.result = ret

    def handle_continue(self, mctx, h):
        """`h.continue()` on a handle value inside a special method."""
        if mctx.side != "ref" or mctx.special not in ("continue", "create"):
            raise CoplRuntimeError(
                "a handle can only be continued inside a reference "
                "continuation or creation method")
        if h is None:
            raise ResolutionFailed("cannot continue on a null handle")
        req, k, info = mctx.request, mctx.index, mctx.concept
        if len(req.stack) > k:
            raise CoplRuntimeError(
                f"segment '{info.name}' already crossed the border; "
                f"create/continue may bind it only once")
        if mctx.special == "create":
            # reuse of an existing object during creation
            self.heap.validate(h)
            self.heap.ensure_slab(h, info.name,
                                  self.executor.object_field_inits(info))
            req.ref.segments[k].handle = h
            self._trace(f"META {info.name}")
            req.stack.push(info.name, h, req.ref.segments[k])
            return None
        self._border_cross(req, mctx.run, k, info, h)
        return None

    def sub_continue(self, mctx):
        """`sub.continue()` inside a reference continuation: explicit descent."""
        if mctx.side != "ref" or mctx.special != "continue":
            raise CoplRuntimeError("sub.continue() is only valid inside a "
                                   "reference continuation method")
        req, k = mctx.request, mctx.index
        if len(req.stack) <= k:
            raise ResolutionFailed(
                f"'{mctx.concept.name}' must resolve its own segment before "
                f"sub.continue()")
        self._proceed(req, mctx.run, mctx.frame)
        return None

    def object_proceed(self, mctx):
        """Bare `continue()` inside an object continuation: the proceed token."""
        if mctx.side != "obj" or mctx.special != "continue":
            raise CoplRuntimeError(
                "continue() is only meaningful inside an object continuation")
        self._proceed(mctx.request, mctx.run, mctx.frame)
        return None

    # ------------------------------------------------------------------
    # object phase

    def _target(self, req):
        top = len(req.stack) - 1
        if req.kind == "field_read":
            return self.obj_field_read(req, top, req.member)
        if req.kind == "field_write":
            self.obj_field_write(req, top, req.member, req.args[0])
            return None
        found = self._find_obj_method(req, top, req.member, len(req.args))
        if found is None:
            return None  # nothing defined on the entity side: no-op
        depth, info, decl = found
        return self._exec_obj_method(req, depth, info, decl, req.args)

    def _find_obj_method(self, req, from_depth, member, arity):
        for d in range(from_depth, -1, -1):
            info = self.table.get(req.stack.entries[d].concept)
            decl = info.obj_method(member, arity)
            if decl is not None:
                return d, info, decl
        return None

    def _exec_obj_method(self, req, depth, info, decl, args, special=None):
        entry = req.stack.entries[depth]
        mctx = MethodContext("obj", special, req, None, depth, info,
                             handle=entry.handle)
        self._trace(f"OBJ-ENTER {info.name}.{decl.name}")
        try:
            return self.executor.exec_method(decl, mctx, args)
        finally:
            self._trace(f"OBJ-EXIT {info.name}.{decl.name}")

    def call_member(self, req, member, args):
        """Dispatch an object method against an already-resolved request
        (context blocks call members directly, with no new resolution)."""
        found = self._find_obj_method(req, len(req.stack) - 1, member, len(args))
        if found is None:
            raise NoSuchMember(f"no object method '{member}' in this context")
        return self._exec_obj_method(req, *found, args)

    def obj_field_read(self, req, from_depth, name):
        for d in range(from_depth, -1, -1):
            e = req.stack.entries[d]
            slab = self.heap.get(e.handle, e.concept)
            if name in slab.fields:
                return slab.fields[name]
        raise NoSuchMember(f"no object field '{name}'")

    def obj_field_write(self, req, from_depth, name, value):
        for d in range(from_depth, -1, -1):
            e = req.stack.entries[d]
            slab = self.heap.get(e.handle, e.concept)
            if name in slab.fields:
                slab.fields[name] = value
                return
        raise NoSuchMember(f"no object field '{name}'")

    # ------------------------------------------------------------------
    # dual access from reference code

    def dual_call(self, mctx, member, args):
        """`.member(args)`: meta-transition to this object's method."""
        if mctx.side != "ref":
            raise NotInReferenceMethod(
                "'.method()' is only valid inside reference methods")
        req, k = mctx.request, mctx.index

        def dispatch():
            found = self._find_obj_method(req, min(k, len(req.stack) - 1),
                                          member, len(args))
            if found is None:
                raise NoSuchMember(
                    f"no object method '{member}' at or above "
                    f"'{mctx.concept.name}'")
            return self._exec_obj_method(req, *found, args)

        if len(req.stack) > k:
            return dispatch()
        return self._pipeline(req, k, dispatch)

    def dual_field_read(self, mctx, name):
        """Read this concept's object field from reference code."""
        req, k = mctx.request, mctx.index

        def read():
            return self.obj_field_read(req, min(k, len(req.stack) - 1), name)

        if len(req.stack) > k:
            return read()
        return self._pipeline(req, k, read)

    def dual_field_write(self, mctx, name, value):
        req, k = mctx.request, mctx.index

        def write():
            self.obj_field_write(req, min(k, len(req.stack) - 1), name, value)

        if len(req.stack) > k:
            write()
        else:
            self._pipeline(req, k, write)

    # ------------------------------------------------------------------
    # super: direct access through the context stack

    def _super_base(self, mctx):
        req = mctx.request
        if mctx.side == "obj":
            if mctx.index is None:
                raise NoParent("parent objects are not resolved here")
            return mctx.index
        # reference side: parents must be resolved, but never this segment
        if len(req.stack) < mctx.index:
            self._pipeline(req, mctx.index - 1, None)
        return mctx.index

    def super_call(self, mctx, member, args):
        base = self._super_base(mctx)
        req = mctx.request
        if base == 0:
            raise NoParent("'super' at the first segment of the access")
        found = self._find_obj_method(req, base - 1, member, len(args))
        if found is None:
            return None  # no ancestor definition: no-op, like sub
        return self._exec_obj_method(req, *found, args)

    def super_field_read(self, mctx, name):
        base = self._super_base(mctx)
        if base == 0:
            raise NoParent("'super' at the first segment of the access")
        return self.obj_field_read(mctx.request, base - 1, name)

    def super_field_write(self, mctx, name, value):
        base = self._super_base(mctx)
        if base == 0:
            raise NoParent("'super' at the first segment of the access")
        self.obj_field_write(mctx.request, base - 1, name, value)

    def super_access(self, req, depth, member, args=None, kind="method"):
        """Direct parent access for a request already in object phase."""
        if depth - 1 < 0:
            raise NoParent("'super' at the first segment of the access")
        if kind == "method":
            found = self._find_obj_method(req, depth - 1, member, len(args or []))
            if found is None:
                return None
            return self._exec_obj_method(req, *found, args or [])
        if kind == "field_read":
            return self.obj_field_read(req, depth - 1, member)
        self.obj_field_write(req, depth - 1, member, args)

    # ------------------------------------------------------------------
    # life cycle

    def create_reference(self, concept_name, context_name, args, existing=None):
        target = self.table.get(concept_name)
        context = self.table.get(context_name or "Root")
        chain = self.table.path(context, target)
        ref = ComplexReference(context.name)
        start = 0
        if existing is not None and not existing.is_empty:
            for seg in existing.segments:
                if start >= len(chain) or seg.concept != chain[start].name:
                    raise CreateFailed(
                        "existing segments do not prefix the declared chain")
                ref.segments.append(seg.copy())
                start += 1
        for info in chain[start:]:
            ref.segments.append(ReferenceSegment(
                info.name, self.executor.ref_field_defaults(info)))
        req = AccessRequest(ref, "create", list(args), "create")
        self.stats.accesses += 1
        if start > 0:
            # pre-assigned parent segments: resolve them, then initialize
            # only the remaining ones
            self._pipeline(req, start - 1, None)
        self._create_descend(req, start, list(args))
        if len(req.stack) != len(chain):
            missing = chain[len(req.stack)].name
            raise CreateFailed(
                f"segment '{missing}' was never allocated or reused")
        return ref

    def _create_descend(self, req, k, args):
        segs = req.ref.segments
        if k >= len(segs):
            return
        info = self.table.get(segs[k].concept)
        decl = info.ref_method("create", len(args))
        if decl is None:
            if args or "create" in info.ref_methods:
                raise CreateFailed(
                    f"'{info.name}' has no create method taking "
                    f"{len(args)} argument(s)")
            self._default_create(req, k, info)
            self._create_descend(req, k + 1, [])
            return
        mctx = MethodContext("ref", "create", req, None, k, info, _Frame())
        self._trace(f"REF-ENTER {info.name}.create")
        try:
            self.executor.exec_method(decl, mctx, args)
        finally:
            self._trace(f"REF-EXIT {info.name}.create")
        if len(req.stack) <= k:
            raise CreateFailed(
                f"create method of '{info.name}' returned without "
                f"allocating or reusing an object")

    def _default_create(self, req, k, info):
        seg = req.ref.segments[k]
        if not info.has_custom_identity and req.stack.entries:
            # inherit identity: share the parent handle, co-locate fields
            h = req.stack.entries[-1].handle
            self.heap.ensure_slab(h, info.name,
                                  self.executor.object_field_inits(info))
        else:
            h = self.heap.alloc(info.name, self.executor.object_field_inits(info))
        seg.handle = h
        self._trace(f"META {info.name}")
        req.stack.push(info.name, h, seg)
        ctor = info.obj_method("create", 0)
        if ctor is not None:
            self._exec_obj_method(req, k, info, ctor, [], special="create")

    def handle_create(self, mctx):
        """`Root h.create()` inside a reference create: allocate this
        concept's object and run its constructor."""
        if mctx.side != "ref" or mctx.special != "create":
            raise CoplRuntimeError(
                "handle creation is only valid inside a reference create method")
        req, k, info = mctx.request, mctx.index, mctx.concept
        if len(req.stack) > k:
            raise CoplRuntimeError(
                f"segment '{info.name}' already crossed the border; "
                f"create/continue may bind it only once")
        h = self.heap.alloc(info.name, self.executor.object_field_inits(info))
        seg = req.ref.segments[k]
        seg.handle = h
        self._trace(f"META {info.name}")
        req.stack.push(info.name, h, seg)
        ctor = info.obj_method("create", 0)
        if ctor is not None:
            self._exec_obj_method(req, k, info, ctor, [], special="create")
        return h

    def sub_create(self, mctx, args):
        if mctx.side != "ref" or mctx.special != "create":
            raise CoplRuntimeError(
                "sub.create() is only valid inside a reference create method")
        req, k = mctx.request, mctx.index
        if len(req.stack) <= k:
            raise CreateFailed(
                f"'{mctx.concept.name}' must allocate or reuse its own "
                f"object before sub.create()")
        self._create_descend(req, k + 1, list(args))
        return None

    def delete_reference(self, ref):
        if ref is None or ref.is_empty:
            raise DanglingHandle("delete of a null reference")
        self._check_well_formed(ref)
        req = AccessRequest(ref, "delete", [], "delete")
        self.stats.accesses += 1
        self._delete_descend(req, 0)

    def _delete_descend(self, req, k):
        segs = req.ref.segments
        if k >= len(segs):
            return
        info = self.table.get(segs[k].concept)
        decl = info.ref_method("delete", 0)
        if decl is None:
            # default: children die first, then this segment
            self._delete_descend(req, k + 1)
            seg = segs[k]
            h = seg.handle
            if h is None:
                self._pipeline(req, k, None)
                h = req.stack.entries[k].handle
            self._destroy(req, k, info, h)
            return
        mctx = MethodContext("ref", "delete", req, None, k, info, _Frame())
        self._trace(f"REF-ENTER {info.name}.delete")
        try:
            self.executor.exec_method(decl, mctx, [])
        finally:
            self._trace(f"REF-EXIT {info.name}.delete")

    def handle_delete(self, mctx, h):
        """`h.delete()` inside a reference delete: run the destructor and
        free the storage."""
        if mctx.side != "ref" or mctx.special != "delete":
            raise CoplRuntimeError(
                "a handle can only be deleted inside a reference delete method")
        if h is None:
            raise DanglingHandle("delete of a null handle")
        self._destroy(mctx.request, mctx.index, mctx.concept, h)
        return None

    def sub_delete(self, mctx):
        if mctx.side != "ref" or mctx.special != "delete":
            raise CoplRuntimeError(
                "sub.delete() is only valid inside a reference delete method")
        self._delete_descend(mctx.request, mctx.index + 1)
        return None

    def _destroy(self, req, k, info, h):
        self.heap.validate(h)
        dtor = info.obj_method("delete", 0)
        if dtor is not None:
            mctx = MethodContext("obj", "delete", req, None, None, info,
                                 handle=h)
            self._trace(f"OBJ-ENTER {info.name}.delete")
            try:
                self.executor.exec_method(dtor, mctx, [])
            finally:
                self._trace(f"OBJ-EXIT {info.name}.delete")
        if self.heap.primary_concept(h) == info.name:
            self.heap.free(h)
        else:
            self.heap.drop_slab(h, info.name)
