"""Reference algebra: structural operators over complex references.

All operations are pure: operands are never mutated and results are
fresh values.  They need the ConceptTable only for hierarchy queries.
"""

from .errors import (
    CastUnrelated, IllFormedResult, MissingContextValues, NullRefOperand,
)
from .refs import UNSET, ComplexReference, ReferenceSegment


def _require(ref, op):
    if ref is None:
        raise NullRefOperand(f"{op} of a null reference")
    return ref


def _check_well_formed(table, ref, op):
    prev = table.get(ref.context)
    for seg in ref.segments:
        info = table.get(seg.concept)
        if info.parent is not prev:
            raise IllFormedResult(
                f"{op}: '{seg.concept}' does not directly extend '{prev.name}'")
        prev = info


def length_ref(a):
    """Real number of segments in a reference."""
    _require(a, "length")
    return len(a.segments)


def instanceof_ref(a):
    """Concept of the last segment: the real type of the reference."""
    _require(a, "instanceof")
    if a.is_empty:
        raise NullRefOperand("instanceof of an empty reference")
    return a.segments[-1].concept


def contextof_ref(a):
    """Concept of the last missing parent segment (Root when global)."""
    _require(a, "contextof")
    return a.context


def left_cast(table, left_concept, a, implicit_context=None):
    """Change the context: prepend segments down to the current context
    (values taken from the implicit context) or cut off leading segments
    through the new context concept."""
    _require(a, "left cast")
    _check_well_formed(table, a, "left cast")
    new_ctx = table.get(left_concept)
    cur_ctx = table.get(a.context)
    if new_ctx is cur_ctx:
        return a.copy()
    if new_ctx.is_ancestor_or_self(cur_ctx):
        # extension: the reference gains leading segments
        needed = table.path(new_ctx, cur_ctx)
        source = _context_segments(implicit_context)
        prefix = []
        for info in needed:
            seg = source.get(info.name)
            if seg is None:
                raise MissingContextValues(
                    f"implicit context provides no '{info.name}' segment")
            prefix.append(seg.copy())
        return ComplexReference(new_ctx.name, prefix + [s.copy() for s in a.segments])
    # shortening: the new context must lie on this reference's own chain
    for i, seg in enumerate(a.segments):
        if seg.concept == new_ctx.name:
            return ComplexReference(new_ctx.name,
                                    [s.copy() for s in a.segments[i + 1:]])
    raise CastUnrelated(
        f"'{left_concept}' is neither an ancestor of context "
        f"'{a.context}' nor a segment of the reference")


def _context_segments(implicit_context):
    """Map concept -> segment from whatever carries the enclosing context."""
    if implicit_context is None:
        return {}
    if isinstance(implicit_context, ComplexReference):
        return {s.concept: s for s in implicit_context.segments}
    if isinstance(implicit_context, dict):
        return dict(implicit_context)
    out = {}
    for item in implicit_context:  # stack entries or segments
        seg = getattr(item, "segment", item)
        if isinstance(seg, ReferenceSegment):
            out[seg.concept] = seg
    return out


def right_cast(table, a, right_concept):
    """Change the real type: drop trailing segments after the concept, or
    append empty (unset) segments down to it."""
    _require(a, "right cast")
    _check_well_formed(table, a, "right cast")
    target = table.get(right_concept)
    base = table.get(a.segments[-1].concept if a.segments else a.context)
    if target is base:
        return a.copy()
    if base.is_ancestor_or_self(target):
        # extension by empty last segments
        new_segs = [s.copy() for s in a.segments]
        for info in table.path(base, target):
            new_segs.append(ReferenceSegment(
                info.name, {f: UNSET for f in info.ref_fields}))
        return ComplexReference(a.context, new_segs)
    if target.is_ancestor_or_self(base):
        keep = []
        for seg in a.segments:
            keep.append(seg.copy())
            if seg.concept == target.name:
                return ComplexReference(a.context, keep)
        # target lies above the first segment (inside the missing context)
        raise CastUnrelated(
            f"'{right_concept}' lies outside the stored segments of the reference")
    raise CastUnrelated(
        f"'{right_concept}' is unrelated to the real type of the reference")


def _require_chain(table, concepts, op):
    infos = sorted({table.get(c) for c in concepts}, key=lambda i: i.depth)
    for lo, hi in zip(infos, infos[1:]):
        if not lo.is_ancestor_or_self(hi):
            raise IllFormedResult(
                f"{op}: '{lo.name}' and '{hi.name}' do not lie on one chain")
    return infos


def _assemble(table, infos, pick, op):
    """Build a reference from depth-sorted concepts; verify contiguity."""
    if not infos:
        return ComplexReference("Root", [])
    for prev, nxt in zip(infos, infos[1:]):
        if nxt.parent is not prev:
            raise IllFormedResult(
                f"{op}: gap between '{prev.name}' and '{nxt.name}'")
    context = infos[0].parent.name if infos[0].parent else "Root"
    return ComplexReference(context, [pick(i.name).copy() for i in infos])


def intersect(table, a, b):
    """Segments whose concepts occur in both references (values from a)."""
    _require(a, "intersection")
    _require(b, "intersection")
    _check_well_formed(table, a, "intersection")
    _check_well_formed(table, b, "intersection")
    _require_chain(table, a.concepts() + b.concepts(), "intersection")
    in_b = set(b.concepts())
    by_name = {s.concept: s for s in a.segments}
    infos = [table.get(c) for c in a.concepts() if c in in_b]
    return _assemble(table, infos, by_name.__getitem__, "intersection")


def union(table, a, b):
    """All segments of both references; on overlap the right operand wins."""
    _require(a, "union")
    _require(b, "union")
    _check_well_formed(table, a, "union")
    _check_well_formed(table, b, "union")
    names = a.concepts() + [c for c in b.concepts() if c not in set(a.concepts())]
    infos = _require_chain(table, names, "union")
    pick = {s.concept: s for s in a.segments}
    pick.update({s.concept: s for s in b.segments})
    return _assemble(table, infos, pick.__getitem__, "union")


def assign(table, target, source):
    """Copy the intersection of two references into the target; on an
    empty intersection the target is returned unchanged."""
    _require(target, "assignment")
    _require(source, "assignment")
    by_name = {s.concept: s for s in source.segments}
    out = target.copy()
    for seg in out.segments:
        src = by_name.get(seg.concept)
        if src is not None:
            seg.fields = {k: v for k, v in src.copy().fields.items()}
            seg.handle = src.handle
    return out


def concat(table, a, b):
    """`a : b`: right-cast a to the real type of b, then copy b in."""
    _require(a, "concatenation")
    _require(b, "concatenation")
    if b.is_empty:
        return a.copy()
    widened = right_cast(table, a, instanceof_ref(b))
    return assign(table, widened, b)


class RefView:
    """The three type-level views of one stored reference."""

    def __init__(self, context_concept, declared_concept, actual_concept):
        self.context_concept = context_concept
        self.declared_concept = declared_concept
        self.actual_concept = actual_concept

    def ordering_holds(self, table):
        ctx = table.get(self.context_concept)
        declared = table.get(self.declared_concept)
        actual = table.get(self.actual_concept)
        strict = ctx.is_ancestor_or_self(actual) and ctx is not actual
        return strict and declared.is_ancestor_or_self(actual)


def ref_view(table, ref, declared_concept):
    _require(ref, "view")
    if ref.is_empty:
        raise NullRefOperand("view of an empty reference")
    return RefView(contextof_ref(ref), declared_concept, instanceof_ref(ref))
