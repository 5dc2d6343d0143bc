"""Complex references: value-semantics identity sequences.

A ComplexReference is the only way a program denotes an object: an ordered
list of segments, each an instance of one concept's reference class, copied
field by field whenever the reference is assigned or passed.
"""


class _Unset:
    """Marker for a reference field added by casting but never assigned."""

    def __repr__(self):
        return "<unset>"


UNSET = _Unset()


class ReferenceSegment:
    """One constituent of a complex reference: a concept plus its own
    reference-class field values.  The substituted primitive handle, when
    known, rides along in `handle`; it is runtime plumbing, not a field."""

    __slots__ = ("concept", "fields", "handle")

    def __init__(self, concept, fields=None, handle=None):
        self.concept = concept  # concept name
        self.fields = dict(fields) if fields else {}
        self.handle = handle

    def copy(self):
        fields = {}
        for k, v in self.fields.items():
            if isinstance(v, ComplexReference):
                v = v.copy()
            fields[k] = v
        return ReferenceSegment(self.concept, fields, self.handle)

    def is_set(self, name):
        return self.fields.get(name, UNSET) is not UNSET

    def __eq__(self, other):
        return (isinstance(other, ReferenceSegment)
                and self.concept == other.concept
                and self.fields == other.fields)

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.fields.items())
        return f"Segment({self.concept}: {inner})"


class ComplexReference:
    """Ordered segment sequence; `context` is the concept of the last
    missing parent segment (Root for global references)."""

    __slots__ = ("context", "segments")

    def __init__(self, context="Root", segments=None):
        self.context = context
        self.segments = list(segments) if segments else []

    def copy(self):
        return ComplexReference(self.context, [s.copy() for s in self.segments])

    @property
    def is_empty(self):
        return not self.segments

    def last_concept(self):
        return self.segments[-1].concept if self.segments else None

    def concepts(self):
        return [s.concept for s in self.segments]

    def __len__(self):
        return len(self.segments)

    def __eq__(self, other):
        return (isinstance(other, ComplexReference)
                and self.context == other.context
                and self.segments == other.segments)

    def __repr__(self):
        return f"Ref({self.context} : {' > '.join(self.concepts()) or 'empty'})"

    def debug_form(self):
        if not self.segments:
            return f"<{self.context}:empty>"
        parts = []
        for s in self.segments:
            inner = ",".join(f"{k}={_short(v)}" for k, v in s.fields.items())
            parts.append(f"{s.concept}" + (f"{{{inner}}}" if inner else ""))
        return f"<{parts[-1].split('{')[0]}:" + "|".join(parts) + ">"


def _short(v):
    if v is UNSET:
        return "?"
    if isinstance(v, float):
        return f"{v:g}"
    return str(v)


def make_segment(concept_info, defaults):
    """Fresh segment for a concept with declaration-default field values."""
    return ReferenceSegment(concept_info.name, dict(defaults))
