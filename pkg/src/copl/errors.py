"""Error types shared across the copl toolchain.

Every user-facing failure is a CoplError; the CLI renders them as
``error[<code>]: <message> at <file>:<line>:<col>``.
"""


class CoplError(Exception):
    code = "Error"

    def __init__(self, message, line=None, col=None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def diagnostic(self, path="<input>"):
        if self.line is not None:
            where = f"{path}:{self.line}:{self.col}"
        else:
            where = path
        return f"error[{self.code}]: {self.message} at {where}"


# --- syntax ---------------------------------------------------------------

class LexError(CoplError):
    code = "LexError"


class ParseError(CoplError):
    code = "ParseError"


# --- semantic analysis ----------------------------------------------------

class AnalyzeError(CoplError):
    code = "AnalyzeError"


class UnknownParent(AnalyzeError):
    code = "UnknownParent"


class DuplicateConcept(AnalyzeError):
    code = "DuplicateConcept"


class DuplicateMember(AnalyzeError):
    code = "DuplicateMember"


class CycleDetected(AnalyzeError):
    code = "CycleDetected"


class UnknownIdentifier(AnalyzeError):
    code = "UnknownIdentifier"


class UnknownConcept(AnalyzeError):
    code = "UnknownConcept"


class ConceptofTarget(AnalyzeError):
    code = "ConceptofTarget"


class ArityMismatch(AnalyzeError):
    code = "ArityMismatch"


# --- runtime ----------------------------------------------------------------

class CoplRuntimeError(CoplError):
    code = "RuntimeError"


class NoSuchMember(CoplRuntimeError):
    code = "NoSuchMember"


class ResolutionFailed(CoplRuntimeError):
    code = "ResolutionFailed"


class MissingContinuation(CoplRuntimeError):
    code = "MissingContinuation"


class DanglingHandle(CoplRuntimeError):
    code = "DanglingHandle"


class NullReference(CoplRuntimeError):
    code = "NullReference"


class NoParent(CoplRuntimeError):
    code = "NoParent"


class CreateFailed(CoplRuntimeError):
    code = "CreateFailed"


class RuntimeTypeError(CoplRuntimeError):
    code = "RuntimeTypeError"


class NotInReferenceMethod(CoplRuntimeError):
    code = "NotInReferenceMethod"


class UnsetField(CoplRuntimeError):
    code = "UnsetField"


class FuelExhausted(CoplRuntimeError):
    code = "FuelExhausted"


# --- reference algebra ------------------------------------------------------

class RefOpError(CoplError):
    code = "RefOpError"


class NullRefOperand(RefOpError):
    code = "NullReference"


class NotAnAncestor(RefOpError):
    code = "NotAnAncestor"


class CastUnrelated(RefOpError):
    code = "CastUnrelated"


class IllFormedResult(RefOpError):
    code = "IllFormedResult"


class MissingContextValues(RefOpError):
    code = "MissingContextValues"
