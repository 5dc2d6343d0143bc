"""copl: an interpreter for a small concept-oriented programming language.

Every program element is a pair of one reference (identity, copied by
value) and one object (entity, behind a handle).  See README.md for the
language tour and the CLI.
"""

import io

from .errors import CoplError
from .evaluator import Interpreter, run_program
from .lexer import Token, tokenize
from .parser import parse, parse_expression, parse_source
from .semantics import ConceptTable, analyze, length_concept, length_interval

__all__ = [
    "CoplError", "ConceptTable", "Interpreter", "Token", "analyze",
    "compile_source", "length_concept", "length_interval", "parse",
    "parse_expression", "parse_source", "run_program", "run_source",
    "tokenize",
]


def compile_source(source):
    """Tokenize, parse, and analyze; returns (program, table)."""
    program = parse(tokenize(source))
    table = analyze(program)
    return program, table


def run_source(source, trace=False, max_steps=10_000_000):
    """Run a program from source text; returns (stdout, stderr, interpreter)."""
    program, table = compile_source(source)
    out, err = io.StringIO(), io.StringIO()
    interp = Interpreter(program, table, stdout=out, stderr=err,
                         trace=trace, max_steps=max_steps)
    interp.run()
    return out.getvalue(), err.getvalue(), interp
