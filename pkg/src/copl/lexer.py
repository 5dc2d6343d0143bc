"""Tokenizer for .cop source text."""

from .errors import LexError

KEYWORDS = {
    "concept", "reference", "object", "in", "this", "super", "sub", "new",
    "static", "return", "if", "else", "null", "true", "false",
    "void", "double", "boolean", "String", "Root",
}

# Multi-character punctuation must be matched before single characters.
TWO_CHAR = {"==", "!=", "&&", "||"}
ONE_CHAR = set("{}();,.:=<>+-")


class Token:
    __slots__ = ("kind", "text", "line", "col")

    def __init__(self, kind, text, line, col):
        self.kind = kind  # keyword | identifier | literal | punctuation
        self.text = text
        self.line = line
        self.col = col

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"

    def __eq__(self, other):
        return (isinstance(other, Token)
                and (self.kind, self.text, self.line, self.col)
                == (other.kind, other.text, other.line, other.col))


def tokenize(source):
    """Turn source text into a token list; comments run from // to end of line."""
    tokens = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(count=1):
        nonlocal i, line, col
        for _ in range(count):
            if source[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance()
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                advance()
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "keyword" if word in KEYWORDS else "identifier"
            tokens.append(Token(kind, word, start_line, start_col))
            advance(j - i)
        elif ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            tokens.append(Token("literal", source[i:j], start_line, start_col))
            advance(j - i)
        elif ch == '"':
            j = i + 1
            while j < n and source[j] != '"':
                if source[j] == "\n":
                    raise LexError("unterminated string literal", start_line, start_col)
                j += 1
            if j >= n:
                raise LexError("unterminated string literal", start_line, start_col)
            tokens.append(Token("literal", source[i:j + 1], start_line, start_col))
            advance(j + 1 - i)
        elif source[i:i + 2] in TWO_CHAR:
            tokens.append(Token("punctuation", source[i:i + 2], start_line, start_col))
            advance(2)
        elif ch in ONE_CHAR:
            tokens.append(Token("punctuation", ch, start_line, start_col))
            advance()
        else:
            raise LexError(f"illegal character {ch!r}", start_line, start_col)
    return tokens
