"""Recursive-descent parser producing the copl AST.

The `:` token is ambiguous (casts, concatenation, context blocks, local
reference declarations); the parser keeps it neutral where possible and
emits ColonForm nodes that semantic analysis classifies.
"""

from . import ast_nodes as A
from .errors import ParseError
from .lexer import tokenize

PRIMITIVE_TYPES = {"void", "double", "boolean", "String", "Map", "Root"}
BUILTIN_NAMES = {"print", "length", "instanceof", "contextof", "conceptof"}


class Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    # --- token helpers ---

    def peek(self, offset=0):
        i = self.pos + offset
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, text, offset=0):
        t = self.peek(offset)
        return t is not None and t.text == text

    def at_kind(self, kind, offset=0):
        t = self.peek(offset)
        return t is not None and t.kind == kind

    def advance(self):
        t = self.peek()
        if t is None:
            raise self.error("unexpected end of input")
        self.pos += 1
        return t

    def expect(self, text):
        t = self.peek()
        if t is None or t.text != text:
            raise self.error(f"expected {text!r}")
        return self.advance()

    def error(self, message):
        t = self.peek()
        if t is None:
            last = self.tokens[-1] if self.tokens else None
            line = last.line if last else 1
            col = last.col + len(last.text) if last else 1
            return ParseError(message, line, col)
        return ParseError(f"{message}, found {t.text!r}", t.line, t.col)

    # --- program structure ---

    def parse_program(self):
        prog = A.Program()
        while self.peek() is not None:
            item = self.parse_top_item()
            prog.items.append(item)
            if isinstance(item, A.ConceptDecl):
                prog.concepts.append(item)
            elif isinstance(item, A.FuncDecl):
                prog.functions.append(item)
            elif isinstance(item, A.StaticVarDecl):
                prog.statics.append(item)
            else:
                prog.statements.append(item)
        return prog

    def parse_top_item(self):
        if self.at("concept"):
            return self.parse_concept()
        if self.at("static"):
            t = self.advance()
            decl = self.parse_statement()
            if not isinstance(decl, A.VarDeclStmt):
                raise ParseError("static requires a variable declaration", t.line, t.col)
            return A.StaticVarDecl(decl, line=t.line, col=t.col)
        func = self.try_parse_function()
        if func is not None:
            return func
        return self.parse_statement()

    def try_parse_function(self):
        saved = self.pos
        t = self.peek()
        type_ref = self.try_parse_type_ref()
        if type_ref is not None and self.at_kind("identifier") and self.at("(", 1):
            name = self.advance().text
            params = self.parse_params()
            body = self.parse_stmt_block()
            return A.FuncDecl(type_ref, name, params, body, line=t.line, col=t.col)
        self.pos = saved
        return None

    def parse_concept(self):
        kw = self.expect("concept")
        name = self.expect_ident("concept name")
        parent = None
        if self.at("in"):
            self.advance()
            parent = self.expect_ident("parent concept name")
        decl = A.ConceptDecl(name, parent, line=kw.line, col=kw.col)
        if self.at("reference"):
            self.advance()
            decl.has_ref_block = True
            decl.ref_members = self.parse_member_block()
        if self.at("object"):
            self.advance()
            decl.has_obj_block = True
            decl.obj_members = self.parse_member_block()
        return decl

    def parse_member_block(self):
        self.expect("{")
        members = []
        while not self.at("}"):
            members.append(self.parse_member())
        self.expect("}")
        return members

    def parse_member(self):
        t = self.peek()
        type_ref = self.try_parse_type_ref()
        if type_ref is None:
            raise self.error("expected member declaration")
        name = self.expect_ident("member name")
        if self.at("("):
            params = self.parse_params()
            body = self.parse_stmt_block()
            return A.MethodDecl(type_ref, name, params, body, line=t.line, col=t.col)
        init = None
        if self.at("="):
            self.advance()
            init = self.parse_expr()
        self.expect(";")
        return A.FieldDecl(type_ref, name, init, line=t.line, col=t.col)

    def parse_params(self):
        self.expect("(")
        params = []
        while not self.at(")"):
            if params:
                self.expect(",")
            type_ref = self.try_parse_type_ref()
            if type_ref is None:
                raise self.error("expected parameter type")
            name = self.expect_ident("parameter name")
            params.append(A.Param(type_ref, name))
        self.expect(")")
        return params

    def expect_ident(self, what):
        t = self.peek()
        if t is None or t.kind != "identifier":
            raise self.error(f"expected {what}")
        return self.advance().text

    # --- types ---

    def try_parse_type_ref(self):
        """typeRef := primitive | Root | Map | (IDENT ':')? IDENT — or None."""
        t = self.peek()
        if t is None:
            return None
        if t.text == "Root" and self.at(":", 1) and self.at_kind("identifier", 2) \
                and self.at_kind("identifier", 3):
            self.advance()
            self.advance()  # ':'
            name = self.advance().text
            return A.TypeRef(name, context="Root")
        if t.text in PRIMITIVE_TYPES or t.text == "Root":
            self.advance()
            return A.TypeRef(t.text)
        if t.kind != "identifier":
            return None
        # `Ctx : Type` declaration prefix: IDENT ':' IDENT IDENT
        if self.at(":", 1) and self.at_kind("identifier", 2) and self.at_kind("identifier", 3):
            ctx = self.advance().text
            self.advance()  # ':'
            name = self.advance().text
            return A.TypeRef(name, context=ctx)
        if self.at(":", 1) and self.peek(2) is not None and \
                self.peek(2).text in PRIMITIVE_TYPES and self.at_kind("identifier", 3):
            ctx = self.advance().text
            self.advance()
            name = self.advance().text
            return A.TypeRef(name, context=ctx)
        self.advance()
        return A.TypeRef(t.text)

    # --- statements ---

    def parse_stmt_block(self):
        self.expect("{")
        body = []
        while not self.at("}"):
            body.append(self.parse_statement())
        self.expect("}")
        return body

    def parse_statement(self):
        t = self.peek()
        if t is None:
            raise self.error("expected statement")
        if t.text == "return":
            self.advance()
            value = None
            if not self.at(";"):
                value = self.parse_expr()
            self.expect(";")
            return A.Return(value, line=t.line, col=t.col)
        if t.text == "if":
            self.advance()
            self.expect("(")
            cond = self.parse_expr()
            self.expect(")")
            then_body = self.parse_stmt_block()
            else_body = None
            if self.at("else"):
                self.advance()
                else_body = self.parse_stmt_block()
            return A.If(cond, then_body, else_body, line=t.line, col=t.col)

        decl = self.try_parse_declaration()
        if decl is not None:
            return decl

        expr = self.parse_expr()
        if self.at(":") and self.at("{", 1):
            self.advance()
            body = self.parse_stmt_block()
            return A.ContextBlock(expr, body, line=t.line, col=t.col)
        if self.at("="):
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            if not isinstance(expr, (A.Var, A.FieldAccess)):
                raise ParseError("invalid assignment target", t.line, t.col)
            return A.Assign(expr, value, line=t.line, col=t.col)
        self.expect(";")
        return A.ExprStmt(expr, line=t.line, col=t.col)

    def try_parse_declaration(self):
        """varDecl `T n [= e];` or declCreate `T n.m(args);`, else backtrack."""
        saved = self.pos
        t = self.peek()
        type_ref = self.try_parse_type_ref()
        if type_ref is None or not self.at_kind("identifier"):
            self.pos = saved
            return None
        name = self.advance().text
        if self.at(";"):
            self.advance()
            return A.VarDeclStmt(type_ref, name, None, line=t.line, col=t.col)
        if self.at("="):
            self.advance()
            init = self.parse_expr()
            self.expect(";")
            return A.VarDeclStmt(type_ref, name, init, line=t.line, col=t.col)
        if self.at(".") and self.at_kind("identifier", 1) and self.at("(", 2):
            self.advance()
            method = self.advance().text
            args = self.parse_args()
            self.expect(";")
            return A.DeclCreate(type_ref, name, method, args, line=t.line, col=t.col)
        self.pos = saved
        return None

    # --- expressions ---

    def parse_expr(self):
        return self.parse_colon()

    def parse_colon(self):
        left = self.parse_or()
        # `expr : {` belongs to the context-block statement rule.
        while self.at(":") and not self.at("{", 1):
            t = self.advance()
            right = self.parse_or()
            left = A.ColonForm(left, right, line=t.line, col=t.col)
        return left

    def parse_or(self):
        left = self.parse_and()
        while self.at("||"):
            t = self.advance()
            left = A.Binary("||", left, self.parse_and(), line=t.line, col=t.col)
        return left

    def parse_and(self):
        left = self.parse_equality()
        while self.at("&&"):
            t = self.advance()
            left = A.Binary("&&", left, self.parse_equality(), line=t.line, col=t.col)
        return left

    def parse_equality(self):
        left = self.parse_comparison()
        while self.at("==") or self.at("!="):
            t = self.advance()
            left = A.Binary(t.text, left, self.parse_comparison(), line=t.line, col=t.col)
        return left

    def parse_comparison(self):
        left = self.parse_additive()
        while self.at("<") or self.at(">"):
            t = self.advance()
            left = A.Binary(t.text, left, self.parse_additive(), line=t.line, col=t.col)
        return left

    def parse_additive(self):
        left = self.parse_unary()
        while self.at("+") or self.at("-"):
            t = self.advance()
            left = A.Binary(t.text, left, self.parse_unary(), line=t.line, col=t.col)
        return left

    def parse_unary(self):
        if self.at("-"):
            t = self.advance()
            return A.Unary("-", self.parse_unary(), line=t.line, col=t.col)
        if self.at(":"):
            t = self.advance()
            return A.LeadingColon(self.parse_postfix(), line=t.line, col=t.col)
        return self.parse_postfix()

    def parse_postfix(self):
        expr = self.parse_primary()
        while self.at(".") and self.at_kind("identifier", 1):
            t = self.advance()
            name = self.advance().text
            if self.at("("):
                args = self.parse_args()
                expr = A.MethodCall(expr, name, args, line=t.line, col=t.col)
            else:
                expr = A.FieldAccess(expr, name, line=t.line, col=t.col)
        return expr

    def parse_args(self):
        self.expect("(")
        args = []
        while not self.at(")"):
            if args:
                self.expect(",")
            args.append(self.parse_expr())
        self.expect(")")
        return args

    def parse_primary(self):
        t = self.peek()
        if t is None:
            raise self.error("expected expression")
        if t.kind == "literal":
            self.advance()
            if t.text.startswith('"'):
                return A.Str(t.text[1:-1], line=t.line, col=t.col)
            return A.Num(float(t.text), line=t.line, col=t.col)
        if t.text == "true" or t.text == "false":
            self.advance()
            return A.Bool(t.text == "true", line=t.line, col=t.col)
        if t.text == "null":
            self.advance()
            return A.Null(line=t.line, col=t.col)
        if t.text == "this":
            self.advance()
            return A.This(line=t.line, col=t.col)
        if t.text == "super":
            self.advance()
            return A.Super(line=t.line, col=t.col)
        if t.text == "sub":
            self.advance()
            return A.Sub(line=t.line, col=t.col)
        if t.text == "new":
            self.advance()
            name = self.expect_ident("concept name after new")
            args = self.parse_args()
            return A.New(name, args, line=t.line, col=t.col)
        if t.text == "Root":
            self.advance()
            return A.Var("Root", line=t.line, col=t.col)
        if t.text == ".":
            # `.name(args)` — dual call of this object's method
            if self.at_kind("identifier", 1) and self.at("(", 2):
                self.advance()
                name = self.advance().text
                args = self.parse_args()
                return A.DualCall(name, args, line=t.line, col=t.col)
            raise self.error("expected object method call after '.'")
        if t.text == "(":
            self.advance()
            expr = self.parse_expr()
            self.expect(")")
            return expr
        if t.kind == "identifier":
            self.advance()
            if t.text in BUILTIN_NAMES and self.at("("):
                args = self.parse_args()
                return A.Builtin(t.text, args, line=t.line, col=t.col)
            if self.at("("):
                args = self.parse_args()
                return A.Call(t.text, args, line=t.line, col=t.col)
            return A.Var(t.text, line=t.line, col=t.col)
        raise self.error("expected expression")


def parse(tokens):
    """Parse a token list into a Program."""
    return Parser(tokens).parse_program()


def parse_source(source):
    return parse(tokenize(source))


def parse_expression(tokens):
    """Parse a token list as a single expression (REPL/testing helper)."""
    p = Parser(tokens)
    expr = p.parse_expr()
    if p.peek() is not None:
        raise p.error("trailing tokens after expression")
    return expr
