"""Minimal s-expression reader and writer for the knowledge-base format.

Atoms are symbols (bare identifiers, which may include ``_ - & . < >``),
double-quoted strings, and numbers.  Lists come back as ``Form`` (a ``list``
subclass carrying the source line/column), so callers can report errors
against the original text.  ``;`` starts a comment running to end of line.
"""

from __future__ import annotations

from typing import Iterator

SYMBOL_CHARS = set(
    "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789"
    "_-&.<>:!?+*/=%"
)


class SexprError(ValueError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class Quoted(str):
    """A string literal, as opposed to a bare symbol."""

    __slots__ = ()


class Form(list):
    """A parenthesized list annotated with its source position."""

    __slots__ = ("line", "col")

    def __init__(self, items=(), line: int = 0, col: int = 0) -> None:
        super().__init__(items)
        self.line = line
        self.col = col


Atom = str | int | float
Node = Atom | Form


def _tokens(text: str) -> Iterator[tuple[str, object, int, int]]:
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
        elif ch in " \t\r":
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, ch, line, col
            i += 1
            col += 1
        elif ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf: list[str] = []
            while True:
                if i >= n:
                    raise SexprError("unterminated string", start_line, start_col)
                c = text[i]
                if c == "\\":
                    if i + 1 >= n:
                        raise SexprError("dangling escape", line, col)
                    nxt = text[i + 1]
                    if nxt not in '"\\':
                        raise SexprError(f"bad escape \\{nxt}", line, col)
                    buf.append(nxt)
                    i += 2
                    col += 2
                elif c == '"':
                    i += 1
                    col += 1
                    break
                elif c == "\n":
                    buf.append(c)
                    i += 1
                    line += 1
                    col = 1
                else:
                    buf.append(c)
                    i += 1
                    col += 1
            yield "string", Quoted("".join(buf)), start_line, start_col
        elif ch in SYMBOL_CHARS:
            start_line, start_col = line, col
            j = i
            while j < n and text[j] in SYMBOL_CHARS:
                j += 1
            word = text[i:j]
            col += j - i
            i = j
            yield "atom", _atom(word), start_line, start_col
        else:
            raise SexprError(f"unexpected character {ch!r}", line, col)


def _atom(word: str) -> Atom:
    try:
        return int(word)
    except ValueError:
        pass
    try:
        return float(word)
    except ValueError:
        pass
    return word


def read_forms(text: str) -> list[Form]:
    """Parse a whole document into its top-level forms."""
    stack: list[Form] = []
    top: list[Form] = []
    for kind, value, line, col in _tokens(text):
        if kind == "(":
            form = Form(line=line, col=col)
            (stack[-1] if stack else top).append(form)  # type: ignore[arg-type]
            stack.append(form)
        elif kind == ")":
            if not stack:
                raise SexprError("unbalanced ')'", line, col)
            stack.pop()
        else:
            if not stack:
                raise SexprError("atom outside any form", line, col)
            stack[-1].append(value)
    if stack:
        raise SexprError("unclosed '('", stack[-1].line, stack[-1].col)
    return top


def write_node(node: Node) -> str:
    if isinstance(node, Form) or isinstance(node, list):
        return "(" + " ".join(write_node(x) for x in node) + ")"
    if isinstance(node, Quoted):
        escaped = node.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(node, bool):
        raise TypeError("booleans are not part of the grammar")
    if isinstance(node, (int, float, str)):
        return str(node) if not isinstance(node, float) else repr(node)
    raise TypeError(f"cannot serialize {type(node).__name__}")
