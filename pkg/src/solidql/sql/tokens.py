"""Tokenizer for the SELECT dialect.

Produces a flat token list with byte offsets; keyword classification is
left to the parser so identifiers that happen to collide with soft
keywords keep working.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError

IDENT = "ident"
QIDENT = "qident"
NUMBER = "number"
STRING = "string"
OP = "op"
EOF = "eof"

_PUNCT = ("<>", "!=", ">=", "<=", "=", "<", ">", "(", ")", ",", ".", "+", "-", "*", "/", "%", ";")


@dataclass(frozen=True)
class Token:
    type: str
    text: str
    offset: int

    @property
    def lower(self) -> str:
        return self.text.lower()


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "-" and text.startswith("--", i):
            end = text.find("\n", i)
            i = n if end == -1 else end + 1
            continue
        if ch == "/" and text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end == -1:
                raise ParseError("unterminated block comment", i)
            i = end + 2
            continue
        if ch == "'":
            j = i + 1
            while j < n:
                if text[j] == "'":
                    if j + 1 < n and text[j + 1] == "'":
                        j += 2
                        continue
                    break
                j += 1
            if j >= n:
                raise ParseError("unterminated string literal", i)
            tokens.append(Token(STRING, text[i : j + 1], i))
            i = j + 1
            continue
        if ch in "\"`[":
            closing = {"\"": "\"", "`": "`", "[": "]"}[ch]
            j = text.find(closing, i + 1)
            if j == -1:
                raise ParseError("unterminated quoted identifier", i)
            tokens.append(Token(QIDENT, text[i : j + 1], i))
            i = j + 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(Token(NUMBER, text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token(IDENT, text[i:j], i))
            i = j
            continue
        for punct in _PUNCT:
            if text.startswith(punct, i):
                tokens.append(Token(OP, punct, i))
                i += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(Token(EOF, "", n))
    return tokens
