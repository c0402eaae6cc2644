"""Tokenization and term matching shared by classification, routing and queries.

One matching rule everywhere: a single-word term hits when it is a
case-folded substring of some token; a multi-word term hits when it is a
substring of the whitespace-normalized, case-folded text. Tokens are
split on whitespace/punctuation after case folding, keeping digits and
unit glyphs together ("23.5", "co2", "23°c" are single tokens).
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"\d+\.\d+[\w°%²]*|[\w°%²]+")

# number, or number immediately followed by a unit ("23", "23.5", "500ppm", "23°c")
QUANTITATIVE_TOKEN_RE = re.compile(r"^\d+(?:\.\d+)?[a-z°%²]*$")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.casefold())


def normalize(text: str) -> str:
    return " ".join(text.casefold().split())


def token_match(tokens: list[str], keyword: str) -> bool:
    kw = keyword.casefold()
    return any(kw in tok for tok in tokens)


def term_match(text: str, term: str, tokens: list[str] | None = None) -> bool:
    term = term.casefold()
    if " " in term:
        return term in normalize(text)
    if tokens is None:
        tokens = tokenize(text)
    return token_match(tokens, term)


def count_hits(text: str, tokens: list[str], terms: list[str]) -> int:
    """Number of token occurrences (or phrase occurrences) matching any term."""
    hits = 0
    norm = None
    for term in terms:
        term = term.casefold()
        if " " in term:
            if norm is None:
                norm = normalize(text)
            hits += norm.count(term)
        else:
            hits += sum(1 for tok in tokens if term in tok)
    return hits


def has_quantitative_token(tokens: list[str]) -> bool:
    return any(QUANTITATIVE_TOKEN_RE.match(tok) for tok in tokens)
