"""Lexicon configuration: the editable keyword lists behind rule classification,
pest detection, correlation keywording and keyword-stats stop filtering.

File format (UTF-8, line-oriented, ``#`` comments):
  - ``[priority]``        one subject name per line; must list all 6 exactly once
  - ``[subjects]``        ``Subject<TAB>keyword`` lines (also the default section)
  - ``[actions]``         action verbs, one per line
  - ``[considerations]``  consideration markers (phrases allowed)
  - ``[qualitative]``     qualitative descriptors
  - ``[pests]``           pest terms
  - ``[kinds]``           ``SensorKind<TAB>term`` correlation terms
  - ``[stopwords]``       tokens excluded from keyword stats
Keywords are case-folded on load; each subject keyword maps to exactly one subject.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ValidationError
from .model import SensorKind, Subject, parse_enum

_SECTIONS = ("priority", "subjects", "actions", "considerations", "qualitative", "pests", "kinds", "stopwords")


@dataclass
class Lexicon:
    subject_keywords: dict[Subject, list[str]] = field(default_factory=dict)
    priority: list[Subject] = field(default_factory=lambda: list(Subject))
    actions: list[str] = field(default_factory=list)
    considerations: list[str] = field(default_factory=list)
    qualitative: list[str] = field(default_factory=list)
    pests: list[str] = field(default_factory=list)
    kind_terms: dict[SensorKind, list[str]] = field(default_factory=dict)
    stopwords: set[str] = field(default_factory=set)

    def validate(self) -> "Lexicon":
        if sorted(s.value for s in self.priority) != sorted(s.value for s in Subject):
            raise ValidationError("priority must list every subject exactly once", "priority")
        seen: dict[str, Subject] = {}
        for subject, words in self.subject_keywords.items():
            for word in words:
                if word in seen and seen[word] is not subject:
                    raise ValidationError(
                        f"keyword {word!r} mapped to both {seen[word].value} and {subject.value}", "subjects"
                    )
                seen[word] = subject
        return self


def parse_lexicon(text: str, origin: str = "<lexicon>") -> Lexicon:
    lex = Lexicon(subject_keywords={s: [] for s in Subject}, priority=[], kind_terms={k: [] for k in SensorKind})
    section = "subjects"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in _SECTIONS:
                raise ValidationError(f"{origin}:{lineno}: unknown section {section!r}", "lexicon")
            continue
        if section == "priority":
            lex.priority.append(parse_enum(Subject, line.strip(), f"{origin}:{lineno}"))
        elif section == "subjects":
            if "\t" not in line:
                raise ValidationError(f"{origin}:{lineno}: expected Subject<TAB>keyword", "subjects")
            name, keyword = line.split("\t", 1)
            subject = parse_enum(Subject, name.strip(), f"{origin}:{lineno}")
            lex.subject_keywords[subject].append(keyword.strip().casefold())
        elif section == "kinds":
            if "\t" not in line:
                raise ValidationError(f"{origin}:{lineno}: expected SensorKind<TAB>term", "kinds")
            name, term = line.split("\t", 1)
            kind = parse_enum(SensorKind, name.strip(), f"{origin}:{lineno}")
            lex.kind_terms[kind].append(term.strip().casefold())
        elif section == "stopwords":
            lex.stopwords.add(line.strip().casefold())
        else:
            getattr(lex, section).append(line.strip().casefold())
    if not lex.priority:
        lex.priority = list(Subject)
    return lex.validate()


def load_lexicon(path: str | Path | None = None) -> Lexicon:
    """Load a lexicon file, or the packaged default when no path is given."""
    if path is None:
        text = resources.files("fieldlog").joinpath("data/lexicon.txt").read_text(encoding="utf-8")
        return parse_lexicon(text, "builtin")
    p = Path(path)
    return parse_lexicon(p.read_text(encoding="utf-8"), str(p))
