"""Lexical layer shared by the vocabulary and the NL frontend.

Tokenization is whitespace/punctuation based. Stemming is a fixed
suffix-stripping rule list applied in order — "ies"->"y", "es"->"",
"s"->"", "ing"->"", "ed"->"" — where only the first rule whose result
keeps at least 3 characters fires. The same pipeline normalizes both
question tokens and vocabulary terms, so matching is plain stem
equality, never fuzzy.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources

_TOKEN_RE = re.compile(r"[A-Za-z0-9_']+")
_STEM_RULES = (("ies", "y"), ("es", ""), ("s", ""), ("ing", ""), ("ed", ""))
_MIN_STEM_LENGTH = 3


def stem(word: str) -> str:
    """Apply the first suffix rule that leaves a stem of length >= 3."""
    for suffix, replacement in _STEM_RULES:
        if word.endswith(suffix):
            candidate = word[: len(word) - len(suffix)] + replacement
            if len(candidate) >= _MIN_STEM_LENGTH:
                return candidate
    return word


def normalize_term(term: str) -> str:
    """Lowercase + stem a single vocabulary term."""
    return stem(term.strip().lower())


@dataclass(frozen=True)
class Token:
    surface: str
    normalized: str
    stem: str
    is_stopword: bool


@dataclass(frozen=True)
class TokenStream:
    tokens: tuple[Token, ...]

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def content_tokens(self) -> list[Token]:
        """Tokens that count toward match scoring (non-stopwords)."""
        return [t for t in self.tokens if not t.is_stopword]


class NlConfig:
    """Stopwords, grouping markers, aggregate keywords, and score weights.

    Loaded from the bundled nl_config.json; pass a dict to override any
    field. Function words (grouping markers, aggregate keywords) are
    folded into the stopword set: they steer interpretation but are not
    expected to match schema terms, so they must not dilute the score.
    """

    def __init__(self, overrides: dict | None = None):
        doc = json.loads(
            resources.files("dataplore.data").joinpath("nl_config.json").read_text("utf-8")
        )
        if overrides:
            doc.update(overrides)
        self.stopwords = frozenset(doc["stopwords"])
        self.group_markers = frozenset(doc["group_markers"])
        self.aggregate_keywords = dict(doc["aggregate_keywords"])
        self.match_weight = float(doc["score_weights"]["match"])
        self.join_weight = float(doc["score_weights"]["join"])
        self.max_combinations = int(doc.get("max_combinations", 200))
        self._stop_all = (
            self.stopwords | self.group_markers | frozenset(self.aggregate_keywords)
        )

    def is_stopword(self, normalized: str, stemmed: str) -> bool:
        return normalized in self._stop_all or stemmed in self._stop_all


_DEFAULT_CONFIG: NlConfig | None = None


def default_config() -> NlConfig:
    global _DEFAULT_CONFIG
    if _DEFAULT_CONFIG is None:
        _DEFAULT_CONFIG = NlConfig()
    return _DEFAULT_CONFIG


def normalize(question: str, config: NlConfig | None = None) -> TokenStream:
    """Tokenize and normalize a question; empty input yields an empty stream."""
    config = config or default_config()
    tokens = []
    for match in _TOKEN_RE.finditer(question):
        surface = match.group(0)
        normalized = surface.lower().strip("'")
        if not normalized:
            continue
        stemmed = stem(normalized)
        tokens.append(
            Token(
                surface=surface,
                normalized=normalized,
                stem=stemmed,
                is_stopword=config.is_stopword(normalized, stemmed),
            )
        )
    return TokenStream(tuple(tokens))
