"""Link-label normalization: case folding, stopword elimination, stemming.

Edge labels arrive as free anchor text ("The Brew House", "Coffee Shops...")
and become program variables, so every consumer of a label must agree on one
canonical spelling. Normalization is deterministic and idempotent; the same
function also canonicalizes user-supplied variable names and query tokens.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

# Marker used by sites that truncate long anchor texts and continue them on
# the target page.
CONTINUATION_MARKER = "..."

# Suffix rules applied in order; first match wins. Deliberately tiny so the
# behavior stays auditable. ("ers", "ing") turns agent nouns into activity
# nouns (hikers -> hiking); the plural strip is guarded below.
SUFFIX_RULES: tuple[tuple[str, str], ...] = (
    ("ers", "ing"),
    ("ies", "y"),
    ("s", ""),
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


class NormalizationConfigError(ValueError):
    """Raised when a normalization config cannot guarantee idempotence."""


def _stem_token(token: str, overrides: Mapping[str, str]) -> str:
    if token in overrides:
        return overrides[token]
    for suffix, replacement in SUFFIX_RULES:
        if not token.endswith(suffix):
            continue
        if suffix == "s" and (len(token) < 4 or token.endswith("ss")):
            continue
        if suffix == "ers" and len(token) < 5:
            continue
        return token[: -len(suffix)] + replacement
    return token


@dataclass(frozen=True)
class NormalizationConfig:
    """Settings for normalize_label; applying the result twice is a no-op."""

    stopwords: frozenset[str] = frozenset()
    stemming: bool = False
    case_fold: bool = True
    continuations: Mapping[str, str] = field(default_factory=dict)
    stem_overrides: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        folded = frozenset(
            w.lower() if self.case_fold else w for w in self.stopwords
        )
        object.__setattr__(self, "stopwords", folded)
        for raw, stemmed in self.stem_overrides.items():
            bad = (
                _stem_token(stemmed, self.stem_overrides) != stemmed
                or _TOKEN_RE.fullmatch(stemmed) is None
                or (self.case_fold and stemmed != stemmed.lower())
            )
            if bad:
                raise NormalizationConfigError(
                    f"stem override {raw!r} -> {stemmed!r} is not a normal-form "
                    "fixed point; normalization would not be idempotent"
                )

    @classmethod
    def from_json(cls, obj: Mapping) -> "NormalizationConfig":
        return cls(
            stopwords=frozenset(obj.get("stopwords", ())),
            stemming=bool(obj.get("stemming", False)),
            case_fold=bool(obj.get("case_fold", True)),
            continuations=dict(obj.get("continuations", {})),
            stem_overrides=dict(obj.get("stem_overrides", {})),
        )

    @classmethod
    def load(cls, path) -> "NormalizationConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


DEFAULT_CONFIG = NormalizationConfig()


def normalize_label(raw: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    """Canonicalize anchor text into a guard variable name.

    Lowercases (when case_fold), tokenizes on non-word runs, drops stopwords,
    stems (when enabled), and joins with single underscores. May return "";
    callers decide whether an empty label is an error.
    """
    text = raw.strip()
    if config.case_fold:
        text = text.lower()
    out = []
    for token in _TOKEN_RE.findall(text):
        if token in config.stopwords:
            continue
        if config.stemming:
            token = _stem_token(token, config.stem_overrides)
        if token in config.stopwords:
            # A stemmed form may land on a stopword; drop it so a second
            # normalization pass sees the same token stream.
            continue
        if token:
            out.append(token)
    return "_".join(out)


def resolve_continuation(raw: str, config: NormalizationConfig) -> tuple[str, bool]:
    """Replace a truncated label with its configured continuation.

    Returns (label, resolved). Unresolved truncations keep the marker so
    validation can flag them.
    """
    if not raw.rstrip().endswith(CONTINUATION_MARKER):
        return raw, True
    stripped = raw.rstrip()
    for key in (stripped, stripped[: -len(CONTINUATION_MARKER)].rstrip()):
        if key in config.continuations:
            return config.continuations[key], True
    return raw, False


def tokenize_query(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> list[str]:
    """Split free text into normalized single-token variables.

    Each word is normalized independently ("Coffee Shops" -> ["coffee",
    "shop"]); words that normalize away (stopwords) are dropped.
    """
    seen = []
    for word in _TOKEN_RE.findall(text):
        var = normalize_label(word, config)
        if var and var not in seen:
            seen.append(var)
    return seen


def normalize_variables(names: Iterable[str], config: NormalizationConfig) -> dict[str, str]:
    """Map raw variable spellings to their normalized forms (for CLI input)."""
    return {name: normalize_label(name, config) for name in names}
