"""Identifier and phrase normalization shared across the pipeline."""

import re

_NON_ALNUM = re.compile(r"[^a-z0-9]+")


def sanitize_name(utterance: str) -> str:
    """Turn an utterance into a function identifier.

    Lowercases, collapses every run of non-alphanumeric characters into a
    single underscore, trims edge underscores and prefixes an underscore
    when the result would start with a digit.
    """
    lowered = utterance.lower()
    collapsed = _NON_ALNUM.sub("_", lowered).strip("_")
    if not collapsed:
        raise ValueError("utterance has no alphanumeric content: %r" % utterance)
    if collapsed[0].isdigit():
        collapsed = "_" + collapsed
    return collapsed


def normalize_directive(utterance: str) -> str:
    """Normalize an utterance for the generation directive line.

    The directive keeps the words as spoken but lowercased and with
    trailing punctuation removed, e.g. "Move a little down." becomes
    "move a little down".
    """
    return utterance.strip().rstrip(".!?,;: ").lower()


def directive_for_identifier(name: str) -> str:
    """Directive text used when asking for a definition of a bare identifier."""
    return name.replace("_", " ").strip()
