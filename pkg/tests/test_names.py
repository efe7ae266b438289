import pytest
from hypothesis import given
from hypothesis import strategies as st

from voicearm.names import directive_for_identifier, normalize_directive, sanitize_name


@pytest.mark.parametrize(
    "utterance, expected",
    [
        ("Move a little down.", "move_a_little_down"),
        ("full check", "full_check"),
        ("30cm to the left", "_30cm_to_the_left"),
        ("Give it to me.", "give_it_to_me"),
        ("What's missing?", "what_s_missing"),
        ("  spaced   out  ", "spaced_out"),
    ],
)
def test_sanitize_name_examples(utterance, expected):
    assert sanitize_name(utterance) == expected


def test_sanitize_name_rejects_empty():
    with pytest.raises(ValueError):
        sanitize_name("!!! ...")


@given(st.text(min_size=1, max_size=60))
def test_sanitize_name_yields_identifier(text):
    if not any(c.isascii() and c.isalnum() for c in text):
        return
    name = sanitize_name(text)
    assert name.isidentifier()
    assert name == sanitize_name(name)  # stable under re-application


def test_normalize_directive():
    assert normalize_directive("Move a little down.") == "move a little down"
    assert normalize_directive("Stop!") == "stop"
    assert normalize_directive("tell me the first law of robotics") == (
        "tell me the first law of robotics"
    )


def test_directive_for_identifier():
    assert directive_for_identifier("move_a_little_down") == "move a little down"
    assert directive_for_identifier("_30cm_to_the_left") == "30cm to the left"
