"""Hypothesis strategies shared by the property tests."""

from hypothesis import strategies as st

from hybridfabric.keys import EventTypeKey

TOKEN_ALPHABET = st.characters(
    blacklist_categories=("Cs", "Zs", "Cc"),
    blacklist_characters=".*>:",
)
tokens = st.text(TOKEN_ALPHABET, min_size=1, max_size=8)

keys = st.builds(
    EventTypeKey,
    tokens,
    tokens,
    tokens,
    tokens,
    st.lists(tokens, max_size=4).map(tuple),
)

SMALL = ("a", "b", "c")
small_subjects = st.lists(st.sampled_from(SMALL), min_size=1, max_size=6)


@st.composite
def small_patterns(draw):
    body = draw(st.lists(st.sampled_from((*SMALL, "*")), min_size=0, max_size=6))
    if draw(st.booleans()) or not body:
        body = [*body[:5], ">"]
    return body
