import hypothesis
from hypothesis import strategies as st

from hypmix.freegroup import FreeContext, reduce_word

hypothesis.settings.register_profile(
    "suite", derandomize=True, max_examples=60, deadline=None
)
hypothesis.settings.load_profile("suite")

F2 = FreeContext(2)
F3 = FreeContext(3)


def letters(rank):
    out = []
    for i in range(1, rank + 1):
        out.extend((i, -i))
    return out


def words(rank=2, max_len=8):
    """Strategy for freely reduced words."""
    return st.lists(
        st.sampled_from(letters(rank)), min_size=0, max_size=max_len
    ).map(reduce_word)


def nontrivial_words(rank=2, max_len=8):
    return words(rank, max_len).filter(lambda w: len(w) > 0)
