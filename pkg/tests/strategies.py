"""Hypothesis strategies built on the seeded term generator."""

import random

from hypothesis import strategies as st

from hopi.gen import BASE_DELTA, TermGen


@st.composite
def closed_processes(draw, max_depth=4, **kw):
    seed = draw(st.integers(0, 2**32 - 1))
    depth = draw(st.integers(1, max_depth))
    return TermGen(random.Random(seed), **kw).proc(depth)


@st.composite
def open_processes(draw, var="x", max_depth=4):
    """Processes with one free variable ``var`` of type ``ch<unit>``."""
    from hopi.gen import T_CU

    seed = draw(st.integers(0, 2**32 - 1))
    depth = draw(st.integers(1, max_depth))
    return TermGen(random.Random(seed)).proc(depth, vars_={var: T_CU})


def base_env():
    from hopi.typecheck import Env

    return Env.of(BASE_DELTA)
