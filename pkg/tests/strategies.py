"""Hypothesis strategies over a small fixed universe of sites and functions."""

from __future__ import annotations

from hypothesis import strategies as st

from lambdaq.domain import (
    TOP, AbstractCallback, AbstractObject, AbstractQueueObject, AbstractState, AbstractValue,
    Position, ScheduledList, TimerSet,
)

SITES = ["s1", "s2", "s3", "s4"]
FNS = ["f", "g", "h"]
VARS = ["x", "y", "z"]
PROPS = ["p", "q"]
BOUND = 3

sites = st.sampled_from(SITES)
site_sets = st.frozensets(sites, max_size=3)

values = st.builds(
    AbstractValue,
    undef=st.booleans(),
    null=st.booleans(),
    bot=st.booleans(),
    bools=st.frozensets(st.booleans()),
    num=st.one_of(st.none(), st.just(TOP), st.sampled_from([0, 1, 2])),
    string=st.one_of(st.none(), st.just(TOP), st.sampled_from(["", "a"])),
    objs=site_sets,
    fns=st.frozensets(st.sampled_from(FNS), max_size=2),
    queues=site_sets,
)

small_values = st.one_of(
    st.just(AbstractValue(undef=True)),
    st.just(AbstractValue(num=1)),
    st.just(AbstractValue(bot=True)),
    st.builds(lambda s: AbstractValue(objs=frozenset({s})), sites),
)

callbacks = st.builds(
    AbstractCallback,
    fn=st.sampled_from(FNS),
    dep=sites,
    args=st.lists(small_values, max_size=1).map(tuple),
    registered_on=st.sampled_from(SITES + [""]),
)
callback_sets = st.frozensets(callbacks, max_size=3)

objects = st.dictionaries(st.sampled_from(PROPS), values, max_size=2).map(AbstractObject.of)


@st.composite
def queue_objects(draw):
    may_pending = draw(st.booleans())
    fulfilled = draw(st.one_of(st.none(), values))
    rejected = draw(st.one_of(st.none(), values))
    if not may_pending and fulfilled is None and rejected is None:
        may_pending = True
    return AbstractQueueObject(
        may_pending, fulfilled, rejected,
        draw(callback_sets), draw(callback_sets), draw(site_sets),
        draw(st.booleans()), draw(st.booleans()), draw(st.booleans()), draw(st.booleans()),
    )


positions = st.builds(Position, callback_sets, st.booleans(), st.booleans())


@st.composite
def scheduled_lists(draw, bound: int = BOUND):
    ps = draw(st.lists(positions, max_size=bound))
    over = draw(callback_sets) if len(ps) == bound or draw(st.booleans()) else frozenset()
    return ScheduledList(tuple(ps), over, bound)


@st.composite
def timer_sets(draw):
    cbs = draw(callback_sets)
    multi = draw(st.frozensets(st.sampled_from(sorted(cbs, key=AbstractCallback.sort_key)))) if cbs else frozenset()
    return TimerSet(cbs, multi)


chains = st.lists(site_sets, max_size=3).map(tuple)


@st.composite
def states(draw):
    return AbstractState(
        env=draw(st.dictionaries(st.sampled_from(VARS), values, max_size=3)),
        heap=draw(st.dictionaries(sites, objects, max_size=3)),
        queues=draw(st.dictionaries(sites, queue_objects(), max_size=4)),
        kappa=draw(scheduled_lists()),
        tau=draw(timer_sets()),
        chain=draw(chains),
    )
