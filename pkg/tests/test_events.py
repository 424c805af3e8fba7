from hypothesis import given, strategies as st

from rachtree.engine.events import EventKind, EventQueue


def test_fifo_within_subframe():
    q = EventQueue()
    q.push(5, EventKind.FEEDBACK, "a")
    q.push(3, EventKind.RAO_OCCURS, "b")
    q.push(5, EventKind.RAO_OCCURS, "c")
    assert q.peek().payload == "b"
    assert [q.pop().payload for _ in range(3)] == ["b", "a", "c"]
    assert not q and q.peek() is None


@given(st.lists(st.integers(0, 50), max_size=200))
def test_pops_are_time_ordered_and_stable(times):
    q = EventQueue()
    for i, t in enumerate(times):
        q.push(t, EventKind.SCHEDULER_WAKEUP, i)
    out = [q.pop() for _ in range(len(q))]
    assert [(e.subframe, e.payload) for e in out] == sorted((t, i) for i, t in enumerate(times))
