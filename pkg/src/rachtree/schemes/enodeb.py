"""eNodeB side: MSG 2 grants, MSG 3 outcomes and TRAO scheduling."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from rachtree.config import FrameLayout, SchemeConfig, SystemConfig, derive_groups


@dataclass(slots=True)
class Grant:
    """One MSG 2: the detected preamble and the MSG 3 uplink RB it points to."""

    preamble: int
    opportunity: int  # subframe of the RAO/TRAO carrying the MSG 1
    msg3_subframe: int
    rb: int
    devices: list
    senders: list = field(default_factory=list)  # devices that decoded the MSG 2


@dataclass(slots=True)
class PendingGroup:
    """A collided MSG 3 awaiting its MSG 4b (tree mode only)."""

    preamble: int
    msg1_subframe: int
    msg3_subframe: int
    recipients: list
    due: int  # last subframe the MSG 4b can go out before the contention timer fires


class TraoSchedule:
    """TRAO subframes opened so far and the group indices each one carries.

    TRAOs are opened in increasing subframe order, so only the most recent
    one can still have free group indices.
    """

    def __init__(self, next_eligible: Callable[[int], int]):
        self.next_eligible = next_eligible
        self.groups: dict[int, list] = {}
        self.last: int | None = None
        self.history: list[int] = []

    def used(self, subframe: int) -> int:
        return len(self.groups.get(subframe, ()))

    def open_after(self, now: int) -> int:
        start = now + 1 if self.last is None else max(now + 1, self.last + 1)
        s = self.next_eligible(start)
        self.groups[s] = []
        self.last = s
        self.history.append(s)
        return s

    @property
    def opened(self) -> int:
        return len(self.history)

    def pop(self, subframe: int) -> list:
        return self.groups.pop(subframe, [])

    def __contains__(self, subframe):
        return subframe in self.groups


def eligible_from(subframes) -> Callable[[int], int]:
    """``next_eligible`` over an explicit ascending list of TRAO subframes."""
    ordered = sorted(subframes)

    def nxt(t):
        for s in ordered:
            if s >= t:
                return s
        raise ValueError(f"no TRAO subframe >= {t} in {ordered}")

    return nxt


def assign_traos(pending: deque, schedule: TraoSchedule, now: int, n_groups: int,
                 policy: str = "greedy", feedback_delay: int = 10) -> list:
    """Hand pending collided preambles, oldest first, to TRAOs.

    Each assignment takes the next free group index of the earliest TRAO at
    or after ``now + 1``. Under ``policy="deferred"`` a new TRAO that would
    start less than full is only opened when the previous TRAO's MSG 3
    feedback has already been processed, or when the oldest pending group is
    due; otherwise the groups stay in ``pending``.

    Returns ``[(pending_group, trao_subframe, group_index), ...]``.
    """
    out = []
    while pending:
        last = schedule.last
        if last is not None and last > now and schedule.used(last) < n_groups:
            s = last
        else:
            if policy == "deferred" and len(pending) < n_groups:
                idle = last is None or last + feedback_delay <= now
                if not idle and pending[0].due > now:
                    break
            s = schedule.open_after(now)
        item = pending.popleft()
        g = schedule.used(s)
        schedule.groups[s].append(item)
        out.append((item, s, g))
    return out


class EnodebState:
    def __init__(self, sys: SystemConfig, scheme: SchemeConfig, layout: FrameLayout):
        self.sys = sys
        self.scheme = scheme
        self.layout = layout
        self.overload_mode = False
        self.overload_subframe = -1
        self.pending_groups: deque = deque()
        self.trao_schedule = TraoSchedule(layout.next_trao) if scheme.is_tree else None
        self.preamble_groups = derive_groups(sys.n_preambles, scheme.split_factor) if scheme.is_tree else []
        self.n_groups = len(self.preamble_groups)
        self.msg3_reserved: dict[int, int] = {}

    def msg3_capacity(self, subframe: int) -> int:
        cap = self.sys.bandwidth_rbs - self.msg3_reserved.get(subframe, 0)
        if self.layout.is_rao(subframe) or (self.trao_schedule is not None and subframe in self.trao_schedule):
            cap -= self.sys.rao_rbs
        return cap

    def contention_due(self, msg1_subframe: int) -> int:
        return msg1_subframe + self.sys.contention_timer - 1


def enodeb_on_rao(enb: EnodebState, detected: dict, now: int) -> list[Grant]:
    """One MSG 2 per detected preamble, ascending preamble order.

    Each grant gets its own MSG 3 RB ``msg3_delay`` subframes later; if the
    subframe is out of RBs the grant spills into the next one.
    """
    grants = []
    target = now + enb.sys.msg3_delay
    for preamble in sorted(detected):
        while enb.msg3_capacity(target) < enb.sys.msg3_rbs:
            target += 1
        rb = enb.msg3_reserved.get(target, 0)
        enb.msg3_reserved[target] = rb + enb.sys.msg3_rbs
        grants.append(Grant(preamble, now, target, rb, detected[preamble]))
    return grants


def enodeb_on_msg3(enb: EnodebState, outcomes: list, now: int):
    """Classify MSG 3 receptions in one subframe.

    ``outcomes`` is ``[(grant, survivors), ...]`` where ``survivors`` are the
    senders whose MSG 3 was not lost. Returns ``(resolved, collided)``:
    devices decoded alone (they get a MSG 4) and, in tree mode, the
    :class:`PendingGroup` records owed a MSG 4b, ordered by the lowest
    device index in each collision. Outside tree mode collisions
    produce nothing; those devices wait out their contention timer.
    """
    enb.msg3_reserved.pop(now, None)
    resolved = []
    collisions = []
    for grant, survivors in outcomes:
        if len(survivors) == 1:
            resolved.append(survivors[0])
        elif len(survivors) > 1:
            collisions.append(grant)
    # MSG 4b go out in order of the lowest device index among the colliders
    collisions.sort(key=lambda g: (min(d.id for d in g.devices), g.preamble))
    if enb.scheme.is_tree and not enb.overload_mode and len(collisions) >= enb.scheme.trigger_threshold:
        enb.overload_mode = True
        enb.overload_subframe = now
    collided = []
    if enb.overload_mode:
        for grant in collisions:
            collided.append(PendingGroup(grant.preamble, grant.opportunity, now,
                                         list(grant.senders), enb.contention_due(grant.opportunity)))
    return resolved, collided
