"""Event loop for one synchronous-arrival scenario.

All devices activate in subframe 0. Relative to an access opportunity
(RAO or TRAO) in subframe t, with 3 ms processing:

    MSG 1 at t, MSG 2 at t+3, MSG 3 at t+7, MSG 4 / MSG 4b at t+10,
    earliest TRAO for the collided groups at t+11.

A device is resolved when its MSG 3 is decoded alone; the resolution time is
the MSG 3 subframe.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from rachtree.config import ContentionGroup, FrameLayout, SchemeConfig, SystemConfig, validate_config
from rachtree.engine.events import EventKind, EventQueue
from rachtree.engine.rng import RngStream
from rachtree.errors import NonTermination
from rachtree.msg4b import MSG4B_FIELD_WIDTHS
from rachtree.schemes.device import (
    BACKOFF,
    DeviceState,
    Phase,
    SEND_MSG3,
    Stimulus,
    WAIT_TRAO,
    device_step,
)
from rachtree.schemes.enodeb import (
    EnodebState,
    assign_traos,
    enodeb_on_msg3,
    enodeb_on_rao,
)

DEFAULT_HORIZON = 10**7
_TRAO_OFFSET_LIMIT = 1 << MSG4B_FIELD_WIDTHS["trao_offset"]


@dataclass
class DeviceRecord:
    id: int
    resolved: bool
    tx_count: int
    activation_subframe: int
    resolution_subframe: int  # -1 unless resolved
    outage_subframe: int  # -1 unless in outage
    resolved_opportunity: int  # subframe of the MSG 1 that led to resolution
    resolved_in_trao: bool


@dataclass
class RunTrace:
    scheme: str
    split_factor: int | None
    n_devices: int
    seed: int
    devices: list = field(default_factory=list)
    ul_rbs: dict = field(default_factory=dict)  # subframe -> uplink RBs used
    dl_bits: dict = field(default_factory=dict)  # subframe -> downlink bits sent
    rao_subframes: list = field(default_factory=list)  # RAOs that carried MSG 1s
    trao_subframes: list = field(default_factory=list)  # TRAOs opened
    msg2_sent: int = 0
    msg4_sent: int = 0
    msg4b_sent: int = 0
    msg3_granted: int = 0
    msg4b_offset_overflows: int = 0  # MSG 4b whose TRAO offset exceeds its 7-bit field
    overload_subframe: int = -1
    end_subframe: int = -1  # last resolution/outage subframe

    @property
    def trao_count(self) -> int:
        return len(self.trao_subframes)

    @property
    def resolved_count(self) -> int:
        return sum(d.resolved for d in self.devices)

    @property
    def outage_count(self) -> int:
        return sum(not d.resolved for d in self.devices)

    def canonical(self) -> str:
        """Stable text rendering, used for determinism checks."""
        lines = [f"{self.scheme} q={self.split_factor} n={self.n_devices} seed={self.seed}"]
        for d in self.devices:
            lines.append(f"d {d.id} {int(d.resolved)} {d.tx_count} {d.activation_subframe} "
                         f"{d.resolution_subframe} {d.outage_subframe} {d.resolved_opportunity} "
                         f"{int(d.resolved_in_trao)}")
        lines.append("ul " + " ".join(f"{k}:{v}" for k, v in sorted(self.ul_rbs.items())))
        lines.append("dl " + " ".join(f"{k}:{v}" for k, v in sorted(self.dl_bits.items())))
        lines.append("rao " + " ".join(map(str, self.rao_subframes)))
        lines.append("trao " + " ".join(map(str, self.trao_subframes)))
        lines.append(f"msgs {self.msg2_sent} {self.msg3_granted} {self.msg4_sent} {self.msg4b_sent} "
                     f"{self.msg4b_offset_overflows} {self.overload_subframe} {self.end_subframe}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def scripted_chooser(script: dict) -> Callable:
    """Chooser replaying per-device preamble picks.

    ``script`` maps device id to a sequence of positions within the offered
    preamble set, consumed one per MSG 1. Devices without a remaining entry
    fall back to the uniform draw.
    """
    queues = {dev: deque(picks) for dev, picks in script.items()}

    def choose(dev, candidates, rng):
        q = queues.get(dev.id)
        if q:
            return candidates[q.popleft()]
        return candidates[rng.preamble.randrange(len(candidates))]

    return choose


class Simulation:
    def __init__(self, sys: SystemConfig, scheme: SchemeConfig, n_devices: int, seed: int,
                 horizon: int = DEFAULT_HORIZON, chooser: Callable | None = None):
        validate_config(sys, scheme)
        if n_devices < 0:
            raise ValueError("n_devices must be >= 0")
        self.sys = sys
        self.scheme = scheme
        self.n = n_devices
        self.seed = seed
        self.horizon = horizon
        self.chooser = chooser
        self.rng = RngStream(seed)
        self.layout = FrameLayout(sys, scheme)
        self.enb = EnodebState(sys, scheme, self.layout)
        self.queue = EventQueue()
        self.devices = [DeviceState(i) for i in range(n_devices)]
        self.waiting_rao: dict[int, list] = {}
        self.msg3_batches: dict[int, list] = {}
        self.feedback_batches: dict[int, list] = {}
        self.wakeups: set = set()
        self.all_preambles = tuple(range(sys.n_preambles))
        self.trace = RunTrace(scheme.scheme.value, scheme.split_factor if scheme.is_tree else None,
                              n_devices, seed)
        self.finished = 0
        self.last_finish = -1
        # loss probability and the bare generator, hoisted for the hot loop
        p = sys.p_error
        self._p = p
        self._lossy = 0.0 < p
        self._always_lost = p >= 1.0
        self._loss = self.rng.loss.random

    # -- helpers ------------------------------------------------------------

    def lost(self) -> bool:
        if not self._lossy:
            return False
        if self._always_lost:
            return True
        return self._loss() < self._p

    def _ul(self, subframe: int, rbs: int):
        ul = self.trace.ul_rbs
        ul[subframe] = ul.get(subframe, 0) + rbs

    def _dl(self, subframe: int, bits: int):
        dl = self.trace.dl_bits
        dl[subframe] = dl.get(subframe, 0) + bits

    def _step(self, dev, stimulus, now, **kw):
        return device_step(dev, stimulus, now=now, rng=self.rng,
                           max_tx=self.sys.max_transmissions,
                           backoff_max=self.sys.backoff_max, **kw)

    def _finish(self, dev, now):
        self.finished += 1
        if now > self.last_finish:
            self.last_finish = now

    def _join_rao(self, dev, t: int):
        s = self.layout.next_rao(t)
        lst = self.waiting_rao.get(s)
        if lst is None:
            self.waiting_rao[s] = [dev]
            self.queue.push(s, EventKind.RAO_OCCURS)
        else:
            lst.append(dev)

    def _fail(self, dev, stimulus, now):
        action, backoff = self._step(dev, stimulus, now)
        if action is BACKOFF:
            self.queue.push(now + backoff, EventKind.BACKOFF_EXPIRES, (dev, dev.tx_count))
        else:
            self._finish(dev, now)

    # -- handlers -----------------------------------------------------------

    def on_activation(self, now, devices):
        for dev in devices:
            self._step(dev, Stimulus.ACTIVATION, now)
            self._join_rao(dev, now)

    def on_rao(self, now, _payload):
        contenders = self.waiting_rao.pop(now)
        activations: dict[int, list] = {}
        cands = self.all_preambles
        for dev in contenders:
            _, preamble = self._step(dev, Stimulus.ACCESS_OPPORTUNITY, now,
                                     candidates=cands, chooser=self.chooser)
            lst = activations.get(preamble)
            if lst is None:
                activations[preamble] = [dev]
            else:
                lst.append(dev)
        self._ul(now, self.sys.rao_rbs)
        self.trace.rao_subframes.append(now)
        self._contention(now, activations)

    def on_trao(self, now, _payload):
        slots = self.enb.trao_schedule.pop(now)
        self._ul(now, self.sys.rao_rbs)
        activations: dict[int, list] = {}
        for slot in slots:
            cands = slot.preamble_set
            for dev in slot.members:
                _, preamble = self._step(dev, Stimulus.ACCESS_OPPORTUNITY, now, candidates=cands,
                                         chooser=self.chooser, trao=True)
                lst = activations.get(preamble)
                if lst is None:
                    activations[preamble] = [dev]
                else:
                    lst.append(dev)
        self._contention(now, activations)

    def _contention(self, now, activations):
        # a preamble is detected unless its sole sender's MSG 1 is lost
        detected = {}
        deadline = now + self.sys.msg2_deadline
        for preamble, devs in activations.items():
            if len(devs) == 1 and self.lost():
                self.queue.push(deadline, EventKind.MSG2_DEADLINE, (devs[0], devs[0].tx_count))
            else:
                detected[preamble] = devs
        if not detected:
            return
        grants = enodeb_on_rao(self.enb, detected, now)
        t2 = now + self.sys.msg2_delay
        self._dl(t2, self.sys.msg2_bits * len(grants))
        self.trace.msg2_sent += len(grants)
        self.trace.msg3_granted += len(grants)
        for g in grants:
            self._ul(g.msg3_subframe, self.sys.msg3_rbs)
        self.queue.push(t2, EventKind.MSG2_TX, grants)

    def on_msg2(self, now, grants):
        deadline_delay = self.sys.msg2_deadline
        for g in grants:
            for dev in g.devices:
                if self.lost():
                    self.queue.push(dev.last_msg1_subframe + deadline_delay, EventKind.MSG2_DEADLINE,
                                    (dev, dev.tx_count))
                else:
                    self._step(dev, Stimulus.MSG2, now)
                    g.senders.append(dev)
            if g.senders:
                batch = self.msg3_batches.get(g.msg3_subframe)
                if batch is None:
                    self.msg3_batches[g.msg3_subframe] = [g]
                    self.queue.push(g.msg3_subframe, EventKind.MSG3_TX)
                else:
                    batch.append(g)

    def on_msg3(self, now, _payload):
        grants = self.msg3_batches.pop(now)
        outcomes = []
        timers = []
        for g in grants:
            for dev in g.senders:
                dev.last_msg3_subframe = now
            if self._lossy:
                survivors = []
                for dev in g.senders:
                    if self.lost():
                        timers.append(dev)
                    else:
                        survivors.append(dev)
            else:
                survivors = g.senders
            outcomes.append((g, survivors))
        resolved, collided = enodeb_on_msg3(self.enb, outcomes, now)
        for dev in resolved:
            self._step(dev, Stimulus.MSG3_RECEIVED, now)
            self._finish(dev, now)
        if self.enb.overload_mode:
            # lost senders of a collided MSG 3 still hear the MSG 4b for their preamble
            in_tree = {id(d) for pg in collided for d in pg.recipients}
            timers = [d for d in timers if id(d) not in in_tree]
        else:
            for g, survivors in outcomes:
                if len(survivors) > 1:
                    timers.extend(survivors)
        crt = self.sys.contention_timer
        for dev in timers:
            if dev.phase is Phase.AWAITING_MSG4:
                self.queue.push(dev.last_msg1_subframe + crt, EventKind.MSG4_DEADLINE, (dev, dev.tx_count))
        if resolved or collided:
            f = now + self.sys.processing_delay
            batch = self.feedback_batches.get(f)
            if batch is None:
                self.feedback_batches[f] = batch = [0, []]
                self.queue.push(f, EventKind.FEEDBACK)
            batch[0] += len(resolved)
            batch[1].extend(collided)

    def on_feedback(self, now, _payload):
        n_msg4, collided = self.feedback_batches.pop(now)
        if n_msg4:
            self._dl(now, self.sys.msg4_bits * n_msg4)
            self.trace.msg4_sent += n_msg4
        if collided:
            self.enb.pending_groups.extend(collided)
        self._schedule_groups(now)

    def on_wakeup(self, now, _payload):
        self.wakeups.discard(now)
        self._schedule_groups(now)

    def _schedule_groups(self, now):
        enb = self.enb
        if not enb.pending_groups:
            return
        sched = enb.trao_schedule
        fb = self.sys.feedback_delay
        before = sched.opened
        assignments = assign_traos(enb.pending_groups, sched, now, enb.n_groups,
                                   policy=self.scheme.trao_packing, feedback_delay=fb)
        for s in sched.history[before:]:
            self.queue.push(s, EventKind.TRAO_OCCURS)
            self.trace.trao_subframes.append(s)
        if assignments:
            self._send_msg4b(now, assignments)
        if enb.pending_groups:
            wake = min(enb.pending_groups[0].due, sched.last + fb if sched.last is not None else now + 1)
            wake = max(wake, now + 1)
            if wake not in self.wakeups:
                self.wakeups.add(wake)
                self.queue.push(wake, EventKind.SCHEDULER_WAKEUP)

    def _send_msg4b(self, now, assignments):
        groups = self.enb.preamble_groups
        crt = self.sys.contention_timer
        self._dl(now, self.sys.msg4b_bits * len(assignments))
        self.trace.msg4b_sent += len(assignments)
        # every slot list entry becomes the group record the members will contend in
        for pending, s, g in assignments:
            if s - now >= _TRAO_OFFSET_LIMIT:
                self.trace.msg4b_offset_overflows += 1
            slot_list = self.enb.trao_schedule.groups[s]
            slot = ContentionGroup(g, groups[g], s, [])
            slot_list[g] = slot
            for dev in pending.recipients:
                if dev.phase is not Phase.AWAITING_MSG4:
                    continue
                if self.lost():
                    self.queue.push(max(dev.last_msg1_subframe + crt, now + 1), EventKind.MSG4_DEADLINE,
                                    (dev, dev.tx_count))
                    continue
                action, _ = self._step(dev, Stimulus.MSG4B, now, group=slot)
                if action is WAIT_TRAO:
                    slot.members.append(dev)
                else:
                    self._finish(dev, now)

    def on_msg2_deadline(self, now, payload):
        dev, tx = payload
        if dev.phase is Phase.AWAITING_MSG2 and dev.tx_count == tx:
            self._fail(dev, Stimulus.MSG2_TIMEOUT, now)

    def on_msg4_deadline(self, now, payload):
        dev, tx = payload
        if dev.phase is Phase.AWAITING_MSG4 and dev.tx_count == tx:
            self._fail(dev, Stimulus.CONTENTION_TIMEOUT, now)

    def on_backoff(self, now, payload):
        dev, _tx = payload
        self._step(dev, Stimulus.BACKOFF_EXPIRY, now)
        self._join_rao(dev, now)

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunTrace:
        handlers = {
            EventKind.DEVICE_ACTIVATION: self.on_activation,
            EventKind.RAO_OCCURS: self.on_rao,
            EventKind.TRAO_OCCURS: self.on_trao,
            EventKind.MSG2_TX: self.on_msg2,
            EventKind.MSG2_DEADLINE: self.on_msg2_deadline,
            EventKind.MSG3_TX: self.on_msg3,
            EventKind.FEEDBACK: self.on_feedback,
            EventKind.MSG4_DEADLINE: self.on_msg4_deadline,
            EventKind.BACKOFF_EXPIRES: self.on_backoff,
            EventKind.SCHEDULER_WAKEUP: self.on_wakeup,
        }
        if self.n:
            self.queue.push(0, EventKind.DEVICE_ACTIVATION, self.devices)
        queue = self.queue
        horizon = self.horizon
        while queue:
            ev = queue.pop()
            if ev.subframe > horizon:
                raise NonTermination(f"simulated time passed the horizon of {horizon} subframes")
            handlers[ev.kind](ev.subframe, ev.payload)
        if self.finished != self.n:
            raise RuntimeError(f"event queue drained with {self.n - self.finished} devices unfinished")
        return self._build_trace()

    def _build_trace(self) -> RunTrace:
        tr = self.trace
        for d in self.devices:
            resolved = d.phase is Phase.RESOLVED
            tr.devices.append(DeviceRecord(
                d.id, resolved, d.tx_count, d.activation_subframe,
                d.resolution_subframe if resolved else -1,
                d.outage_subframe if not resolved else -1,
                d.resolved_opportunity if resolved else -1,
                resolved and d.via_trao,
            ))
        tr.overload_subframe = self.enb.overload_subframe
        tr.end_subframe = self.last_finish
        return tr


def run_scenario(sys: SystemConfig, scheme: SchemeConfig, n_devices: int, seed: int, *,
                 horizon: int = DEFAULT_HORIZON, chooser: Callable | None = None) -> RunTrace:
    """Simulate ``n_devices`` synchronous arrivals at subframe 0 until every
    device is resolved or in outage."""
    return Simulation(sys, scheme, n_devices, seed, horizon=horizon, chooser=chooser).run()
