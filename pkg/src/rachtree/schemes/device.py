"""Device-side random access state machine."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from rachtree.engine.rng import RngStream, backoff_draw
from rachtree.errors import IllegalTransition


class Phase(enum.Enum):
    IDLE = "idle"
    AWAITING_MSG2 = "awaiting_msg2"
    AWAITING_MSG4 = "awaiting_msg4"
    BACKED_OFF = "backed_off"
    IN_TREE = "in_tree"
    RESOLVED = "resolved"
    OUTAGE = "outage"


class Stimulus(enum.Enum):
    ACTIVATION = "activation"
    ACCESS_OPPORTUNITY = "access_opportunity"  # a RAO, or the device's TRAO
    MSG2 = "msg2"
    MSG2_TIMEOUT = "msg2_timeout"
    MSG3_RECEIVED = "msg3_received"  # eNodeB decoded our MSG 3 alone
    MSG4B = "msg4b"
    CONTENTION_TIMEOUT = "contention_timeout"
    BACKOFF_EXPIRY = "backoff_expiry"


# outbound actions returned by device_step
WAIT_RAO = "wait_rao"
SEND_MSG1 = "send_msg1"
SEND_MSG3 = "send_msg3"
BACKOFF = "backoff"
WAIT_TRAO = "wait_trao"
DONE = "done"


@dataclass(slots=True)
class DeviceState:
    id: int
    phase: Phase = Phase.IDLE
    tx_count: int = 0
    last_msg1_subframe: int = -1
    last_msg3_subframe: int = -1
    activation_subframe: int = 0
    resolution_subframe: int = -1
    outage_subframe: int = -1
    chosen_preamble: int = -1
    # tree bookkeeping: assigned group, and whether the last MSG 1 went out in a TRAO
    group: object = None
    via_trao: bool = False
    resolved_opportunity: int = -1

    @property
    def finished(self) -> bool:
        return self.phase is Phase.RESOLVED or self.phase is Phase.OUTAGE


def _expect(dev: DeviceState, stimulus: Stimulus, *phases: Phase):
    if dev.phase not in phases:
        raise IllegalTransition(f"device {dev.id}: {stimulus.value} while {dev.phase.value}")


def _fail_attempt(dev: DeviceState, now: int, max_tx: int, rng: RngStream, backoff_max: int):
    if dev.tx_count >= max_tx:
        dev.phase = Phase.OUTAGE
        dev.outage_subframe = now
        return DONE, None
    dev.phase = Phase.BACKED_OFF
    dev.group = None
    return BACKOFF, backoff_draw(rng, backoff_max)


def device_step(dev: DeviceState, stimulus: Stimulus, *, now: int, rng: RngStream,
                max_tx: int = 10, backoff_max: int = 20, candidates=None,
                chooser=None, group=None, trao: bool = False):
    """Advance one device and return ``(action, argument)``.

    ``candidates`` is the preamble set offered at an access opportunity (all
    N_P preambles at a RAO, the group's q preambles at a TRAO). ``chooser``
    overrides the uniform draw, e.g. to replay a scripted scenario.
    """
    if stimulus is Stimulus.ACCESS_OPPORTUNITY:
        if trao:
            _expect(dev, stimulus, Phase.IN_TREE)
        else:
            _expect(dev, stimulus, Phase.IDLE, Phase.BACKED_OFF)
        if dev.tx_count >= max_tx:
            raise IllegalTransition(f"device {dev.id}: MSG 1 beyond the limit of {max_tx}")
        if chooser is None:
            preamble = candidates[rng.preamble.randrange(len(candidates))]
        else:
            preamble = chooser(dev, candidates, rng)
        dev.tx_count += 1
        dev.last_msg1_subframe = now
        dev.chosen_preamble = preamble
        dev.via_trao = trao
        dev.group = None
        dev.phase = Phase.AWAITING_MSG2
        return SEND_MSG1, preamble

    if stimulus is Stimulus.MSG2:
        _expect(dev, stimulus, Phase.AWAITING_MSG2)
        dev.phase = Phase.AWAITING_MSG4
        return SEND_MSG3, None

    if stimulus is Stimulus.MSG3_RECEIVED:
        _expect(dev, stimulus, Phase.AWAITING_MSG4)
        dev.phase = Phase.RESOLVED
        dev.resolution_subframe = now
        dev.resolved_opportunity = dev.last_msg1_subframe
        return DONE, None

    if stimulus is Stimulus.MSG4B:
        _expect(dev, stimulus, Phase.AWAITING_MSG4)
        if dev.tx_count >= max_tx:
            dev.phase = Phase.OUTAGE
            dev.outage_subframe = now
            return DONE, None
        dev.phase = Phase.IN_TREE
        dev.group = group
        return WAIT_TRAO, group

    if stimulus is Stimulus.MSG2_TIMEOUT:
        _expect(dev, stimulus, Phase.AWAITING_MSG2)
        return _fail_attempt(dev, now, max_tx, rng, backoff_max)

    if stimulus is Stimulus.CONTENTION_TIMEOUT:
        _expect(dev, stimulus, Phase.AWAITING_MSG4)
        return _fail_attempt(dev, now, max_tx, rng, backoff_max)

    if stimulus is Stimulus.BACKOFF_EXPIRY:
        _expect(dev, stimulus, Phase.BACKED_OFF)
        return WAIT_RAO, None

    if stimulus is Stimulus.ACTIVATION:
        _expect(dev, stimulus, Phase.IDLE)
        dev.activation_subframe = now
        return WAIT_RAO, None

    raise IllegalTransition(f"unknown stimulus {stimulus!r}")
