"""System and scheme configuration, validation and the key/value config file."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import NamedTuple

from rachtree.errors import ConfigError, DivisibilityError, LayoutError, RangeError
from rachtree.msg4b import MSG4B_FIELD_WIDTHS, MSG4B_TOTAL_BITS


class Scheme(str, enum.Enum):
    BASELINE = "baseline"
    DYNAMIC = "dynamic"
    TREE = "tree"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, Scheme):
            return value
        text = str(value).strip().lower()
        aliases = {"treesplit": "tree", "tree_split": "tree", "tree-split": "tree"}
        return cls(aliases.get(text, text))


@dataclass(frozen=True)
class SystemConfig:
    """Radio and protocol parameters (defaults: 20 MHz FDD cell, QPSK)."""

    n_preambles: int = 54
    max_transmissions: int = 10
    msg2_window_ms: float = 5
    msg4_timer_ms: float = 24
    contention_timer_ms: float = 48
    backoff_ms: float = 20
    processing_ms: float = 3
    p_error: float = 0.01
    subframe_ms: float = 1
    subframes_per_frame: int = 10
    bandwidth_rbs: int = 100
    # 12 subcarriers x 14 symbols x 2 bits (QPSK), no overhead deducted
    rb_bits: int = 336
    msg2_bits: int = 56
    msg4_bits: int = 20
    msg4b_bits: int = MSG4B_TOTAL_BITS
    rao_rbs: int = 6
    msg3_rbs: int = 1

    def subframes(self, ms: float) -> int:
        """Duration in whole subframes, rounded up."""
        return int(math.ceil(ms / self.subframe_ms - 1e-9))

    # Fixed access pipeline relative to the MSG 1 subframe t:
    # MSG 2 at t+p, MSG 3 at t+2p+1, MSG 4 / MSG 4b at t+3p+1 (p = processing).
    @property
    def processing_delay(self) -> int:
        return self.subframes(self.processing_ms)

    @property
    def msg2_delay(self) -> int:
        return self.subframes(self.processing_ms)

    @property
    def msg3_delay(self) -> int:
        return 2 * self.subframes(self.processing_ms) + 1

    @property
    def feedback_delay(self) -> int:
        return 3 * self.subframes(self.processing_ms) + 1

    @property
    def msg2_deadline(self) -> int:
        return self.msg2_delay + self.subframes(self.msg2_window_ms)

    @property
    def contention_timer(self) -> int:
        return self.subframes(self.contention_timer_ms)

    @property
    def backoff_max(self) -> int:
        """Largest backoff draw in subframes (draws are whole ms in [0, B])."""
        return self.subframes(self.backoff_ms)


@dataclass(frozen=True)
class SchemeConfig:
    scheme: Scheme = Scheme.BASELINE
    raos_per_frame: int = 2
    split_factor: int = 2
    trao_subframes_per_frame: int = 8
    # subframe of the first RAO in each frame; RAOs are evenly spaced from it
    rao_offset: int = 1
    # MSG 3 collisions in one subframe that switch the cell into tree mode
    trigger_threshold: int = 1
    # "deferred": a TRAO is opened part-full only when no other TRAO is in
    # flight (or the group's contention timer would otherwise run out);
    # "greedy": every pending group goes to the earliest free TRAO at once.
    trao_packing: str = "deferred"

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))

    @classmethod
    def baseline(cls, **kw) -> "SchemeConfig":
        return cls(scheme=Scheme.BASELINE, raos_per_frame=kw.pop("raos_per_frame", 2), **kw)

    @classmethod
    def dynamic(cls, **kw) -> "SchemeConfig":
        return cls(scheme=Scheme.DYNAMIC, raos_per_frame=kw.pop("raos_per_frame", 10), **kw)

    @classmethod
    def tree(cls, q: int = 2, **kw) -> "SchemeConfig":
        return cls(scheme=Scheme.TREE, split_factor=q, raos_per_frame=kw.pop("raos_per_frame", 2), **kw)

    @property
    def is_tree(self) -> bool:
        return self.scheme is Scheme.TREE

    def n_groups(self, sys: SystemConfig) -> int:
        return sys.n_preambles // self.split_factor

    @property
    def label(self) -> str:
        if self.is_tree:
            return f"tree(q={self.split_factor})"
        return self.scheme.value


class Violation(NamedTuple):
    kind: type
    name: str
    message: str


def _check_system(sys: SystemConfig) -> list[Violation]:
    out = []

    def bad(name, msg, kind=RangeError):
        out.append(Violation(kind, name, msg))

    if not 1 <= sys.n_preambles <= 64:
        bad("n_preambles", f"n_preambles={sys.n_preambles} outside [1, 64]")
    if sys.max_transmissions < 1:
        bad("max_transmissions", "max_transmissions must be >= 1")
    for name in ("msg2_window_ms", "msg4_timer_ms", "contention_timer_ms",
                 "backoff_ms", "processing_ms", "subframe_ms"):
        if not getattr(sys, name) > 0:
            bad(name, f"{name} must be > 0")
    if not 0.0 <= sys.p_error <= 1.0:
        bad("p_error", f"p_error={sys.p_error} outside [0, 1]")
    for name in ("subframes_per_frame", "bandwidth_rbs", "rb_bits", "msg2_bits",
                 "msg4_bits", "rao_rbs", "msg3_rbs"):
        if getattr(sys, name) < 1:
            bad(name, f"{name} must be >= 1")
    if sys.msg4b_bits != MSG4B_TOTAL_BITS:
        bad("msg4b_bits", f"msg4b_bits={sys.msg4b_bits} differs from the field widths ({MSG4B_TOTAL_BITS})")
    return out


def _check_scheme(sys: SystemConfig, sc: SchemeConfig) -> list[Violation]:
    out = []
    frame = sys.subframes_per_frame
    if sc.raos_per_frame < 1:
        out.append(Violation(RangeError, "raos_per_frame", "raos_per_frame must be >= 1"))
    elif sc.raos_per_frame > frame:
        out.append(Violation(LayoutError, "raos_per_frame",
                             f"{sc.raos_per_frame} RAOs do not fit in {frame} subframes (one RAO per subframe)"))
    if not 0 <= sc.rao_offset < max(frame, 1):
        out.append(Violation(RangeError, "rao_offset", f"rao_offset={sc.rao_offset} outside the frame"))
    if sc.trao_packing not in ("deferred", "greedy"):
        out.append(Violation(RangeError, "trao_packing", f"unknown trao_packing {sc.trao_packing!r}"))
    if sc.is_tree:
        q = sc.split_factor
        if q < 2:
            out.append(Violation(RangeError, "split_factor", "split_factor must be >= 2"))
        elif sys.n_preambles % q:
            out.append(Violation(DivisibilityError, "split_factor",
                                 f"n_preambles={sys.n_preambles} is not divisible by q={q}"))
        elif sys.n_preambles // q > 2 ** MSG4B_FIELD_WIDTHS["group_index"]:
            out.append(Violation(RangeError, "split_factor",
                                 f"G={sys.n_preambles // q} groups exceed the MSG 4b group index field"))
        if sc.trao_subframes_per_frame < 1:
            out.append(Violation(RangeError, "trao_subframes_per_frame", "need at least one TRAO subframe"))
        if sc.raos_per_frame + sc.trao_subframes_per_frame > frame:
            out.append(Violation(LayoutError, "trao_subframes_per_frame",
                                 f"{sc.raos_per_frame} RAO + {sc.trao_subframes_per_frame} TRAO subframes exceed {frame}"))
        if sc.trigger_threshold < 1:
            out.append(Violation(RangeError, "trigger_threshold", "trigger_threshold must be >= 1"))
    return out


def config_violations(sys: SystemConfig, scheme: SchemeConfig) -> list[Violation]:
    """Every broken invariant, in a stable order. Empty means valid."""
    return _check_system(sys) + _check_scheme(sys, scheme)


def validate_config(sys: SystemConfig, scheme: SchemeConfig):
    """Return ``(sys, scheme)`` unchanged, or raise listing every violation.

    The raised class is that of the first violation; ``err.violations``
    carries all of them.
    """
    violations = config_violations(sys, scheme)
    if violations:
        text = "; ".join(f"{v.name}: {v.message}" for v in violations)
        raise violations[0].kind(text, violations)
    return sys, scheme


@dataclass(frozen=True)
class ContentionGroup:
    """A collided preamble's next contention: q preambles in one TRAO.

    ``members`` is simulator bookkeeping; the eNodeB never sees it.
    """

    group_index: int
    preamble_set: tuple
    trao_subframe: int
    members: list = field(default_factory=list, compare=False)


def derive_groups(n_preambles: int, q: int) -> list[tuple[int, ...]]:
    """Split preambles ``0..n_preambles-1`` into G = n_preambles/q runs of q."""
    if q < 1 or n_preambles % q:
        raise DivisibilityError(f"n_preambles={n_preambles} is not divisible by q={q}",
                                [Violation(DivisibilityError, "split_factor", "not divisible")])
    return [tuple(range(g * q, (g + 1) * q)) for g in range(n_preambles // q)]


class FrameLayout:
    """Which subframes of each frame carry RAOs and TRAOs."""

    def __init__(self, sys: SystemConfig, scheme: SchemeConfig):
        frame = sys.subframes_per_frame
        self.frame = frame
        spacing = frame // scheme.raos_per_frame
        self.rao_slots = tuple(sorted({(scheme.rao_offset + i * spacing) % frame
                                       for i in range(scheme.raos_per_frame)}))
        if scheme.is_tree:
            free = [s for s in range(frame) if s not in self.rao_slots]
            self.trao_slots = tuple(free[:scheme.trao_subframes_per_frame])
        else:
            self.trao_slots = ()
        self._rao_gap = self._gaps(self.rao_slots)
        self._trao_gap = self._gaps(self.trao_slots) if self.trao_slots else None

    def _gaps(self, slots):
        # gap[o] = subframes from frame offset o to the next slot (0 if o is a slot)
        gaps = []
        for o in range(self.frame):
            gaps.append(min((s - o) % self.frame for s in slots))
        return gaps

    def next_rao(self, t: int) -> int:
        """First RAO subframe >= t."""
        return t + self._rao_gap[t % self.frame]

    def next_trao(self, t: int) -> int:
        """First TRAO-eligible subframe >= t."""
        return t + self._trao_gap[t % self.frame]

    def is_rao(self, t: int) -> bool:
        return self._rao_gap[t % self.frame] == 0

    def count_raos(self, start: int, stop: int) -> int:
        """RAO subframes in [start, stop)."""
        if stop <= start:
            return 0
        full, rem = divmod(stop - start, self.frame)
        n = full * len(self.rao_slots)
        for t in range(start + full * self.frame, stop):
            n += self.is_rao(t)
        return n


_SYSTEM_KEYS = {f.name: f for f in fields(SystemConfig)}
_SCHEME_KEYS = {f.name: f for f in fields(SchemeConfig)}


def _coerce(name: str, raw: str, default):
    if name == "scheme":
        return Scheme.parse(raw)
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def parse_config_text(text: str, source: str = "<string>"):
    """Parse ``key = value`` lines into ``(SystemConfig, scheme_overrides)``.

    ``#`` starts a comment. Unknown keys and malformed lines raise
    :class:`ConfigError`.
    """
    sys_kw, scheme_kw = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key in _SYSTEM_KEYS:
            target, default = sys_kw, _SYSTEM_KEYS[key].default
        elif key in _SCHEME_KEYS:
            target, default = scheme_kw, _SCHEME_KEYS[key].default
        else:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            target[key] = _coerce(key, raw, default)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {raw!r}") from exc
    return SystemConfig(**sys_kw), scheme_kw


def load_config(path) -> tuple[SystemConfig, dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def dump_config(sys: SystemConfig, scheme: SchemeConfig | None = None) -> str:
    lines = [f"{k} = {v}" for k, v in dataclasses.asdict(sys).items()]
    if scheme is not None:
        for k, v in dataclasses.asdict(scheme).items():
            lines.append(f"{k} = {v.value if isinstance(v, Scheme) else v}")
    return "\n".join(lines) + "\n"
