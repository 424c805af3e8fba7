"""MSG 4b: downlink feedback that sends collided devices to a TRAO.

Wire layout, most significant field first::

    | sfn_offset (7) | preamble_id (6) | trao_offset (7) | group_index (5) |
"""

from __future__ import annotations

from dataclasses import dataclass

MSG4B_FIELD_WIDTHS = {
    "sfn_offset": 7,
    "preamble_id": 6,
    "trao_offset": 7,
    "group_index": 5,
}
MSG4B_TOTAL_BITS = sum(MSG4B_FIELD_WIDTHS.values())


@dataclass(frozen=True)
class Msg4b:
    sfn_offset: int
    preamble_id: int
    trao_offset: int
    group_index: int

    def fits(self) -> bool:
        return all(0 <= getattr(self, k) < 1 << w for k, w in MSG4B_FIELD_WIDTHS.items())

    def check(self, n_preambles: int | None = None, n_groups: int | None = None):
        """Raise unless the record is encodable (and consistent with the cell)."""
        for name, width in MSG4B_FIELD_WIDTHS.items():
            value = getattr(self, name)
            if not 0 <= value < 1 << width:
                raise OverflowError(f"{name}={value} does not fit in {width} bits")
        if n_preambles is not None and self.preamble_id >= n_preambles:
            raise ValueError(f"preamble_id {self.preamble_id} >= {n_preambles}")
        if n_groups is not None and self.group_index >= n_groups:
            raise ValueError(f"group_index {self.group_index} >= G={n_groups}")
        return self


def encode_msg4b(m: Msg4b) -> int:
    m.check()
    word = 0
    for name, width in MSG4B_FIELD_WIDTHS.items():
        word = (word << width) | getattr(m, name)
    return word


def decode_msg4b(word: int) -> Msg4b:
    if not 0 <= word < 1 << MSG4B_TOTAL_BITS:
        raise OverflowError(f"word {word:#x} is wider than {MSG4B_TOTAL_BITS} bits")
    values = {}
    for name, width in reversed(MSG4B_FIELD_WIDTHS.items()):
        values[name] = word & ((1 << width) - 1)
        word >>= width
    return Msg4b(**values)
