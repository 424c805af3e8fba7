"""Closed-form performance of q-ary tree splitting over LTE preambles.

Level ``m`` of the tree has ``G * q**m`` slots; the root (m = 1) is the
initial RAO with all ``N_P = G * q`` preambles. A tagged device is resolved
by level ``m`` when none of the other ``N - 1`` devices shares its slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import betainc

from rachtree.errors import DomainError

EULER_GAMMA = 0.57721566490153286


@dataclass(frozen=True)
class TreeModel:
    n_devices: int
    n_preambles: int = 54
    split_factor: int = 2
    euler_gamma: float = EULER_GAMMA
    tail_epsilon: float = 1e-12
    max_levels: int = 100_000

    def __post_init__(self):
        if self.split_factor < 2:
            raise DomainError("split_factor must be >= 2")
        if self.n_preambles % self.split_factor:
            raise DomainError(f"N_P={self.n_preambles} is not a multiple of q={self.split_factor}")

    @classmethod
    def from_groups(cls, n_devices: int, n_groups: int, q: int, **kw) -> "TreeModel":
        return cls(n_devices=n_devices, n_preambles=n_groups * q, split_factor=q, **kw)

    @property
    def n_groups(self) -> int:
        return self.n_preambles // self.split_factor

    @property
    def q(self) -> int:
        return self.split_factor

    def slots(self, m: int) -> float:
        return float(self.n_groups) * float(self.q) ** m


def _require_level(model: TreeModel, m: int):
    if m < 1:
        raise DomainError(f"level m={m} must be >= 1")
    if model.n_devices < 2:
        raise DomainError(f"N={model.n_devices}: the model needs at least two devices")


def _log_survive(model: TreeModel, m: int) -> float:
    # log of (1 - 1/(G q^m))^(N-1)
    return (model.n_devices - 1) * math.log1p(-1.0 / model.slots(m))


def slot_success_prob(model: TreeModel, m: int) -> float:
    """P_S(m): the tagged device is alone in its level-m slot."""
    _require_level(model, m)
    return math.exp(_log_survive(model, m))


def _unresolved(model: TreeModel, m: int) -> float:
    """1 - P_S(m) without cancellation; P_S(0) is pinned to 0."""
    if m == 0:
        return 1.0
    return -math.expm1(_log_survive(model, m))


def level_resolution_prob(model: TreeModel, m: int) -> float:
    """P_L(m) = P_S(m) - P_S(m-1), with P_S(0) = 0."""
    _require_level(model, m)
    return _unresolved(model, m - 1) - _unresolved(model, m)


def outage_prob(model: TreeModel, max_tx: int) -> float:
    """P_O = 1 - sum_{m=1..M} P_L(m)."""
    if max_tx < 1:
        raise DomainError("max_tx must be >= 1")
    _require_level(model, 1)
    return 1.0 - math.fsum(level_resolution_prob(model, m) for m in range(1, max_tx + 1))


def outage_prob_closed(model: TreeModel, max_tx: int) -> float:
    """Telescoped P_O = 1 - P_S(M)."""
    if max_tx < 1:
        raise DomainError("max_tx must be >= 1")
    _require_level(model, 1)
    return _unresolved(model, max_tx)


def expected_transmissions(model: TreeModel, max_level: int | None = None) -> float:
    """T = sum_m m P_L(m), evaluated as the tail sum sum_{m>=0} (1 - P_S(m)).

    With ``max_level = M`` the sum stops at M - 1, i.e. the mean number of
    preamble transmissions when devices give up after M attempts.
    """
    if model.n_devices < 2:
        return 1.0
    limit = model.max_levels if max_level is None else max_level
    terms = []
    for m in range(limit):
        term = _unresolved(model, m)
        terms.append(term)
        if m >= 1 and term < model.tail_epsilon:
            break
    return math.fsum(terms)


def expected_transmissions_direct(model: TreeModel) -> float:
    """Same quantity as :func:`expected_transmissions` by sum_m m P_L(m)."""
    if model.n_devices < 2:
        return 1.0
    terms = []
    for m in range(1, model.max_levels):
        p = level_resolution_prob(model, m)
        terms.append(m * p)
        if _unresolved(model, m) < model.tail_epsilon * 1e-3:
            break
    return math.fsum(terms)


def approx_transmissions(model: TreeModel, eq5_literal: bool = False) -> float:
    """Asymptotic T for large N: log_q((N-1)/G) + 1/2 + gamma/ln q + 1/(2 N ln q).

    ``eq5_literal=True`` subtracts the constant term instead, as the formula
    is usually printed; that form undershoots the exact sum by about one
    transmission.
    """
    n, g = model.n_devices, model.n_groups
    if n < 1 or (n - 1) / g <= 0:
        raise DomainError(f"(N-1)/G must be positive, got N={n}, G={g}")
    ln_q = math.log(model.q)
    head = math.log((n - 1) / g) / ln_q
    middle = 0.5 + model.euler_gamma / ln_q
    tail = 1.0 / (2.0 * n * ln_q)
    return head - middle + tail if eq5_literal else head + middle + tail


def expected_collisions(model: TreeModel, m: int) -> float:
    """C(m): expected level-m slots holding two or more devices.

    Computed as slots * P[Binomial(N, 1/slots) >= 2] through the regularised
    incomplete beta function, which stays accurate when collisions are rare.
    """
    if m < 1:
        raise DomainError(f"level m={m} must be >= 1")
    n = model.n_devices
    if n < 2:
        return 0.0
    s = model.slots(m)
    x = 1.0 / s
    return s * float(betainc(2.0, n - 1.0, x))


def expected_traos(model: TreeModel, collision_cutoff: float = 0.5) -> int:
    """R = 1 + sum_m ceil(C(m)/G), stopping at the first level with C(m) < cutoff.

    Every C(m) > 0 would add at least one TRAO, so the untruncated sum
    diverges; the cutoff rounds an expected collided-slot count below one
    half to zero.
    """
    total = 1
    g = model.n_groups
    for m in range(1, model.max_levels):
        c = expected_collisions(model, m)
        if c < collision_cutoff:
            break
        total += math.ceil(c / g)
    return total


def level_table(model: TreeModel, levels: int) -> list[dict]:
    """Per-level P_S, P_L and C for m = 1..levels."""
    rows = []
    for m in range(1, levels + 1):
        rows.append({
            "m": m,
            "p_s": slot_success_prob(model, m),
            "p_l": level_resolution_prob(model, m),
            "c": expected_collisions(model, m),
        })
    return rows


def summary(model: TreeModel, max_tx: int) -> dict:
    """Analytic overlay values used by the sweep harness."""
    if model.n_devices < 2:
        return {"po": 0.0, "t": 1.0, "that": float("nan"), "r": 1}
    return {
        "po": outage_prob(model, max_tx),
        "t": expected_transmissions(model),
        "that": approx_transmissions(model),
        "r": expected_traos(model),
    }
