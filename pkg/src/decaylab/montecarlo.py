"""Event-driven stochastic simulation of decaying entangled pairs.

Each pair produces exactly two photon events.  The first emission happens at
rate gamma_t and carries species h with probability gamma_t_h / gamma_t; it
leaves behind a lone atom of the companion species, which then decays freely
at its own rate, so the second photon has the companion species and arrives
after an independent exponential delay.  The two photons leave on opposite
sides of the apparatus, with the first side chosen fairly.  A product-mode
scenario instead decays n0 independent atoms of one species, one photon each.

Reproducibility contract
------------------------
Sampling uses the counter-based Philox generator.  Pair p always reads the
four uniforms at counter positions [4p, 4p + 4) of the stream keyed by the
scenario seed: first-emission time, first-photon species, survivor delay,
and first-photon side, in that order (product mode draws the same four and
uses only the first and last, keeping the layout identical across modes).
Philox.advance(p) jumps exactly one four-word counter block per pair, so any
partition of the pair index range into blocks, any thread count, and the
single-pair path all produce bit-identical events.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError, DomainError, NoDecayError
from .kinetics import PopulationCurve
from .rates import EntangledRates, RateSet, Species, derive_rates

__all__ = [
    "ENTANGLED",
    "PRODUCT",
    "DRAWS_PER_PAIR",
    "Side",
    "EmissionOrder",
    "PhotonEvent",
    "EventStream",
    "Scenario",
    "pair_substream",
    "sample_pair",
    "simulate",
    "histogram",
]

ENTANGLED = "entangled"
PRODUCT = "product"

DRAWS_PER_PAIR = 4

# column codes used by EventStream
OR_CODE, PA_CODE = 0, 1
L_CODE, R_CODE = 0, 1
FIRST_CODE, SECOND_CODE, UNKNOWN_CODE = 0, 1, 2
UNKNOWN_PAIR = -1

_BLOCK = 1 << 16
_MAX_THREADS = 64


class Side(Enum):
    """Which side of the apparatus a photon left through."""

    L = "L"
    R = "R"

    def opposite(self) -> "Side":
        return Side.R if self is Side.L else Side.L


class EmissionOrder(Enum):
    """Whether a photon was the pair's first or second emission."""

    FIRST = "first"
    SECOND = "second"


_SPECIES_BY_CODE = (Species.OR, Species.PA)
_SIDE_BY_CODE = (Side.L, Side.R)
_ORDER_BY_CODE = (EmissionOrder.FIRST, EmissionOrder.SECOND)

SPECIES_CODE = {Species.OR: OR_CODE, Species.PA: PA_CODE}


@dataclass(frozen=True)
class PhotonEvent:
    """One detected photon."""

    pair_id: int
    time: float
    species: Species
    side: Side
    order: EmissionOrder

    def __post_init__(self) -> None:
        if self.pair_id < 0:
            raise DomainError("pair_id must be >= 0")
        if not math.isfinite(self.time) or self.time < 0.0:
            raise DomainError("event time must be finite and >= 0")


@dataclass(frozen=True)
class EventStream:
    """Columnar photon record: parallel arrays, one row per photon.

    species, side and order hold the small integer codes defined at module
    level; pair_id is UNKNOWN_PAIR and order UNKNOWN_CODE after identity
    erasure.  Rows produced by simulate are sorted by time (ties broken by
    pair then order).
    """

    pair_id: np.ndarray
    time: np.ndarray
    species: np.ndarray
    side: np.ndarray
    order: np.ndarray

    def __post_init__(self) -> None:
        casts = (
            ("pair_id", np.int64),
            ("time", np.float64),
            ("species", np.uint8),
            ("side", np.uint8),
            ("order", np.uint8),
        )
        n = None
        for name, dtype in casts:
            arr = np.ascontiguousarray(getattr(self, name), dtype=dtype)
            if arr.ndim != 1:
                raise DataError(f"{name} must be 1-d")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise DataError("event columns must have equal length")
            object.__setattr__(self, name, arr)
        if not np.all(np.isfinite(self.time)):
            raise DataError("event times must be finite")
        if self.time.size and self.time.min() < 0.0:
            raise DataError("event times must be >= 0")
        if self.species.size and self.species.max() > PA_CODE:
            raise DataError("unknown species code")
        if self.side.size and self.side.max() > R_CODE:
            raise DataError("unknown side code")
        if self.order.size and self.order.max() > UNKNOWN_CODE:
            raise DataError("unknown order code")

    def __len__(self) -> int:
        return self.time.size

    def __getitem__(self, i: int) -> PhotonEvent:
        if self.pair_id[i] == UNKNOWN_PAIR or self.order[i] == UNKNOWN_CODE:
            raise DataError("event has erased identity")
        return PhotonEvent(
            pair_id=int(self.pair_id[i]),
            time=float(self.time[i]),
            species=_SPECIES_BY_CODE[self.species[i]],
            side=_SIDE_BY_CODE[self.side[i]],
            order=_ORDER_BY_CODE[self.order[i]],
        )

    @property
    def has_identities(self) -> bool:
        """True when every row still carries its pair id and order tag."""
        if len(self) == 0:
            return True
        return bool(
            self.pair_id.min() != UNKNOWN_PAIR and self.order.max() != UNKNOWN_CODE
        )

    def sorted_by_time(self) -> "EventStream":
        idx = np.lexsort((self.order, self.pair_id, self.time))
        return EventStream(
            self.pair_id[idx],
            self.time[idx],
            self.species[idx],
            self.side[idx],
            self.order[idx],
        )


def _default_t_max(rates: RateSet) -> float:
    return 10.0 / min(rates.gamma_or, rates.gamma_pa)


@dataclass(frozen=True)
class Scenario:
    """Full description of one run: preparation, horizon, grid, seed.

    t_max defaults to ten lifetimes of the slower species.  grid_points are
    spread uniformly over [0, t_max].  seed keys the Philox counter stream;
    parallel lets simulate fan blocks of pairs out over threads (capped by
    the DECAYLAB_THREADS environment variable) without changing any output.
    """

    n0: int
    rates: RateSet
    mode: str = ENTANGLED
    product_species: Species | None = None
    t_max: float | None = None
    grid_points: int = 512
    seed: int = 0
    parallel: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.n0, (int, np.integer)) or isinstance(self.n0, bool):
            raise DomainError("n0 must be an integer")
        if self.n0 < 1:
            raise DomainError("n0 must be >= 1")
        object.__setattr__(self, "n0", int(self.n0))
        if self.mode not in (ENTANGLED, PRODUCT):
            raise DomainError(f"mode must be {ENTANGLED!r} or {PRODUCT!r}")
        if self.mode == PRODUCT:
            if self.product_species is None:
                raise DomainError("product mode needs product_species")
        elif self.product_species is not None:
            raise DomainError("product_species only applies to product mode")
        t_max = self.t_max
        if t_max is None:
            t_max = _default_t_max(self.rates)
        t_max = float(t_max)
        if not math.isfinite(t_max) or t_max <= 0.0:
            raise DomainError("t_max must be finite and > 0")
        object.__setattr__(self, "t_max", t_max)
        if not isinstance(self.grid_points, (int, np.integer)) or self.grid_points < 2:
            raise DomainError("grid_points must be an integer >= 2")
        object.__setattr__(self, "grid_points", int(self.grid_points))
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "parallel", bool(self.parallel))

    @property
    def is_entangled(self) -> bool:
        return self.mode == ENTANGLED

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.grid_points)


def pair_substream(seed: int, pair_id: int) -> np.random.Generator:
    """Generator positioned at pair_id's private block of the seeded stream."""
    if pair_id < 0:
        raise DomainError("pair_id must be >= 0")
    bit_gen = np.random.Philox(key=seed)
    if pair_id:
        bit_gen.advance(pair_id)
    return np.random.Generator(bit_gen)


def _entangled_from_uniforms(u: np.ndarray, rates: RateSet, er: EntangledRates):
    # u has shape (m, 4); columns: first time, species, survivor delay, side
    gamma_t = er.gamma_t
    t1 = -np.log1p(-u[:, 0]) / gamma_t
    first_or = u[:, 1] < er.gamma_t_or / gamma_t
    g_survivor = np.where(first_or, rates.gamma_pa, rates.gamma_or)
    t2 = t1 - np.log1p(-u[:, 2]) / g_survivor
    first_left = u[:, 3] < 0.5
    return t1, first_or, t2, first_left


def _product_from_uniforms(u: np.ndarray, gamma_h: float):
    t = -np.log1p(-u[:, 0]) / gamma_h
    left = u[:, 3] < 0.5
    return t, left


def sample_pair(
    pair_id: int,
    rates: RateSet,
    er: EntangledRates,
    rng: np.random.Generator,
) -> tuple[PhotonEvent, PhotonEvent]:
    """Draw one entangled pair's two events from its substream.

    Consumes exactly DRAWS_PER_PAIR uniforms and runs the same kernel as the
    vectorised simulator, so a pair sampled here is bit-identical to the same
    pair inside a full run.
    """
    if er.gamma_t <= 0.0:
        raise NoDecayError("gamma_t = 0: entangled pairs never emit")
    u = rng.random(DRAWS_PER_PAIR).reshape(1, DRAWS_PER_PAIR)
    t1, first_or, t2, first_left = _entangled_from_uniforms(u, rates, er)
    species_1 = Species.OR if first_or[0] else Species.PA
    side_1 = Side.L if first_left[0] else Side.R
    first = PhotonEvent(pair_id, float(t1[0]), species_1, side_1, EmissionOrder.FIRST)
    second = PhotonEvent(
        pair_id,
        float(t2[0]),
        species_1.companion(),
        side_1.opposite(),
        EmissionOrder.SECOND,
    )
    return first, second


def _thread_count(parallel: bool) -> int:
    if not parallel:
        return 1
    raw = os.environ.get("DECAYLAB_THREADS", "0").strip()
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ConfigError(f"DECAYLAB_THREADS must be an integer, got {raw!r}") from exc
    if cap < 0:
        raise ConfigError("DECAYLAB_THREADS must be >= 0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, _MAX_THREADS))


def simulate(scenario: Scenario) -> tuple[EventStream, PopulationCurve]:
    """Run a scenario: every pair's events plus their histogram on the grid.

    The stream contains all events, including those past t_max; the returned
    curve tabulates exact integer counts on the scenario grid.
    """
    n0 = scenario.n0
    rates = scenario.rates
    seed = scenario.seed
    if scenario.is_entangled:
        er = derive_rates(rates)
        if er.gamma_t <= 0.0:
            raise NoDecayError("gamma_t = 0: entangled pairs never emit")
        first_time = np.empty(n0)
        first_or = np.empty(n0, dtype=bool)
        second_time = np.empty(n0)
        first_left = np.empty(n0, dtype=bool)

        def fill(lo: int, hi: int) -> None:
            rng = pair_substream(seed, lo)
            u = rng.random((hi - lo) * DRAWS_PER_PAIR).reshape(-1, DRAWS_PER_PAIR)
            t1, s_or, t2, left = _entangled_from_uniforms(u, rates, er)
            first_time[lo:hi] = t1
            first_or[lo:hi] = s_or
            second_time[lo:hi] = t2
            first_left[lo:hi] = left

    else:
        gamma_h = rates.gamma(scenario.product_species)
        first_time = np.empty(n0)
        first_left = np.empty(n0, dtype=bool)

        def fill(lo: int, hi: int) -> None:
            rng = pair_substream(seed, lo)
            u = rng.random((hi - lo) * DRAWS_PER_PAIR).reshape(-1, DRAWS_PER_PAIR)
            t, left = _product_from_uniforms(u, gamma_h)
            first_time[lo:hi] = t
            first_left[lo:hi] = left

    spans = [(lo, min(lo + _BLOCK, n0)) for lo in range(0, n0, _BLOCK)]
    workers = _thread_count(scenario.parallel)
    if workers > 1 and len(spans) > 1:
        # blocks write to disjoint slices, so scheduling order cannot matter
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda span: fill(*span), spans))
    else:
        for lo, hi in spans:
            fill(lo, hi)

    ids = np.arange(n0, dtype=np.int64)
    if scenario.is_entangled:
        species_1 = np.where(first_or, OR_CODE, PA_CODE).astype(np.uint8)
        side_1 = np.where(first_left, L_CODE, R_CODE).astype(np.uint8)
        pair_col = np.concatenate([ids, ids])
        time_col = np.concatenate([first_time, second_time])
        species_col = np.concatenate([species_1, species_1 ^ 1])
        side_col = np.concatenate([side_1, side_1 ^ 1])
        order_col = np.concatenate(
            [
                np.full(n0, FIRST_CODE, dtype=np.uint8),
                np.full(n0, SECOND_CODE, dtype=np.uint8),
            ]
        )
    else:
        code = SPECIES_CODE[scenario.product_species]
        pair_col = ids
        time_col = first_time
        species_col = np.full(n0, code, dtype=np.uint8)
        side_col = np.where(first_left, L_CODE, R_CODE).astype(np.uint8)
        order_col = np.full(n0, FIRST_CODE, dtype=np.uint8)

    idx = np.lexsort((order_col, pair_col, time_col))
    stream = EventStream(
        pair_col[idx], time_col[idx], species_col[idx], side_col[idx], order_col[idx]
    )
    curve = histogram(stream, scenario.grid(), n0, mode=scenario.mode)
    return stream, curve


def _counts_at(sorted_times: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(sorted_times, grid, side="right")


def histogram(
    events: EventStream,
    grid,
    n0: int,
    mode: str = ENTANGLED,
) -> PopulationCurve:
    """Exact integer populations and photon counts of a stream on a grid.

    Counting rests on the pair structure: a first emission of species H both
    removes an entangled pair and creates a lone companion(H) survivor; the
    matching second emission removes that survivor again.  All counts come
    from binary searches over per-category sorted times, so they are exact
    integers and conservation holds identically.
    """
    grid = np.asarray(grid, dtype=float)
    if not isinstance(n0, (int, np.integer)) or n0 < 1:
        raise DomainError("n0 must be a positive integer")
    n0 = int(n0)
    if mode not in (ENTANGLED, PRODUCT):
        raise DomainError(f"mode must be {ENTANGLED!r} or {PRODUCT!r}")
    if mode == ENTANGLED:
        known = events.order != UNKNOWN_CODE
        if not np.all(known):
            raise DataError("entangled histogram needs first/second order tags")
        first = events.order == FIRST_CODE
        is_or = events.species == OR_CODE
        ft = np.sort(events.time[first])
        if ft.size > n0:
            raise DataError(f"{ft.size} first emissions from only {n0} pairs")
        ft_or = np.sort(events.time[first & is_or])
        ft_pa = np.sort(events.time[first & ~is_or])
        st_or = np.sort(events.time[~first & is_or])
        st_pa = np.sort(events.time[~first & ~is_or])
        c_ft_or = _counts_at(ft_or, grid)
        c_ft_pa = _counts_at(ft_pa, grid)
        c_st_or = _counts_at(st_or, grid)
        c_st_pa = _counts_at(st_pa, grid)
        n = n0 - _counts_at(ft, grid)
        n_or = c_ft_pa - c_st_or
        n_pa = c_ft_or - c_st_pa
        if np.any(n_or < 0) or np.any(n_pa < 0):
            raise DataError("second emissions outnumber their first emissions")
        N_or = c_ft_or + c_st_or
        N_pa = c_ft_pa + c_st_pa
    else:
        if events.time.size > n0:
            raise DataError(f"{events.time.size} emissions from only {n0} atoms")
        is_or = events.species == OR_CODE
        t_all = np.sort(events.time)
        n = n0 - _counts_at(t_all, grid)
        zero = np.zeros(grid.size, dtype=np.int64)
        n_or = zero
        n_pa = zero.copy()
        N_or = _counts_at(np.sort(events.time[is_or]), grid)
        N_pa = _counts_at(np.sort(events.time[~is_or]), grid)
    return PopulationCurve(
        grid,
        n.astype(np.int64),
        n_or.astype(np.int64),
        n_pa.astype(np.int64),
        N_or.astype(np.int64),
        N_pa.astype(np.int64),
        n0,
    )
