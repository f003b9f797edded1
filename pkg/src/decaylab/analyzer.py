"""Photon-stream analysis: reconstruction, rate estimation, detection.

Classifying each photon as its pair's first or second emission turns a
stream back into populations, with no reference to the generating rates:

    n(t)   = n0 - N1_or(t) - N1_pa(t)
    n_h(t) = N1_H(t) - N2_h(t)          (H = companion of h)
    N_h(t) = N1_h(t) + N2_h(t)

where N1/N2 are cumulative first/second counts by species.  On exact data
these invert the histogram identically, integer for integer.

Rates come from maximum likelihood on exponential samples: the first-emission
times estimate the disentangling rate gamma_t, and the delays between a
second emission and its pair's first estimate the free rate of the surviving
species, each with standard error rate / sqrt(count).

Detection asks whether a stream of photon counts could have come from a
never-entangled (product) preparation.  A single species' cumulative curve
is useless for this at W = 0: n(t) + n_h(t) = n0 exp(-gamma_h t) holds
exactly there, so each species' photon record matches the product model even
though the pair is entangled.  What a product preparation cannot do is emit
both species: it decays n0 atoms of one species only.  The detector
therefore scores the stream against each one-species product hypothesis by
the worse of two sup-norm distances, the same-species gap to
n0 (1 - exp(-gamma_s t)) and the companion-species photon mass, and takes
the best (smallest) hypothesis score as its statistic.  Product data fits
its own hypothesis at fluctuation scale 1/sqrt(n0); entangled data puts
half its photons in the companion species of every hypothesis, pinning the
statistic near one.  The verdict bands the statistic against a threshold,
by default three times the 95% Kolmogorov fluctuation scale 1.36/sqrt(n0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DataError,
    DomainError,
    InsufficientDataError,
    UnclassifiableError,
)
from .kinetics import PopulationCurve
from .montecarlo import (
    FIRST_CODE,
    OR_CODE,
    PA_CODE,
    SECOND_CODE,
    SPECIES_CODE,
    UNKNOWN_CODE,
    UNKNOWN_PAIR,
    EventStream,
)
from .rates import RateSet, Species

__all__ = [
    "MIN_PAIRS_DEFAULT",
    "KS_COEFF",
    "THRESHOLD_SAFETY",
    "ClassifiedCounts",
    "RateEstimates",
    "Verdict",
    "DetectionVerdict",
    "classify",
    "reconstruct",
    "erase_identities",
    "estimate_rates",
    "default_threshold",
    "product_model_distance",
    "detect",
]

MIN_PAIRS_DEFAULT = 100

# 95% two-sided Kolmogorov fluctuation coefficient, and the safety factor
# that separates the verdict bands from ordinary statistical noise
KS_COEFF = 1.36
THRESHOLD_SAFETY = 3.0


@dataclass(frozen=True)
class ClassifiedCounts:
    """Cumulative first/second emission counts by species on a time grid."""

    grid: np.ndarray
    n1_or: np.ndarray
    n1_pa: np.ndarray
    n2_or: np.ndarray
    n2_pa: np.ndarray
    n0: int

    def __post_init__(self) -> None:
        # unlike PopulationCurve, any non-negative measurement grid is allowed
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or grid[0] < 0.0:
            raise DomainError("grid must be 1-d, non-empty, with times >= 0")
        if np.any(np.diff(grid) <= 0.0):
            raise DomainError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        if not isinstance(self.n0, (int, np.integer)) or self.n0 < 1:
            raise DomainError("n0 must be a positive integer")
        object.__setattr__(self, "n0", int(self.n0))
        for name in ("n1_or", "n1_pa", "n2_or", "n2_pa"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            if arr.shape != grid.shape:
                raise DomainError(f"{name} must match the grid shape")
            if arr[0] < 0 or np.any(np.diff(arr) < 0):
                raise DomainError(f"{name} must be non-negative and non-decreasing")
            object.__setattr__(self, name, arr)
        if np.any(self.n1_or + self.n1_pa > self.n0):
            raise DomainError("more first emissions than pairs")

    def photons(self, h: Species) -> np.ndarray:
        """Cumulative species-h photons, first plus second emissions."""
        if h is Species.OR:
            return self.n1_or + self.n2_or
        return self.n1_pa + self.n2_pa


def classify(events: EventStream, grid, n0: int) -> ClassifiedCounts:
    """Tag and tally every photon by species and emission order.

    Requires intact pair identities; validates that no pair emits two firsts
    or two seconds, that a second always follows a first of the companion
    species, and that pair ids fit inside [0, n0).
    """
    if not events.has_identities:
        raise UnclassifiableError("stream has erased pair identities")
    if not isinstance(n0, (int, np.integer)) or n0 < 1:
        raise DomainError("n0 must be a positive integer")
    n0 = int(n0)
    grid = np.asarray(grid, dtype=float)
    pid = events.pair_id
    if pid.size and (pid.min() < 0 or pid.max() >= n0):
        raise DataError("pair ids must lie in [0, n0)")
    first = events.order == FIRST_CODE
    second = events.order == SECOND_CODE
    bc1 = np.bincount(pid[first], minlength=n0)
    bc2 = np.bincount(pid[second], minlength=n0)
    if bc1.size and bc1.max() > 1:
        raise DataError("a pair carries two first emissions")
    if bc2.size and bc2.max() > 1:
        raise DataError("a pair carries two second emissions")
    if np.any(bc2 > bc1):
        raise DataError("a second emission has no matching first")

    both = (bc1 == 1) & (bc2 == 1)
    if np.any(both):
        species_1 = np.zeros(n0, dtype=np.uint8)
        species_2 = np.zeros(n0, dtype=np.uint8)
        t1 = np.zeros(n0)
        t2 = np.zeros(n0)
        species_1[pid[first]] = events.species[first]
        species_2[pid[second]] = events.species[second]
        t1[pid[first]] = events.time[first]
        t2[pid[second]] = events.time[second]
        if np.any(species_1[both] == species_2[both]):
            raise DataError("a pair emitted the same species twice")
        if np.any(t2[both] < t1[both]):
            raise DataError("a second emission precedes its first")

    is_or = events.species == OR_CODE

    def cumulative(mask: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.sort(events.time[mask]), grid, side="right").astype(
            np.int64
        )

    return ClassifiedCounts(
        grid=grid,
        n1_or=cumulative(first & is_or),
        n1_pa=cumulative(first & ~is_or),
        n2_or=cumulative(second & is_or),
        n2_pa=cumulative(second & ~is_or),
        n0=n0,
    )


def reconstruct(counts: ClassifiedCounts) -> PopulationCurve:
    """Invert classified counts into populations, integer for integer.

    Raises DataError if the counts imply a negative population anywhere,
    which means the stream violated the pair structure upstream.
    """
    n0 = counts.n0
    n = n0 - counts.n1_or - counts.n1_pa
    n_or = counts.n1_pa - counts.n2_or
    n_pa = counts.n1_or - counts.n2_pa
    if np.any(n < 0):
        raise DataError("more first emissions than pairs")
    if np.any(n_or < 0) or np.any(n_pa < 0):
        raise DataError("second emissions outnumber their feeding firsts")
    return PopulationCurve(
        grid=counts.grid,
        n=n,
        n_or=n_or,
        n_pa=n_pa,
        N_or=counts.n1_or + counts.n2_or,
        N_pa=counts.n1_pa + counts.n2_pa,
        n0=n0,
    )


def erase_identities(events: EventStream) -> EventStream:
    """Strip pair ids and order tags, keeping times, species, and sides.

    Models a detector that sees photons but cannot attribute them to pairs;
    the result supports detection but not classification.
    """
    m = len(events)
    return EventStream(
        pair_id=np.full(m, UNKNOWN_PAIR, dtype=np.int64),
        time=events.time.copy(),
        species=events.species.copy(),
        side=events.side.copy(),
        order=np.full(m, UNKNOWN_CODE, dtype=np.uint8),
    )


@dataclass(frozen=True)
class RateEstimates:
    """Maximum-likelihood rates from an identified stream.

    gamma_t_est comes from all first-emission times; the per-species
    estimates come from second-minus-first delays of pairs whose survivor
    had that species, and are NaN when no such seconds exist (for example
    in product mode).  Standard errors are rate / sqrt(count).
    """

    gamma_t_est: float
    gamma_t_se: float
    n_pairs: int
    gamma_or_est: float
    gamma_or_se: float
    n_second_or: int
    gamma_pa_est: float
    gamma_pa_se: float
    n_second_pa: int


def estimate_rates(
    events: EventStream, n0: int, min_pairs: int = MIN_PAIRS_DEFAULT
) -> RateEstimates:
    """Estimate the disentangling and free rates from one stream."""
    if not events.has_identities:
        raise UnclassifiableError("rate estimation needs pair identities")
    if not isinstance(n0, (int, np.integer)) or n0 < 1:
        raise DomainError("n0 must be a positive integer")
    first = events.order == FIRST_CODE
    n_pairs = int(np.count_nonzero(first))
    if n_pairs < min_pairs:
        raise InsufficientDataError(
            f"{n_pairs} first emissions, need at least {min_pairs}"
        )
    first_times = events.time[first]
    total = float(first_times.sum())
    if total <= 0.0:
        raise DataError("first-emission times sum to zero")
    gamma_t_est = n_pairs / total
    t1_by_pair = np.full(int(n0), np.nan)
    t1_by_pair[events.pair_id[first]] = first_times

    def species_fit(code: int) -> tuple[float, float, int]:
        mask = (events.order == SECOND_CODE) & (events.species == code)
        k = int(np.count_nonzero(mask))
        if k == 0:
            return math.nan, math.nan, 0
        gaps = events.time[mask] - t1_by_pair[events.pair_id[mask]]
        if np.any(~np.isfinite(gaps)) or np.any(gaps < 0.0):
            raise DataError("second emissions without consistent firsts")
        rate = k / float(gaps.sum())
        return rate, rate / math.sqrt(k), k

    or_est, or_se, k_or = species_fit(OR_CODE)
    pa_est, pa_se, k_pa = species_fit(PA_CODE)
    return RateEstimates(
        gamma_t_est=gamma_t_est,
        gamma_t_se=gamma_t_est / math.sqrt(n_pairs),
        n_pairs=n_pairs,
        gamma_or_est=or_est,
        gamma_or_se=or_se,
        n_second_or=k_or,
        gamma_pa_est=pa_est,
        gamma_pa_se=pa_se,
        n_second_pa=k_pa,
    )


class Verdict(Enum):
    ENTANGLED = "entangled"
    PRODUCT = "product"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DetectionVerdict:
    """Outcome of the product-hypothesis test.

    statistic is the best (smallest) hypothesis score; distances holds the
    per-hypothesis scores and their shape/mass components; fitted_rates
    carries rate estimates when the source allowed them.
    """

    verdict: Verdict
    statistic: float
    threshold: float
    distances: dict[str, float]
    fitted_rates: RateEstimates | None = None
    reason: str = ""


def default_threshold(n0: float) -> float:
    """Detection threshold 3 * 1.36 / sqrt(n0)."""
    if n0 <= 0:
        raise DomainError("n0 must be positive")
    return THRESHOLD_SAFETY * KS_COEFF / math.sqrt(n0)


def _stream_distance(sorted_times: np.ndarray, n0: float, gamma: float) -> float:
    # sup over t of |count(<= t)/n0 - (1 - exp(-gamma t))|, evaluated at the
    # jump points from both sides plus the t -> infinity tail
    k = sorted_times.size
    tail = abs(k / n0 - 1.0)
    if k == 0:
        return tail
    model = -np.expm1(-gamma * sorted_times)
    steps = np.arange(k, dtype=float)
    before = np.max(np.abs(model - steps / n0))
    after = np.max(np.abs((steps + 1.0) / n0 - model))
    return max(before, after, tail)


def _grid_distance(grid: np.ndarray, photons: np.ndarray, n0: float, gamma: float) -> float:
    model = -np.expm1(-gamma * grid)
    return float(np.max(np.abs(photons / n0 - model)))


def _species_photons(source, h: Species):
    """(kind, payload) where payload is sorted times or (grid, counts)."""
    if isinstance(source, EventStream):
        code = SPECIES_CODE[h]
        return "stream", np.sort(source.time[source.species == code])
    if isinstance(source, ClassifiedCounts):
        return "grid", (source.grid, source.photons(h))
    if isinstance(source, PopulationCurve):
        return "grid", (source.grid, source.photons(h))
    raise DomainError(
        "source must be an EventStream, ClassifiedCounts, or PopulationCurve"
    )


def product_model_distance(source, n0: float, h: Species, gamma: float) -> float:
    """Sup-norm distance of the species-h photon record from the one-species
    product model n0 (1 - exp(-gamma t)).

    For streams the supremum is exact; for gridded sources it is taken over
    the grid points.
    """
    if n0 <= 0:
        raise DomainError("n0 must be positive")
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    kind, payload = _species_photons(source, h)
    if kind == "stream":
        return _stream_distance(payload, n0, gamma)
    grid, photons = payload
    return _grid_distance(grid, np.asarray(photons, dtype=float), n0, gamma)


def _companion_mass(source, h: Species, n0: float) -> float:
    kind, payload = _species_photons(source, h)
    if kind == "stream":
        return payload.size / n0
    _, photons = payload
    return float(np.max(photons)) / n0 if len(photons) else 0.0


def detect(
    source,
    n0: float,
    reference: RateSet,
    threshold: float | None = None,
    min_pairs: int = MIN_PAIRS_DEFAULT,
) -> DetectionVerdict:
    """Decide whether photon data came from entangled pairs or product atoms.

    source may be an EventStream (identities not required), ClassifiedCounts,
    or a PopulationCurve.  reference supplies the calibrated free rates that
    parameterise the product hypotheses.  The verdict is Entangled above
    1.2 * threshold, Product below 0.8 * threshold, and Inconclusive inside
    the band or when fewer than min_pairs pairs were prepared.
    """
    if n0 < 1:
        raise DomainError("n0 must be at least 1")
    if threshold is None:
        threshold = default_threshold(n0)
    if not (threshold > 0.0 and math.isfinite(threshold)):
        raise DomainError("threshold must be finite and positive")

    distances: dict[str, float] = {}
    for h, gamma in ((Species.OR, reference.gamma_or), (Species.PA, reference.gamma_pa)):
        shape = product_model_distance(source, n0, h, gamma)
        mass = _companion_mass(source, h.companion(), n0)
        distances[f"shape_{h.value}"] = shape
        distances[f"mass_{h.companion().value}"] = mass
        distances[f"product_{h.value}"] = max(shape, mass)
    statistic = min(distances["product_or"], distances["product_pa"])

    fitted = None
    if isinstance(source, EventStream) and source.has_identities:
        try:
            fitted = estimate_rates(source, int(n0), min_pairs)
        except (UnclassifiableError, InsufficientDataError):
            fitted = None

    if n0 < min_pairs:
        return DetectionVerdict(
            verdict=Verdict.INCONCLUSIVE,
            statistic=statistic,
            threshold=threshold,
            distances=distances,
            fitted_rates=fitted,
            reason=f"sample size {n0:g} below minimum {min_pairs}",
        )
    if statistic > 1.2 * threshold:
        verdict = Verdict.ENTANGLED
        reason = ""
    elif statistic < 0.8 * threshold:
        verdict = Verdict.PRODUCT
        reason = ""
    else:
        verdict = Verdict.INCONCLUSIVE
        reason = "statistic inside the threshold band"
    return DetectionVerdict(
        verdict=verdict,
        statistic=statistic,
        threshold=threshold,
        distances=distances,
        fitted_rates=fitted,
        reason=reason,
    )
