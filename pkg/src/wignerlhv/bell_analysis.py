"""Monte Carlo estimation of the Bell correlation, CHSH parameter and negativity.

The correlation for one analyzer pair is the normalised four-product ratio

    E = (<R+R+> + <R-R-> - <R+R-> - <R-R+>) / (<R+R+> + <R-R-> + <R+R-> + <R-R+>)

(first sign on side A) of per-sample count-rate products, and
``S = E(a,b) - E(a,b') + E(a',b) + E(a',b')``. Each analyzer pair is run on
its own substream. Samples are processed in chunks; the error of E is the
delete-one-chunk jackknife, and the four E values are independent so their
errors add in quadrature for S.

Sums are compensated (Neumaier) across blocks inside a chunk and chunks
are combined in index order, so results do not depend on how many worker
threads produced the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDenominator
from .gaussian_core import DEFAULT_BLOCK, CovarianceModel, build_covariance, iter_sample_blocks
from .lhv_model import (
    CHSH_SIGNS,
    RATE_NAMES,
    AnalyzerSettings,
    BellAngles,
    CountRatePair,
    Representation,
    chsh,
    count_rates,
    quadrature_realities,
)
from .rng import RandomStream

WORKERS_ENV = "WIGNERLHV_WORKERS"
DEFAULT_CHUNKS = 32
DEFAULT_EPSILON = 1e-12

# slots of the per-chunk moment vector
_PROD = slice(0, 4)  # ++, --, +-, -+
_PROD_SQ = slice(4, 8)
_RATE = slice(8, 12)
_ABS_DEN = 12
_N_MOMENTS = 13


def default_workers() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {env!r}") from None
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {env!r}")
        return value
    return min(os.cpu_count() or 1, 8)


def _neumaier(total: np.ndarray, comp: np.ndarray, x: np.ndarray) -> None:
    t = total + x
    big = np.abs(total) >= np.abs(x)
    comp += np.where(big, (total - t) + x, (x - t) + total)
    total[...] = t


@dataclass
class _Chunk:
    n: int = 0
    total: np.ndarray = field(default_factory=lambda: np.zeros(_N_MOMENTS))
    comp: np.ndarray = field(default_factory=lambda: np.zeros(_N_MOMENTS))
    negatives: np.ndarray = field(default_factory=lambda: np.zeros(4, dtype=np.int64))

    def sums(self) -> np.ndarray:
        return self.total + self.comp


class JointMomentAccumulator:
    """Product and rate sums of one analyzer pair, kept per chunk.

    ``add`` feeds the current (last) chunk; ``new_chunk`` starts another.
    ``merge`` concatenates chunk lists, so merging chunk accumulators in
    index order equals accumulating the concatenated stream chunk by chunk.
    """

    def __init__(self, representation):
        self.representation = Representation.parse(representation)
        self.chunks: list[_Chunk] = []

    def new_chunk(self) -> JointMomentAccumulator:
        self.chunks.append(_Chunk())
        return self

    def add(self, rates: CountRatePair) -> JointMomentAccumulator:
        if rates.representation is not self.representation:
            raise ValueError(
                f"accumulator holds {self.representation.value} rates, got {rates.representation.value}"
            )
        pa, ma, pb, mb = (np.asarray(r, dtype=np.float64).ravel() for r in rates.as_tuple())
        if not all(np.all(np.isfinite(r)) for r in (pa, ma, pb, mb)):
            raise ValueError("count rates must be finite")
        if not self.chunks:
            self.new_chunk()
        chunk = self.chunks[-1]
        block = np.empty(_N_MOMENTS)
        products = (pa * pb, ma * mb, pa * mb, ma * pb)
        for k, p in enumerate(products):
            block[k] = p.sum()
            block[4 + k] = np.dot(p, p)
        for k, r in enumerate((pa, ma, pb, mb)):
            block[8 + k] = r.sum()
            chunk.negatives[k] += np.count_nonzero(r < 0)
        block[_ABS_DEN] = np.abs((pa + ma) * (pb + mb)).sum()
        _neumaier(chunk.total, chunk.comp, block)
        chunk.n += pa.size
        return self

    def merge(self, other: JointMomentAccumulator) -> JointMomentAccumulator:
        if other.representation is not self.representation:
            raise ValueError("cannot merge accumulators of different representations")
        out = JointMomentAccumulator(self.representation)
        out.chunks = [*self.chunks, *other.chunks]
        return out

    @property
    def n(self) -> int:
        return sum(c.n for c in self.chunks)

    @property
    def negatives(self) -> np.ndarray:
        out = np.zeros(4, dtype=np.int64)
        for c in self.chunks:
            out += c.negatives
        return out

    def totals(self) -> np.ndarray:
        total = np.zeros(_N_MOMENTS)
        comp = np.zeros(_N_MOMENTS)
        for c in self.chunks:
            _neumaier(total, comp, c.total)
            _neumaier(total, comp, c.comp)
        return total + comp

    @property
    def product_sums(self) -> np.ndarray:
        return self.totals()[_PROD]

    @property
    def product_square_sums(self) -> np.ndarray:
        return self.totals()[_PROD_SQ]

    @property
    def rate_sums(self) -> np.ndarray:
        return self.totals()[_RATE]

    def product_means(self) -> np.ndarray:
        return self.product_sums / self.n

    def rate_means(self) -> np.ndarray:
        return self.rate_sums / self.n

    def negative_fractions(self) -> np.ndarray:
        return self.negatives / self.n


def accumulate(acc: JointMomentAccumulator, rates: CountRatePair | Iterable[CountRatePair]) -> JointMomentAccumulator:
    """Add one block, or a stream of blocks, of rates to ``acc``."""
    if isinstance(rates, CountRatePair):
        return acc.add(rates)
    for block in rates:
        acc.add(block)
    return acc


def merge_all(accs: Sequence[JointMomentAccumulator]) -> JointMomentAccumulator:
    """Left fold of ``merge`` in the given order."""
    if not accs:
        raise ValueError("nothing to merge")
    out = accs[0]
    for acc in accs[1:]:
        out = out.merge(acc)
    return out


def _ratio(sums: np.ndarray, n: int, epsilon: float) -> float:
    num = sums[0] + sums[1] - sums[2] - sums[3]
    den = sums[0] + sums[1] + sums[2] + sums[3]
    # |sum D| below epsilon * n * mean|D|
    if not abs(den) > epsilon * sums[_ABS_DEN]:
        raise DegenerateDenominator(f"denominator {den:.3e} is below {epsilon:g} x n x mean|D| over {n} samples")
    return num / den


def correlation_E(acc: JointMomentAccumulator, epsilon: float = DEFAULT_EPSILON) -> tuple[float, float]:
    """Correlation and its delete-one-chunk jackknife standard error."""
    if acc.n < 2:
        raise ValueError("need at least two samples")
    k = len(acc.chunks)
    if k < 2:
        raise ValueError("need at least two chunks for an error estimate")
    total = acc.totals()
    e = _ratio(total, acc.n, epsilon)
    leave_out = np.empty(k)
    for i, c in enumerate(acc.chunks):
        leave_out[i] = _ratio(total - c.sums(), acc.n - c.n, epsilon)
    spread = leave_out - leave_out.mean()
    stderr = math.sqrt((k - 1) / k * float(np.dot(spread, spread)))
    return float(e), stderr


def chunk_sizes(n: int, chunks: int) -> list[int]:
    """Split ``n`` into ``chunks`` near-equal parts, larger parts first."""
    n, chunks = int(n), int(chunks)
    if chunks < 1:
        raise ValueError("chunks must be >= 1")
    if n < chunks:
        raise ValueError(f"n = {n} is smaller than the number of chunks ({chunks})")
    base, extra = divmod(n, chunks)
    return [base + (1 if i < extra else 0) for i in range(chunks)]


def _map_chunks(fn, n_chunks: int, workers: int | None):
    workers = default_workers() if workers is None else int(workers)
    if workers <= 1 or n_chunks == 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))


def run_pair(
    model: CovarianceModel,
    settings: AnalyzerSettings,
    representations: Sequence,
    n: int,
    stream: RandomStream,
    chunks: int = DEFAULT_CHUNKS,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> dict[Representation, JointMomentAccumulator]:
    """Accumulate one analyzer pair; chunk ``i`` draws from ``stream.child(i)``.

    Several representations are fed from the same hidden-variable samples.
    """
    reps = [Representation.parse(r) for r in representations]
    sizes = chunk_sizes(n, chunks)

    def work(i: int) -> dict[Representation, JointMomentAccumulator]:
        accs = {r: JointMomentAccumulator(r).new_chunk() for r in reps}
        for e in iter_sample_blocks(model, stream.child(i), sizes[i], block):
            for r in reps:
                accs[r].add(count_rates(e, settings, r))
        return accs

    parts = _map_chunks(work, len(sizes), workers)
    return {r: merge_all([p[r] for p in parts]) for r in reps}


@dataclass(frozen=True)
class BellEstimate:
    e_values: tuple[float, float, float, float]
    e_stderr: tuple[float, float, float, float]
    s_value: float
    s_stderr: float
    n: int
    representation: str
    angles: BellAngles
    negative_fractions: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.s_value != chsh(self.e_values):
            raise ValueError("s_value must be the CHSH combination of e_values")


def _estimate_from_accs(accs, angles, label, epsilon, n) -> BellEstimate:
    es, ses = zip(*(correlation_E(a, epsilon) for a in accs))
    negatives = sum(a.negatives for a in accs)
    count = sum(a.n for a in accs)
    return BellEstimate(
        e_values=tuple(es),
        e_stderr=tuple(ses),
        s_value=chsh(es),
        s_stderr=math.sqrt(sum(se * se for se in ses)),
        n=n,
        representation=label,
        angles=angles,
        negative_fractions=tuple(float(x) for x in negatives / count),
    )


def bell_S_multi(
    model: CovarianceModel,
    angles: BellAngles,
    representations: Sequence,
    n: int,
    stream: RandomStream,
    chunks: int = DEFAULT_CHUNKS,
    epsilon: float = DEFAULT_EPSILON,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> dict[Representation, BellEstimate]:
    """:func:`bell_S` for several representations sharing the same samples."""
    reps = [Representation.parse(r) for r in representations]
    if model.chi == 0.0:
        raise DegenerateDenominator("every product moment vanishes at chi = 0")
    runs = [
        run_pair(model, settings, reps, n, stream.child(k), chunks, workers, block)
        for k, settings in enumerate(angles.pairs())
    ]
    return {r: _estimate_from_accs([run[r] for run in runs], angles, r.value, epsilon, n) for r in reps}


def bell_S(
    model: CovarianceModel,
    angles: BellAngles,
    representation,
    n: int,
    stream: RandomStream,
    chunks: int = DEFAULT_CHUNKS,
    epsilon: float = DEFAULT_EPSILON,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> BellEstimate:
    """CHSH parameter from ``n`` samples per analyzer pair.

    Pair ``k`` (CHSH order) uses ``stream.child(k)``, so the four correlations
    are independent and both representations see the same samples for the
    same stream. Raises :class:`DegenerateDenominator` at ``chi = 0``, where
    the correlation is 0/0.
    """
    rep = Representation.parse(representation)
    return bell_S_multi(model, angles, [rep], n, stream, chunks, epsilon, workers, block)[rep]


def sign_bell_S(
    model: CovarianceModel,
    angles: BellAngles,
    n: int,
    stream: RandomStream,
    chunks: int = DEFAULT_CHUNKS,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> BellEstimate:
    """CHSH parameter of the +-1 observables sign(X_A+;1), sign(X_B+;1).

    These are genuine local observables of the same hidden variables, so
    |S| <= 2 holds for them. Errors are batch means over chunks.
    """
    sizes = chunk_sizes(n, chunks)
    es, ses = [], []
    for k, settings in enumerate(angles.pairs()):
        pair_stream = stream.child(k)

        def work(i: int, settings=settings, pair_stream=pair_stream) -> float:
            total = 0
            for e in iter_sample_blocks(model, pair_stream.child(i), sizes[i], block):
                q = quadrature_realities(e, settings)
                total += int(np.sum(np.sign(q.x_a_plus[:, 0]) * np.sign(q.x_b_plus[:, 0])))
            return total

        totals = np.array(_map_chunks(work, len(sizes), workers), dtype=np.float64)
        means = totals / np.array(sizes)
        es.append(float(totals.sum() / n))
        ses.append(float(means.std(ddof=1) / math.sqrt(len(sizes))))
    return BellEstimate(
        e_values=tuple(es),
        e_stderr=tuple(ses),
        s_value=chsh(es),
        s_stderr=math.sqrt(sum(se * se for se in ses)),
        n=n,
        representation="sign",
        angles=angles,
    )


@dataclass(frozen=True)
class PositivityReport:
    representation: Representation
    n: int
    fractions: dict[str, float]
    stderr: dict[str, float]


def positivity_report(
    model: CovarianceModel,
    settings: AnalyzerSettings,
    representation,
    n: int,
    stream: RandomStream,
    chunks: int = 1,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> PositivityReport:
    """Fraction of samples with each rate below zero, with binomial errors."""
    rep = Representation.parse(representation)
    if int(n) < 1:
        raise ValueError("n must be >= 1")
    acc = run_pair(model, settings, [rep], n, stream, chunks, workers, block)[rep]
    fracs = acc.negative_fractions()
    return PositivityReport(
        representation=rep,
        n=acc.n,
        fractions={name: float(f) for name, f in zip(RATE_NAMES, fracs)},
        stderr={name: math.sqrt(f * (1.0 - f) / acc.n) for name, f in zip(RATE_NAMES, fracs)},
    )


@dataclass(frozen=True)
class SweepRow:
    chi: float
    estimate: BellEstimate | None
    status: str = "ok"


def sweep_chi(
    chi_grid: Sequence[float],
    angles: BellAngles,
    representation,
    n: int,
    stream: RandomStream,
    chunks: int = DEFAULT_CHUNKS,
    epsilon: float = DEFAULT_EPSILON,
    workers: int | None = None,
    block: int = DEFAULT_BLOCK,
) -> list[SweepRow]:
    """One :func:`bell_S` per grid point; row ``i`` uses ``stream.offset(i)``.

    A failing row records the exception name as its status and the sweep
    carries on. A one-point grid reproduces :func:`bell_S` exactly.
    """
    if len(chi_grid) == 0:
        raise ValueError("chi grid is empty")
    rows = []
    for i, chi in enumerate(chi_grid):
        try:
            est = bell_S(build_covariance(chi), angles, representation, n, stream.offset(i), chunks, epsilon, workers, block)
        except (DegenerateDenominator, ValueError) as exc:
            rows.append(SweepRow(float(chi), None, type(exc).__name__))
        else:
            rows.append(SweepRow(float(chi), est))
    return rows


__all__ = [
    "CHSH_SIGNS",
    "BellEstimate",
    "JointMomentAccumulator",
    "PositivityReport",
    "SweepRow",
    "accumulate",
    "bell_S",
    "bell_S_multi",
    "correlation_E",
    "merge_all",
    "positivity_report",
    "run_pair",
    "sign_bell_S",
    "sweep_chi",
]
