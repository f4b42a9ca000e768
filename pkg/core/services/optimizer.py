"""
Throughput optimization over K and the sub-codeword lengths.

The search is a coarse grid (log-spaced K and l_(M), compositions for the
split of l_(M) across rounds) followed by integer coordinate descent with
halving steps. Candidates are scored with the problem's search estimator
(linearized by default); the incumbent, every refined seed and every raw
seed are then re-scored with the final estimator (oracle by default) and
the best one is returned. Ties go to the smaller l_(M), then the smaller K.
"""

import itertools
import logging
import math
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import EmptyFeasibleSet, HarqAnalysisError
from core.schemas.data_models import (
    ChannelSpec,
    DelayThresholdReport,
    GainReport,
    HarqScheme,
    OptimizationMode,
    OptimizationProblem,
    OutageMethod,
    OutageVector,
    ThroughputReport,
)
from core.services import harq_core
from core.services.outage import estimate_outages, omega_bounds

logger = logging.getLogger(__name__)

IMPROVEMENT_RTOL = 1e-12


class Candidate(NamedTuple):
    eta: float
    nats: int
    lengths: Tuple[int, ...]

    @property
    def total_length(self) -> int:
        return sum(self.lengths)


def _beats(challenger: Candidate, incumbent: Optional[Candidate]) -> bool:
    """Strictly better η, or equal η with smaller l_(M), then smaller K."""
    if incumbent is None:
        return True
    margin = IMPROVEMENT_RTOL * max(abs(incumbent.eta), np.finfo(float).tiny)
    if challenger.eta > incumbent.eta + margin:
        return True
    if challenger.eta < incumbent.eta - margin:
        return False
    return (challenger.total_length, challenger.nats, challenger.lengths) < (
        incumbent.total_length,
        incumbent.nats,
        incumbent.lengths,
    )


def compositions(levels: int, parts: int) -> List[Tuple[int, ...]]:
    """All ordered ways to write `levels` as a sum of `parts` positive integers."""
    if parts == 1:
        return [(levels,)]
    out = []
    for cuts in itertools.combinations(range(1, levels), parts - 1):
        bounds = (0,) + cuts + (levels,)
        out.append(tuple(bounds[i + 1] - bounds[i] for i in range(parts)))
    return out


def split_length(total: int, weights: Sequence[int]) -> Tuple[int, ...]:
    """Integer lengths proportional to weights; the remainder goes to the last round."""
    scale = total / sum(weights)
    head = [int(round(w * scale)) for w in weights[:-1]]
    return tuple(head + [total - sum(head)])


def _log_grid(lo: float, hi: float, points: int) -> List[int]:
    lo_i, hi_i = int(math.ceil(lo)), int(math.floor(hi))
    if hi_i < lo_i:
        return []
    if points == 1 or lo_i == hi_i:
        return [lo_i]
    values = np.geomspace(lo_i, hi_i, points)
    return sorted({min(hi_i, max(lo_i, int(round(v)))) for v in values})


class ThroughputSearch:
    """Grid + coordinate-descent search for one OptimizationProblem."""

    def __init__(self, problem: OptimizationProblem):
        self.problem = problem
        self.nats_bounds = (
            int(math.ceil(problem.nats_range[0])),
            int(math.floor(problem.nats_range[1])),
        )
        self.length_bounds = problem.lengths_bounds
        self._cache: Dict[Tuple[int, Tuple[int, ...]], float] = {}
        self.evaluations = 0

    @property
    def rounds(self) -> int:
        if self.problem.mode == OptimizationMode.OPEN_LOOP:
            return 1
        return self.problem.max_rounds

    def lengths_for(self, total: int, weights: Sequence[int]) -> Tuple[int, ...]:
        if self.problem.mode == OptimizationMode.OPEN_LOOP:
            return (total,)
        if self.problem.mode == OptimizationMode.FIXED_LENGTH:
            base = int(round(total / self.rounds))
            return tuple([base] * (self.rounds - 1) + [total - base * (self.rounds - 1)])
        return split_length(total, weights)

    def feasible(self, nats: int, lengths: Tuple[int, ...]) -> bool:
        lo, hi = self.length_bounds
        return (
            self.nats_bounds[0] <= nats <= self.nats_bounds[1]
            and lo <= sum(lengths) <= hi
            and min(lengths) >= self.problem.min_subcodeword_length
        )

    def scheme(self, nats: float, lengths: Tuple[int, ...]) -> HarqScheme:
        delay = 0.0
        if self.problem.mode != OptimizationMode.OPEN_LOOP:
            delay = self.problem.relative_delay * sum(lengths)
        return HarqScheme(
            nats=nats,
            lengths=lengths,
            feedback_delay=delay,
            min_subcodeword_length=self.problem.min_subcodeword_length,
        )

    def report(self, scheme: HarqScheme, method: OutageMethod) -> ThroughputReport:
        omegas = estimate_outages(scheme, self.problem.spec, method, fallback=True)
        return harq_core.throughput(scheme, omegas)

    def evaluate(self, nats: int, lengths: Tuple[int, ...]) -> Candidate:
        key = (nats, lengths)
        if key not in self._cache:
            eta = -math.inf
            if self.feasible(nats, lengths):
                self.evaluations += 1
                try:
                    eta = self.report(self.scheme(nats, lengths), self.problem.estimator).eta
                except HarqAnalysisError as exc:
                    logger.warning(f"skipping K={nats}, lengths={lengths}: {exc}")
            self._cache[key] = eta
        return Candidate(self._cache[key], nats, lengths)

    def coarse(self) -> Optional[Candidate]:
        problem = self.problem
        nats_grid = _log_grid(*self.nats_bounds, problem.nats_points)
        length_grid = _log_grid(*self.length_bounds, problem.length_points)
        splits = compositions(problem.split_levels, self.rounds)
        if problem.mode != OptimizationMode.VARIABLE_LENGTH:
            splits = [splits[0]]

        best = None
        for nats in nats_grid:
            for total in length_grid:
                for weights in splits:
                    candidate = self.evaluate(nats, self.lengths_for(total, weights))
                    if candidate.eta > -math.inf and _beats(candidate, best):
                        best = candidate
        return best

    def _moves(self, candidate: Candidate, step: int) -> Iterable[Tuple[int, Tuple[int, ...]]]:
        nats, lengths = candidate.nats, candidate.lengths
        for delta in (-step, step):
            yield nats + delta, lengths
        if self.problem.mode == OptimizationMode.VARIABLE_LENGTH:
            for index in range(len(lengths)):
                for delta in (-step, step):
                    moved = list(lengths)
                    moved[index] += delta
                    yield nats, tuple(moved)
            for index in range(len(lengths) - 1):
                for delta in (-step, step):
                    moved = list(lengths)
                    moved[index] += delta
                    moved[index + 1] -= delta
                    yield nats, tuple(moved)
        else:
            total = sum(lengths)
            for delta in (-step, step):
                yield nats, self.lengths_for(total + delta, ())

    def refine(self, start: Candidate) -> Candidate:
        """Integer coordinate descent; steps halve down to 1."""
        best = start
        step = max(1, max([best.nats] + list(best.lengths)) // 8)
        while True:
            improved = False
            for nats, lengths in self._moves(best, step):
                candidate = self.evaluate(nats, lengths)
                if candidate.eta > -math.inf and _beats(candidate, best) and candidate.eta > best.eta:
                    best = candidate
                    improved = True
            if not improved:
                if step == 1:
                    return best
                step = max(1, step // 2)

    def as_candidate(self, scheme: HarqScheme) -> Optional[Candidate]:
        nats = int(round(scheme.nats))
        lengths = (scheme.total_length,) if self.rounds == 1 else tuple(scheme.lengths)
        if len(lengths) != self.rounds:
            return None
        candidate = self.evaluate(nats, lengths)
        return candidate if candidate.eta > -math.inf else None


def optimize_throughput(
    problem: OptimizationProblem,
    seeds: Sequence[HarqScheme] = (),
) -> Tuple[HarqScheme, ThroughputReport]:
    """
    Best scheme for the problem. Seeds are extra starting points (for
    instance the fixed-length optimum when searching variable lengths);
    they are refined and also kept as they are among the final candidates.
    """
    search = ThroughputSearch(problem)
    lo, hi = search.length_bounds
    if hi < problem.min_subcodeword_length * search.rounds or search.nats_bounds[1] < search.nats_bounds[0]:
        raise EmptyFeasibleSet(
            f"no {search.rounds}-round scheme fits lengths {search.length_bounds} "
            f"and K in {problem.nats_range}"
        )

    starts = []
    coarse = search.coarse()
    if coarse is not None:
        starts.append(coarse)
    raw_seeds = [c for c in (search.as_candidate(s) for s in seeds) if c is not None]
    starts.extend(raw_seeds)
    if not starts:
        raise EmptyFeasibleSet(f"no feasible scheme for {problem.mode.value} search")

    finalists = {(c.nats, c.lengths) for c in raw_seeds}
    for start in starts:
        refined = search.refine(start)
        finalists.add((refined.nats, refined.lengths))
    logger.info(
        f"{problem.mode.value} search at P={problem.spec.snr:.6g}: "
        f"{search.evaluations} evaluations, {len(finalists)} finalists"
    )

    best: Optional[Candidate] = None
    best_pair = None
    for nats, lengths in sorted(finalists):
        scheme = search.scheme(float(nats), lengths)
        try:
            report = search.report(scheme, problem.final_estimator)
        except HarqAnalysisError as exc:
            logger.warning(f"final evaluation failed for K={nats}, lengths={lengths}: {exc}")
            continue
        candidate = Candidate(report.eta, nats, lengths)
        if _beats(candidate, best):
            best = candidate
            best_pair = (scheme, report)
    if best_pair is None:
        raise EmptyFeasibleSet("every finalist failed its final evaluation")
    return best_pair


def throughput_gain(
    spec: ChannelSpec,
    max_rounds: int,
    relative_delay: float,
    nats: float,
    **problem_options,
) -> GainReport:
    """
    Δ = 100 (η - η_open-loop)/η_open-loop for fixed K, where η is the
    optimized variable-length HARQ throughput and the open-loop baseline
    uses its own optimized l_(M).
    """
    open_problem = OptimizationProblem(
        spec=spec,
        max_rounds=max_rounds,
        mode=OptimizationMode.OPEN_LOOP,
        nats_range=(nats, nats),
        **problem_options,
    )
    open_scheme, open_report = optimize_throughput(open_problem)

    # With M = 1 both searches are the same search; a seed would only perturb it.
    seeds = []
    if max_rounds > 1:
        try:
            seeds.append(
                HarqScheme.fixed_length(
                    nats,
                    open_scheme.total_length,
                    max_rounds,
                    feedback_delay=relative_delay * open_scheme.total_length,
                    min_subcodeword_length=open_problem.min_subcodeword_length,
                )
            )
        except ValueError:
            logger.debug("open-loop optimum cannot be split into valid sub-codewords")

    harq_problem = open_problem.model_copy(
        update={"mode": OptimizationMode.VARIABLE_LENGTH, "relative_delay": relative_delay}
    )
    scheme, report = optimize_throughput(harq_problem, seeds=seeds)
    gain = 100.0 * (report.eta - open_report.eta) / open_report.eta
    return GainReport(
        gain_percent=gain,
        eta=report.eta,
        eta_open_loop=open_report.eta,
        scheme=scheme,
        open_loop_scheme=open_scheme,
    )


def usefulness_threshold(omegas: OutageVector) -> float:
    """r = (1 - (1/M) Σ_(m=1..M) Ω_(m-1)) / Σ_(m=1..M-1) Ω_(m-1)."""
    rounds = omegas.rounds
    if rounds < 2:
        raise ValueError("the delay threshold needs at least two rounds")
    with_zero = omegas.with_round_zero()
    numerator = 1.0 - math.fsum(with_zero[:rounds]) / rounds
    return numerator / math.fsum(with_zero[: rounds - 1])


def threshold_from_outages(values: Sequence[float], rounds: int) -> float:
    """(M - 1 - Σ_(m<M) Ω_m) / (M (1 + Σ_(m<M-1) Ω_m)); used with u_m or v_m."""
    if rounds < 2:
        raise ValueError("the delay threshold needs at least two rounds")
    head = list(values[: rounds - 1])
    return (rounds - 1 - math.fsum(head)) / (rounds * (1.0 + math.fsum(head[: rounds - 2])))


def delay_threshold(
    spec: ChannelSpec,
    max_rounds: int,
    nats: float,
    estimator: OutageMethod = OutageMethod.ORACLE,
    search_estimator: OutageMethod = OutageMethod.LINEARIZED,
    eps_grid: Optional[Sequence[float]] = None,
    **problem_options,
) -> DelayThresholdReport:
    """
    Sufficient-condition threshold on D^f for fixed-length HARQ at the
    open-loop-optimal l_(M), with the bounds obtained from u_m (lower end)
    and v_m (upper end). A negative r is reported as is.
    """
    if max_rounds < 2:
        raise ValueError("the delay threshold needs at least two rounds")
    final = estimator if estimator in (
        OutageMethod.ORACLE,
        OutageMethod.HIGH_SNR,
        OutageMethod.LINEARIZED,
    ) else OutageMethod.ORACLE
    problem = OptimizationProblem(
        spec=spec,
        max_rounds=max_rounds,
        mode=OptimizationMode.OPEN_LOOP,
        nats_range=(nats, nats),
        estimator=search_estimator,
        final_estimator=final,
        **problem_options,
    )
    open_scheme, open_report = optimize_throughput(problem)
    scheme = HarqScheme.fixed_length(
        nats,
        open_scheme.total_length,
        max_rounds,
        min_subcodeword_length=problem.min_subcodeword_length,
    )

    omegas = estimate_outages(scheme, spec, estimator, fallback=True, eps_grid=eps_grid)
    bounds = [omega_bounds(geom, spec, eps_grid=eps_grid) for geom in scheme.geometries()]
    lower = OutageVector(values=tuple(v.value for v, _ in bounds), method=OutageMethod.LOWER_BOUND)
    upper = OutageVector(values=tuple(u.value for _, u in bounds), method=OutageMethod.UPPER_BOUND)
    linearized = estimate_outages(scheme, spec, OutageMethod.LINEARIZED)

    return DelayThresholdReport(
        r=usefulness_threshold(omegas),
        r_lower=threshold_from_outages(upper.values, max_rounds),
        r_upper=threshold_from_outages(lower.values, max_rounds),
        r_linearized=usefulness_threshold(linearized),
        omegas=omegas,
        lower_omegas=lower,
        upper_omegas=upper,
        scheme=scheme,
        open_loop_eta=open_report.eta,
    )
