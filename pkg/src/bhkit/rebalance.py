"""Bottom-heavy synthesis: delay stem downsampling, then redistribute block
repeats under a total-MACs parity constraint.

The search enumerates every repeat vector within bounds, keeps candidates
whose total MACs stay within ``parity_tolerance`` of the base architecture,
and among those maximizes the fraction of MACs spent before the pivot (the
stage boundary where cumulative stride first reaches 8, i.e. right after the
third halving of resolution). Ties go to fewer parameters, then to the
lexicographically larger repeat vector counted from stage 1 outward, which
makes the result a deterministic function of the problem.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

from .arch import CONV, MAXPOOL, ArchSpec, conv, instantiate_layers, maxpool, require_valid
from .cost import CostReport, TensorShape, analyze, block_costs, total_stride

PIVOT_STRIDE = 8  # cumulative stride after the third halving


class InfeasibleSearchError(ValueError):
    """No repeat vector within bounds satisfies the parity constraint."""

    def __init__(self, message: str, closest_repeats: tuple[int, ...], closest_parity_error: float):
        self.closest_repeats = closest_repeats
        self.closest_parity_error = closest_parity_error
        super().__init__(message)


@dataclass(frozen=True)
class RebalanceProblem:
    """Inputs of one rebalancing run.

    ``repeat_bounds`` is either one inclusive (lo, hi) range applied to every
    stage or one range per stage. ``pivot`` is a stage boundary index
    (number of stages in the early region); None derives it from the stride
    ladder of the stem-transformed base.
    """

    base: ArchSpec
    input_shape: TensorShape
    parity_tolerance: float = 0.02
    repeat_bounds: tuple = (1, 16)
    pivot: int | None = None

    def __post_init__(self) -> None:
        if not 0 < self.parity_tolerance <= 0.2:
            raise ValueError(f"parity_tolerance must be in (0, 0.2], got {self.parity_tolerance}")
        for lo, hi in self.bounds_per_stage():
            if lo < 1 or hi < lo:
                raise ValueError(f"bad repeat bounds ({lo}, {hi})")
        if self.pivot is not None and not 0 <= self.pivot <= len(self.base.stages):
            raise ValueError(f"pivot {self.pivot} outside stage range")

    def bounds_per_stage(self) -> tuple[tuple[int, int], ...]:
        n = len(self.base.stages)
        bounds = tuple(self.repeat_bounds)
        if len(bounds) == 2 and all(isinstance(b, int) for b in bounds):
            return tuple((bounds[0], bounds[1]) for _ in range(n))
        if len(bounds) != n:
            raise ValueError(f"need one (lo, hi) per stage ({n}), got {len(bounds)}")
        return tuple((int(lo), int(hi)) for lo, hi in bounds)


@dataclass(frozen=True)
class RebalanceResult:
    bh_arch: ArchSpec
    repeats: tuple[int, ...]
    parity_error: float
    early_share: float
    params: int
    candidates_examined: int
    report: CostReport


def find_pivot(arch: ArchSpec) -> int:
    """Stage boundary right after the third cumulative halving of resolution.

    Returns the number of stages in the early region: 0 means the third
    halving already happened in the stem; k means it happens inside stage k.
    """
    require_valid(arch)
    ladder = total_stride(arch)
    for boundary, cum in enumerate(ladder.cumulative):
        if cum >= PIVOT_STRIDE:
            return boundary  # cumulative[0] is the stem boundary
    raise ValueError(
        f"{arch.name}: fewer than three downsamplings on the main path (total stride {ladder.total})"
    )


def transform_stem(arch: ArchSpec) -> ArchSpec:
    """Delay the stem's first downsampling while preserving total stride.

    The first stride-2 stem conv becomes a 3x3 stride-1 conv with the same
    output channels. If the stem already contains a pooling layer, the removed
    stride migrates into stage 1's first_block_stride; otherwise (all-conv
    stems) a 3x3 stride-2 max-pool is appended to absorb it.
    """
    require_valid(arch)
    idx = next(
        (i for i, layer in enumerate(arch.stem) if layer.kind == CONV and layer.stride == 2),
        None,
    )
    if idx is None:
        raise ValueError(f"{arch.name}: stem has no stride-2 conv to relax")
    old = arch.stem[idx]
    stem = list(arch.stem)
    stem[idx] = conv(3, old.out_channels, stride=1, norm=old.has_norm, bias=old.has_bias)

    stages = list(arch.stages)
    if any(layer.kind == MAXPOOL for layer in arch.stem):
        first = stages[0]
        template = replace(
            first.block_template,
            first_block_stride=first.block_template.first_block_stride * 2,
        )
        stages[0] = replace(first, block_template=template)
    else:
        stem.append(maxpool(3, stride=2))

    return replace(arch, name=f"bh-{arch.name}", stem=tuple(stem), stages=tuple(stages))


@dataclass(frozen=True)
class _StageTerms:
    """Linear cost model of one stage: cost(r) = first + (r - 1) * extra."""

    first_params: int
    first_macs: int
    extra_params: int
    extra_macs: int


def _stage_terms(arch: ArchSpec, input_shape: TensorShape) -> tuple[int, int, list[_StageTerms]]:
    """(stem_params, stem_macs, per-stage linear terms) for candidate scoring.

    Valid whenever repeats only rescale a stage linearly, i.e. no layer except
    the stride carrier downsamples; checked by the caller.
    """
    probe = replace(
        arch,
        stages=tuple(replace(s, repeats=2) for s in arch.stages),
    )
    (stem_params, stem_macs), blocks = block_costs(probe, input_shape)
    terms: list[_StageTerms] = []
    for stage in arch.stages:
        first = [b for b in blocks if b.stage_name == stage.name and b.index == 0]
        extra = [b for b in blocks if b.stage_name == stage.name and b.index == 1]
        terms.append(
            _StageTerms(
                first_params=first[0].params,
                first_macs=first[0].macs,
                extra_params=extra[0].params,
                extra_macs=extra[0].macs,
            )
        )
    return stem_params, stem_macs, terms


def _repeats_are_linear(arch: ArchSpec) -> bool:
    for stage in arch.stages:
        layers = instantiate_layers(stage.block_template, first=False)
        if any(layer.stride != 1 for layer in layers):
            return False
    return True


def _with_repeats(arch: ArchSpec, repeats: tuple[int, ...]) -> ArchSpec:
    return replace(
        arch,
        stages=tuple(replace(s, repeats=r) for s, r in zip(arch.stages, repeats)),
    )


def rebalance(problem: RebalanceProblem) -> RebalanceResult:
    """Exhaustive search for the best bottom-heavy repeat vector.

    Deterministic: feasible candidates are ranked by (max early MACs share,
    min params, lexicographically larger repeats). Raises
    InfeasibleSearchError, reporting the closest candidate, when no repeat
    vector meets the parity tolerance.
    """
    require_valid(problem.base)
    if len(problem.base.stages) < 2:
        raise ValueError("rebalance needs a base with at least 2 stages")
    bounds = problem.bounds_per_stage()

    base_macs = analyze(problem.base, problem.input_shape).total_macs
    bh0 = transform_stem(problem.base)
    pivot = problem.pivot if problem.pivot is not None else find_pivot(bh0)

    if _repeats_are_linear(bh0):
        stem_params, stem_macs, terms = _stage_terms(bh0, problem.input_shape)

        def score(repeats: tuple[int, ...]) -> tuple[int, int, int]:
            params = stem_params
            macs = stem_macs
            early = stem_macs
            for i, (r, t) in enumerate(zip(repeats, terms)):
                p = t.first_params + (r - 1) * t.extra_params
                m = t.first_macs + (r - 1) * t.extra_macs
                params += p
                macs += m
                if i < pivot:
                    early += m
            return params, macs, early

    else:
        # A non-carrier layer strides, so stage cost is not linear in repeats;
        # fall back to a full analysis per candidate.
        def score(repeats: tuple[int, ...]) -> tuple[int, int, int]:
            report = analyze(_with_repeats(bh0, repeats), problem.input_shape)
            early = sum(s.macs for s in report.per_stage[: pivot + 1])  # per_stage[0] is the stem
            return report.total_params, report.total_macs, early

    tolerance_macs = problem.parity_tolerance * base_macs
    best: tuple[tuple[int, ...], int, int, int] | None = None  # repeats, params, macs, early
    closest: tuple[int, tuple[int, ...]] | None = None  # |macs - base|, repeats
    examined = 0

    def better(cand, incumbent) -> bool:
        c_repeats, c_params, c_macs, c_early = cand
        i_repeats, i_params, i_macs, i_early = incumbent
        # early/total compared exactly via cross-multiplication
        lhs = c_early * i_macs
        rhs = i_early * c_macs
        if lhs != rhs:
            return lhs > rhs
        if c_params != i_params:
            return c_params < i_params
        return c_repeats > i_repeats

    for repeats in itertools.product(*(range(lo, hi + 1) for lo, hi in bounds)):
        examined += 1
        params, macs, early = score(repeats)
        gap = abs(macs - base_macs)
        if closest is None or (gap, repeats) < (closest[0], closest[1]):
            closest = (gap, repeats)
        if gap > tolerance_macs:
            continue
        cand = (repeats, params, macs, early)
        if best is None or better(cand, best):
            best = cand

    if best is None:
        gap, repeats = closest
        err = gap / base_macs
        raise InfeasibleSearchError(
            f"no repeat vector within bounds meets parity tolerance "
            f"{problem.parity_tolerance:.4f}; closest is {repeats} at parity error {err:.4f}",
            closest_repeats=repeats,
            closest_parity_error=err,
        )

    repeats = best[0]
    bh_arch = _with_repeats(bh0, repeats)
    report = analyze(bh_arch, problem.input_shape)
    if report.total_macs != best[2] or report.total_params != best[1]:
        raise AssertionError("incremental candidate scoring disagrees with full analysis")
    early_macs = sum(s.macs for s in report.per_stage[: pivot + 1])
    return RebalanceResult(
        bh_arch=bh_arch,
        repeats=repeats,
        parity_error=abs(report.total_macs - base_macs) / base_macs,
        early_share=early_macs / report.total_macs,
        params=report.total_params,
        candidates_examined=examined,
        report=report,
    )


@dataclass(frozen=True)
class FeasibleCandidate:
    repeats: tuple[int, ...]
    params: int
    macs: int
    parity_error: float
    early_share: float


def enumerate_feasible(problem: RebalanceProblem) -> list[FeasibleCandidate]:
    """All parity-feasible repeat vectors, in enumeration order (for inspection)."""
    require_valid(problem.base)
    bounds = problem.bounds_per_stage()
    base_macs = analyze(problem.base, problem.input_shape).total_macs
    bh0 = transform_stem(problem.base)
    pivot = problem.pivot if problem.pivot is not None else find_pivot(bh0)

    out: list[FeasibleCandidate] = []
    for repeats in itertools.product(*(range(lo, hi + 1) for lo, hi in bounds)):
        report = analyze(_with_repeats(bh0, repeats), problem.input_shape)
        gap = abs(report.total_macs - base_macs)
        if gap > problem.parity_tolerance * base_macs:
            continue
        early = sum(s.macs for s in report.per_stage[: pivot + 1])
        out.append(
            FeasibleCandidate(
                repeats=repeats,
                params=report.total_params,
                macs=report.total_macs,
                parity_error=gap / base_macs,
                early_share=early / report.total_macs,
            )
        )
    return out


@dataclass(frozen=True)
class StageShareDelta:
    name: str
    base_share: float
    variant_share: float

    @property
    def delta(self) -> float:
        return self.variant_share - self.base_share


@dataclass(frozen=True)
class ComparisonRecord:
    """Side-by-side cost comparison of two architectures at one input size."""

    base_name: str
    variant_name: str
    base_params: int
    variant_params: int
    base_macs: int
    variant_macs: int
    shares: tuple[StageShareDelta, ...]
    base_ladder: tuple[int, ...]
    variant_ladder: tuple[int, ...]

    @property
    def d_params(self) -> int:
        return self.variant_params - self.base_params

    @property
    def d_gflops(self) -> float:
        return (self.variant_macs - self.base_macs) / 1e9


def compare(base: ArchSpec, variant: ArchSpec, input_shape: TensorShape) -> ComparisonRecord:
    """Delta report: params, GFLOPs, per-stage share shifts, stride ladders."""
    base_report = analyze(base, input_shape)
    variant_report = analyze(variant, input_shape)
    if len(base_report.per_stage) != len(variant_report.per_stage):
        raise ValueError(
            f"cannot compare stage-wise: {base.name} has {len(base.stages)} stages, "
            f"{variant.name} has {len(variant.stages)}"
        )
    shares = tuple(
        StageShareDelta(
            name=b.name if b.name == v.name else f"{b.name}/{v.name}",
            base_share=b.macs_share,
            variant_share=v.macs_share,
        )
        for b, v in zip(base_report.per_stage, variant_report.per_stage)
    )
    return ComparisonRecord(
        base_name=base.name,
        variant_name=variant.name,
        base_params=base_report.total_params,
        variant_params=variant_report.total_params,
        base_macs=base_report.total_macs,
        variant_macs=variant_report.total_macs,
        shares=shares,
        base_ladder=total_stride(base).cumulative,
        variant_ladder=total_stride(variant).cumulative,
    )
