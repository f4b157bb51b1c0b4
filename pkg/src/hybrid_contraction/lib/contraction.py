"""Sampling-based contraction certificates for hybrid systems.

A system is certified when every sampled flow Jacobian has matrix measure at most ``c`` in its mode norm and every
sampled saltation matrix is nonexpansive between the source and target norms. When resets expand, a dwell-time
envelope can still bound how far trajectories separate.
"""

import logging
import math
from collections.abc import Callable
from enum import StrEnum
from typing import Any
from typing import Self

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import model_validator
from scipy.optimize import minimize

from .arrays import FloatArray
from .arrays import Vector
from .config import DistanceOptions
from .config import GuardPoint
from .config import IntegratorOptions
from .config import SamplingPlan
from .config import transition_label
from .constants import NONEXPANSIVE_TOLERANCE
from .distance import distance
from .exceptions import ConfigurationError
from .exceptions import EvaluatorError
from .exceptions import GrazingError
from .exceptions import SimulationError
from .exceptions import TransversalityError
from .model import HybridState
from .model import HybridSystemSpec
from .model import ModeSpec
from .model import TransitionKey
from .model import jacobian_of_field
from .norms import NormKind
from .norms import matrix_measure
from .norms import norms_equal
from .norms import vector_norm
from .sampling import sample_guard_points
from .sampling import sample_mode_states
from .simulator import HybridTrajectory
from .simulator import TrajectoryStatus
from .simulator import simulate
from .variational import saltation

logger = logging.getLogger(__name__)

_REFINE_ITERATIONS_PER_DIM = 200
_ALIGNMENT_TOLERANCE = 1e-9
_IDENTITY_TOLERANCE = 1e-9
_PROP_LOWER_BOUND_SLACK = 1e-9


class Verdict(StrEnum):
    CONTRACTIVE_NONEXPANSIVE_RESETS = "contractive_nonexpansive_resets"
    ENVELOPE_ONLY = "envelope_only"
    VIOLATED = "violated"


class Witness(BaseModel):
    """The sample at which a sampled supremum was attained; ``location`` is a mode id or a ``source->target`` label."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    location: str
    t: float
    x: FloatArray
    value: float


class FlowCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    c_hat: float
    witnesses: dict[str, Witness]
    samples: int


class ResetCertificate(BaseModel):
    """Sampled suprema of the saltation norms; non-transverse guard samples are skipped and counted per transition."""

    model_config = ConfigDict(frozen=True)

    k_hat: float
    k_hat_tangent: float
    witnesses: dict[str, Witness]
    tangent_witnesses: dict[str, Witness]
    samples: int
    skipped: dict[str, int]
    approximate: bool = False


class DwellEnvelope(BaseModel):
    """Separation bound for flows with measure at most ``c`` and resets of norm at most ``k``.

    ``tau_lower`` and ``tau_upper`` bound the dwell time between consecutive resets; ``tau_upper`` may be infinite.
    """

    model_config = ConfigDict(frozen=True)

    c: float
    k: float = Field(ge=0.0)
    tau_lower: float = Field(ge=0.0)
    tau_upper: float = Field(default=math.inf, gt=0.0)

    @model_validator(mode="after")
    def _check_order(self) -> Self:
        if self.tau_lower > self.tau_upper:
            raise ConfigurationError(f"Dwell bounds are reversed: {self.tau_lower} > {self.tau_upper}")
        return self

    @property
    def contractive_flag(self) -> bool:
        return max(self.k * math.exp(self.c * self.tau_lower), self._long_dwell_growth()) < 1.0

    def _long_dwell_growth(self) -> float:
        if math.isfinite(self.tau_upper):
            return self.k * math.exp(self.c * self.tau_upper)
        if self.k == 0.0 or self.c < 0.0:
            return 0.0
        return self.k if self.c == 0.0 else math.inf


class ContractionCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    system: str
    c_hat: float
    k_hat: float
    k_hat_tangent: float
    verdict: Verdict
    flow: FlowCertificate
    resets: ResetCertificate
    c_target: float
    tol: float
    seed: int
    envelope: DwellEnvelope | None = None
    contractive_flag: bool | None = None


def _power(base: float, exponent: int) -> float:
    try:
        return base**exponent
    except OverflowError:
        return math.inf


def _short_dwell_factor(env: DwellEnvelope, t: float) -> float:
    if env.tau_lower > 0.0:
        return _power(env.k, math.ceil(t / env.tau_lower))
    if t == 0.0 or env.k == 1.0:
        return 1.0
    return math.inf if env.k > 1.0 else 0.0


def envelope_bound(env: DwellEnvelope, d_s: float, s: float, t: float) -> float:
    """max{K^ceil(t / tau_lower), K^floor((t - s) / tau_upper)} * exp(c (t - s)) * d_s.

    The first exponent counts from time zero while the second counts from ``s``; both follow the displayed bound.
    """
    if not 0.0 <= s <= t:
        raise ConfigurationError(f"Envelope needs 0 <= s <= t, got s={s}, t={t}")
    if d_s < 0.0:
        raise ConfigurationError(f"Envelope needs a nonnegative initial distance, got {d_s}")
    if d_s == 0.0:
        return 0.0
    elapsed = t - s
    long_dwell = 1.0 if math.isinf(env.tau_upper) else _power(env.k, math.floor(elapsed / env.tau_upper))
    return max(_short_dwell_factor(env, t), long_dwell) * math.exp(env.c * elapsed) * d_s


def _mode_measure(mode: ModeSpec, t: float, x: Vector) -> float:
    return matrix_measure(jacobian_of_field(mode, t, x), mode.norm)


def _refine_flow_witness(system: HybridSystemSpec, mode: ModeSpec, witness: Witness, plan: SamplingPlan) -> Witness:
    """Local ascent of the measure from the best sample, kept inside the sampling box and the mode's domain."""
    region = system.region(mode.id, plan.regions)
    if region is None:
        return witness

    def negative_measure(x: Vector) -> float:
        if not mode.contains(witness.t, x, tolerance=1e-12):
            return math.inf
        try:
            return -_mode_measure(mode, witness.t, x)
        except EvaluatorError:
            return math.inf

    result = minimize(
        negative_measure,
        witness.x,
        method="Nelder-Mead",
        bounds=list(zip(region.lower.tolist(), region.upper.tolist(), strict=True)),
        options={"maxiter": _REFINE_ITERATIONS_PER_DIM * mode.dim, "xatol": 1e-10, "fatol": 1e-14},
    )
    candidate = np.asarray(result.x, dtype=np.float64)
    if not np.isfinite(result.fun) or not mode.contains(witness.t, candidate, tolerance=1e-12):
        return witness
    value = _mode_measure(mode, witness.t, candidate)
    if value <= witness.value:
        return witness
    logger.debug(f"Refined flow witness of mode {mode.id} from {witness.value} to {value}")
    return Witness(location=mode.id, t=witness.t, x=candidate, value=value)


def certify_flow(system: HybridSystemSpec, plan: SamplingPlan | None = None) -> FlowCertificate:
    """Largest sampled matrix measure of D_x F over every mode, with the maximizing sample of each mode."""
    sampling = SamplingPlan() if plan is None else plan
    witnesses: dict[str, Witness] = {}
    samples = 0
    for mode in system.modes:
        if mode.dim == 0:
            logger.debug(f"Mode {mode.id} has no continuous state; its flow is not certified")
            continue
        points = sample_mode_states(system, mode.id, sampling)
        if not points:
            logger.warning(f"No states sampled in mode {mode.id} of {system.name}")
            continue
        best: Witness | None = None
        for point in points:
            value = _mode_measure(mode, point.t, point.x)
            if best is None or value > best.value:
                best = Witness(location=mode.id, t=point.t, x=point.x, value=value)
        samples += len(points)
        assert best is not None, f"Mode {mode.id} produced samples but no witness"
        witnesses[mode.id] = _refine_flow_witness(system, mode, best, sampling) if sampling.refine_witnesses else best
    c_hat = max((witness.value for witness in witnesses.values()), default=-math.inf)
    logger.info(f"Flow certificate for {system.name}: c_hat={c_hat} over {samples} sample(s)")
    return FlowCertificate(c_hat=c_hat, witnesses=witnesses, samples=samples)


def certify_resets(system: HybridSystemSpec, plan: SamplingPlan | None = None) -> ResetCertificate:
    """Largest sampled induced norm of the saltation matrix over every transition."""
    sampling = SamplingPlan() if plan is None else plan
    witnesses: dict[str, Witness] = {}
    tangent_witnesses: dict[str, Witness] = {}
    skipped: dict[str, int] = {}
    samples = 0
    approximate = False
    for transition in system.transitions:
        label = transition_label(transition.key)
        skipped[label] = 0
        for point in sample_guard_points(system, transition.key, sampling):
            try:
                record = saltation(system, transition.key, point.t, point.x)
            except TransversalityError as e:
                skipped[label] += 1
                logger.debug(str(e))
                continue
            samples += 1
            approximate = approximate or record.induced_norm_approximate
            if label not in witnesses or record.induced_norm > witnesses[label].value:
                witnesses[label] = Witness(location=label, t=point.t, x=point.x, value=record.induced_norm)
            if label not in tangent_witnesses or record.tangent_norm > tangent_witnesses[label].value:
                tangent_witnesses[label] = Witness(location=label, t=point.t, x=point.x, value=record.tangent_norm)
        if skipped[label]:
            logger.warning(f"Skipped {skipped[label]} non-transverse sample(s) on guard {label}")
    k_hat = max((witness.value for witness in witnesses.values()), default=0.0)
    k_hat_tangent = max((witness.value for witness in tangent_witnesses.values()), default=0.0)
    logger.info(f"Reset certificate for {system.name}: K_hat={k_hat}, tangent {k_hat_tangent}, {samples} sample(s)")
    return ResetCertificate(
        k_hat=k_hat,
        k_hat_tangent=k_hat_tangent,
        witnesses=witnesses,
        tangent_witnesses=tangent_witnesses,
        samples=samples,
        skipped=skipped,
        approximate=approximate,
    )


def certify(  # noqa: PLR0913 # system and plan plus keyword-only thresholds and dwell bounds
    system: HybridSystemSpec,
    plan: SamplingPlan | None = None,
    *,
    c_target: float = 0.0,
    tol: float = NONEXPANSIVE_TOLERANCE,
    dwell: tuple[float, float] | None = None,
) -> ContractionCertificate:
    """Sample both conditions and classify; ``dwell`` = (tau_lower, tau_upper) adds the dwell-time envelope."""
    sampling = SamplingPlan() if plan is None else plan
    flow = certify_flow(system, sampling)
    resets = certify_resets(system, sampling)
    envelope = None
    if dwell is not None:
        envelope = DwellEnvelope(c=flow.c_hat, k=resets.k_hat, tau_lower=dwell[0], tau_upper=dwell[1])
    if flow.c_hat <= c_target + tol and resets.k_hat <= 1.0 + tol:
        verdict = Verdict.CONTRACTIVE_NONEXPANSIVE_RESETS
    elif envelope is not None and envelope.contractive_flag:
        verdict = Verdict.ENVELOPE_ONLY
    else:
        verdict = Verdict.VIOLATED
    logger.info(f"System {system.name} certified as {verdict}")
    return ContractionCertificate(
        system=system.name,
        c_hat=flow.c_hat,
        k_hat=resets.k_hat,
        k_hat_tangent=resets.k_hat_tangent,
        verdict=verdict,
        flow=flow,
        resets=resets,
        c_target=c_target,
        tol=tol,
        seed=sampling.seed,
        envelope=envelope,
        contractive_flag=None if envelope is None else envelope.contractive_flag,
    )


def certificate_rows(certificate: ContractionCertificate) -> tuple[list[str], list[list[Any]]]:
    """One CSV row per mode and per transition with the sampled extremum and its witness."""
    header = ["kind", "location", "value", "tangent_value", "t", "x", "skipped"]
    rows: list[list[Any]] = [
        ["flow", mode_id, witness.value, "", witness.t, " ".join(f"{v:.12g}" for v in witness.x), ""]
        for mode_id, witness in certificate.flow.witnesses.items()
    ]
    for label, witness in certificate.resets.witnesses.items():
        tangent = certificate.resets.tangent_witnesses[label].value
        x = " ".join(f"{v:.12g}" for v in witness.x)
        rows.append(["reset", label, witness.value, tangent, witness.t, x, certificate.resets.skipped[label]])
    return header, rows


class DrawOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    parameters: dict[str, float]
    k_hat: float
    k_hat_tangent: float
    witnesses: dict[str, Witness]


def certify_parameter_draws(  # noqa: PLR0913 # builder, ranges and draw count plus keyword options
    build: Callable[[dict[str, float]], HybridSystemSpec],
    ranges: dict[str, tuple[float, float]],
    draws: int,
    *,
    plan: SamplingPlan | None = None,
    seed: int = 0,
) -> list[DrawOutcome]:
    """Certify the resets of systems built from parameters drawn uniformly from open ``ranges``."""
    if draws < 1:
        raise ConfigurationError(f"Parameter sweeps need at least one draw, got {draws}")
    sampling = SamplingPlan(guard_samples=4, state_samples=16) if plan is None else plan
    rng = np.random.default_rng(seed)
    outcomes: list[DrawOutcome] = []
    for _ in range(draws):
        parameters: dict[str, float] = {}
        for name, (low, high) in ranges.items():
            value = float(rng.uniform(low, high))
            # uniform draws include the lower end, which the parameter models reject when it is zero
            parameters[name] = value if value > low else 0.5 * (low + high)
        resets = certify_resets(build(parameters), sampling)
        outcomes.append(
            DrawOutcome(
                parameters=parameters,
                k_hat=resets.k_hat,
                k_hat_tangent=resets.k_hat_tangent,
                witnesses=resets.witnesses,
            )
        )
    expanding = sum(outcome.k_hat > 1.0 + NONEXPANSIVE_TOLERANCE for outcome in outcomes)
    logger.info(f"{expanding} of {draws} parameter draw(s) have expansive resets")
    return outcomes


class AlignmentSample(BaseModel):
    """Saltation norm at one guard point with the best-fit alpha in F' - F - D_t R = alpha * D_x g."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    x: FloatArray
    xi_norm: float
    alpha: float | None = None
    alpha_max: float | None = None
    residual: float | None = None
    admissible: bool | None = None


class TranslationResetReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    transition: str
    applicable: bool
    reason: str | None = None
    samples: list[AlignmentSample] = Field(default_factory=list)
    skipped: int = 0
    min_norm: float | None = None
    lower_bound_holds: bool | None = None
    alignment_consistent: bool | None = None


def _translation_inapplicable(
    system: HybridSystemSpec, key: TransitionKey, points: list[GuardPoint]
) -> str | None:
    source = system.mode(key[0])
    target = system.mode(key[1])
    if not norms_equal(source.norm, target.norm):
        return f"modes {key[0]} and {key[1]} carry different norms"
    for point in points:
        jacobian = system.reset_jacobian(key, point.t, point.x)
        if not np.allclose(jacobian, np.eye(source.dim), rtol=0.0, atol=_IDENTITY_TOLERANCE):
            return f"reset Jacobian at t={point.t}, x={point.x.tolist()} is not the identity"
    return None


def check_translation_reset(
    system: HybridSystemSpec, key: TransitionKey, plan: SamplingPlan | None = None
) -> TranslationResetReport:
    """For resets with identity Jacobian between equal norms the saltation norm is at least one.

    Under 2-norms it equals one exactly when the field jump is alpha * D_x g with 0 <= alpha <= -2 (D_t g + D_x g F)
    / |D_x g|^2; each sample reports the best-fit alpha, its residual and whether it is admissible.
    """
    sampling = SamplingPlan() if plan is None else plan
    label = transition_label(key)
    points = sample_guard_points(system, key, sampling)
    reason = _translation_inapplicable(system, key, points)
    if reason is not None:
        logger.info(f"Translation-reset check does not apply to {label}: {reason}")
        return TranslationResetReport(transition=label, applicable=False, reason=reason)
    two_norm = system.mode(key[0]).norm.kind == NormKind.L2
    samples: list[AlignmentSample] = []
    skipped = 0
    for point in points:
        try:
            record = saltation(system, key, point.t, point.x)
        except TransversalityError:
            skipped += 1
            continue
        if not two_norm:
            samples.append(AlignmentSample(t=point.t, x=point.x, xi_norm=record.induced_norm))
            continue
        parts = record.parts
        jump = parts.field_target - parts.field_source - parts.reset_time_derivative
        gradient = parts.guard_gradient
        squared = float(gradient @ gradient)
        alpha = float(jump @ gradient) / squared
        alpha_max = -2.0 * parts.denominator / squared
        residual = float(np.linalg.norm(jump - alpha * gradient))
        admissible = (
            residual <= _ALIGNMENT_TOLERANCE * (1.0 + float(np.linalg.norm(jump)))
            and -_ALIGNMENT_TOLERANCE <= alpha <= alpha_max + _ALIGNMENT_TOLERANCE * (1.0 + abs(alpha_max))
        )
        samples.append(
            AlignmentSample(
                t=point.t,
                x=point.x,
                xi_norm=record.induced_norm,
                alpha=alpha,
                alpha_max=alpha_max,
                residual=residual,
                admissible=admissible,
            )
        )
    min_norm = min((sample.xi_norm for sample in samples), default=None)
    consistent = None
    if two_norm and samples:
        consistent = all(
            sample.admissible == (abs(sample.xi_norm - 1.0) <= _PROP_LOWER_BOUND_SLACK) for sample in samples
        )
    return TranslationResetReport(
        transition=label,
        applicable=True,
        samples=samples,
        skipped=skipped,
        min_norm=min_norm,
        lower_bound_holds=None if min_norm is None else min_norm >= 1.0 - _PROP_LOWER_BOUND_SLACK,
        alignment_consistent=consistent,
    )


class SurfaceSample(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    t: float
    x: FloatArray
    measure: float
    scaled_measure: float
    xi_norm: float


class SwitchingSurfaceReport(BaseModel):
    """mu(M) for M = (F' - F) D_x g, and mu(beta M) with beta = 1 / (D_t g + D_x g F), next to the saltation norm.

    The saltation matrix is I + beta M, so a nonexpansive saltation forces mu(beta M) <= 0; ``inconsistent`` counts
    samples where the saltation norm is at most one while mu(beta M) is positive.
    """

    model_config = ConfigDict(frozen=True)

    transition: str
    applicable: bool
    reason: str | None = None
    samples: list[SurfaceSample] = Field(default_factory=list)
    skipped: int = 0
    max_measure: float | None = None
    max_scaled_measure: float | None = None
    max_xi_norm: float | None = None
    inconsistent: int = 0


def check_switching_surface(
    system: HybridSystemSpec,
    key: TransitionKey,
    plan: SamplingPlan | None = None,
    *,
    tol: float = NONEXPANSIVE_TOLERANCE,
) -> SwitchingSurfaceReport:
    sampling = SamplingPlan() if plan is None else plan
    label = transition_label(key)
    source = system.mode(key[0])
    points = sample_guard_points(system, key, sampling)
    reason = _translation_inapplicable(system, key, points)
    if reason is None:
        for point in points:
            if not np.allclose(system.apply_reset(key, point.t, point.x), point.x, rtol=0.0, atol=_IDENTITY_TOLERANCE):
                reason = f"reset moves the point t={point.t}, x={point.x.tolist()}"
                break
    if reason is not None:
        logger.info(f"Switching-surface check does not apply to {label}: {reason}")
        return SwitchingSurfaceReport(transition=label, applicable=False, reason=reason)
    samples: list[SurfaceSample] = []
    skipped = 0
    for point in points:
        try:
            record = saltation(system, key, point.t, point.x)
        except TransversalityError:
            skipped += 1
            continue
        parts = record.parts
        jump = np.outer(parts.field_target - parts.field_source, parts.guard_gradient)
        samples.append(
            SurfaceSample(
                t=point.t,
                x=point.x,
                measure=matrix_measure(jump, source.norm),
                scaled_measure=matrix_measure(jump / parts.denominator, source.norm),
                xi_norm=record.induced_norm,
            )
        )
    inconsistent = sum(sample.xi_norm <= 1.0 + tol and sample.scaled_measure > tol for sample in samples)
    if inconsistent:
        logger.warning(f"{inconsistent} sample(s) on {label} have a nonexpansive saltation but mu(beta M) > 0")
    return SwitchingSurfaceReport(
        transition=label,
        applicable=True,
        samples=samples,
        skipped=skipped,
        max_measure=max((sample.measure for sample in samples), default=None),
        max_scaled_measure=max((sample.scaled_measure for sample in samples), default=None),
        max_xi_norm=max((sample.xi_norm for sample in samples), default=None),
        inconsistent=inconsistent,
    )


class ExperimentSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: int
    t: float
    distance: float
    bound: float
    ratio: float


class PairOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: int
    completed: bool
    message: str | None = None
    initial_distance: float | None = None
    max_ratio: float | None = None
    samples: list[ExperimentSample] = Field(default_factory=list)


class ExperimentReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    system: str
    envelope: DwellEnvelope
    t_end: float
    pairs: list[PairOutcome]
    max_ratio: float


def _ratio(value: float, bound: float, tolerance: float) -> float:
    if bound > 0.0:
        return value / bound
    return 0.0 if value <= tolerance else math.inf


def _simulated_pair(
    system: HybridSystemSpec, pair: tuple[HybridState, HybridState], t_end: float, options: IntegratorOptions | None
) -> tuple[HybridTrajectory, HybridTrajectory]:
    first = simulate(system, pair[0], t_end, options=options)
    second = simulate(system, pair[1], t_end, options=options)
    for trajectory in (first, second):
        if trajectory.status != TrajectoryStatus.COMPLETED:
            raise SimulationError(f"Trajectory from {trajectory.initial_state.x.tolist()}: {trajectory.message}")
    return first, second


def pairwise_contraction_experiment(  # noqa: PLR0913 # system, pairs, horizon and envelope plus keyword options
    system: HybridSystemSpec,
    inits: list[tuple[HybridState, HybridState]],
    t_end: float,
    envelope: DwellEnvelope,
    *,
    time_samples: int = 21,
    distance_options: DistanceOptions | None = None,
    options: IntegratorOptions | None = None,
) -> ExperimentReport:
    """Intrinsic distance of simulated pairs on a time grid, each divided by the envelope started at the pair's
    initial distance; ratios above one contradict the envelope up to estimator slack."""
    settings = DistanceOptions() if distance_options is None else distance_options
    outcomes: list[PairOutcome] = []
    for index, pair in enumerate(inits):
        if pair[0].t != pair[1].t:
            raise ConfigurationError(f"Pair {index} starts at different times {pair[0].t} and {pair[1].t}")
        start = pair[0].t
        try:
            first, second = _simulated_pair(system, pair, t_end, options)
        except (SimulationError, GrazingError, EvaluatorError) as e:
            logger.warning(f"Pair {index} skipped: {e}")
            outcomes.append(PairOutcome(pair=index, completed=False, message=str(e)))
            continue
        initial = distance(system, pair[0], pair[1], start, settings).value
        samples: list[ExperimentSample] = []
        for t in np.linspace(start, t_end, time_samples):
            now = float(t)
            estimate = distance(system, first.state_at(now), second.state_at(now), now, settings)
            bound = envelope_bound(envelope, initial, start, now)
            samples.append(
                ExperimentSample(
                    pair=index,
                    t=now,
                    distance=estimate.value,
                    bound=bound,
                    ratio=_ratio(estimate.value, bound, settings.tolerance),
                )
            )
        outcomes.append(
            PairOutcome(
                pair=index,
                completed=True,
                initial_distance=initial,
                max_ratio=max(sample.ratio for sample in samples),
                samples=samples,
            )
        )
    max_ratio = max((outcome.max_ratio for outcome in outcomes if outcome.max_ratio is not None), default=0.0)
    logger.info(f"Pairwise experiment on {system.name}: max distance/envelope ratio {max_ratio}")
    return ExperimentReport(system=system.name, envelope=envelope, t_end=t_end, pairs=outcomes, max_ratio=max_ratio)


def experiment_rows(report: ExperimentReport) -> tuple[list[str], list[list[Any]]]:
    header = ["pair", "t", "distance", "bound", "ratio"]
    rows: list[list[Any]] = [
        [sample.pair, sample.t, sample.distance, sample.bound, sample.ratio]
        for outcome in report.pairs
        for sample in outcome.samples
    ]
    return header, rows


def squared_distance_rate(
    system: HybridSystemSpec,
    a: HybridState,
    b: HybridState,
    *,
    epsilon: float = 1e-3,
    options: IntegratorOptions | None = None,
) -> float:
    """Forward difference of |x - z|^2 over ``epsilon`` in the norm of ``a``'s mode, for modes sharing coordinates."""
    first = simulate(system, a, a.t + epsilon, options=options)
    second = simulate(system, b, b.t + epsilon, options=options)
    norm = system.mode(a.mode).norm
    if a.x.shape != b.x.shape or first.final_state.x.shape != second.final_state.x.shape:
        raise ConfigurationError("Squared-distance rates need both states in spaces of the same dimension")
    before = vector_norm(a.x - b.x, norm) ** 2
    after = vector_norm(first.final_state.x - second.final_state.x, norm) ** 2
    return (after - before) / epsilon
