"""Command stages and their orchestration.

Each stage turns a model and a :class:`RunConfig` into a report, optional CSV rows and
a list of checks. :func:`run_pipeline` renders the result and maps it to an exit code:
0 when every check passes, 1 when one fails, 2 for unusable input.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence
import csv
import io
import json
import logging
import math

import numpy as np

from . import __version__
from .concatenation import (
    Schedule,
    build_schedule,
    build_tower,
    check_schedule,
    check_tower,
    exponent_envelope_check,
    extend_backward,
    level_skeletons,
    limsup_points,
    mirrored_model,
)
from .config import ModelConfig, RunConfig, load_config
from .distribution import (
    TowerMeasure,
    choose_theta,
    consistency_checks,
    edp_certificate,
)
from .entropy_estimation import (
    ExplicitWords,
    SystemWords,
    TowerSupport,
    WordSource,
    capacitive_entropies,
    estimate_entropy,
)
from .exceptions import (
    CertificateError,
    ConfigError,
    InfeasibleScheduleError,
    SpectraError,
)
from .legendre import (
    SpectrumCurve,
    alpha_grid,
    check_spectrum_properties,
    spectrum,
    spectrum_brute_force,
    zero_exponent_entropies,
)
from .oracle import BernoulliOracle
from .pressure import (
    PressureCurve,
    Restriction,
    check_pressure_properties,
    exhausting_family,
    pressure_curve,
    q_grid,
    random_markov_measure,
)
from .report import CheckResult, all_passed, canonical_json, failures
from .skeleton import extract_preskeleton, verify_skeleton
from .symbolic import Resolution, word_to_string

FULL_Q_RANGE = (-50.0, 50.0, 1001)
AGREEMENT_TOLERANCE = 0.05
RANDOM_MEASURES = 8
POINTS_IN_REPORT = 4
POINT_PREVIEW = 64

logger = logging.getLogger(__name__)


@dataclass
class StageResult:
    report: Dict[str, Any]
    checks: List[CheckResult] = field(default_factory=list)
    header: Optional[Sequence[str]] = None
    rows: Optional[List[Sequence[Any]]] = None


@dataclass
class PipelineResult:
    exit_code: int
    output: str
    checks: List[CheckResult] = field(default_factory=list)
    error: Optional[str] = None


def parse_range(text: str) -> List[int]:
    """``a:b`` or ``a:b:step``, both ends included, or a comma separated list."""
    if ":" not in text:
        return [int(part) for part in text.split(",") if part.strip()]
    parts = [int(part) for part in text.split(":")]
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[2] < 1 or parts[0] > parts[1]:
        raise ValueError(f"Invalid range `{text}`, use `start:stop[:step]`")
    return list(range(parts[0], parts[1] + 1, parts[2]))


def parse_floats(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _full_curve(model: ModelConfig, cfg: RunConfig) -> PressureCurve:
    low, high, steps = FULL_Q_RANGE
    return pressure_curve(
        model.system, model.cocycle, q_grid(low, high, steps), threads=cfg.threads
    )


def _spectrum_curve(model: ModelConfig, cfg: RunConfig) -> SpectrumCurve:
    curve = _full_curve(model, cfg)
    return spectrum(curve, int(cfg.parameters.get("alpha_steps", 201)))


def pressure_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    system, cocycle = model.system, model.cocycle
    grid = q_grid(p["q_min"], p["q_max"], p["q_steps"])
    restriction = Restriction.parse(p.get("restrict", "none"))
    curve = pressure_curve(system, cocycle, grid, restriction, threads=cfg.threads)

    rng = np.random.default_rng(cfg.seed)
    measures = [random_markov_measure(system, rng) for _ in range(RANDOM_MEASURES)]
    checks = check_pressure_properties(curve, system, cocycle, measures)
    report: Dict[str, Any] = {
        "restriction": restriction.value,
        "alpha_range": list(curve.asymptotic_slopes),
    }
    if restriction is Restriction.NONE:
        at_zero = curve.evaluate(0.0)
        entropy = system.topological_entropy()
        checks.append(
            CheckResult(
                "entropy-at-zero",
                abs(at_zero - entropy) <= 1e-10,
                "P(0) equals the topological entropy",
                {"pressure": at_zero, "entropy": entropy},
            )
        )
    if p.get("exhaust"):
        sign = restriction
        if sign is Restriction.NONE:
            sign = Restriction.NEGATIVE
        levels = exhausting_family(system, cocycle, sign, p["exhaust"], grid)
        report["exhaustion"] = [
            {
                "block_length": level.block_length,
                "blocks": level.states,
                "gap": level.gap,
                "exponent_range": list(level.exponent_range),
            }
            for level in levels
        ]
    return StageResult(report, checks, ("q", "P"), curve.rows())


def _windowed(result: SpectrumCurve, alpha: float, window: float) -> float:
    """``sup H(beta)`` over ``|beta - alpha| <= window`` on the spectrum curve."""
    low, high = result.domain
    betas = np.linspace(max(alpha - window, low), min(alpha + window, high), 201)
    inside = [result.at(float(beta)) for beta in betas if low <= beta <= high]
    return max(inside) if inside else -math.inf


def spectrum_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    curve = _full_curve(model, cfg)
    result = spectrum(curve, alpha_grid(curve, p["alpha_steps"]))
    oracle = BernoulliOracle(model.cocycle) if p.get("oracle") else None
    checks = check_spectrum_properties(
        result, curve, oracle=oracle, oracle_tolerance=p.get("oracle_tolerance", 1e-4)
    )
    zero = zero_exponent_entropies(curve)
    report: Dict[str, Any] = {
        "domain": list(result.domain),
        "h_minus": zero.negative,
        "h_plus": zero.positive,
        "h_zero": zero.zero,
    }

    header: List[str] = ["alpha", "H"]
    rows: List[List[Any]] = [[alpha, value] for alpha, value in result.rows()]
    if oracle is not None:
        header += ["oracle", "diff"]
        for row in rows:
            expected = oracle.spectrum(row[0])
            row += [expected, math.inf if expected is None else abs(row[1] - expected)]
        report["oracle_max_diff"] = max(row[3] for row in rows)

    if p.get("brute_n"):
        n, window = p["brute_n"], p.get("brute_window", 0.05)
        tolerance = p.get("brute_tolerance", 0.02)
        brute = []
        for alpha in p.get("brute_alphas") or []:
            rate = spectrum_brute_force(model.system, model.cocycle, alpha, window, n)
            expected = _windowed(result, alpha, window)
            brute.append({"alpha": alpha, "rate": rate, "windowed": expected})
        worst = max((abs(row["rate"] - row["windowed"]) for row in brute), default=0.0)
        checks.append(
            CheckResult(
                "brute-force",
                worst <= tolerance,
                f"exact word counts match the windowed spectrum within {tolerance}",
                {"max_diff": worst, "n": n, "window": window},
            )
        )
        report["brute_force"] = brute
    return StageResult(report, checks, header, rows)


def skeleton_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    system, cocycle = model.system, model.cocycle
    alpha = p["alpha"]
    h_target = p.get("h_target")
    if h_target is None:
        h_target = _spectrum_curve(model, cfg).at(alpha)
    skeleton = extract_preskeleton(
        system,
        cocycle,
        alpha,
        p["eps_e"],
        p["eps_h"],
        h_target,
        p["m"],
        resolution=Resolution(p.get("res", 0)),
        k0=p.get("k0"),
        method=p.get("method", "lattice"),
    )
    checks = verify_skeleton(system, cocycle, skeleton, seed=cfg.seed)
    checks.append(
        CheckResult(
            "rate",
            skeleton.success,
            "certified rate >= H(alpha) - eps_H",
            {"rate": skeleton.certified_rate, "target": h_target - p["eps_h"]},
        )
    )
    rows = None
    if p.get("words"):
        limit = p.get("word_limit", 10_000)
        if skeleton.count > limit:
            raise ValueError(f"Skeleton has {skeleton.count} words, over {limit}")
        rows = [[word_to_string(word)] for word in skeleton.words]
    return StageResult({"skeleton": skeleton.summary()}, checks, ("word",), rows)


def _schedule(
    model: ModelConfig, cfg: RunConfig, system=None, cocycle=None
) -> Schedule:
    p = cfg.parameters
    system = system or model.system
    cocycle = cocycle or model.cocycle
    low, high, steps = FULL_Q_RANGE
    grid = q_grid(low, high, steps)
    curve = pressure_curve(system, cocycle, grid, threads=cfg.threads)
    result = spectrum(curve, int(p.get("alpha_steps", 201)))
    return build_schedule(
        system,
        cocycle,
        p["eps"],
        p["levels"],
        result,
        k0=p.get("k0"),
        max_length=p.get("max_length", 4096),
    )


def _infeasible(err: InfeasibleScheduleError) -> StageResult:
    check = CheckResult(
        f"{err.inequality}[k={err.level}]", False, str(err), {"level": err.level}
    )
    return StageResult({"schedule": None}, [check])


def schedule_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    try:
        schedule = _schedule(model, cfg)
    except InfeasibleScheduleError as err:
        return _infeasible(err)
    return StageResult({"schedule": schedule.as_dict()}, check_schedule(schedule))


def build_set_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    system, cocycle = model.system, model.cocycle
    try:
        schedule = _schedule(model, cfg)
    except InfeasibleScheduleError as err:
        return _infeasible(err)
    resolution = Resolution(p.get("res", 0))
    skeletons = level_skeletons(system, cocycle, schedule, resolution)
    tower = build_tower(
        system,
        cocycle,
        schedule,
        skeletons,
        budget=cfg.budgets.get("tower", 10**6),
        sample_size=p.get("sample_size"),
        seed=cfg.seed,
    )

    checks = check_schedule(schedule) + check_tower(tower)
    envelope = exponent_envelope_check(tower, schedule)
    checks.append(
        CheckResult(
            "envelope",
            envelope.passed,
            "|S_n/n| <= |chi_k0| + 6 eps_k0 beyond t_(k0+1)",
            {"max_ratio": envelope.max_ratio, "words": envelope.words},
        )
    )
    checks += consistency_checks(tower)

    points = limsup_points(tower, POINTS_IN_REPORT, min(POINT_PREVIEW, tower.length))
    report: Dict[str, Any] = {
        "schedule": schedule.as_dict(),
        "skeletons": [skeleton.summary() for skeleton in skeletons],
        "cardinalities": [
            {"k": level.k, "card_S": level.card_s, "card_E": level.card_e}
            for level in tower.levels
        ],
        "envelope": envelope.as_dict(),
        "points": [word_to_string(point) for point in points],
        "tower": tower.description(),
    }

    if p.get("backward"):
        back_system, back_cocycle = mirrored_model(system, cocycle)
        try:
            back_schedule = _schedule(model, cfg, back_system, back_cocycle)
        except InfeasibleScheduleError as err:
            return StageResult(report, checks + _infeasible(err).checks)
        two_sided = extend_backward(
            system,
            cocycle,
            tower.least_member(),
            back_schedule,
            seed=cfg.seed,
            resolution=resolution,
        )
        checks.append(
            CheckResult(
                "backward-envelope",
                two_sided.report.passed,
                "backward averages obey the mirrored envelope",
                {"max_ratio": two_sided.report.max_ratio},
            )
        )
        report["backward"] = {
            "schedule": back_schedule.as_dict(),
            "envelope": two_sided.report.as_dict(),
            "origin": two_sided.origin,
            "preview": word_to_string(
                two_sided.in_time_order()[
                    max(two_sided.origin - POINT_PREVIEW // 2, 0) : two_sided.origin
                    + POINT_PREVIEW // 2
                ].tolist()
            ),
        }
    return StageResult(report, checks)


def rebuild_tower(model: ModelConfig, path: Path, budget: int):
    """Tower described in a ``build-set`` report."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        description = data["tower"]
    except (OSError, ValueError, KeyError) as err:
        raise ConfigError(f"Cannot read tower description `{path}`: {err}")
    if data.get("config_sha256") != model.sha256:
        raise ConfigError(f"Tower `{path}` was built from a different model file")
    schedule = Schedule.from_dict(description["schedule"])
    skeletons = level_skeletons(
        model.system, model.cocycle, schedule, Resolution(description["resolution"])
    )
    return build_tower(
        model.system,
        model.cocycle,
        schedule,
        skeletons,
        budget=budget,
        sample_size=description["members"] if description["sampled"] else None,
        seed=description["seed"] if description["seed"] is not None else 0,
    )


def _audit_range(tower, p: Dict[str, Any]) -> List[int]:
    if p.get("n_range"):
        return parse_range(p["n_range"])
    resolution = tower.skeletons[0].resolution.depth
    top = tower.length - resolution
    return sorted({int(n) for n in np.linspace(1, top, 64)})


def verify_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    tower = rebuild_tower(model, p["tower"], cfg.budgets.get("tower", 10**6))
    h_target = tower.schedule.h_zero
    theta = p.get("theta")
    if theta is None:
        theta = choose_theta(h_target, p["eps_prime"])
    resolution = tower.skeletons[0].resolution
    ns = _audit_range(tower, p)

    checks = consistency_checks(tower)
    report: Dict[str, Any] = {"h_target": h_target, "theta": theta}
    try:
        certificate = edp_certificate(
            TowerMeasure(tower), TowerSupport(tower), h_target, theta, ns, resolution
        )
    except CertificateError as err:
        checks.append(CheckResult("audit", False, str(err)))
        return StageResult(report, checks)
    checks.append(
        CheckResult(
            "audit",
            True,
            "cylinder masses <= exp(-n (h - theta)) from n0 on",
            {"n0": certificate.audit.n0},
        )
    )
    checks.append(certificate.consistency)
    report["certificate"] = certificate.as_dict()
    gap = abs(certificate.estimate.rate - certificate.bound)
    agreement = cfg.tolerances.get("agreement", AGREEMENT_TOLERANCE)
    checks.append(
        CheckResult(
            "estimate-agreement",
            gap <= agreement,
            "|separated estimate - certified bound| <= tolerance",
            {"gap": gap, "tolerance": agreement},
        )
    )
    report["estimate_gap"] = gap
    return StageResult(report, checks)


def entropy_stage(model: Optional[ModelConfig], cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    source: WordSource
    if p.get("input"):
        source = ExplicitWords.from_file(p["input"])
    elif model is None:
        raise ConfigError("Give `--input` or `--config`")
    elif p.get("tower"):
        source = TowerSupport(
            rebuild_tower(model, p["tower"], cfg.budgets.get("tower", 10**6))
        )
    else:
        source = SystemWords(model.system)

    ns = parse_range(p["n"])
    resolution = Resolution(p.get("res", 0))
    method = p.get("method", "separated")
    estimate = estimate_entropy(source, ns, resolution, method)
    separated = estimate_entropy(source, ns, resolution, "separated")
    spanning = estimate_entropy(source, ns, resolution, "spanning")
    lower, upper = capacitive_entropies(source, ns, resolution)
    checks = [
        CheckResult(
            "spanning-below-separated",
            all(r <= s for r, s in zip(spanning.counts, separated.counts)),
            "r_n <= s_n at every n",
            {"spanning": spanning.rate, "separated": separated.rate},
        ),
        CheckResult("capacities-ordered", lower <= upper, "lower <= upper capacity"),
    ]
    report = {
        "estimate": estimate.as_dict(),
        "capacitive": {"lower": lower, "upper": upper, "gap": upper - lower},
    }
    rows = [
        [n, resolution.prefix_length(n), math.log(count)]
        for n, count in zip(estimate.n_range, separated.counts)
    ]
    return StageResult(report, checks, ("n", "depth", "log_count"), rows)


def oracle_stage(model: ModelConfig, cfg: RunConfig) -> StageResult:
    p = cfg.parameters
    oracle = BernoulliOracle(model.cocycle)
    alphas = p.get("alphas") or list(
        np.linspace(oracle.alpha_min, oracle.alpha_max, p.get("alpha_steps", 101))
    )
    rows = [[float(alpha), oracle.spectrum(float(alpha))] for alpha in alphas]
    report = {
        "alpha_range": [oracle.alpha_min, oracle.alpha_max],
        "spectrum": rows,
        "pressure": [[q, oracle.pressure(q)] for q in p.get("q") or [0.0]],
        "h_zero": oracle.zero_entropy(),
    }
    return StageResult(report, [], ("alpha", "H"), rows)


STAGES: Dict[str, Callable[..., StageResult]] = {
    "pressure": pressure_stage,
    "spectrum": spectrum_stage,
    "skeleton": skeleton_stage,
    "schedule": schedule_stage,
    "build-set": build_set_stage,
    "verify": verify_stage,
    "entropy": entropy_stage,
    "oracle": oracle_stage,
}
MODEL_OPTIONAL = {"entropy"}


def render_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """CSV with ``repr`` floats, so values survive a round trip exactly."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [repr(float(item)) if isinstance(item, float) else item for item in row]
        )
    return buffer.getvalue()


def render(result: StageResult, cfg: RunConfig) -> str:
    if cfg.output_format == "csv":
        if result.rows is None:
            raise ConfigError(f"`{cfg.command}` has no CSV output, use `--format json`")
        return render_csv(result.header, result.rows)
    document = dict(cfg.header(__version__))
    document.update(result.report)
    document["checks"] = [check.as_dict() for check in result.checks]
    document["failures"] = failures(result.checks)
    document["passed"] = all_passed(result.checks)
    return canonical_json(document)


def run_pipeline(cfg: RunConfig, model: Optional[ModelConfig] = None) -> PipelineResult:
    """Execute ``cfg.command``; usage and input errors give exit code 2."""
    try:
        cfg.validate()
        if cfg.command not in STAGES:
            raise ConfigError(f"Unknown command `{cfg.command}`")
        if model is None and cfg.config_path is not None:
            model = load_config(cfg.config_path)
        if model is None and cfg.command not in MODEL_OPTIONAL:
            raise ConfigError(f"`{cfg.command}` needs a model file (`--config`)")
        if model is not None:
            cfg.config_sha256 = model.sha256
        result = STAGES[cfg.command](model, cfg)
        output = render(result, cfg)
    except ValueError as err:  # configuration, domain and parameter errors
        return PipelineResult(2, "", error=str(err))
    except SpectraError as err:
        return PipelineResult(1, "", error=str(err))

    passed = sum(check.passed for check in result.checks)
    status = "PASS" if passed == len(result.checks) else "FAIL"
    logger.info(f"Invariants: {passed}/{len(result.checks)} {status}")
    return PipelineResult(0 if all_passed(result.checks) else 1, output, result.checks)
