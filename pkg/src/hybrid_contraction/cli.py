"""Command-line front end.

Every verb selects a system with ``--system NAME`` (built-in) or ``--config FILE`` (JSON definition). Parameters
are overridden with ``--param name=value`` or directly as ``--name value``. Outputs go to ``--out-dir`` and every JSON
output embeds the resolved run configuration.
"""

import argparse
import logging
import math
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel
from pydantic import ConfigDict
from pydantic import Field
from pydantic import ValidationError

from .catalog import Parameters
from .catalog import builtin_system
from .lib import ConfigurationError
from .lib import DistanceOptions
from .lib import DwellEnvelope
from .lib import GrazingError
from .lib import HybridState
from .lib import HybridSystemError
from .lib import HybridSystemSpec
from .lib import OffGuardError
from .lib import RunConfig
from .lib import SamplingPlan
from .lib import TrajectoryStatus
from .lib import TransversalityError
from .lib import Verdict
from .lib import build_system
from .lib import certificate_rows
from .lib import certify
from .lib import certify_parameter_draws
from .lib import distance
from .lib import event_log
from .lib import experiment_rows
from .lib import load_system_definition
from .lib import pairwise_contraction_experiment
from .lib import saltation
from .lib import sample_guard_points
from .lib import sample_mode_states
from .lib import simulate
from .lib import transition_label
from .lib import validate
from .lib import write_csv
from .lib import write_json
from .lib import write_trajectory_csv

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)8s] %(message)s (%(filename)s:%(lineno)s)"

EXIT_OK = 0
EXIT_CONFIGURATION = 1
EXIT_EXPECTATION = 2
EXIT_ZENO = 3
EXIT_GRAZING = 4

DEFAULT_HORIZON = 2.0


class Target(BaseModel):
    """The system a command runs on, with everything needed to rebuild it under other parameters."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    label: str
    system: HybridSystemSpec
    parameters: Parameters
    build: Callable[[Parameters], HybridSystemSpec]
    initial: HybridState | None = None
    draw_ranges: dict[str, tuple[float, float]] = Field(default_factory=dict)
    config_path: str | None = None


def _float(text: str, *, what: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        raise ConfigurationError(f"{what} must be a number, got {text!r}") from e


def parse_parameters(assignments: list[str], extras: list[str]) -> Parameters:
    """Merge ``name=value`` assignments with trailing ``--name value`` (or ``--name=value``) pairs."""
    parameters: Parameters = {}
    for assignment in assignments:
        name, separator, value = assignment.partition("=")
        if not separator or not name:
            raise ConfigurationError(f"Parameter assignment {assignment!r} is not of the form name=value")
        parameters[name.strip()] = _float(value, what=f"Parameter {name}")
    index = 0
    while index < len(extras):
        token = extras[index]
        if not token.startswith("--") or len(token) == 2:  # noqa: PLR2004 # a bare "--" names nothing
            raise ConfigurationError(f"Unexpected argument {token!r}")
        name, separator, value = token[2:].partition("=")
        if not separator:
            if index + 1 >= len(extras):
                raise ConfigurationError(f"Parameter --{name} is missing a value")
            value = extras[index + 1]
            index += 1
        parameters[name] = _float(value, what=f"Parameter {name}")
        index += 1
    return parameters


def load_target(system_name: str | None, config_path: str | None, overrides: Parameters) -> Target:
    if config_path is not None:
        path = Path(config_path)
        definition = load_system_definition(path)

        def rebuild(changes: Parameters) -> HybridSystemSpec:
            return build_system(definition, {**overrides, **changes})

        return Target(
            label=definition.name,
            system=build_system(definition, overrides),
            parameters={**definition.parameters, **overrides},
            build=rebuild,
            config_path=str(path),
        )
    assert system_name is not None, "argparse requires one of --system and --config"
    entry = builtin_system(system_name)
    parameters = entry.resolve(overrides)

    def rebuild_builtin(changes: Parameters) -> HybridSystemSpec:
        return entry.build({**parameters, **changes})

    return Target(
        label=entry.name,
        system=entry.builder(parameters),
        parameters=parameters,
        build=rebuild_builtin,
        initial=entry.initial(parameters),
        draw_ranges=entry.draw_ranges,
    )


def _value(text: str, parameters: Parameters) -> float:
    name = text.strip()
    if name in parameters:
        return parameters[name]
    return _float(name, what="Coordinate")


def parse_point(text: str, parameters: Parameters) -> np.ndarray:
    """``x1=2,x2=xbar`` into a vector; a value may name a system parameter."""
    coordinates: dict[int, float] = {}
    for item in text.split(","):
        name, separator, value = item.partition("=")
        name = name.strip()
        if not separator or not name.startswith("x") or not name[1:].isdigit() or int(name[1:]) < 1:
            raise ConfigurationError(f"Coordinate {item!r} is not of the form x<index>=<value>")
        coordinates[int(name[1:])] = _value(value, parameters)
    dim = max(coordinates)
    missing = sorted(set(range(1, dim + 1)) - set(coordinates))
    if missing:
        raise ConfigurationError(f"Point {text!r} leaves coordinates {[f'x{index}' for index in missing]} unset")
    return np.array([coordinates[index] for index in range(1, dim + 1)], dtype=np.float64)


def parse_state(text: str, t: float, parameters: Parameters) -> HybridState:
    """``mode:v1,v2,...`` into a hybrid state at time ``t``; a bare ``mode:`` is a point of a zero-dimensional mode."""
    mode, separator, values = text.rpartition(":")
    if not separator or not mode:
        raise ConfigurationError(f"State {text!r} is not of the form mode:v1,v2,...")
    x = [_value(value, parameters) for value in values.split(",")] if values.strip() else []
    return HybridState(mode=mode, x=np.array(x, dtype=np.float64), t=t)


def _run_config(args: argparse.Namespace, target: Target, options: dict[str, Any]) -> RunConfig:
    return RunConfig(
        command=args.command,
        system=target.label,
        parameters=target.parameters,
        config_path=target.config_path,
        seed=args.seed,
        out_dir=str(args.out_dir),
        tol=args.tol,
        options=options,
    )


def _horizon(target: Target, t_end: float | None) -> float:
    """The requested end time, else the end of the system's window; a degenerate window runs for a fixed span."""
    if t_end is not None:
        return t_end
    start, stop = target.system.time_window
    return stop if stop > start else start + DEFAULT_HORIZON


def _plan(args: argparse.Namespace) -> SamplingPlan:
    return SamplingPlan(state_samples=args.state_samples, guard_samples=args.guard_samples, seed=args.seed)


def cmd_simulate(args: argparse.Namespace, target: Target) -> int:
    if target.initial is None and args.init is None:
        raise ConfigurationError("Systems loaded from a definition file need --init mode:v1,v2,...")
    start = target.system.time_window[0]
    init = parse_state(args.init, start, target.parameters) if args.init is not None else target.initial
    assert init is not None
    t_end = _horizon(target, args.t_end)
    trajectory = simulate(target.system, init, t_end)
    out_dir = Path(args.out_dir)
    write_trajectory_csv(trajectory, out_dir / "trajectory.csv", sample_step=args.sample_step)
    config = _run_config(args, target, {"t_end": t_end, "init": init.model_dump(mode="json")})
    write_json(
        out_dir / "events.json",
        {
            "config": config,
            "status": trajectory.status,
            "message": trajectory.message,
            "final_state": trajectory.final_state,
            "events": event_log(trajectory),
        },
    )
    logger.info(f"Simulation of {target.label} ended as {trajectory.status} after {len(trajectory.events)} event(s)")
    if trajectory.status == TrajectoryStatus.ZENO_CUTOFF:
        return EXIT_ZENO
    if trajectory.status == TrajectoryStatus.EVALUATOR_ERROR:
        return EXIT_CONFIGURATION
    return EXIT_OK


def cmd_certify(args: argparse.Namespace, target: Target) -> int:
    dwell = None
    if args.tau_lower is not None or args.tau_upper is not None:
        dwell = (args.tau_lower or 0.0, math.inf if args.tau_upper is None else args.tau_upper)
    certificate = certify(target.system, _plan(args), c_target=args.c_target, tol=args.tol, dwell=dwell)
    verdict = certificate.verdict
    draws: list[Any] = []
    if args.draws > 0:
        if not target.draw_ranges:
            raise ConfigurationError(f"System {target.label} declares no parameter ranges for --draws")
        outcomes = certify_parameter_draws(
            target.build,
            target.draw_ranges,
            args.draws,
            plan=SamplingPlan(guard_samples=4, state_samples=16, seed=args.seed),
            seed=args.seed,
        )
        draws = list(outcomes)
        expanding = [outcome for outcome in outcomes if outcome.k_hat > 1.0 + args.tol]
        if expanding:
            worst = max(expanding, key=lambda outcome: outcome.k_hat)
            logger.info(f"Draw {worst.parameters} expands with K_hat={worst.k_hat}")
            verdict = Verdict.VIOLATED
    out_dir = Path(args.out_dir)
    options = {
        "draws": args.draws,
        "c_target": args.c_target,
        "tau_lower": args.tau_lower,
        "tau_upper": args.tau_upper,
        "state_samples": args.state_samples,
        "guard_samples": args.guard_samples,
    }
    write_json(
        out_dir / "certificate.json",
        {"config": _run_config(args, target, options), "verdict": verdict, "certificate": certificate, "draws": draws},
    )
    header, rows = certificate_rows(certificate)
    write_csv(out_dir / "certificate.csv", header, rows)
    logger.info(f"c_hat={certificate.c_hat} K_hat={certificate.k_hat} verdict={verdict}")
    if args.expect_contractive and verdict == Verdict.VIOLATED:
        logger.error(f"Expected {target.label} to certify as contractive but the verdict is {verdict}")
        return EXIT_EXPECTATION
    return EXIT_OK


def cmd_saltation(args: argparse.Namespace, target: Target) -> int:
    system = target.system
    keys = [transition.key for transition in system.transitions]
    if args.transition is not None:
        keys = [key for key in keys if transition_label(key) == args.transition]
        if not keys:
            raise ConfigurationError(f"System {target.label} has no transition {args.transition}")
    records: list[Any] = []
    if args.at is not None:
        x = parse_point(args.at, target.parameters)
        for key in keys:
            transition = system.transition(key)
            source = system.mode(key[0])
            if source.dim != x.shape[0] or not transition.guard.is_active(args.time, x):
                continue
            if not source.contains(args.time, x, tolerance=1e-9):
                continue
            try:
                records.append(saltation(system, key, args.time, x))
            except OffGuardError:
                continue
            except TransversalityError as e:
                logger.warning(f"Skipping {transition_label(key)}: {e}")
        if not records:
            raise ConfigurationError(f"No transverse guard of {target.label} passes through {x.tolist()}")
    else:
        plan = _plan(args)
        for key in keys:
            for point in sample_guard_points(system, key, plan):
                try:
                    records.append(saltation(system, key, point.t, point.x))
                except TransversalityError as e:
                    logger.debug(f"Skipping sample of {transition_label(key)}: {e}")
    for record in records:
        logger.info(
            f"Xi[{transition_label(record.key)}] at x={record.x.tolist()}: {record.xi.tolist()} "
            f"norm={record.induced_norm} tangent={record.tangent_norm}"
        )
    options = {"at": args.at, "time": args.time, "transition": args.transition}
    config = _run_config(args, target, options)
    write_json(Path(args.out_dir) / "saltation.json", {"config": config, "records": records})
    return EXIT_OK


def _distance_options(args: argparse.Namespace) -> DistanceOptions:
    return DistanceOptions(depth=args.depth, restarts=args.restarts, seed=args.seed)


def cmd_distance(args: argparse.Namespace, target: Target) -> int:
    a = parse_state(args.a, args.time, target.parameters)
    b = parse_state(args.b, args.time, target.parameters)
    estimate = distance(target.system, a, b, args.time, _distance_options(args))
    logger.info(f"d({args.a}, {args.b}; t={args.time}) = {estimate.value} ({estimate.exactness})")
    out_dir = Path(args.out_dir)
    options = {"a": args.a, "b": args.b, "time": args.time, "depth": args.depth, "restarts": args.restarts}
    summary = estimate.model_dump(mode="json", exclude={"path"})
    write_json(out_dir / "distance.json", {"config": _run_config(args, target, options), "estimate": summary})
    if args.dump_path:
        write_json(out_dir / "distance_path.json", {"path": estimate.path})
    return EXIT_OK


def _experiment_pairs(args: argparse.Namespace, target: Target) -> list[tuple[HybridState, HybridState]]:
    start = target.system.time_window[0]
    if args.a is not None or args.b is not None:
        if args.a is None or args.b is None:
            raise ConfigurationError("Explicit experiment pairs need both --a and --b")
        return [(parse_state(args.a, start, target.parameters), parse_state(args.b, start, target.parameters))]
    plan = SamplingPlan(state_samples=max(2, 2 * args.pairs), seed=args.seed)
    candidates = [
        HybridState(mode=mode.id, x=point.x, t=start)
        for mode in target.system.modes
        if mode.dim > 0
        for point in sample_mode_states(target.system, mode.id, plan)
    ]
    if len(candidates) < 2:  # noqa: PLR2004 # a pair
        raise ConfigurationError(f"Could not sample two initial states of {target.label}")
    rng = np.random.default_rng(args.seed)
    pairs: list[tuple[HybridState, HybridState]] = []
    for _ in range(args.pairs):
        first, second = rng.choice(len(candidates), size=2, replace=False)
        pairs.append((candidates[int(first)], candidates[int(second)]))
    return pairs


def cmd_experiment(args: argparse.Namespace, target: Target) -> int:
    certificate = certify(target.system, _plan(args), tol=args.tol)
    envelope = DwellEnvelope(
        c=certificate.c_hat if args.c is None else args.c,
        k=certificate.k_hat if args.k is None else args.k,
        tau_lower=args.tau_lower,
        tau_upper=math.inf if args.tau_upper is None else args.tau_upper,
    )
    t_end = _horizon(target, args.t_end)
    report = pairwise_contraction_experiment(
        target.system,
        _experiment_pairs(args, target),
        t_end,
        envelope,
        time_samples=args.time_samples,
        distance_options=_distance_options(args),
    )
    out_dir = Path(args.out_dir)
    options = {"pairs": args.pairs, "a": args.a, "b": args.b, "t_end": t_end, "time_samples": args.time_samples}
    write_json(out_dir / "experiment.json", {"config": _run_config(args, target, options), "report": report})
    header, rows = experiment_rows(report)
    write_csv(out_dir / "experiment.csv", header, rows)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, target: Target) -> int:
    diagnostics = validate(target.system, _plan(args))
    for diagnostic in diagnostics:
        logger.warning(f"[{diagnostic.kind}] {diagnostic.location}: {diagnostic.message}")
    options = {"state_samples": args.state_samples, "guard_samples": args.guard_samples}
    write_json(
        Path(args.out_dir) / "validation.json",
        {"config": _run_config(args, target, options), "diagnostics": diagnostics},
    )
    if diagnostics:
        return EXIT_EXPECTATION
    logger.info(f"System {target.label} passed validation")
    return EXIT_OK


_COMMANDS: dict[str, Callable[[argparse.Namespace, Target], int]] = {
    "simulate": cmd_simulate,
    "certify": cmd_certify,
    "saltation": cmd_saltation,
    "distance": cmd_distance,
    "experiment": cmd_experiment,
    "validate": cmd_validate,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group(required=True)
    _ = source.add_argument("--system", help="name of a built-in system")
    _ = source.add_argument("--config", help="path to a JSON system definition")
    _ = common.add_argument("--param", action="append", default=[], help="parameter override name=value")
    _ = common.add_argument("--seed", type=int, default=0)
    _ = common.add_argument("--out-dir", default=".")
    _ = common.add_argument("--tol", type=float, default=1e-9)
    _ = common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    _ = common.add_argument("--state-samples", type=int, default=256)
    _ = common.add_argument("--guard-samples", type=int, default=64)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="hybrid-contraction", description=__doc__)
    commands = parser.add_subparsers(dest="command", required=True)

    simulate_parser = commands.add_parser("simulate", parents=[common], help="simulate one trajectory")
    _ = simulate_parser.add_argument("--t-end", type=float)
    _ = simulate_parser.add_argument("--init", help="initial state mode:v1,v2,...")
    _ = simulate_parser.add_argument("--sample-step", type=float, help="resample arcs on a uniform grid")

    certify_parser = commands.add_parser("certify", parents=[common], help="sample the contraction conditions")
    _ = certify_parser.add_argument("--draws", type=int, default=0, help="random parameter draws for the resets")
    _ = certify_parser.add_argument("--expect-contractive", action="store_true")
    _ = certify_parser.add_argument("--c-target", type=float, default=0.0)
    _ = certify_parser.add_argument("--tau-lower", type=float)
    _ = certify_parser.add_argument("--tau-upper", type=float)

    saltation_parser = commands.add_parser("saltation", parents=[common], help="saltation matrices on guards")
    _ = saltation_parser.add_argument("--at", help="guard point x1=v1,x2=v2,...")
    _ = saltation_parser.add_argument("--time", type=float, default=0.0)
    _ = saltation_parser.add_argument("--transition", help="restrict to source->target")

    distance_parser = commands.add_parser("distance", parents=[common], help="intrinsic distance of two states")
    _ = distance_parser.add_argument("--a", required=True, help="first state mode:v1,v2,...")
    _ = distance_parser.add_argument("--b", required=True, help="second state mode:v1,v2,...")
    _ = distance_parser.add_argument("--time", type=float, default=0.0)
    _ = distance_parser.add_argument("--depth", type=int, default=3)
    _ = distance_parser.add_argument("--restarts", type=int, default=8)
    _ = distance_parser.add_argument("--dump-path", action="store_true")

    experiment_parser = commands.add_parser("experiment", parents=[common], help="pairwise distance against envelope")
    _ = experiment_parser.add_argument("--pairs", type=int, default=2)
    _ = experiment_parser.add_argument("--a", help="first state of an explicit pair")
    _ = experiment_parser.add_argument("--b", help="second state of an explicit pair")
    _ = experiment_parser.add_argument("--t-end", type=float)
    _ = experiment_parser.add_argument("--time-samples", type=int, default=11)
    _ = experiment_parser.add_argument("--c", type=float, help="flow rate of the envelope instead of c_hat")
    _ = experiment_parser.add_argument("--k", type=float, help="reset gain of the envelope instead of K_hat")
    _ = experiment_parser.add_argument("--tau-lower", type=float, default=0.0)
    _ = experiment_parser.add_argument("--tau-upper", type=float)
    _ = experiment_parser.add_argument("--depth", type=int, default=3)
    _ = experiment_parser.add_argument("--restarts", type=int, default=8)

    _ = commands.add_parser("validate", parents=[common], help="check evaluators, Jacobians and guards")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    args, extras = parser.parse_known_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    try:
        overrides = parse_parameters(args.param, extras)
        target = load_target(args.system, args.config, overrides)
        return _COMMANDS[args.command](args, target)
    except GrazingError as e:
        logger.error(str(e))  # noqa: TRY400 # the message is the report; no traceback for expected failures
        return EXIT_GRAZING
    except (HybridSystemError, ValidationError, OSError) as e:
        logger.error(str(e))  # noqa: TRY400 # the message is the report; no traceback for expected failures
        return EXIT_CONFIGURATION


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
