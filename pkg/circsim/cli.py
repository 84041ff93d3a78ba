"""
circsim command line.

Every command reads a run configuration (``--config PATH`` or ``--preset NAME``),
lets flags override it, and writes CSV series and JSON reports into ``--out``.
Each output embeds the effective configuration and the seed.

Exit status: 0 success, 1 usage or configuration error, 2 numerical failure.
"""
import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from . import ExitStatus, __version__
from .abc import PolicyAction
from .circularity import (
    Ledger, lambda_netzero, lambda_series, lambda_solid_scenario, load_events, load_flows, write_lambda_csv
)
from .config import RunConfig, parse_override, presets
from .envs import list_envs
from .exceptions import ConfigurationError, EpisodeError, InvalidNetwork, NumericalError
from .integrate import constant_schedule, verify_step_size
from .network import builtin_network, load_network
from .trainers import (
    HISTORY_COLUMNS, TIMING_COLUMNS, TRAINERS, LinearPolicy, MalformedPolicyRecord, PolicyDivergence, evaluate,
    read_policy, write_policy
)
from .utils import comment_header, log_call, write_csv, write_json

DEFAULT_GRID_POINTS = 1001


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class CommandHandler:
    """
    Runs one parsed command line.

    The command ``simulate`` is handled by a method ``do_simulate()``; dashes in
    command names become underscores. Every ``do_`` method returns an
    :class:`ExitStatus`; library errors are turned into the matching status by
    :meth:`handle`.
    """

    logger = logging.getLogger("circsim.cli")

    responses = {
        v: (v.phrase, v.description)
        for v in ExitStatus.__members__.values()
    }

    def __init__(self, args: argparse.Namespace, stdout=None):
        self.args = args
        self.command = args.command
        self.stdout = stdout if stdout is not None else sys.stdout
        self._config: Optional[RunConfig] = None

    def handle(self) -> ExitStatus:
        mname = "do_" + self.command.replace("-", "_")

        if not hasattr(self, mname):
            return self.send_error(ExitStatus.USAGE_ERROR, f"Unsupported command ({self.command!r})")

        try:
            return getattr(self, mname)()
        except (ConfigurationError, InvalidNetwork, MalformedPolicyRecord) as err:
            return self.send_error(ExitStatus.USAGE_ERROR, str(err))
        except (NumericalError, EpisodeError) as err:
            return self.send_error(ExitStatus.NUMERICAL_FAILURE, str(err))
        except OSError as err:
            return self.send_error(ExitStatus.USAGE_ERROR, f"{err.filename or ''}: {err.strerror}")
        except (ValueError, TypeError) as err:
            return self.send_error(ExitStatus.USAGE_ERROR, f"{type(err).__name__}: {err}")

    def send_error(self, status: ExitStatus, message: Optional[str] = None) -> ExitStatus:
        short, long = self.responses[status]
        if message is None:
            message = long
        self.log_error("exit %d (%s): %s", status, short, message)
        print(f"circsim: error: {message}", file=sys.stderr)
        return status

    def log_message(self, format, *args):
        self.logger.info(format % args)

    def log_error(self, format, *args):
        self.logger.error(format % args)

    def write(self, line: str = ""):
        print(line, file=self.stdout)

    @property
    def config(self) -> RunConfig:
        if self._config is None:
            self._config = load_run_config(self.args)
        return self._config

    @property
    def out_dir(self) -> str:
        os.makedirs(self.config.out, exist_ok=True)
        return self.config.out

    def output(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def header(self) -> List[str]:
        return comment_header(self.config.echo(), self.config.seed)

    def report(self, name: str, doc: Dict[str, Any]):
        doc = dict(doc, config=self.config.echo(), seed=self.config.seed)
        path = self.output(name)
        write_json(path, doc)
        self.log_message("wrote %s", path)

    @log_call
    def do_list_envs(self) -> ExitStatus:
        self.write(f"{'name':<22}{'state':>6}{'action':>8}  {'compartment':<13}role")
        for entry in list_envs():
            self.write(f"{entry.name:<22}{entry.state_dim:>6}{entry.action_dim:>8}  {entry.compartment:<13}{entry.role}")
        return ExitStatus.OK

    @log_call
    def do_simulate(self) -> ExitStatus:
        cfg = self.config
        env = cfg.require_env().make()
        sim = cfg.simulate

        if sim.policy is not None:
            policy = read_policy(sim.policy)
            _check_policy(policy, env)
            runner, act = PolicyAction(env), policy.act
        elif sim.action is not None:
            action = np.array(sim.action, dtype=float)
            if action.shape != env.action_space.shape:
                raise ConfigurationError(f"simulate.action needs {env.action_space.shape[0]} value(s)",
                                         path=cfg.source)
            runner, act = env, (lambda obs: action)
        else:
            policy = LinearPolicy.zeros(env.action_space.shape[0], env.observation_space.shape[0])
            runner, act = PolicyAction(env), policy.act

        steps = sim.steps or env.max_episode_steps
        obs, info = runner.reset(seed=cfg.seed)
        t, x = info["t"], info["state"]

        rows = []
        total = 0.0
        termination, error = "steps", None

        while len(rows) < steps:
            obs, reward, terminated, truncated, info = runner.step(act(obs))
            rows.append(env.trajectory_row(t, x, info["action"], reward, info))
            total += reward
            t, x = info["t"], info["state"]

            if terminated or truncated:
                termination, error = info.get("termination"), info.get("error")
                break

        write_csv(self.output("trajectory.csv"), env.csv_columns, rows, self.header())
        self.report("summary.json", {
            "env": env.name,
            "episode_return": total,
            "steps": len(rows),
            "termination": termination,
            "error": error,
            "final_state": x,
            "time_unit_seconds": env.time_unit_seconds,
        })
        self.write(f"{env.name}: {len(rows)} steps, return {total:.10g} ({termination})")

        if termination == "numerical-failure":
            return self.send_error(ExitStatus.NUMERICAL_FAILURE, error)
        return ExitStatus.OK

    @log_call
    def do_train(self) -> ExitStatus:
        cfg = self.config
        env_config = cfg.require_env()
        if cfg.trainer is None:
            raise ConfigurationError("No trainer configured; set trainer.name or pass --trainer", path=cfg.source)

        header = self.header()

        try:
            run = TRAINERS[cfg.trainer.name].train(env_config, cfg.trainer.config, workers=cfg.workers)
        except PolicyDivergence as err:
            write_csv(self.output("history.csv"), HISTORY_COLUMNS, [h.row() for h in err.history], header)
            write_csv(self.output("timing.csv"), TIMING_COLUMNS,
                      [(h.iteration, h.wall_time) for h in err.history], header)
            self.report("report.json", {"error": str(err), "iteration": err.iteration,
                                        "trainer": cfg.trainer.name, "env": env_config.name})
            return self.send_error(ExitStatus.NUMERICAL_FAILURE, str(err))

        write_policy(self.output("policy.json"), run.policy)
        write_csv(self.output("history.csv"), HISTORY_COLUMNS, run.history_rows(), header)
        write_csv(self.output("timing.csv"), TIMING_COLUMNS, run.timing_rows(), header)

        doc = run.as_dict()
        doc["env_steps"] = run.history[-1].env_steps if run.history else 0
        self.report("report.json", doc)

        r = run.report
        self.write(f"{run.trainer} on {env_config.name}: r_s={r.r_s:.10g} r_e={r.r_e:.10g} zeta={r.zeta:.10g}")
        return ExitStatus.OK

    @log_call
    def do_evaluate(self) -> ExitStatus:
        cfg = self.config
        env_config = cfg.require_env()
        if cfg.evaluate.policy is None:
            raise ConfigurationError("No policy to evaluate; set evaluate.policy or pass --policy", path=cfg.source)

        policy = read_policy(cfg.evaluate.policy)
        _check_policy(policy, env_config.make())

        mean = evaluate(policy, env_config, cfg.evaluate.n_episodes, cfg.seed, cfg.workers)

        self.report("evaluation.json", {
            "env": env_config.name,
            "policy": cfg.evaluate.policy,
            "mean_return": mean,
            "n_episodes": cfg.evaluate.n_episodes,
        })
        self.write(f"{env_config.name}: mean return {mean:.10g} over {cfg.evaluate.n_episodes} episode(s)")
        return ExitStatus.OK

    @log_call
    def do_circularity(self) -> ExitStatus:
        block = self.config.circularity
        kind = self.args.circularity_command
        extra: Dict[str, Any] = {}

        if kind == "ledger":
            name = block.network or "n_s"
            tmn = load_network(name) if os.path.exists(name) else builtin_network(name)
            events = load_events(block.events) if block.events else []
            flows = load_flows(block.flows) if block.flows else []
            ledger = Ledger(tmn, events, flows, block.cfg)

            ends = [e.time for e in events] + [f.times[-1] for f in flows]
            times = _grid(block.times, max(ends, default=0.0) * 1.1)
            values = lambda_series(ledger.lambda_at, times)
            extra.update(network=tmn.material, n_events=len(events), n_flows=len(flows))

        elif kind == "solid-scenario":
            sc = block.scenario
            if sc is None:
                raise ConfigurationError("solid-scenario needs circularity.scenario with m, s and T_s",
                                         path=self.config.source)
            times = _grid(block.times, 1.5 * sc.t_incinerator_in_recycled)
            values = lambda_series(lambda t: lambda_solid_scenario(sc, t), times)
            extra["event_times"] = sc.event_times()
            for key, value in sc.event_times().items():
                self.write(f"{key} = {value:.17g}")

        else:
            if block.emitter is None or block.remover is None:
                raise ConfigurationError("netzero needs circularity.emitter and circularity.remover",
                                         path=self.config.source)
            emitter = block.emitter.load(1, 2)
            remover = block.remover.load(2, 3)
            span = (min(emitter.times[0], remover.times[0]), max(emitter.times[-1], remover.times[-1]))
            times = _grid(block.times, span[1], span[0])
            values = lambda_series(lambda t: lambda_netzero(emitter, remover, t, block.cfg), times)

        write_lambda_csv(self.output("lambda.csv"), times, values, self.header())
        self.report("circularity.json", {
            "subcommand": kind,
            "delta": block.delta,
            "n_samples": len(times),
            "lambda_min": float(np.min(values)),
            "lambda_max": float(np.max(values)),
            "lambda_final": float(values[-1]),
            **extra,
        })
        self.write(f"{kind}: {len(times)} samples, lambda in [{np.min(values):.10g}, {np.max(values):.10g}]")
        return ExitStatus.OK

    @log_call
    def do_verify_integrator(self) -> ExitStatus:
        cfg = self.config
        env = cfg.require_env().make()
        vb = cfg.verify

        if vb.initial_state is not None:
            x0 = np.array(vb.initial_state, dtype=float)
        else:
            _, info = env.reset(seed=cfg.seed)
            x0 = info["state"]

        if vb.action is not None:
            action = np.array(vb.action, dtype=float)
        else:
            action = np.clip(np.zeros(env.action_space.shape), env.action_space.low, env.action_space.high)

        horizon = vb.horizon if vb.horizon is not None else env.max_episode_steps * env.ode_spec.dt
        report = verify_step_size(env.ode_spec, x0, constant_schedule(action), horizon, vb.rel_tol,
                                  vb.reference_rtol)

        doc = report.as_dict()
        doc.update(env=env.name, state_names=list(env.state_names), initial_state=x0, action=action)
        self.report("verification.json", doc)

        self.write(f"{env.name}: {'PASS' if report.passed else 'FAIL'} (rel_tol={vb.rel_tol:g})")
        for name, deviation in zip(env.state_names, report.deviations):
            self.write(f"  {name:<6} {deviation:.3e}")

        if not report.passed:
            return self.send_error(ExitStatus.NUMERICAL_FAILURE,
                                   report.error or f"deviation {np.max(report.deviations):.3e} exceeds {vb.rel_tol:g}")
        return ExitStatus.OK


def _check_policy(policy: LinearPolicy, env):
    if policy.obs_dim != env.observation_space.shape[0] or policy.action_dim != env.action_space.shape[0]:
        raise ConfigurationError(
            f"Policy is {policy.action_dim}x{policy.obs_dim}; {env.name} needs "
            f"{env.action_space.shape[0]}x{env.observation_space.shape[0]}"
        )


def _grid(times: Optional[np.ndarray], stop: float, start: float = 0.0) -> np.ndarray:
    if times is not None:
        return times
    return np.linspace(start, max(stop, start + 1.0), DEFAULT_GRID_POINTS)


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    The run configuration of a command line: file or preset, then flag overrides.
    """
    overrides = dict(parse_override(s) for s in (args.set or ()))

    for key, dest, is_path in _FLAG_OVERRIDES.get(args.command, ()) + _COMMON_OVERRIDES:
        value = getattr(args, dest, None)
        if value is not None:
            overrides[key] = os.path.abspath(value) if is_path else value

    if args.config and args.preset:
        raise ConfigurationError("Pass either --config or --preset, not both")
    if args.config:
        return RunConfig.load(args.config, overrides)
    if args.preset:
        return RunConfig.from_preset(args.preset, overrides)
    return RunConfig.from_document({}, overrides=overrides)


_COMMON_OVERRIDES = (
    ("seed", "seed", False),
    ("out", "out", False),
    ("workers", "workers", False),
    ("env.name", "env", False),
)

_FLAG_OVERRIDES = {
    "simulate": (("simulate.policy", "policy", True), ("simulate.action", "action", False),
                 ("simulate.steps", "steps", False)),
    "train": (("trainer.name", "trainer", False), ("trainer.iterations", "iterations", False)),
    "evaluate": (("evaluate.policy", "policy", True), ("evaluate.n_episodes", "episodes", False)),
    "circularity": (("circularity.network", "network", False), ("circularity.events", "events", True),
                    ("circularity.flows", "flows", True), ("circularity.delta", "delta", False)),
    "verify-integrator": (("verify.rel_tol", "rel_tol", False), ("verify.horizon", "horizon", False)),
}


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (JSON)")
    common.add_argument("--preset", metavar="NAME", help=f"checked-in configuration: {', '.join(presets())}")
    common.add_argument("--seed", type=int, metavar="N", help="master seed")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--workers", type=int, metavar="N", help="rollout worker threads")
    common.add_argument("--env", metavar="NAME", help="environment name (see list-envs)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a configuration value, e.g. env.params.dt=0.1")
    logging_flags = common.add_mutually_exclusive_group()
    logging_flags.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                               help="debug logging")
    logging_flags.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS,
                               help="warnings and errors only")

    parser = _ArgumentParser(prog="circsim", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    commands.add_parser("list-envs", parents=[common], help="list the environments")

    p = commands.add_parser("simulate", parents=[common], help="run one episode and export its trajectory")
    p.add_argument("--policy", metavar="PATH", help="policy record to drive the episode")
    p.add_argument("--action", type=float, nargs="+", metavar="A", help="constant action, environment units")
    p.add_argument("--steps", type=int, metavar="N", help="stop after N steps")

    p = commands.add_parser("train", parents=[common], help="train a linear policy")
    p.add_argument("--trainer", choices=sorted(TRAINERS), help="trainer")
    p.add_argument("--iterations", type=int, metavar="N", help="training iterations")

    p = commands.add_parser("evaluate", parents=[common], help="mean return of a saved policy")
    p.add_argument("--policy", metavar="PATH", help="policy record")
    p.add_argument("--episodes", type=int, metavar="N", help="evaluation episodes")

    p = commands.add_parser("circularity", help="circularity of a material network over time")
    kinds = p.add_subparsers(dest="circularity_command", metavar="KIND", required=True)
    for kind, text in (("ledger", "from batch events and continuous flows"),
                       ("solid-scenario", "closed form of the solids network"),
                       ("netzero", "emitted minus removed CO2 flow")):
        k = kinds.add_parser(kind, parents=[common], help=text)
        k.add_argument("--network", metavar="NAME|PATH", help="built-in network name or description file")
        k.add_argument("--events", metavar="PATH", help="event log")
        k.add_argument("--flows", metavar="PATH", help="flow file")
        k.add_argument("--delta", type=float, metavar="S", help="flow-to-mass time constant")

    p = commands.add_parser("verify-integrator", parents=[common],
                            help="compare the fixed-step integration with an adaptive reference")
    p.add_argument("--rel-tol", type=float, metavar="X", help="accepted relative deviation per state")
    p.add_argument("--horizon", type=float, metavar="T", help="simulated time")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as err:
        print(f"{err}", file=sys.stderr)
        return int(ExitStatus.USAGE_ERROR)

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")

    try:
        return int(CommandHandler(args).handle())
    except UsageError as err:
        print(f"{err}", file=sys.stderr)
        return int(ExitStatus.USAGE_ERROR)


__all__ = ["CommandHandler", "UsageError", "build_parser", "load_run_config", "main"]
