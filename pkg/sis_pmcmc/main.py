from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from .chain import read_chain_csv
from .config import RunConfig, Settings, get_settings, load_run_config
from .data import cumulative_to_prevalence, load_case_series
from .errors import ConfigError, SisError
from .inference import run_inference
from .presets import ModelSetup, build_model
from .rng import configure_threads
from .simulate import SimulationOutput, load_simulation_counts, simulate_abm, write_simulation
from .smc import EXACT_MAX_AGENTS, bootstrap_filter, exact_loglik_forward
from .summary import posterior_summary, predict_trajectories

logger = logging.getLogger("sis-pmcmc")

SUBCOMMANDS = ("simulate", "loglik", "fit", "predict", "summarize")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sis-pmcmc",
        description="Agent-based SIS model: simulation, particle filtering and particle MCMC.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        source = p.add_mutually_exclusive_group(required=True)
        source.add_argument("--config", help="RunConfig JSON file")
        source.add_argument("--preset", help="preset name under the presets directory")
        p.add_argument("--seed", type=int, help="simulate: world seed; otherwise sampler seed")
        p.add_argument("--output", dest="output_dir", help="output directory")
        p.add_argument("--data", help="observed series (day,count CSV or simulation CSV)")
        p.add_argument("--response", choices=["cumulative", "prevalence"])
        p.add_argument("--particles", type=int)
        if name == "fit":
            p.add_argument("--algo", dest="algorithm", choices=["pmmh", "pg"])
            p.add_argument("--iterations", type=int)
            p.add_argument("--burn-in", dest="burn_in", type=int)
            p.add_argument("--thin", type=int)
        if name in ("predict", "summarize"):
            p.add_argument("--chain", help="chain CSV (default: <output>/<chain_file>)")
        if name == "predict":
            p.add_argument("--draws", type=int, help="posterior draws to simulate")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    get = lambda key: getattr(args, key, None)  # noqa: E731
    overrides: Dict[str, Dict[str, Any]] = {
        "sampler": {
            "algorithm": get("algorithm"),
            "particles": get("particles"),
            "iterations": get("iterations"),
            "burn_in": get("burn_in"),
            "thin": get("thin"),
        },
        "io": {
            "data": get("data"),
            "output_dir": get("output_dir"),
            "response": get("response"),
            "prediction_draws": get("draws"),
        },
        "model": {},
    }
    if args.command == "simulate":
        overrides["model"]["population_seed"] = args.seed
    else:
        overrides["sampler"]["seed"] = args.seed
    return overrides


def _resolve_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    path = args.config or settings.preset_path(args.preset)
    return load_run_config(path, _overrides(args))


def _simulate_truth(config: RunConfig, setup: ModelSetup) -> SimulationOutput:
    if config.model.truth is None:
        raise ConfigError("no observed data and no model.truth to simulate from")
    theta = config.model.truth.to_parameter_set(setup.gamma_fixed)
    return simulate_abm(
        theta, setup.population, setup.network, config.model.time_steps, config.model.population_seed, key=(1,)
    )


def _is_simulation_file(path: str) -> bool:
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if line:
                return line.replace(" ", "").startswith("t,y")
    return False


def load_observations(config: RunConfig, setup: ModelSetup) -> np.ndarray:
    """y_{0:T} from the configured data file, or simulated from ``model.truth``."""
    path = config.io.data
    if path is None:
        return _simulate_truth(config, setup).observations
    if os.path.exists(path) and _is_simulation_file(path):
        return load_simulation_counts(path)[0]
    counts = load_case_series(path, config.io.interpolate).counts
    if config.io.response == "prevalence":
        if setup.gamma_fixed is None:
            raise ConfigError("--response prevalence needs a fixed recovery rate")
        counts = cumulative_to_prevalence(counts, setup.gamma_fixed)
    return counts


def cmd_simulate(config: RunConfig, setup: ModelSetup, args: argparse.Namespace) -> None:
    output = _simulate_truth(config, setup)
    io = config.io
    states_path = io.output_path(io.hidden_states_file) if io.hidden_states_file else None
    write_simulation(output, io.output_path(io.simulation_file), states_path)


def cmd_loglik(config: RunConfig, setup: ModelSetup, args: argparse.Namespace) -> None:
    if config.model.truth is None:
        raise ConfigError("loglik evaluates model.truth; the config has none")
    theta = config.model.truth.to_parameter_set(setup.gamma_fixed)
    observations = load_observations(config, setup)
    result = bootstrap_filter(
        theta, setup.population, setup.network, observations,
        config.sampler.particles, config.sampler.seed, resampling=config.sampler.resampling,
    )
    print(f"bpf_loglik\t{result.log_marginal_likelihood:.10f}")
    if setup.population.n_agents <= EXACT_MAX_AGENTS:
        exact = exact_loglik_forward(theta, setup.population, setup.network, observations)
        print(f"exact_loglik\t{exact:.10f}")


def cmd_fit(config: RunConfig, setup: ModelSetup, args: argparse.Namespace) -> None:
    observations = load_observations(config, setup)
    chain = run_inference(config, setup, observations)
    io = config.io
    chain.write_csv(io.output_path(io.chain_file))
    posterior_summary(chain, setup.population).to_csv(
        io.output_path(io.summary_file), index=False, float_format="%.17g"
    )


def _load_chain(config: RunConfig, setup: ModelSetup, args: argparse.Namespace):
    path = getattr(args, "chain", None) or config.io.output_path(config.io.chain_file)
    return read_chain_csv(path, setup.template)


def cmd_predict(config: RunConfig, setup: ModelSetup, args: argparse.Namespace) -> None:
    chain = _load_chain(config, setup, args)
    bands = predict_trajectories(
        chain, setup.population, setup.network, config.model.time_steps,
        config.io.prediction_draws, config.sampler.seed, workers=get_settings().prediction_workers,
    )
    path = config.io.output_path(config.io.prediction_file)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    bands.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote prediction bands to {path}")


def cmd_summarize(config: RunConfig, setup: ModelSetup, args: argparse.Namespace) -> None:
    chain = _load_chain(config, setup, args)
    path = config.io.output_path(config.io.summary_file)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    posterior_summary(chain, setup.population).to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote summary to {path}")


COMMANDS = {
    "simulate": cmd_simulate,
    "loglik": cmd_loglik,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "summarize": cmd_summarize,
}


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Exit status: 0 success, 2 bad config or flags, 1 runtime failure."""
    settings = get_settings()
    logging.basicConfig(level=settings.log_level.upper())

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2

    try:
        configure_threads(settings.num_threads)
        config = _resolve_config(args, settings)
        setup = build_model(config.model)
        COMMANDS[args.command](config, setup, args)
    except ConfigError as exc:
        logger.error(f"Configuration error: {exc}")
        return 2
    except SisError as exc:
        logger.error(f"{args.command} failed: {exc}")
        return 1
    except Exception as exc:
        logger.error(f"Unexpected error in {args.command}: {exc}")
        logger.debug("traceback", exc_info=True)
        return 1
    return 0


def main() -> None:
    sys.exit(cli_main())
