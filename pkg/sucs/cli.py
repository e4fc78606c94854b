"""Command line: generators, evolve, chain, verify, propagator-check.

stdout carries data (or the output path when --output is given); the human
summary and logs go to stderr. Exit codes: 0 success, 1 runtime or check
failure, 2 usage error.
"""

import argparse
import asyncio
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

from sucs import __version__
from sucs.core.config import OUTPUT_FORMATS, RunConfig, load_run_config
from sucs.core.errors import ConfigError, SucsError
from sucs.infrastructure.filesystem import AIOFileSystem
from sucs.tools.chain import ChainTool
from sucs.tools.evolution import EvolutionTool
from sucs.tools.generators import GeneratorTool
from sucs.tools.propagator_check import DEFAULT_SAMPLE_COUNTS, DEFAULT_SLICES, PropagatorTool
from sucs.tools.verification import DEFAULT_SAMPLES, SUITES, VerificationTool

logger = logging.getLogger("sucs")

_RUN_KEYS = ("seed", "output", "format", "workers", "log_level")


def _json_arg(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise argparse.ArgumentTypeError(f"not valid JSON: {e}") from e


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--seed", type=int, help="Unsigned 64-bit seed (default 0xC0FFEE)")
    parser.add_argument("--workers", type=int, help="Worker threads (default: SUCS_WORKERS or CPU count)")
    parser.add_argument("--output", "-o", help="Write data to this path instead of stdout")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    parser.add_argument("--hbar", type=float, help="Action unit (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sucs", description="SU(n) coherent states: construction, dynamics, checks")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generators", help="Dump the su(n) generators")
    gen.add_argument("n", type=int, help="Group dimension, 2..16")
    gen.add_argument("--check", action="store_true", help="Run the algebra invariant suite")
    _add_common(gen)

    evolve = sub.add_parser("evolve", help="Integrate the classical equations of motion")
    evolve.add_argument("--hamiltonian", type=_json_arg, help='{"matrix": ...} or {"terms": [...]}')
    evolve.add_argument("--initial", type=_json_arg, help='{"n": 2, "psi_re": [...], "psi_im": [...]}')
    evolve.add_argument("--t-span", dest="t_span", type=float, nargs=2, metavar=("T0", "T1"))
    evolve.add_argument("--tolerance", type=float)
    evolve.add_argument("--mode", choices=("metric", "paper"))
    evolve.add_argument("--points", type=int, help="Uniform output grid instead of every accepted step")
    evolve.add_argument("--observables", nargs="+", help="Labels to record, e.g. Sx Sz Qzz T3")
    evolve.add_argument("--format", choices=OUTPUT_FORMATS)
    _add_common(evolve)

    chain = sub.add_parser("chain", help="Integrate a mean-field spin chain")
    chain.add_argument("--model", type=_json_arg, help='{"sites": N, "n": n, "bonds": [...], ...}')
    chain.add_argument("--initial", type=_json_arg, help="Per-site list or one record for all sites")
    chain.add_argument("--t-span", dest="t_span", type=float, nargs=2, metavar=("T0", "T1"))
    chain.add_argument("--tolerance", type=float)
    chain.add_argument("--points", type=int)
    chain.add_argument("--compare-exact", dest="compare_exact", action="store_true", default=None)
    chain.add_argument("--format", choices=OUTPUT_FORMATS)
    _add_common(chain)

    verify = sub.add_parser("verify", help="Run a verification suite")
    verify.add_argument("suite", help=f"One of: {', '.join(SUITES)}")
    verify.add_argument("--n", type=int, default=2)
    verify.add_argument("--samples", type=int)
    _add_common(verify)

    prop = sub.add_parser("propagator-check", help="Monte Carlo convergence table for the propagator")
    prop.add_argument("--n", type=int, default=2)
    prop.add_argument("--t", type=float, default=1.0)
    prop.add_argument("--samples", type=int, nargs="+")
    prop.add_argument("--slices", type=int, nargs="+")
    _add_common(prop)
    return parser


def _flags(args: argparse.Namespace, names: Sequence[str]) -> Dict[str, Any]:
    return {name: getattr(args, name, None) for name in names}


def _summary_line(result: Dict[str, Any]) -> str:
    skip = {"content", "checks", "table", "labels", "final_psi", "multipole_labels", "exit_code"}
    parts = []
    for key, value in result.items():
        if key in skip or isinstance(value, (dict, list)):
            continue
        parts.append(f"{key}={value:.3e}" if isinstance(value, float) else f"{key}={value}")
    return " ".join(parts)


def _report(result: Dict[str, Any]) -> int:
    if "error" in result:
        print(f"Error: {result['error']}", file=sys.stderr)
        return int(result.get("exit_code", 1))
    if "output" in result:
        print(result["output"])
    else:
        sys.stdout.write(result["content"])
    for check in result.get("checks", []):
        status = "pass" if check["passed"] else "FAIL"
        print(f"  {check['name']}: {check['value']:.3e} (< {check['threshold']:.3e}) {status}", file=sys.stderr)
    print(_summary_line(result), file=sys.stderr)
    return int(result.get("exit_code", 0))


async def _dispatch(args: argparse.Namespace, config: RunConfig) -> Dict[str, Any]:
    store = AIOFileSystem()
    hbar = float(config.param("hbar", 1.0))
    if args.command == "generators":
        return await GeneratorTool(store).build(args.n, args.check, hbar, config.seed, config.output)
    if args.command == "evolve":
        return await EvolutionTool(store).evolve(config)
    if args.command == "chain":
        return await ChainTool(store).evolve(config)
    if args.command == "verify":
        return await VerificationTool(store).verify(
            args.suite,
            args.n,
            int(config.param("samples", DEFAULT_SAMPLES)),
            config.seed,
            config.workers,
            hbar,
            config.output,
        )
    if args.command == "propagator-check":
        return await PropagatorTool(store).check(
            args.n,
            args.t,
            config.param("samples", DEFAULT_SAMPLE_COUNTS),
            config.param("slices", DEFAULT_SLICES),
            config.seed,
            config.workers,
            hbar=hbar,
            output=config.output,
        )
    raise ConfigError(f"Unknown command: {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    param_names = {
        "generators": ("hbar",),
        "evolve": ("hamiltonian", "initial", "t_span", "tolerance", "mode", "points", "observables", "hbar"),
        "chain": ("model", "initial", "t_span", "tolerance", "points", "compare_exact", "hbar"),
        "verify": ("samples", "hbar"),
        "propagator-check": ("samples", "slices", "hbar"),
    }[args.command]
    try:
        config = load_run_config(args.command, _flags(args, _RUN_KEYS + param_names), args.config)
    except SucsError as e:
        print(f"Error: {e}", file=sys.stderr)
        return e.exit_code

    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    logger.debug(f"Running {args.command} with seed={config.seed}, workers={config.workers}")
    return _report(asyncio.run(_dispatch(args, config)))


if __name__ == "__main__":
    sys.exit(main())
