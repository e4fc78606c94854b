"""MCP server exposing the coherent-state workflows to assistant clients."""

import asyncio
import json
import logging
from typing import Any, Dict, List

from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from sucs.core.config import DEFAULT_SEED, RunConfig
from sucs.infrastructure.filesystem import AIOFileSystem
from sucs.tools.chain import ChainTool
from sucs.tools.evolution import EvolutionTool
from sucs.tools.generators import GeneratorTool
from sucs.tools.propagator_check import DEFAULT_SAMPLE_COUNTS, DEFAULT_SLICES, PropagatorTool
from sucs.tools.verification import DEFAULT_SAMPLES, SUITES, VerificationTool

logger = logging.getLogger("sucs.main")

_RUN_SCHEMA = {
    "format": {"type": "string", "enum": ["csv", "json"], "default": "csv"},
    "output": {"type": "string", "description": "Write data to this path instead of returning it"},
    "hbar": {"type": "number", "default": 1.0},
}


class SucsMCPServer:
    """MCP server wrapping the generator, evolution, chain and verification tools."""

    def __init__(self):
        self.server = Server("sucs")
        store = AIOFileSystem()
        self.generator_tool = GeneratorTool(store)
        self.evolution_tool = EvolutionTool(store)
        self.chain_tool = ChainTool(store)
        self.verification_tool = VerificationTool(store)
        self.propagator_tool = PropagatorTool(store)

        self._register_tools()

    def _register_tools(self):
        self.server.list_tools = self._list_tools
        self.server.call_tool = self._call_tool

    async def _list_tools(self) -> List[Tool]:
        """Return list of available tools."""
        return [
            Tool(
                name="build_generators",
                description="Generalized Gell-Mann generators of su(n), optionally with the invariant suite",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "n": {"type": "integer", "minimum": 2, "maximum": 16},
                        "check": {"type": "boolean", "default": False},
                        "seed": {"type": "integer", "default": DEFAULT_SEED},
                        "hbar": {"type": "number", "default": 1.0},
                        "output": {"type": "string"},
                    },
                    "required": ["n"],
                },
            ),
            Tool(
                name="evolve",
                description="Integrate the classical coherent-state equations of motion",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "hamiltonian": {"type": "object", "description": '{"matrix": ...} or {"terms": [...]}'},
                        "initial": {"type": "object", "description": '{"n", "psi_re", "psi_im", "spin_J"}'},
                        "t_span": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "tolerance": {"type": "number", "default": 1e-8},
                        "mode": {"type": "string", "enum": ["metric", "paper"], "default": "metric"},
                        "points": {"type": "integer"},
                        "observables": {"type": "array", "items": {"type": "string"}},
                        **_RUN_SCHEMA,
                    },
                    "required": ["hamiltonian", "initial", "t_span"],
                },
            ),
            Tool(
                name="chain_evolve",
                description="Integrate a mean-field SU(2S+1) spin chain and report conservation laws",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "model": {"type": "object", "description": '{"sites", "n", "boundary", "bonds", "field"}'},
                        "initial": {"description": "Per-site list of states or one state for every site"},
                        "t_span": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                        "tolerance": {"type": "number", "default": 1e-8},
                        "points": {"type": "integer"},
                        "compare_exact": {"type": "boolean", "default": False},
                        **_RUN_SCHEMA,
                    },
                    "required": ["model", "initial", "t_span"],
                },
            ),
            Tool(
                name="verify",
                description="Run a verification suite and report each check",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "suite": {"type": "string", "enum": list(SUITES)},
                        "n": {"type": "integer", "default": 2},
                        "samples": {"type": "integer", "default": DEFAULT_SAMPLES},
                        "seed": {"type": "integer", "default": DEFAULT_SEED},
                        "workers": {"type": "integer"},
                        "hbar": {"type": "number", "default": 1.0},
                        "output": {"type": "string"},
                    },
                    "required": ["suite"],
                },
            ),
            Tool(
                name="propagator_check",
                description="Monte Carlo convergence table of the one-insertion propagator estimate",
                inputSchema={
                    "type": "object",
                    "properties": {
                        "n": {"type": "integer", "default": 2},
                        "t": {"type": "number", "default": 1.0},
                        "samples": {"type": "array", "items": {"type": "integer"}},
                        "slices": {"type": "array", "items": {"type": "integer"}},
                        "seed": {"type": "integer", "default": DEFAULT_SEED},
                        "workers": {"type": "integer"},
                        "hamiltonian": {"type": "object"},
                        "output": {"type": "string"},
                    },
                },
            ),
        ]

    def _run_config(self, command: str, arguments: Dict[str, Any], params: List[str]) -> RunConfig:
        return RunConfig(
            command=command,
            params={key: arguments[key] for key in params if key in arguments},
            format=arguments.get("format", "csv"),
            output=arguments.get("output"),
        )

    async def _call_tool(self, name: str, arguments: Dict[str, Any]) -> List[TextContent]:
        """Execute a tool call."""
        try:
            if name == "build_generators":
                result = await self.generator_tool.build(
                    arguments.get("n"),
                    arguments.get("check", False),
                    arguments.get("hbar", 1.0),
                    arguments.get("seed", DEFAULT_SEED),
                    arguments.get("output"),
                )
            elif name == "evolve":
                result = await self.evolution_tool.evolve(self._run_config(name, arguments, [
                    "hamiltonian", "initial", "t_span", "tolerance", "mode", "points", "observables", "hbar",
                ]))
            elif name == "chain_evolve":
                result = await self.chain_tool.evolve(self._run_config(name, arguments, [
                    "model", "initial", "t_span", "tolerance", "points", "compare_exact", "hbar",
                ]))
            elif name == "verify":
                result = await self.verification_tool.verify(
                    arguments.get("suite"),
                    arguments.get("n", 2),
                    arguments.get("samples", DEFAULT_SAMPLES),
                    arguments.get("seed", DEFAULT_SEED),
                    arguments.get("workers"),
                    arguments.get("hbar", 1.0),
                    output=arguments.get("output"),
                )
            elif name == "propagator_check":
                result = await self.propagator_tool.check(
                    arguments.get("n", 2),
                    arguments.get("t", 1.0),
                    arguments.get("samples", DEFAULT_SAMPLE_COUNTS),
                    arguments.get("slices", DEFAULT_SLICES),
                    arguments.get("seed", DEFAULT_SEED),
                    arguments.get("workers"),
                    hamiltonian=arguments.get("hamiltonian"),
                    output=arguments.get("output"),
                )
            else:
                raise ValueError(f"Unknown tool: {name}")

            if "error" in result:
                return [TextContent(type="text", text=f"Error: {result['error']}")]
            return [TextContent(type="text", text=json.dumps(result, default=str))]

        except Exception as e:
            logger.error(f"Error executing tool {name}: {str(e)}")
            return [TextContent(type="text", text=f"Error: {str(e)}")]


async def main():
    """Main entry point for the MCP server."""
    logging.basicConfig(level=logging.INFO)
    server_instance = SucsMCPServer()

    async with stdio_server() as (read_stream, write_stream):
        await server_instance.server.run(
            read_stream,
            write_stream,
            server_instance.server.create_initialization_options()
        )


if __name__ == "__main__":
    asyncio.run(main())
