"""Single-site classical evolution runs."""

import asyncio
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from sucs.core.config import RunConfig
from sucs.core.errors import ConfigError
from sucs.services import serialization
from sucs.services.dynamics import EomMode, Trajectory, integrate
from sucs.tools.base import ToolBase

logger = logging.getLogger(__name__)


def parse_span(value: Any) -> Tuple[float, float]:
    try:
        t0, t1 = (float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"t_span must be a pair of numbers, got {value!r}") from e
    return t0, t1


def sample_times(t_span: Tuple[float, float], points: Optional[int]) -> Optional[np.ndarray]:
    """Uniform output grid, or None to record every accepted step."""
    if points is None or t_span[1] == t_span[0]:
        return None
    if int(points) < 2:
        raise ConfigError(f"points must be at least 2, got {points}")
    return np.linspace(t_span[0], t_span[1], int(points))


class EvolutionTool(ToolBase):
    """Integrates the coherent-state equations of motion from a run config."""

    async def evolve(self, config: RunConfig) -> Dict[str, Any]:
        try:
            trajectory = await asyncio.to_thread(self._integrate_sync, config)
            if config.format == "json":
                content = serialization.dumps(serialization.trajectory_to_dict(trajectory))
            else:
                content = serialization.trajectory_to_csv(trajectory)
            return await self._emit(self._summary(trajectory), content, config.output)
        except Exception as e:
            return self._failure("evolution", e)

    def _integrate_sync(self, config: RunConfig) -> Trajectory:
        initial_data = config.param("initial")
        hamiltonian_data = config.param("hamiltonian")
        if initial_data is None or hamiltonian_data is None:
            raise ConfigError("evolve needs 'initial' and 'hamiltonian' parameters")
        hbar = float(config.param("hbar", 1.0))
        initial = serialization.state_from_dict(initial_data, hbar)
        h = serialization.hamiltonian_from_dict(hamiltonian_data, initial.rep)
        t_span = parse_span(config.param("t_span", (0.0, 1.0)))
        try:
            mode = EomMode(config.param("mode", EomMode.METRIC_CONSISTENT.value))
        except ValueError as e:
            raise ConfigError(f"Unknown mode: {config.param('mode')}") from e
        return integrate(
            initial,
            h,
            t_span,
            tolerance=float(config.param("tolerance", 1e-8)),
            mode=mode,
            observables=tuple(config.param("observables", ())),
            t_eval=sample_times(t_span, config.param("points")),
        )

    def _summary(self, trajectory: Trajectory) -> Dict[str, Any]:
        final = trajectory.final_state
        stats = trajectory.integrator_stats
        return {
            "mode": trajectory.mode.value,
            "points": len(trajectory),
            "final_psi": serialization.state_to_dict(final),
            "energy_drift": trajectory.energy_drift,
            "casimir_drift": trajectory.casimir_drift,
            "norm_error": trajectory.norm_error,
            "accepted_steps": stats.accepted_steps,
            "rejected_steps": stats.rejected_steps,
            "chart_flips": len(trajectory.chart_flips),
            "exit_code": 0,
        }
