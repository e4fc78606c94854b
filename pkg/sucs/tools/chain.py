"""Mean-field chain evolution runs."""

import asyncio
import logging
from typing import Any, Dict, Optional

from sucs.core.config import RunConfig
from sucs.core.errors import ConfigError
from sucs.services import serialization
from sucs.services.lattice import ChainTrajectory, chain_evolve, chain_quantum_deviation, multipole_series
from sucs.tools.base import ToolBase
from sucs.tools.evolution import parse_span, sample_times

logger = logging.getLogger(__name__)


class ChainTool(ToolBase):
    """Integrates a product-state chain and summarizes its conservation laws."""

    async def evolve(self, config: RunConfig) -> Dict[str, Any]:
        try:
            trajectory, deviation = await asyncio.to_thread(self._evolve_sync, config)
            if config.format == "json":
                content = serialization.dumps(serialization.chain_trajectory_to_dict(trajectory))
            else:
                content = serialization.chain_trajectory_to_csv(trajectory)
            return await self._emit(self._summary(trajectory, deviation), content, config.output)
        except Exception as e:
            return self._failure("chain evolution", e)

    def _evolve_sync(self, config: RunConfig):
        model_data = config.param("model")
        if model_data is None:
            raise ConfigError("chain needs a 'model' parameter")
        model = serialization.chain_model_from_dict(model_data, float(config.param("hbar", 1.0)))
        initial_data = config.param("initial")
        if initial_data is None:
            raise ConfigError("chain needs an 'initial' parameter")
        initial = serialization.chain_state_from_dict(initial_data, model)
        t_span = parse_span(config.param("t_span", (0.0, 1.0)))
        t_eval = sample_times(t_span, config.param("points"))
        trajectory = chain_evolve(
            initial, model, t_span, tolerance=float(config.param("tolerance", 1e-8)), t_eval=t_eval
        )
        deviation: Optional[float] = None
        if config.param("compare_exact", False):
            deviation = chain_quantum_deviation(initial, model, trajectory.times)
        return trajectory, deviation

    def _summary(self, trajectory: ChainTrajectory, deviation: Optional[float]) -> Dict[str, Any]:
        multipoles = multipole_series(trajectory)
        return {
            "sites": trajectory.sites,
            "n": trajectory.model.rep.n,
            "points": len(trajectory),
            "variables_per_site": trajectory.variables_per_site,
            "energy_drift": trajectory.energy_drift,
            "sz_drift": trajectory.sz_drift,
            "multipole_labels": list(multipoles.labels),
            "purity_residual": multipoles.purity_residual,
            "quadrupole_columns": len(trajectory.quadrupole_labels),
            "chart_flips": len(trajectory.chart_flips),
            "exact_deviation": deviation,
            "exit_code": 0,
        }
