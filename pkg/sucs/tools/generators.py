"""Generator dump and algebra invariant checks."""

import asyncio
import logging
from typing import Any, Dict, Optional

import numpy as np

from sucs.core.config import DEFAULT_SEED
from sucs.core.errors import RepresentationError
from sucs.services import serialization
from sucs.services.algebra import RepresentationSpec, algebra_checks, build_generators, casimir
from sucs.tools.base import ToolBase

logger = logging.getLogger(__name__)

MAX_DUMP_DIMENSION = 16


class GeneratorTool(ToolBase):
    """Builds the su(n) generator set and optionally runs the invariant suite."""

    async def build(
        self,
        n: int,
        check: bool = False,
        hbar: float = 1.0,
        seed: int = DEFAULT_SEED,
        output: Optional[str] = None,
    ) -> Dict[str, Any]:
        try:
            if not isinstance(n, int) or not 2 <= n <= MAX_DUMP_DIMENSION:
                raise RepresentationError(f"Group dimension must be in 2..{MAX_DUMP_DIMENSION}, got {n!r}")
            document, result = await asyncio.to_thread(self._build_sync, n, check, hbar, seed)
            return await self._emit(result, serialization.dumps(document), output)
        except Exception as e:
            return self._failure(f"generator build for n={n}", e)

    def _build_sync(self, n: int, check: bool, hbar: float, seed: int):
        gen = build_generators(RepresentationSpec(n=n, hbar=hbar))
        generators = [
            {"label": label, **serialization.complex_matrix_to_dict(matrix)}
            for label, matrix in zip(gen.labels, gen.all())
        ]
        report = casimir(gen)
        result: Dict[str, Any] = {
            "n": n,
            "count": gen.count,
            "labels": gen.labels,
            "casimir": serialization.casimir_report_to_dict(report),
        }
        document: Dict[str, Any] = {"n": n, "hbar": hbar, "generators": generators}
        if check:
            checks = algebra_checks(gen, np.random.default_rng(seed))
            passed = all(c["passed"] for c in checks)
            result["checks"] = checks
            result["passed"] = passed
            result["exit_code"] = 0 if passed else 1
            document["checks"] = checks
            logger.info(f"Algebra checks for n={n}: {'pass' if passed else 'FAIL'}")
        else:
            result["exit_code"] = 0
        return document, result
