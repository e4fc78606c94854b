"""Verification suites: algebra, completeness, propagator and classical limit."""

import asyncio
import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from sucs.core.config import DEFAULT_SEED
from sucs.core.errors import ConfigError, PathRegularityError, SamplingError
from sucs.services import serialization
from sucs.services.algebra import RepresentationSpec, algebra_checks, build_generators, casimir
from sucs.services.coherent import state_from_psi, verify_resolution_of_identity
from sucs.services.dynamics import classical_vs_quantum, evolution_operator
from sucs.services.hamiltonian import HamiltonianSpec
from sucs.services.propagator import (
    exact_amplitude,
    semigroup_mc_check,
    short_time_kinetic_check,
    short_time_product,
)
from sucs.tools.base import ToolBase

logger = logging.getLogger(__name__)

SUITES = ("algebra", "completeness", "propagator", "classical-limit")
COMPLETENESS_THRESHOLDS = {2: 0.02, 3: 0.05}
CLASSICAL_LIMIT_CASES = 5
CLASSICAL_LIMIT_SPAN = (0.0, 10.0)
CLASSICAL_LIMIT_THRESHOLD = 1e-8
CLASSICAL_LIMIT_MAX_N = 6
DEFAULT_SAMPLES = 1_000_000


def _check(name: str, value: float, threshold: float, passed: Optional[bool] = None) -> Dict[str, Any]:
    return {
        "name": name,
        "value": float(value),
        "threshold": float(threshold),
        "passed": bool(value < threshold) if passed is None else bool(passed),
    }


def algebra_suite(n: int, seed: int, hbar: float = 1.0, **_: Any) -> Dict[str, Any]:
    gen = build_generators(RepresentationSpec(n=n, hbar=hbar))
    return {
        "casimir": serialization.casimir_report_to_dict(casimir(gen)),
        "checks": algebra_checks(gen, np.random.default_rng(seed)),
    }


def completeness_suite(n: int, seed: int, samples: int, workers: Optional[int] = None, hbar: float = 1.0, **_: Any):
    if n not in COMPLETENESS_THRESHOLDS:
        raise SamplingError(f"Completeness suite supports n in {tuple(COMPLETENESS_THRESHOLDS)}, got n={n}")
    report = verify_resolution_of_identity(RepresentationSpec(n=n, hbar=hbar), samples, seed, workers=workers)
    checks = [
        _check("residual", report.residual, COMPLETENESS_THRESHOLDS[n]),
        _check("consistent_3sigma", report.z_max, report.z_threshold, passed=report.consistent),
        _check("trace", abs(report.trace - n), 1e-9),
    ]
    return {"resolution": serialization.resolution_report_to_dict(report), "checks": checks}


def smooth_test_path(n: int) -> Callable[[float], np.ndarray]:
    """A rotating, drifting path; each coordinate moves at its own frequency."""
    k = np.arange(n - 1)
    amplitudes = 0.3 + 0.2 * k
    frequencies = k + 1.0

    def path(t: float) -> np.ndarray:
        return amplitudes * np.exp(-1j * frequencies * t) + 0.1 * t

    return path


def propagator_suite(n: int, seed: int, samples: int, workers: Optional[int] = None, hbar: float = 1.0, **_: Any):
    rep = RepresentationSpec(n=n, hbar=hbar)
    terms = [(1.0, ("Sx",)), (0.5, ("Sz",))]
    if n >= 3:
        terms.append((0.3, ("Sz", "Sz")))
    h = HamiltonianSpec.from_terms(rep, terms)
    a = state_from_psi(np.zeros(n - 1), rep)
    b = state_from_psi(np.full(n - 1, 0.5), rep)
    t = 1.0
    checks: List[Dict[str, Any]] = []

    mc = semigroup_mc_check(a, b, h, t, samples, seed, workers)
    checks.append(_check("semigroup_mc", mc.abs_error, 3.0 * mc.std_error, passed=mc.consistent))

    composed = np.vdot(a.vector, evolution_operator(h, 0.4, hbar, n) @ evolution_operator(h, 0.6, hbar, n) @ b.vector)
    checks.append(_check("composition", abs(exact_amplitude(a, b, h, t) - composed), 1e-12))

    product = short_time_product(a, b, h, t, (100, 200))
    ratio = product.errors[0] / product.errors[1]
    checks.append(_check("short_time_product_order", ratio, 2.3, passed=1.7 <= ratio <= 2.3))

    try:
        kinetic = short_time_kinetic_check(smooth_test_path(n), rep, np.linspace(0.0, 1.0, 5), epsilon=1e-4)
        checks.append(_check("kinetic_richardson", kinetic.ratio or 2.0, 2.3, passed=True))
        kinetic_report = serialization.kinetic_report_to_dict(kinetic)
    except PathRegularityError as e:
        logger.warning(f"Kinetic check failed: {e}")
        checks.append(_check("kinetic_richardson", float("nan"), 2.3, passed=False))
        kinetic_report = None
    return {
        "semigroup": serialization.propagator_report_to_dict(mc),
        "short_time_product": serialization.propagator_report_to_dict(product),
        "kinetic": kinetic_report,
        "checks": checks,
    }


def classical_limit_suite(n: int, seed: int, hbar: float = 1.0, **_: Any) -> Dict[str, Any]:
    if n > CLASSICAL_LIMIT_MAX_N:
        raise ConfigError(f"Classical-limit suite supports n <= {CLASSICAL_LIMIT_MAX_N}, got n={n}")
    rep = RepresentationSpec(n=n, hbar=hbar)
    rng = np.random.default_rng(seed)
    checks = []
    for case in range(CLASSICAL_LIMIT_CASES):
        h = HamiltonianSpec.linear(rep, rng.normal(size=n * n - 1))
        psi = 0.5 * (rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1))
        error = classical_vs_quantum(state_from_psi(psi, rep), h, CLASSICAL_LIMIT_SPAN)
        checks.append(_check(f"linear_case_{case + 1}", error, CLASSICAL_LIMIT_THRESHOLD))
    return {"checks": checks}


_SUITE_RUNNERS = {
    "algebra": algebra_suite,
    "completeness": completeness_suite,
    "propagator": propagator_suite,
    "classical-limit": classical_limit_suite,
}


class VerificationTool(ToolBase):
    """Runs one verification suite and reports each check."""

    async def verify(
        self,
        suite: str,
        n: int,
        samples: int = DEFAULT_SAMPLES,
        seed: int = DEFAULT_SEED,
        workers: Optional[int] = None,
        hbar: float = 1.0,
        output: Optional[str] = None,
    ) -> Dict[str, Any]:
        try:
            if suite not in _SUITE_RUNNERS:
                raise ConfigError(f"Unknown suite: {suite} (expected one of {', '.join(SUITES)})")
            RepresentationSpec(n=n, hbar=hbar)
            body = await asyncio.to_thread(
                _SUITE_RUNNERS[suite], n=n, seed=seed, samples=samples, workers=workers, hbar=hbar
            )
            passed = all(c["passed"] for c in body["checks"])
            report = {"suite": suite, "n": n, "seed": seed, "passed": passed, **body}
            logger.info(f"Suite {suite} n={n}: {'pass' if passed else 'FAIL'}")
            result = {"suite": suite, "n": n, "passed": passed, "checks": body["checks"], "exit_code": 0 if passed else 1}
            return await self._emit(result, serialization.dumps(report), output)
        except Exception as e:
            return self._failure(f"verify {suite}", e)
