"""JSON and CSV codecs for states, Hamiltonians, chains and reports.

Floats are written with 17 significant digits so files round-trip exactly
and identical runs produce identical bytes.
"""

import csv
import io
import json
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np

from sucs.core.errors import ConfigError, DimensionMismatchError
from sucs.services.algebra import CasimirReport, RepresentationSpec
from sucs.services.coherent import CoherentState, ResolutionReport, spin_j_rep, state_in_chart
from sucs.services.dynamics import Trajectory
from sucs.services.hamiltonian import HamiltonianSpec
from sucs.services.lattice import Bond, ChainModel, ChainState, ChainTrajectory, site_observables
from sucs.services.propagator import KineticCheckReport, PropagatorReport


def fmt(value: float) -> str:
    return "%.17g" % value


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2) + "\n"


def complex_to_dict(value: complex) -> Dict[str, float]:
    return {"re": float(np.real(value)), "im": float(np.imag(value))}


def complex_matrix_to_dict(matrix: np.ndarray) -> Dict[str, List[List[float]]]:
    matrix = np.asarray(matrix)
    return {"re": matrix.real.tolist(), "im": matrix.imag.tolist()}


def complex_matrix_from_json(value: Any) -> np.ndarray:
    """{"re": rows, "im": rows} or rows whose entries are numbers or [re, im] pairs."""
    try:
        if isinstance(value, Mapping):
            re = np.asarray(value["re"], dtype=float)
            im = np.asarray(value.get("im", np.zeros_like(re)), dtype=float)
            return re + 1j * im
        rows = []
        for row in value:
            rows.append([complex(e[0], e[1]) if isinstance(e, (list, tuple)) else complex(e) for e in row])
        return np.array(rows, dtype=np.complex128)
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise ConfigError(f"Malformed complex matrix: {e}") from e


def _spin(value) -> Optional[Fraction]:
    if value is None:
        return None
    return Fraction(str(value)) if isinstance(value, str) else Fraction(value).limit_denominator(2)


def state_to_dict(state: CoherentState) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "n": 2 if state.spin_mode else state.dim,
        "psi_re": state.psi.real.tolist(),
        "psi_im": state.psi.imag.tolist(),
        "spin_J": float(state.spin_J) if state.spin_mode else None,
    }
    if state.chart:
        data["chart"] = state.chart
    return data


def state_from_dict(data: Mapping[str, Any], hbar: float = 1.0) -> CoherentState:
    try:
        spin_J = _spin(data.get("spin_J"))
        psi_re = np.atleast_1d(np.asarray(data["psi_re"], dtype=float))
        psi_im = np.atleast_1d(np.asarray(data.get("psi_im", np.zeros_like(psi_re)), dtype=float))
        n = int(data["n"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed coherent state: {e}") from e
    if psi_re.shape != psi_im.shape:
        raise DimensionMismatchError("psi_re and psi_im differ in length")
    if spin_J is not None:
        if n != 2:
            raise DimensionMismatchError(f"Spin-J states belong to SU(2), got n={n}")
        rep = spin_j_rep(spin_J, hbar)
    else:
        rep = RepresentationSpec(n=n, hbar=hbar)
    return state_in_chart(psi_re + 1j * psi_im, rep, int(data.get("chart", 0)), spin_J)


def hamiltonian_from_dict(data: Mapping[str, Any], rep: RepresentationSpec) -> HamiltonianSpec:
    """{"matrix": ...} or {"terms": [{"coeff": r, "ops": ["Sz", "Sz"]}, ...]}."""
    if "matrix" in data:
        return HamiltonianSpec.from_matrix(rep, complex_matrix_from_json(data["matrix"]))
    if "terms" in data:
        try:
            terms = [(float(t["coeff"]), tuple(t["ops"])) for t in data["terms"]]
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"Malformed Hamiltonian term: {e}") from e
        return HamiltonianSpec.from_terms(rep, terms)
    raise ConfigError("Hamiltonian needs a 'matrix' or a 'terms' entry")


def hamiltonian_to_dict(h: HamiltonianSpec) -> Dict[str, Any]:
    if h.matrix is not None:
        return {"n": h.n, "matrix": complex_matrix_to_dict(h.as_matrix())}
    return {"n": h.n, "terms": [{"coeff": t.coeff, "ops": list(t.ops)} for t in h.terms]}


def chain_model_from_dict(data: Mapping[str, Any], hbar: float = 1.0) -> ChainModel:
    try:
        sites = int(data["sites"])
        rep = RepresentationSpec(n=int(data["n"]), hbar=hbar)
        boundary = data.get("boundary", "open")
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed chain model: {e}") from e

    raw_field = data.get("field")
    if raw_field is None:
        field = None
    elif isinstance(raw_field, list):
        field = [None if f is None else hamiltonian_from_dict(f, rep).as_matrix() for f in raw_field]
    else:
        field = hamiltonian_from_dict(raw_field, rep).as_matrix()

    try:
        if "bonds" in data:
            bonds = tuple(Bond(int(b["i"]), int(b["j"]), b.get("type", "bilinear"), float(b["J"])) for b in data["bonds"])
            return ChainModel(
                sites=sites,
                rep=rep,
                bonds=bonds,
                field=() if field is None else (tuple(field) if isinstance(field, list) else (field,)),
                boundary=boundary,
            )
        return ChainModel.uniform(
            sites,
            rep,
            bilinear=float(data.get("bilinear", 0.0)),
            biquadratic=float(data.get("biquadratic", 0.0)),
            field=field,
            boundary=boundary,
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed chain bond: {e}") from e


def chain_model_to_dict(model: ChainModel) -> Dict[str, Any]:
    return {
        "sites": model.sites,
        "n": model.rep.n,
        "boundary": model.boundary.value,
        "bonds": [{"i": b.i, "j": b.j, "type": b.kind.value, "J": b.strength} for b in model.bonds],
        "field": [None if f is None else {"matrix": complex_matrix_to_dict(f)} for f in model.field],
    }


def chain_state_from_dict(data: Any, model: ChainModel) -> ChainState:
    """A list of per-site {"psi_re", "psi_im"} records, or one record for every site."""
    records = data if isinstance(data, list) else [data] * model.sites
    psis = []
    try:
        for record in records:
            re = np.atleast_1d(np.asarray(record["psi_re"], dtype=float))
            im = np.atleast_1d(np.asarray(record.get("psi_im", np.zeros_like(re)), dtype=float))
            psis.append(re + 1j * im)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"Malformed chain state: {e}") from e
    return ChainState(psis=tuple(psis), rep=model.rep)


def _stats_to_dict(stats) -> Dict[str, Any]:
    return {
        "method": stats.method,
        "tolerance": stats.tolerance,
        "accepted_steps": stats.accepted_steps,
        "rejected_steps": stats.rejected_steps,
        "evaluations": stats.evaluations,
        "restarts": stats.restarts,
    }


def _flips_to_list(flips) -> List[Dict[str, Any]]:
    return [{"time": f.time, "site": f.site, "from": f.from_chart, "to": f.to_chart} for f in flips]


def trajectory_to_dict(trajectory: Trajectory) -> Dict[str, Any]:
    return {
        "n": 2 if trajectory.spin_J is not None else trajectory.rep.n,
        "spin_J": None if trajectory.spin_J is None else float(trajectory.spin_J),
        "mode": trajectory.mode.value,
        "times": trajectory.times.tolist(),
        "psi_re": trajectory.psi_series.real.tolist(),
        "psi_im": trajectory.psi_series.imag.tolist(),
        "charts": trajectory.charts.tolist(),
        "energy": trajectory.energy_series.tolist(),
        "casimir": trajectory.casimir_series.tolist(),
        "observables": {k: v.tolist() for k, v in trajectory.observables.items()},
        "integrator_stats": _stats_to_dict(trajectory.integrator_stats),
        "chart_flips": _flips_to_list(trajectory.chart_flips),
        "energy_drift": trajectory.energy_drift,
    }


def _write_rows(header: Sequence[str], columns: Sequence[np.ndarray]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    return buffer.getvalue()


def trajectory_to_csv(trajectory: Trajectory) -> str:
    header = ["t"]
    columns: List[np.ndarray] = [trajectory.times]
    for i in range(trajectory.psi_series.shape[1]):
        header += [f"psi{i + 1}_re", f"psi{i + 1}_im"]
        columns += [trajectory.psi_series[:, i].real, trajectory.psi_series[:, i].imag]
    header += ["chart", "energy", "casimir"]
    columns += [trajectory.charts.tolist(), trajectory.energy_series, trajectory.casimir_series]
    for label, series in trajectory.observables.items():
        header.append(label)
        columns.append(series)
    return _write_rows(header, columns)


def chain_trajectory_to_csv(trajectory: ChainTrajectory) -> str:
    """Wide layout: one row per time, per-site columns suffixed with the site index."""
    header = ["t", "energy", "total_Sz"]
    columns: List[np.ndarray] = [trajectory.times, trajectory.energy_series, trajectory.total_sz_series]
    for a in range(trajectory.sites):
        for i in range(trajectory.psi_series.shape[2]):
            header += [f"psi{i + 1}_re_{a}", f"psi{i + 1}_im_{a}"]
            columns += [trajectory.psi_series[:, a, i].real, trajectory.psi_series[:, a, i].imag]
    for label, series in site_observables(trajectory).items():
        header.append(label)
        columns.append(series)
    return _write_rows(header, columns)


def chain_trajectory_to_dict(trajectory: ChainTrajectory) -> Dict[str, Any]:
    return {
        "model": chain_model_to_dict(trajectory.model),
        "times": trajectory.times.tolist(),
        "psi_re": trajectory.psi_series.real.tolist(),
        "psi_im": trajectory.psi_series.imag.tolist(),
        "charts": trajectory.charts.tolist(),
        "energy": trajectory.energy_series.tolist(),
        "total_Sz": trajectory.total_sz_series.tolist(),
        "dipoles": trajectory.dipole_series.tolist(),
        "quadrupole_labels": list(trajectory.quadrupole_labels),
        "quadrupoles": trajectory.quadrupole_series.tolist(),
        "integrator_stats": _stats_to_dict(trajectory.integrator_stats),
        "chart_flips": _flips_to_list(trajectory.chart_flips),
        "energy_drift": trajectory.energy_drift,
        "sz_drift": trajectory.sz_drift,
    }


def propagator_report_to_dict(report: PropagatorReport) -> Dict[str, Any]:
    approx = report.approx
    if isinstance(approx, tuple):
        approx = [complex_to_dict(a) for a in approx]
    else:
        approx = complex_to_dict(approx)
    return {
        "method": report.method.value,
        "exact": complex_to_dict(report.exact),
        "approx": approx,
        "abs_error": report.abs_error,
        "samples": report.samples,
        "slices": None if report.slices is None else list(report.slices),
        "std_error": report.std_error,
        "errors": None if report.errors is None else list(report.errors),
        "consistent": report.consistent,
    }


def casimir_report_to_dict(report: CasimirReport) -> Dict[str, Any]:
    return {
        "eigenvalue": report.eigenvalue,
        "expected": report.expected,
        "is_scalar": report.is_scalar,
        "error": report.error,
    }


def resolution_report_to_dict(report: ResolutionReport) -> Dict[str, Any]:
    return {
        "samples": report.samples,
        "residual": report.residual,
        "max_std_error": report.max_std_error,
        "trace": report.trace,
        "z_max": report.z_max,
        "z_threshold": report.z_threshold,
        "consistent": report.consistent,
        "estimate": complex_matrix_to_dict(report.estimate),
    }


def kinetic_report_to_dict(report: KineticCheckReport) -> Dict[str, Any]:
    return {
        "epsilon": report.epsilon,
        "max_deviation": report.max_deviation,
        "half_step_deviation": report.half_step_deviation,
        "ratio": report.ratio,
    }
