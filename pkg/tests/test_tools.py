"""Unit tests for the tool facades with a mocked artifact store."""

import json
from pathlib import Path

import pytest

from sucs.core.config import RunConfig
from sucs.core.interfaces import ArtifactStoreInterface
from sucs.tools.chain import ChainTool
from sucs.tools.evolution import EvolutionTool, parse_span, sample_times
from sucs.tools.generators import GeneratorTool
from sucs.tools.propagator_check import PropagatorTool
from sucs.tools.verification import VerificationTool, smooth_test_path
from sucs.core.errors import ConfigError


@pytest.fixture
def store(mocker):
    """Artifact store double recording writes."""
    mock = mocker.AsyncMock(spec=ArtifactStoreInterface)
    mock.calculate_hash.return_value = "0" * 64
    return mock


class TestGeneratorTool:
    """Tests for GeneratorTool."""

    @pytest.mark.asyncio
    async def test_content_without_output(self, store):
        """Test generators are returned inline without an output path."""
        result = await GeneratorTool(store).build(3)
        assert result["count"] == 8
        assert result["exit_code"] == 0
        assert len(json.loads(result["content"])["generators"]) == 8
        store.write_text.assert_not_called()

    @pytest.mark.asyncio
    async def test_output_goes_through_store(self, store):
        """Test output is written through the artifact store."""
        result = await GeneratorTool(store).build(2, output="out/su2.json")
        store.write_text.assert_awaited_once()
        path, content = store.write_text.await_args.args
        assert path == Path("out/su2.json")
        assert json.loads(content)["n"] == 2
        assert result["sha256"] == "0" * 64
        assert "content" not in result

    @pytest.mark.asyncio
    async def test_rejects_large_dimension(self, store):
        """Test n above 16 is rejected."""
        result = await GeneratorTool(store).build(17)
        assert result["exit_code"] == 2
        assert "2..16" in result["error"]


class TestEvolutionTool:
    """Tests for EvolutionTool."""

    @pytest.mark.asyncio
    async def test_summary(self, store, precession_run):
        """Test the evolution summary."""
        config = RunConfig(command="evolve", params={**precession_run, "points": 4})
        result = await EvolutionTool(store).evolve(config)
        assert result["points"] == 4
        assert result["chart_flips"] == 0
        assert result["final_psi"]["n"] == 2
        assert result["content"].startswith("t,psi1_re,psi1_im")

    @pytest.mark.asyncio
    async def test_unknown_mode(self, store, precession_run):
        """Test an unknown mode is rejected."""
        config = RunConfig(command="evolve", params={**precession_run, "mode": "hamiltonian"})
        result = await EvolutionTool(store).evolve(config)
        assert result["exit_code"] == 2
        assert "Unknown mode" in result["error"]

    @pytest.mark.asyncio
    async def test_hamiltonian_dimension_mismatch(self, store, precession_run):
        """Test a Hamiltonian of the wrong size is rejected."""
        params = {**precession_run, "hamiltonian": {"matrix": [[1, 0, 0], [0, 0, 0], [0, 0, -1]]}}
        result = await EvolutionTool(store).evolve(RunConfig(command="evolve", params=params))
        assert result["exit_code"] == 2

    def test_parse_span(self):
        """Test parsing the time span."""
        assert parse_span([0, "2.5"]) == (0.0, 2.5)
        with pytest.raises(ConfigError):
            parse_span([1.0])

    def test_sample_times(self):
        """Test the uniform output grid."""
        assert sample_times((0.0, 1.0), None) is None
        assert len(sample_times((0.0, 1.0), 11)) == 11
        with pytest.raises(ConfigError):
            sample_times((0.0, 1.0), 1)


class TestChainTool:
    """Tests for ChainTool."""

    @pytest.mark.asyncio
    async def test_summary(self, store, sample_chain_model):
        """Test the chain summary."""
        params = {"model": sample_chain_model, "initial": {"psi_re": [0.1, 0.0]}, "t_span": [0, 1], "points": 3}
        result = await ChainTool(store).evolve(RunConfig(command="chain", params=params, format="json"))
        assert result["sites"] == 2
        assert result["purity_residual"] < 1e-10
        assert result["exact_deviation"] is None
        assert json.loads(result["content"])["quadrupole_labels"][-1] == "Qzx"

    @pytest.mark.asyncio
    async def test_missing_model(self, store):
        """Test a run without a model is rejected."""
        result = await ChainTool(store).evolve(RunConfig(command="chain", params={}))
        assert result["exit_code"] == 2


class TestVerificationTool:
    """Tests for VerificationTool."""

    @pytest.mark.asyncio
    async def test_classical_limit(self, store):
        """Test the classical-limit suite passes."""
        result = await VerificationTool(store).verify("classical-limit", 2)
        assert result["passed"] is True
        assert len(result["checks"]) == 5

    @pytest.mark.asyncio
    async def test_classical_limit_dimension_cap(self, store):
        """Test the classical-limit suite refuses n = 7."""
        result = await VerificationTool(store).verify("classical-limit", 7)
        assert result["exit_code"] == 2

    @pytest.mark.asyncio
    async def test_completeness_sample_floor(self, store):
        """Test the completeness suite refuses too few samples."""
        result = await VerificationTool(store).verify("completeness", 2, samples=500)
        assert result["exit_code"] == 2

    @pytest.mark.asyncio
    async def test_bad_dimension(self, store):
        """Test n = 1 is rejected."""
        result = await VerificationTool(store).verify("algebra", 1)
        assert result["exit_code"] == 2

    @pytest.mark.slow
    @pytest.mark.asyncio
    async def test_propagator_suite(self, store):
        """Test the propagator suite runs every check."""
        result = await VerificationTool(store).verify("propagator", 2, samples=200_000, workers=2)
        names = [c["name"] for c in result["checks"]]
        assert names == ["semigroup_mc", "composition", "short_time_product_order", "kinetic_richardson"]

    def test_smooth_test_path_shape(self):
        """Test the smooth test path has n - 1 coordinates."""
        assert smooth_test_path(4)(0.3).shape == (3,)


class TestPropagatorTool:
    """Tests for PropagatorTool."""

    @pytest.mark.asyncio
    async def test_table(self, store):
        """Test the convergence table."""
        result = await PropagatorTool(store).check(2, sample_counts=(100_000,), slices=(10, 20), seed=3)
        assert [row["samples"] for row in result["table"]] == [100_000]
        report = json.loads(result["content"])
        assert report["short_time_product"]["slices"] == [10, 20]

    @pytest.mark.asyncio
    async def test_requires_sample_counts(self, store):
        """Test an empty sample list is rejected."""
        result = await PropagatorTool(store).check(2, sample_counts=())
        assert result["exit_code"] == 2

    @pytest.mark.asyncio
    async def test_unsupported_dimension(self, store):
        """Test n = 4 is rejected."""
        result = await PropagatorTool(store).check(4, sample_counts=(100_000,))
        assert result["exit_code"] == 2
