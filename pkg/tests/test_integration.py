"""Integration tests for closedsets.

These run the acceptance grid and the installed entry points end to end.
They take minutes rather than seconds; deselect with ``-m "not integration"``.
"""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from closedsets.acceptance import CRITERIA, run_acceptance


@pytest.mark.integration
class TestAcceptanceGrid:
    """Integration tests for the acceptance criteria."""

    @pytest.fixture(scope="class")
    def result(self) -> dict:
        return run_acceptance(trials_scale=0.1, seed=7)

    def test_every_criterion_reported(self, result: dict) -> None:
        """One entry per criterion, numbered from 1."""
        assert [c["id"] for c in result["criteria"]] == list(range(1, len(CRITERIA) + 1))

    def test_all_pass(self, result: dict) -> None:
        """Every criterion passes at a tenth of the default trial counts."""
        failed = [c["name"] for c in result["criteria"] if c["status"] != "pass"]
        assert not failed, f"Failed criteria: {failed}"

    def test_survival_limit(self, result: dict) -> None:
        """The k=2, ell=1 extinction fixed point."""
        survival = next(c for c in result["criteria"] if c["name"] == "survival")
        assert survival["details"]["limit"] == pytest.approx(0.91262, abs=5e-4)


@pytest.mark.integration
class TestEntryPoints:
    """Integration tests running the modules as scripts."""

    def test_acceptance_script(self, repo_root: Path, tmp_path: Path) -> None:
        """python -m closedsets.acceptance writes a passing report."""
        output = tmp_path / "acceptance.json"
        result = subprocess.run(
            [sys.executable, "-m", "closedsets.acceptance", "--trials-scale", "0.05", "-o", str(output)],
            cwd=str(repo_root),
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, (
            f"Acceptance failed:\nstdout: {result.stdout}\nstderr: {result.stderr}"
        )
        assert "Acceptance PASSED" in result.stdout
        report = json.loads(output.read_text())
        assert report["status"] == "pass"
        assert report["result"]["passed"] == len(CRITERIA)

    def test_survival_subcommand(self, repo_root: Path) -> None:
        """python -m closedsets survival prints a JSON report to stdout."""
        result = subprocess.run(
            [
                sys.executable, "-m", "closedsets", "survival",
                "--depth", "6", "--trials", "20000", "--seed", "7", "--no-timestamp",
            ],
            cwd=str(repo_root),
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        report = json.loads(result.stdout)
        assert report["command"] == "survival"
        assert len(report["result"]["checks"]) == 6

    def test_pipeline_subcommand(self, repo_root: Path, tmp_path: Path) -> None:
        """The diluted-measure pipeline passes and writes its report."""
        output = tmp_path / "pipeline.json"
        result = subprocess.run(
            [sys.executable, "-m", "closedsets", "pipeline", "--trials", "5000", "-o", str(output)],
            cwd=str(repo_root),
            capture_output=True,
            text=True,
        )
        assert result.returncode == 0, result.stderr
        assert "Pipeline PASSED" in result.stdout
        assert json.loads(output.read_text())["status"] == "pass"
