import json
import os
import subprocess
import sys

import pytest

from priorgt.cli import main
from priorgt.adaptive import plan_from_json_dict
from priorgt.priors import entropy, generate_prior, prior_to_json_dict

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


@pytest.fixture
def uniform_prior_file(tmp_path):
    path = tmp_path / "prior.json"
    path.write_text(json.dumps({"family": "uniform", "n": 100, "mu": 2.0}))
    return str(path)


def test_plan_adaptive_writes_laminar_tree(tmp_path, uniform_prior_file, capsys):
    out = tmp_path / "plan.json"
    rc = main(["plan", "--prior", uniform_prior_file, "--algorithm", "me", "--out", str(out)])
    assert rc == 0
    plan = plan_from_json_dict(json.loads(out.read_text()))
    covered = set()
    stack = list(plan.root_groups)
    while stack:
        node = stack.pop()
        if node.is_leaf:
            covered.add(node.items[0])
        else:
            stack.extend([node.left, node.right])
    assert covered == set(range(100))
    # bound table printed alongside
    stdout = capsys.readouterr().out
    for tag in ("T1", "T2", "T3", "T4", "T5"):
        assert tag in stdout


def test_plan_cca_row_count_follows_budget(tmp_path, uniform_prior_file):
    out = tmp_path / "matrix.json"
    rc = main(
        [
            "plan",
            "--prior",
            uniform_prior_file,
            "--algorithm",
            "cca",
            "--delta",
            "1.0",
            "--seed",
            "3",
            "--out",
            str(out),
        ]
    )
    assert rc == 0
    data = json.loads(out.read_text())
    import math

    expected = math.ceil(4 * math.e * 2 * 2.0 * math.log(100))
    assert len(data["rows"]) == expected


def test_plan_block_matrix(tmp_path, uniform_prior_file):
    out = tmp_path / "block.json"
    rc = main(
        ["plan", "--prior", uniform_prior_file, "--algorithm", "block", "--out", str(out)]
    )
    assert rc == 0
    data = json.loads(out.read_text())
    assert "blocks" in data


def test_plan_malformed_prior_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    out = tmp_path / "plan.json"
    rc = main(["plan", "--prior", str(bad), "--algorithm", "me", "--out", str(out)])
    assert rc == 2
    assert "error:" in capsys.readouterr().err
    assert not out.exists()


def test_bounds_text_pe_zero_t1_equals_entropy(uniform_prior_file, capsys):
    rc = main(["bounds", "--prior", uniform_prior_file, "--pe", "0.0"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l.startswith("T1")]
    assert len(lines) == 1
    reported = float(lines[0].split()[1])
    assert abs(reported - entropy(generate_prior("uniform", 100, 2.0))) < 1e-3


def test_bounds_formats(uniform_prior_file, capsys, tmp_path):
    rc = main(["bounds", "--prior", uniform_prior_file, "--format", "csv"])
    assert rc == 0
    csv_out = capsys.readouterr().out
    assert csv_out.splitlines()[0] == "theorem,test_bound,error_bound,applicable,notes"
    assert len(csv_out.strip().splitlines()) == 6

    rc = main(["bounds", "--prior", uniform_prior_file, "--format", "json"])
    payload = json.loads(capsys.readouterr().out)
    assert rc == 0
    assert [row["theorem"] for row in payload] == ["T1", "T2", "T3", "T4", "T5"]

    out = tmp_path / "bounds.csv"
    rc = main(["bounds", "--prior", uniform_prior_file, "--format", "csv", "--out", str(out)])
    assert rc == 0
    assert out.read_text() == csv_out


def test_simulate_quick_campaign(tmp_path, capsys):
    campaign = os.path.join(REPO_ROOT, "campaigns", "quick.json")
    out = tmp_path / "trials.csv"
    rc = main(["simulate", "--campaign", campaign, "--out", str(out)])
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "trial_id,seed,algorithm,n,mu,entropy,tests,success"
    assert len(lines) == 1 + 2 * 20 * 2  # points x trials x algorithms
    summary = tmp_path / "trials.summary.csv"
    assert summary.exists()
    assert len(summary.read_text().strip().splitlines()) == 1 + 4


def test_cli_outputs_are_byte_identical_across_reruns(tmp_path, uniform_prior_file):
    campaign = os.path.join(REPO_ROOT, "campaigns", "quick.json")
    paths = {}
    for tag in ("a", "b"):
        plan_out = tmp_path / f"plan_{tag}.json"
        sim_out = tmp_path / f"sim_{tag}.csv"
        bounds_out = tmp_path / f"bounds_{tag}.csv"
        assert main(
            ["plan", "--prior", uniform_prior_file, "--algorithm", "cca", "--seed", "5", "--out", str(plan_out)]
        ) == 0
        assert main(["simulate", "--campaign", campaign, "--out", str(sim_out)]) == 0
        assert main(
            ["bounds", "--prior", uniform_prior_file, "--format", "csv", "--out", str(bounds_out)]
        ) == 0
        paths[tag] = (plan_out, sim_out, tmp_path / f"sim_{tag}.summary.csv", bounds_out)
    for a, b in zip(paths["a"], paths["b"]):
        assert a.read_bytes() == b.read_bytes()


def test_oracle_subcommand_green(capsys):
    rc = main(["oracle", "--seed", "5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "PASS" in out
    assert "FAIL" not in out


def test_oracle_subcommand_exit_1_on_injected_fault(capsys, monkeypatch):
    from priorgt import cli, oracle

    def broken(seed=0):
        return [oracle.CheckResult("rigged", False, "injected fault", 0.0)]

    monkeypatch.setattr(cli.oracle, "run_all_checks", broken)
    rc = main(["oracle"])
    assert rc == 1
    assert "FAIL" in capsys.readouterr().out


def test_cli_runs_as_module(tmp_path):
    """End-to-end through a real process, including exit code plumbing."""
    prior = tmp_path / "p.json"
    prior.write_text(json.dumps(prior_to_json_dict(generate_prior("uniform", 20, 1.0))))
    env = dict(os.environ)
    env["PYTHONPATH"] = os.path.join(REPO_ROOT, "src") + os.pathsep + env.get("PYTHONPATH", "")
    proc = subprocess.run(
        [sys.executable, "-m", "priorgt.cli", "bounds", "--prior", str(prior)],
        capture_output=True,
        text=True,
        env=env,
    )
    assert proc.returncode == 0
    assert "T4" in proc.stdout
