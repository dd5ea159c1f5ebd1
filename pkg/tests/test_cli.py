import json
import logging

import numpy as np
import pytest

from main import run
from spearmix.services.sampler import rmsmix


@pytest.fixture(autouse=True)
def detach_log_handlers():
    yield
    logging.getLogger().handlers.clear()


def run_json(capsys, argv):
    code = run(["-q"] + argv)
    out = capsys.readouterr().out
    assert code == 0
    return json.loads(out)


@pytest.fixture
def mixture_csv(write_csv):
    data = rmsmix(120, 5, 2, theta=0.6, rng=np.random.default_rng(6)).samples
    return write_csv(data, name="mixture.csv")


def test_distr_golden_values(capsys):
    payload = run_json(capsys, ["distr", "--n", "5", "--theta", "0.1"])
    result = payload["result"]
    assert payload["tool"] == "spearmix"
    assert payload["command"] == "distr"
    assert result["exact"] is True
    assert result["log_Z"] == pytest.approx(3.253889, abs=1e-5)
    assert result["log_E"] == pytest.approx(2.421115, abs=1e-5)
    assert result["log_V"] == pytest.approx(4.202741, abs=1e-5)


def test_distr_table_file(capsys, tmp_path):
    table = tmp_path / "n5.csv"
    run_json(capsys, ["distr", "--n", "5", "--table", str(table)])
    lines = table.read_text().splitlines()
    assert lines[0] == "distance,log_card"
    assert len(lines) == 22


def test_convert_ranking_to_ordering(capsys, write_csv, ranks_af3):
    path = write_csv(ranks_af3)
    assert run(["-q", "convert", "--input", path]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Item1,Item2,Item3,Item4,Item5,Item6,Item7"
    assert lines[1] == "3,2,4,1,5,6,7"
    assert len(lines) == 4


def test_describe_writes_matrices(capsys, write_csv, ranks_af3, tmp_path):
    path = write_csv(ranks_af3)
    out = tmp_path / "matrices"
    payload = run_json(capsys, ["describe", "--input", path, "--matrices-dir", str(out)])
    assert payload["result"]["n_items"] == 7
    assert (out / "first_order_marginals.csv").exists()
    assert (out / "pairwise_comparison.csv").exists()


def test_fit_single_ranking_hits_cap(capsys, write_csv):
    path = write_csv([[3, 1, 2, 4]] * 5)
    result = run_json(capsys, ["fit", "--input", path])["result"]
    assert result["method"] == "mms"
    assert result["theta_boundary"] == ["cap"]
    assert result["params"]["rho"] == [[3, 1, 2, 4]]
    assert "confint" in result
    assert result["item_labels"] == ["Item1", "Item2", "Item3", "Item4"]


def test_fit_reports_modal_orderings_by_label(capsys, write_csv):
    path = write_csv([[3, 1, 2, 4]] * 5, labels=list("ABCD"))
    result = run_json(capsys, ["fit", "--input", path])["result"]
    assert result["modal_orderings"] == [["B", "C", "A", "D"]]


def test_mixture_fit_needs_seed(capsys, mixture_csv):
    assert run(["-q", "fit", "--input", mixture_csv, "--n-clust", "2"]) == 1
    assert "error: ValueError" in capsys.readouterr().err


def test_fit_output_independent_of_parallel(capsys, mixture_csv):
    argv = ["-q", "fit", "--input", mixture_csv, "--n-clust", "2", "--n-start", "3", "--seed", "3"]
    assert run(argv) == 0
    serial = capsys.readouterr().out
    assert run(argv + ["--parallel"]) == 0
    assert capsys.readouterr().out == serial


def test_fit_selects_number_of_clusters(capsys, mixture_csv):
    result = run_json(capsys, ["fit", "--input", mixture_csv, "--n-clust", "1-3",
                               "--n-start", "3", "--seed", "1"])["result"]
    table = result["selection"]["bic_table"]
    assert [row["n_clust"] for row in table] == [1, 2, 3]
    assert result["selection"]["selected"] == result["n_clust"]


def test_invalid_csv_reports_position(capsys, write_csv):
    path = write_csv([[1, 2, 3], [9, 1, 2]])
    assert run(["-q", "convert", "--input", path]) == 1
    err = capsys.readouterr().err
    assert "RankingFormatError" in err
    assert "row 2" in err and "column 1" in err


def test_unknown_command_is_usage_error(capsys):
    assert run(["nonsense"]) == 2


def test_parametric_bootstrap_needs_one_component(capsys, mixture_csv):
    argv = ["-q", "bootstrap", "--input", mixture_csv, "--n-clust", "2",
            "--boot-type", "parametric", "--seed", "1"]
    assert run(argv) == 1
    assert "IncompatibleOptionsError" in capsys.readouterr().err


def test_bootstrap_single_component(capsys, write_csv, tmp_path):
    data = rmsmix(60, 5, 1, theta=0.3, rng=np.random.default_rng(2)).samples
    path = write_csv(data)
    marginals = tmp_path / "marginals"
    payload = run_json(capsys, ["bootstrap", "--input", path, "--n-boot", "5", "--seed", "2",
                                "--marginals-dir", str(marginals)])
    assert set(payload["result"]) == {"bootstrap", "fit"}
    assert (marginals / "marginals_component1.csv").exists()


def test_sample_writes_rankings(capsys):
    assert run(["-q", "sample", "--n-items", "5", "--sample-size", "20", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "Item1,Item2,Item3,Item4,Item5"
    assert len(lines) == 21
    for line in lines[1:]:
        assert sorted(int(v) for v in line.split(",")) == [1, 2, 3, 4, 5]


def test_sample_without_seed_fails(capsys):
    assert run(["-q", "sample", "--n-items", "5", "--sample-size", "20"]) == 1
    assert "--seed" in capsys.readouterr().err


def test_bench_single_full(capsys):
    argv = ["-q", "bench", "--protocol", "single-full", "--n", "5,10", "--sample-size", "50", "--seed", "1"]
    assert run(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("protocol,n_items")
    assert len(lines) == 3


def test_bench_table2_alias(capsys):
    assert run(["-q", "bench", "--protocol", "table2", "--n", "100", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("single-full,100,100,1,")
