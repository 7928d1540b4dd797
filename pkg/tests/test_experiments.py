import pytest

from mdich.errors import BadParameters
from mdich.experiments import (
    COLUMNS,
    ExperimentRow,
    cell_means,
    make_instance,
    monotone_fraction,
    read_csv,
    rows_to_csv,
    run_cell,
    run_suite,
)


def test_row_invariants():
    ok = ExperimentRow(8, 3.0, 2.0, 0.0, "x", "lacunary", 3, 2.0, 2.5, 4, 0, 1.0)
    assert ok.failures() == []
    bad = ExperimentRow(8, 3.0, 2.0, 0.0, "x", "lacunary", 3, 3.5, 4.0, 2, 0, 1.0)
    assert len(bad.failures()) == 3


@pytest.mark.parametrize("suite,alpha", [("d-k-above-2", 3), ("d-k-below-2", 1.5), ("e-k-above-2", 3), ("e-k-below-2", 1.5), ("d-1", 2)])
def test_suites_run(suite, alpha):
    rows = run_suite(suite, [16, 64], alpha, 2, range(3))
    assert len(rows) == 6
    assert all(r.failures() == [] for r in rows)
    assert [(r.n, r.seed) for r in rows] == sorted((r.n, r.seed) for r in rows)


def test_composition_family_oracle_cross_check():
    # 9 = 3^2 points; the oracle optimum bounds every extraction
    for seed in range(5):
        row = run_cell("d-k-below-2", "composition", 9, 1.5, 2, seed)
        assert row.oracle_opt is not None and row.size <= row.oracle_opt


def test_composition_sizes():
    assert make_instance("composition", 125, 0).n == 125
    with pytest.raises(BadParameters):
        make_instance("composition", 50, 0)


def test_workers_match_serial():
    a = run_suite("d-k-below-2", [32], 1.5, 2, range(4))
    b = run_suite("d-k-below-2", [32], 1.5, 2, range(4), workers=2)
    strip = lambda rows: [r.csv_values()[:-1] for r in rows]  # noqa: E731
    assert strip(a) == strip(b)


def test_csv_roundtrip_and_means():
    rows = run_suite("d-k-above-2", [16], 3, 2, range(2))
    text = rows_to_csv(rows)
    back = read_csv(text)
    assert list(back[0]) == list(COLUMNS)
    assert cell_means(rows)[(16, 3.0, 2.0)] == sum(r.size for r in rows) / 2
    assert monotone_fraction([1, 2, 2, 1]) == (2, 3)


def test_bad_suite_arguments():
    with pytest.raises(BadParameters):
        run_suite("d-k-above-2", [], 3)
    with pytest.raises(BadParameters):
        run_suite("nope", [16], 3)
    with pytest.raises(BadParameters):
        run_suite("e-k-below-2", [16], 3, seeds=[0])
