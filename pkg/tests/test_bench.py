import math

from omqe import bench


def test_measure_delays_counts_gaps():
    count, gaps = bench.measure_delays(iter(range(5)))
    assert count == 5 and len(gaps) == 4 and all(g >= 0 for g in gaps)
    assert bench.measure_delays(iter(())) == (0, [])


def test_run_size_row():
    row = bench.run_size(500, repeats=2)
    assert 400 <= row.dbsize <= 500 and row.answers > 0
    assert row.max_delay_us >= row.median_delay_us >= 0
    assert row.csv().count(",") == len(bench.CSV_COLUMNS) - 1


def test_growth_ratios_normalize_to_a_doubling():
    rows = [bench.ScalingRow(100, 1.0, 0, 0, 0), bench.ScalingRow(400, 4.0, 0, 0, 0)]
    assert math.isclose(bench.growth_ratios(rows)[0], 2.0)


def test_chain_instance_shape():
    reasoner, d = bench.chain_instance(10)
    assert len(d.binary) == 10 and d.unary == [("A", "c10")]


def test_backend_comparison_small():
    rows = bench.backend_comparison([256], repeats=1)
    assert {r["workload"] for r in rows} == {"bmm", "chain"}
    for r in rows:
        assert r["horn_numpy_ms"] >= 0 and r["member_numpy_ms"] >= 0
        assert "horn_numba_ms" in r


def test_fitted_growth_of_exact_linear_and_quadratic_series():
    lin = [bench.ScalingRow(2 ** k, 3.0 * 2 ** k, 0, 0, 0) for k in range(4, 9)]
    quad = [bench.ScalingRow(2 ** k, 4.0 ** k, 0, 0, 0) for k in range(4, 9)]
    assert math.isclose(bench.fitted_growth(lin), 2.0)
    assert math.isclose(bench.fitted_growth(quad), 4.0)
