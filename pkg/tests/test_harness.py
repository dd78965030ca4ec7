import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualfl.engine import EngineConfig, run
from dualfl.errors import ConfigurationError, DataError, FitError, ReferenceSolveError
from dualfl.harness.baselines import run_baseline, run_fedavg, run_gd
from dualfl.harness.config import RunConfig, parse_config
from dualfl.harness.data import Dataset, gaussian_blobs, load_dataset, partition
from dualfl.harness.problems import quadratic_family, toy_family
from dualfl.harness.rates import rate_fit
from dualfl.harness.reference import apg_reference, newton_reference, reference_solution
from dualfl.harness.regularization import choose_alpha
from dualfl.oracle import GlobalObjective, ProblemSpec, least_squares, make_family
from dualfl.trace import COLUMNS, RoundRecord, RunTrace, emit_trace, read_trace

# config -----------------------------------------------------------------------


def test_config_parse_and_coerce():
    cfg = parse_config("""
        # comment
        problem.kind = logistic
        problem.clients = 8   # trailing comment
        dualfl.rho = 3e-3
        local.gamma = 0.1
        verify.exact = false
    """)
    assert cfg.problem.kind == "logistic" and cfg.problem.clients == 8
    assert cfg.dualfl.rho == "3e-3" and cfg.local.gamma == 0.1
    assert cfg.verify.exact is False


@pytest.mark.parametrize("text", [
    "problem.nope = 1", "nosection = 1", "problem.clients = many", "just words",
    "verify.exact = maybe",
])
def test_config_errors(text):
    with pytest.raises(ConfigurationError):
        parse_config(text)


def test_flat_skips_threads():
    flat = RunConfig().flat()
    assert "run.threads" not in flat and "run.seed" in flat


# data -------------------------------------------------------------------------


def test_dense_csv(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("0.5,1.0,3\n")
    ds = load_dataset(p, "dense_csv")
    assert ds.features.shape == (1, 2) and ds.labels.tolist() == [3]


def test_sparse_line_with_unicode_minus(tmp_path):
    p = tmp_path / "d.svm"
    p.write_text("2 1:0.5 4:−1.0\n", encoding="utf-8")
    ds = load_dataset(p, "sparse_svm")
    assert ds.features.shape[1] >= 4
    np.testing.assert_array_equal(ds.features[0, :4], [0.5, 0, 0, -1.0])
    assert ds.labels.tolist() == [2]


@pytest.mark.parametrize("content,fmt,line", [
    ("1,2,1\n3,x,2\n", "dense_csv", 2),
    ("1,2,1\n3,4\n", "dense_csv", 2),
    ("1 1:0.5\n2 0:1\n", "sparse_svm", 2),
    ("1 1:0.5\n2 3-1\n", "sparse_svm", 2),
    ("1,2,1.5\n", "dense_csv", 1),
])
def test_malformed_lines_report_numbers(tmp_path, content, fmt, line):
    p = tmp_path / "bad"
    p.write_text(content)
    with pytest.raises(DataError, match=f"line {line}"):
        load_dataset(p, fmt)


def test_empty_and_out_of_range(tmp_path):
    p = tmp_path / "empty.csv"
    p.write_text("")
    with pytest.raises(DataError):
        load_dataset(p)
    q = tmp_path / "lab.csv"
    q.write_text("1.0,0\n")
    with pytest.raises(DataError):
        load_dataset(q)
    assert load_dataset(q, zero_based=True).labels.tolist() == [1]
    r = tmp_path / "big.csv"
    r.write_text("1.0,4\n")
    with pytest.raises(DataError):
        load_dataset(r, classes=3)


def _toy_dataset(n):
    return Dataset(np.arange(n, dtype=float).reshape(n, 1), np.ones(n, dtype=int))


def test_partition_sizes():
    assert [s.n for s in partition(_toy_dataset(10), 3)] == [4, 3, 3]
    assert [s.n for s in partition(_toy_dataset(8), 8)] == [1] * 8
    with pytest.raises(ConfigurationError):
        partition(_toy_dataset(3), 4)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 60), data=st.data())
def test_partition_balanced_and_complete(n, data):
    N = data.draw(st.integers(1, n))
    shards = partition(_toy_dataset(n), N, "shuffled", seed=5)
    sizes = [s.n for s in shards]
    assert max(sizes) - min(sizes) <= 1
    rows = np.sort(np.concatenate([s.features[:, 0] for s in shards]))
    np.testing.assert_array_equal(rows, np.arange(n))


def test_shuffled_partition_reproducible():
    ds = gaussian_blobs(30, 2, 3, np.random.default_rng(0))
    a = partition(ds, 4, "shuffled", seed=9)
    b = partition(ds, 4, "shuffled", seed=9)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.features, y.features)


# reference solutions --------------------------------------------------------------


def test_reference_weighted_mean_and_zero_energy():
    fam = make_family(ProblemSpec("quadratic", [([[2.0]], [2.0]), ([[1.0]], [-1.0])]))
    assert reference_solution(fam).theta[0] == pytest.approx(1 / 3, abs=1e-15)
    half = make_family(ProblemSpec("quadratic", [([[1.0]], [0.0])]))
    ref = reference_solution(half)
    assert ref.theta[0] == 0.0 and ref.energy == 0.0


def test_newton_and_accelerated_references_agree():
    rng = np.random.default_rng(0)
    ds = gaussian_blobs(50, 3, 3, rng)
    oracles = make_family(ProblemSpec("logistic", [(ds.features, ds.labels - 1)],
                                      mu=1e-2, classes=3))
    obj = GlobalObjective(oracles)
    a = newton_reference(obj, 1e-10)
    b = apg_reference(obj, 1e-10)
    assert np.linalg.norm(a - b) <= 1e-7


def test_singular_quadratic_reference_fails():
    X = np.array([[1.0, 0.0]])
    with pytest.raises(ReferenceSolveError):
        reference_solution([least_squares(X, np.ones(1))])


# rates -----------------------------------------------------------------------------


def test_rate_fit_geometric_and_inverse_square():
    factor, _ = rate_fit([1, 0.5, 0.25, 0.125, 0.0625])
    assert factor == pytest.approx(0.5, abs=1e-12)
    n = np.arange(1, 51)
    _, sup = rate_fit(3.0 / n ** 2)
    assert sup == pytest.approx(1.0)
    _, sup = rate_fit(1.0 / n ** 2, window=(10, 50))
    assert sup == pytest.approx(1.0)


def test_rate_fit_errors():
    with pytest.raises(FitError):
        rate_fit([1, 0.5, 0.0, 0.1, 0.1])
    with pytest.raises(FitError):
        rate_fit([1, 0.5, 0.25])


# regularization ---------------------------------------------------------------------


def test_choose_alpha_on_flat_least_squares():
    # minimum-norm solution (2, 0); the second coordinate is flat
    oracles = [least_squares(np.array([[1.0, 0.0]]), np.array([2.0]))]
    choice = choose_alpha(oracles, 0.4, alpha0=1e-2)
    assert choice.R0 == pytest.approx(2.0, rel=2e-2)
    assert choice.alpha == pytest.approx(0.1, rel=2e-2)
    assert choice.nu == choice.alpha
    assert choice.rho == pytest.approx(choice.alpha / (choice.L + choice.alpha))
    half = choose_alpha(oracles, 0.2, alpha0=1e-2)
    assert half.alpha == pytest.approx(choice.alpha / 2, rel=1e-12)


def test_choose_alpha_strongly_convex_input():
    oracles = quadratic_family(2, 3, 4.0, np.random.default_rng(0))
    assert choose_alpha(oracles, 1e-3).alpha > 0


# baselines ------------------------------------------------------------------------


def test_gd_fixed_step_classical_rate():
    # with step 2/(mu+L) the contraction factor is exactly (kappa-1)/(kappa+1)
    oracles = quadratic_family(1, 10, 10.0, np.random.default_rng(0))
    ref = reference_solution(oracles)
    trace = run_gd(oracles, 120, step=2 / 11, reference=ref)
    factor, _ = rate_fit(np.sqrt(trace.column("sq_param_err")), window=(20, 100))
    assert abs(factor - 9 / 11) <= 0.05


def test_gd_backtracking_linear_rate():
    oracles = quadratic_family(1, 10, 10.0, np.random.default_rng(0))
    ref = reference_solution(oracles)
    trace = run_baseline(oracles, "gd", 60, reference=ref)
    factor, _ = rate_fit(np.sqrt(trace.column("sq_param_err")), window=(10, 50))
    assert factor <= 9 / 11 + 0.05


def test_fedavg_one_step_equals_gd():
    oracles = quadratic_family(3, 4, 5.0, np.random.default_rng(1))
    step = 0.1
    a = run_gd(oracles, 30, step=step)
    b = run_fedavg(oracles, 30, 1, step=step)
    for ra, rb in zip(a.records, b.records):
        assert np.max(np.abs(ra.theta - rb.theta)) <= 1e-12


def test_fedavg_drift_plateau_versus_dualfl():
    het = make_family(ProblemSpec("quadratic", [([[2.0]], [2.0]), ([[1.0]], [-1.0])]))
    ref = reference_solution(het)
    err = run_fedavg(het, 300, 50, step=0.2, reference=ref).column("sq_param_err")
    assert err[-1] > 1e-4 and abs(err[-1] - err[-50]) <= 1e-12
    nu = 1.0 - 1e-6
    dual = run(het, EngineConfig(nu, nu / 2.0), 100, reference=ref)
    assert dual.column("sq_param_err")[-1] <= 1e-10


def test_unknown_baseline():
    with pytest.raises(ConfigurationError):
        run_baseline(toy_family(2), "scaffold", 1)


# traces ---------------------------------------------------------------------------


def test_trace_roundtrip(tmp_path):
    rec = RoundRecord(1, 0.0, [3, 4], [1e-3, math.nan], np.zeros(2), zeta_sum_norm=0.0,
                      E_err_rel=1 / 3, sq_param_err=2e-300, grad_norm=0.1)
    trace = RunTrace({"alpha": 0.1, "name": "x"}, [rec])
    path = tmp_path / "t.csv"
    emit_trace(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# alpha = 0.10000000000000001"
    assert lines[2] == ",".join(COLUMNS)
    assert lines[3].split(",")[2] == "0.33333333333333331"
    header, rows = read_trace(path)
    assert header["name"] == "x"
    assert rows[0, 2] == 1 / 3 and rows[0, 6] == 1e-3 and rows[0, 7] == 7


def test_empty_trace_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    emit_trace(RunTrace({"k": 1}), path)
    assert path.read_text().splitlines() == ["# k = 1", ",".join(COLUMNS)]
