import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matfactor.core import KnownFactorSeries, MatrixSeries
from matfactor.estimator import EstimationOptions
from matfactor.io import (
    ConfigParseError,
    DuplicateCellError,
    MalformedNumberError,
    MissingCellError,
    PanelError,
    forward_fill,
    format_config,
    load_config,
    load_panel,
    parse_config_text,
    read_json,
    read_panel_array,
    standardize,
    write_json,
    write_panel,
)
from matfactor.simulator import ConfigError, SimulationConfig

HEADER = "t,row,col,value\n"


def write_text(path, body):
    path.write_text(HEADER + body, encoding="utf-8")
    return path


def full_grid(shape, skip=None, extra=""):
    lines = []
    for t in range(1, shape[0] + 1):
        for i in range(1, shape[1] + 1):
            for j in range(1, shape[2] + 1):
                if (t, i, j) != skip:
                    lines.append(f"{t},{i},{j},{100 * t + 10 * i + j}")
    return "\n".join(lines) + "\n" + extra


def test_complete_small_panel(tmp_path):
    path = write_text(tmp_path / "y.csv", full_grid((2, 2, 2)))
    series = load_panel(path)
    assert isinstance(series, MatrixSeries)
    assert series.data[1, 0, 1] == 212
    assert series.data.shape == (2, 2, 2)
    assert isinstance(load_panel(path, kind="known"), KnownFactorSeries)


def test_rows_may_come_in_any_order(tmp_path):
    path = write_text(tmp_path / "y.csv", "2,1,1,5\n1,1,1,3\n")
    np.testing.assert_array_equal(read_panel_array(path)[:, 0, 0], [3, 5])


def test_missing_cell(tmp_path):
    path = write_text(tmp_path / "y.csv", full_grid((2, 2, 2), skip=(2, 1, 1)))
    with pytest.raises(MissingCellError) as info:
        read_panel_array(path)
    assert info.value.cell == (2, 1, 1)


def test_duplicate_cell(tmp_path):
    path = write_text(tmp_path / "y.csv", full_grid((2, 1, 1), extra="1,1,1,7\n"))
    with pytest.raises(DuplicateCellError) as info:
        read_panel_array(path)
    assert info.value.cell == (1, 1, 1)
    assert info.value.line == 4


def test_malformed_number_reports_line(tmp_path):
    path = write_text(tmp_path / "y.csv", "1,1,1,1.0\n2,1,1,abc\n")
    with pytest.raises(MalformedNumberError) as info:
        read_panel_array(path)
    assert info.value.line == 3
    path = write_text(tmp_path / "z.csv", "1,1,1,1.0\n2,1,1,\n")
    with pytest.raises(MalformedNumberError):
        read_panel_array(path)


def test_header_and_missing_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("time,r,c,v\n1,1,1,1\n", encoding="utf-8")
    with pytest.raises(PanelError):
        read_panel_array(bad)
    with pytest.raises(FileNotFoundError):
        read_panel_array(tmp_path / "absent.csv")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(1, 4), st.integers(1, 4))
def test_write_read_round_trip_is_exact(tmp_path_factory, seed, T, p, q):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((T, p, q)) * 10.0 ** rng.integers(-8, 8, size=(T, p, q))
    path = tmp_path_factory.mktemp("panel") / "y.csv"
    write_panel(path, data)
    np.testing.assert_array_equal(read_panel_array(path), data)


def test_panel_file_format(tmp_path):
    path = tmp_path / "y.csv"
    write_panel(path, np.arange(8.0).reshape(2, 2, 2))
    raw = path.read_bytes()
    assert raw.startswith(b"t,row,col,value\n")
    assert b"\r" not in raw
    assert raw.splitlines()[1] == b"1,1,1,0"


def test_forward_fill(tmp_path):
    path = write_text(tmp_path / "y.csv", "1,1,1,1\n2,1,1,NA\n3,1,1,\n4,1,1,4\n")
    data = read_panel_array(path, allow_missing=True)
    np.testing.assert_array_equal(forward_fill(data)[:, 0, 0], [1, 1, 1, 4])
    with pytest.raises(PanelError):
        forward_fill(np.array([[[np.nan]], [[1.0]]]))


def test_standardize():
    rng = np.random.default_rng(0)
    data = 3 + 2 * rng.standard_normal((50, 2, 3))
    out = standardize(data)
    np.testing.assert_allclose(out.mean(axis=0), 0, atol=1e-12)
    np.testing.assert_allclose(out.std(axis=0), 1, rtol=1e-12)
    with pytest.raises(PanelError):
        standardize(np.ones((4, 1, 1)))


# -- config files ------------------------------------------------------------

def test_parse_config_values():
    values = parse_config_text(
        "# comment\np = 6\nq = 4  # trailing\ndelta1 = 1/2\n"
        "x_transition = 0.5 0; 0 0.5\nm = 2\nf_ar_coeffs = 0.1, 0.2\n"
        "fixed_dims = 3 3\ncenter = true\nk_max_rule = third\n"
    )
    assert values["p"] == 6 and values["q"] == 4
    assert values["delta1"] == 0.5
    np.testing.assert_array_equal(values["x_transition"], [[0.5, 0], [0, 0.5]])
    np.testing.assert_array_equal(values["f_ar_coeffs"], [0.1, 0.2])
    assert values["fixed_dims"] == (3, 3)
    assert values["center"] is True
    assert values["k_max_rule"] == "third"


@pytest.mark.parametrize("text, line", [
    ("p = 4\nbogus = 1\n", 2),
    ("p = 4\np = 5\n", 2),
    ("p = 4\n\nq = four\n", 3),
    ("no equals sign\n", 1),
    ("fixed_dims = 1 2 3\n", 1),
])
def test_config_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigParseError) as info:
        parse_config_text(text)
    assert info.value.line == line
    assert f"line {line}" in str(info.value)


def test_config_validation_names_field(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("p = 4\nq = 4\ndelta2 = 2\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_config(path)
    assert info.value.field == "delta2"


def test_config_round_trip(tmp_path):
    cfg = SimulationConfig(p=7, q=5, m=2, k=2, r=1, t_len=33, delta1=1 / 3, seed=9,
                           x_transition=[[0.3, 0.1], [0.0, 0.2]], f_ar_coeffs=[0.25, -0.5],
                           fixed_parameters=True)
    opts = EstimationOptions(h0=2, k_max_rule="third", fixed_dims=(2, 1), center=True)
    path = tmp_path / "c.txt"
    path.write_text(format_config(cfg, opts), encoding="utf-8")
    cfg2, opts2 = load_config(path)
    assert cfg2.to_dict() == cfg.to_dict()
    assert (opts2.h0, opts2.fixed_dims, opts2.center) == (2, (2, 1), True)
    assert opts2.k_max(9) == opts.k_max(9)


def test_json_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    a = rng.standard_normal((3, 2))
    path = tmp_path / "r.json"
    write_json(path, {"a": a, "k": np.int64(3), "nested": {"v": [np.float64(0.1)]}})
    back = read_json(path)
    np.testing.assert_array_equal(np.array(back["a"]), a)
    assert back["k"] == 3 and back["nested"]["v"] == [0.1]
