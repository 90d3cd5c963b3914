import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forestz.config import (
    FAMILIES,
    ExperimentConfig,
    ModelConfig,
    TempGrid,
    build_model,
    parse_key_values,
    parse_tables,
)
from forestz.errors import ConfigError
from forestz.exact import exact_partition
from forestz.graph import InteractionGraph

from conftest import complete

finite = st.floats(-1e6, 1e6, allow_nan=False)


@st.composite
def temp_grids(draw):
    lo = draw(st.floats(1e-3, 1e3))
    hi = draw(st.floats(1e-3, 1e3).filter(lambda x: x > lo))
    return TempGrid(lo, hi, draw(st.integers(2, 200)), draw(st.sampled_from(["log", "lin"])))


@st.composite
def experiment_configs(draw):
    return ExperimentConfig(
        seed=draw(st.integers(0, 2**64 - 1)),
        sizes=tuple(draw(st.lists(st.integers(1, 500), min_size=1, max_size=4))),
        samples=draw(st.integers(1, 5000)),
        j=draw(finite),
        half_factor=draw(st.booleans()),
        temps=draw(temp_grids()),
        betas=tuple(draw(st.lists(st.floats(0.0, 10.0), max_size=5))),
        out_path=draw(st.from_regex(r"[a-z0-9_/]{1,12}\.csv", fullmatch=True)),
        threshold=draw(st.floats(1e-3, 10.0)),
        tol=draw(st.floats(1e-15, 1e-2)),
        max_iters=draw(st.integers(1, 10**6)),
        damping=draw(st.floats(0.0, 0.99)),
        rho=draw(finite),
        family=draw(st.sampled_from(FAMILIES)),
        workers=draw(st.integers(1, 16)),
    )


class TestTempGrid:
    def test_default_grid(self):
        t = TempGrid().values()
        assert len(t) == 31
        assert t[0] == pytest.approx(0.1) and t[-1] == pytest.approx(100.0)
        np.testing.assert_allclose(np.diff(np.log(t)), math.log(1000) / 30, rtol=1e-12)

    def test_linear(self):
        np.testing.assert_allclose(TempGrid.parse("1:3:5:lin").values(), [1, 1.5, 2, 2.5, 3])

    @pytest.mark.parametrize("text", ["3:1:5:log", "0:1:5:log", "1:2:1:log", "1:2:5:cubic", "1:2:5", "a:2:5:log"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError, match="temps"):
            TempGrid.parse(text)

    @settings(max_examples=100, deadline=None)
    @given(temp_grids())
    def test_round_trip(self, grid):
        assert TempGrid.parse(grid.format()) == grid


class TestExperimentConfig:
    @settings(max_examples=150, deadline=None)
    @given(experiment_configs())
    def test_round_trip(self, cfg):
        assert ExperimentConfig.from_text(cfg.to_text()) == cfg

    def test_defaults_describe_the_kl_study(self):
        cfg = ExperimentConfig()
        assert (cfg.sizes, cfg.samples, cfg.j, cfg.half_factor) == ((50,), 200, 10.0, True)
        assert (cfg.tol, cfg.max_iters, cfg.damping) == (1e-10, 10_000, 0.5)

    def test_partial_file_keeps_base(self):
        base = ExperimentConfig(samples=7)
        cfg = ExperimentConfig.from_text("# comment\nJ = 2.5\nsizes = 4, 5\n", base=base)
        assert cfg.j == 2.5 and cfg.sizes == (4, 5) and cfg.samples == 7

    @pytest.mark.parametrize(
        "text, message",
        [
            ("samples = 0\n", "samples"),
            ("bogus = 1\n", "src:1: unknown key 'bogus'"),
            ("seed = 1\nseed = 2\n", "src:2: duplicate key 'seed'"),
            ("j = 1\nJ = 2\n", "src:2: duplicate key 'J'"),
            ("half_factor = maybe\n", "src:1: half_factor"),
            ("\ntemps = 5:1:3:log\n", "src:2: temps"),
            ("damping = 1.0\n", "damping"),
            ("family = torus\n", "family"),
            ("seed = -1\n", "seed"),
            ("no equals sign\n", "src:1: expected"),
        ],
    )
    def test_errors_name_the_field(self, text, message):
        with pytest.raises(ConfigError, match=message):
            ExperimentConfig.from_text(text, "src")

    def test_load(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("samples = 3\n")
        assert ExperimentConfig.load(path).samples == 3


class TestParseKeyValues:
    def test_comments_and_blank_lines(self):
        assert parse_key_values("a = 1 # x\n\n# only comment\nb=two\n") == {"a": ("1", 1), "b": ("two", 4)}


class TestModelConfig:
    def test_round_trip(self):
        cfg = ModelConfig(model="ising", j=-0.75, half_factor=True, beta=0.2, graph="g.txt")
        assert ModelConfig.from_text(cfg.to_text()) == cfg

    def test_paths_relative_to_config(self, tmp_path):
        (tmp_path / "m.cfg").write_text("model = table\ntables = t.txt\ngraph = g.txt\n")
        cfg = ModelConfig.load(tmp_path / "m.cfg")
        assert cfg.tables == str(tmp_path / "t.txt")
        assert cfg.graph == str(tmp_path / "g.txt")

    @pytest.mark.parametrize("text", ["model = potts\n", "beta = -1\n", "model = table\n", "J = x\n", "colour = 1\n"])
    def test_invalid(self, text):
        with pytest.raises(ConfigError):
            ModelConfig.from_text(text)


class TestTables:
    def test_parse_and_build(self, tmp_path):
        g = InteractionGraph.from_pairs(3, [(0, 1), (1, 2)])
        text = "states 1 3\n0 1 0 2 1.5\n2 1 1 0 -0.5  # written from node 2's side\n"
        sizes, tables = parse_tables(text, g)
        assert sizes == [2, 3, 2]
        assert tables[0][0, 2] == 1.5
        assert tables[1][0, 1] == -0.5
        (tmp_path / "t.txt").write_text(text)
        m = build_model(g, ModelConfig(model="table", tables=str(tmp_path / "t.txt"), beta=1.0))
        assert m.state_sizes == (2, 3, 2)
        assert exact_partition(m).z > 0

    @pytest.mark.parametrize(
        "text, line",
        [("0 2 0 0 1.0\n", 1), ("\n0 1 0 0 nan\n", 2), ("states 0\n", 1), ("0 1 0 5 1.0\n", 1), ("0 1 0\n", 1)],
    )
    def test_errors_name_the_line(self, text, line):
        g = InteractionGraph.from_pairs(3, [(0, 1), (1, 2)])
        with pytest.raises(ConfigError, match=f"src:{line}:"):
            parse_tables(text, g, "src")

    def test_ising_build(self):
        m = build_model(complete(3), ModelConfig(j=2.0, half_factor=True, beta=0.5))
        assert m.sup_h == 1.0 and m.beta == 0.5
