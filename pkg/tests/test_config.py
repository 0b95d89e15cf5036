from __future__ import annotations

import pytest

from penalized_fb.config import ALL_CHECKS, ConfigError, RunConfig, apply_overrides, parse_config, parse_config_text
from penalized_fb.problems import build_problem, compile_expression

MINIMAL = """\
# 1D ramp
problem = interval_1d
epsilon_list = 0.1, 0.5
"""


def test_minimal_config_defaults():
    cfg = parse_config_text(MINIMAL)
    assert cfg.problem == "interval_1d"
    assert cfg.epsilon_list == [0.5, 0.1]
    assert cfg.p == 2.0 and cfg.alpha == 0.5
    assert cfg.checks == list(ALL_CHECKS)
    assert cfg.output_dir == "out" and cfg.seed == 0 and not cfg.warm_start


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(MINIMAL + "geometry.n = 65\nsolver.tol_energy = 1e-10\nvol_tol = 1/64\n")
    cfg = parse_config(path)
    assert cfg.geometry == {"n": 65}
    assert cfg.solver == {"tol_energy": 1e-10}
    assert cfg.vol_tol == pytest.approx(1 / 64)
    assert cfg.solver_config().tol_energy == 1e-10


@pytest.mark.parametrize(
    "extra, key, line",
    [
        ("alpha = 1.5\n", "alpha", 4),
        ("bogus.key = 1\n", "bogus.key", 4),
        ("geometry.n = 2.5\n", "geometry.n", 4),
        ("solver.max_outer = 0\n", "solver.max_outer", 4),
        ("geometry.radius = 2\n", "geometry.radius", 4),
    ],
)
def test_errors_name_key_and_line(extra, key, line):
    with pytest.raises(ConfigError) as err:
        parse_config_text(MINIMAL + extra)
    assert err.value.key == key
    assert err.value.line == line
    assert key in str(err.value)


def test_zero_epsilon_rejected():
    with pytest.raises(ConfigError) as err:
        parse_config_text("problem = interval_1d\nepsilon_list = 0.1, 0\n")
    assert err.value.key == "epsilon_list" and err.value.line == 2


def test_missing_required_key():
    with pytest.raises(ConfigError) as err:
        parse_config_text("problem = interval_1d\n")
    assert err.value.key == "epsilon_list"


def test_alpha_at_least_area_rejected():
    with pytest.raises(ConfigError, match="domain area"):
        parse_config_text("problem = square_2d\nepsilon_list = 0.1\nalpha = 1.2\ngeometry.n = 17\n")


def test_unknown_problem_and_check():
    with pytest.raises(ConfigError):
        parse_config_text("problem = torus\nepsilon_list = 0.1\n")
    with pytest.raises(ConfigError) as err:
        parse_config_text(MINIMAL + "verify.checks = structural, nope\n")
    assert err.value.key == "verify.checks"


def test_malformed_line():
    with pytest.raises(ConfigError) as err:
        parse_config_text("problem interval_1d\n")
    assert err.value.line == 1


def test_overrides():
    cfg = parse_config_text(MINIMAL, ["seed=4", "solver.toggle_passes=2"])
    assert cfg.seed == 4 and cfg.solver["toggle_passes"] == 2
    again = apply_overrides(cfg, ["p=3"])
    assert again.p == 3.0 and again.seed == 4 and again.solver == cfg.solver
    with pytest.raises(ConfigError) as err:
        parse_config_text(MINIMAL, ["nope=1"])
    assert err.value.line == "--set"


def test_segment_expressions():
    text = "problem = square_2d\nepsilon_list = 0.1\ngeometry.n = 17\nboundary.segment.top = b * maximum(1 - x, 0)\nboundary.contact_tag = left\n"
    cfg = parse_config_text(text)
    prob = cfg.build()
    d = prob.domain
    top = d.tag_mask("top")
    X, _ = d.coords
    assert prob.bdata.values[top] == pytest.approx(1 - X[top])
    assert prob.bdata.contact_tag == "left" and prob.bdata.c0 == 1.0


def test_expression_rejects_unknown_names():
    with pytest.raises(ValueError):
        compile_expression("__import__('os').getcwd()")
    with pytest.raises(ValueError):
        compile_expression("z + 1")
    f = compile_expression("sqrt(x**2 + y**2) - r")
    assert f(3.0, 4.0) == pytest.approx(0.0)


def test_bad_segment_reports_boundary():
    with pytest.raises(ConfigError) as err:
        parse_config_text(MINIMAL + "boundary.segment.left = q * 2\n")
    assert err.value.key == "boundary.segment.left" and err.value.line == 4
    with pytest.raises(ConfigError) as err:
        parse_config_text(MINIMAL + "boundary.segment.top = 1\n")
    assert err.value.key == "boundary.segment.top"


def test_strip_follows_oracle_length():
    at = build_problem("strip_2d", epsilon=0.1)
    over = build_problem("strip_2d", epsilon=0.36)
    assert at.lambda_star == pytest.approx(1 / (0.5 + at.domain.h))
    assert over.lambda_star == pytest.approx(1 / (0.6 + over.domain.h), rel=0.05)
    assert at.alpha == over.alpha


def test_runconfig_direct_validation():
    with pytest.raises(ConfigError):
        RunConfig(problem="interval_1d", epsilon_list=[])
    with pytest.raises(ConfigError):
        RunConfig(problem="interval_1d", epsilon_list=[0.1], p=1.0)
