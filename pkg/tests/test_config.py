import pytest

from cocyclelab.config import ConfigError, ExperimentConfig, ExperimentSettings


def test_defaults_round_trip(default_config):
    again = ExperimentConfig.parse(default_config.dumps())
    assert again.echo() == default_config.echo()


def test_names_map_to_codes():
    assert ExperimentSettings(name="theta-scan").name == "E4"
    assert ExperimentSettings(name="E6").name == "E6"
    with pytest.raises(ConfigError):
        ExperimentSettings(name="E9")


@pytest.mark.parametrize(
    "text",
    [
        "[model]\nfoo = 1\n",
        "[cocycle]\nd = 1\nwobble = 2\n",
        "[extra]\nx = 1\n",
        "[experiment]\nn_iter = 0\n",
        "[experiment]\ntol = -1\n",
        "[experiment]\nn_iter = many\n",
        "[experiment]\nbogus = 1\n",
        "[model]\nmatrix = 1 1 0 1\n",
        "[model]\nseed = -4\n",
        "[model]\nseed = abc\n",
        "[cocycle]\nterm0 = rotation 0.1*cosh(1,0,0)\n",
        "not an ini file",
    ],
)
def test_rejects_bad_input(text):
    with pytest.raises(ConfigError):
        ExperimentConfig.parse(text)


def test_overrides(default_config):
    cfg = default_config.with_seed(42).with_experiment(n_iter=10)
    assert cfg.seed == 42 and cfg.experiment.n_iter == 10
    assert default_config.seed == 0


def test_load_from_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[model]\nseed = 7\n[experiment]\nname = bunching\ns_step = 0.05\n")
    cfg = ExperimentConfig.load(path)
    assert cfg.seed == 7
    assert cfg.experiment.name == "E2" and cfg.experiment.s_step == 0.05
    assert cfg.experiment.float_list("delta_grid") == [10.0, 30.0, 100.0, 300.0]


def test_build_objects(default_config):
    A = default_config.build_cocycle()
    assert A.d == 1 and len(A.terms) == 1
