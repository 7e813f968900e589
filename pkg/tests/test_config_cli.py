import json

import pytest

from fblc0.cli import main
from fblc0.config import ParamConfig, load_config
from fblc0.errors import ConfigError
from fblc0.verify import run_suite

SMALL = dict(restarts=8, steps=100, samples=2000)


# -- configuration ------------------------------------------------------------------


def test_defaults():
    cfg = ParamConfig()
    assert cfg.truncation == 32 and cfg.eps == 0.1 and cfg.tol == 1e-9 and cfg.seed == 0
    assert cfg.N(1) == 2 and cfg.N(32) == 33


@pytest.mark.parametrize("kw", [
    {"truncation": 0},
    {"n_seq": (2, 2, 3), "truncation": 3},
    {"n_seq": (2, 3), "truncation": 3},
    {"eps": 0.0},
    {"restarts": 0},
    {"search_width": 21},
])
def test_invalid_configs(kw):
    with pytest.raises(ConfigError):
        ParamConfig(**kw)


def test_layering(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"seed": 3, "eps": 0.25, "truncation": 10}))
    cfg = load_config(path, env={"FBLC0_SEED": "5"}, overrides={"eps": 0.5, "seed": None})
    assert cfg.seed == 5 and cfg.eps == 0.5 and cfg.truncation == 10
    assert cfg.n_seq == tuple(range(2, 12))


def test_env_sequence():
    cfg = load_config(env={"FBLC0_N_SEQ": "2,4,8", "FBLC0_TRUNCATION": "3"})
    assert cfg.n_seq == (2, 4, 8)


def test_bad_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"colour": 1}))
    with pytest.raises(ConfigError):
        load_config(path, env={})
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json", env={})


# -- suites ---------------------------------------------------------------------


def test_unknown_suite():
    with pytest.raises(ConfigError, match="unknown suite"):
        run_suite("lemma99", ParamConfig())


def test_report_is_byte_identical_for_fixed_seed():
    cfg = ParamConfig(**SMALL)
    a = run_suite("lemma35", cfg, n_max=2).dumps(timing=False)
    b = run_suite("lemma35", cfg, n_max=2).dumps(timing=False)
    assert a == b
    data = json.loads(a)
    assert data["status"] == "pass" and "timing" not in data
    rec = data["records"][0]
    assert set(rec) >= {"lemma", "inputs_digest", "values", "bound", "passed", "tolerance", "seed"}


def test_report_records_reverify():
    from fblc0.embedding import FnEvaluator
    from fblc0.functionals import WitnessTuple
    from fblc0.norm import norm_lower_bound

    cfg = ParamConfig(**SMALL)
    rep = run_suite("lemma35", cfg, n_max=3)
    for r in rep.records:
        if r.check_id.endswith(".search"):
            w = WitnessTuple.from_json(r.values["witness"])
            assert norm_lower_bound(FnEvaluator(r.inputs["n"], cfg), w) == r.values["search_max"]


def test_small_suites_pass():
    cfg = ParamConfig(**SMALL)
    for name in ("lemma22", "lemma23", "lemma32", "thm37"):
        rep = run_suite(name, cfg)
        assert rep.passed, rep.table()
    assert "PASS" in rep.table()


# -- command line ------------------------------------------------------------------


def test_cli_norm_f3(capsys):
    assert main(["norm", "f:3", "--budget", "8", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["estimate"]["lower_bound"] == 1.0
    assert data["estimate"]["best_witness"]["functionals"] == [{"ambient": "dual", "entries": [[3, 1.0]]}]


def test_cli_norm_generator(capsys):
    assert main(["norm", "(gen 1)", "--budget", "8"]) == 0
    assert "lower bound  1.0" in capsys.readouterr().out


def test_cli_norm_partial_sum(capsys):
    assert main(["norm", "(add f:1 f:2 f:3)", "--format", "json"]) == 0
    lb = json.loads(capsys.readouterr().out)["estimate"]["lower_bound"]
    assert 1 - 1e-9 <= lb <= 1 + 1e-9


def test_cli_norm_with_dominance(capsys):
    assert main(["norm", "f:2", "--budget", "4", "--dominator", "(abs (gen 2))",
                 "--samples", "5000"]) == 0
    assert "no violation" in capsys.readouterr().out


def test_cli_norm_parse_error(capsys):
    assert main(["norm", "(add f:1"]) == 2
    assert "position" in capsys.readouterr().err
    assert main(["norm", "g:1"]) == 2
    assert "unknown evaluator" in capsys.readouterr().err


def test_cli_decompose(capsys):
    assert main(["decompose", "1:0.5,2:1.0,3:0.25", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["decomposition"]["terms"] == [[0.5, [2]], [0.25, [1, 2]], [0.25, [1, 2, 3]]]
    assert main(["decompose", "1:-1"]) == 2


def test_cli_select(capsys):
    assert main(["select", "phi", "--eps", "0.1", "--length", "5", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["selection"]["indices"] == [1, 2, 3, 4, 5] and data["passed"]


def test_cli_verify_out_file(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "thm37", "--format", "json", "--out", str(out), "--no-timing"]) == 0
    assert json.loads(out.read_text())["status"] == "pass"


def test_cli_verify_invalid_config(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "all", "--trunc", "0", "--out", str(out)]) == 2
    assert not out.exists()
    assert main(["verify", "lemma32", "--n-seq", "3,2"]) == 2


def test_cli_env_override(monkeypatch, capsys):
    monkeypatch.setenv("FBLC0_SEED", "not-a-number")
    assert main(["verify", "thm37"]) == 2
    assert "seed" in capsys.readouterr().err


def test_cli_failing_check_exits_nonzero(capsys):
    # h - f is not dominated by a multiple of |delta_1|: the sampled check fails
    rc = main(["norm", "(add h:1:1 (scale -1.0 f:1))", "--budget", "4",
               "--dominator", "(scale 0.5 (abs (gen 1)))", "--dominator-bound", "0.5"])
    assert rc == 1
    assert "violation" in capsys.readouterr().out
