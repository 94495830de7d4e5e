import csv
import json
from pathlib import Path

import pytest

from fa1f.cli import main
from fa1f.config import ConfigError, ExperimentConfig, load_config, parse_config
from fa1f.oracle import build_chain, exact_decay
from fa1f.dynamics import CylinderEvent
from fa1f.graph import build_window

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_parse_minimal():
    cfg = parse_config("[experiment]\nkind = oracle-decay\nq = 0.5\nt_grid = 1, 2; 4\nK = 3\nR = 0.3\n")
    assert cfg.kind == "oracle-decay" and cfg.t_grid == (1.0, 2.0, 4.0)
    assert cfg.K == 3.0 and cfg.R == 0.3
    assert cfg.validate() is cfg


def test_parse_graph_section():
    cfg = parse_config("[experiment]\nkind = evolve\nq = 0.5\nt_grid = 1\n[graph]\nkind = grid2d\nradius = 2\n")
    assert cfg.graph_kind == "grid2d" and cfg.radius == 2


@pytest.mark.parametrize("text", [
    "[graph]\nkind = path\n",
    "[experiment]\nq = 0.5\n",
    "[experiment]\nkind = evolve\nbogus = 1\n",
    "[experiment]\nkind = evolve\n[graph]\nseed = 3\n",
    "[experiment]\nkind = evolve\nq = half\n",
    "not an ini file",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


@pytest.mark.parametrize("kw", [
    {"kind": "nope"},
    {"kind": "evolve", "q": 1.0, "t_grid": (1.0,)},
    {"kind": "evolve", "q": 0.5},
    {"kind": "evolve", "q": 0.5, "t_grid": (-1.0,)},
    {"kind": "evolve", "q": 0.5, "t_grid": (1.0,), "seed": 2**64},
    {"kind": "assembly", "q": 0.5, "t_grid": (1.0,), "sigma": 0.3},
    {"kind": "renorm-tails", "K": 0.5},
    {"kind": "contact-density", "q": 0.9, "t_grid": (1.0,), "L": 0.5},
    {"kind": "navigate-stats", "q": 0.4},
    {"kind": "dual-audit", "q": 0.5, "t_grid": (2.0,), "tau": 2.0},
    {"kind": "fit"},
    {"kind": "evolve", "q": 0.5, "t_grid": (1.0,), "graph_kind": "torus"},
])
def test_validate_errors(kw):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kw).validate()


def test_fit_input_relative_to_config():
    cfg = load_config(CONFIGS / "fit.ini")
    assert Path(cfg.input) == CONFIGS / "series.csv"


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_oracle_decay_outputs(tmp_path):
    out = tmp_path / "o"
    assert main(["oracle-decay", "--config", str(CONFIGS / "oracle_decay.ini"), "--out", str(out)]) == 0
    rows = _rows(out / "curve.csv")
    assert list(rows[0]) == ["t", "exact_prob", "stationary_prob", "abs_diff"]
    curve = exact_decay(build_chain(build_window("path", 1), 0.5), 0, CylinderEvent.occupied(1), [0.5, 1, 2, 4, 8])
    for r, p in zip(rows, curve.exact):
        assert float(r["exact_prob"]) == pytest.approx(p, abs=1e-12)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["gap"] == pytest.approx(curve.gap)


def _run_twice(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    return a


FAST = {
    "sample_scheme.ini": [], "evolve.ini": [], "couple.ini": ["--replicas", "50"],
    "dual_audit.ini": ["--replicas", "5"], "navigate_stats.ini": ["--replicas", "200"],
    "contact_density.ini": ["--replicas", "50"], "renorm_tails.ini": ["--replicas", "2000"],
    "oracle_decay.ini": [], "fit.ini": [],
}


@pytest.mark.parametrize("name", sorted(FAST))
def test_configs_rerun_byte_identical(tmp_path, name):
    ini = CONFIGS / name
    kind = load_config(ini).kind
    out = _run_twice(tmp_path, [kind, "--config", str(ini), "--seed", "5"] + FAST[name])
    assert any(out.iterdir())


def test_seed_changes_output(tmp_path):
    ini = str(CONFIGS / "sample_scheme.ini")
    assert main(["sample-scheme", "--config", ini, "--seed", "1", "--out", str(tmp_path / "a")]) == 0
    assert main(["sample-scheme", "--config", ini, "--seed", "2", "--out", str(tmp_path / "b")]) == 0
    fa = sorted((tmp_path / "a").iterdir())
    fb = sorted((tmp_path / "b").iterdir())
    assert any(x.read_bytes() != y.read_bytes() for x, y in zip(fa, fb))


def test_error_json_and_exit_code(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[experiment]\nkind = evolve\nq = 1.5\nt_grid = 1\n")
    out = tmp_path / "out"
    code = main(["evolve", "--config", str(ini), "--out", str(out)])
    assert code == 2
    payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert payload["error"] == "ConfigError" and "q" in payload["message"]
    assert json.loads((out / "error.json").read_text()) == payload


def test_fit_subcommand(tmp_path):
    series = tmp_path / "s.csv"
    series.write_text("t,p_hat\n" + "".join(f"{t},{0.8 * 2.718281828459045 ** (-0.5 * t)!r}\n" for t in range(1, 6)))
    ini = tmp_path / "fit.ini"
    ini.write_text("[experiment]\nkind = fit\ninput = s.csv\n")
    assert main(["fit", "--config", str(ini), "--out", str(tmp_path / "o")]) == 0
    fit = json.loads((tmp_path / "o" / "fit.json").read_text())["fit"]
    assert fit["rate"] == pytest.approx(0.5, rel=1e-9)
    assert fit["prefactor"] == pytest.approx(0.8, rel=1e-9)


def test_fit_bad_series(tmp_path, capsys):
    series = tmp_path / "s.csv"
    series.write_text("t,p_hat\n1,0.5\n2,0\n3,0.1\n")
    ini = tmp_path / "fit.ini"
    ini.write_text("[experiment]\nkind = fit\ninput = s.csv\n")
    assert main(["fit", "--config", str(ini), "--out", str(tmp_path / "o")]) != 0
    assert "error" in json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_assembly_budget_truncation(tmp_path):
    ini = tmp_path / "asm.ini"
    ini.write_text("[experiment]\nkind = assembly\nq = 0.9\nt_grid = 1, 2, 3\nx = 31\ny = 30\n"
                   "replicas = 2000000\nbudget = 0.5\n[graph]\nkind = path\nradius = 60\n")
    out = tmp_path / "o"
    assert main(["assembly", "--config", str(ini), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["truncated"] is True
    assert 0 < summary["replicas_done"] < 2_000_000
    assert len(_rows(out / "assembly.csv")) == 3
