import json

import pytest

from crossedhom.cache import ResultCache
from crossedhom.cli import main
from crossedhom.config import load_config_text, parse_rational
from crossedhom.errors import ConfigError


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj, indent=2))
    return str(p)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


POLY = {"schema": 1, "algebra": "polynomial(1)", "request": [{"kind": "hh", "degrees": 2, "weights": 3}]}


# -- config ------------------------------------------------------------------------

def test_rationals_are_exact():
    assert parse_rational("2/4") == parse_rational("1/2")
    for bad in (0.5, True, "1.5", "x"):
        with pytest.raises(ValueError):
            parse_rational(bad)


@pytest.mark.parametrize("text, needle, field, line", [
    ('{\n  "algebra": "weyl(1)",\n  "group": {"generators": [[["-1", "0"],\n  ["0", "1/0"]]]}\n}',
     "zero denominator", "group.generators[0][1][1]", 4),
    ('{"algebra": "weyl(1)", "bogus": 1}', "Extra inputs", "bogus", 1),
    ('{"algebra": "weyl(1)", "request": [{"kind": "zz"}]}', "Input should be", "request[0].kind", 1),
    ('{"algebra": "blah(1)"}', "unknown algebra 'blah'", "algebra", 1),
    ('{"algebra": "weyl(1)",\n "schema": 3}', "unsupported schema", "schema", 2),
    ('{"algebra": "weyl(1)", "group": {"generators": [[[0.5]]]}}', "not exact", None, 1),
    ('{"algebra": ', "invalid JSON", None, 1),
])
def test_config_diagnostics(text, needle, field, line):
    with pytest.raises(ConfigError) as ei:
        load_config_text(text)
    e = ei.value
    assert needle in str(e)
    if field is not None:
        assert e.field == field
    assert e.line == line


def test_config_echo_is_canonical():
    cfg = load_config_text('{"algebra": "polynomial(1)", "group": {"generators": [[["-2/2"]]]}}')
    assert cfg.echo()["group"]["generators"] == [[["-1"]]]
    assert cfg.echo()["algebra"]["name"] == "polynomial"


# -- run ---------------------------------------------------------------------------------

def test_minimal_hkr_table(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "run", "--config", write(tmp_path, "c.json", POLY))
    assert code == 0
    rep = json.loads(out)
    table = rep["results"][0]["table"]
    got = {(c["k"], c["w"]): c["total"] for c in table}
    assert got == {(k, w): int(w >= k) if k < 2 else 0 for k in range(3) for w in range(4)}
    assert rep["engine"]["name"] == "crossedhom" and rep["schema"] == 1
    assert "timing" not in rep


def test_spectral_example_weyl_minus_identity(tmp_path, capsys):
    cfg = {"schema": 1, "algebra": "weyl(1)", "group": {"generators": [[["-1", "0"], ["0", "-1"]]]},
           "request": [{"kind": "spectral", "degrees": 2, "weights": 2}]}
    code, out, _ = run_cli(capsys, "spectral", "--config", write(tmp_path, "w.json", cfg))
    assert code == 0
    rep = json.loads(out)
    cell = rep["results"][0]["table"][0]
    assert {"e0", "e1", "e2", "d1_equals_delta", "hh"} <= set(cell)
    assert rep["verification"]["failed"] == 0 and rep["verification"]["passed"] > 0
    assert any(e["check"] == "d1_equals_delta" for e in rep["verification"]["entries"])


def test_bad_rational_exits_with_config_error(tmp_path, capsys):
    text = '{\n "algebra": "weyl(1)",\n "group": {"generators": [[["1/0", "0"], ["0", "1"]]]}\n}'
    code, out, err = run_cli(capsys, "run", "--config", write(tmp_path, "b.json", text))
    assert code == 3 and out == ""
    assert "group.generators[0][0][0]" in err and "line 3" in err


def test_model_errors_carry_line(tmp_path, capsys):
    text = '{\n "algebra": "polynomial(1)",\n "group": {\n  "generators": [[["0", "1"], ["1", "0"]]]}\n}'
    code, _, err = run_cli(capsys, "run", "--config", write(tmp_path, "d.json", text))
    assert code == 3 and "line 4" in err and "Q^2" in err


def test_request_errors_do_not_abort_siblings(tmp_path, capsys):
    cfg = {"schema": 1, "algebra": "symbol(2, -3, 3)",
           "request": [{"kind": "hh", "degrees": [1], "weights": [0]}, {"kind": "hh", "degrees": [0], "weights": [0]}]}
    code, out, err = run_cli(capsys, "run", "--config", write(tmp_path, "s.json", cfg))
    rep = json.loads(out)
    assert code == 2
    assert [r["status"] for r in rep["results"]] == ["error", "ok"]
    assert rep["results"][1]["table"][0]["total"] == 2
    assert "UnsupportedModel" in err


def test_explicit_and_trivial_actions(tmp_path, capsys):
    cfg = {"schema": 1, "algebra": "polynomial(1)", "action": {"kind": "explicit", "matrices": [[["-1"]]]},
           "request": [{"kind": "hh", "degrees": [0], "weights": [0, 1, 2]}]}
    _, out, _ = run_cli(capsys, "run", "--config", write(tmp_path, "e.json", cfg))
    assert [c["total"] for c in json.loads(out)["results"][0]["table"]] == [2, 0, 1]
    s3 = [[["0", "1", "0"], ["1", "0", "0"], ["0", "0", "1"]], [["0", "1", "0"], ["0", "0", "1"], ["1", "0", "0"]]]
    cfg = {"schema": 1, "algebra": "ground(3)", "group": {"generators": s3},
           "request": [{"kind": "hh", "degrees": [0], "weights": [0]}]}
    _, out, _ = run_cli(capsys, "run", "--config", write(tmp_path, "g.json", cfg))
    assert json.loads(out)["results"][0]["table"][0]["total"] == 3


def test_flags_build_a_request(capsys):
    code, out, _ = run_cli(capsys, "hc", "--algebra", "polynomial(1)", "--max-degree", "1", "--max-weight", "2")
    rep = json.loads(out)
    assert code == 0 and rep["results"][0]["kind"] == "hc"
    assert {(c["k"], c["w"]): c["total"] for c in rep["results"][0]["table"]} == {
        (0, 0): 1, (0, 1): 1, (0, 2): 1, (1, 0): 0, (1, 1): 0, (1, 2): 0}  # HC_1 = Ω^1 / dΩ^0 = 0


# -- determinism and cache -------------------------------------------------------------

def test_reports_are_byte_identical_and_parallel_safe(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", {**POLY, "request": POLY["request"] + [{"kind": "twisted", "degrees": 1}]})
    outs = [run_cli(capsys, "run", "--config", cfg)[1] for _ in range(2)]
    par = run_cli(capsys, "run", "--config", cfg, "--jobs", "2")[1]
    assert outs[0] == outs[1] == par


def test_cache_hits_and_transparency(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", POLY)
    cache = str(tmp_path / "cache")
    _, first, err1 = run_cli(capsys, "run", "--config", cfg, "--cache", cache)
    _, second, err2 = run_cli(capsys, "run", "--config", cfg, "--cache", cache)
    _, plain, _ = run_cli(capsys, "run", "--config", cfg)
    assert "0 hits, 12 misses" in err1 and "12 hits, 0 misses" in err2
    assert first == second == plain


def test_cache_version_bump_misses(tmp_path):
    c1 = ResultCache(str(tmp_path), "1.0")
    c1.put({"a": 1}, {"v": 3})
    assert ResultCache(str(tmp_path), "1.0").get({"a": 1}) == {"v": 3}
    c2 = ResultCache(str(tmp_path), "1.1")
    assert c2.get({"a": 1}) is None and c2.misses == 1


def test_corrupt_entry_is_recomputed_and_overwritten(tmp_path, capsys, caplog):
    cfg = write(tmp_path, "c.json", POLY)
    cache = tmp_path / "cache"
    _, good, _ = run_cli(capsys, "run", "--config", cfg, "--cache", str(cache))
    victims = sorted(p for p in cache.rglob("*.json"))
    victims[0].write_text("{ not json")
    victims[1].write_text(json.dumps({"key": "wrong", "engine": "0.1.0", "value": 0}))
    with caplog.at_level("WARNING"):
        _, again, err = run_cli(capsys, "run", "--config", cfg, "--cache", str(cache))
    assert again == good
    assert "2 corrupt" in err
    assert sum("recomputing" in r.getMessage() for r in caplog.records) == 2
    assert json.loads(victims[0].read_text())["value"] is not None  # overwritten


def test_unwritable_cache_dir_runs_uncached(tmp_path, capsys, caplog):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = write(tmp_path, "c.json", POLY)
    with caplog.at_level("WARNING"):
        code, out, err = run_cli(capsys, "run", "--config", cfg, "--cache", str(blocker / "sub"))
    assert code == 0 and json.loads(out)["results"][0]["status"] == "ok"
    assert any("not writable" in r.getMessage() for r in caplog.records)
    assert "cache:" not in err


# -- verify ----------------------------------------------------------------------------

def test_verify_narrowed_window_all_pass(capsys):
    code, out, _ = run_cli(capsys, "verify", "--max-weight", "1")
    rep = json.loads(out)
    assert code == 0 and rep["verification"]["failed"] == 0
    suites = {e["suite"] for e in rep["verification"]["entries"]}
    assert {"simplicial", "crossed_maps", "hkr", "koszul", "symplectic", "d1", "e2_d2", "sbi"} <= suites


def test_verify_symplectic_subcommand(capsys):
    code, out, _ = run_cli(capsys, "verify", "symplectic", "--max-weight", "3")
    rep = json.loads(out)
    assert code == 0 and {e["suite"] for e in rep["verification"]["entries"]} == {"symplectic"}


def test_fault_injection_is_reported_with_witness(capsys):
    code, out, err = run_cli(capsys, "verify", "koszul", "--inject-fault")
    rep = json.loads(out)
    bad = [e for e in rep["verification"]["entries"] if not e["pass"]]
    assert code == 1 and bad
    e = bad[0]
    assert e["check"] == "b_squared" and "corrupted" in e["model"]
    assert {"k", "w"} <= set(e["coords"]) and e["witness"]["difference"]
    assert err.count("FAIL ") == len(bad)


def test_unknown_suite_is_a_config_error(capsys):
    code, _, err = run_cli(capsys, "verify", "nonsense")
    assert code == 3 and "unknown suite" in err


def test_timing_is_opt_in(tmp_path, capsys):
    cfg = write(tmp_path, "c.json", POLY)
    rep = json.loads(run_cli(capsys, "run", "--config", cfg, "--timing")[1])
    assert rep["timing"]["total_seconds"] >= 0 and len(rep["timing"]["cells"]) == 12
