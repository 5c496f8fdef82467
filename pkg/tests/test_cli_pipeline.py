import csv
import hashlib
import json

import pytest

from freqprompt import cli, synthetic, tensor
from freqprompt.config import PipelineConfig, build_config
from freqprompt.errors import ConfigError
from freqprompt.pipeline import run_pipeline, worker_count


# --- configuration ------------------------------------------------------------------------

def test_no_args_gives_defaults():
    assert cli.parse_config([]) == PipelineConfig()


def test_flag_overrides_one_value():
    cfg = cli.parse_config(["--tau", "0.7"])
    assert cfg.tau == 0.7
    assert cfg.to_dict() | {"tau": 0.5} == PipelineConfig().to_dict()


@pytest.mark.parametrize("args,key", [
    (["--tau", "1.5"], "tau"), (["--gate", "-0.1"], "gate"), (["--top-k", "0"], "top_k"),
    (["--points-per-window", "0"], "points_per_window"), (["--lambda", "-1"], "lambda"),
    (["--stride", "0"], "stride"),
])
def test_range_errors_name_the_key(args, key):
    with pytest.raises(ConfigError) as e:
        cli.parse_config(args)
    assert e.value.key == key


def test_file_then_flags(tmp_path):
    f = tmp_path / "c.json"
    f.write_text(json.dumps({"tau": 0.6, "top_k": 3, "lambda": 2.0}))
    cfg = cli.parse_config(["--config", str(f), "--top-k", "4"])
    assert (cfg.tau, cfg.top_k, cfg.lam) == (0.6, 4, 2.0)
    f.write_text(json.dumps({"window": 8}))
    with pytest.raises(ConfigError) as e:
        cli.parse_config(["--config", str(f)])
    assert e.value.key == "window"


def test_mismatched_path_lists():
    with pytest.raises(ConfigError):
        build_config(overrides={"images": ["a", "b"], "gt": ["a"]})


def test_worker_count(monkeypatch):
    monkeypatch.setenv("HFP_THREADS", "3")
    assert worker_count(10) == 3 and worker_count(2) == 2
    monkeypatch.setenv("HFP_THREADS", "0")
    assert worker_count(100) >= 1


# --- pipeline --------------------------------------------------------------------------------

@pytest.fixture
def inputs(tmp_path):
    paths = {"images": [], "coarse": [], "gt": []}
    for i in range(2):
        img, gt = synthetic.synthetic_scene(i, 64)
        coarse = synthetic.corrupted_coarse_mask(gt, i)
        for key, arr in (("images", img), ("coarse", coarse), ("gt", gt.astype(float))):
            p = tmp_path / f"{key}{i}.pgm"
            tensor.save_image(p, arr)
            paths[key].append(str(p))
    return paths


def _run(tmp_path, name, **kw):
    cfg = build_config(overrides={"out": str(tmp_path / name), "window_size": 8, **kw})
    return run_pipeline(cfg)


def test_empty_input_list(tmp_path):
    manifest, code = _run(tmp_path, "empty")
    assert code == 0 and manifest["images"] == [] and manifest["n_images"] == 0
    assert (tmp_path / "empty" / "manifest.json").exists()


def test_manifest_lists_every_file_with_hash(tmp_path, inputs):
    manifest, code = _run(tmp_path, "out", noise="speckle", demo=True, **inputs)
    assert code == 0
    out = tmp_path / "out"
    listed = {a["path"]: a["sha256"] for e in manifest["images"] for a in e["artifacts"]}
    listed.update({a["path"]: a["sha256"] for a in manifest["batch_artifacts"]})
    on_disk = {p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file()}
    assert on_disk - {"manifest.json"} == set(listed)
    for rel, digest in listed.items():
        assert hashlib.sha256((out / rel).read_bytes()).hexdigest() == digest
    assert manifest["config"]["lambda"] == 1.0 and manifest["config"]["gate"] == 0.8


def test_metrics_csv_schema(tmp_path, inputs):
    _run(tmp_path, "out", **inputs)
    rows = list(csv.reader((tmp_path / "out" / "metrics.csv").open()))
    assert rows[0] == ["image", "miou", "s_alpha", "f_beta_w", "m_e_phi", "mae"]
    assert [r[0] for r in rows[1:]] == ["000_images0", "001_images1", "mean"]


def test_crash_isolation(tmp_path, inputs):
    bad = tmp_path / "broken.pgm"
    bad.write_bytes(b"P5\n4 4\n255\n\x00")
    manifest, code = _run(tmp_path, "out", images=[str(bad)] + inputs["images"])
    assert code == 1
    statuses = [e["status"] for e in manifest["images"]]
    assert statuses == ["error", "ok", "ok"]
    assert "DecodeError" in manifest["images"][0]["error"]


def test_threads_do_not_change_output(tmp_path, inputs, monkeypatch):
    monkeypatch.setenv("HFP_THREADS", "1")
    _run(tmp_path, "a", **inputs)
    one = (tmp_path / "a" / "manifest.json").read_text()
    monkeypatch.setenv("HFP_THREADS", "4")
    _run(tmp_path, "a", **inputs)
    assert (tmp_path / "a" / "manifest.json").read_text() == one


def test_auto_window(tmp_path, inputs):
    manifest, _ = _run(tmp_path, "out", auto_window=True, images=inputs["images"])
    assert manifest["images"][0]["window_size"] == 4


# --- command line ----------------------------------------------------------------------------

def test_cli_exit_codes(tmp_path, inputs, capsys):
    assert cli.main(["pipeline", "--tau", "1.5"]) == 2
    assert "tau" in capsys.readouterr().err
    assert cli.main(["pipeline", "--no-such-flag"]) == 2
    assert cli.main(["dhwt", "--image", str(tmp_path / "missing.pgm")]) == 1
    out = tmp_path / "cli"
    code = cli.main(["pipeline", "--image", *inputs["images"], "--coarse", *inputs["coarse"],
                     "--gt", *inputs["gt"], "--window-size", "8", "--out", str(out)])
    assert code == 0 and (out / "manifest.json").exists()


def test_cli_subcommands(tmp_path, inputs, capsys):
    img, coarse, gt = inputs["images"][0], inputs["coarse"][0], inputs["gt"][0]
    assert cli.main(["dhwt", "--image", img, "--out", str(tmp_path / "b.hfpt")]) == 0
    assert tensor.load_tensor(tmp_path / "b.hfpt").shape == (32, 32, 4)
    assert json.loads(capsys.readouterr().out)["reconstruction_max_abs_error"] < 1e-12

    assert cli.main(["freqmap", "--image", img, "--out", str(tmp_path / "m.hfpt")]) == 0
    assert tensor.load_image(tmp_path / "m.hfpt").shape == (32, 32)
    capsys.readouterr()

    assert cli.main(["fps", "--image", img, "--coarse", coarse, "--window-size", "8",
                     "--out", str(tmp_path / "p.json")]) == 0
    doc = json.loads((tmp_path / "p.json").read_text())
    assert len(doc["windows"]) == 10 and len(doc["points"]) == 20

    assert cli.main(["metrics", "--coarse", coarse, "--gt", gt]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "image,miou,s_alpha,f_beta_w,m_e_phi,mae"

    assert cli.main(["noise", "--image", img, "--out", str(tmp_path / "n.pgm"), "--sigma", "0.1"]) == 0
    capsys.readouterr()
    assert cli.main(["error-analysis", "--image", img, "--coarse", coarse, "--gt", gt,
                     "--window-size", "8", "--gate", "0.8"]) == 0
    assert "grid_error_rate" in json.loads(capsys.readouterr().out)
    assert cli.main(["fga-demo", "--image", img, "--window-size", "8"]) == 0
    assert cli.main(["fvm-demo", "--shape", "4", "4", "4"]) == 0
    capsys.readouterr()


def test_cli_grad_check_exit_status(tmp_path):
    assert cli.main(["grad-check", "--seed", "0", "--out", str(tmp_path / "g.json")]) == 0
    assert json.loads((tmp_path / "g.json").read_text())["passed"] is True
    assert cli.main(["grad-check", "--seed", "0", "--tolerance", "1e-15"]) == 1
