import csv
import json

import numpy as np
import pytest

from hawkthresh.cli import main, worker_count
from hawkthresh.corpus import CORPUS, load_corpus
from hawkthresh.imagery import GrayImage, save_image
from hawkthresh.report import strip_timing


@pytest.fixture
def images(tmp_path):
    d = tmp_path / "in"
    d.mkdir()
    corpus = load_corpus()
    for name in ("phantom", "disks"):
        save_image(corpus[name], d / f"{name}.png")
    return d


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_outputs(images, tmp_path, monkeypatch):
    monkeypatch.setenv("HAWKTHRESH_THREADS", "1")
    out = tmp_path / "out"
    rc = main(["-q", "run", str(images), "--thresholds", "2,3", "--iters", "60", "--seed", "5", "--out", str(out)])
    assert rc == 0
    rows = _read_csv(out / "metrics.csv")
    assert rows[0] == ["image", "n_thresholds", "psnr", "ssim", "fsim", "uiqi", "qilv", "hpsi", "time_s"]
    assert [r[:2] for r in rows[1:]] == [["disks.png", "2"], ["disks.png", "3"], ["phantom.png", "2"], ["phantom.png", "3"]]
    rep = json.loads((out / "phantom_N3.json").read_text())
    for key in ("seed", "params", "thresholds", "history", "metrics", "index_convention", "objective_convention"):
        assert key in rep
    assert rep["seed"] == 5 and rep["params"]["chaos"] == "logistic"
    assert rep["params"]["weights"] == {"alpha": 0.35, "beta": 0.65}
    for suffix in ("_segmented.png", "_hist.png", "_convergence.png", "_thresholds.json"):
        assert (out / f"phantom_N3{suffix}").exists()
    hist_rows = _read_csv(out / "phantom_hist.csv")
    assert len(hist_rows) == 257


def test_run_is_reproducible(images, tmp_path):
    reports = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        main(["-q", "run", str(images / "disks.png"), "--thresholds", "3", "--iters", "50",
              "--seed", "11", "--no-figures", "--out", str(out)])
        reports.append(strip_timing(json.loads((out / "disks_N3.json").read_text())))
    assert reports[0] == reports[1]


def test_constant_image(tmp_path):
    src = tmp_path / "flat.pgm"
    save_image(GrayImage(np.full((32, 32), 77, dtype=np.uint8)), src)
    out = tmp_path / "out"
    assert main(["-q", "run", str(src), "--thresholds", "2", "--iters", "20", "--seed", "1", "--out", str(out)]) == 0
    rep = json.loads((out / "flat_N2.json").read_text())
    assert rep["metrics"]["psnr"] is None and rep["metrics"]["psnr_infinite"]
    assert rep["metrics"]["ssim"] == pytest.approx(1.0)
    assert _read_csv(out / "metrics.csv")[1][2] == "inf"


def test_bad_image_gives_nonzero_exit(images, tmp_path):
    (images / "broken.png").write_bytes(b"junk")
    out = tmp_path / "out"
    rc = main(["-q", "run", str(images), "--thresholds", "2", "--iters", "20", "--seed", "1",
               "--no-figures", "--out", str(out)])
    assert rc == 1
    assert len(_read_csv(out / "metrics.csv")) == 3


def test_metrics_command(images, capsys):
    p = str(images / "phantom.png")
    assert main(["metrics", p, p]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["psnr"] is None and data["ssim"] == pytest.approx(1.0)


def test_hist_command_sidecar(images, tmp_path):
    out = tmp_path / "h"
    assert main(["-q", "hist", str(images / "phantom.png"), "--th", "64,128,192", "--out", str(out)]) == 0
    side = json.loads((out / "phantom_given_thresholds.json").read_text())
    assert side["thresholds_levels"] == [64, 128, 192]
    assert (out / "phantom_given_hist.png").exists()


def test_hist_of_constant_image(tmp_path):
    src = tmp_path / "c.png"
    save_image(GrayImage(np.full((8, 8), 9, dtype=np.uint8)), src)
    out = tmp_path / "h"
    assert main(["-q", "hist", str(src), "--th", "100", "--no-figures", "--out", str(out)]) == 0
    rows = _read_csv(out / "c_hist.csv")[1:]
    assert [r for r in rows if r[2] != "0"] == [["10", "9", "64"]]


def test_oracle_command(images, tmp_path):
    out = tmp_path / "o"
    rc = main(["-q", "oracle", str(images / "disks.png"), "--thresholds", "2", "--iters", "100",
               "--seed", "3", "--objective", "ce", "--out", str(out)])
    assert rc == 0
    data = json.loads((out / "disks_N2_oracle.json").read_text())
    assert data["hho"]["gap"] >= 0
    rc = main(["-q", "oracle", str(images / "disks.png"), "--thresholds", "2", "--max-combos", "10",
               "--out", str(out)])
    assert rc == 1


def test_bad_flags():
    with pytest.raises(SystemExit):
        main(["run", "x.png", "--thresholds", "a,b"])
    with pytest.raises(SystemExit):
        main(["run", "x.png", "--chaos", "lorenz"])
    with pytest.raises(SystemExit):
        main(["run", "x.png", "--seed", "-3"])


def test_worker_count(monkeypatch):
    monkeypatch.setenv("HAWKTHRESH_THREADS", "3")
    assert worker_count(10) == 3
    assert worker_count(2) == 2
    monkeypatch.setenv("HAWKTHRESH_THREADS", "junk")
    assert worker_count(1) == 1


def test_corpus_is_deterministic_and_multimodal():
    a, b = load_corpus(), load_corpus()
    assert len(a) == len(CORPUS) >= 8
    for name in a:
        assert a[name].same_as(b[name])
        assert a[name].pixels.shape == (128, 128)
