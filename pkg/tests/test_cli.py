import json

import numpy as np
import pytest

from boundmap.cli import main
from boundmap.formats import read_map, write_map


@pytest.fixture
def one_box_csv(tmp_path):
    p = tmp_path / "ann.csv"
    p.write_text("image_id,width,height,x1,y1,x2,y2\nslice1,8,8,0,0,4,4\n")
    return p


@pytest.fixture
def froc_inputs(tmp_path):
    ann = tmp_path / "gt.json"
    ann.write_text(json.dumps([
        {"image_id": "img1", "width": 64, "height": 64, "boxes": [[10, 10, 30, 30]]},
        {"image_id": "img2", "width": 64, "height": 64, "boxes": [[10, 10, 30, 30]]},
    ]))
    dets = tmp_path / "dets.json"
    dets.write_text(json.dumps([
        {"image_id": "img1", "box": [10, 10, 30, 30], "score": 0.9},
        {"image_id": "img1", "box": [40, 40, 60, 60], "score": 0.8},
        {"image_id": "img2", "box": [40, 40, 60, 60], "score": 0.95},
        {"image_id": "img2", "box": [10, 10, 30, 30], "score": 0.7},
    ]))
    return dets, ann


def test_gen_bm_corner(tmp_path, one_box_csv):
    out = tmp_path / "bm"
    assert main(["gen-bm", str(one_box_csv), "--out", str(out), "--pgm"]) == 0
    bm = read_map(out / "slice1.bm.f32")
    assert bm.shape == (8, 8)
    assert bm[0, 0] == pytest.approx(0.5, abs=1e-6)
    assert (out / "slice1.bm.pgm").exists()
    run = json.loads((out / "run.json").read_text())
    assert run["command"] == "gen-bm" and run["config"]["boundary"] == 0.25


def test_gen_abm_small_box_flat(tmp_path, one_box_csv):
    out = tmp_path / "abm"
    assert main(["gen-abm", str(one_box_csv), "--out", str(out)]) == 0
    abm = read_map(out / "slice1.abm.f32")
    assert np.all(abm[:5, :5] == 1.0)  # area 16 < 250 -> alpha 0


def test_targets_outputs(tmp_path):
    ann = tmp_path / "ann.json"
    ann.write_text(json.dumps([{"image_id": "s", "width": 64, "height": 64,
                                "boxes": [[8, 8, 40, 40]]}]))
    out = tmp_path / "t"
    assert main(["targets", str(ann), "--out", str(out), "--stride", "8", "--seed", "5"]) == 0
    t = json.loads((out / "s.targets.json").read_text())
    assert len(t["sampled_background"]) == min(2 * len(t["foreground"]), len(t["background"]))
    assert t["positives"] and t["stride"] == 8
    assert read_map(out / "s.bm_r.f32").shape == (8, 8)


def test_stats_imbalance_coincident_anchor(tmp_path, capsys):
    ann = tmp_path / "ann.csv"
    ann.write_text("image_id,width,height,x1,y1,x2,y2\nim,64,64,8,8,40,40\n")
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"stride": 16, "anchor_sizes": [32]}))
    out = tmp_path / "stats"
    assert main(["stats-imbalance", str(ann), "--config", str(cfg), "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "image_id,box,iou_positives,loc_p"
    assert lines[1].split(",")[:3] == ["im", "0", "1"]
    hist = (out / "histogram.csv").read_text().splitlines()
    assert hist[0] == "positive_anchors,gt_boxes,images" and hist[2] == "1,1,1"


def test_froc_prints_table(tmp_path, capsys, froc_inputs):
    dets, ann = froc_inputs
    out = tmp_path / "f"
    assert main(["froc", str(dets), str(ann), "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "sensitivity@0.5 = 0.5000" in printed
    assert "sensitivity@1 = 1.0000" in printed
    assert (out / "froc.csv").read_text().splitlines()[1] == "0.5,0.500000"


def test_losses(tmp_path, capsys):
    write_map(tmp_path / "p.f32", np.full((2, 2), 0.5, np.float32))
    write_map(tmp_path / "t.f32", np.array([[0.5, 0.0], [0.0, 0.0]], np.float32))
    assert main(["losses", "--pred", str(tmp_path / "p.f32"), "--target",
                 str(tmp_path / "t.f32"), "--mode", "abm"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.75 * 0.25)
    # one foreground pixel plus two sampled background pixels, all at p=0.5
    assert main(["losses", "--pred", str(tmp_path / "p.f32"), "--target",
                 str(tmp_path / "t.f32"), "--mode", "objectness"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(3 * np.log(2), abs=1e-9)


def test_failure_exit_status_and_cleanup(tmp_path, capsys):
    ann = tmp_path / "ann.csv"
    ann.write_text("image_id,width,height,x1,y1,x2,y2\na,8,8,0,0,4,4\nb,8,8,5,0,4,4\n")
    out = tmp_path / "never"
    assert main(["gen-bm", str(ann), "--out", str(out)]) != 0
    err = capsys.readouterr().err.strip()
    assert err.startswith("error:") and "line 3" in err and "\n" not in err
    assert not out.exists()


def test_partial_outputs_removed_in_existing_dir(tmp_path, monkeypatch):
    ann = tmp_path / "ann.csv"
    ann.write_text("image_id,width,height,x1,y1,x2,y2\na,8,8,0,0,4,4\nb,8,8,1,1,5,5\n")
    out = tmp_path / "existing"
    out.mkdir()
    (out / "keep.txt").write_text("x")
    import boundmap.cli as cli

    calls = []
    real = cli.generate_map

    def flaky(*args, **kwargs):
        calls.append(1)
        if len(calls) == 2:
            raise cli.ValidationError("boom")
        return real(*args, **kwargs)

    monkeypatch.setattr(cli, "generate_map", flaky)
    assert main(["gen-bm", str(ann), "--out", str(out)]) == 1
    assert sorted(p.name for p in out.iterdir()) == ["keep.txt"]


def _snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_runs_are_byte_identical(tmp_path, froc_inputs):
    dets, ann = froc_inputs
    for cmd in (["gen-bm", str(ann)], ["targets", str(ann), "--seed", "9"],
                ["froc", str(dets), str(ann)]):
        a, b = tmp_path / f"{cmd[0]}-a", tmp_path / f"{cmd[0]}-b"
        assert main(cmd + ["--out", str(a)]) == 0
        assert main(cmd + ["--out", str(b)]) == 0
        assert _snapshot(a) == _snapshot(b)
