import json

from seageo.cli import main


def run_chain(tmp_path, scenario="noiseless-straight", extra_track_flags=()):
    d = tmp_path / "data"
    assert main(["synth", "--scenario", scenario, "--out", str(d)]) == 0
    assert (
        main(
            [
                "calibrate",
                "--quadruplets",
                str(d / "quadruplets.jsonl"),
                "--camera-track",
                str(d / "camera_track.jsonl"),
                "--out",
                str(d / "calibration.json"),
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "track",
                "--detections",
                str(d / "detections.jsonl"),
                "--camera-track",
                str(d / "camera_track.jsonl"),
                "--calibration",
                str(d / "calibration.json"),
                "--out",
                str(d / "trajectory.jsonl"),
                *extra_track_flags,
            ]
        )
        == 0
    )
    assert (
        main(
            [
                "eval",
                "--trajectory",
                str(d / "trajectory.jsonl"),
                "--truth",
                str(d / "truth.jsonl"),
                "--report",
                str(d / "report.json"),
            ]
        )
        == 0
    )
    return d


def test_full_chain_noiseless(tmp_path, capsys):
    d = run_chain(tmp_path)
    report = json.loads((d / "report.json").read_text())
    assert report["smoothed"]["rmse_m"] < 0.05
    out = capsys.readouterr().out
    assert "condition estimate" in out
    assert "rmse" in out


def test_track_missing_calibration(tmp_path, capsys):
    d = tmp_path / "data"
    assert main(["synth", "--scenario", "noiseless-straight", "--out", str(d)]) == 0
    rc = main(
        [
            "track",
            "--detections",
            str(d / "detections.jsonl"),
            "--camera-track",
            str(d / "camera_track.jsonl"),
            "--calibration",
            str(d / "nope.json"),
            "--out",
            str(d / "trajectory.jsonl"),
        ]
    )
    assert rc != 0
    assert "error" in capsys.readouterr().err


def test_eval_rerun_identical(tmp_path):
    d = run_chain(tmp_path)
    first = (d / "report.json").read_bytes()
    assert (
        main(
            [
                "eval",
                "--trajectory",
                str(d / "trajectory.jsonl"),
                "--truth",
                str(d / "truth.jsonl"),
                "--report",
                str(d / "report.json"),
            ]
        )
        == 0
    )
    assert (d / "report.json").read_bytes() == first


def test_synth_list(capsys):
    assert main(["synth", "--list"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) >= 5
    assert "noiseless-straight" in out


def test_synth_requires_scenario(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "x")]) == 2


def test_flag_overrides_change_output(tmp_path):
    d1 = run_chain(tmp_path / "a")
    d2 = run_chain(tmp_path / "b", extra_track_flags=["--r-pos", "100.0"])
    t1 = (d1 / "trajectory.jsonl").read_bytes()
    t2 = (d2 / "trajectory.jsonl").read_bytes()
    assert t1 != t2


def test_config_file_drives_synth_and_track(tmp_path):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text(
        "[tracker]\nsigma = 12.0\n[ukf]\nr_pos = 2.0\n[synth]\nscenario = occlusion-gap\nseed = 11\n"
    )
    d = tmp_path / "data"
    assert main(["synth", "--config", str(cfg), "--out", str(d)]) == 0
    assert (d / "detections.jsonl").exists()


def test_malformed_detections_named_line(tmp_path, capsys):
    d = tmp_path / "data"
    assert main(["synth", "--scenario", "noiseless-straight", "--out", str(d)]) == 0
    bad = d / "bad.jsonl"
    bad.write_text('{"frame":0,"t":0.0,"bbox":[0,0,1,1],"score":2.0}\n')
    rc = main(
        [
            "track",
            "--detections",
            str(bad),
            "--camera-track",
            str(d / "camera_track.jsonl"),
            "--calibration",
            str(d / "true_calibration.json"),
            "--out",
            str(d / "t.jsonl"),
        ]
    )
    assert rc == 1
    err = capsys.readouterr().err
    assert "bad.jsonl:1" in err


def test_eval_plot_data_export(tmp_path):
    d = run_chain(tmp_path)
    assert (
        main(
            [
                "eval",
                "--trajectory",
                str(d / "trajectory.jsonl"),
                "--truth",
                str(d / "truth.jsonl"),
                "--plot-data",
                str(d / "plot.json"),
            ]
        )
        == 0
    )
    doc = json.loads((d / "plot.json").read_text())
    assert set(doc) == {"truth", "raw", "smoothed"}
    assert len(doc["raw"]) == len(doc["smoothed"]) > 0


def test_track_with_init_flags(tmp_path):
    d = tmp_path / "data"
    assert main(["synth", "--scenario", "crossing-distractor", "--out", str(d)]) == 0
    assert (
        main(
            [
                "calibrate",
                "--quadruplets",
                str(d / "quadruplets.jsonl"),
                "--camera-track",
                str(d / "camera_track.jsonl"),
                "--out",
                str(d / "calibration.json"),
            ]
        )
        == 0
    )
    rc = main(
        [
            "track",
            "--detections",
            str(d / "detections.jsonl"),
            "--camera-track",
            str(d / "camera_track.jsonl"),
            "--calibration",
            str(d / "calibration.json"),
            "--out",
            str(d / "trajectory.jsonl"),
            "--init-frame",
            "0",
            "--init-index",
            "0",
        ]
    )
    assert rc == 0
    rc = main(
        [
            "track",
            "--detections",
            str(d / "detections.jsonl"),
            "--camera-track",
            str(d / "camera_track.jsonl"),
            "--calibration",
            str(d / "calibration.json"),
            "--out",
            str(d / "trajectory.jsonl"),
            "--init-frame",
            "0",
            "--init-index",
            "99",
        ]
    )
    assert rc == 1
