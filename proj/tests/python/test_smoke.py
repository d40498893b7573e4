import numpy as np
import pytest

import driftkill as dk


def test_equatorial_degree():
    assert dk.vincenty_inverse(0.0, 0.0, 0.0, 1.0) == pytest.approx(111319.491, abs=1e-3)


def test_metrics_and_error_kind():
    e = np.array([1.0, -1.0] * 5)
    assert dk.crse(e) == 10.0
    assert dk.cae(e) == 0.0
    assert dk.aeps(e) == 1.0
    s = dk.summarize(np.array([1.0, 2.0, 3.0]))
    assert (s["min"], s["max"], s["mean"]) == (1.0, 3.0, 2.0)
    with pytest.raises(dk.DriftkillError) as info:
        dk.crse(np.zeros(3))
    assert info.value.kind == "WrongLength"


def test_clean_straight_dead_reckons_to_200m(tmp_path):
    records = dk.gen_records(dk.ScenarioSpec("straight", duration=10.0, v0=20.0))
    assert records.shape == (100, 6)
    track = dk.dead_reckon(0.0, 20.0, 0.0, records[:, 1], records[:, 2])
    assert track[-1, 1] == pytest.approx(200.0, abs=1e-9)
    assert track[-1, 2] == pytest.approx(0.0, abs=1e-9)

    path = tmp_path / "drive.csv"
    dk.write_records(str(path), records)
    assert np.array_equal(dk.load_records(str(path)), records)


def test_small_pipeline_round_trips():
    train = dk.build_windows(dk.random_drives("jerk", 3, 60.0, seed=1))
    test = dk.build_windows(dk.random_drives("jerk", 1, 40.0, seed=2))
    seqs = dk.extract_outage_sequences(test, stride=10, history=4, tag="jerk")
    assert len(seqs) > 0

    cfg = dk.TrainConfig()
    cfg.epochs, cfg.time_steps, cfg.batch_size, cfg.dropout = 3, 4, 32, 0.0
    disp = dk.train_displacement(train, cfg)
    cfg.time_steps = 2
    orient = dk.train_orientation(train, cfg)
    assert len(disp.loss_history) == 3

    again = dk.DisplacementEstimator.from_json(disp.to_json())
    assert again.predict(seqs[0]) == disp.predict(seqs[0])

    report = dk.evaluate(disp, orient, seqs, "jerk")
    assert report.sequences == len(seqs)
    assert report.ins_displacement["crse"]["mean"] > 0.0
    assert "CRSE" in report.to_text()
