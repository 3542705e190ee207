import csv

import pytest

from bugworld.datasets import ScheduleEntry, generate
from bugworld.report import build_report

CFG = {"resolution": 32}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("report_ds")
    generate("StaticRoom-v0", out, steps=15, seed=3, config=CFG,
             schedule=[ScheduleEntry(5, "black_screen")])
    return out


def test_report_artifacts_exist(dataset):
    result = build_report(dataset)
    csv_path = dataset / "report.csv"
    assert csv_path.is_file()
    assert result["csv"] == str(csv_path)
    for fig in result["figures"]:
        p = dataset / fig if not str(fig).startswith("/") else fig
        assert (dataset / str(fig).split("/")[-1]).stat().st_size > 0
    names = {str(f).split("/")[-1] for f in result["figures"]}
    assert names == {"bug_fraction.png", "trajectory.png", "bug_totals.png"}


def test_csv_row_per_step(dataset):
    build_report(dataset)
    with open(dataset / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 15
    assert set(rows[0]) >= {"step", "action", "bug_pixel_fraction",
                            "active_bugs", "labelled_bugs",
                            "pos_x", "pos_y", "pos_z"}
    assert [int(r["step"]) for r in rows] == list(range(15))


def test_bug_fraction_reflects_schedule(dataset):
    build_report(dataset)
    with open(dataset / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    before = [float(r["bug_pixel_fraction"]) for r in rows[:5]]
    after = [float(r["bug_pixel_fraction"]) for r in rows[5:]]
    assert all(f == 0.0 for f in before)
    # the target is only labelled while it is in view
    assert any(f > 0.0 for f in after)
    for r in rows[5:]:
        if float(r["bug_pixel_fraction"]) > 0.0:
            assert "black_screen" in r["labelled_bugs"]


def test_out_dir_override(dataset, tmp_path):
    result = build_report(dataset, out_dir=tmp_path)
    assert (tmp_path / "report.csv").is_file()
    assert (tmp_path / "bug_fraction.png").stat().st_size > 0
    assert result["steps"] == 15
