import json

from patternmine.filtering import ScoreRecord
from patternmine.report import load_json, render_report

MANIFEST = {
    "per_class_counts": {"negative": 3, "positive": 5},
    "per_verbalizer_counts": {
        "positive": {"good": 4, "great": 1},
        "negative": {"bad": 3},
    },
}

FILTER_REPORT = {
    "n_examples": 8,
    "n_mismatches": 3,
    "n_removed": 1,
    "removal_fraction": 0.5,
    "agreement_pct": 62.5,
    "confidence_threshold_used": 0.9,
}


def test_counts_csv_content(tmp_path):
    written = render_report(tmp_path, manifest=MANIFEST)
    assert written == [str(tmp_path / "counts.csv"), str(tmp_path / "class_balance.png")]
    # bytes, not read_text: universal newlines would hide the terminator
    assert (tmp_path / "counts.csv").read_bytes() == (
        b"label,verbalizer,count\r\n"
        b"negative,bad,3\r\n"
        b"positive,good,4\r\n"
        b"positive,great,1\r\n"
    )


def test_filter_csv_content(tmp_path):
    render_report(tmp_path, filter_report=FILTER_REPORT)
    lines = (tmp_path / "filter.csv").read_text().splitlines()
    assert lines[0] == "metric,value"
    assert "n_removed,1" in lines
    assert "agreement_pct,62.5" in lines
    assert len(lines) == 1 + len(FILTER_REPORT)


def test_full_report_writes_every_artifact(tmp_path):
    scores = [
        ScoreRecord(example_ref=(0, i, 0), predicted_label="a", confidence=i / 10)
        for i in range(11)
    ]
    written = render_report(
        tmp_path,
        manifest=MANIFEST,
        filter_report=FILTER_REPORT,
        scores=scores,
        loss_history=[0.7, 0.5, 0.4, 0.35],
    )
    names = [p.rsplit("/", 1)[-1] for p in written]
    assert names == ["counts.csv", "class_balance.png", "filter.csv",
                     "filter_outcome.png", "confidence.png", "loss_curve.png"]
    for path in written:
        if path.endswith(".png"):
            data = (tmp_path / path).read_bytes()
            assert data[:8] == b"\x89PNG\r\n\x1a\n"
            assert len(data) > 1000


def test_inputs_are_optional(tmp_path):
    assert render_report(tmp_path / "empty") == []
    written = render_report(tmp_path / "loss", loss_history=[1.0, 0.9])
    assert [p.rsplit("/", 1)[-1] for p in written] == ["loss_curve.png"]


def test_load_json(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(MANIFEST), encoding="utf-8")
    assert load_json(path) == MANIFEST
