import csv
import dataclasses
import datetime as dt
import io
import json

import numpy as np
import pytest

from symptrends.errors import RangeMismatch
from symptrends.ingest import SymptomEntry, SymptomManifest, parse_cases_csv, parse_trends_csv
from symptrends.report import (
    TABLE_COLUMNS,
    RenderTarget,
    fmt_p,
    fmt_r,
    render_case_summary,
    render_correlation,
    render_lag_scan,
    render_plot_data,
    render_rolling,
    render_table,
    write_plot_panels,
)
from symptrends.series import AlignedPair, DailySeries
from symptrends.stats import correlate, lag_scan, rolling_correlation
from symptrends.surveillance import StudyConfig, SymptomSignal, run_study, summarize_cases
from symptrends.synth import TABLE_ORDER_TARGETS, generate_study_fixture

D0 = dt.date(2020, 3, 2)


@pytest.fixture(scope="module")
def table_report():
    fx = generate_study_fixture(TABLE_ORDER_TARGETS, seed=2020)
    trends = {s.label: s for data in fx.trend_files.values() for s in parse_trends_csv(data)}
    return run_study(fx.manifest, trends, parse_cases_csv(fx.case_file), StudyConfig())


@pytest.fixture
def one_row_report():
    n = 30
    cases = DailySeries(D0, np.arange(n) % 11 + 1.0, "cases")
    sig = DailySeries(D0, (np.arange(n) * 7) % 13 + 1.0, "q")
    manifest = SymptomManifest((SymptomEntry("x", "X | y", "en", ("q",)),))
    return run_study(manifest, {"q": sig}, cases, StudyConfig(start=D0, end=D0 + dt.timedelta(days=n - 1)))


def test_number_formats():
    assert fmt_r(0.70512) == "0.705"
    assert fmt_r(-0.1) == "-0.100"
    assert fmt_p(1.3456e-16) == "1.35e-16"
    assert fmt_p(0.008) == "8.00e-03"


def test_csv_one_row(one_row_report):
    text = render_table(one_row_report, "csv").decode()
    lines = text.split("\n")
    assert lines[-1] == ""
    assert len(lines) - 1 == 3
    assert lines[0] == ",".join(TABLE_COLUMNS)
    assert "\r" not in text


def test_render_is_deterministic(table_report):
    for fmt in ("csv", "json", "markdown"):
        assert render_table(table_report, fmt) == render_table(table_report, fmt)


def test_csv_and_json_carry_same_numbers(table_report):
    rows = list(csv.DictReader(io.StringIO(render_table(table_report, "csv").decode())))
    doc = json.loads(render_table(table_report, "json"))
    assert len(rows) == len(doc["rows"]) == 11
    for c, j in zip(rows, doc["rows"]):
        for col in ("daily_r", "daily_p", "weekly_r", "weekly_p", "total_rsv"):
            assert float(c[col]) == j[col]
        assert c["symptom"] == j["symptom"]
        assert j["raw"]["daily"]["rho"] == pytest.approx(j["daily_r"], abs=5e-4)
    assert doc["n_daily"] == 244 and doc["n_weekly"] == 34
    assert doc["config"]["start"] == "2020-03-02"


def test_markdown_table_ordering(table_report):
    text = render_table(table_report, "markdown").decode()
    body = [line for line in text.splitlines() if line.startswith("| ") and "---" not in line][1:]
    names = [line.split(" | ")[0][2:] for line in body]
    assert names[-1] == "All Symptoms"
    daily_r = [float(line.split(" | ")[1]) for line in body[:-1]]
    assert names[int(np.argmax(daily_r))] == "Loss of Smell"


def test_markdown_escapes_pipes(one_row_report):
    assert "X \\| y" in render_table(one_row_report, "markdown").decode()


def test_error_rows_render(one_row_report):
    flat = DailySeries(D0, np.ones(30), "cases")
    rep = run_study(
        SymptomManifest((SymptomEntry("x", "X", "en", ("q",)),)),
        {"q": one_row_report.signals["x"].daily}, flat,
        one_row_report.config,
    )
    rows = list(csv.DictReader(io.StringIO(render_table(rep, "csv").decode())))
    assert rows[0]["daily_r"] == "" and rows[0]["class_daily"] == "error:ZeroVariance"
    doc = json.loads(render_table(rep, "json"))
    assert doc["rows"][0]["daily_r"] is None
    assert doc["rows"][0]["errors"] == {"daily": "ZeroVariance", "weekly": "ZeroVariance"}


def test_lag_columns_when_scanning(one_row_report):
    rep = run_study(
        SymptomManifest((SymptomEntry("x", "X", "en", ("q",)),)),
        {"q": one_row_report.signals["x"].daily}, one_row_report.cases,
        dataclasses.replace(one_row_report.config, max_lag=3),
    )
    header = render_table(rep, "csv").decode().splitlines()[0]
    assert header.endswith("best_lag,best_lag_r")


def test_render_to_file(one_row_report, tmp_path):
    out = tmp_path / "t.json"
    data = render_table(one_row_report, RenderTarget("json", out))
    assert out.read_bytes() == data
    with pytest.raises(ValueError):
        RenderTarget("xml")


def test_plot_data_rows():
    sig = SymptomSignal("fever", DailySeries(D0, [1, 2, 3.5], "fever"), 6.5)
    cases = DailySeries(D0, [10, 20, 30], "cases")
    lines = render_plot_data(sig, cases).decode().splitlines()
    assert lines[0] == "date,series_label,value"
    assert len(lines) - 1 == 6
    assert lines[3] == "2020-03-04,fever,3.5"
    assert lines[4] == "2020-03-02,cases,10"
    assert len(json.loads(render_plot_data(sig, cases, "json"))) == 6


def test_plot_data_misaligned():
    sig = SymptomSignal("fever", DailySeries(D0, [1, 2, 3], "fever"), 6)
    with pytest.raises(RangeMismatch):
        render_plot_data(sig, DailySeries(D0 + dt.timedelta(days=1), [1, 2, 3]))


def test_plot_panels_one_per_row(table_report, tmp_path):
    paths = write_plot_panels(table_report, tmp_path)
    assert len(paths) == 11
    assert paths[-1].name == "all_symptoms.csv"
    assert len(paths[0].read_text().splitlines()) == 1 + 2 * 244


def test_diagnostic_renders():
    pr = AlignedPair(np.arange(20.0), np.arange(20.0) % 7, D0)
    res = correlate(pr)
    assert render_correlation(res, "csv").decode().splitlines()[0] == "x,y,rho,p_value,n,method,lag_days,status"
    assert json.loads(render_correlation(res, "json"))[0]["n"] == 20
    scan = lag_scan(pr.x_series(), pr.y_series(), 2)
    assert json.loads(render_lag_scan(scan, "json"))["best_lag"] == scan.best_lag
    x = np.arange(20.0)
    x[0:10] = 1
    windows = rolling_correlation(AlignedPair(x, np.arange(20.0), D0), window=10, step=5)
    rows = render_rolling(windows, "csv").decode().splitlines()
    assert rows[1].endswith("gap:ZeroVariance")
    summary = summarize_cases(DailySeries(dt.date(2020, 3, 30), [1, 5, 3]))
    assert json.loads(render_case_summary(summary, "json"))["peak_date"] == "2020-03-31"
    assert "month,2020-04,3" in render_case_summary(summary, "csv").decode()
