import os

import numpy as np
import pytest

from mscb.container import MiscContainer, rate_report
from mscb.evalkit import (MetricsTable, NormalizedReport, bpp_table,
                          emit_report, load_report, load_table, mse, normalize,
                          psnr)
from mscb.pixel import PixelPayload
from mscb.semantic import SemanticPayload

DATA = os.path.join(os.path.dirname(__file__), "data")

# Published text-to-image quality survey rows (ClipIQA, DBCNN, LIQE, NIQE);
# NIQE is lower-better, the rest higher-better.
QUALITY_SURVEY = {
    "SDXL": (0.63, 0.64, 3.20, 4.27),
    "SD1.5": (0.66, 0.55, 3.21, 4.56),
    "SD1.4": (0.66, 0.57, 3.24, 4.37),
    "SDXL-Turbo": (0.59, 0.64, 3.97, 4.41),
    "Midjourney": (0.71, 0.62, 4.09, 5.05),
    "DALLE-2": (0.69, 0.48, 2.54, 5.10),
    "SSD": (0.66, 0.66, 3.79, 5.02),
    "Playground": (0.70, 0.68, 3.66, 4.92),
    "Dreamlike": (0.68, 0.61, 3.88, 4.62),
    "Pixart": (0.72, 0.62, 3.79, 4.47),
    "IF": (0.68, 0.54, 2.85, 5.00),
}
SURVEY_DIRECTIONS = ("higher", "higher", "higher", "lower")


def survey_table() -> MetricsTable:
    columns = ["clipiqa", "dbcnn", "liqe", "niqe"]
    return MetricsTable(rows=list(QUALITY_SURVEY),
                        columns=columns,
                        directions=dict(zip(columns, SURVEY_DIRECTIONS)),
                        values=np.array(list(QUALITY_SURVEY.values())))


def survey_oracle(target: str) -> float:
    """Brute-force recomputation, independent of the evalkit path."""
    names = list(QUALITY_SURVEY)
    total = 0.0
    for q, direction in enumerate(SURVEY_DIRECTIONS):
        col = [QUALITY_SURVEY[n][q] for n in names]
        lo, hi = min(col), max(col)
        normed = 2 * (QUALITY_SURVEY[target][q] - lo) / (hi - lo) - 1
        total += normed if direction == "higher" else -normed
    return total


def simple_table(values, direction="higher") -> MetricsTable:
    return MetricsTable(rows=[f"r{i}" for i in range(len(values))],
                        columns=["m"], directions={"m": direction},
                        values=np.array(values, dtype=float).reshape(-1, 1))


class TestNormalize:
    def test_three_point_fixture(self):
        report = normalize(simple_table([0.0, 5.0, 10.0]))
        assert np.array_equal(report.table.values[:, 0], [-1.0, 0.0, 1.0])
        assert np.array_equal(report.averages, [-1.0, 0.0, 1.0])

    def test_lower_better_flips_sign(self):
        report = normalize(simple_table([0.0, 5.0, 10.0], direction="lower"))
        assert np.array_equal(report.averages, [1.0, 0.0, -1.0])

    def test_degenerate_column_zeros(self):
        report = normalize(simple_table([4.2, 4.2, 4.2]))
        assert np.array_equal(report.table.values[:, 0], [0.0, 0.0, 0.0])
        assert np.array_equal(report.averages, [0.0, 0.0, 0.0])

    def test_values_bounded(self):
        rng = np.random.default_rng(0)
        table = MetricsTable(rows=[f"r{i}" for i in range(7)],
                             columns=["a", "b"],
                             directions={"a": "higher", "b": "lower"},
                             values=rng.normal(size=(7, 2)))
        report = normalize(table)
        assert np.all(report.table.values >= -1.0)
        assert np.all(report.table.values <= 1.0)

    def test_affine_invariance_exact(self):
        # power-of-two scale + small offset: all arithmetic is exact, so the
        # normalized values must be bit-identical
        values = np.array([0.25, 1.75, -0.5, 3.0, 0.0])
        base = normalize(simple_table(values))
        scaled = normalize(simple_table(4.0 * values + 1.0))
        assert np.array_equal(base.table.values, scaled.table.values)
        assert np.array_equal(base.averages, scaled.averages)

    def test_row_permutation_equivariance(self):
        rng = np.random.default_rng(1)
        values = rng.normal(size=(6, 3))
        columns = ["a", "b", "c"]
        directions = {"a": "higher", "b": "lower", "c": "higher"}
        rows = [f"r{i}" for i in range(6)]
        base = normalize(MetricsTable(rows=rows, columns=columns,
                                      directions=directions, values=values))
        perm = rng.permutation(6)
        permuted = normalize(MetricsTable(rows=[rows[i] for i in perm],
                                          columns=columns, directions=directions,
                                          values=values[perm]))
        assert np.array_equal(base.table.values[perm], permuted.table.values)
        assert np.array_equal(base.averages[perm], permuted.averages)

    def test_interior_row_leaves_others_unchanged(self):
        base = normalize(simple_table([0.0, 5.0, 10.0]))
        extended = normalize(simple_table([0.0, 5.0, 10.0, 7.5]))
        assert np.array_equal(extended.table.values[:3], base.table.values)

    def test_pixart_row_matches_brute_force(self):
        report = normalize(survey_table())
        got = report.averages[list(QUALITY_SURVEY).index("Pixart")]
        assert got == pytest.approx(survey_oracle("Pixart"), abs=1e-12)
        assert got == pytest.approx(2.53, abs=0.01)
        # documented divergence from the printed 2.75 (authors normalized
        # unrounded scores); asserting the gap keeps the divergence visible
        assert abs(got - 2.75) > 0.1

    def test_sdxl_row_same_divergence(self):
        report = normalize(survey_table())
        got = report.averages[list(QUALITY_SURVEY).index("SDXL")]
        assert got == pytest.approx(survey_oracle("SDXL"), abs=1e-12)
        assert got == pytest.approx(1.07, abs=0.01)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError):
            normalize(MetricsTable(rows=[], columns=["m"],
                                   directions={"m": "higher"},
                                   values=np.zeros((0, 1))))
        with pytest.raises(ValueError):
            normalize(simple_table([1.0, float("nan")]))


class TestBppTable:
    def _container(self, detail="scene text"):
        return MiscContainer(level=3, width=64, height=64,
                             semantic=SemanticPayload(detail_all=detail),
                             maps=(), pixel=PixelPayload(branch="empty"))

    def test_single_container_matches_rate_report(self):
        c = self._container()
        table = bpp_table([(c, "only")])
        assert table.rows == ["only"]
        assert table.values[0, 0] == rate_report(c).bpp
        assert all(table.directions[col] == "lower" for col in table.columns)

    def test_sections_sum_to_total(self):
        c = self._container()
        table = bpp_table([(c, "x")])
        assert table.values[0, 1:].sum() == pytest.approx(table.values[0, 0])

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            bpp_table([])


class TestSerialization:
    def _report(self):
        return normalize(survey_table())

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_table_roundtrip(self, fmt):
        table = survey_table()
        blob = emit_report(table, fmt)
        revived = load_table(blob, fmt)
        assert revived == table
        assert emit_report(revived, fmt) == blob

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_report_roundtrip(self, fmt):
        report = self._report()
        blob = emit_report(report, fmt)
        revived = load_report(blob, fmt)
        assert revived == report
        assert emit_report(revived, fmt) == blob

    def test_column_order_preserved(self):
        table = survey_table()
        revived = load_table(emit_report(table, "json"), "json")
        assert revived.columns == table.columns

    @pytest.mark.parametrize("name,fmt", [
        ("golden_table.csv", "csv"), ("golden_table.json", "json"),
        ("golden_report.csv", "csv"), ("golden_report.json", "json"),
    ])
    def test_golden_files(self, name, fmt):
        with open(os.path.join(DATA, name), "rb") as fh:
            golden = fh.read()
        table = MetricsTable(
            rows=["alpha", "beta", "gamma"],
            columns=["fidelity", "sharpness", "noise", "rate"],
            directions={"fidelity": "higher", "sharpness": "higher",
                        "noise": "lower", "rate": "lower"},
            values=np.array([[0.50, 3.25, 4.00, 0.0225],
                             [0.75, 3.00, 5.50, 0.0375],
                             [0.25, 3.50, 4.75, 0.0470]]))
        obj = normalize(table) if "report" in name else table
        assert emit_report(obj, fmt) == golden

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            emit_report(survey_table(), "xml")

    def test_type_mismatch_on_load(self):
        table_blob = emit_report(survey_table(), "json")
        with pytest.raises(ValueError):
            load_report(table_blob, "json")
        report_blob = emit_report(self._report(), "json")
        with pytest.raises(ValueError):
            load_table(report_blob, "json")

    def test_csv_quoting(self):
        table = MetricsTable(rows=['tricky, "label"'], columns=["m"],
                             directions={"m": "higher"}, values=np.array([[1.0]]))
        blob = emit_report(table, "csv")
        assert load_table(blob, "csv") == table


def test_mse_psnr_helpers():
    a = np.zeros((4, 4, 3), dtype=np.uint8)
    assert mse(a, a) == 0.0
    assert psnr(a, a) == 99.0
    b = np.full((4, 4, 3), 16, dtype=np.uint8)
    assert mse(a, b) == 256.0
    assert psnr(a, b) == pytest.approx(10 * np.log10(255**2 / 256.0))
