import json

import jsonschema
import numpy as np
import pytest

from ontodist.bodcheck import prop2_closed_form
from ontodist.expharness import (
    CSV_HEADER,
    SUMMARY_SCHEMA,
    CampaignConfig,
    CampaignRecord,
    read_csv,
    run_quadruplet_campaign,
    run_triplet_campaign,
    theta_sweep,
    write_csv,
    write_json,
)
from ontodist.quantcore import ValidationError


class TestConfig:
    def test_kind(self):
        with pytest.raises(ValidationError):
            CampaignConfig("pairs")

    def test_dim(self):
        with pytest.raises(ValidationError):
            CampaignConfig("triplet-pure", dim=6)

    def test_count(self):
        with pytest.raises(ValidationError):
            CampaignConfig("triplet-pure", count=0)


class TestTriplets:
    def test_single_record_reproducible(self):
        cfg = CampaignConfig("triplet-pure", 2, 1, seed=42, threads=1)
        a, b = run_triplet_campaign(cfg), run_triplet_campaign(cfg)
        assert len(a.records) == 1
        assert a.records == b.records

    def test_thread_independent(self):
        a = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 60, seed=3, threads=1))
        b = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 60, seed=3, threads=4))
        assert a.records == b.records
        assert a.violation_fraction == b.violation_fraction

    def test_ranges(self):
        res = run_triplet_campaign(CampaignConfig("triplet-mixed", 3, 100, seed=4, threads=1))
        for r in res.records:
            assert 1 / 3 - 1e-9 <= r.p <= 1 + 1e-9
            assert 0.5 - 1e-9 <= r.lhs <= 1 + 1e-9
            assert r.margin == pytest.approx(r.lhs - r.bound)

    def test_no_flags_on_pure_qubits(self):
        res = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 500, seed=5, threads=1))
        assert len(res.excluded) <= 0.001 * 500

    def test_seed_agreement(self):
        a = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 800, seed=6, threads=1))
        b = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 800, seed=7, threads=1))
        f = a.violation_fraction
        assert abs(a.violation_fraction - b.violation_fraction) <= 3 * np.sqrt(2 * f * (1 - f) / 800)

    def test_wrong_kind(self):
        with pytest.raises(ValidationError):
            run_triplet_campaign(CampaignConfig("quadruplet-pure", count=1))

    def test_out_path(self, tmp_path):
        path = tmp_path / "r.csv"
        res = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 5, seed=1, out_path=str(path), threads=1))
        assert [r.index for r in read_csv(path)] == [r.index for r in res.records]


class TestQuadruplets:
    def test_ranges(self):
        res = run_quadruplet_campaign(CampaignConfig("quadruplet-pure", 2, 200, seed=8, threads=1))
        pts = res.scatter
        assert pts.shape == (200, 2)
        assert np.all(pts[:, 1] <= 1 + 1e-12)
        assert np.all((pts[:, 0] >= 0.5 - 1e-12) & (pts[:, 0] <= 1 + 1e-12))
        assert any(r.violated for r in res.records)

    def test_reproducible(self):
        cfg = CampaignConfig("quadruplet-pure", 2, 100, seed=9, threads=1)
        assert run_quadruplet_campaign(cfg).records == run_quadruplet_campaign(cfg).records


class TestSweep:
    def test_rows(self):
        res = theta_sweep(50)
        assert len(res.rows) == 50
        assert res.rows[0].lhs == pytest.approx((2 + np.sqrt(2)) / 4, abs=1e-12)
        assert res.rows[0].bound == pytest.approx(0.75)
        assert res.rows[-1].margin < 0
        for row in res.rows:
            assert row.lhs == pytest.approx(prop2_closed_form(row.theta)[1], abs=1e-9)

    def test_endpoint(self):
        end = theta_sweep(2).endpoint
        assert 1.08 <= end <= 1.14
        assert end == pytest.approx(np.pi / (2 * np.sqrt(2)), abs=0.01)

    def test_violation_exactly_before_endpoint(self):
        res = theta_sweep(40)
        for row in res.rows:
            assert (row.margin > 0) == (row.theta < res.endpoint)

    def test_min_points(self):
        with pytest.raises(ValidationError):
            theta_sweep(1)


class TestPersistence:
    def test_empty_csv(self, tmp_path):
        path = tmp_path / "e.csv"
        write_csv([], path)
        assert path.read_text().strip() == ",".join(CSV_HEADER)
        assert read_csv(path) == []

    def test_round_trip(self, tmp_path):
        recs = [CampaignRecord(0, 0.7, 0.9, 0.85, True, 0.05), CampaignRecord(1, 0.5, 0.6, 0.75, False, -0.15)]
        path = tmp_path / "r.csv"
        write_csv(recs, path)
        assert read_csv(path) == recs

    def test_bad_header(self, tmp_path):
        path = tmp_path / "b.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValidationError):
            read_csv(path)

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            write_csv([], tmp_path / "missing" / "x.csv")

    def test_summary_schema(self, tmp_path):
        res = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 20, seed=1, threads=1))
        path = tmp_path / "s.json"
        write_json(res.summary(), path)
        jsonschema.validate(json.loads(path.read_text()), SUMMARY_SCHEMA)

    def test_schema_rejects_bad_fraction(self):
        res = run_triplet_campaign(CampaignConfig("triplet-pure", 2, 5, seed=1, threads=1))
        doc = res.summary()
        doc["violation_fraction"] = 1.5
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(doc, SUMMARY_SCHEMA)
