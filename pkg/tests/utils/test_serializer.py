import json
import math

import numpy as np
import pytest
import torch

from gdrlab.models.config_models import Stage
from gdrlab.utils.serializer import RecordWriter, Serializer, read_records, write_summary


class TestSerializer:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_undefined_metric_is_na(self):
        assert Serializer.serialize(float("nan")) == "NA"
        assert Serializer.serialize(np.float32("nan")) == "NA"

    @pytest.mark.pc
    def test_infinite_is_null(self):
        assert Serializer.serialize(float("inf")) is None

    @pytest.mark.pc
    def test_nested_values(self):
        data = {Stage.OCL_TRAIN: [torch.tensor([1.5, float("nan")]), np.int64(3)], "path": (1, 2)}
        assert Serializer.serialize(data) == {"ocl_train": [[1.5, "NA"], 3], "path": [1, 2]}


class TestRecordWriter:

    @pytest.mark.pc
    def test_nan_record_round_trip(self, tmp_path):
        path = tmp_path / "records.jsonl"
        with RecordWriter(path) as writer:
            writer.write(sample_id=0, metric="ari_fg", value=float("nan"))
            writer.write(sample_id=1, metric="ari_fg", value=0.25)

        first, second = path.read_text(encoding="utf-8").splitlines()
        assert json.loads(first) == {"sample_id": 0, "metric": "ari_fg", "value": "NA"}

        records = read_records(path)
        assert math.isnan(records[0]["value"])
        assert records[0]["metric"] == "ari_fg"
        assert records[1]["value"] == 0.25

    @pytest.mark.pc
    def test_append_and_overwrite(self, tmp_path):
        path = tmp_path / "records.jsonl"
        for append in (True, True, False):
            with RecordWriter(path, append=append) as writer:
                writer.write(step=1, metric="loss", value=1.0)
        assert len(read_records(path)) == 1


class TestSummary:

    @pytest.mark.pc
    def test_aligned_table(self, tmp_path):
        path = write_summary(tmp_path / "summary.txt", "Evaluation", [["ARI", "91.20"], ["ARI_fg", "NA"]])
        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "Evaluation"
        assert lines[2].split() == ["metric", "value"]
        assert lines[5].split() == ["ARI_fg", "NA"]
