import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from pulse_efficient.backends import (
    DT_NS,
    DEVICE_PAIRS,
    BackendError,
    BackendModel,
    QubitProperties,
    builtin_backend,
    builtin_names,
    fixture_name,
    line_backend,
    load_backend,
    mumbai_backend,
)

ROOT = Path(__file__).resolve().parents[1]


class TestTableOne:
    def test_ten_rows(self):
        assert len(DEVICE_PAIRS) == 10

    @pytest.mark.parametrize("row", DEVICE_PAIRS, ids=lambda r: fixture_name(r[0], r[1]))
    def test_fixture_reproduces_row(self, row):
        dev, pair, err, ns, t1, t2 = row
        b = builtin_backend(fixture_name(dev, pair))
        assert b.num_qubits == 2
        assert abs(b.cnot_samples(0, 1) * DT_NS - ns) <= b.granularity * DT_NS
        assert b.edge(0, 1).cnot_error == pytest.approx(err / 100)
        for q in range(2):
            assert b.qubits[q].t1_us == t1[q]
            assert b.qubits[q].t2_us == min(t2[q], 2 * t1[q])

    def test_mumbai_sample_counts(self):
        b = builtin_backend("mumbai-q1q2")
        cal = b.edge(0, 1)
        assert b.cnot_samples(0, 1) == 3328
        assert cal.cr_pulse.duration(b.granularity) == 1424
        assert cal.cr_pulse.width == 1168

    def test_paris_t2_clamped(self):
        # the table lists T2 > 2 T1 on both qubits of this pair, which no physical qubit allows
        b = builtin_backend("paris-q18q17")
        assert [q.t2_us for q in b.qubits] == [82.0, 142.0]

    def test_edges_bidirectional(self):
        b = builtin_backend("dublin-q3q2")
        assert b.edge(1, 0).control == 1 and b.edge(1, 0).target == 0
        assert b.cnot_samples(1, 0) == b.cnot_samples(0, 1)


class TestValidation:
    def test_t2_bound(self):
        with pytest.raises(BackendError):
            QubitProperties(10.0, 25.0)

    def test_positive_times(self):
        with pytest.raises(BackendError):
            QubitProperties(0.0, 1.0)

    def test_confusion_rows(self):
        with pytest.raises(BackendError):
            QubitProperties(10.0, 10.0, readout_confusion=((0.9, 0.2), (0.0, 1.0)))

    def test_dt_positive(self):
        b = builtin_backend("mumbai-q1q2")
        with pytest.raises(BackendError):
            BackendModel("x", 0.0, 16, b.qubits, dict(b.edges))

    def test_uncoupled_edge(self):
        with pytest.raises(BackendError):
            line_backend(3).edge(0, 2)

    def test_unknown_name(self):
        with pytest.raises(BackendError):
            builtin_backend("nowhere")

    def test_confusion_matrix_column_stochastic(self):
        m = builtin_backend("mumbai-q1q2").qubits[0].confusion_matrix
        assert np.allclose(m.sum(axis=0), 1)


class TestDerived:
    def test_mumbai_topology(self):
        b = mumbai_backend()
        assert b.num_qubits == 27
        assert len(b.coupling) == 28
        degrees = np.bincount(np.array(sorted(b.coupling)).ravel(), minlength=27)
        assert degrees.max() == 3

    def test_line(self):
        assert line_backend(5).coupling == {(0, 1), (1, 2), (2, 3), (3, 4)}

    def test_restricted(self):
        b = line_backend(5).restricted([3, 2, 1])
        assert b.coupling == {(0, 1), (1, 2)}
        assert b.num_qubits == 3

    @pytest.mark.parametrize("name", builtin_names())
    def test_json_roundtrip(self, name, tmp_path):
        b = builtin_backend(name)
        path = tmp_path / "b.json"
        path.write_text(json.dumps(b.to_json()))
        back = load_backend(path)
        assert back.to_json() == b.to_json()


def test_shipped_fixtures_current():
    proc = subprocess.run(
        [sys.executable, str(ROOT / "scripts" / "export_fixtures.py"), "--check"], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
