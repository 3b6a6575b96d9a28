import io
import json
import subprocess
import sys

import pytest

from qebridge.config import BridgeConfig
from qebridge.models import MockModel
from qebridge.serve import ProtocolViolation, serve

BRIDGE = [sys.executable, "-m", "qebridge"]


def request_lines(pairs):
    return (
        "".join(
            json.dumps({"id": i, "src": src, "tgt": tgt}) + "\n"
            for i, (src, tgt) in enumerate(pairs)
        )
    )


def run_bridge(stdin_text, *extra, check_exit=True, timeout=60):
    proc = subprocess.run(
        BRIDGE + list(extra),
        input=stdin_text,
        capture_output=True,
        text=True,
        timeout=timeout,
    )
    if check_exit:
        assert proc.returncode == 0, proc.stderr
    return proc


def parse_responses(stdout):
    return [json.loads(line) for line in stdout.splitlines() if line.strip()]


class TestServeInProcess:
    def _serve(self, pairs, config=None):
        out = io.StringIO()
        code = serve(
            config or BridgeConfig(batch_size=2),
            MockModel(config or BridgeConfig(batch_size=2)),
            stdin=io.StringIO(request_lines(pairs)),
            stdout=out,
        )
        assert code == 0
        return parse_responses(out.getvalue())

    def test_one_response_per_request(self):
        responses = self._serve([(f"s{i}", f"t{i}") for i in range(7)])
        assert [r["id"] for r in responses] == list(range(7))

    def test_zero_requests(self):
        assert self._serve([]) == []

    def test_error_items_answered_with_null(self):
        responses = self._serve([("good", "fine"), ("bad", "__fail__"), ("ok", "yes")])
        by_id = {r["id"]: r for r in responses}
        assert by_id[0]["score"] is not None
        assert by_id[1]["score"] is None and "error" in by_id[1]
        assert by_id[2]["score"] is not None  # isolated from the bad neighbour

    def test_malformed_request_raises(self):
        out = io.StringIO()
        with pytest.raises(ProtocolViolation):
            serve(
                BridgeConfig(),
                MockModel(BridgeConfig()),
                stdin=io.StringIO("not json\n"),
                stdout=out,
            )


class TestBridgeProcess:
    def test_constant_model(self):
        pairs = [(f"s{i}", f"t{i}") for i in range(5)]
        proc = run_bridge(request_lines(pairs), "--model", "constant:0.5")
        responses = parse_responses(proc.stdout)
        assert len(responses) == 5
        assert all(r["score"] == 0.5 for r in responses)

    def test_ids_preserved_across_batches(self):
        pairs = [(f"s{i}", f"t{i}") for i in range(3)]
        proc = run_bridge(request_lines(pairs), "--batch-size", "2")
        responses = parse_responses(proc.stdout)
        assert sorted(r["id"] for r in responses) == [0, 1, 2]

    def test_clean_exit_with_no_input(self):
        proc = run_bridge("")
        assert proc.stdout == ""

    def test_model_load_failure_before_reading(self):
        proc = run_bridge("", "--model", "nonsense-id", check_exit=False)
        assert proc.returncode == 1
        assert "model load failed" in proc.stderr

    def test_bad_batch_size_rejected(self):
        proc = run_bridge("", "--batch-size", "0", check_exit=False)
        assert proc.returncode == 1

    def test_malformed_request_is_protocol_error(self):
        proc = run_bridge("garbage\n", check_exit=False)
        assert proc.returncode == 2

    def test_out_of_range_becomes_error_response(self):
        pairs = [("a", "b")]
        proc = run_bridge(
            request_lines(pairs), "--model", "constant:7", "--range", "0", "1"
        )
        responses = parse_responses(proc.stdout)
        assert responses[0]["score"] is None
        assert "outside declared range" in responses[0]["error"]

    def test_no_range_flag_allows_unbounded(self):
        pairs = [("a", "b")]
        proc = run_bridge(request_lines(pairs), "--model", "constant:7", "--no-range")
        assert parse_responses(proc.stdout)[0]["score"] == 7.0

    def test_streaming_flushes_per_batch(self):
        # responses for a full batch arrive before stdin closes
        proc = subprocess.Popen(
            BRIDGE + ["--batch-size", "2"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
        )
        try:
            for i in range(2):
                proc.stdin.write(json.dumps({"id": i, "src": "s", "tgt": "t"}) + "\n")
            proc.stdin.flush()
            first = proc.stdout.readline()
            assert json.loads(first)["id"] == 0
        finally:
            proc.stdin.close()
            proc.wait(timeout=30)
        assert proc.returncode == 0
