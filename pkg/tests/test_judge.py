"""Judge client: prompt assembly, schema validation, retries, concurrency."""

import numpy as np
import pytest

from motioneval.errors import (
    BandMismatch,
    Misaligned,
    OutOfRange,
    RateLimited,
    SchemaViolation,
    TransportError,
)
from motioneval.judge import (
    JudgeRequest,
    RetryPolicy,
    build_prompt,
    judge_clips,
    llm_selection_gap,
    parse_judge_response,
    submit,
    verdict_for,
)

from mock_judge import MockJudgeServer, completion_body, judge_content

FAST_RETRY = RetryPolicy(max_attempts=5, base_delay=0.001, factor=2.0)


@pytest.fixture
def server():
    srv = MockJudgeServer()
    yield srv
    srv.close()


def make_request(endpoint, video_name="clip_001", prompt_text="a person walks"):
    return JudgeRequest(video_name=video_name, prompt_text=prompt_text,
                        strip_image=b"\x89PNG fake image bytes", media_type="image/png",
                        model_name="judge-model", endpoint=endpoint, timeout=5.0)


class TestBuildPrompt:
    def test_quotes_doubled_once_per_placeholder(self):
        prompt = build_prompt("clip_001", 'a man "jumps"')
        assert prompt.count('a man ""jumps""') == 1
        assert prompt.count("clip_001") == 2  # name line + echoed JSON example

    def test_control_characters_stripped(self):
        prompt = build_prompt("clip\x01", "walks\nthen jumps\t")
        assert "\x01" not in prompt
        assert "walksthen jumps" in prompt

    def test_byte_identical_across_runs(self):
        assert build_prompt("v", "p") == build_prompt("v", "p")

    def test_empty_prompt_rejected_by_request(self):
        with pytest.raises(SchemaViolation):
            JudgeRequest(video_name="v", prompt_text="", strip_image=b"x")


class TestVerdictBands:
    @pytest.mark.parametrize("overall,expected", [
        (55, "aligned"), (50, "aligned"), (60, "aligned"),
        (30, "partial"), (49, "partial"),
        (29, "mismatch"), (0, "mismatch"),
    ])
    def test_bands(self, overall, expected):
        assert verdict_for(overall) == expected

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            verdict_for(61)
        with pytest.raises(OutOfRange):
            verdict_for(-1)


class TestParse:
    def test_valid_accepted(self):
        result = parse_judge_response(judge_content(scores=(8, 18, 9, 9, 9)))
        assert result.overall_score == 53
        assert result.verdict == "aligned"
        assert result.scores["action_completeness"] == 18

    def test_band_mismatch_quarantined(self):
        with pytest.raises(BandMismatch):
            parse_judge_response(judge_content(scores=(8, 18, 9, 9, 9), verdict="partial"))

    def test_subscore_above_range(self):
        with pytest.raises(SchemaViolation):
            parse_judge_response(judge_content(scores=(8, 25, 9, 9, 9)))

    def test_overall_must_match_sum(self):
        with pytest.raises(SchemaViolation):
            parse_judge_response(judge_content(scores=(8, 18, 9, 9, 9), overall=50))

    def test_code_fence_tolerated_by_default(self):
        fenced = "```json\n" + judge_content() + "\n```"
        assert parse_judge_response(fenced).verdict == "aligned"

    def test_code_fence_rejected_in_strict_mode(self):
        fenced = "```json\n" + judge_content() + "\n```"
        with pytest.raises(SchemaViolation):
            parse_judge_response(fenced, strict=True)

    def test_long_note_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_judge_response(judge_content(issues_found="x" * 201))

    def test_float_subscore_rejected(self):
        content = judge_content().replace('"extra_non_instruction_actions": 9',
                                          '"extra_non_instruction_actions": 9.5')
        with pytest.raises(SchemaViolation):
            parse_judge_response(content)

    def test_unknown_verdict_rejected(self):
        with pytest.raises(SchemaViolation):
            parse_judge_response(judge_content(overall=55, verdict="great"))


class TestSubmit:
    def test_success(self, server):
        result = submit(make_request(server.endpoint), retry=FAST_RETRY)
        assert result.overall_score == 54
        # system prompt + image attachment present in the outbound payload
        payload = server.requests[0]
        assert payload["model"] == "judge-model"
        roles = [m["role"] for m in payload["messages"]]
        assert roles == ["system", "user"]
        assert payload["messages"][1]["content"][0]["image_url"]["url"].startswith(
            "data:image/png;base64,")

    def test_retry_then_success(self):
        srv = MockJudgeServer(script=[(500, "oops"), (500, "oops")])
        try:
            result = submit(make_request(srv.endpoint), retry=FAST_RETRY)
            assert result.verdict == "aligned"
            assert len(srv.requests) == 3
        finally:
            srv.close()

    def test_rate_limited_after_retries(self):
        srv = MockJudgeServer(script=[(429, "slow down")] * 10,
                              default=(429, "slow down"))
        try:
            with pytest.raises(RateLimited):
                submit(make_request(srv.endpoint), retry=FAST_RETRY)
            assert len(srv.requests) == 5
        finally:
            srv.close()

    def test_server_errors_exhaust_to_transport(self):
        srv = MockJudgeServer(default=(503, "down"))
        try:
            with pytest.raises(TransportError):
                submit(make_request(srv.endpoint), retry=FAST_RETRY)
            assert len(srv.requests) == 5
        finally:
            srv.close()

    def test_endpoint_unreachable(self):
        req = make_request("http://127.0.0.1:9/v1/chat/completions")
        with pytest.raises(TransportError):
            submit(req, retry=RetryPolicy(max_attempts=2, base_delay=0.001))

    def test_validation_failure_not_retried(self):
        srv = MockJudgeServer(default=(200, completion_body(judge_content(scores=(8, 25, 9, 9, 9)))))
        try:
            with pytest.raises(SchemaViolation):
                submit(make_request(srv.endpoint), retry=FAST_RETRY)
            assert len(srv.requests) == 1
        finally:
            srv.close()

    def test_idempotent_against_deterministic_mock(self, server):
        first = submit(make_request(server.endpoint), retry=FAST_RETRY)
        second = submit(make_request(server.endpoint), retry=FAST_RETRY)
        assert first == second
        assert len(server.requests) == 2  # no duplicated accepted results

    def test_backoff_delays_follow_policy(self):
        sleeps = []
        policy = RetryPolicy(max_attempts=4, base_delay=1.0, factor=2.0,
                             sleep=sleeps.append)
        srv = MockJudgeServer(script=[(500, "x")] * 3)
        try:
            submit(make_request(srv.endpoint), retry=policy)
            assert sleeps == [1.0, 2.0, 4.0]
        finally:
            srv.close()


class TestConcurrency:
    def test_limit_never_exceeded(self):
        srv = MockJudgeServer(delay=0.05)
        try:
            reqs = {f"clip{i:02d}": make_request(srv.endpoint, video_name=f"clip{i:02d}")
                    for i in range(12)}
            results, quarantined, failures = judge_clips(reqs, concurrency=4,
                                                         retry=FAST_RETRY)
            assert len(results) == 12
            assert not quarantined and not failures
            assert srv.max_in_flight <= 4
            assert list(results) == sorted(results)
        finally:
            srv.close()

    def test_band_mismatch_routed_to_quarantine(self):
        bad = completion_body(judge_content(scores=(8, 18, 9, 9, 9), verdict="partial"))
        srv = MockJudgeServer(default=(200, bad))
        try:
            reqs = {"clipA": make_request(srv.endpoint)}
            results, quarantined, failures = judge_clips(reqs, concurrency=2,
                                                         retry=FAST_RETRY)
            assert not results and not failures
            assert isinstance(quarantined["clipA"], BandMismatch)
        finally:
            srv.close()


class TestSelectionGap:
    def test_identical_scores_zero_gap(self):
        scores = [(f"p{i}", np.array([5.0, 10.0, 5.0, 5.0, 5.0])) for i in range(10)]
        np.testing.assert_allclose(llm_selection_gap(scores, scores), np.zeros(5))

    def test_single_term(self):
        gap = llm_selection_gap([("p", [3.0, 0, 0, 0, 0])], [("p", [5.0, 0, 0, 0, 0])])
        np.testing.assert_allclose(gap, [2.0, 0, 0, 0, 0])

    def test_hand_computed_means(self):
        llm = [("a", [1.0, 2, 3, 4, 5]), ("b", [5.0, 4, 3, 2, 1])]
        human = [("a", [2.0, 2, 2, 2, 2]), ("b", [1.0, 1, 1, 1, 1])]
        expected = (np.abs(np.array([1.0, 2, 3, 4, 5]) - np.array([2.0, 2, 2, 2, 2]))
                    + np.abs(np.array([5.0, 4, 3, 2, 1]) - np.array([1.0, 1, 1, 1, 1]))) / 2
        np.testing.assert_allclose(llm_selection_gap(llm, human), expected, atol=1e-15)

    def test_misaligned_ids(self):
        with pytest.raises(Misaligned):
            llm_selection_gap([("a", [0] * 5)], [("b", [0] * 5)])

    def test_misaligned_lengths(self):
        with pytest.raises(Misaligned):
            llm_selection_gap([("a", [0] * 5)], [])
