import json

import pytest
from hypothesis import given, settings, strategies as st

from civicref.gateway import (
    AgentProfile,
    BackendConfig,
    BackendHTTPError,
    BackendRateLimited,
    GatewayError,
    ParseError,
    ParsedVote,
    RULE_INSTRUCTIONS,
    build_prompts,
    load_roster,
    mock_response,
    parse_response,
    query_agent,
    render_vote,
)


def _profile(mode="community", name="Rogers Park"):
    if mode == "city_average":
        return AgentProfile(0, "Average Chicago Resident", "chicago", mode="city_average")
    kwargs = {}
    if mode == "knowledge_augmented":
        kwargs["context_facts"] = (("median income", "$45k"),)
    return AgentProfile(1, name, "chicago", mode=mode, **kwargs)


def test_rosters():
    assert len(load_roster("chicago")) == 77
    assert load_roster("chicago")[0] == "Rogers Park"
    assert len(load_roster("houston")) == 88


def test_profile_invariants():
    with pytest.raises(GatewayError):
        AgentProfile(1, "X", "chicago", mode="telepathic")
    with pytest.raises(GatewayError):
        AgentProfile(1, "X", "chicago", mode="knowledge_augmented")
    with pytest.raises(GatewayError):
        AgentProfile(1, "X", "chicago", mode="community", context_facts=(("a", "b"),))
    with pytest.raises(GatewayError):
        AgentProfile(0, "Some Name", "chicago", mode="city_average")


def test_prompts_carry_rule_instruction_and_policies(chicago):
    for rule, instruction in RULE_INSTRUCTIONS.items():
        bundle = build_prompts(_profile(), chicago, rule)
        assert instruction in bundle.system_text
        assert "Rogers Park" in bundle.system_text
        for section in ("Disposable income", "Discretionary consumption", "Accessibility"):
            assert section.split(":")[0].lower() in bundle.system_text.lower()
        assert "Policy 0:" in bundle.user_text
        assert "Policy 26:" in bundle.user_text


def test_prompts_knowledge_augmented_facts(chicago):
    bundle = build_prompts(_profile("knowledge_augmented"), chicago, "ranked")
    assert "median income: $45k" in bundle.user_text
    plain = build_prompts(_profile(), chicago, "ranked")
    assert "median income" not in plain.user_text


def test_prompts_city_average(chicago):
    bundle = build_prompts(_profile("city_average"), chicago, "ranked")
    assert "average resident of Chicago" in bundle.system_text


def test_prompts_reject_unknown_rule(chicago):
    with pytest.raises(GatewayError):
        build_prompts(_profile(), chicago, "plurality")


# --- parsing ------------------------------------------------------------------

def _payload(decision, **extra):
    obj = {
        "community": "Rogers Park",
        "disposable_income": "a",
        "discretionary_consumption": "b",
        "accessibility": "c",
        "decision_rationale": "d",
        "decision": decision,
    }
    obj.update(extra)
    return json.dumps(obj)


def test_parse_valid_ranked():
    vote = parse_response(_payload([3, 1, 4, 0, 5]), "ranked")
    assert vote.decision == (3, 1, 4, 0, 5)
    assert vote.community == "Rogers Park"
    assert vote.rationale_sections["accessibility"] == "c"


def test_parse_tolerates_prose_and_fences():
    raw = "Sure! Here is my ballot:\n```json\n" + _payload([1, 2, 3]) + "\n```\nThanks."
    assert parse_response(raw, "ranked").decision == (1, 2, 3)


def test_parse_decision_key_fallbacks():
    raw = json.dumps({"vote_decision": [1, 2, 3, 4, 5]})
    assert parse_response(raw, "approve5").decision == (1, 2, 3, 4, 5)
    raw = json.dumps({"voting_decision": [7]})
    assert parse_response(raw, "approve_all").decision == (7,)


def test_parse_error_categories():
    with pytest.raises(ParseError) as e:
        parse_response("no json here", "ranked")
    assert e.value.category == "no_ballot"
    with pytest.raises(ParseError) as e:
        parse_response(json.dumps({"community": "x"}), "ranked")
    assert e.value.category == "missing_decision"
    with pytest.raises(ParseError) as e:
        parse_response(_payload(["a"]), "ranked")
    assert e.value.category == "malformed_ids"
    with pytest.raises(ParseError) as e:
        parse_response(_payload([99]), "ranked")
    assert e.value.category == "malformed_ids"
    with pytest.raises(ParseError) as e:
        parse_response(_payload([1, 1, 2]), "ranked")
    assert e.value.category == "duplicate_ids"
    with pytest.raises(ParseError) as e:
        parse_response(_payload([1, 2, 3]), "approve5")
    assert e.value.category == "cardinality"
    with pytest.raises(ParseError) as e:
        parse_response(_payload([]), "approve_all")
    assert e.value.category == "cardinality"
    with pytest.raises(ParseError) as e:
        parse_response(_payload([1, 2, 3, 4, 5, 6]), "ranked")
    assert e.value.category == "cardinality"


@settings(max_examples=100)
@given(st.lists(st.integers(0, 26), min_size=1, max_size=5, unique=True))
def test_render_parse_roundtrip(decision):
    vote = ParsedVote(
        community="Uptown",
        rationale_sections={
            "disposable_income": "w",
            "discretionary_consumption": "x",
            "accessibility": "y",
            "decision_rationale": "z",
        },
        decision=tuple(decision),
    )
    assert parse_response(render_vote(vote), "ranked") == vote


# --- mock backend ---------------------------------------------------------------

def test_mock_response_deterministic(chicago):
    cfg = BackendConfig(kind="mock", seed=3)
    bundle = build_prompts(_profile(), chicago, "ranked")
    a = mock_response(cfg, bundle, 1, 1)
    b = mock_response(cfg, bundle, 1, 1)
    assert a == b
    assert mock_response(cfg, bundle, 2, 1) != a
    assert mock_response(BackendConfig(kind="mock", seed=4), bundle, 1, 1) != a


def test_mock_response_parses_under_every_rule(chicago):
    cfg = BackendConfig(kind="mock", seed=0)
    for rule in ("ranked", "approve5", "approve_all"):
        bundle = build_prompts(_profile(), chicago, rule)
        for agent in (1, 2, 3):
            vote = parse_response(mock_response(cfg, bundle, agent, 1), rule)
            assert vote.community == "Rogers Park"
            assert all(0 <= k <= 26 for k in vote.decision)


def test_query_agent_mock_record(chicago):
    cfg = BackendConfig(kind="mock", seed=0)
    bundle = build_prompts(_profile(), chicago, "ranked")
    text, record = query_agent(cfg, bundle, 1, 2)
    assert record["round"] == 2 and record["agent_id"] == 1
    assert record["backend"] == "mock"
    assert record["timestamp"] is None
    parse_response(text, "ranked")


def test_query_agent_unknown_kind(chicago):
    bundle = build_prompts(_profile(), chicago, "ranked")
    with pytest.raises(GatewayError):
        query_agent(BackendConfig(kind="carrier_pigeon"), bundle, 1, 1)


# --- http backend against a stub client -----------------------------------------

class _StubResponse:
    def __init__(self, status_code, payload):
        self.status_code = status_code
        self._payload = payload
        self.text = json.dumps(payload)

    def json(self):
        return self._payload


class _StubClient:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = 0

    def post(self, url, headers=None, json=None):
        self.calls += 1
        return self.responses.pop(0)


def test_http_retry_then_success(chicago, monkeypatch):
    monkeypatch.setattr("time.sleep", lambda s: None)
    ok = {"choices": [{"message": {"content": _payload([1, 2, 3])}}], "usage": {"total_tokens": 10}}
    client = _StubClient([
        _StubResponse(429, {}),
        _StubResponse(503, {}),
        _StubResponse(200, ok),
    ])
    cfg = BackendConfig(kind="http_chat", api_style="openai", max_retries=3)
    bundle = build_prompts(_profile(), chicago, "ranked")
    text, record = query_agent(cfg, bundle, 1, 1, client=client)
    assert client.calls == 3
    assert record["usage"] == {"total_tokens": 10}
    assert parse_response(text, "ranked").decision == (1, 2, 3)


def test_http_exhausted_retries(chicago, monkeypatch):
    monkeypatch.setattr("time.sleep", lambda s: None)
    client = _StubClient([_StubResponse(429, {})] * 3)
    cfg = BackendConfig(kind="http_chat", api_style="openai", max_retries=2)
    bundle = build_prompts(_profile(), chicago, "ranked")
    with pytest.raises(BackendRateLimited):
        query_agent(cfg, bundle, 1, 1, client=client)


def test_http_client_error_is_fatal(chicago):
    client = _StubClient([_StubResponse(400, {"error": "bad request"})])
    cfg = BackendConfig(kind="http_chat", api_style="openai")
    bundle = build_prompts(_profile(), chicago, "ranked")
    with pytest.raises(BackendHTTPError) as e:
        query_agent(cfg, bundle, 1, 1, client=client)
    assert e.value.status == 400
    assert client.calls == 1


def test_http_anthropic_wire_shape(chicago):
    ok = {"content": [{"text": _payload([4])}], "usage": {"input_tokens": 5}}
    client = _StubClient([_StubResponse(200, ok)])
    cfg = BackendConfig(kind="http_chat", api_style="anthropic")
    bundle = build_prompts(_profile(), chicago, "approve_all")
    text, record = query_agent(cfg, bundle, 1, 1, client=client)
    assert parse_response(text, "approve_all").decision == (4,)
    assert record["backend"] == "anthropic"
