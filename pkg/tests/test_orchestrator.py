import json

import pytest

from civicref.gateway import BackendConfig
from civicref.orchestrator import (
    ConfigError,
    DataError,
    ScenarioConfig,
    build_profiles,
    load_facts,
    load_scenario_config,
    replay,
    run_scenario,
    summarize,
)


def _config(tmp_path, **overrides):
    base = dict(
        name="t",
        city="chicago",
        agent_mode="community",
        rule="ranked",
        rounds=2,
        backend=BackendConfig(kind="mock", seed=11),
        output_dir=str(tmp_path / "out"),
        parallel=4,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


def test_scenario_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        _config(tmp_path, rounds=0)
    with pytest.raises(ConfigError):
        _config(tmp_path, parallel=0)


def test_load_scenario_config_yaml(tmp_path):
    cfg_file = tmp_path / "s.yaml"
    cfg_file.write_text(
        "name: demo\ncity: chicago\nrule: approve5\nrounds: 3\n"
        "backend:\n  kind: mock\n  seed: 5\n"
    )
    config = load_scenario_config(cfg_file)
    assert config.rule == "approve5" and config.backend.seed == 5


def test_load_scenario_config_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("- just\n- a\n- list\n")
    with pytest.raises(ConfigError):
        load_scenario_config(bad)
    bad2 = tmp_path / "bad2.yaml"
    bad2.write_text("name: x\ncity: chicago\nunknown_key: true\n")
    with pytest.raises(ConfigError):
        load_scenario_config(bad2)


def test_build_profiles_modes(tmp_path, facts_path):
    assert len(build_profiles(_config(tmp_path))) == 77
    avg = build_profiles(_config(tmp_path, agent_mode="city_average"))
    assert len(avg) == 1 and avg[0].agent_id == 0

    know = build_profiles(
        _config(tmp_path, agent_mode="knowledge_augmented", facts_file=str(facts_path))
    )
    assert know[0].context_facts and know[0].agent_id == 1
    with pytest.raises(ConfigError):
        build_profiles(_config(tmp_path, agent_mode="knowledge_augmented"))


def test_load_facts(facts_path, tmp_path):
    facts = load_facts(facts_path)
    assert set(facts) == set(range(1, 78))
    assert facts[1][0][0] == "median_income"
    bad = tmp_path / "bad.csv"
    bad.write_text("name,x\nfoo,1\n")
    with pytest.raises(ConfigError):
        load_facts(bad)


def test_run_scenario_outputs(tmp_path, chicago):
    config = _config(tmp_path)
    summary = run_scenario(config, catalog=chicago)
    out = tmp_path / "out"
    for fname in ("transcripts.jsonl", "rounds.csv", "summary.csv", "lattice.csv"):
        assert (out / fname).exists()
    assert summary.rounds == 2 and summary.failed_rounds == 0
    assert sum(c for _, c in summary.winner_counts) == 2
    lines = (out / "transcripts.jsonl").read_text().strip().splitlines()
    assert len(lines) == 77 * 2
    record = json.loads(lines[0])
    for key in ("round", "agent_id", "community", "prompts", "raw_response",
                "parse_status", "decision"):
        assert key in record


def test_replay_matches_run(tmp_path, chicago):
    config = _config(tmp_path)
    summary = run_scenario(config, catalog=chicago)
    replayed, results = replay(
        tmp_path / "out" / "transcripts.jsonl", "ranked", chicago, name="t"
    )
    assert replayed == summary
    assert len(results) == 2


def test_replay_rejects_corrupt_lines(tmp_path, chicago):
    f = tmp_path / "bad.jsonl"
    f.write_text('{"round": 1, "agent_id": 1, "raw_response": "{}"}\nnot json\n')
    with pytest.raises(DataError, match=":2"):
        replay(f, "ranked", chicago)


def test_abstention_majority_fails_round(tmp_path, chicago):
    # transcripts where most agents produced unparseable responses
    lines = []
    for agent in range(1, 6):
        raw = '{"decision": [1,2,3]}' if agent == 1 else "garbage"
        lines.append(json.dumps({"round": 1, "agent_id": agent, "raw_response": raw}))
    f = tmp_path / "t.jsonl"
    f.write_text("\n".join(lines) + "\n")
    summary, results = replay(f, "ranked", chicago)
    assert results[0].failed
    assert results[0].winner is None
    assert summary.failed_rounds == 1


def test_corrective_retry_recovers(tmp_path, chicago, monkeypatch):
    import civicref.orchestrator as orch

    calls = {"n": 0}
    real = orch.query_agent

    def flaky(config, bundle, agent_id, round_index, client=None):
        calls["n"] += 1
        if agent_id == 1 and "could not be read" not in bundle.user_text:
            return "not a ballot", {
                "round": round_index, "agent_id": agent_id,
                "model": "m", "backend": "mock", "timestamp": None, "usage": {},
            }
        return real(config, bundle, agent_id, round_index, client=client)

    monkeypatch.setattr(orch, "query_agent", flaky)
    config = _config(tmp_path, rounds=1)
    summary = run_scenario(config, catalog=chicago)
    assert summary.failed_rounds == 0
    lines = (tmp_path / "out" / "transcripts.jsonl").read_text().strip().splitlines()
    rec1 = next(r for r in map(json.loads, lines) if r["agent_id"] == 1)
    assert rec1["attempts"] == 2
    assert rec1["parse_status"] == "ok"


def test_abstention_after_retries_exhausted(tmp_path, chicago, monkeypatch):
    import civicref.orchestrator as orch

    real = orch.query_agent

    def broken(config, bundle, agent_id, round_index, client=None):
        if agent_id == 1:
            return "still not a ballot", {
                "round": round_index, "agent_id": agent_id,
                "model": "m", "backend": "mock", "timestamp": None, "usage": {},
            }
        return real(config, bundle, agent_id, round_index, client=client)

    monkeypatch.setattr(orch, "query_agent", broken)
    config = _config(tmp_path, rounds=1)
    summary = run_scenario(config, catalog=chicago)
    assert summary.failed_rounds == 0  # one abstention out of 77
    lines = (tmp_path / "out" / "transcripts.jsonl").read_text().strip().splitlines()
    rec1 = next(r for r in map(json.loads, lines) if r["agent_id"] == 1)
    assert rec1["attempts"] == 3  # initial try + two corrective re-queries
    assert rec1["parse_status"].startswith("parse_error")
    assert rec1["decision"] is None


def test_summarize_lattice_and_winners(chicago):
    from civicref.ballots import ranked_ballot
    from civicref.orchestrator import RoundResult

    results = []
    for rnd in (1, 2):
        ballots = [ranked_ballot(1, [10, 11]), ranked_ballot(2, [10])]
        r = RoundResult(round=rnd, ballots=ballots, parsed=[], abstentions=[], winner=10)
        r.policy_entropy = 1.0
        results.append(r)
    summary = summarize("x", "ranked", results)
    assert summary.winner_counts == ((10, 2),)
    assert (10, 1, 4) in summary.vote_lattice  # policy 10 at rank 1 four times
    assert (11, 2, 2) in summary.vote_lattice
