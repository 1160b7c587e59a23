"""Prompt assembly, chat-backend querying, and structured ballot parsing.

Agents answer with a JSON object carrying their community id, four rationale
sections, and a decision list of policy ids. The mock backend is a pure
function of (seed, agent_id, round, rule) so whole scenarios replay
byte-identically; the HTTP backend talks to chat-completion endpoints at
temperature 0 with retry and typed failures.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import httpx

from .ballots import RULES
from .catalog import Catalog, policy_values

AGENT_MODES = ("community", "knowledge_augmented", "city_average")

RATIONALE_SECTIONS = (
    "disposable_income",
    "discretionary_consumption",
    "accessibility",
    "decision_rationale",
)

RULE_INSTRUCTIONS = {
    "ranked": "You are allowed to choose five policies and submit them as a ranked list.",
    "approve5": "You are allowed to choose five proposals and submit them as a list.",
    "approve_all": "You should vote all the policies that you agree and submit them as a list.",
}

CITY_AVERAGE_LABELS = {
    "chicago": "Average Chicago Resident",
    "houston": "Average Houston Resident",
}

OPENAI_ENDPOINT = "https://api.openai.com/v1/chat/completions"
ANTHROPIC_ENDPOINT = "https://api.anthropic.com/v1/messages"

API_KEY_ENV = {"openai": "CIVIC_OPENAI_KEY", "anthropic": "CIVIC_ANTHROPIC_KEY"}


class GatewayError(Exception):
    """Base class for gateway failures."""


class ParseError(GatewayError):
    """Response could not be turned into a valid ballot."""

    def __init__(self, category: str, message: str):
        super().__init__(message)
        self.category = category


class BackendError(GatewayError):
    """Base class for backend transport failures."""


class BackendTimeout(BackendError):
    pass


class BackendRateLimited(BackendError):
    pass


class BackendHTTPError(BackendError):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class AgentProfile:
    agent_id: int
    community_name: str
    city: str
    mode: str = "community"
    context_facts: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self):
        if self.mode not in AGENT_MODES:
            raise GatewayError(f"unknown agent mode: {self.mode!r}")
        if self.mode == "knowledge_augmented" and not self.context_facts:
            raise GatewayError("knowledge_augmented profile needs context_facts")
        if self.mode == "community" and self.context_facts:
            raise GatewayError("community profile must not carry context_facts")
        if self.mode == "city_average" and self.community_name != CITY_AVERAGE_LABELS.get(self.city):
            raise GatewayError(
                f"city_average profile must use the generic label "
                f"{CITY_AVERAGE_LABELS.get(self.city)!r}"
            )


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    rule: str


@dataclass(frozen=True)
class ParsedVote:
    community: str
    rationale_sections: dict[str, str]
    decision: tuple[int, ...]


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"  # mock | http_chat
    model_name: str = "mock-referendum-1"
    temperature: float = 0.0
    endpoint: str = ""
    api_style: str = "openai"  # openai | anthropic (http_chat only)
    timeout: float = 60.0
    max_retries: int = 3
    seed: int = 0  # mock only


def load_roster(city: str) -> list[str]:
    """Community names in official index order (77 for Chicago, 88 for Houston)."""
    path = Path(str(resources.files("civicref").joinpath(f"data/{city}_communities.txt")))
    names = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    return names


def build_prompts(profile: AgentProfile, catalog: Catalog, rule: str) -> PromptBundle:
    """Assemble the system/user prompt pair for one agent and one voting rule."""
    if rule not in RULES:
        raise GatewayError(f"unknown rule: {rule!r}")

    if profile.mode == "city_average":
        role = (
            f"You represent a typical, average resident of {profile.city.title()}. "
            "You hold no neighborhood-specific interests beyond those of the city as a whole."
        )
    else:
        role = (
            f"You are the representative of the {profile.community_name} community "
            f"in {profile.city.title()}. You vote for what best serves your community's interests."
        )

    system_text = (
        f"{role}\n"
        "The city is holding a referendum on 27 transit policy proposals. Each proposal "
        "sets three levers: a dedicated sales tax rate (% of purchases), a flat transit "
        "fare ($ per trip), and a per-trip driver fee ($ per trip).\n"
        "Think step by step. Before deciding, reason explicitly through three considerations:\n"
        "1. Disposable income: how the policy affects residents' income after taxes, fares, and fees.\n"
        "2. Discretionary consumption: how much income is left for non-essential goods and services.\n"
        "3. Accessibility: the ability to reach daily destinations such as work, shopping, or "
        "healthcare under the transit and congestion conditions implied by each policy.\n"
        f"{RULE_INSTRUCTIONS[rule]}\n"
        "Respond with a single JSON object with exactly these keys: "
        '"community", "disposable_income", "discretionary_consumption", "accessibility", '
        '"decision_rationale", "decision". The "decision" value must be a list of policy ids '
        "(integers 0-26), most preferred first."
    )

    lines = [
        "Policy options (id: tax %, fare $/trip, fee $/trip | drive min, bus min, drive $, bus $):"
    ]
    for pid in catalog.ids():
        p = catalog.policy(pid)
        m = catalog.metrics(pid)
        lines.append(
            f"Policy {pid}: tax {p.tax}%, fare ${p.fare}/trip, fee ${p.fee}/trip | "
            f"drive {m.drive_time} min, bus {m.bus_time} min, "
            f"drive ${m.drive_cost}/trip, bus ${m.bus_cost}/trip"
        )
    lines.append(
        "Higher taxes and driver fees raise more transit revenue, which can improve bus "
        "service and reduce congestion, but they also reduce household budgets. Fares fall "
        "directly on transit riders."
    )
    if profile.mode == "knowledge_augmented":
        lines.append(f"Known facts about {profile.community_name}:")
        for label, value in profile.context_facts:
            lines.append(f"- {label}: {value}")
    user_text = "\n".join(lines)
    return PromptBundle(system_text=system_text, user_text=user_text, rule=rule)


def render_vote(vote: ParsedVote) -> str:
    """Serialize a ParsedVote back into the JSON wire shape agents produce."""
    payload = {"community": vote.community}
    payload.update(vote.rationale_sections)
    payload["decision"] = list(vote.decision)
    return json.dumps(payload)


def _extract_json_object(raw: str) -> dict:
    depth = 0
    start = None
    in_string = False
    escape = False
    for i, ch in enumerate(raw):
        if in_string:
            if escape:
                escape = False
            elif ch == "\\":
                escape = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"' and depth > 0:
            in_string = True
        elif ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}":
            if depth > 0:
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(raw[start : i + 1])
                    except json.JSONDecodeError:
                        start = None
                        continue
                    if isinstance(obj, dict):
                        return obj
                    start = None
    raise ParseError("no_ballot", "no ballot found: response contains no JSON object")


def parse_response(raw: str, rule: str) -> ParsedVote:
    """Extract and validate the first structured ballot object in a response."""
    if rule not in RULES:
        raise GatewayError(f"unknown rule: {rule!r}")
    obj = _extract_json_object(raw)

    decision = obj.get("decision", obj.get("vote_decision", obj.get("voting_decision")))
    if decision is None:
        raise ParseError("missing_decision", "ballot object has no decision list")
    if not isinstance(decision, list) or not all(
        isinstance(k, int) and not isinstance(k, bool) for k in decision
    ):
        raise ParseError("malformed_ids", f"decision is not a list of integers: {decision!r}")
    if any(not 0 <= k <= 26 for k in decision):
        raise ParseError("malformed_ids", f"decision ids out of [0,26]: {decision}")
    if len(set(decision)) != len(decision):
        raise ParseError("duplicate_ids", f"decision has duplicates: {decision}")
    if rule == "ranked" and not 1 <= len(decision) <= 5:
        raise ParseError("cardinality", f"ranked decision needs 1-5 ids, got {len(decision)}")
    if rule == "approve5" and len(decision) != 5:
        raise ParseError("cardinality", f"approve5 decision needs 5 ids, got {len(decision)}")
    if rule == "approve_all" and len(decision) < 1:
        raise ParseError("cardinality", "approve_all decision needs at least one id")

    sections = {}
    for key in RATIONALE_SECTIONS:
        value = obj.get(key, "")
        sections[key] = value if isinstance(value, str) else json.dumps(value)
    community = obj.get("community", "")
    if not isinstance(community, str):
        community = str(community)
    return ParsedVote(
        community=community,
        rationale_sections=sections,
        decision=tuple(decision),
    )


# --- mock backend -----------------------------------------------------------

_POSITIVE_PHRASES = (
    "this policy would greatly improve accessibility and support local families",
    "affordable fares are a clear benefit for transit riders",
    "better bus service is an excellent outcome worth the investment",
    "the balance of costs here is fair and encourages sustainable travel",
    "reliable transit would help residents reach jobs and healthcare",
)

_NEGATIVE_PHRASES = (
    "higher taxes would be a real burden on struggling households",
    "expensive fares risk leaving vulnerable riders worse off",
    "congestion remains a serious problem under weaker funding",
    "raising fees could hurt commuters who have no alternative",
    "an inadequate budget would degrade service and deepen inequality",
)


def _mock_rng(seed: int, agent_id: int, round_index: int, rule: str) -> random.Random:
    digest = hashlib.sha256(f"{seed}:{agent_id}:{round_index}:{rule}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _mock_policy_weights(rng: random.Random) -> list[float]:
    # favor low fares, then moderate fees; mild per-agent jitter keeps rounds apart
    fare_w = {0.75: 6.0, 1.25: 2.0, 1.75: 0.7}
    fee_w = {0.0: 1.2, 0.5: 2.5, 1.0: 1.5}
    tax_w = {0.5: 1.6, 1.0: 2.2, 1.5: 1.0}
    weights = []
    for pid in range(27):
        tax, fare, fee = policy_values(pid)
        w = tax_w[tax] * fare_w[fare] * fee_w[fee] * rng.uniform(0.7, 1.3)
        weights.append(w)
    return weights


def _weighted_sample(rng: random.Random, weights: list[float], size: int) -> list[int]:
    pool = list(range(len(weights)))
    w = list(weights)
    chosen = []
    for _ in range(size):
        total = sum(w[i] for i in pool)
        r = rng.random() * total
        acc = 0.0
        pick = pool[-1]
        for i in pool:
            acc += w[i]
            if r <= acc:
                pick = i
                break
        chosen.append(pick)
        pool.remove(pick)
    return chosen


def mock_response(
    config: BackendConfig, bundle: PromptBundle, agent_id: int, round_index: int
) -> str:
    """Deterministic structured response for one (seed, agent, round, rule)."""
    rng = _mock_rng(config.seed, agent_id, round_index, bundle.rule)
    weights = _mock_policy_weights(rng)
    if bundle.rule == "approve_all":
        size = rng.randint(3, 8)
    else:
        size = 5
    decision = _weighted_sample(rng, weights, size)

    # first line of the user prompt identifies nothing; recover the community
    # from the system prompt when present
    community = ""
    for marker in ("representative of the ", "average resident of "):
        if marker in bundle.system_text:
            rest = bundle.system_text.split(marker, 1)[1]
            community = rest.split(" community", 1)[0].split(".", 1)[0].strip()
            break

    tone = rng.random()
    def pick_phrases():
        pos = rng.choice(_POSITIVE_PHRASES)
        neg = rng.choice(_NEGATIVE_PHRASES)
        if tone < 0.55:
            return f"{pos.capitalize()}."
        if tone < 0.8:
            return f"{pos.capitalize()}, but {neg}."
        return f"{neg.capitalize()}."

    payload = {
        "community": community,
        "disposable_income": pick_phrases(),
        "discretionary_consumption": pick_phrases(),
        "accessibility": pick_phrases(),
        "decision_rationale": pick_phrases(),
        "decision": decision,
    }
    return json.dumps(payload)


# --- http backend -----------------------------------------------------------


def _http_request(config: BackendConfig, bundle: PromptBundle) -> tuple[str, dict, dict]:
    if config.api_style == "anthropic":
        url = config.endpoint or ANTHROPIC_ENDPOINT
        key = os.environ.get(API_KEY_ENV["anthropic"], "")
        headers = {"x-api-key": key, "anthropic-version": "2023-06-01"}
        body = {
            "model": config.model_name,
            "max_tokens": 2048,
            "temperature": config.temperature,
            "system": bundle.system_text,
            "messages": [{"role": "user", "content": bundle.user_text}],
        }
    else:
        url = config.endpoint or OPENAI_ENDPOINT
        key = os.environ.get(API_KEY_ENV["openai"], "")
        headers = {"Authorization": f"Bearer {key}"}
        body = {
            "model": config.model_name,
            "temperature": config.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_text},
                {"role": "user", "content": bundle.user_text},
            ],
        }
    return url, headers, body


def _extract_http_text(config: BackendConfig, data: dict) -> tuple[str, dict]:
    usage = data.get("usage", {}) or {}
    if config.api_style == "anthropic":
        text = data["content"][0]["text"]
    else:
        text = data["choices"][0]["message"]["content"]
    return text, usage


def query_agent(
    config: BackendConfig,
    bundle: PromptBundle,
    agent_id: int,
    round_index: int,
    client: httpx.Client | None = None,
) -> tuple[str, dict]:
    """Query one agent once; returns (raw_text, transcript_record).

    HTTP failures are retried with exponential backoff up to max_retries
    before the typed error surfaces.
    """
    if config.kind == "mock":
        text = mock_response(config, bundle, agent_id, round_index)
        record = {
            "round": round_index,
            "agent_id": agent_id,
            "model": config.model_name,
            "backend": "mock",
            "timestamp": None,
            "usage": {},
        }
        return text, record

    if config.kind != "http_chat":
        raise GatewayError(f"unknown backend kind: {config.kind!r}")

    url, headers, body = _http_request(config, bundle)
    owns_client = client is None
    if owns_client:
        client = httpx.Client(timeout=config.timeout)
    last_error: BackendError | None = None
    try:
        for attempt in range(config.max_retries + 1):
            if attempt:
                time.sleep(min(2.0 ** (attempt - 1), 30.0))
            try:
                response = client.post(url, headers=headers, json=body)
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(str(exc))
                continue
            except httpx.HTTPError as exc:
                last_error = BackendHTTPError(0, str(exc))
                continue
            if response.status_code == 429:
                last_error = BackendRateLimited(response.text[:200])
                continue
            if response.status_code >= 500:
                last_error = BackendHTTPError(response.status_code, response.text[:200])
                continue
            if response.status_code != 200:
                raise BackendHTTPError(response.status_code, response.text[:200])
            text, usage = _extract_http_text(config, response.json())
            record = {
                "round": round_index,
                "agent_id": agent_id,
                "model": config.model_name,
                "backend": config.api_style,
                "timestamp": time.time(),
                "usage": usage,
            }
            return text, record
        raise last_error or BackendError("request failed")
    finally:
        if owns_client:
            client.close()
