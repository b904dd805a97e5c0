import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from examgraph.errors import AuthError, GatewayTimeout, MalformedResponse, RateLimited
from examgraph.gateway import (
    CompletionRequest,
    ProviderConfig,
    complete,
    mock_complete,
)


class StubHandler(BaseHTTPRequestHandler):
    script = []  # list of (status, body dict or str); last entry repeats
    requests_seen = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length)) if length else {}
        type(self).requests_seen.append(
            {"body": body, "auth": self.headers.get("Authorization")})
        idx = min(len(type(self).requests_seen) - 1, len(self.script) - 1)
        status, payload = self.script[idx]
        if payload == "sleep":
            time.sleep(1.0)
            payload = {"choices": []}
        data = (payload if isinstance(payload, str)
                else json.dumps(payload)).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    server = HTTPServer(("127.0.0.1", 0), StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    StubHandler.requests_seen = []
    try:
        yield server
    finally:
        server.shutdown()
        server.server_close()


def provider(server, retries=3):
    return ProviderConfig(
        endpoint=f"http://127.0.0.1:{server.server_address[1]}/v1/chat",
        model="test-model",
        auth_env="EXAMGRAPH_TEST_TOKEN",
        retries=retries,
        backoff_base=0.01,
    )


def ok_body(text):
    return {"choices": [{"message": {"content": text}}]}


def request(system="You are a test.", user="Say hi."):
    return CompletionRequest(system_prompt=system, user_prompt=user, timeout=5.0)


def test_complete_passthrough_and_wire_shape(stub_server, monkeypatch):
    monkeypatch.setenv("EXAMGRAPH_TEST_TOKEN", "sekrit")
    StubHandler.script = [(200, ok_body("fixed text"))]
    text = complete(provider(stub_server), request())
    assert text == "fixed text"
    seen = StubHandler.requests_seen[0]
    assert seen["auth"] == "Bearer sekrit"
    assert seen["body"]["model"] == "test-model"
    assert seen["body"]["messages"][0]["role"] == "system"
    assert seen["body"]["messages"][1]["role"] == "user"
    assert seen["body"]["temperature"] == 0.0


def test_auth_error_no_retry(stub_server):
    StubHandler.script = [(401, {"error": "nope"})]
    with pytest.raises(AuthError):
        complete(provider(stub_server), request())
    assert len(StubHandler.requests_seen) == 1


def test_retry_on_5xx_then_success(stub_server):
    StubHandler.script = [(500, {}), (500, {}), (200, ok_body("third time"))]
    assert complete(provider(stub_server, retries=3), request()) == "third time"
    assert len(StubHandler.requests_seen) == 3


def test_rate_limited_after_retries(stub_server):
    StubHandler.script = [(429, {})]
    with pytest.raises(RateLimited):
        complete(provider(stub_server, retries=2), request())
    assert len(StubHandler.requests_seen) == 3  # initial + 2 retries


def test_malformed_response_body(stub_server):
    StubHandler.script = [(200, "this is not json")]
    with pytest.raises(MalformedResponse):
        complete(provider(stub_server, retries=0), request())
    StubHandler.requests_seen = []
    StubHandler.script = [(200, {"nothing": "here"})]
    with pytest.raises(MalformedResponse):
        complete(provider(stub_server, retries=0), request())


def test_timeout_raises_after_retries(stub_server):
    StubHandler.script = [(200, "sleep")]
    config = provider(stub_server, retries=1)
    tiny = CompletionRequest("sys", "user", timeout=0.2)
    started = time.monotonic()
    with pytest.raises(GatewayTimeout):
        complete(config, tiny)
    assert time.monotonic() - started < 5


def test_request_validation():
    with pytest.raises(ValueError):
        CompletionRequest("", "user")
    with pytest.raises(ValueError):
        CompletionRequest("sys", "user", timeout=0)
    with pytest.raises(ValueError):
        ProviderConfig(endpoint="ftp://nope", model="m")


# --- the deterministic mock ---

def test_mock_identical_for_same_inputs():
    req = request("anything", "something else")
    assert mock_complete(7, req) == mock_complete(7, req)


def test_mock_extraction_shape():
    from examgraph.ingestion import EXTRACTION_SYSTEM_PROMPT

    req = CompletionRequest(EXTRACTION_SYSTEM_PROMPT, "A harms B.")
    reply = json.loads(mock_complete(0, req))
    assert reply["triples"] == [["a", "harms", "b"]]
    assert reply["concepts"] == {}


def test_mock_generation_shape_and_seed_variation():
    from examgraph.generation import GENERATION_SYSTEM_PROMPT

    user = "Facts:\noak outgrows pine\nbirch shades moss\nfern needs shade\n"
    replies = [json.loads(mock_complete(seed,
                                        CompletionRequest(GENERATION_SYSTEM_PROMPT, user)))
               for seed in range(8)]
    orderings = set()
    for reply in replies:
        assert isinstance(reply["stem"], str) and reply["stem"]
        assert len(reply["options"]) == 4
        assert len(set(reply["options"])) == 4
        assert reply["options"][reply["answer_index"]] == "oak"
        orderings.add(tuple(reply["options"]))
    assert len(orderings) > 1  # different seeds shuffle differently


def test_mock_generation_ignores_prompt_scaffolding():
    from examgraph.generation import GENERATION_SYSTEM_PROMPT

    prompt = ("Facts:\noak outgrows pine\nbirch shades moss\n"
              "Concept: canopy tree\nChapter: ch 2\nCognitive level: Apply\n"
              "Attempt: 0\nWrite one question.")
    reply = json.loads(mock_complete(4, CompletionRequest(
        GENERATION_SYSTEM_PROMPT, prompt)))
    assert reply["options"][reply["answer_index"]] == "oak"
    joined = " ".join(reply["options"])
    assert "Concept:" not in joined and "question" not in joined


def test_mock_other_prompts_deterministic_ack():
    one = mock_complete(1, request("plain system", "plain user"))
    two = mock_complete(2, request("plain system", "plain user"))
    assert one.startswith("ok-") and two.startswith("ok-")
    assert one != two
