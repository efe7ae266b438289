import pytest
import requests

from voicearm.codegen import (
    EndpointCompletionClient,
    EndpointError,
    TransportError,
    complete,
)


class FakeResponse:
    def __init__(self, status_code=200, body=None, text=""):
        self.status_code = status_code
        self._body = body
        self.text = text

    def json(self):
        if self._body is None:
            raise ValueError("no json")
        return self._body


def test_unreachable_endpoint_is_transport_error(monkeypatch):
    def boom(*args, **kwargs):
        raise requests.ConnectionError("refused")

    monkeypatch.setattr(requests, "post", boom)
    client = EndpointCompletionClient("http://127.0.0.1:1")
    with pytest.raises(TransportError):
        client.complete("#define function: go\n")


def test_error_status_is_endpoint_error(monkeypatch):
    monkeypatch.setattr(
        requests, "post", lambda *a, **k: FakeResponse(status_code=503, text="overloaded")
    )
    client = EndpointCompletionClient("http://llm.local")
    with pytest.raises(EndpointError, match="503"):
        client.complete("#define function: go\n")


def test_malformed_body_is_endpoint_error(monkeypatch):
    monkeypatch.setattr(requests, "post", lambda *a, **k: FakeResponse(body={"nope": []}))
    client = EndpointCompletionClient("http://llm.local")
    with pytest.raises(EndpointError, match="malformed"):
        client.complete("#define function: go\n")


def test_successful_completion_records_elapsed_and_sends_stop(monkeypatch):
    captured = {}

    def fake_post(url, json=None, headers=None, timeout=None):
        captured["url"] = url
        captured["json"] = json
        captured["headers"] = headers
        return FakeResponse(body={"choices": [{"text": "def go_now(robot):\n    robot.go()\n#end of function\n"}]})

    monkeypatch.setattr(requests, "post", fake_post)
    client = EndpointCompletionClient("http://llm.local/", model="coder-xl", token="t0k")
    text = complete("#define function: go now\n", client)
    assert text == "def go_now(robot):\n    robot.go()"
    assert captured["url"] == "http://llm.local/v1/completions"
    assert captured["json"]["stop"] == ["#end of function"]
    assert captured["json"]["model"] == "coder-xl"
    assert captured["json"]["temperature"] == 0.0
    assert captured["json"]["max_tokens"] == 512
    assert captured["headers"]["Authorization"] == "Bearer t0k"
    assert len(client.call_log) == 1
    assert client.call_log[0] == ("go now", pytest.approx(client.call_log[0][1]))
    assert client.call_log[0][1] > 0
