import json

import pytest
from fastapi.testclient import TestClient

from conftest import never_diagnose_net, scripted_t1_net
from graphdx import templates
from graphdx.numkit import save_checkpoint
from graphdx.service import ServingModel, create_app, load_serving_model


@pytest.fixture
def scripted_model(t1_vocab):
    net = scripted_t1_net(t1_vocab)
    return ServingModel(net=net, vocab=t1_vocab, a_norm=None,
                        checkpoint_hash="deadbeef", graph_hash="")


@pytest.fixture
def client(scripted_model):
    app = create_app(scripted_model)
    return TestClient(app)


class TestBasics:
    def test_healthz(self, client):
        resp = client.get("/healthz")
        assert resp.status_code == 200
        assert resp.json() == {"status": "ok"}

    def test_model_info(self, client, t1_vocab):
        resp = client.get("/model")
        assert resp.status_code == 200
        body = resp.json()
        assert body["diseases"] == list(t1_vocab.diseases)
        assert body["symptoms"] == list(t1_vocab.symptoms)
        assert body["max_turns"] == 22
        assert body["checkpoint_hash"] == "deadbeef"

    def test_checkpoint_hash_header_everywhere(self, client):
        for resp in (client.get("/healthz"), client.get("/model")):
            assert resp.headers["X-Checkpoint-Hash"] == "deadbeef"


class TestCreateSession:
    def test_empty_body_400(self, client):
        resp = client.post("/sessions", content=b"")
        assert resp.status_code == 400
        assert resp.json()["code"] == "empty_body"

    def test_empty_self_report_400(self, client):
        resp = client.post("/sessions", json={"self_report": {}})
        assert resp.status_code == 400
        body = resp.json()
        assert set(body) == {"code", "message"}

    def test_unknown_symptom_422_names_it(self, client):
        resp = client.post("/sessions", json={"self_report": {"zzz": True}})
        assert resp.status_code == 422
        assert "zzz" in resp.json()["message"]

    def test_non_bool_value_422(self, client):
        resp = client.post("/sessions", json={"self_report": {"s1": "yes"}})
        assert resp.status_code == 422

    def test_happy_path(self, client):
        resp = client.post("/sessions", json={"self_report": {"s1": True}})
        assert resp.status_code == 200
        body = resp.json()
        assert body["terminal"] is False
        action = body["system_action"]
        assert set(action) >= {"kind", "name", "template_text"}
        assert action["kind"] in {"inquiry", "greeting", "diagnosis"}
        assert "top_q" not in action  # debug off by default

    def test_debug_exposes_top_q(self, client):
        resp = client.post("/sessions?debug=1", json={"self_report": {"s1": True}})
        top_q = resp.json()["system_action"]["top_q"]
        assert len(top_q) > 0
        assert all(isinstance(name, str) and isinstance(score, float)
                   for name, score in top_q)


class TestScriptedDialogue:
    """The handcrafted policy greets, asks the unknown symptoms, then
    diagnoses d1 once s1 was confirmed -- three answers to a diagnosis."""

    def test_session_mirroring_g1(self, client):
        resp = client.post("/sessions", json={"self_report": {"s2": True}})
        body = resp.json()
        sid = body["session_id"]
        assert body["system_action"]["kind"] == "greeting"
        assert body["turn"] == 1

        # answer 1: reply to the greeting; agent asks s1
        resp = client.post(f"/sessions/{sid}/answer", json={"answer": "not_sure"})
        body = resp.json()
        assert body["system_action"] == {
            "kind": "inquiry", "name": "s1",
            "template_text": "Do you have s1?",
        }
        # answer 2: s1 yes (mirrors g1); agent asks s3
        resp = client.post(f"/sessions/{sid}/answer", json={"answer": True})
        body = resp.json()
        assert body["system_action"]["name"] == "s3"
        # answer 3: s3 unknown in g1 -> not sure; agent diagnoses d1
        resp = client.post(f"/sessions/{sid}/answer", json={"answer": "not_sure"})
        body = resp.json()
        assert body["terminal"] is True
        assert body["result"] == "diagnosis"
        assert body["final_diagnosis"] == "d1"
        assert body["system_action"]["template_text"] == "You may have d1."
        assert body["turn"] == 4  # greeting + 2 inquiries + diagnosis

        # session is now closed
        resp = client.post(f"/sessions/{sid}/answer", json={"answer": True})
        assert resp.status_code == 409

        info = client.get(f"/sessions/{sid}").json()
        assert info["status"] == "closed"
        assert info["diagnosis"] == "d1"
        speakers = [t["speaker"] for t in info["transcript"]]
        assert speakers == ["user", "system", "user", "system", "user",
                            "system", "user", "system"]

    def test_turn_limit_timeout(self, t1_vocab):
        app = create_app(ServingModel(net=never_diagnose_net(t1_vocab),
                                      vocab=t1_vocab, a_norm=None,
                                      checkpoint_hash="x", graph_hash=""))
        client = TestClient(app)
        resp = client.post("/sessions", json={"self_report": {"s1": True}})
        sid = resp.json()["session_id"]
        assert resp.json()["turn"] == 1
        answers = 0
        body = resp.json()
        while not body.get("terminal"):
            resp = client.post(f"/sessions/{sid}/answer",
                               json={"answer": "not_sure"})
            assert resp.status_code == 200
            body = resp.json()
            answers += 1
            assert answers <= 22
        # exactly 22 answers: the 22nd system action hit the turn limit
        assert answers == 22
        assert body["result"] == "timeout"
        assert body["turn"] == 22
        resp = client.post(f"/sessions/{sid}/answer", json={"answer": True})
        assert resp.status_code == 409


class TestAnswerValidation:
    def test_unknown_session_404(self, client):
        resp = client.post("/sessions/nope/answer", json={"answer": True})
        assert resp.status_code == 404
        assert resp.json()["code"] == "session_not_found"

    def test_missing_answer_400(self, client):
        resp = client.post("/sessions", json={"self_report": {"s1": True}})
        sid = resp.json()["session_id"]
        resp = client.post(f"/sessions/{sid}/answer", json={})
        assert resp.status_code == 400

    def test_invalid_answer_422(self, client):
        resp = client.post("/sessions", json={"self_report": {"s1": True}})
        sid = resp.json()["session_id"]
        resp = client.post(f"/sessions/{sid}/answer", json={"answer": "maybe"})
        assert resp.status_code == 422

    def test_get_unknown_session_404(self, client):
        assert client.get("/sessions/nope").status_code == 404


class TestSessionExpiry:
    def test_idle_sessions_expire(self, scripted_model):
        now = [0.0]
        app = create_app(scripted_model, session_ttl=60.0, clock=lambda: now[0])
        client = TestClient(app)
        resp = client.post("/sessions", json={"self_report": {"s2": True}})
        sid = resp.json()["session_id"]
        now[0] = 30.0
        assert client.get(f"/sessions/{sid}").status_code == 200
        now[0] = 120.0
        assert client.get(f"/sessions/{sid}").status_code == 404


class TestTranscriptPersistence:
    def test_completed_sessions_appended(self, t1_vocab, tmp_path, scripted_model):
        path = tmp_path / "transcripts.jsonl"
        app = create_app(scripted_model, transcript_path=path)
        client = TestClient(app)
        resp = client.post("/sessions", json={"self_report": {"s2": True}})
        sid = resp.json()["session_id"]
        for answer in ("not_sure", True, "not_sure"):
            resp = client.post(f"/sessions/{sid}/answer", json={"answer": answer})
        assert resp.json()["terminal"] is True
        lines = path.read_text().strip().split("\n")
        assert len(lines) == 1
        record = json.loads(lines[0])
        assert record["session_id"] == sid
        assert record["diagnosis"] == "d1"
        assert record["turns"] == 4


class TestLoadServingModel:
    def test_round_trip_through_checkpoint(self, tmp_path, t1_vocab, t1_graph):
        from graphdx.medgraph import save_graph
        from graphdx.numkit import MODE_GRAPH, NetDims, QNetwork
        import numpy as np

        dims = NetDims(d_state=43, hidden=8, embed=4,
                       n_actions=t1_vocab.num_actions)
        net = QNetwork.initialize(dims, MODE_GRAPH, np.random.default_rng(0))
        ckpt_path = tmp_path / "ckpt.json"
        graph_path = tmp_path / "graph.json"
        save_graph(t1_graph, graph_path)
        save_checkpoint(ckpt_path, net, t1_vocab, {"max_turns": 22},
                        t1_graph.content_hash())
        model = load_serving_model(ckpt_path, graph_path)
        assert model.vocab == t1_vocab
        assert model.max_turns == 22
        assert model.net.params_equal(net)

    def test_graph_mode_requires_graph(self, tmp_path, t1_vocab):
        from graphdx.numkit import MODE_GRAPH, NetDims, QNetwork
        import numpy as np

        dims = NetDims(d_state=43, hidden=8, embed=4,
                       n_actions=t1_vocab.num_actions)
        net = QNetwork.initialize(dims, MODE_GRAPH, np.random.default_rng(0))
        ckpt_path = tmp_path / "ckpt.json"
        save_checkpoint(ckpt_path, net, t1_vocab, {}, "h")
        with pytest.raises(ValueError):
            load_serving_model(ckpt_path)

    def test_graph_hash_mismatch_rejected(self, tmp_path, t1_vocab, t1_graph):
        from graphdx.medgraph import save_graph
        from graphdx.numkit import MODE_GRAPH, NetDims, QNetwork
        import numpy as np

        dims = NetDims(d_state=43, hidden=8, embed=4,
                       n_actions=t1_vocab.num_actions)
        net = QNetwork.initialize(dims, MODE_GRAPH, np.random.default_rng(0))
        ckpt_path = tmp_path / "ckpt.json"
        graph_path = tmp_path / "graph.json"
        save_graph(t1_graph, graph_path)
        save_checkpoint(ckpt_path, net, t1_vocab, {}, "not-the-real-hash")
        with pytest.raises(ValueError):
            load_serving_model(ckpt_path, graph_path)


class TestTemplates:
    def test_round_trip_every_action(self, t1_vocab):
        for action in range(t1_vocab.num_actions):
            text = templates.action_text(t1_vocab, action)
            assert templates.parse_action_text(t1_vocab, text) == action

    def test_wordings(self, t1_vocab):
        assert templates.action_text(t1_vocab, t1_vocab.symptom_action("s1")) == \
            "Do you have s1?"
        assert templates.action_text(t1_vocab, t1_vocab.disease_action("d2")) == \
            "You may have d2."
