import pytest

from shopclerk.errors import SchemaError, SequencingError, UsageError
from shopclerk.memory import (
    ELISION_MARKER,
    LongTermStore,
    Message,
    Namespace,
    Role,
    WorkingMemory,
    read_transcript,
    render_context,
    render_turn,
    text_message,
    write_transcript,
)


def make_wm(texts, role=Role.BUYER):
    wm = WorkingMemory("s1")
    for i, text in enumerate(texts):
        wm.append_turn(text_message(role, text, i))
    return wm


def test_append_from_empty():
    wm = WorkingMemory("s1")
    wm.append_turn(text_message(Role.BUYER, "hi", 0))
    assert len(wm) == 1


def test_append_preserves_existing_turns():
    wm = make_wm(["a", "b", "c"])
    before = [render_turn(m) for m in wm.turns]
    wm.append_turn(text_message(Role.AGENT, "d", 3))
    assert len(wm) == 4
    assert [render_turn(m) for m in wm.turns[:3]] == before


def test_append_out_of_order_is_sequencing_error():
    wm = make_wm(["a", "b", "c"])
    with pytest.raises(SequencingError):
        wm.append_turn(text_message(Role.AGENT, "x", 5))


def test_append_only_prefix_property():
    wm = WorkingMemory("s1")
    snapshots = []
    for i in range(10):
        wm.append_turn(text_message(Role.BUYER, f"turn {i}", i))
        snapshots.append([m.text() for m in wm.turns])
    final = [m.text() for m in wm.turns]
    for i, snap in enumerate(snapshots):
        assert final[: i + 1] == snap


def test_message_requires_parts():
    with pytest.raises(SchemaError):
        Message(Role.BUYER, (), 0)


def test_render_small_transcript_fits_whole():
    wm = make_wm(["hello there", "how can I help?"])
    out = render_context(wm, 10_000)
    assert out == "[buyer] hello there\n[buyer] how can I help?"


def test_render_empty_is_empty_string():
    assert render_context(WorkingMemory("s1"), 100) == ""


def test_render_rejects_nonpositive_budget():
    with pytest.raises(UsageError):
        render_context(make_wm(["x"]), 0)


def test_render_truncation_keeps_most_recent_turns():
    # Oracle: compute the cumulative rendered length by hand for a 50-turn
    # transcript, then pick a budget that admits exactly the last 5 turns.
    texts = [f"message number {i:02d} with some padding" for i in range(50)]
    wm = make_wm(texts)
    lines = [f"[buyer] {t}" for t in texts]
    last_five_cost = sum(len(line) + 1 for line in lines[-5:])
    budget = len(ELISION_MARKER) + last_five_cost
    out = render_context(wm, budget)
    assert out.splitlines()[0] == ELISION_MARKER
    assert out.splitlines()[1:] == lines[-5:]
    assert len(out) <= budget
    # one character less drops one more whole turn
    tighter = render_context(wm, budget - 1)
    assert tighter.splitlines()[1:] == lines[-4:]


def test_render_deterministic():
    wm = make_wm([f"turn {i}" for i in range(20)])
    outputs = {render_context(wm, 200) for _ in range(50)}
    assert len(outputs) == 1


def test_transcript_round_trip(tmp_path):
    wm = make_wm(["first", "second"])
    wm.append_turn(text_message(Role.AGENT, "third", 2))
    path = tmp_path / "t.jsonl"
    write_transcript(wm, path)
    loaded = read_transcript(path)
    assert loaded.session_id == wm.session_id
    assert [render_turn(m) for m in loaded.turns] == [render_turn(m) for m in wm.turns]
    # writing the loaded copy reproduces identical bytes
    path2 = tmp_path / "t2.jsonl"
    write_transcript(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


# --- long-term store ---


def test_ltm_put_get_round_trip():
    store = LongTermStore()
    store.put(Namespace.PRODUCT, "P100", {"title": "kettle"})
    doc = store.get(Namespace.PRODUCT, "P100")
    assert doc is not None
    assert doc.body == {"title": "kettle"}


def test_ltm_last_write_wins():
    store = LongTermStore()
    store.put("product", "P100", {"title": "kettle"}, tick=1)
    store.put("product", "P100", {"title": "red kettle"}, tick=2)
    doc = store.get("product", "P100")
    assert doc.body == {"title": "red kettle"}
    assert doc.updated_at == 2


def test_ltm_updated_at_never_decreases():
    store = LongTermStore()
    store.put("order", "O1", "a", tick=5)
    store.put("order", "O1", "b", tick=3)
    assert store.get("order", "O1").updated_at == 5
    assert store.get("order", "O1").body == "b"


def test_ltm_unknown_namespace_is_schema_error():
    store = LongTermStore()
    with pytest.raises(SchemaError):
        store.put("weather", "today", "sunny")


def test_ltm_get_missing_is_none_not_error():
    store = LongTermStore()
    assert store.get("order", "missing") is None


def test_ltm_empty_key_rejected():
    store = LongTermStore()
    with pytest.raises(SchemaError):
        store.put("order", "", "body")


def test_search_single_match():
    store = LongTermStore()
    store.put("product", "P1", "red kettle")
    store.put("product", "P2", "blue mug")
    docs = store.search("product", "red kettle", limit=5)
    assert [d.key for d in docs] == ["P1"]


def test_search_tie_broken_by_key():
    # Hand count: "kettle mug" overlaps each body in exactly one token.
    store = LongTermStore()
    store.put("product", "P2", "blue mug")
    store.put("product", "P1", "red kettle")
    docs = store.search("product", "kettle mug", limit=5)
    assert [d.key for d in docs] == ["P1", "P2"]


def test_search_zero_overlap_excluded():
    store = LongTermStore()
    store.put("product", "P1", "red kettle")
    assert store.search("product", "socks", limit=5) == []


def test_search_ranking_and_limit():
    store = LongTermStore()
    store.put("product", "A", "steel kettle with lid")
    store.put("product", "B", "steel mug")
    store.put("product", "C", "wooden spoon")
    docs = store.search("product", "steel kettle", limit=2)
    assert [d.key for d in docs] == ["A", "B"]
    scores = []
    for d in docs:
        body_tokens = set(str(d.body).casefold().split())
        scores.append(sum(1 for t in {"steel", "kettle"} if t in body_tokens))
    assert scores == sorted(scores, reverse=True)
    assert all(s >= 1 for s in scores)


def test_search_requires_positive_limit():
    store = LongTermStore()
    with pytest.raises(UsageError):
        store.search("product", "kettle", limit=0)


def test_search_structured_body_tokens_include_keys_and_values():
    store = LongTermStore()
    store.put("product", "P1", {"material": "steel", "sizes": [2, 3]})
    assert [d.key for d in store.search("product", "steel", 5)] == ["P1"]
    assert [d.key for d in store.search("product", "material", 5)] == ["P1"]
