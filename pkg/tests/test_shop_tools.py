import json

import pytest

from shopclerk.memory import Namespace
from shopclerk.placeholders import PlaceholderTable, abstract_text
from shopclerk.shop_tools import build_registry
from shopclerk.toolkit import ActionTrace, ToolCall
from shopclerk.vision import (
    CategoryRule,
    CountingVision,
    FixtureVisionBackend,
    ImageAsset,
    IntegrationStrategy,
)
from shopclerk.world import seed_store, world_from_dict

PHOTO = "https://img.shop.example/uploads/kettle-crack-2291.jpg"

WORLD_SEED = {
    "products": {
        "P100": {"title": "Kettle", "attributes": {"capacity_l": 2},
                  "price_cents": 3499, "stock": 4},
    },
    "orders": {
        "O1": {"buyer_id": "B1", "items": [{"product_id": "P100", "qty": 1}],
                "status": "delivered", "address": "1 Elm St"},
    },
    "shipments": {
        "O1": [
            {"tick": 1, "location": "depot", "status": "picked_up"},
            {"tick": 2, "location": "hub", "status": "in_transit"},
            {"tick": 3, "location": "courier", "status": "out_for_delivery"},
        ],
    },
}


@pytest.fixture()
def session_bits():
    world = world_from_dict(WORLD_SEED)
    store = seed_store(world)
    table = PlaceholderTable()
    asset = ImageAsset(PHOTO, {"default": "a kettle", "damage": "cracked base"},
                       rules=(CategoryRule("damage", ("damage",)),))
    vision = CountingVision(FixtureVisionBackend({PHOTO: asset}))
    registry = build_registry(world, store, table, vision)
    return world, store, table, vision, registry


def invoke(registry, tool, trace=None, **arguments):
    return registry.invoke(ToolCall("c1", tool, arguments), trace)


def test_product_info_returns_seeded_document(session_bits, data_dir):
    # oracle: the document as seeded in the fixture world literal
    _, _, _, _, registry = session_bits
    result = invoke(registry, "product_info", product_id="P100")
    assert not result.is_error
    payload = json.loads(result.text())
    assert payload["title"] == WORLD_SEED["products"]["P100"]["title"]
    assert payload["attributes"] == WORLD_SEED["products"]["P100"]["attributes"]
    assert payload["price_cents"] == 3499


def test_product_info_missing_required_field(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "product_info")
    assert result.is_error
    assert result.text() == "invalid_arguments: product_id"


def test_product_info_unknown_id(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "product_info", product_id="P999")
    assert result.is_error
    assert result.text().startswith("not_found")


def test_unknown_tool_result(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "teleport")
    assert result.is_error
    assert result.text() == "unknown_tool: teleport"


def test_order_lookup_and_logistics_order(session_bits):
    _, _, _, _, registry = session_bits
    order = json.loads(invoke(registry, "order_lookup", order_id="O1").text())
    assert order["status"] == "delivered"
    track = json.loads(invoke(registry, "logistics_track", order_id="O1").text())
    assert [e["tick"] for e in track["events"]] == [1, 2, 3]


def test_order_update_applies_and_syncs_store(session_bits):
    world, store, _, _, registry = session_bits
    result = invoke(registry, "order_update", order_id="O1", action="request_refund")
    assert not result.is_error
    assert world.orders["O1"].status.value == "refund_requested"
    assert store.get(Namespace.ORDER, "O1").body["status"] == "refund_requested"


def test_order_update_illegal_transition(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "order_update", order_id="O1", action="cancel")
    assert result.is_error
    assert result.text().startswith("illegal_transition")


def test_order_update_rejects_unknown_action_by_schema(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "order_update", order_id="O1", action="destroy")
    assert result.is_error
    assert result.text().startswith("invalid_arguments")


def test_multimodal_describe_via_table(session_bits):
    _, _, table, vision, registry = session_bits
    abstract_text(f"photo {PHOTO}", table)
    result = invoke(registry, "multimodal_describe",
                    placeholder="[Image 1]", instruction="Describe the damage shown in the image")
    assert not result.is_error
    assert result.text() == "cracked base"
    assert vision.calls == 1


def test_multimodal_describe_unknown_placeholder(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "multimodal_describe", placeholder="[Image 7]")
    assert result.is_error
    assert result.text() == "unknown_placeholder: [Image 7]"


def test_describe_tool_absent_in_planner_mode():
    world = world_from_dict(WORLD_SEED)
    registry = build_registry(world, seed_store(world), PlaceholderTable(),
                              CountingVision(FixtureVisionBackend({})),
                              strategy=IntegrationStrategy.PLANNER)
    result = invoke(registry, "multimodal_describe", placeholder="[Image 1]")
    assert result.is_error
    assert result.text().startswith("unknown_tool")


def test_memory_tools_round_trip(session_bits):
    world, store, _, _, registry = session_bits
    put = invoke(registry, "memory_put", namespace="buyer_profile", key="B1",
                 body_json=json.dumps({"tone": "patient"}))
    assert not put.is_error
    got = json.loads(invoke(registry, "memory_get", namespace="buyer_profile", key="B1").text())
    assert got == {"found": True, "key": "B1", "body": {"tone": "patient"}}
    missing = json.loads(invoke(registry, "memory_get", namespace="order", key="O9").text())
    assert missing["found"] is False


def test_memory_search_tool(session_bits):
    _, _, _, _, registry = session_bits
    rows = json.loads(invoke(registry, "memory_search", namespace="product",
                             query="kettle", limit=3).text())
    assert [r["key"] for r in rows] == ["P100"]


def test_memory_put_bad_namespace(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "memory_put", namespace="weather", key="k", body_json="{}")
    assert result.is_error


def test_status_note_noop(session_bits):
    _, _, _, _, registry = session_bits
    result = invoke(registry, "status_note", note="waiting on buyer")
    assert not result.is_error


def test_read_tools_do_not_mutate(session_bits):
    world, _, _, _, registry = session_bits
    invoke(registry, "product_info", product_id="P100")
    invoke(registry, "order_lookup", order_id="O1")
    invoke(registry, "logistics_track", order_id="O1")
    assert world.mutations == []


def test_trace_records_every_call(session_bits):
    _, _, _, _, registry = session_bits
    trace = ActionTrace()
    invoke(registry, "product_info", trace, product_id="P100")
    invoke(registry, "order_update", trace, order_id="O1", action="request_refund")
    assert trace.count("tool_call") == 2
    assert trace.count("tool_result") == 2
