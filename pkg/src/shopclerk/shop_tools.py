"""The shop's tool surface: product, order, logistics, and visual lookup.

External actions read or mutate the world; internal actions touch the
long-term store. All handlers return compact JSON text so results stay
greppable in transcripts and traces.
"""

import json

from . import placeholders
from .memory import LongTermStore, Namespace
from .toolkit import ToolDescriptor, ToolRegistry
from .vision import IntegrationStrategy
from .world import ORDER_ACTIONS, World


def _dump(payload) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def _schema(properties: dict, required: list[str]) -> dict:
    return {"type": "object", "properties": properties, "required": required}


def build_registry(
    world: World,
    store: LongTermStore,
    table: placeholders.PlaceholderTable,
    vision,
    strategy: IntegrationStrategy = IntegrationStrategy.TOOL,
) -> ToolRegistry:
    """Register the domain tools plus internal memory actions for one session."""
    registry = ToolRegistry()

    def product_info(args: dict) -> str:
        product = world.products.get(args["product_id"])
        if product is None:
            return_error(f"not_found: product {args['product_id']}")
        return _dump(product.to_doc())

    def order_lookup(args: dict) -> str:
        order = world.orders.get(args["order_id"])
        if order is None:
            return_error(f"not_found: order {args['order_id']}")
        return _dump(order.to_doc())

    def order_update(args: dict) -> str:
        event = world.apply_order_action(args["order_id"], args["action"])
        store.put(Namespace.ORDER, args["order_id"], world.orders[args["order_id"]].to_doc(),
                  tick=world.clock)
        return _dump({"ok": True, "order_id": args["order_id"], "status": event["to"]})

    def logistics_track(args: dict) -> str:
        order_id = args["order_id"]
        if order_id not in world.orders:
            return_error(f"not_found: order {order_id}")
        events = [e.to_doc() for e in world.shipments.get(order_id, [])]
        return _dump({"order_id": order_id, "events": events})

    def multimodal_describe(args: dict) -> str:
        return placeholders.resolve(
            args["placeholder"], table, vision, store, args.get("instruction")
        )

    def memory_get(args: dict) -> str:
        doc = store.get(args["namespace"], args["key"])
        if doc is None:
            return _dump({"found": False, "key": args["key"]})
        return _dump({"found": True, "key": doc.key, "body": doc.body})

    def memory_search(args: dict) -> str:
        docs = store.search(args["namespace"], args["query"], args.get("limit", 3))
        return _dump([{"key": d.key, "body": d.body} for d in docs])

    def memory_put(args: dict) -> str:
        body = json.loads(args["body_json"])
        store.put(args["namespace"], args["key"], body, tick=world.clock)
        return _dump({"ok": True, "key": args["key"]})

    def status_note(args: dict) -> str:
        # intentional no-op hook for internal bookkeeping actions
        return _dump({"ok": True, "note": args.get("note", "")})

    namespace_enum = {"type": "string", "enum": [ns.value for ns in Namespace]}

    registry.register(
        ToolDescriptor(
            "product_info",
            "Look up one product's title, attributes, price, and stock.",
            _schema({"product_id": {"type": "string"}}, ["product_id"]),
        ),
        product_info,
    )
    registry.register(
        ToolDescriptor(
            "order_lookup",
            "Look up an order's items, status, and shipping address.",
            _schema({"order_id": {"type": "string"}}, ["order_id"]),
        ),
        order_lookup,
    )
    registry.register(
        ToolDescriptor(
            "order_update",
            "Apply an order action: cancel, request_refund, or approve_refund.",
            _schema(
                {
                    "order_id": {"type": "string"},
                    "action": {"type": "string", "enum": sorted(ORDER_ACTIONS)},
                },
                ["order_id", "action"],
            ),
        ),
        order_update,
    )
    registry.register(
        ToolDescriptor(
            "logistics_track",
            "List an order's shipment events in tick order.",
            _schema({"order_id": {"type": "string"}}, ["order_id"]),
        ),
        logistics_track,
    )
    if strategy is IntegrationStrategy.TOOL:
        registry.register(
            ToolDescriptor(
                "multimodal_describe",
                "Describe what an image or video placeholder shows, guided by an instruction.",
                _schema(
                    {
                        "placeholder": {"type": "string"},
                        "instruction": {"type": "string"},
                    },
                    ["placeholder"],
                ),
            ),
            multimodal_describe,
        )
    registry.register(
        ToolDescriptor(
            "memory_get",
            "Fetch one knowledge document by namespace and key.",
            _schema({"namespace": namespace_enum, "key": {"type": "string"}}, ["namespace", "key"]),
        ),
        memory_get,
    )
    registry.register(
        ToolDescriptor(
            "memory_search",
            "Rank knowledge documents in a namespace by query-token overlap.",
            _schema(
                {
                    "namespace": namespace_enum,
                    "query": {"type": "string"},
                    "limit": {"type": "integer"},
                },
                ["namespace", "query"],
            ),
        ),
        memory_search,
    )
    registry.register(
        ToolDescriptor(
            "memory_put",
            "Store a knowledge document; the body is a JSON-encoded string.",
            _schema(
                {
                    "namespace": namespace_enum,
                    "key": {"type": "string"},
                    "body_json": {"type": "string"},
                },
                ["namespace", "key", "body_json"],
            ),
        ),
        memory_put,
    )
    registry.register(
        ToolDescriptor(
            "status_note",
            "Record an internal status note; has no effect on the world.",
            _schema({"note": {"type": "string"}}, []),
        ),
        status_note,
    )
    return registry


def return_error(message: str):
    """Raise inside a handler; invoke() turns it into an is_error result."""
    raise LookupError(message)
