"""Deterministic discrete-event harness: clock, transport, faults, metrics.

Events execute in strict (deliver_at, seq) order; seq is assigned at
scheduling time, so ties break by scheduling order and a run is a pure
function of (wiring, seed). All randomness is drawn from named streams
derived from the scenario seed, split per (node, purpose) and per link,
so adding a party never perturbs unrelated draws.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Callable, Protocol

from . import messages
from .domain import AuthStatus


class RngRegistry:
    """Named deterministic random streams, all derived from one seed."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def stream(self, name: str) -> random.Random:
        rng = self._streams.get(name)
        if rng is None:
            digest = hashlib.blake2b(
                f"{self.seed}|{name}".encode("utf-8"), digest_size=8
            ).digest()
            rng = random.Random(int.from_bytes(digest, "big"))
            self._streams[name] = rng
        return rng

    def draw_bytes(self, name: str, n: int) -> bytes:
        return self.stream(name).getrandbits(8 * n).to_bytes(n, "big")


@dataclass(frozen=True)
class LatencyParams:
    base_ms: int = 10
    jitter_ms: int = 0


@dataclass(frozen=True)
class PartitionWindow:
    src: str
    dst: str
    start_ms: int
    end_ms: int


@dataclass(frozen=True)
class FaultPlan:
    default_latency: LatencyParams = LatencyParams()
    link_latency: dict[str, LatencyParams] = field(default_factory=dict)
    drop_probability: float = 0.0
    partitions: tuple[PartitionWindow, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValueError("drop probability must lie in [0, 1]")
        for w in self.partitions:
            if w.end_ms < w.start_ms:
                raise ValueError("partition window must have start <= end")

    def latency_for(self, src: str, dst: str) -> LatencyParams:
        return self.link_latency.get(f"{src}->{dst}", self.default_latency)


@dataclass(frozen=True)
class FaultDecision:
    action: str  # "deliver" | "drop"
    deliver_at: int = 0


def inject_fault(
    plan: FaultPlan, src: str, dst: str, send_time: int, rng: RngRegistry
) -> FaultDecision:
    """Pure link-fault decision for one message; consumes per-link streams."""
    for w in plan.partitions:
        if w.src == src and w.dst == dst and w.start_ms <= send_time < w.end_ms:
            return FaultDecision("drop")
    if rng.stream(f"link|{src}->{dst}|drop").random() < plan.drop_probability:
        return FaultDecision("drop")
    lat = plan.latency_for(src, dst)
    jitter = rng.stream(f"link|{src}->{dst}|latency").randint(0, lat.jitter_ms) if lat.jitter_ms else 0
    return FaultDecision("deliver", send_time + lat.base_ms + jitter)


@dataclass
class RunMetrics:
    cidr_auth_requests: int = 0
    cidr_fetch_requests: int = 0
    zonal_local_hits: int = 0
    zonal_cache_hits: int = 0
    responses_by_status: dict[AuthStatus, int] = field(
        default_factory=lambda: {status: 0 for status in AuthStatus}
    )
    messages_total: int = 0
    messages_delivered: int = 0
    messages_dropped: int = 0

    def to_lines(self) -> list[str]:
        lines = [
            f"cidr_auth_requests = {self.cidr_auth_requests}",
            f"cidr_fetch_requests = {self.cidr_fetch_requests}",
            f"zonal_local_hits = {self.zonal_local_hits}",
            f"zonal_cache_hits = {self.zonal_cache_hits}",
        ]
        lines += [
            f"responses_by_status[{status.value}] = {count}"
            for status, count in self.responses_by_status.items()
        ]
        lines += [
            f"messages_total = {self.messages_total}",
            f"messages_delivered = {self.messages_delivered}",
            f"messages_dropped = {self.messages_dropped}",
        ]
        return lines


class Node(Protocol):
    name: str

    def receive(self, ctx: "NodeContext", msg: messages.Message) -> None: ...


class NodeContext:
    """Per-delivery view of the simulation handed to a node."""

    def __init__(self, sim: "Simulation", node_name: str) -> None:
        self._sim = sim
        self._node_name = node_name

    @property
    def now(self) -> int:
        return self._sim.now

    @property
    def metrics(self) -> RunMetrics:
        return self._sim.metrics

    def send(self, destination: str, msg: messages.Message) -> None:
        self._sim.send(self._node_name, destination, msg)

    def schedule_self(self, delay_ms: int, msg: messages.Message) -> None:
        self._sim.schedule_self(self._node_name, delay_ms, msg)

    def rng(self, purpose: str) -> random.Random:
        return self._sim.rng.stream(f"{self._node_name}|{purpose}")

    def draw_bytes(self, purpose: str, n: int) -> bytes:
        return self._sim.rng.draw_bytes(f"{self._node_name}|{purpose}", n)


@dataclass(order=True)
class _QueueEntry:
    deliver_at: int
    seq: int
    kind: str = field(compare=False)  # "msg" | "self" | "call"
    source: str = field(compare=False, default="")
    destination: str = field(compare=False, default="")
    payload: bytes = field(compare=False, default=b"")
    fn: Callable[[], None] | None = field(compare=False, default=None)


class Simulation:
    """Single-threaded authoritative scheduler over registered nodes."""

    def __init__(self, seed: int, fault_plan: FaultPlan | None = None) -> None:
        self.rng = RngRegistry(seed)
        self.fault_plan = fault_plan or FaultPlan()
        self.metrics = RunMetrics()
        self.trace: list[str] = []
        self.now = 0
        self.nodes: dict[str, Node] = {}
        self.sp_surfaces: dict[str, bytearray] = {}
        self._queue: list[_QueueEntry] = []
        self._seq = 0

    def add_node(self, node: Node, capture_surface: bool = False) -> None:
        if node.name in self.nodes:
            raise ValueError(f"duplicate node name {node.name!r}")
        self.nodes[node.name] = node
        if capture_surface:
            self.sp_surfaces[node.name] = bytearray()

    def _push(self, entry: _QueueEntry) -> None:
        heapq.heappush(self._queue, entry)

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def send(self, source: str, destination: str, msg: messages.Message) -> None:
        if destination not in self.nodes:
            raise ValueError(f"unknown destination node {destination!r}")
        payload = messages.encode(msg)
        self.metrics.messages_total += 1
        decision = inject_fault(self.fault_plan, source, destination, self.now, self.rng)
        if decision.action == "drop":
            self.metrics.messages_dropped += 1
            return
        self._push(
            _QueueEntry(
                deliver_at=decision.deliver_at,
                seq=self._next_seq(),
                kind="msg",
                source=source,
                destination=destination,
                payload=payload,
            )
        )

    def schedule_self(self, node_name: str, delay_ms: int, msg: messages.Message) -> None:
        """Self-timer: bypasses link faults, still totally ordered."""
        self.metrics.messages_total += 1
        self._push(
            _QueueEntry(
                deliver_at=self.now + delay_ms,
                seq=self._next_seq(),
                kind="self",
                source=node_name,
                destination=node_name,
                payload=messages.encode(msg),
            )
        )

    def call_at(self, at_ms: int, fn: Callable[[], None]) -> None:
        """Scenario-driver action (not a network message; never traced)."""
        if at_ms < self.now:
            raise ValueError("cannot schedule a call in the past")
        self._push(_QueueEntry(deliver_at=at_ms, seq=self._next_seq(), kind="call", fn=fn))

    def run(self, max_events: int | None = None) -> None:
        executed = 0
        while self._queue:
            entry = heapq.heappop(self._queue)
            self.now = max(self.now, entry.deliver_at)
            if entry.kind == "call":
                assert entry.fn is not None
                entry.fn()
            else:
                msg = messages.decode(entry.payload)
                txid = messages.transaction_id_of(msg)
                self.trace.append(
                    f"{entry.deliver_at} {entry.seq} {entry.source} {entry.destination} "
                    f"{messages.type_name(msg)} {txid.hex() if txid else '-'}"
                )
                self.metrics.messages_delivered += 1
                surface = self.sp_surfaces.get(entry.destination)
                if surface is not None:
                    surface.extend(entry.payload)
                node = self.nodes[entry.destination]
                node.receive(NodeContext(self, entry.destination), msg)
            executed += 1
            if max_events is not None and executed >= max_events:
                raise RuntimeError(f"event budget of {max_events} exhausted")
