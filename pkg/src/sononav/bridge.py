"""Live engine runtime: UDP/OSC ingress, WebSocket state stream, egress.

Three logical activities share one asyncio loop: the network ingress
(OSC datagrams and inbound virtual-pose frames from the steering client)
feeds a bounded newest-wins queue; the engine task drains it one tick at
a time; every tick's state frame fans out to subscribers through
per-connection queues that drop their oldest frame when a consumer lags
(latest-state semantics). Synth parameters and transition events can
additionally be sent out as OSC messages for an external synthesizer.

State frames and inbound pose frames are JSON text; the pose frame fields
mirror the /sononav/pose OSC schema:

    out: {"type": "state", "seq", "snapshot", "timestamp_s", "target_id",
          "phase", "error": {e_x, e_y, e_phi, e_delta, d, theta} | null,
          "synth": {...} | null, "events": [str], "thresholds": {...}}
    in:  {"type": "pose", "target_id": int, "position": [x, y, z],
          "orientation": [w, x, y, z]}

A malformed inbound frame gets {"type": "error", "message"} back and the
connection stays open.
"""

from __future__ import annotations

import asyncio
import json
import logging
import socket

import numpy as np
import websockets

from .config import EngineConfig
from .engine import NavigationEngine
from .geometry import Pose
from .mapping import earcons_for
from .osc import MalformedPacketError, OscMessage, decode_osc, encode_osc
from .session import (
    EVENT_ADDRESS,
    PARAMS_ADDRESS,
    POSE_ADDRESS,
    SessionLog,
    SessionRecord,
    TargetPlan,
    ingest_pose,
    synth_params_to_dict,
)
from .synth import StreamMixer

log = logging.getLogger("sononav.bridge")

_SUBSCRIBER_QUEUE = 16  # frames buffered per subscriber before dropping oldest


def _thresholds_dict(plan: TargetPlan) -> dict:
    t = plan.thresholds
    return {"working_radius_mm": t.working_radius_mm,
            "working_angle_deg": t.working_angle_deg,
            "target_mm": t.target_mm, "target_deg": t.target_deg,
            "transition_mm": t.transition_mm, "transition_deg": t.transition_deg}


def state_frame(record: SessionRecord, seq: int, plan: TargetPlan,
                snapshot: bool = False) -> dict:
    err = record.error
    return {
        "type": "state",
        "seq": seq,
        "snapshot": snapshot,
        "timestamp_s": record.timestamp_s,
        "target_id": record.target_id,
        "target_label": plan.labels[record.target_id],
        "phase": record.phase.value,
        "error": {"e_x": err.e_x, "e_y": err.e_y, "e_phi": err.e_phi,
                  "e_delta": err.e_delta, "d": err.d, "theta": err.theta},
        "synth": synth_params_to_dict(record.synth),
        "events": [str(e) for e in record.events],
        "thresholds": _thresholds_dict(plan),
    }


def _idle_frame(plan: TargetPlan) -> dict:
    return {
        "type": "state", "seq": 0, "snapshot": True, "timestamp_s": 0.0,
        "target_id": 0, "target_label": plan.labels[0], "phase": "IP",
        "error": None, "synth": None, "events": [],
        "thresholds": _thresholds_dict(plan),
    }


def parse_pose_frame(data: dict, plan: TargetPlan) -> tuple[Pose, int]:
    """Validate an inbound virtual-pose frame (same contract as OSC pose)."""
    message = OscMessage(POSE_ADDRESS, (
        int(data["target_id"]),
        *(float(v) for v in data["position"]),
        *(float(v) for v in data["orientation"])))
    return ingest_pose(message, plan)


class _OscIngress(asyncio.DatagramProtocol):
    def __init__(self, server: "EngineServer"):
        self.server = server

    def datagram_received(self, data: bytes, addr) -> None:
        try:
            message = decode_osc(data)
            if message.address != POSE_ADDRESS:
                return
            pose, target_id = ingest_pose(message, self.server.plan)
        except (MalformedPacketError, ValueError) as exc:
            self.server.dropped_packets += 1
            log.debug("dropped packet from %s: %s", addr, exc)
            return
        self.server.submit_pose(pose, target_id)


class EngineServer:
    """One engine fed by the network, observed by stream subscribers.

    The three output sinks (OSC parameter egress, state-stream frames,
    local audio) all hang off the same tick: pass `audio_sink` (anything
    with write(samples)/close()) to render the session live through the
    same mixer path the offline renderer uses.
    """

    def __init__(self, plan: TargetPlan, config: EngineConfig = EngineConfig(),
                 audio_sink=None):
        self.plan = plan
        self.config = config
        self.engine = NavigationEngine(plan, config)
        self.records: list[SessionRecord] = []
        self.dropped_packets = 0
        self._queue: asyncio.Queue = asyncio.Queue(maxsize=64)
        self._subscribers: set[asyncio.Queue] = set()
        self._latest: dict = _idle_frame(plan)
        self._seq = 0
        self._egress: socket.socket | None = None
        self._egress_addr = None
        self._udp_transport = None
        self._ws_server = None
        self._engine_task: asyncio.Task | None = None
        self._audio_sink = audio_sink
        self._mixer = StreamMixer(config.synth) if audio_sink is not None else None
        self._tick_frames = round(config.synth.sample_rate_hz / config.tick_rate_hz)
        if config.network.osc_out:
            host, _, port = config.network.osc_out.rpartition(":")
            self._egress = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
            self._egress_addr = (host or "127.0.0.1", int(port))

    # -- ingress -----------------------------------------------------------

    def submit_pose(self, pose: Pose, target_id: int) -> None:
        """Bounded newest-wins handoff into the engine task."""
        while True:
            try:
                self._queue.put_nowait((pose, target_id))
                return
            except asyncio.QueueFull:
                try:
                    self._queue.get_nowait()  # shed the oldest tick
                except asyncio.QueueEmpty:
                    pass

    # -- engine ------------------------------------------------------------

    def process_now(self, pose: Pose, target_id: int) -> dict:
        """Synchronous single tick (ingress thread == engine owner here)."""
        record = self.engine.process(pose, target_id)
        self.records.append(record)
        self._seq += 1
        frame = state_frame(record, self._seq, self.plan)
        self._latest = frame
        self._broadcast(frame)
        self._send_egress(record)
        if self._mixer is not None:
            self._mixer.set_params(record.synth)
            for spec in earcons_for(list(record.events), self.config.mapping):
                self._mixer.enqueue_earcon(spec)
            self._audio_sink.write(self._mixer.render(self._tick_frames))
        return frame

    async def _engine_loop(self) -> None:
        while True:
            pose, target_id = await self._queue.get()
            self.process_now(pose, target_id)

    def _broadcast(self, frame: dict) -> None:
        for queue in self._subscribers:
            if queue.full():
                try:
                    queue.get_nowait()
                except asyncio.QueueEmpty:
                    pass
            queue.put_nowait(frame)

    def _send_egress(self, record: SessionRecord) -> None:
        if self._egress is None:
            return
        params = record.synth
        message = OscMessage(PARAMS_ADDRESS, (
            record.target_id, record.phase.value, params.mode.value,
            float(np.float32(params.fundamental_hz)),
            float(np.float32(params.pulse_interval_s))))
        self._egress.sendto(encode_osc(message), self._egress_addr)
        for event in record.events:
            self._egress.sendto(
                encode_osc(OscMessage(EVENT_ADDRESS,
                                      (record.target_id, str(event)))),
                self._egress_addr)

    # -- subscribers ---------------------------------------------------------

    async def handle_ws(self, websocket) -> None:
        queue: asyncio.Queue = asyncio.Queue(maxsize=_SUBSCRIBER_QUEUE)
        self._subscribers.add(queue)
        # the snapshot additionally carries the plan so a steering client
        # can map its 4-DOF input onto world poses
        await websocket.send(json.dumps(
            {**self._latest, "snapshot": True, "plan": self.plan.to_dict()}))

        async def sender():
            while True:
                frame = await queue.get()
                await websocket.send(json.dumps(frame))

        sender_task = asyncio.create_task(sender())
        try:
            async for raw in websocket:
                try:
                    data = json.loads(raw)
                    if not isinstance(data, dict):
                        raise ValueError("frame must be a JSON object")
                    if data.get("type") != "pose":
                        raise ValueError(f"unknown frame type {data.get('type')!r}")
                    pose, target_id = parse_pose_frame(data, self.plan)
                except (ValueError, KeyError, TypeError) as exc:
                    await websocket.send(json.dumps(
                        {"type": "error", "message": str(exc)}))
                    continue
                self.submit_pose(pose, target_id)
        except websockets.ConnectionClosed:
            pass
        finally:
            sender_task.cancel()
            self._subscribers.discard(queue)

    # -- lifecycle -----------------------------------------------------------

    async def start(self) -> tuple[int, int]:
        """Bind sockets and start the engine task.

        Returns the actual (osc_port, bridge_port); pass port 0 in the
        config to bind ephemeral ports.
        """
        loop = asyncio.get_running_loop()
        net = self.config.network
        self._udp_transport, _ = await loop.create_datagram_endpoint(
            lambda: _OscIngress(self),
            local_addr=(net.osc_host, net.osc_port))
        self._ws_server = await websockets.serve(
            self.handle_ws, net.bridge_host, net.bridge_port)
        self._engine_task = asyncio.create_task(self._engine_loop())
        osc_port = self._udp_transport.get_extra_info("sockname")[1]
        bridge_port = self._ws_server.sockets[0].getsockname()[1]
        log.info("engine serving: OSC udp://%s:%d, bridge ws://%s:%d",
                 net.osc_host, osc_port, net.bridge_host, bridge_port)
        return osc_port, bridge_port

    async def stop(self) -> None:
        if self._engine_task is not None:
            self._engine_task.cancel()
        if self._udp_transport is not None:
            self._udp_transport.close()
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
        if self._egress is not None:
            self._egress.close()
        if self._audio_sink is not None:
            self._audio_sink.close()

    def session_log(self) -> SessionLog:
        return SessionLog(plan=self.plan, records=list(self.records),
                          meta={"config": self.config.to_dict(),
                                "source": "serve"})


async def serve_until(plan: TargetPlan, config: EngineConfig,
                      stop: asyncio.Event) -> SessionLog:
    """Run the server until `stop` is set; returns the recorded session."""
    server = EngineServer(plan, config)
    await server.start()
    try:
        await stop.wait()
    finally:
        await server.stop()
    return server.session_log()
