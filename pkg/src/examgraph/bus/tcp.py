"""TCP transport: the bus process runs a hub; remote agents connect as
clients, announce a name plus subscription patterns, then exchange frames.

Discovery is connect-and-announce: the first frame on a connection must be
topic ``system/announce`` with payload ``{"name": ..., "subscriptions":
[...]}``. The hub replies on the same topic with ``{"ok": true/false}``.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading

from ..errors import BadPattern, DuplicateName, ExamGraphError, MalformedFrame
from .codec import FrameReader, encode_frame
from .core import Message, MessageBus, validate_topic

logger = logging.getLogger(__name__)

ANNOUNCE_TOPIC = "system/announce"


class _Connection:
    def __init__(self, server: "TcpBusServer", sock: socket.socket, peer):
        self.server = server
        self.sock = sock
        self.peer = peer
        self.name: str | None = None
        self.outbox: queue.Queue = queue.Queue(maxsize=server.bus._queue_capacity)
        self.subscriptions = []
        self.alive = True

    def send_message(self, message: Message) -> None:
        try:
            self.outbox.put_nowait(message)
        except queue.Full:
            logger.warning("dropping frame to %s: outbox full", self.peer)

    def close(self, flush: bool = False) -> None:
        """Tear down the connection. With ``flush`` the writer thread sends
        queued frames (e.g. an announce rejection) before the socket dies."""
        if not self.alive:
            return
        self.alive = False
        for sub in self.subscriptions:
            sub.close()
        if self.name is not None:
            self.server.bus.release_name(self.name)
            self.name = None
        self.outbox.put(None)  # writer closes the socket once drained
        if not flush:
            try:
                self.sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass


class TcpBusServer:
    """Hub exposing an in-process bus over TCP."""

    def __init__(self, bus: MessageBus, host: str = "127.0.0.1", port: int = 0):
        self.bus = bus
        self.host = host
        self._requested_port = port
        self.port: int | None = None
        self._listener: socket.socket | None = None
        self._connections: list[_Connection] = []
        self._lock = threading.Lock()
        self._running = False

    def start(self) -> None:
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.host, self._requested_port))
        listener.listen(16)
        self._listener = listener
        self.port = listener.getsockname()[1]
        self._running = True
        threading.Thread(target=self._accept_loop, name="tcp-bus-accept",
                         daemon=True).start()

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while self._running:
            try:
                sock, peer = self._listener.accept()
            except OSError:
                break
            conn = _Connection(self, sock, peer)
            with self._lock:
                self._connections.append(conn)
            threading.Thread(target=self._read_loop, args=(conn,),
                             name=f"tcp-bus-read-{peer}", daemon=True).start()
            threading.Thread(target=self._write_loop, args=(conn,),
                             name=f"tcp-bus-write-{peer}", daemon=True).start()

    def _write_loop(self, conn: _Connection) -> None:
        while True:
            message = conn.outbox.get()
            if message is None:
                break
            if not isinstance(message, Message):
                continue  # subscription-close sentinel
            try:
                conn.sock.sendall(encode_frame(message))
            except (OSError, ExamGraphError):
                break
        try:
            conn.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        conn.sock.close()

    def _read_loop(self, conn: _Connection) -> None:
        reader = FrameReader()
        try:
            while conn.alive:
                chunk = conn.sock.recv(65536)
                if not chunk:
                    break
                for message in reader.feed(chunk):
                    self._handle_frame(conn, message)
        except MalformedFrame as exc:
            self._send_error(conn, "malformed_frame", str(exc))
        except OSError:
            pass
        finally:
            conn.close()
            with self._lock:
                if conn in self._connections:
                    self._connections.remove(conn)

    def _send_error(self, conn: _Connection, code: str, text: str) -> None:
        conn.send_message(Message(topic="system/errors", correlation_id="",
                                  sender="bus", seq=0,
                                  payload={"error_code": code, "message": text}))

    def _handle_frame(self, conn: _Connection, message: Message) -> None:
        if conn.name is None:
            self._handle_announce(conn, message)
            return
        if message.sender != conn.name:
            self._send_error(conn, "bad_sender",
                             f"frames must carry sender {conn.name!r}")
            return
        try:
            self.bus.publish(message.topic, message.payload,
                             sender=message.sender,
                             correlation_id=message.correlation_id)
        except ExamGraphError as exc:
            self._send_error(conn, exc.code, str(exc))

    def _handle_announce(self, conn: _Connection, message: Message) -> None:
        if message.topic != ANNOUNCE_TOPIC:
            self._send_error(conn, "protocol_error",
                             "first frame must announce the agent")
            conn.close(flush=True)
            return
        payload = message.payload or {}
        name = payload.get("name")
        patterns = payload.get("subscriptions", [])
        if not isinstance(name, str) or not name:
            self._send_error(conn, "protocol_error", "announce needs a name")
            conn.close(flush=True)
            return
        try:
            for pattern in patterns:
                validate_topic(pattern, allow_wildcard=True)
            self.bus.claim_name(name)
        except (BadPattern, DuplicateName) as exc:
            conn.send_message(Message(
                topic=ANNOUNCE_TOPIC, correlation_id=message.correlation_id,
                sender="bus", seq=0,
                payload={"ok": False, "error_code": exc.code, "message": str(exc)}))
            conn.close(flush=True)
            return
        conn.name = name
        for pattern in patterns:
            conn.subscriptions.append(
                self.bus.subscribe(name, pattern, shared_queue=conn.outbox))
        conn.send_message(Message(
            topic=ANNOUNCE_TOPIC, correlation_id=message.correlation_id,
            sender="bus", seq=0, payload={"ok": True, "name": name}))

    def stop(self) -> None:
        self._running = False
        if self._listener is not None:
            try:
                self._listener.close()
            except OSError:
                pass
        with self._lock:
            connections = list(self._connections)
            self._connections.clear()
        for conn in connections:
            conn.close()


class TcpBusClient:
    """Remote peer of a hub; publishes frames and receives matching ones."""

    def __init__(self, host: str, port: int, name: str,
                 subscriptions: list[str] | None = None, timeout: float = 10.0):
        self.name = name
        self._seq: dict[str, int] = {}
        self._inbox: queue.Queue = queue.Queue()
        self._reader = FrameReader()
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._sock.settimeout(None)
        self._alive = True
        self._send(Message(topic=ANNOUNCE_TOPIC, correlation_id="",
                           sender=name, seq=0,
                           payload={"name": name,
                                    "subscriptions": list(subscriptions or [])}))
        self._thread = threading.Thread(target=self._recv_loop,
                                        name=f"tcp-client-{name}", daemon=True)
        self._thread.start()
        ack = self.get(timeout=timeout)
        if ack is None or ack.topic != ANNOUNCE_TOPIC:
            self.close()
            raise MalformedFrame("hub did not acknowledge announce")
        if not ack.payload.get("ok"):
            code = ack.payload.get("error_code", "protocol_error")
            self.close()
            if code == "duplicate_name":
                raise DuplicateName(ack.payload.get("message", name))
            raise MalformedFrame(ack.payload.get("message", "announce rejected"))

    def _send(self, message: Message) -> None:
        self._sock.sendall(encode_frame(message))

    def _recv_loop(self) -> None:
        try:
            while self._alive:
                chunk = self._sock.recv(65536)
                if not chunk:
                    break
                for message in self._reader.feed(chunk):
                    self._inbox.put(message)
        except (OSError, ExamGraphError):
            pass
        finally:
            self._inbox.put(None)

    def publish(self, topic: str, payload, correlation_id: str = "") -> None:
        validate_topic(topic, allow_wildcard=False)
        seq = self._seq.get(topic, 0) + 1
        self._seq[topic] = seq
        self._send(Message(topic=topic, correlation_id=correlation_id,
                           sender=self.name, seq=seq, payload=payload))

    def get(self, timeout: float | None = None) -> Message | None:
        """Next received frame; None when the connection has closed.
        Raises queue.Empty on timeout."""
        value = self._inbox.get(timeout=timeout)
        return value

    def close(self) -> None:
        self._alive = False
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()
