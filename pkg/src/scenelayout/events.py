"""Line-oriented TCP event protocol between headset and decode server.

Wire format (UTF-8, LF-terminated, space-delimited)::

    client -> server:  START <trial_id> <target_class> <sample_index>
    client -> server:  END <trial_id> <sample_index>
    server -> client:  RESULT <trial_id> <predicted_class>
    server -> client:  ERR <reason>

One trial may be in flight per connection: a second START before the
matching END is answered with ``ERR trial_in_flight``, an END without a
matching START with ``ERR unmatched_end``.  Malformed lines earn
``ERR malformed`` and the connection stays open.

The server owns a ring buffer (fed by the acquisition path, which in
this package is a synthetic streamer) and calls a decode function on the
online window extracted at each END event.
"""

from __future__ import annotations

import socket
import socketserver
import threading

from .session import ONLINE_WINDOW_S, BufferRangeError, extract_epoch


class ProtocolError(RuntimeError):
    """Raised client-side on replies that violate the protocol."""


def format_start(trial_id, target_class, sample_index):
    return f"START {int(trial_id)} {int(target_class)} {int(sample_index)}\n"


def format_end(trial_id, sample_index):
    return f"END {int(trial_id)} {int(sample_index)}\n"


def format_result(trial_id, predicted_class):
    return f"RESULT {int(trial_id)} {int(predicted_class)}\n"


def format_err(reason):
    return f"ERR {reason}\n"


def parse_line(line):
    """Parse one protocol line into (verb, fields) or raise ValueError."""
    parts = line.strip().split(" ")
    if not parts or parts == [""]:
        raise ValueError("empty line")
    verb = parts[0]
    if verb == "START":
        if len(parts) != 4:
            raise ValueError("START takes trial_id, target_class, sample_index")
        return verb, tuple(int(p) for p in parts[1:])
    if verb == "END":
        if len(parts) != 3:
            raise ValueError("END takes trial_id, sample_index")
        return verb, tuple(int(p) for p in parts[1:])
    if verb == "RESULT":
        if len(parts) != 3:
            raise ValueError("RESULT takes trial_id, predicted_class")
        return verb, tuple(int(p) for p in parts[1:])
    if verb == "ERR":
        return verb, (" ".join(parts[1:]),)
    raise ValueError(f"unknown verb {verb!r}")


class _TrialHandler(socketserver.StreamRequestHandler):
    def handle(self):
        in_flight = None  # (trial_id, target_class, start_sample)
        server = self.server
        while True:
            raw = self.rfile.readline()
            if not raw:
                break
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                self._reply(format_err("malformed"))
                continue
            try:
                verb, fields = parse_line(line)
            except ValueError:
                self._reply(format_err("malformed"))
                continue
            if verb == "START":
                if in_flight is not None:
                    self._reply(format_err("trial_in_flight"))
                    continue
                in_flight = fields
            elif verb == "END":
                trial_id, end_sample = fields
                if in_flight is None or in_flight[0] != trial_id:
                    self._reply(format_err("unmatched_end"))
                    continue
                _, target_class, start_sample = in_flight
                in_flight = None
                try:
                    predicted = server.decode_trial(
                        start_sample, end_sample, target_class
                    )
                except BufferRangeError:
                    self._reply(format_err("epoch_unavailable"))
                    continue
                self._reply(format_result(trial_id, predicted))
            else:
                # clients have no business sending RESULT or ERR
                self._reply(format_err("unexpected_verb"))

    def _reply(self, text):
        self.wfile.write(text.encode("utf-8"))
        self.wfile.flush()


class EventServer(socketserver.ThreadingTCPServer):
    """Decode server bound to a ring buffer and a decode function.

    ``decode_fn(epoch, target_class) -> int`` receives the online window
    of each trial; pass a stub for protocol tests or a fitted decoder's
    wrapper for end-to-end runs.
    """

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, buffer, decode_fn, sample_rate,
                 window_s=ONLINE_WINDOW_S):
        super().__init__(address, _TrialHandler)
        self.buffer = buffer
        self.decode_fn = decode_fn
        self.sample_rate = sample_rate
        self.window_s = window_s
        self._thread = None

    def decode_trial(self, start_sample, end_sample, target_class):
        available_s = (end_sample - start_sample) / self.sample_rate
        window = min(self.window_s, available_s)
        epoch = extract_epoch(self.buffer, start_sample, 0.0, window, self.sample_rate)
        return int(self.decode_fn(epoch, target_class))

    def start_background(self):
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve_events(buffer, decode_fn, sample_rate, host="127.0.0.1", port=0,
                 window_s=ONLINE_WINDOW_S):
    """Create and start a background EventServer; returns the server."""
    server = EventServer((host, port), buffer, decode_fn, sample_rate, window_s)
    return server.start_background()


class EventClient:
    """Blocking client for the event protocol."""

    def __init__(self, host, port, timeout=10.0):
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._file = self._sock.makefile("rwb")

    def send_line(self, text):
        self._file.write(text.encode("utf-8"))
        self._file.flush()

    def read_reply(self):
        raw = self._file.readline()
        if not raw:
            raise ProtocolError("connection closed by server")
        return parse_line(raw.decode("utf-8"))

    def start_trial(self, trial_id, target_class, sample_index):
        self.send_line(format_start(trial_id, target_class, sample_index))

    def end_trial(self, trial_id, sample_index):
        """Send END and wait for the matching RESULT."""
        self.send_line(format_end(trial_id, sample_index))
        verb, fields = self.read_reply()
        if verb == "ERR":
            raise ProtocolError(f"server error: {fields[0]}")
        if verb != "RESULT":
            raise ProtocolError(f"expected RESULT, got {verb}")
        got_id, predicted = fields
        if got_id != trial_id:
            raise ProtocolError(
                f"RESULT for unknown trial {got_id}, expected {trial_id}"
            )
        return predicted

    def close(self):
        try:
            self._file.close()
        finally:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
