"""Local HTTP service for the subjective rating protocol.

Serves the rater UI, streams stimulus audio, and persists ratings to an
append-only CSV log.  Every rater gets a familiarization (practice) playlist
followed by two independently seeded random orderings of the stimuli; session
state is always reconstructed by folding the log, so a rater who reconnects
resumes at the first unrated stimulus of their current pass.  Practice
submissions are acknowledged but never written to the log.
"""

from __future__ import annotations

import csv
import hashlib
import json
import threading
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

import numpy as np

from .io_formats import RATINGS_COLUMNS, ratings_csv_text
from .manifest import Manifest
from .stats import RatingRecord

_BUILTIN_PAGE = """<!DOCTYPE html>
<html lang="en"><head><meta charset="utf-8"><title>Fluency rating</title>
<style>
 body { font-family: sans-serif; max-width: 640px; margin: 2rem auto; }
 .scale label { display: block; margin: 0.3rem 0; }
 button { padding: 0.5rem 1.2rem; margin-right: 0.6rem; }
 #status { color: #555; margin: 0.8rem 0; }
</style></head>
<body>
<h1>Speech fluency rating</h1>
<div id="login">
  <label>Rater id: <input id="rater" autocomplete="off"></label>
  <button onclick="start()">Start</button>
</div>
<div id="task" style="display:none">
  <div id="status"></div>
  <audio id="player" controls preload="auto"></audio>
  <div class="scale" id="scale"></div>
  <button id="submit" disabled onclick="submitRating()">Submit</button>
</div>
<script>
const LABELS = ["very poor fluency", "poor fluency", "moderate fluency",
                "good fluency", "excellent fluency"];
let rater = null, phase = null, order = [], index = 0, played = false;
const scale = document.getElementById("scale");
LABELS.forEach(function (lab, i) {
  const v = i + 1;
  scale.insertAdjacentHTML("beforeend",
    '<label><input type="radio" name="rating" value="' + v + '"> ' + v + ' - ' + lab + '</label>');
});
scale.addEventListener("change", updateSubmit);
const player = document.getElementById("player");
player.addEventListener("ended", function () { played = true; updateSubmit(); });
function updateSubmit() {
  const chosen = document.querySelector('input[name="rating"]:checked');
  document.getElementById("submit").disabled = !(played && chosen);
}
async function start() {
  rater = document.getElementById("rater").value.trim();
  if (!rater) return;
  document.getElementById("login").style.display = "none";
  document.getElementById("task").style.display = "block";
  await resume();
}
async function resume() {
  const s = await (await fetch("/api/session/" + encodeURIComponent(rater))).json();
  phase = s.phase; index = s.current_index;
  if (phase === "done") {
    document.getElementById("status").textContent = "All done - thank you!";
    document.getElementById("task").querySelectorAll("audio,button,input").forEach(e => e.disabled = true);
    return;
  }
  const pass = phase === "practice" ? "practice" : (phase === "pass1" ? "1" : "2");
  const r = await fetch("/api/stimuli?rater_id=" + encodeURIComponent(rater) + "&pass=" + pass);
  order = (await r.json()).stimuli;
  show();
}
function show() {
  played = false;
  document.querySelectorAll('input[name="rating"]').forEach(e => { e.checked = false; });
  updateSubmit();
  const st = order[index];
  document.getElementById("status").textContent =
    (phase === "practice" ? "Familiarization - " : "") +
    phase + ", recording " + (index + 1) + " of " + order.length;
  player.src = "/api/audio/" + encodeURIComponent(st.stimulus_id);
}
async function submitRating() {
  const chosen = document.querySelector('input[name="rating"]:checked');
  const passNo = phase === "practice" ? 0 : (phase === "pass1" ? 1 : 2);
  const resp = await fetch("/api/ratings", {
    method: "POST", headers: {"Content-Type": "application/json"},
    body: JSON.stringify({rater_id: rater, stimulus_id: order[index].stimulus_id,
                          pass: passNo, rating: parseInt(chosen.value, 10)})
  });
  if (!resp.ok) { alert("Submission rejected: " + (await resp.text())); return; }
  index += 1;
  if (index >= order.length) { await resume(); } else { show(); }
}
document.addEventListener("keydown", function (ev) {
  if (ev.key >= "1" && ev.key <= "5") {
    const el = document.querySelector('input[name="rating"][value="' + ev.key + '"]');
    if (el) { el.checked = true; updateSubmit(); }
  }
});
</script>
</body></html>
"""


def _order_seed(seed: int, rater_id: str, pass_number: int) -> int:
    digest = hashlib.sha256(f"{seed}:{rater_id}:{pass_number}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RatingStore:
    """Append-only ratings log; state is always the fold of the file."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self.records: list[RatingRecord] = []
        self._keys: set[tuple[str, str, int]] = set()
        if self.path.exists():
            with open(self.path, newline="", encoding="utf-8") as fh:
                for rec in csv.DictReader(fh):
                    record = RatingRecord(rec["rater_id"], rec["stimulus_id"],
                                          int(rec["pass"]), int(rec["rating"]),
                                          rec["timestamp_iso8601"])
                    self.records.append(record)
                    self._keys.add((record.rater_id, record.stimulus_id, record.pass_number))
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", newline="", encoding="utf-8") as fh:
                csv.writer(fh, lineterminator="\n").writerow(RATINGS_COLUMNS)

    def has(self, rater_id: str, stimulus_id: str, pass_number: int) -> bool:
        return (rater_id, stimulus_id, pass_number) in self._keys

    def rated(self, rater_id: str, pass_number: int) -> set[str]:
        return {r.stimulus_id for r in self.records
                if r.rater_id == rater_id and r.pass_number == pass_number}

    def append(self, record: RatingRecord) -> None:
        with self._lock:
            key = (record.rater_id, record.stimulus_id, record.pass_number)
            if key in self._keys:
                raise KeyError(f"duplicate rating for {key}")
            try:
                with open(self.path, "a", newline="", encoding="utf-8") as fh:
                    csv.writer(fh, lineterminator="\n").writerow(
                        [record.rater_id, record.stimulus_id, record.pass_number,
                         record.rating, record.timestamp])
                    fh.flush()
            except OSError as exc:
                raise RuntimeError(
                    f"failed to persist rating to {self.path} (log may be partial): {exc}"
                ) from exc
            self.records.append(record)
            self._keys.add(key)

    def export_csv(self) -> str:
        with self._lock:
            return ratings_csv_text(self.records)


class RatingService:
    """Protocol logic behind the HTTP API, independent of the transport."""

    def __init__(self, manifest: Manifest, store: RatingStore, seed: int = 0,
                 practice: Manifest | None = None, clock=None):
        self.manifest = manifest
        self.store = store
        self.seed = seed
        self.practice_rows = list(practice.rows) if practice else []
        self.audio_paths = {r.stimulus_id: r.wav_path for r in manifest.rows}
        self.audio_paths.update({r.stimulus_id: r.wav_path for r in self.practice_rows})
        self.stimulus_ids = [r.stimulus_id for r in manifest.rows]
        self.practice_ids = [r.stimulus_id for r in self.practice_rows]
        self._practice_done: dict[str, set[str]] = {}
        self._clock = clock or (lambda: datetime.now(timezone.utc).isoformat())

    def order(self, rater_id: str, pass_number: int) -> list[str]:
        """Seeded per-rater order; the two passes are shuffled independently."""
        if pass_number == 0:
            return list(self.practice_ids)
        rng = np.random.default_rng(_order_seed(self.seed, rater_id, pass_number))
        ids = list(self.stimulus_ids)
        rng.shuffle(ids)
        return ids

    def session_state(self, rater_id: str) -> dict:
        practiced = self._practice_done.get(rater_id, set())
        rated1 = self.store.rated(rater_id, 1)
        rated2 = self.store.rated(rater_id, 2)
        all_ids = set(self.stimulus_ids)
        if self.practice_ids and not set(self.practice_ids) <= practiced and not rated1 and not rated2:
            order = self.order(rater_id, 0)
            index = next(i for i, s in enumerate(order) if s not in practiced)
            phase, pass_number = "practice", 0
        elif rated1 != all_ids:
            order = self.order(rater_id, 1)
            index = next(i for i, s in enumerate(order) if s not in rated1)
            phase, pass_number = "pass1", 1
        elif rated2 != all_ids:
            order = self.order(rater_id, 2)
            index = next((i for i, s in enumerate(order) if s not in rated2), 0)
            phase, pass_number = "pass2", 2
        else:
            phase, pass_number, index = "done", None, 0
        return {
            "rater_id": rater_id,
            "phase": phase,
            "pass": pass_number,
            "current_index": index,
            "n_stimuli": len(self.stimulus_ids),
            "n_practice": len(self.practice_ids),
            "completed": {"practice": sorted(practiced), "pass1": sorted(rated1),
                          "pass2": sorted(rated2)},
        }

    def submit(self, payload: dict) -> tuple[int, dict]:
        """Validate and persist one rating; (HTTP status, response body)."""
        if not isinstance(payload, dict):
            return 422, {"error": "body must be a JSON object"}
        rater_id = payload.get("rater_id")
        stimulus_id = payload.get("stimulus_id")
        pass_number = payload.get("pass")
        rating = payload.get("rating")
        if not rater_id or not isinstance(rater_id, str):
            return 422, {"error": "rater_id is required"}
        if pass_number not in (0, 1, 2):
            return 422, {"error": "pass must be 0 (practice), 1, or 2"}
        if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 5:
            return 422, {"error": f"rating must be an integer in 1..5, got {rating!r}"}

        if pass_number == 0:
            if stimulus_id not in self.practice_ids:
                return 422, {"error": f"unknown practice stimulus {stimulus_id!r}"}
            self._practice_done.setdefault(rater_id, set()).add(stimulus_id)
            return 200, {"accepted": True, "practice": True, "persisted": False}

        if stimulus_id not in self.audio_paths or stimulus_id not in self.stimulus_ids:
            return 422, {"error": f"unknown stimulus {stimulus_id!r}"}
        state = self.session_state(rater_id)
        if state["phase"] == "done":
            return 409, {"error": "session already complete"}
        expected_pass = state["pass"]
        if expected_pass == 0:
            return 409, {"error": "familiarization not finished"}
        if pass_number != expected_pass:
            return 409, {"error": f"current pass is {expected_pass}, got {pass_number}"}
        order = self.order(rater_id, pass_number)
        expected_stimulus = order[state["current_index"]]
        if stimulus_id != expected_stimulus:
            return 409, {"error": f"expected stimulus {expected_stimulus!r} next, "
                                   f"got {stimulus_id!r}"}
        record = RatingRecord(rater_id, stimulus_id, pass_number, rating,
                              timestamp=self._clock())
        try:
            self.store.append(record)
        except KeyError:
            return 409, {"error": "already rated"}
        return 201, {"accepted": True, "practice": False, "persisted": True}


def _guess_type(path: Path) -> str:
    return {
        ".html": "text/html; charset=utf-8",
        ".js": "application/javascript",
        ".mjs": "application/javascript",
        ".css": "text/css",
        ".svg": "image/svg+xml",
        ".json": "application/json",
        ".ico": "image/x-icon",
    }.get(path.suffix, "application/octet-stream")


def _make_handler(service: RatingService, ui_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, body: bytes, content_type: str):
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Cache-Control", "no-store")
            self.end_headers()
            self.wfile.write(body)

        def _send_json(self, status: int, obj):
            self._send(status, json.dumps(obj).encode(), "application/json")

        def do_GET(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            try:
                if url.path == "/" or url.path == "/index.html":
                    if ui_dir and (ui_dir / "index.html").exists():
                        self._send(200, (ui_dir / "index.html").read_bytes(),
                                   "text/html; charset=utf-8")
                    else:
                        self._send(200, _BUILTIN_PAGE.encode(), "text/html; charset=utf-8")
                elif parts[:1] == ["api"] and len(parts) >= 2:
                    self._api_get(url, parts[1:])
                elif ui_dir is not None:
                    target = (ui_dir / url.path.lstrip("/")).resolve()
                    if target.is_file() and ui_dir.resolve() in target.parents:
                        self._send(200, target.read_bytes(), _guess_type(target))
                    else:
                        self._send_json(404, {"error": "not found"})
                else:
                    self._send_json(404, {"error": "not found"})
            except BrokenPipeError:
                pass

        def _api_get(self, url, parts):
            if parts[0] == "stimuli":
                qs = parse_qs(url.query)
                rater = qs.get("rater_id", [""])[0]
                if not rater:
                    self._send_json(422, {"error": "rater_id query parameter required"})
                    return
                raw = qs.get("pass", ["1"])[0]
                if raw == "practice":
                    pass_number = 0
                elif raw in ("1", "2"):
                    pass_number = int(raw)
                else:
                    self._send_json(422, {"error": "pass must be practice, 1, or 2"})
                    return
                order = service.order(rater, pass_number)
                self._send_json(200, {
                    "rater_id": rater,
                    "pass": pass_number,
                    "stimuli": [
                        {"stimulus_id": sid, "audio_url": f"/api/audio/{sid}"}
                        for sid in order
                    ],
                })
            elif parts[0] == "audio" and len(parts) == 2:
                path = service.audio_paths.get(parts[1])
                if path is None or not Path(path).exists():
                    self._send_json(404, {"error": f"unknown stimulus {parts[1]!r}"})
                else:
                    self._send(200, Path(path).read_bytes(), "audio/wav")
            elif parts[0] == "export.csv":
                self._send(200, service.store.export_csv().encode(), "text/csv; charset=utf-8")
            elif parts[0] == "session" and len(parts) == 2:
                self._send_json(200, service.session_state(parts[1]))
            else:
                self._send_json(404, {"error": "not found"})

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/api/ratings":
                self._send_json(404, {"error": "not found"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                payload = json.loads(self.rfile.read(length) or b"{}")
            except (ValueError, json.JSONDecodeError):
                self._send_json(422, {"error": "invalid JSON body"})
                return
            status, body = service.submit(payload)
            self._send_json(status, body)

    return Handler


def create_server(manifest: Manifest, ratings_path, port: int = 8765, seed: int = 0,
                  practice: Manifest | None = None, ui_dir=None,
                  clock=None) -> tuple[ThreadingHTTPServer, RatingService]:
    """Bind the rating service; raises OSError when the port is taken."""
    store = RatingStore(ratings_path)
    service = RatingService(manifest, store, seed=seed, practice=practice, clock=clock)
    ui = Path(ui_dir) if ui_dir else None
    try:
        server = ThreadingHTTPServer(("127.0.0.1", port), _make_handler(service, ui))
    except OSError as exc:
        raise OSError(f"cannot bind port {port}: {exc}") from exc
    return server, service
