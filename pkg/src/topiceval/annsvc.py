"""Annotation service: assigns HITs to workers, records intruder selections
and 0-3 ratings, applies live quality control, and exports record files.

State mutations go through a single lock and an append-only log, so an
acknowledged submission survives a crash and exports are consistent
snapshots.  Response payloads never contain the intruder position or the
control flag.
"""

import logging
import os
import threading
import time
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import records
from .intrusion import (DEFAULT_QC_THRESHOLD, AnnotationRecord, Hit,
                        IntrusionItem, RatingRecord, quality_filter)

logger = logging.getLogger(__name__)

DEFAULT_LEASE_SECONDS = 600.0
DEFAULT_MAX_ANNOTATORS = 10
MIN_VALID_ANNOTATIONS = 3


class AnnotationIn(BaseModel):
    worker_id: str
    item_id: str
    chosen_pos: int
    token: str | None = None


class RatingIn(BaseModel):
    worker_id: str
    doc_id: str
    model_name: str
    topic_id: int
    rating: int


@dataclass
class Lease:
    hit_id: str
    expires: float


@dataclass
class AnnotationStore:
    """In-memory assignment state over an append-only log."""
    hits: list[Hit]
    log_dir: str
    run_id: str = "run"
    lease_seconds: float = DEFAULT_LEASE_SECONDS
    max_annotators: int = DEFAULT_MAX_ANNOTATORS
    qc_threshold: float = DEFAULT_QC_THRESHOLD

    lock: threading.Lock = field(default_factory=threading.Lock)
    leases: dict[str, Lease] = field(default_factory=dict)
    done_items: dict[str, set[str]] = field(default_factory=dict)  # worker -> items
    annotations: list[AnnotationRecord] = field(default_factory=list)
    ratings: list[RatingRecord] = field(default_factory=list)
    seen_tokens: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.items: dict[str, IntrusionItem] = {}
        for h in self.hits:
            for it in h.items:
                self.items[it.item_id] = it
        os.makedirs(self.log_dir, exist_ok=True)
        self._replay()

    @property
    def ann_log(self) -> str:
        return os.path.join(self.log_dir, f"{self.run_id}.annotations.log")

    @property
    def rating_log(self) -> str:
        return os.path.join(self.log_dir, f"{self.run_id}.ratings.log")

    def _replay(self) -> None:
        if os.path.exists(self.ann_log):
            for r in records.iter_records(self.ann_log, "annotations"):
                a = AnnotationRecord(worker_id=r["worker_id"], item_id=r["item_id"],
                                     chosen_pos=r["chosen_pos"],
                                     timestamp=r.get("timestamp", 0.0))
                self.annotations.append(a)
                self.done_items.setdefault(a.worker_id, set()).add(a.item_id)
                if r.get("token"):
                    self.seen_tokens.add(r["token"])
        if os.path.exists(self.rating_log):
            for r in records.iter_records(self.rating_log, "ratings"):
                self.ratings.append(RatingRecord(
                    worker_id=r["worker_id"], doc_id=r["doc_id"],
                    model_name=r["model"], topic_id=r["topic_id"],
                    rating=r["rating"]))

    # -- quality control -------------------------------------------------
    def control_accuracy(self, worker_id: str) -> tuple[int, int]:
        total = correct = 0
        for a in self.annotations:
            if a.worker_id != worker_id:
                continue
            it = self.items.get(a.item_id)
            if it is None or not it.is_control:
                continue
            total += 1
            correct += a.chosen_pos == it.intruder_pos
        return correct, total

    def qc_state(self, worker_id: str) -> str:
        correct, total = self.control_accuracy(worker_id)
        if total == 0:
            return "active"
        return "active" if correct / total > self.qc_threshold else "failed"

    # -- assignment ------------------------------------------------------
    def _item_count(self, item_id: str) -> int:
        return sum(1 for a in self.annotations if a.item_id == item_id)

    def _hit_complete(self, worker_id: str, hit: Hit) -> bool:
        done = self.done_items.get(worker_id, set())
        return all(it.item_id in done for it in hit.items)

    def assign_hit(self, worker_id: str) -> Hit | None:
        now = time.time()
        lease = self.leases.get(worker_id)
        if lease and lease.expires > now:
            hit = next(h for h in self.hits if h.hit_id == lease.hit_id)
            if not self._hit_complete(worker_id, hit):
                return hit
        done = self.done_items.get(worker_id, set())
        candidates = []
        for h in self.hits:
            if any(it.item_id in done for it in h.items):
                continue
            counts = [self._item_count(it.item_id) for it in h.items]
            if min(counts) >= self.max_annotators:
                continue
            candidates.append((min(counts), h.hit_id, h))
        if not candidates:
            return None
        candidates.sort(key=lambda c: (c[0], c[1]))  # least-annotated first
        hit = candidates[0][2]
        self.leases[worker_id] = Lease(hit_id=hit.hit_id,
                                       expires=now + self.lease_seconds)
        return hit

    # -- submissions -----------------------------------------------------
    def submit_annotation(self, sub: AnnotationIn) -> dict:
        it = self.items.get(sub.item_id)
        if it is None:
            raise KeyError(sub.item_id)
        lease = self.leases.get(sub.worker_id)
        if lease is None or lease.expires < time.time():
            raise PermissionError("no active lease")
        hit = next(h for h in self.hits if h.hit_id == lease.hit_id)
        if sub.item_id not in {i.item_id for i in hit.items}:
            raise PermissionError("item not in leased hit")
        if sub.token and sub.token in self.seen_tokens:
            return {"ok": True, "duplicate": True,
                    "qc_state": self.qc_state(sub.worker_id)}
        if sub.item_id in self.done_items.get(sub.worker_id, set()):
            raise FileExistsError("duplicate submission; first answer kept")
        a = AnnotationRecord(worker_id=sub.worker_id, item_id=sub.item_id,
                             chosen_pos=sub.chosen_pos, timestamp=time.time())
        records.append_record(self.ann_log, "annotations",
                              {"worker_id": a.worker_id, "item_id": a.item_id,
                               "chosen_pos": a.chosen_pos,
                               "timestamp": a.timestamp, "token": sub.token})
        self.annotations.append(a)
        self.done_items.setdefault(a.worker_id, set()).add(a.item_id)
        if sub.token:
            self.seen_tokens.add(sub.token)
        if self._hit_complete(a.worker_id, hit):
            self.leases.pop(a.worker_id, None)
        return {"ok": True, "duplicate": False,
                "qc_state": self.qc_state(a.worker_id)}

    def submit_rating(self, sub: RatingIn) -> dict:
        r = RatingRecord(worker_id=sub.worker_id, doc_id=sub.doc_id,
                         model_name=sub.model_name, topic_id=sub.topic_id,
                         rating=sub.rating)
        records.append_record(self.rating_log, "ratings",
                              {"worker_id": r.worker_id, "doc_id": r.doc_id,
                               "model": r.model_name, "topic_id": r.topic_id,
                               "rating": r.rating})
        self.ratings.append(r)
        return {"ok": True}

    # -- export ----------------------------------------------------------
    def export(self) -> dict:
        anns = [{"worker_id": a.worker_id, "item_id": a.item_id,
                 "chosen_pos": a.chosen_pos, "timestamp": a.timestamp}
                for a in self.annotations]
        rates = [{"worker_id": r.worker_id, "doc_id": r.doc_id,
                  "model": r.model_name, "topic_id": r.topic_id,
                  "rating": r.rating} for r in self.ratings]
        return {"run_id": self.run_id, "annotations": anns, "ratings": rates}

    def repost_queue(self) -> list[str]:
        """Items with fewer than 3 annotations surviving quality control."""
        all_items = list(self.items.values())
        kept, _ = quality_filter(self.annotations, all_items, self.qc_threshold)
        counts: dict[str, int] = {}
        for a in kept:
            counts[a.item_id] = counts.get(a.item_id, 0) + 1
        return sorted(it.item_id for it in all_items
                      if not it.is_control
                      and counts.get(it.item_id, 0) < MIN_VALID_ANNOTATIONS)


def _hit_payload(hit: Hit) -> dict:
    """Public view of a hit: no intruder_pos, no control flag."""
    return {"hit_id": hit.hit_id,
            "items": [{"item_id": it.item_id,
                       "snippet": it.snippet,
                       "topics": it.shown_words}
                      for it in hit.items]}


def create_app(store: AnnotationStore) -> FastAPI:
    app = FastAPI(title="topiceval annotation service")
    app.state.store = store

    @app.get("/hit")
    def get_hit(worker_id: str):
        with store.lock:
            if store.qc_state(worker_id) == "failed":
                return JSONResponse({"status": "blocked", "qc_state": "failed"},
                                    status_code=403)
            hit = store.assign_hit(worker_id)
            if hit is None:
                return {"status": "done"}
            return {"status": "ok", "hit": _hit_payload(hit)}

    @app.get("/more")
    def view_more(item_id: str, worker_id: str = ""):
        with store.lock:
            it = store.items.get(item_id)
            if it is None:
                raise HTTPException(404, "unknown item")
            logger.info("expansion request for %s by %s", item_id, worker_id)
            return {"item_id": item_id, "full_text": it.full_text}

    @app.post("/annotation")
    def post_annotation(sub: AnnotationIn):
        with store.lock:
            try:
                return store.submit_annotation(sub)
            except KeyError:
                raise HTTPException(404, "unknown item")
            except PermissionError as e:
                raise HTTPException(409, str(e))
            except FileExistsError as e:
                raise HTTPException(409, str(e))
            except ValueError as e:
                raise HTTPException(422, str(e))

    @app.post("/rating")
    def post_rating(sub: RatingIn):
        with store.lock:
            try:
                return store.submit_rating(sub)
            except ValueError as e:
                raise HTTPException(422, str(e))

    @app.get("/export")
    def export(run_id: str = ""):
        with store.lock:
            if run_id and run_id != store.run_id:
                raise HTTPException(404, "unknown run")
            return store.export()

    @app.get("/repost-queue")
    def repost_queue():
        with store.lock:
            return {"items": store.repost_queue()}

    ui_dir = os.environ.get("TOPICEVAL_UI_DIR", "")
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(hits_path: str, log_dir: str, host: str = "127.0.0.1",
          port: int = 8765, run_id: str = "run",
          qc_threshold: float = DEFAULT_QC_THRESHOLD,
          max_annotators: int = DEFAULT_MAX_ANNOTATORS) -> None:
    import uvicorn

    from .intrusion import load_hits
    store = AnnotationStore(hits=load_hits(hits_path), log_dir=log_dir,
                            run_id=run_id, qc_threshold=qc_threshold,
                            max_annotators=max_annotators)
    uvicorn.run(create_app(store), host=host, port=port, log_level="warning")
