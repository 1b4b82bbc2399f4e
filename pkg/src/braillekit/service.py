"""HTTP annotation service backing the interactive editor.

Endpoints (bodies are the annotation JSON schema):

    GET  /pages                    manifest listing
    GET  /pages/{id}/image         page raster as PNG (?frame=deskewed for
                                   the rotation-corrected variant)
    GET  /pages/{id}/auto          auto-generated annotation + grid (cached)
    GET  /pages/{id}/annotation    last saved annotation (404 if none)
    PUT  /pages/{id}/annotation    save; revision must match, 409 on conflict

Saves are serialized and use optimistic concurrency: the annotation file
carries a revision counter, a PUT must present the current on-disk revision,
and the stored file gets revision + 1.
"""

from __future__ import annotations

import io
import json
import logging
import threading
from dataclasses import dataclass, replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np
from PIL import Image

from .annotation import (
    AnnotationError,
    DatasetManifest,
    ManifestEntry,
    PageAnnotation,
    annotation_from_json,
    annotation_to_json,
    read_annotation,
    write_annotation,
)
from .errors import BrailleKitError
from .geometry import DEFAULT_GEOMETRY, GridGeometry
from .grid import GridModel
from .pipeline import AutoAnnotation, Detector, auto_annotate
from .raster import load_gray

log = logging.getLogger(__name__)

FALLBACK_INDEX = """<!doctype html>
<html><head><meta charset="utf-8"><title>braillekit annotation service</title></head>
<body><h1>braillekit annotation service</h1>
<p>The service is running. No editor UI bundle was found; the JSON API is
available under <code>/pages</code>. Build the frontend and pass its dist
directory via <code>--ui-dir</code> to serve the editor here.</p>
</body></html>
"""


def grid_to_json(grid: GridModel | None) -> dict | None:
    if grid is None:
        return None
    return {
        "x_lines": [round(float(v), 2) for v in grid.x_lines],
        "y_lines": [round(float(v), 2) for v in grid.y_lines],
        "columns": [list(c) for c in grid.columns],
        "rows": [list(r) for r in grid.rows],
    }


@dataclass
class PageRecord:
    page_id: str
    entry: ManifestEntry


class AnnotationService:
    """Page registry, detection cache, and save serialization."""

    def __init__(
        self,
        manifest: DatasetManifest,
        detector: Detector,
        geometry: GridGeometry = DEFAULT_GEOMETRY,
        ui_dir: str | Path | None = None,
    ):
        self.pages = {str(i): PageRecord(str(i), e) for i, e in enumerate(manifest.entries)}
        self.detector = detector
        self.geometry = geometry
        self.ui_dir = Path(ui_dir) if ui_dir else None
        self._auto_cache: dict[str, AutoAnnotation] = {}
        self._save_lock = threading.Lock()
        self._cache_lock = threading.Lock()

    # -- queries ------------------------------------------------------------

    def listing(self) -> dict:
        return {
            "pages": [
                {
                    "id": rec.page_id,
                    "image": rec.entry.image.name,
                    "book": rec.entry.book,
                    "split": rec.entry.split,
                    "has_annotation": rec.entry.annotation.is_file(),
                }
                for rec in self.pages.values()
            ]
        }

    def record(self, page_id: str) -> PageRecord:
        if page_id not in self.pages:
            raise KeyError(page_id)
        return self.pages[page_id]

    def auto(self, page_id: str) -> AutoAnnotation:
        """Detection result for a page, cached; revision is stamped per call."""
        with self._cache_lock:
            cached = self._auto_cache.get(page_id)
        if cached is None:
            rec = self.record(page_id)
            img = load_gray(rec.entry.image)
            cached = auto_annotate(
                img, self.detector, self.geometry, image_path=str(rec.entry.image)
            )
            with self._cache_lock:
                self._auto_cache[page_id] = cached
        return replace(
            cached,
            annotation=replace(cached.annotation, revision=self.current_revision(page_id)),
        )

    def image_png(self, page_id: str, frame: str = "original") -> bytes:
        rec = self.record(page_id)
        if frame == "deskewed":
            arr = self.auto(page_id).deskewed_image
        else:
            arr = load_gray(rec.entry.image)
        buf = io.BytesIO()
        Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="L").save(buf, format="PNG")
        return buf.getvalue()

    def current_revision(self, page_id: str) -> int:
        rec = self.record(page_id)
        if not rec.entry.annotation.is_file():
            return 0
        return read_annotation(rec.entry.annotation).revision

    def saved_annotation(self, page_id: str) -> PageAnnotation | None:
        rec = self.record(page_id)
        if not rec.entry.annotation.is_file():
            return None
        return read_annotation(rec.entry.annotation)

    # -- mutation -----------------------------------------------------------

    def save(self, page_id: str, annotation: PageAnnotation) -> int:
        """Validate and persist; returns the new revision or raises ConflictError."""
        rec = self.record(page_id)
        with self._save_lock:
            current = self.current_revision(page_id)
            if annotation.revision != current:
                raise ConflictError(current)
            stored = replace(annotation, revision=current + 1)
            rec.entry.annotation.parent.mkdir(parents=True, exist_ok=True)
            write_annotation(stored, rec.entry.annotation)
            return stored.revision


class ConflictError(Exception):
    def __init__(self, current_revision: int):
        super().__init__(f"annotation revision is {current_revision}")
        self.current_revision = current_revision


class _Handler(BaseHTTPRequestHandler):
    service: AnnotationService  # set on the subclass by make_server

    # -- plumbing -----------------------------------------------------------

    def log_message(self, fmt: str, *args) -> None:
        log.debug("http: " + fmt, *args)

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _json(self, status: int, doc: dict) -> None:
        self._send(status, json.dumps(doc).encode("utf-8"), "application/json")

    def _error(self, status: int, message: str, **extra) -> None:
        self._json(status, {"error": message, **extra})

    def _route(self) -> tuple[str, dict[str, str]]:
        path, _, query = self.path.partition("?")
        params = {}
        for part in query.split("&"):
            if "=" in part:
                k, _, v = part.partition("=")
                params[k] = v
        return path.rstrip("/") or "/", params

    # -- verbs --------------------------------------------------------------

    def do_GET(self) -> None:  # noqa: N802 (http.server API)
        path, params = self._route()
        try:
            if path == "/pages":
                self._json(200, self.service.listing())
            elif path == "/":
                self._static("index.html")
            elif path.startswith("/pages/"):
                parts = path.split("/")
                if len(parts) != 4:
                    self._error(404, "not found")
                    return
                page_id, leaf = parts[2], parts[3]
                if page_id not in self.service.pages:
                    self._error(404, f"unknown page {page_id}")
                    return
                if leaf == "image":
                    png = self.service.image_png(page_id, params.get("frame", "original"))
                    self._send(200, png, "image/png")
                elif leaf == "auto":
                    result = self.service.auto(page_id)
                    self._json(
                        200,
                        {
                            "annotation": annotation_to_json(result.annotation),
                            "grid": grid_to_json(result.grid),
                            "notes": result.notes,
                        },
                    )
                elif leaf == "annotation":
                    saved = self.service.saved_annotation(page_id)
                    if saved is None:
                        self._error(404, "no saved annotation")
                    else:
                        self._json(200, annotation_to_json(saved))
                else:
                    self._error(404, "not found")
            else:
                self._static(path.lstrip("/"))
        except BrailleKitError as err:
            self._error(422, str(err))
        except Exception as err:  # pragma: no cover - defensive
            log.exception("GET %s failed", self.path)
            self._error(500, str(err))

    def do_PUT(self) -> None:  # noqa: N802
        path, _ = self._route()
        parts = path.split("/")
        if len(parts) != 4 or parts[1] != "pages" or parts[3] != "annotation":
            self._error(404, "not found")
            return
        page_id = parts[2]
        if page_id not in self.service.pages:
            self._error(404, f"unknown page {page_id}")
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
            annotation = annotation_from_json(doc)
        except (json.JSONDecodeError, AnnotationError) as err:
            self._error(422, f"invalid annotation body: {err}")
            return
        try:
            revision = self.service.save(page_id, annotation)
        except ConflictError as err:
            self._error(409, str(err), revision=err.current_revision)
            return
        except BrailleKitError as err:
            self._error(422, str(err))
            return
        self._json(200, {"revision": revision})

    # -- static UI ----------------------------------------------------------

    _CONTENT_TYPES = {
        ".html": "text/html; charset=utf-8",
        ".js": "text/javascript; charset=utf-8",
        ".mjs": "text/javascript; charset=utf-8",
        ".css": "text/css; charset=utf-8",
        ".map": "application/json",
        ".png": "image/png",
        ".svg": "image/svg+xml",
    }

    def _static(self, rel: str) -> None:
        ui_dir = self.service.ui_dir
        if ui_dir is not None:
            target = (ui_dir / rel).resolve()
            if target.is_file() and str(target).startswith(str(ui_dir.resolve())):
                ctype = self._CONTENT_TYPES.get(target.suffix, "application/octet-stream")
                self._send(200, target.read_bytes(), ctype)
                return
        if rel == "index.html":
            self._send(200, FALLBACK_INDEX.encode("utf-8"), "text/html; charset=utf-8")
        else:
            self._error(404, "not found")


def make_server(service: AnnotationService, host: str, port: int) -> ThreadingHTTPServer:
    """Bind a threading HTTP server for the service (port 0 picks a free port)."""
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(service: AnnotationService, host: str, port: int) -> None:
    httpd = make_server(service, host, port)
    log.info("annotation service on http://%s:%d/", *httpd.server_address)
    print(f"annotation service listening on http://{httpd.server_address[0]}:{httpd.server_address[1]}/")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        httpd.server_close()
