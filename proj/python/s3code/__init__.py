"""Source-code question answering toolkit: FQL queries, code metadata and document retrieval."""

import json
import os

from . import _s3
from ._s3 import Error, canonical_fql, normalize_version

__all__ = [
    "Error",
    "Service",
    "canonical_fql",
    "normalize_version",
    "parse_dot",
    "parse_loop_matrix",
    "query_tables",
    "run_fql",
    "scan",
]


def scan(root):
    return json.loads(_s3.scan(os.fspath(root)))


def run_fql(query, root, strict=False):
    return json.loads(_s3.run_fql(query, os.fspath(root), strict))


def parse_dot(text):
    return json.loads(_s3.parse_dot(text))


def parse_loop_matrix(text):
    return json.loads(_s3.parse_loop_matrix(text))


def query_tables(tables, sql):
    """`tables` maps table names to CSV text."""
    return json.loads(_s3.query_tables(list(tables.items()), sql))


class Service:
    """The operations behind the CLI and HTTP API; requests and replies are dicts."""

    def __init__(self, config=None, base_dir="."):
        self._svc = _s3.Service(json.dumps(config or {}), os.fspath(os.path.abspath(base_dir)))

    def scan(self, root=None):
        return json.loads(self._svc.scan(None if root is None else os.fspath(root)))

    def stats(self):
        return json.loads(self._svc.stats())

    def fql(self, query, root=None, strict=False):
        return json.loads(self._svc.fql(query, None if root is None else os.fspath(root), strict))

    def ask(self, question, mode, session_id=None, **extra):
        request = {"question": question, "mode": mode, **extra}
        if session_id is not None:
            request["session_id"] = session_id
        return json.loads(self._svc.ask(json.dumps(request)))

    def ingest(self, documents, corpus=None):
        request = {"documents": [{"doc_id": d, "text": t} for d, t in documents.items()]}
        if corpus is not None:
            request["corpus"] = corpus
        return json.loads(self._svc.ingest(json.dumps(request)))

    def session(self, session_id):
        return json.loads(self._svc.session(session_id))
