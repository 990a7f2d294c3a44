"""Desk-scale greenhouse monitoring stack.

Simulated sensor motes sample a synthetic greenhouse environment and push
13-byte packets over a lossy single-hop radio to a gateway, which decodes,
calibrates and deduplicates them into an append-only time-series store.
A threshold/rapid-change alarm engine watches every accepted reading and an
HTTP API (with a server-push event stream) plays the operator-facing side.
Everything runs on one seeded virtual clock, so whole runs are bit-reproducible.
"""

__version__ = "0.1.0"
