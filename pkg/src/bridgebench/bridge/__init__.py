"""Execution backends: the engine/agent split and the wire between them."""
