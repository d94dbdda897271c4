"""Synchronous client for the agvsim environment server."""

from .client import EnvSpec, ProtocolError, RemoteEnvHandle, connect

__all__ = ["EnvSpec", "ProtocolError", "RemoteEnvHandle", "connect"]

__version__ = "0.1.0"
