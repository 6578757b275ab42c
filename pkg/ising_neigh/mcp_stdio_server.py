#!/usr/bin/env python3
"""Tool server over stdio.

One JSON-RPC request per line on stdin, one response per line on stdout.
"""
from __future__ import annotations

import asyncio
import json
import logging
import sys
from typing import IO, Optional

from ising_neigh.config import Settings
from ising_neigh.core.server import MCPServer, error_response

logger = logging.getLogger(__name__)


class MCPStdioServer:
    """Line-delimited JSON-RPC over a pair of text streams."""

    def __init__(
        self, reader: Optional[IO[str]] = None, writer: Optional[IO[str]] = None
    ):
        self.server = MCPServer()
        self.reader = reader or sys.stdin
        self.writer = writer or sys.stdout

    def _send(self, message: dict) -> None:
        print(json.dumps(message), file=self.writer, flush=True)

    async def handle_line(self, line: str) -> None:
        line = line.strip()
        if not line:
            return
        try:
            request = json.loads(line)
        except json.JSONDecodeError as e:
            self._send(error_response(None, -32700, f"Parse error: {str(e)}"))
            return
        if not isinstance(request, dict):
            message = "Parse error: request must be a JSON object"
            self._send(error_response(None, -32700, message))
            return
        response = await self.server.handle_request(request)
        if response is not None:
            self._send(response)

    async def run(self) -> None:
        loop = asyncio.get_running_loop()
        while True:
            try:
                line = await loop.run_in_executor(None, self.reader.readline)
                if not line:
                    break
                await self.handle_line(line)
            except Exception:
                logger.exception("error in main loop")
                break


def main() -> None:
    settings = Settings.from_env()
    # stdout carries the protocol
    logging.basicConfig(
        level=settings.log_level,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    asyncio.run(MCPStdioServer().run())


if __name__ == "__main__":
    main()
