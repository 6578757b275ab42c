"""Origin validation middleware against DNS rebinding."""
from typing import Iterable, List, Optional
from urllib.parse import urlparse

from fastapi import Request
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware

ALLOWED_ORIGINS = ["localhost", "127.0.0.1", "0.0.0.0"]


def validate_origin_header(
    request: Request, extra_origins: Iterable[str] = ()
) -> bool:
    """Accept local origins, ``extra_origins`` hostnames and origin-less requests."""
    origin = request.headers.get("Origin") or request.headers.get("Referer")
    if origin is None:
        return True
    try:
        hostname = urlparse(origin).hostname
    except ValueError:
        return False
    if hostname is None:
        return True
    allowed = set(ALLOWED_ORIGINS) | {urlparse(o).hostname or o for o in extra_origins}
    return (
        hostname in allowed
        or hostname.endswith(".localhost")
        or hostname.startswith("127.0.0.")
    )


class OriginValidatorMiddleware(BaseHTTPMiddleware):
    """Rejects POSTs to protected paths from foreign origins with 403."""

    def __init__(
        self,
        app,
        protected_paths: Optional[List[str]] = None,
        extra_origins: Iterable[str] = (),
    ):
        super().__init__(app)
        self.protected_paths = protected_paths or ["/mcp/http"]
        self.extra_origins = list(extra_origins)

    async def dispatch(self, request: Request, call_next):
        path = request.url.path
        protected = any(
            path == p or path.startswith(p + "/") for p in self.protected_paths
        )
        if request.method == "POST" and protected:
            if not validate_origin_header(request, self.extra_origins):
                return JSONResponse(
                    {"detail": "Invalid Origin header"}, status_code=403
                )
        return await call_next(request)
