"""
Middleware - Request logging and service headers
"""
import logging
import re
import time

from starlette.middleware.base import BaseHTTPMiddleware
from starlette.requests import Request
from starlette.responses import Response

logger = logging.getLogger(__name__)

SAMPLE_PATH = re.compile(r"^/streams/(?P<stream_id>[^/]+)/samples$")


class RequestLoggingMiddleware(BaseHTTPMiddleware):
    """
    Logs requests with their duration and tags responses with the served
    placement. Sample pushes arrive once per PMU reporting interval and are
    logged at debug level only.
    """

    async def dispatch(self, request: Request, call_next) -> Response:
        if request.url.path == "/health":
            return await call_next(request)

        started = time.perf_counter()
        sample_push = SAMPLE_PATH.match(request.url.path)
        log = logger.debug if sample_push else logger.info
        target = (
            f"sample for stream {sample_push['stream_id']}"
            if sample_push
            else f"{request.method} {request.url.path}"
        )
        client_ip = request.client.host if request.client else "unknown"
        log(f"→ {target} from {client_ip}")

        try:
            response = await call_next(request)
        except Exception as e:
            elapsed = (time.perf_counter() - started) * 1000
            logger.error(f"✗ {target} → ERROR ({elapsed:.2f}ms): {e}")
            raise

        elapsed = (time.perf_counter() - started) * 1000
        if response.status_code >= 400:
            logger.warning(f"← {target} → {response.status_code} ({elapsed:.2f}ms)")
        else:
            log(f"← {target} → {response.status_code} ({elapsed:.2f}ms)")

        response.headers["X-Process-Time"] = f"{elapsed:.2f}ms"
        response.headers["X-Served-By"] = "TopoWatch"
        library = getattr(request.app.state, "library", None)
        if library is not None:
            response.headers["X-Placement"] = library.placement.name
        return response
