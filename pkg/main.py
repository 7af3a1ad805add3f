"""
TopoWatch - Online breaker-action detection service
Main application entrypoint: loads the feeder and its signature library and
serves detector streams over HTTP
"""
import logging
import os
from contextlib import asynccontextmanager
from fastapi import FastAPI

from service.api import StreamRegistry, router as detection_router
from service.event_store import EventStore
from service.middleware import RequestLoggingMiddleware
from settings import Settings, configure_logging
from signatures.cache import load_library
from signatures.library import build_library
from signatures.placement import load_placement

# Configure logging (level updated from config on startup)
configure_logging()
logger = logging.getLogger(__name__)

CONFIG_PATH = os.environ.get("TOPOWATCH_CONFIG", "config.yaml")


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Application lifespan handler"""
    logger.info("Starting TopoWatch service...")
    settings = Settings(CONFIG_PATH)

    try:
        settings.load_config()
        configure_logging(settings.get_log_level())
        logger.info(f"Logging level set to: {settings.get_log_level()}")

        grid = settings.load_grid()
        library_config = settings.get_library_config()
        if library_config.cache:
            library = load_library(library_config.cache, grid)
        else:
            placement = load_placement(library_config.placement, grid)
            library = build_library(grid, placement, workers=library_config.workers)

        app.state.settings = settings
        app.state.grid = grid
        app.state.library = library
        app.state.streams = StreamRegistry()
        app.state.event_store = EventStore(settings.get_service_config().event_db)

    except Exception as e:
        logger.error(f"Failed to start service: {e}")
        raise

    yield

    logger.info("Shutting down TopoWatch service...")
    app.state.event_store.close()


app = FastAPI(
    title="TopoWatch",
    description="Breaker-action detection from phasor measurement streams",
    version="1.0.0",
    lifespan=lifespan,
)

app.add_middleware(RequestLoggingMiddleware)
app.include_router(detection_router, tags=["detection"])


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    state = app.state
    library = getattr(state, "library", None)
    return {
        "status": "healthy",
        "service": "topowatch",
        "version": "1.0.0",
        "network": state.grid.name if hasattr(state, "grid") else None,
        "placement": str(library.placement) if library else None,
        "signatures": len(library) if library else 0,
        "streams": len(state.streams) if hasattr(state, "streams") else 0,
    }


if __name__ == "__main__":
    import uvicorn

    settings = Settings(CONFIG_PATH)
    settings.load_config()
    service = settings.get_service_config()
    uvicorn.run(
        "main:app",
        host=service.host,
        port=service.port,
        reload=False,
        log_level=settings.get_log_level().lower(),
    )
