"""
Cache - Versioned JSON storage for signature libraries

Floats are written with their shortest round-trip repr, so a saved library
loads back bit-identical.
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from grid.model import Grid
from signatures.library import SignatureKey, SignatureLibrary
from signatures.placement import Placement

logger = logging.getLogger(__name__)

FORMAT_NAME = "topowatch-signature-library"
FORMAT_VERSION = 1


class LibraryCacheError(ValueError):
    """Raised when a cached library is unreadable or stale"""
    pass


class LibraryEntry(BaseModel):
    breaker: int
    context: List[int]
    re: List[float]
    im: List[float]


class LibraryFile(BaseModel):
    format: str = FORMAT_NAME
    version: int = FORMAT_VERSION
    fingerprint: str
    r: int
    placement: Placement
    entries: List[LibraryEntry]


def _to_complex(re: List[float], im: List[float]) -> np.ndarray:
    vector = np.empty(len(re), dtype=complex)
    vector.real = re
    vector.imag = im
    return vector


def save_library(library: SignatureLibrary, path: Union[str, Path]) -> None:
    document = LibraryFile(
        fingerprint=library.fingerprint,
        r=library.r,
        placement=library.placement,
        entries=[
            LibraryEntry(
                breaker=key.breaker,
                context=list(key.context),
                re=[float(v) for v in vector.real],
                im=[float(v) for v in vector.imag],
            )
            for key, vector in library.entries.items()
        ],
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document.model_dump(), indent=1))
    logger.info(f"Saved library of {len(library)} signatures to {path}")


def load_library(path: Union[str, Path], grid: Optional[Grid] = None) -> SignatureLibrary:
    """
    Load a cached library, checking format version and grid fingerprint

    Raises:
        FileNotFoundError: missing file
        LibraryCacheError: wrong format, version, or a different grid
    """
    path = Path(path)
    try:
        document = LibraryFile.model_validate(json.loads(path.read_text()))
    except FileNotFoundError:
        logger.error(f"Library file not found: {path}")
        raise
    except (json.JSONDecodeError, ValidationError) as e:
        raise LibraryCacheError(f"Unreadable library file {path}: {e}")

    if document.format != FORMAT_NAME or document.version != FORMAT_VERSION:
        raise LibraryCacheError(
            f"Library {path} has format {document.format} v{document.version}, "
            f"expected {FORMAT_NAME} v{FORMAT_VERSION}"
        )
    if grid is not None and document.fingerprint != grid.fingerprint:
        raise LibraryCacheError(f"Library {path} was built for a different network")

    entries = {
        SignatureKey(breaker=e.breaker, context=tuple(e.context)): _to_complex(e.re, e.im)
        for e in document.entries
    }
    logger.info(f"Loaded library of {len(entries)} signatures from {path}")
    return SignatureLibrary(
        entries=entries,
        placement=document.placement,
        fingerprint=document.fingerprint,
        r=document.r,
    )
