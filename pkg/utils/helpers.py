"""
Helper utilities for the estimators and the experiment runner.
"""

import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Iterable, List, Mapping, Sequence

import numpy as np
import scipy

from models import RngSeed

logger = logging.getLogger(__name__)


class RNG:
    """Random number generator utilities.

    Every random draw in the package goes through a ``Generator`` built here,
    so a (master seed, stream index) pair replays bit-identically.
    """

    @staticmethod
    def generator(seed: RngSeed) -> np.random.Generator:
        """PCG64 generator for the stream named by ``seed``."""
        sequence = np.random.SeedSequence(entropy=seed.master_seed, spawn_key=(seed.stream_index,))
        return np.random.Generator(np.random.PCG64(sequence))

    @staticmethod
    def unit_sphere(rng: np.random.Generator, n: int, complex_valued: bool = False) -> np.ndarray:
        """Uniform draw from the unit sphere of R^n (or C^n)."""
        if complex_valued:
            v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        else:
            v = rng.standard_normal(n)
        return v / np.linalg.norm(v)


def format_float(value: float) -> str:
    """Serialize a float with 17 significant digits (round-trip exact)."""
    return f"{float(value):.17g}"


def format_cell(value: Any) -> str:
    """Serialize one CSV cell: ints verbatim, floats at full precision."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return f"{format_float(value.real)}{'+' if value.imag >= 0 else '-'}{format_float(abs(value.imag))}j"
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write ``rows`` under ``header`` to ``path``; returns the number of data rows."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row width {len(row)} does not match header width {len(header)}")
            writer.writerow([format_cell(cell) for cell in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return count


def content_hash(payload: Mapping[str, Any]) -> str:
    """SHA-256 over the canonical JSON form of ``payload``."""
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'), default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def write_manifest(csv_path: Path, config: Mapping[str, Any]) -> Path:
    """Write ``<csv>.manifest.json`` echoing the resolved config and its content hash."""
    csv_path = Path(csv_path)
    manifest_path = csv_path.with_name(csv_path.name + '.manifest.json')
    manifest = {
        'config': dict(config),
        'content_hash': content_hash(config),
        'versions': {'numpy': np.__version__, 'scipy': scipy.__version__},
        'output': csv_path.name,
    }
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2, default=str) + '\n')
    return manifest_path


def log_grid(low: float, high: float, count: int) -> List[float]:
    """``count`` logarithmically spaced points from ``low`` to ``high`` inclusive."""
    return [float(v) for v in np.geomspace(low, high, count)]


def to_db(value: float) -> float:
    """10·log10, with zero mapped to -inf."""
    if value <= 0.0:
        return float('-inf')
    return 10.0 * float(np.log10(value))
