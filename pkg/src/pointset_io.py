import json
import logging
import dataclasses
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np

from .errors import PointSetFormatError
from .geometry import CenterSet, WeightedPointSet

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _parse_float(token: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise PointSetFormatError(f"not a number: {token!r}", line)
    if not np.isfinite(value):
        raise PointSetFormatError(f"non-finite value {token!r}", line)
    return value


def parse_pointset_text(text: str) -> WeightedPointSet:
    """Header 'n d' or 'n d weighted', then n rows of d coordinates (plus a weight)."""
    lines = [(no, raw.split()) for no, raw in enumerate(text.splitlines(), start=1)]
    lines = [(no, tokens) for no, tokens in lines if tokens]
    if not lines:
        raise PointSetFormatError("malformed header: file is empty", 1)

    header_no, header = lines[0]
    weighted = len(header) == 3 and header[2] == 'weighted'
    if len(header) not in (2, 3) or (len(header) == 3 and not weighted):
        raise PointSetFormatError(f"malformed header {' '.join(header)!r}", header_no)
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise PointSetFormatError(f"malformed header {' '.join(header)!r}", header_no)
    if n < 0 or d < 0:
        raise PointSetFormatError("malformed header: negative size", header_no)

    rows = lines[1:]
    if len(rows) != n:
        last = rows[-1][0] if rows else header_no
        raise PointSetFormatError(f"row count mismatch: header says {n}, found {len(rows)}", last)

    width = d + 1 if weighted else d
    points = np.zeros((n, d))
    weights = np.ones(n)
    for r, (no, tokens) in enumerate(rows):
        if len(tokens) != width:
            raise PointSetFormatError(f"row length mismatch: expected {width} values, got {len(tokens)}", no)
        values = [_parse_float(tok, no) for tok in tokens]
        points[r] = values[:d]
        if weighted:
            if values[d] < 0:
                raise PointSetFormatError(f"negative weight {tokens[d]}", no)
            weights[r] = values[d]
    return WeightedPointSet(points, weights)


def parse_pointset(path: PathLike) -> WeightedPointSet:
    with open(path, 'r') as f:
        P = parse_pointset_text(f.read())
    logger.debug(f"Loaded {P.n} points of dimension {P.dim} from {path}")
    return P


def format_pointset(P: WeightedPointSet, weighted: Optional[bool] = None) -> str:
    if weighted is None:
        weighted = bool(np.any(P.weights != 1.0))
    lines = [f"{P.n} {P.dim} weighted" if weighted else f"{P.n} {P.dim}"]
    for point, weight in zip(P.points, P.weights):
        values = [format(float(v), '.17g') for v in point]
        if weighted:
            values.append(format(float(weight), '.17g'))
        lines.append(' '.join(values))
    return '\n'.join(lines) + '\n'


def write_pointset(path: PathLike, P: WeightedPointSet, weighted: Optional[bool] = None):
    with open(path, 'w') as f:
        f.write(format_pointset(P, weighted))
    logger.info(f"Wrote {P.n} points to {path}")


def parse_indices(path: PathLike) -> List[int]:
    """Whitespace-separated non-negative integers (coreset support files)."""
    indices = []
    with open(path, 'r') as f:
        for no, raw in enumerate(f, start=1):
            for token in raw.split():
                try:
                    value = int(token)
                except ValueError:
                    raise PointSetFormatError(f"not an index: {token!r}", no)
                if value < 0:
                    raise PointSetFormatError(f"negative index {value}", no)
                indices.append(value)
    return indices


def serialize_data(data: Any) -> Any:
    """Plain JSON types from dataclasses, numpy values and containers."""
    if isinstance(data, CenterSet):
        return data.centers.tolist()
    if isinstance(data, WeightedPointSet):
        return {'points': data.points.tolist(), 'weights': data.weights.tolist()}
    if dataclasses.is_dataclass(data) and not isinstance(data, type):
        return {f.name: serialize_data(getattr(data, f.name)) for f in dataclasses.fields(data)}
    if isinstance(data, np.ndarray):
        return serialize_data(data.tolist())
    if isinstance(data, np.generic):
        return serialize_data(data.item())
    if isinstance(data, float) and not np.isfinite(data):
        return str(data)
    if isinstance(data, dict):
        return {str(key): serialize_data(value) for key, value in data.items()}
    if isinstance(data, (list, tuple, set, frozenset)):
        items = sorted(data) if isinstance(data, (set, frozenset)) else data
        return [serialize_data(item) for item in items]
    if isinstance(data, Path):
        return str(data)
    return data


def write_json(path: PathLike, payload: Dict):
    with open(path, 'w') as f:
        json.dump(serialize_data(payload), f, sort_keys=True, indent=2)
        f.write('\n')
    logger.info(f"Wrote report {path}")


def read_json(path: PathLike) -> Dict:
    with open(path, 'r') as f:
        return json.load(f)
