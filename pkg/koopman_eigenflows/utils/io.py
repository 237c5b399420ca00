import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Union

import pandas as pd

from ..exceptions import MissingArtifactError

PathLike = Union[str, os.PathLike]

# 17 significant digits round-trips every float64
FLOAT_FORMAT = '%.17g'


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write text next to its destination and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'w', newline='') as handle:
            handle.write(text)
        os.replace(tmp, path)
    except Exception:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def write_json(path: PathLike, document: Dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(document, indent=2, sort_keys=True) + "\n")


def read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError("Document not found", str(path))
    with open(path) as handle:
        return json.load(handle)


def write_csv(path: PathLike, df: pd.DataFrame) -> Path:
    return atomic_write_text(path, df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))


def read_csv(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError("CSV file not found", str(path))
    return pd.read_csv(path, float_precision='round_trip')
