"""CSV and JSON writers for result tables."""
import json
import sys
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.17g"


def format_float(value: float) -> str:
    """Render a float with 17 significant digits."""
    return FLOAT_FORMAT % value


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy containers and scalars into JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return None if np.isnan(value) else value
    return obj


def dataframe_to_csv(frame: pd.DataFrame) -> str:
    """Serialize a result table with a fixed float format and newline terminator."""
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, na_rep="", lineterminator="\n")


def dumps_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), indent=2) + "\n"


def write_text(text: str, output: str | None) -> None:
    """Write to ``output`` or to stdout when no path is given."""
    if output is None or output == "-":
        sys.stdout.write(text)
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
