"""
Newline-delimited JSON trace of chip pin operations.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union


class SessionTrace:
    """
    One record per pin operation: op, mode, pi, si, po, so, masked.
    Records are kept in memory and, with a path, appended to a file.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None, keep: bool = True):
        self.path = Path(path) if path is not None else None
        self.keep = keep
        self.records: List[Dict[str, Any]] = []
        self._handle = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w")

    def record(self, op: str, mode: str, pi: Sequence[int], si: Optional[Sequence[int]],
               po: Sequence[int], so: Optional[Sequence[int]], masked: bool) -> None:
        entry = {
            "op": op,
            "mode": mode,
            "pi": "".join(map(str, pi)),
            "si": None if si is None else "".join(map(str, si)),
            "po": "".join(map(str, po)),
            "so": None if so is None else "".join(map(str, so)),
            "masked": masked,
        }
        if self.keep:
            self.records.append(entry)
        if self._handle is not None:
            self._handle.write(json.dumps(entry) + "\n")

    def close(self) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def __enter__(self) -> "SessionTrace":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    @staticmethod
    def read(path: Union[str, Path]) -> List[Dict[str, Any]]:
        with open(path) as f:
            return [json.loads(line) for line in f if line.strip()]
