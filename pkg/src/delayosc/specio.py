"""JSON equation files, CSV trajectories and atomic file output."""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .fnspec import Equation, Piece, PiecewiseFn
from .integrator import History, Trajectory


def atomic_write(path, data: str | bytes) -> None:
    """Write ``data`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        # mkstemp creates 0600; give the result ordinary permissions
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(tmp, 0o666 & ~umask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- equations ---------------------------------------------------------------------

def fn_to_dict(f: PiecewiseFn) -> dict:
    pieces = []
    for p in f.pieces:
        if p.kind == "constant":
            params = {"value": p.intercept}
        else:
            params = {"slope": p.slope, "intercept": p.intercept}
        pieces.append({"start": p.start, "end": p.end, "kind": p.kind, "params": params})
    ext = {"type": f.extension}
    if f.extension != "none":
        ext["period"] = f.period
    return {"pieces": pieces, "extension": ext}


def equation_to_dict(eq: Equation, history: History | None = None) -> dict:
    out = {"coefficient": fn_to_dict(eq.c), "delay": fn_to_dict(eq.tau)}
    if history is not None:
        out["t0"] = history.t0
        out["history"] = {"samples": [[t, v] for t, v in zip(history.times.tolist(), history.values.tolist())]}
    return out


def _number(obj, key: str, where: str) -> float:
    if key not in obj:
        raise ParseError(f"{where}: missing '{key}'")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ParseError(f"{where}: '{key}' must be a number, got {val!r}")
    return float(val)


def fn_from_dict(obj: dict, role: str, where: str) -> PiecewiseFn:
    if not isinstance(obj, dict) or "pieces" not in obj:
        raise ParseError(f"{where}: expected an object with 'pieces'")
    raw = obj["pieces"]
    if not isinstance(raw, list) or not raw:
        raise ParseError(f"{where}.pieces: expected a non-empty list")
    pieces = []
    for i, item in enumerate(raw):
        at = f"{where}.pieces[{i}]"
        if not isinstance(item, dict):
            raise ParseError(f"{at}: expected an object")
        start, end = _number(item, "start", at), _number(item, "end", at)
        kind = item.get("kind", "constant")
        params = item.get("params", {})
        if not isinstance(params, dict):
            raise ParseError(f"{at}.params: expected an object")
        try:
            if kind == "constant":
                pieces.append(Piece.constant(start, end, _number(params, "value", f"{at}.params")))
            elif kind == "affine":
                pieces.append(Piece.affine(
                    start, end,
                    _number(params, "slope", f"{at}.params"),
                    _number(params, "intercept", f"{at}.params"),
                ))
            else:
                raise ParseError(f"{at}: unknown kind {kind!r}")
        except ValidationError as exc:
            raise ValidationError(f"{at}: {exc}") from None
    ext = obj.get("extension", {"type": "none"})
    if isinstance(ext, str):
        ext = {"type": ext}
    if not isinstance(ext, dict) or "type" not in ext:
        raise ParseError(f"{where}.extension: expected an object with 'type'")
    etype = ext["type"]
    if etype != "none" and "period" in ext:
        period = _number(ext, "period", f"{where}.extension")
        if abs(period - pieces[-1].end) > 1e-12 * max(1.0, period):
            raise ValidationError(
                f"{where}.extension: period {period} differs from the base interval end {pieces[-1].end}"
            )
    try:
        return PiecewiseFn(pieces, extension=etype, role=role)
    except ValidationError as exc:
        raise type(exc)(f"{where}: {exc}") from None


def history_from_dict(obj: dict, eq: Equation) -> History:
    t0 = float(obj.get("t0", 0.0))
    hist = obj.get("history", {"constant": 1.0})
    start = eq.tau.tau_min(t0)
    if not isinstance(hist, dict):
        raise ParseError("history: expected an object")
    if "constant" in hist:
        return History.constant(_number(hist, "constant", "history"), start, t0)
    if "samples" in hist:
        try:
            arr = np.asarray(hist["samples"], dtype=float)
        except (TypeError, ValueError):
            raise ParseError("history.samples: expected [[t, x], ...]") from None
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ParseError("history.samples: expected [[t, x], ...]")
        try:
            h = History(arr[:, 0], arr[:, 1])
        except ValueError as exc:
            raise ValidationError(f"history.samples: {exc}") from None
        if abs(h.t0 - t0) > 1e-12 * max(1.0, abs(t0)) and "t0" in obj:
            raise ValidationError(f"history ends at {h.t0}, expected t0 = {t0}")
        return h
    raise ParseError("history: expected 'constant' or 'samples'")


def equation_from_dict(obj) -> Equation:
    if not isinstance(obj, dict):
        raise ParseError("top level: expected an object")
    for key in ("coefficient", "delay"):
        if key not in obj:
            raise ParseError(f"top level: missing '{key}'")
    c = fn_from_dict(obj["coefficient"], "coefficient", "coefficient")
    tau = fn_from_dict(obj["delay"], "delay", "delay")
    return Equation.build(c, tau)


def load_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def parse_equation_file(path) -> Equation:
    """Read an equation spec and compute its anchors."""
    return equation_from_dict(load_json(path))


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_equation_file(path, eq: Equation, history: History | None = None) -> None:
    atomic_write(path, dumps(equation_to_dict(eq, history)))


# -- trajectories ------------------------------------------------------------------

def trajectory_csv(x: Trajectory) -> str:
    lines = ["t,x"]
    lines.extend(f"{t:.12g},{v:.12g}" for t, v in zip(x.times.tolist(), x.values.tolist()))
    return "\n".join(lines) + "\n"


def read_trajectory_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]
