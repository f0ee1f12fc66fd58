"""JSON run configuration.

Example::

    {"n": 1, "m": 3,
     "factors": [{"lambda": [[-1.3, -0.2], [-0.6, 0.5], ...]}],
     "beta": [[1, 1, 1, 0, 0, 0]],
     "base_point": [0.2, 0.1],
     "tolerances": {"integration": 1e-13, "theta": 1e-14, "fd_step": 1e-5, "check": 1e-4},
     "seed": 12345,
     "checks": ["ode", "ratio"]}

Only ``n``, ``m`` and ``factors`` are required.  Complex numbers are
``[re, im]`` pairs (a bare real is accepted too).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .curve import FiberProductCurve, SurfacePoint, point_on_sheet, validate_curve
from .divisors import BetaVector
from .errors import InvalidCurve, InvalidInput, ShapeMismatch
from .thomae import CHECK_ORDER, DEFAULT_CHECK_TOL, DEFAULT_FD_STEP, DEFAULT_SEED
from .homology import PERIOD_TOL

KNOWN_KEYS = {"n", "m", "factors", "beta", "base_point", "tolerances", "seed", "checks", "name"}


@dataclass(frozen=True)
class Tolerances:
    integration: float = PERIOD_TOL
    theta: float = 1e-14
    fd_step: float = DEFAULT_FD_STEP
    check: float = DEFAULT_CHECK_TOL


@dataclass(frozen=True)
class Config:
    n: int
    m: int
    lambdas: tuple
    beta: tuple | None = None
    base_point: complex | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    seed: int = DEFAULT_SEED
    checks: tuple = CHECK_ORDER
    name: str = ""

    @property
    def curve(self) -> FiberProductCurve:
        return validate_curve(self.n, self.m, self.lambdas)

    def base_point_on(self, curve: FiberProductCurve) -> SurfacePoint | None:
        if self.base_point is None:
            return None
        return point_on_sheet(curve, self.base_point)

    def to_json(self) -> dict:
        d = {
            "n": self.n,
            "m": self.m,
            "factors": [{"lambda": [[z.real, z.imag] for z in row]} for row in self.lambdas],
            "tolerances": vars(self.tolerances).copy(),
            "seed": self.seed,
            "checks": list(self.checks),
        }
        if self.beta is not None:
            d["beta"] = [list(r) for r in self.beta]
        if self.base_point is not None:
            d["base_point"] = [self.base_point.real, self.base_point.imag]
        return d

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **kw) -> "Config":
        d = dict(vars(self))
        d.update(kw)
        return Config(**d)


def _complex(v, where: str) -> complex:
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        return complex(v[0], v[1])
    raise InvalidInput(f"{where}: expected a number or [re, im], got {v!r}")


def _int(d: dict, key: str, default=None) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise InvalidInput(f"'{key}' must be an integer, got {v!r}")
    return v


def parse_config(data: dict, name: str = "") -> Config:
    """Validate a decoded JSON config.

    Raises
    ------
    InvalidInput
        Unknown keys, wrong types, an invalid curve, a ``beta`` of the
        wrong shape or unknown check names.
    """
    if not isinstance(data, dict):
        raise InvalidInput("config must be a JSON object")
    extra = set(data) - KNOWN_KEYS
    if extra:
        raise InvalidInput(f"unknown config keys: {sorted(extra)}")
    for key in ("n", "m", "factors"):
        if key not in data:
            raise InvalidInput(f"missing required key '{key}'")
    n, m = _int(data, "n"), _int(data, "m")
    factors = data["factors"]
    if not isinstance(factors, list) or not all(isinstance(f, dict) and "lambda" in f for f in factors):
        raise InvalidInput("'factors' must be a list of {\"lambda\": [...]} objects")
    lam = []
    for j, f in enumerate(factors):
        if not isinstance(f["lambda"], list):
            raise InvalidInput(f"factor {j + 1}: 'lambda' must be a list")
        lam.append(tuple(_complex(z, f"factor {j + 1}, point {i + 1}") for i, z in enumerate(f["lambda"])))
    lam = tuple(lam)
    try:
        curve = validate_curve(n, m, lam)
    except InvalidCurve as exc:
        raise InvalidInput(f"invalid curve: {exc}") from exc

    beta = None
    if data.get("beta") is not None:
        try:
            beta = BetaVector.from_any(curve, data["beta"]).entries
        except (ShapeMismatch, TypeError, ValueError) as exc:
            raise InvalidInput(f"invalid beta: {exc}") from exc

    base = None
    if data.get("base_point") is not None:
        base = _complex(data["base_point"], "base_point")
        if np.min(np.abs(curve.branch_points - base)) < 1e-3 * curve.min_separation():
            raise InvalidInput("base_point is (nearly) a branch point")

    tol_in = data.get("tolerances", {})
    if not isinstance(tol_in, dict) or set(tol_in) - set(vars(Tolerances())):
        raise InvalidInput(f"'tolerances' accepts only {sorted(vars(Tolerances()))}")
    tol_kw = {}
    for k, v in tol_in.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise InvalidInput(f"tolerance '{k}' must be a positive number, got {v!r}")
        tol_kw[k] = float(v)

    checks = data.get("checks", list(CHECK_ORDER))
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise InvalidInput("'checks' must be a list of names")
    unknown = set(checks) - set(CHECK_ORDER)
    if unknown:
        raise InvalidInput(f"unknown checks {sorted(unknown)}; known: {list(CHECK_ORDER)}")
    seed = _int(data, "seed", DEFAULT_SEED)
    return Config(n, m, lam, beta, base, Tolerances(**tol_kw), seed, tuple(checks), data.get("name", name))


def load_config(path) -> Config:
    p = Path(path)
    try:
        data = json.loads(p.read_text())
    except FileNotFoundError as exc:
        raise InvalidInput(f"config file not found: {p}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{p}: not valid JSON ({exc})") from exc
    return parse_config(data, p.stem)


def default_instance(n: int, m: int) -> Config:
    """Documented default configuration for ``(n, m)`` in
    ``{(1, 2), (1, 3), (2, 2)}``."""
    res = resources.files("fiberthomae").joinpath(f"data/instances/n{n}m{m}.json")
    if not res.is_file():
        raise InvalidInput(f"no default instance for n={n}, m={m}")
    return parse_config(json.loads(res.read_text()), f"n{n}m{m}")
