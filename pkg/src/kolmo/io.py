"""Config parsing, CSV/JSON writers and run manifests."""

import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfig, KolmoError
from .exact import ExactSpec, eval_exact, exact_from_dict
from .integrator import StepperConfig
from .models import ModelSpec
from .spectral import PhysicalField, SpectralField, TorusConfig, random_field, to_physical, to_spectral

SCHEMA_VERSION = 1
FLOAT_FMT = "%.17g"


class ConfigError(KolmoError):
    """A config problem tied to a file position."""

    def __init__(self, path, line, field, message):
        self.path, self.line, self.field = str(path), line, field
        where = f"{self.path}:{line}" if line else self.path
        super().__init__(f"{where}: {field}: {message}" if field else f"{where}: {message}")


# ---------------------------------------------------------------------------
# reading
# ---------------------------------------------------------------------------

def _key_line(text, key):
    if key is None:
        return None
    pat = re.compile(r'"' + re.escape(str(key)) + r'"\s*:')
    for i, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return i
    return None


def load_json(path):
    """Parse a JSON config and check its schema version; returns ``(dict, text)``."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(path, None, None, f"cannot read config ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(path, exc.lineno, None, exc.msg) from None
    if not isinstance(data, dict):
        raise ConfigError(path, 1, None, "top level must be a JSON object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(path, _key_line(text, "schema_version") or 1, "schema_version",
                          f"expected {SCHEMA_VERSION}, got {version!r}")
    return data, text


def anchored(path, text, exc):
    """Turn a validation error into a ``ConfigError`` pointing at the offending key."""
    name = getattr(exc, "field", None)
    msg = exc.message if isinstance(exc, InvalidConfig) else str(exc)
    return ConfigError(path, _key_line(text, name), name, msg)


def _only(d, allowed, where):
    if not isinstance(d, dict):
        raise InvalidConfig(where, "must be a JSON object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise InvalidConfig(extra[0], f"unknown key in {where}")
    return d


def _number(d, key, default=None, kind=float):
    v = d.get(key, default)
    if v is None:
        raise InvalidConfig(key, "is required")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidConfig(key, f"must be a number, got {v!r}")
    if kind is int and int(v) != v:
        raise InvalidConfig(key, f"must be an integer, got {v!r}")
    return kind(v)


@dataclass
class SimulationConfig:
    grid: TorusConfig
    model: ModelSpec
    stepper: StepperConfig
    initial: SpectralField
    snapshots: tuple = ()
    exact: ExactSpec = None
    seed: int = None
    raw: dict = field(default_factory=dict, repr=False)


_SIM_KEYS = {"schema_version", "grid", "model", "stepper", "initial", "snapshots", "seed"}


def _grid_from(d, exact):
    d = _only(d or {}, {"alpha", "beta", "nx", "ny", "dealias_fraction"}, "grid")
    nx = _number(d, "nx", 128, int)
    ny = _number(d, "ny", 128, int)
    frac = _number(d, "dealias_fraction", 2.0 / 3.0)
    if exact is not None:
        for key in ("alpha", "beta"):
            if key in d:
                raise InvalidConfig(key, "is fixed by the exact solution; leave it out")
        return exact.grid(nx, ny, frac)
    return TorusConfig(alpha=_number(d, "alpha"), nx=nx, ny=ny,
                       beta=_number(d, "beta", 1.0), dealias_fraction=frac)


def _model_from(d, exact):
    if d is None:
        if exact is None:
            raise InvalidConfig("model", "is required")
        return exact.model()
    d = _only(d, {"variant", "a", "nu", "sigma"}, "model")
    if "variant" not in d:
        raise InvalidConfig("variant", "is required")
    return ModelSpec(d["variant"], a=_number(d, "a", 0, int), nu=_number(d, "nu", 0.0),
                     sigma=_number(d, "sigma", 1, int))


def initial_from(d, grid, exact=None, seed=None):
    """Initial vorticity from ``{"exact": ...}``, ``{"modes": ...}`` or ``{"random": ...}``."""
    if exact is not None:
        return eval_exact(exact, 0.0, grid)
    d = _only(d, {"modes", "random"}, "initial")
    if len(d) != 1:
        raise InvalidConfig("initial", "give exactly one of exact, modes, random")
    if "modes" in d:
        modes = {}
        for entry in d["modes"]:
            if not (isinstance(entry, list) and len(entry) in (3, 4)):
                raise InvalidConfig("modes", f"entries are [j, m, re] or [j, m, re, im], got {entry!r}")
            j, m = int(entry[0]), int(entry[1])
            modes[(j, m)] = complex(entry[2], entry[3] if len(entry) == 4 else 0.0)
        return SpectralField.from_modes(grid, modes)
    r = _only(d["random"], {"seed", "k2_min", "k2_max", "l2", "in_x"}, "random")
    s = r.get("seed", seed)
    if s is None:
        raise InvalidConfig("seed", "random initial data needs a seed")
    rng = np.random.default_rng(int(s))
    l2 = r.get("l2", 1.0)
    return random_field(grid, rng, _number(r, "k2_min", 0.0), _number(r, "k2_max", 16.0),
                        in_x=bool(r.get("in_x", True)), l2=None if l2 is None else float(l2))


def parse_simulation(data, seed=None) -> SimulationConfig:
    _only(data, _SIM_KEYS, "config")
    init = data.get("initial")
    if not isinstance(init, dict):
        raise InvalidConfig("initial", "is required")
    exact = None
    if "exact" in init:
        if len(init) != 1:
            raise InvalidConfig("initial", "give exactly one of exact, modes, random")
        exact = exact_from_dict(init["exact"])
    if seed is None:
        seed = data.get("seed")
    grid = _grid_from(data.get("grid"), exact)
    model = _model_from(data.get("model"), exact)
    st = _only(data.get("stepper") or {}, {"dt", "t_end", "sample_every", "cfl_safety"}, "stepper")
    stepper = StepperConfig(dt=_number(st, "dt", 0.01), t_end=_number(st, "t_end"),
                            sample_every=_number(st, "sample_every", kind=int)
                            if "sample_every" in st else None,
                            cfl_safety=_number(st, "cfl_safety", 0.5))
    snaps = data.get("snapshots", [])
    if not isinstance(snaps, list):
        raise InvalidConfig("snapshots", "must be a list of times")
    for t in snaps:
        if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0 <= t <= stepper.t_end:
            raise InvalidConfig("snapshots", f"times must lie in [0, t_end], got {t!r}")
    w0 = initial_from(init, grid, exact, seed)
    return SimulationConfig(grid, model, stepper, w0, tuple(sorted(set(float(t) for t in snaps))),
                            exact, seed, data)


# ---------------------------------------------------------------------------
# writing
# ---------------------------------------------------------------------------

def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return FLOAT_FMT % v


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_timeseries(path, t, l2, x, gradx2):
    return write_csv(path, ("t", "l2", "x", "gradx2"), zip(t, l2, x, gradx2))


def time_label(t):
    return "t_" + ("%.10g" % t)


def write_field(path, w: SpectralField):
    """Physical vorticity as ``x,y,omega`` rows in row-major grid order."""
    xg, yg = w.config.grid()
    om = to_physical(w).values
    return write_csv(path, ("x", "y", "omega"), zip(xg.ravel(), yg.ravel(), om.ravel()))


def read_field(path, config: TorusConfig) -> SpectralField:
    """Inverse of ``write_field`` for a known grid."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if arr.shape != (config.nx * config.ny, 3):
        raise ValueError(f"{path}: expected {config.nx * config.ny} rows of x,y,omega")
    om = arr[:, 2].reshape(config.nx, config.ny)
    return to_spectral(PhysicalField(config, om))


def dump_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=True,
                      default=_jsonable) + "\n"


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (set, tuple)):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_json(obj))
    return path


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_digest(obj):
    return hashlib.sha256(json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def write_manifest(out_dir, command, config, seed, started, finished, files, version):
    """Record the run and the sha256 of every output file; returns the manifest dict."""
    out_dir = Path(out_dir)
    entries = []
    for f in sorted(set(Path(p) for p in files)):
        entries.append({"path": f.relative_to(out_dir).as_posix(), "sha256": sha256_file(f)})
    manifest = {
        "command": command,
        "config_digest": config_digest(config),
        "seed": seed,
        "version": version,
        "started": started,
        "finished": finished,
        "outputs": entries,
    }
    write_json(out_dir / "manifest.json", manifest)
    return manifest


def default_out_dir(name):
    root = os.environ.get("KOLMO_OUT_DIR", "kolmo-out")
    return Path(root) / name
