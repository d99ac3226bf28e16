"""Line-oriented run configuration: ``key = value`` lines with an optional
``[case]`` section header. ``#`` starts a comment; blank lines are ignored.

Keys (all optional except ``case``):
    case          zalesak | vortex
    sizes         comma-separated grid sizes, default 100
    beta0         tanh steepness in cell units, default 6
    cfl           time step factor in (0, 1), default 0.25
    outdir        output directory, default "out"
    fields        true/false, write final field CSVs (default true)
    contours      true/false, write vof 0.5 contour CSVs (default true)
    psi           true/false, write interface-polynomial segment CSVs (default false)
    mass_history  true/false, write per-step mass CSVs (default true)
    snapshots     comma-separated times for intermediate field dumps, default none
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Malformed configuration document; message carries the line number."""


@dataclass
class RunConfig:
    case: str
    sizes: tuple[int, ...] = (100,)
    beta0: float = 6.0
    cfl: float = 0.25
    outdir: str = "out"
    fields: bool = True
    contours: bool = True
    psi: bool = False
    mass_history: bool = True
    snapshots: tuple[float, ...] = ()

    def __post_init__(self):
        if self.case not in ("zalesak", "vortex"):
            raise ConfigError(f"unknown case {self.case!r}")
        if any(n < 16 for n in self.sizes) or not self.sizes:
            raise ConfigError(f"grid sizes must be >= 16, got {self.sizes}")
        if not self.beta0 > 0.0:
            raise ConfigError(f"beta0 must be positive, got {self.beta0}")
        if not (0.0 < self.cfl < 1.0):
            raise ConfigError(f"cfl must lie in (0, 1), got {self.cfl}")


_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def _parse_bool(raw: str, lineno: int, key: str) -> bool:
    try:
        return _BOOL_WORDS[raw.strip().lower()]
    except KeyError:
        raise ConfigError(f"line {lineno}: malformed boolean for {key!r}: {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration document (see module docstring)."""
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if line != "[case]":
                raise ConfigError(f"line {lineno}: unknown section {line!r}")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw = line.partition("=")
        key = key.strip().lower()
        raw = raw.strip()
        try:
            if key == "case":
                values["case"] = raw.lower()
            elif key == "sizes":
                values["sizes"] = tuple(int(tok) for tok in raw.split(","))
            elif key == "beta0":
                values["beta0"] = float(raw)
            elif key == "cfl":
                values["cfl"] = float(raw)
            elif key == "outdir":
                values["outdir"] = raw
            elif key in ("fields", "contours", "psi", "mass_history"):
                values[key] = _parse_bool(raw, lineno, key)
            elif key == "snapshots":
                values["snapshots"] = tuple(float(tok) for tok in raw.split(","))
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError:
            raise ConfigError(
                f"line {lineno}: malformed value for {key!r}: {raw!r}"
            ) from None
    if "case" not in values:
        raise ConfigError("missing required key 'case'")
    try:
        return RunConfig(**values)  # type: ignore[arg-type]
    except ConfigError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
