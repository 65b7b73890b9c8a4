"""Run configuration: a small line-oriented key=value format.

Example config file:

    mode = classical
    scenario = B
    step_size = 8
    seeds = 0, 1, 2, 3, 4
    out_dir = runs/b8

Blank lines and lines starting with # are ignored.  Unknown keys are
rejected so typos fail loudly instead of silently using a default.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

MODES = ("static", "classical", "dynamic")

# keys with a fixed meaning across every run
KNOWN_KEYS = ("mode", "scenario", "step_size", "iterations", "eta", "seeds",
              "horizon_days", "data_dir", "out_dir", "data_seed",
              "improved_window_slots", "timing")

_SLOTS_PER_DAY = 96


class ConfigError(ValueError):
    """Raised for malformed config text or inconsistent settings."""


def parse_config(text: str) -> dict[str, str]:
    """Parse key=value lines into a string mapping."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"config line {lineno}: duplicate key {key!r}")
        if not value:
            raise ConfigError(f"config line {lineno}: {key} has no value")
        out[key] = value
    return out


def _int_field(mapping, key, default=None, minimum=None):
    if key not in mapping:
        return default
    try:
        value = int(mapping[key])
    except ValueError:
        raise ConfigError(f"{key} must be an integer, "
                          f"got {mapping[key]!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be at least {minimum}")
    return value


def _float_field(mapping, key, default=None, minimum=None):
    if key not in mapping:
        return default
    try:
        value = float(mapping[key])
    except ValueError:
        raise ConfigError(f"{key} must be a number, "
                          f"got {mapping[key]!r}") from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be at least {minimum}")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one batch of simulations."""

    mode: str
    scenario: str = "B"
    step_size: int | None = None
    iterations: int | None = None
    eta: float = 1.0
    seeds: tuple[int, ...] = (0,)
    horizon_days: int = 3
    data_dir: str | None = None
    out_dir: str = "out"
    data_seed: int = 2021
    improved_window_slots: int = 8
    timing: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {'/'.join(MODES)}, "
                              f"got {self.mode!r}")
        given = [k for k in ("step_size", "iterations")
                 if getattr(self, k) is not None]
        if self.mode == "static":
            if given:
                raise ConfigError(
                    "static mode solves one window, so step_size and "
                    "iterations must be left out")
        elif len(given) != 1:
            raise ConfigError(f"{self.mode} mode needs exactly one of "
                              "step_size or iterations")
        if not self.seeds:
            raise ConfigError("seeds must list at least one seed")
        if self.eta < 0:
            raise ConfigError("eta must be nonnegative")
        if self.horizon_days < 1:
            raise ConfigError("horizon_days must be positive")
        if self.improved_window_slots < 1:
            raise ConfigError("improved_window_slots must be positive")
        horizon = self.horizon_days * _SLOTS_PER_DAY
        for key in given:
            value = getattr(self, key)
            if value < 1:
                raise ConfigError(f"{key} must be positive")
        # a dynamic budget is a count, not a spacing; only conversions
        # between the two views need the horizon to split evenly
        converted = (self.iterations if self.mode == "classical"
                     else self.step_size)
        if converted is not None and horizon % converted:
            raise ConfigError(
                f"{given[0]} {converted} does not divide the horizon of "
                f"{horizon} slots")

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_mapping(parse_config(text))

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RunConfig":
        if "mode" not in mapping:
            raise ConfigError("config must set mode")
        seeds: tuple[int, ...] = (0,)
        if "seeds" in mapping:
            parts = [p.strip() for p in mapping["seeds"].split(",")]
            try:
                seeds = tuple(int(p) for p in parts if p)
            except ValueError:
                raise ConfigError(
                    f"seeds must be a comma list of integers, "
                    f"got {mapping['seeds']!r}") from None
            if not seeds:
                raise ConfigError("seeds must list at least one seed")
        timing = True
        if "timing" in mapping:
            flag = mapping["timing"].lower()
            if flag not in ("on", "off"):
                raise ConfigError(f"timing must be on or off, "
                                  f"got {mapping['timing']!r}")
            timing = flag == "on"
        return cls(
            mode=mapping["mode"],
            scenario=mapping.get("scenario", "B"),
            step_size=_int_field(mapping, "step_size"),
            iterations=_int_field(mapping, "iterations"),
            eta=_float_field(mapping, "eta", default=1.0),
            seeds=seeds,
            horizon_days=_int_field(mapping, "horizon_days", default=3),
            data_dir=mapping.get("data_dir"),
            out_dir=mapping.get("out_dir", "out"),
            data_seed=_int_field(mapping, "data_seed", default=2021),
            improved_window_slots=_int_field(mapping,
                                             "improved_window_slots",
                                             default=8),
            timing=timing)

    @property
    def horizon_slots(self) -> int:
        return self.horizon_days * _SLOTS_PER_DAY

    def resolved_step(self) -> int | str:
        """Window spacing in slots for classical runs ("full" for static)."""
        if self.mode == "static":
            return "full"
        if self.step_size is not None:
            return self.step_size
        return self.horizon_slots // self.iterations

    def resolved_iterations(self) -> int:
        """Number of window starts the run will perform."""
        if self.mode == "static":
            return 1
        if self.iterations is not None:
            return self.iterations
        return self.horizon_slots // self.step_size

    def param_label(self):
        """Value for the results.csv param column."""
        if self.mode == "static":
            return "full"
        if self.mode == "classical":
            return self.resolved_step()
        return self.resolved_iterations()

    def canonical_text(self) -> str:
        """Normalized key=value form: same settings, same text."""
        pairs = [("mode", self.mode), ("scenario", self.scenario)]
        if self.step_size is not None:
            pairs.append(("step_size", self.step_size))
        if self.iterations is not None:
            pairs.append(("iterations", self.iterations))
        pairs += [("eta", repr(self.eta)),
                  ("seeds", ",".join(str(s) for s in self.seeds)),
                  ("horizon_days", self.horizon_days)]
        if self.data_dir is not None:
            pairs.append(("data_dir", self.data_dir))
        pairs += [("out_dir", self.out_dir),
                  ("data_seed", self.data_seed),
                  ("improved_window_slots", self.improved_window_slots),
                  ("timing", "on" if self.timing else "off")]
        return "\n".join(f"{k} = {v}" for k, v in pairs) + "\n"

    def config_hash(self) -> str:
        """Short digest identifying the settings (not the data files)."""
        return hashlib.sha256(
            self.canonical_text().encode()).hexdigest()[:12]
