"""Experiment configuration: file parsing, overrides, validation, hashing.

Config files are TOML (JSON accepted as an alternative encoding of the
same schema).  A config resolves to a frozen `ExperimentConfig` whose
identity hash covers everything that can change a result; output
location and thread count are deliberately excluded so re-running the
same experiment elsewhere or with a different pool size reproduces the
same records.

Random time draws happen at parse time from the config seed, so the
resolved config is self-contained and its hash pins the sampled times.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # 3.10 fallback
    import tomli as tomllib

from .boxdim import NAMED_IRRATIONAL_TIMES, near_rational
from .catalog import (
    FunctionSpec,
    cosine_potential,
    frac_sawtooth,
    haslam_jones,
    spec_from_dict,
    step_function,
    trig_poly,
    weierstrass,
    zero_potential,
)
from .errors import ConfigError

__all__ = [
    "ExperimentConfig",
    "load_config",
    "parse_config_dict",
    "apply_overrides",
    "resolve_time",
    "spec_from_config",
    "default_thread_count",
    "EXPERIMENTS",
    "THREADS_ENV_VAR",
]

EXPERIMENTS = ("dichotomy", "dimension", "smoothing", "kernel_scan", "revival")

THREADS_ENV_VAR = "TALBOTLAB_THREADS"

_TOP_LEVEL_KEYS = {
    "experiment",
    "seed",
    "data",
    "potential",
    "times",
    "resolution",
    "output",
    "threads",
    "options",
}

_PI_TIME = re.compile(r"^pi(?:\*(\d+))?(?:/(\d+))?$")

# per-experiment option schema: name -> default (None marks "computed later")
_OPTION_SCHEMA: dict[str, dict] = {
    "dichotomy": {
        "resolutions": [4096, 16384, 65536],
        "duhamel_trunc": 1024,
    },
    "dimension": {
        "components": ["re", "im", "abs2"],
        "duhamel_trunc": 1024,
    },
    "smoothing": {
        "s": 0.5,
        "duhamel_trunc": 1024,
        "continuity_h_levels": [3, 4, 5, 6, 7, 8],
    },
    "kernel_scan": {
        "s": 0.5,
        "b": 0.51,
        "b_prime": 0.51,
        "a_grid": [round(0.1 * i, 10) for i in range(1, 8)],
        "r_grid": [0.0, 0.25, 0.5, 1.0],
        "k_max": 4096,
        "boundary_margin": 0.05,
        "b_sweep": [0.501, 0.51, 0.55],
        "b_sweep_k_max": 512,
    },
    "revival": {
        "q_max": 12,
        "decomposition_p": 1,
        "decomposition_q": 2,
    },
}


def default_thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{THREADS_ENV_VAR} must be >= 1, got {n}")
    return n


def resolve_time(entry) -> tuple[str, float]:
    """Resolve one time entry to (label, value).

    Accepts numbers, names from the irrational catalog, and rational
    multiples of pi written as "pi", "pi/2", or "pi*3/7".
    """
    if isinstance(entry, bool):
        raise ConfigError(f"time entry must be a number or string, got {entry!r}")
    if isinstance(entry, (int, float)):
        t = float(entry)
        if not math.isfinite(t) or t <= 0.0:
            raise ConfigError(f"times must be finite and positive, got {t}")
        return repr(t), t
    if isinstance(entry, str):
        if entry in NAMED_IRRATIONAL_TIMES:
            return entry, NAMED_IRRATIONAL_TIMES[entry]
        m = _PI_TIME.match(entry)
        if m:
            num = int(m.group(1) or 1)
            den = int(m.group(2) or 1)
            if den == 0:
                raise ConfigError(f"zero denominator in time {entry!r}")
            return entry, math.pi * num / den
        raise ConfigError(f"unknown named time {entry!r}")
    raise ConfigError(f"time entry must be a number or string, got {entry!r}")


def _random_times(count: int, seed: int) -> list[float]:
    rng = np.random.default_rng(seed)
    out: list[float] = []
    while len(out) < count:
        t = float(rng.uniform(0.0, 2.0 * math.pi))
        if near_rational(t):
            continue
        out.append(t)
    return out


def _parse_times(raw, seed: int) -> tuple[tuple[str, ...], tuple[float, ...]]:
    if raw is None:
        return (), ()
    if isinstance(raw, list):
        explicit = raw
        random_count = 0
    elif isinstance(raw, dict):
        unknown = set(raw) - {"explicit", "named", "random"}
        if unknown:
            raise ConfigError(f"unknown times keys: {sorted(unknown)}")
        explicit = list(raw.get("explicit", [])) + list(raw.get("named", []))
        random_count = int(raw.get("random", 0))
        if random_count < 0:
            raise ConfigError(f"times.random must be >= 0, got {random_count}")
    else:
        raise ConfigError(f"times must be a list or a table, got {type(raw).__name__}")
    labels, values = [], []
    for entry in explicit:
        lab, val = resolve_time(entry)
        labels.append(lab)
        values.append(val)
    for i, t in enumerate(_random_times(random_count, seed)):
        labels.append(f"rand{i}")
        values.append(t)
    if len(set(labels)) != len(labels):
        raise ConfigError("duplicate time labels in config")
    return tuple(labels), tuple(values)


_NAMED_SPECS = {
    "step": lambda t: step_function(mean=float(t.get("mean", 0.5))),
    "zero": lambda t: zero_potential(),
    "cos": lambda t: cosine_potential(amplitude=float(t.get("amplitude", 1.0))),
    "weierstrass": lambda t: weierstrass(
        float(t["alpha"]), phases=t.get("phases")
    ),
    "sawtooth": lambda t: frac_sawtooth(float(t["beta"])),
    "haslam_jones": lambda t: haslam_jones(
        float(t["nu"]), float(t["kappa"]), a=float(t.get("a", 0.0))
    ),
    "trig": lambda t: trig_poly(
        [(int(k), float(c), float(ph)) for k, c, ph in t["modes"]]
    ),
}


def spec_from_config(table, *, default: FunctionSpec | None = None) -> FunctionSpec:
    """Build a FunctionSpec from a config table.

    Two forms: {name = "step", ...shortcut params} or the full
    {kind = ..., params = {...}} encoding.
    """
    if table is None:
        if default is None:
            raise ConfigError("missing function spec table")
        return default
    if not isinstance(table, dict):
        raise ConfigError(f"function spec must be a table, got {type(table).__name__}")
    if "name" in table:
        name = table["name"]
        maker = _NAMED_SPECS.get(name)
        if maker is None:
            raise ConfigError(
                f"unknown spec shortcut {name!r}; known: {sorted(_NAMED_SPECS)}"
            )
        try:
            return maker(table)
        except KeyError as exc:
            raise ConfigError(f"spec {name!r} missing parameter {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad parameters for spec {name!r}: {exc}") from exc
    if "kind" in table:
        try:
            return spec_from_dict(table)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad function spec: {exc}") from exc
    raise ConfigError("function spec table needs 'name' or 'kind'")


def _parse_options(experiment: str, raw) -> dict:
    schema = _OPTION_SCHEMA[experiment]
    opts = {k: (list(v) if isinstance(v, list) else v) for k, v in schema.items()}
    if raw is None:
        return opts
    if not isinstance(raw, dict):
        raise ConfigError(f"options must be a table, got {type(raw).__name__}")
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(
            f"unknown options for {experiment}: {sorted(unknown)}; "
            f"known: {sorted(schema)}"
        )
    for key, val in raw.items():
        opts[key] = list(val) if isinstance(val, list) else val
    return opts


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    data: FunctionSpec
    potential: FunctionSpec
    time_labels: tuple[str, ...]
    times: tuple[float, ...]
    N: int
    M: int
    seed: int
    threads: int
    output: str | None
    options: dict = field(compare=False)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "data": self.data.to_dict(),
            "potential": self.potential.to_dict(),
            "time_labels": list(self.time_labels),
            "times": list(self.times),
            "resolution": {"N": self.N, "M": self.M},
            "seed": self.seed,
            "threads": self.threads,
            "output": self.output,
            "options": self.options,
        }

    @property
    def config_hash(self) -> str:
        """sha256 over the result-determining fields.

        Output directory and thread count do not affect records and are
        excluded, so relocated or reparallelized re-runs hash the same.
        """
        d = self.to_dict()
        d.pop("output")
        d.pop("threads")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def parse_config_dict(raw: dict, *, experiment: str | None = None) -> ExperimentConfig:
    """Validate a raw config mapping into an ExperimentConfig.

    `experiment` (e.g. from a CLI subcommand) must agree with the file's
    own `experiment` key when both are present.
    """
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a table, got {type(raw).__name__}")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    file_exp = raw.get("experiment")
    if file_exp is not None:
        file_exp = str(file_exp).replace("-", "_")
        if file_exp not in EXPERIMENTS:
            raise ConfigError(
                f"unknown experiment {raw['experiment']!r}; known: {list(EXPERIMENTS)}"
            )
    exp = experiment.replace("-", "_") if experiment else None
    if exp is not None and exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    if exp and file_exp and exp != file_exp:
        raise ConfigError(
            f"config is for experiment {file_exp!r} but {exp!r} was requested"
        )
    chosen = exp or file_exp
    if chosen is None:
        raise ConfigError("no experiment named in config or on the command line")

    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {seed!r}")

    res = raw.get("resolution", {})
    if not isinstance(res, dict):
        raise ConfigError("resolution must be a table with N and M")
    unknown = set(res) - {"N", "M"}
    if unknown:
        raise ConfigError(f"unknown resolution keys: {sorted(unknown)}")
    N = int(res.get("N", 1024))
    M = int(res.get("M", 4 * N))
    if N < 1:
        raise ConfigError(f"N must be >= 1, got {N}")
    if M < 4 * N:
        raise ConfigError(f"grid must oversample the truncation: M >= 4N, got M={M}, N={N}")
    if M & (M - 1):
        raise ConfigError(f"M must be a power of two, got {M}")

    output = raw.get("output")
    if isinstance(output, dict):
        unknown = set(output) - {"dir"}
        if unknown:
            raise ConfigError(f"unknown output keys: {sorted(unknown)}")
        output = output.get("dir")
    if output is not None and not isinstance(output, str):
        raise ConfigError(f"output must be a directory path, got {output!r}")

    threads = raw.get("threads")
    if threads is None:
        threads = default_thread_count()
    if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
        raise ConfigError(f"threads must be a positive integer, got {threads!r}")

    labels, times = _parse_times(raw.get("times"), seed)
    if chosen in ("dichotomy", "dimension") and not times:
        raise ConfigError(f"{chosen} experiment needs at least one time")
    if chosen == "smoothing" and not times:
        labels, times = ("1.0",), (1.0,)

    data = spec_from_config(raw.get("data"), default=step_function())
    potential = spec_from_config(raw.get("potential"), default=zero_potential())
    options = _parse_options(chosen, raw.get("options"))

    return ExperimentConfig(
        experiment=chosen,
        data=data,
        potential=potential,
        time_labels=labels,
        times=times,
        N=N,
        M=M,
        seed=seed,
        threads=threads,
        output=output,
        options=options,
    )


def _parse_override_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides: list[str]) -> dict:
    """Apply dotted-path key=value overrides to a raw config mapping.

    Values parse as JSON when possible ("2" -> int, "[1,2]" -> list,
    '"pi"' or bare pi -> string).  Intermediate tables are created as
    needed; overriding through a non-table is an error.
    """
    out = json.loads(json.dumps(raw))  # deep copy, plain types only
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        path = key.split(".")
        node = out
        for part in path[:-1]:
            nxt = node.get(part)
            if nxt is None:
                nxt = {}
                node[part] = nxt
            if not isinstance(nxt, dict):
                raise ConfigError(
                    f"cannot override through non-table {part!r} in {key!r}"
                )
            node = nxt
        node[path[-1]] = _parse_override_value(value)
    return out


def load_config(
    path: str,
    *,
    overrides: list[str] | None = None,
    experiment: str | None = None,
) -> ExperimentConfig:
    """Read a TOML or JSON config file, apply overrides, validate."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if path.endswith(".json"):
        try:
            raw = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigError(f"bad JSON config {path}: {exc}") from exc
    else:
        try:
            raw = tomllib.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"bad TOML config {path}: {exc}") from exc
    if overrides:
        raw = apply_overrides(raw, overrides)
    return parse_config_dict(raw, experiment=experiment)
