"""Experiment configuration: defaults, validation, file and override parsing.

Config files are INI-style, one section per concern::

    [network]
    network_size = 10000
    bucket_size = 8

    [accounting]
    omega = 16

Keys may also be written before any section header in dotted form
(``accounting.omega = 16``).  Every key must belong to its section;
unknown keys are rejected.  Values
may also come from ``BANDSIM_<KEY>`` environment variables and from
command-line overrides, which take precedence over the file.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import logging
import os
import typing
from dataclasses import dataclass, fields

from .accounting import CREDIT_MODELS, FREE_SERVICE_MODES, AccountingConfig
from .addressing import MAX_BITS, MIN_BITS
from .cache import CACHE_POLICIES
from .routing import NEXT_HOP_RULES
from .settlement import PAYMENT_MODELS
from .topology import ADDRESS_ASSIGNMENTS, CLIQUE_MODES, SHUFFLE_POLICIES, NetworkConfig
from .workload import WORKLOAD_KINDS

log = logging.getLogger(__name__)

ENV_PREFIX = "BANDSIM_"
BACKENDS = ("auto", "fast", "reference")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one message per offending key."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


def _f(section: str, default, choices=None):
    return dataclasses.field(default=default, metadata={"section": section, "choices": choices})


@dataclass(frozen=True)
class ExperimentConfig:
    network_size: int = _f("network", 10_000)
    address_bits: int = _f("network", 16)
    bucket_size: int = _f("network", 8)
    originator_bucket_size: typing.Optional[int] = _f("network", None)
    storage_depth: int = _f("network", 11)
    originator_fraction: float = _f("network", 0.005)
    address_assignment: str = _f("network", "random", ADDRESS_ASSIGNMENTS)
    clique_mode: str = _f("network", "none", CLIQUE_MODES)
    shuffle_policy: str = _f("network", "none", SHUFFLE_POLICIES)

    credit_model: str = _f("accounting", "distance", CREDIT_MODELS)
    omega: int = _f("accounting", 16)
    unit_reward: int = _f("accounting", 1)
    reciprocity: bool = _f("accounting", True)
    free_service: str = _f("accounting", "constant", FREE_SERVICE_MODES)
    debt_limits: bool = _f("accounting", True)

    payment_model: str = _f("settlement", "A_C", PAYMENT_MODELS)
    next_hop_rule: str = _f("routing", "strictKademlia", NEXT_HOP_RULES)

    cache_policy: str = _f("cache", "none", ("none",) + CACHE_POLICIES)
    cache_size: int = _f("cache", 10_000)
    originator_cache_policy: typing.Optional[str] = _f("cache", None, (None,) + CACHE_POLICIES)
    originator_cache_size: typing.Optional[int] = _f("cache", None)

    workload: str = _f("workload", "uniform", WORKLOAD_KINDS)
    rate_per_originator: int = _f("workload", 2000)
    zipf_catalog_size: int = _f("workload", 1_000_000)
    zipf_exponent: float = _f("workload", 0.9)
    zipf_mean_chunks: float = _f("workload", 4.0)
    trace_path: str = _f("workload", "")
    trace_cid_column: str = _f("workload", "cid")
    trace_bytes_column: str = _f("workload", "bytes")

    duration_seconds: int = _f("run", 10)
    graph_count: int = _f("run", 5)
    seed: int = _f("run", 0)
    output_dir: str = _f("run", "out")
    backend: str = _f("run", "auto", BACKENDS)
    route_log: bool = _f("run", False)
    state_dump: bool = _f("run", False)
    fairness_clamp: bool = _f("run", False)

    # -- derived views -----------------------------------------------------

    def network(self, seed: int | None = None) -> NetworkConfig:
        return NetworkConfig(
            size=self.network_size, address_bits=self.address_bits, bucket_size=self.bucket_size,
            storage_depth=self.storage_depth, originator_fraction=self.originator_fraction,
            address_assignment=self.address_assignment, clique_mode=self.clique_mode,
            shuffle_policy=self.shuffle_policy, originator_bucket_size=self.originator_bucket_size,
            seed=self.seed if seed is None else seed)

    def accounting(self) -> AccountingConfig:
        return AccountingConfig(self.credit_model, self.omega, self.unit_reward, self.reciprocity,
                                self.free_service, self.debt_limits)

    @property
    def caching(self) -> bool:
        return self.cache_policy != "none"

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    # -- validation --------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        errors = []
        for f in fields(self):
            choices = f.metadata.get("choices")
            value = getattr(self, f.name)
            if choices is not None and value not in choices:
                shown = ", ".join(str(c) for c in choices if c is not None)
                errors.append(f"{f.metadata['section']}.{f.name}: must be one of {shown}; got {value!r}")
        if not MIN_BITS <= self.address_bits <= MAX_BITS:
            errors.append(f"network.address_bits: must be in [{MIN_BITS}, {MAX_BITS}]")
        elif self.network_size > (1 << self.address_bits):
            errors.append("network.network_size: exceeds the address space")
        if self.network_size < 1:
            errors.append("network.network_size: must be positive")
        if self.bucket_size < 1:
            errors.append("network.bucket_size: must be positive")
        if self.originator_bucket_size is not None and self.originator_bucket_size < 1:
            errors.append("network.originator_bucket_size: must be positive")
        if not 0 <= self.storage_depth < self.address_bits:
            errors.append("network.storage_depth: must satisfy 0 <= depth < address_bits")
        if not 0 < self.originator_fraction <= 1:
            errors.append("network.originator_fraction: must be in (0, 1]")
        if self.omega < self.storage_depth:
            errors.append(f"accounting.omega: omega >= storage_depth required (omega={self.omega}, "
                          f"depth={self.storage_depth})")
        for msg in self.accounting().validate():
            if "storage depth" not in msg:
                errors.append(f"accounting: {msg}")
        if not self.debt_limits and self.payment_model != "A_C":
            log.debug("payment model has no effect without debt limits")
        if self.caching and self.backend == "fast":
            errors.append("run.backend: the fast backend does not support caches; use auto or reference")
        if self.cache_size < 0 or (self.originator_cache_size or 0) < 0:
            errors.append("cache: sizes must be non-negative")
        if self.rate_per_originator < 0:
            errors.append("workload.rate_per_originator: must be non-negative")
        if self.zipf_exponent <= 0:
            errors.append("workload.zipf_exponent: must be positive")
        if self.zipf_catalog_size < 1:
            errors.append("workload.zipf_catalog_size: must be positive")
        if self.workload == "trace" and not self.trace_path:
            errors.append("workload.trace_path: required for the trace workload")
        if self.duration_seconds < 0:
            errors.append("run.duration_seconds: must be non-negative")
        if self.graph_count < 1:
            errors.append("run.graph_count: must be at least 1")
        if not 0 <= self.seed < 2**64:
            errors.append("run.seed: must be an unsigned 64-bit integer")
        if errors:
            raise ConfigError(errors)
        return self


FIELDS = {f.name: f for f in fields(ExperimentConfig)}
SECTIONS = tuple(dict.fromkeys(f.metadata["section"] for f in fields(ExperimentConfig)))


def _base_type(f):
    hint = typing.get_type_hints(ExperimentConfig)[f.name]
    args = [a for a in typing.get_args(hint) if a is not type(None)]
    return args[0] if args else hint


def coerce(name: str, raw):
    """Convert a textual value for field ``name`` to its declared type."""
    if name not in FIELDS:
        raise ConfigError([f"unknown key {name!r}"])
    f = FIELDS[name]
    where = f"{f.metadata['section']}.{name}"
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    if text.lower() in ("", "none", "null") and f.default is None:
        return None
    kind = _base_type(f)
    try:
        if kind is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError as exc:
        raise ConfigError([f"{where}: {exc}"]) from None
    if name == "payment_model":
        return text.upper()
    return text


_TOP = "__top__"


def parse_text(text: str) -> dict:
    """Key/value pairs from config text; sections must match each key's home."""
    parser = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    parser.optionxform = str
    try:
        parser.read_string(f"[{_TOP}]\n" + text)
    except configparser.Error as exc:
        raise ConfigError([f"unreadable config: {exc}"]) from None
    items, errors = [], []
    for dotted, raw in parser.items(_TOP):
        section, _, key = dotted.rpartition(".")
        if not section:
            errors.append(f"{dotted}: top-level keys need a section prefix")
        elif section not in SECTIONS:
            errors.append(f"unknown section [{section}]")
        else:
            items.append((section, key, raw))
    for section in parser.sections():
        if section == _TOP:
            continue
        if section not in SECTIONS:
            errors.append(f"unknown section [{section}]")
            continue
        items += [(section, key, raw) for key, raw in parser.items(section)]
    values = {}
    for section, key, raw in items:
        if key not in FIELDS:
            errors.append(f"{section}.{key}: unknown key")
        elif FIELDS[key].metadata["section"] != section:
            errors.append(f"{section}.{key}: belongs in [{FIELDS[key].metadata['section']}]")
        else:
            try:
                values[key] = coerce(key, raw)
            except ConfigError as exc:
                errors.extend(exc.errors)
    if errors:
        raise ConfigError(errors)
    return values


def field_name(key: str) -> str:
    """Field behind ``key`` or ``section.key``; the section must be the field's home."""
    section, _, name = key.rpartition(".")
    if name not in FIELDS:
        raise ConfigError([f"unknown key {key!r}"])
    if section and FIELDS[name].metadata["section"] != section:
        raise ConfigError([f"{key}: belongs in [{FIELDS[name].metadata['section']}]"])
    return name


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key, raw in environ.items():
        if key.startswith(ENV_PREFIX):
            name = key[len(ENV_PREFIX):].lower()
            if name in FIELDS:
                out[name] = coerce(name, raw)
    return out


def load_config(path=None, overrides: dict | None = None, environ=None, base: ExperimentConfig | None = None
                ) -> ExperimentConfig:
    """Defaults (or ``base``), then file, then environment, then ``overrides``."""
    values = dataclasses.asdict(base) if base is not None else {}
    file_values = {}
    if path is not None:
        try:
            with open(path) as fh:
                file_values = parse_text(fh.read())
        except OSError as exc:
            raise ConfigError([f"cannot read config {path}: {exc}"]) from None
    values.update(file_values)
    values.update(env_overrides(environ))
    for key, raw in (overrides or {}).items():
        key = field_name(key)
        value = coerce(key, raw)
        if key in file_values and file_values[key] != value:
            log.warning("flag overrides config file for %s: %r -> %r", key, file_values[key], value)
        values[key] = value
    try:
        cfg = ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError([str(exc)]) from None
    return cfg.validate()


def dumps(cfg: ExperimentConfig) -> str:
    """Serialize every field; ``parse_text(dumps(c))`` rebuilds ``c``."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    for section in SECTIONS:
        parser.add_section(section)
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif value is None:
            text = "none"
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        parser.set(f.metadata["section"], f.name, text)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
