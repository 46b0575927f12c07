"""Experiment configuration: flat key-value sections, line-precise errors.

Format:

    [experiment]
    method = plain            # plain | periodic | approx | stratified | stratified-periodic
    m = 0
    n_grid = 32 64 128
    seeds = 0 1 2 3 4
    n_quad = 2048

    [activation]
    label = gaussian

    [target]
    spec = gaussian(1.0, (0.0, 0.0))
    dim = 2

    [domain]
    lower = -1 -1
    upper = 1 1

Optional experiment keys: aggregate (median|mean), freq_a, eps,
eps_smooth, pilot_factor, keep_min_expected, max_cells, gnuplot, timing.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .activation import ActivationModel, Bounded, Decaying, Periodic, build_registry
from .domain import DomainBox, box
from .errors import ConfigError
from .target import SpectralTarget, atomic_target, gaussian_target, mixture_target

METHODS = ("plain", "periodic", "approx", "stratified", "stratified-periodic")


@dataclass
class ExperimentConfig:
    method: str
    activation_label: str
    target_spec: str
    dim: int
    box: DomainBox
    m: int = 0
    n_grid: tuple[int, ...] = (32, 64, 128)
    seeds: tuple[int, ...] = (0,)
    n_quad: int = 2048
    aggregate: str = "median"
    freq_a: Optional[float] = None
    eps: Optional[float] = None
    eps_smooth: float = 0.25
    pilot_factor: int = 50
    keep_min_expected: float = 0.0
    max_cells: Optional[int] = None
    gnuplot: bool = False
    timing: bool = False
    source: str = "<memory>"

    def resolve(self):
        """(activation, target) pair, validated for method compatibility."""
        registry = build_registry()
        if self.activation_label not in registry:
            raise ConfigError(
                f"{self.source}: unknown activation label {self.activation_label!r}; "
                f"known: {sorted(registry)}"
            )
        activation = registry[self.activation_label]
        target = parse_target_spec(self.target_spec, self.dim, self.source)
        _check_compat(self, activation)
        return activation, target


def _check_compat(cfg: ExperimentConfig, activation: ActivationModel):
    kind = activation.kind
    if cfg.method in ("plain", "stratified") and not isinstance(kind, Decaying):
        raise ConfigError(
            f"{cfg.source}: method {cfg.method!r} needs a decaying activation, "
            f"got {cfg.activation_label!r}"
        )
    if cfg.method in ("periodic", "stratified-periodic") and not isinstance(kind, Periodic):
        raise ConfigError(
            f"{cfg.source}: method {cfg.method!r} needs a periodic activation, "
            f"got {cfg.activation_label!r}"
        )
    if cfg.method == "approx":
        if not isinstance(kind, Bounded) or activation.fourier is None:
            raise ConfigError(
                f"{cfg.source}: method 'approx' needs a bounded activation with a "
                f"known transform on an interval, got {cfg.activation_label!r}"
            )
        if cfg.m != 0:
            raise ConfigError(f"{cfg.source}: method 'approx' supports m = 0 only")
    if cfg.m > activation.m_max:
        raise ConfigError(
            f"{cfg.source}: m = {cfg.m} exceeds m_max = {activation.m_max} "
            f"of activation {cfg.activation_label!r}"
        )
    if cfg.box.dim != cfg.dim:
        raise ConfigError(
            f"{cfg.source}: domain dimension {cfg.box.dim} != target dim {cfg.dim}"
        )


def parse_target_spec(spec: str, dim: int, source: str = "<memory>") -> SpectralTarget:
    """gaussian(scale, center) | mixture([(amp, scale, center), ...]) |
    atoms([(omega, re, im), ...])."""
    spec = spec.strip()
    open_paren = spec.find("(")
    if open_paren < 0 or not spec.endswith(")"):
        raise ConfigError(f"{source}: malformed target spec {spec!r}")
    name = spec[:open_paren].strip()
    inner = spec[open_paren + 1:-1]
    try:
        args = ast.literal_eval("(" + inner + ",)")
    except (ValueError, SyntaxError) as exc:
        raise ConfigError(f"{source}: cannot parse target arguments: {exc}") from exc
    try:
        if name == "gaussian":
            scale = float(args[0])
            center = args[1] if len(args) > 1 else 0.0
            center = [center] * dim if np.isscalar(center) else list(center)
            return gaussian_target(dim, scale=scale, center=center, label=spec)
        if name == "mixture":
            comps = []
            for amp, scale, center in args[0]:
                center = [center] * dim if np.isscalar(center) else list(center)
                comps.append((float(amp), float(scale), center))
            return mixture_target(dim, comps, label=spec)
        if name == "atoms":
            atoms = []
            for omega, re_c, im_c in args[0]:
                omega = [omega] * dim if np.isscalar(omega) else list(omega)
                atoms.append((tuple(float(w) for w in omega), complex(re_c, im_c)))
            return atomic_target(dim, atoms, label=spec)
    except (TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"{source}: invalid target spec {spec!r}: {exc}") from exc
    raise ConfigError(f"{source}: unknown target kind {name!r}")


# -- file parsing ------------------------------------------------------------

def _parse_sections(text: str, source: str):
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current in sections:
                raise ConfigError(f"{source}:{lineno}: duplicate section [{current}]")
            sections[current] = {}
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if current is None:
            raise ConfigError(f"{source}:{lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in sections[current]:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)
    return sections


def _take(section, key, source, lineno_hint, convert, default=...):
    if key not in section:
        if default is ...:
            raise ConfigError(f"{source}:{lineno_hint}: missing required key {key!r}")
        return default
    value, lineno = section.pop(key)
    try:
        return convert(value)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc


def _int_list(value: str):
    items = tuple(int(tok) for tok in value.split())
    if not items:
        raise ValueError("expected at least one integer")
    return items


def _float_list(value: str):
    items = tuple(float(tok) for tok in value.split())
    if not items:
        raise ValueError("expected at least one number")
    return items


def _bool(value: str):
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def parse_config(path) -> ExperimentConfig:
    source = str(path)
    with open(path) as fh:
        text = fh.read()
    return parse_config_text(text, source)


def parse_config_text(text: str, source: str = "<memory>") -> ExperimentConfig:
    sections = _parse_sections(text, source)
    for required in ("experiment", "activation", "target", "domain"):
        if required not in sections:
            raise ConfigError(f"{source}:1: missing section [{required}]")
    exp = sections["experiment"]
    method = _take(exp, "method", source, 1, str)
    if method not in METHODS:
        raise ConfigError(f"{source}: method must be one of {METHODS}, got {method!r}")
    act = sections["activation"]
    tgt = sections["target"]
    dom = sections["domain"]
    dim = _take(tgt, "dim", source, 1, int)
    lower = _take(dom, "lower", source, 1, _float_list)
    upper = _take(dom, "upper", source, 1, _float_list)
    try:
        domain = box(lower, upper)
    except ValueError as exc:
        raise ConfigError(f"{source}: bad domain: {exc}") from exc
    n_grid = _take(exp, "n_grid", source, 1, _int_list, (32, 64, 128))
    if any(n <= 0 for n in n_grid):
        raise ConfigError(f"{source}: n_grid entries must be positive")
    cfg = ExperimentConfig(
        method=method,
        activation_label=_take(act, "label", source, 1, str),
        target_spec=_take(tgt, "spec", source, 1, str),
        dim=dim,
        box=domain,
        m=_take(exp, "m", source, 1, int, 0),
        n_grid=n_grid,
        seeds=_take(exp, "seeds", source, 1, _int_list, (0,)),
        n_quad=_take(exp, "n_quad", source, 1, int, 2048),
        aggregate=_take(exp, "aggregate", source, 1, str, "median"),
        freq_a=_take(exp, "freq_a", source, 1, float, None),
        eps=_take(exp, "eps", source, 1, float, None),
        eps_smooth=_take(exp, "eps_smooth", source, 1, float, 0.25),
        pilot_factor=_take(exp, "pilot_factor", source, 1, int, 50),
        keep_min_expected=_take(exp, "keep_min_expected", source, 1, float, 0.0),
        max_cells=_take(exp, "max_cells", source, 1, int, None),
        gnuplot=_take(exp, "gnuplot", source, 1, _bool, False),
        timing=_take(exp, "timing", source, 1, _bool, False),
        source=source,
    )
    if cfg.aggregate not in ("median", "mean"):
        raise ConfigError(f"{source}: aggregate must be median or mean")
    for name, section in sections.items():
        for key, (_, lineno) in section.items():
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} in [{name}]")
    cfg.resolve()  # fail fast with full validation
    return cfg
