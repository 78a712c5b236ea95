"""Study configuration read from JSON.

Every section is a frozen dataclass with `from_dict`, which rejects
unknown keys and reports violations with the dotted path of the field,
and `to_dict`, which returns the resolved section with all defaults.
"""
import json
from dataclasses import dataclass, field, fields
from dataclasses import field as _dc_field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from sensipy.exceptions import ConfigError, ValidationError
from sensipy.grf.matern import GaussianFieldModel, MaternParams
from sensipy.grid import Field, Grid
from sensipy.pde.norms import l2_norm
from sensipy.pde.qoi import QoiSpec
from sensipy.risk.functional import SpectralDensity
from sensipy.risk.spec import RiskSpec

STUDIES = ("perturbation", "truncation", "risk", "tv", "local_lipschitz")
PERTURBATIONS = ("none", "mean_shift", "sigma_scale", "rho_scale", "truncation")
TARGETS = ("coefficient", "source")
SOURCES = ("sine", "constant", "gaussian")
MIN_SAMPLES = 100


def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def _check_keys(cls, data: Any, path: str) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("expected a JSON object", path or None)
    known = [f.name for f in fields(cls)]
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(
            f"unknown key {unknown[0]!r}; valid keys are {', '.join(known)}",
            _join(path, unknown[0]))
    return dict(data)


def _build(cls, values: Dict[str, Any], path: str):
    try:
        return cls(**values)
    except ConfigError as error:
        raise ConfigError(error.message, _join(path, error.field or "")) from None
    except (ValidationError, TypeError, ValueError) as error:
        raise ConfigError(str(error), path or None) from None


def _number(value: Any, name: str, integer: bool = False) -> Union[int, float]:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", name)
    if integer:
        if int(value) != value:
            raise ConfigError(f"expected an integer, got {value!r}", name)
        return int(value)
    return float(value)


def _choice(value: Any, name: str, choices: Tuple[str, ...]) -> str:
    if value not in choices:
        raise ConfigError(f"unknown value {value!r}; valid values are {', '.join(choices)}", name)
    return value


@dataclass(frozen=True)
class GridConfig:
    dim: int = 1
    n: int = 63
    length: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "dim", _number(self.dim, "dim", integer=True))
        object.__setattr__(self, "n", _number(self.n, "n", integer=True))
        object.__setattr__(self, "length", _number(self.length, "length"))
        if self.dim not in (1, 2):
            raise ConfigError(f"dim must be 1 or 2, got {self.dim}", "dim")
        if self.n < 2:
            raise ConfigError(f"n must be at least 2, got {self.n}", "n")
        if not self.length > 0:
            raise ConfigError(f"length must be positive, got {self.length}", "length")

    @classmethod
    def from_dict(cls, data: Any, path: str = "grid") -> "GridConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "length": self.length}

    def build(self) -> Grid:
        return Grid(self.dim, self.n, self.length)


@dataclass(frozen=True)
class FieldConfig:
    """Matern model of log a: constant mean, sigma, rho and k."""
    mean: float = 0.0
    sigma: float = 1.0
    rho: float = 0.5
    k: int = 0

    def __post_init__(self) -> None:
        for name in ("mean", "sigma", "rho"):
            object.__setattr__(self, name, _number(getattr(self, name), name))
        object.__setattr__(self, "k", _number(self.k, "k", integer=True))
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}", "sigma")
        if not self.rho > 0:
            raise ConfigError(f"rho must be positive, got {self.rho}", "rho")
        if self.k < 0:
            raise ConfigError(f"k must be nonnegative, got {self.k}", "k")

    @classmethod
    def from_dict(cls, data: Any, path: str = "field") -> "FieldConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sigma": self.sigma, "rho": self.rho, "k": self.k}

    def build(self, grid: Grid, transform: str = "identity") -> GaussianFieldModel:
        return GaussianFieldModel(Field.constant(grid, self.mean),
                                  MaternParams(self.sigma, self.rho, self.k), transform)


@dataclass(frozen=True)
class PerturbationConfig:
    """Perturbation turning the base measure P into Q.

    Attributes:
        family: one of PERTURBATIONS
        amount: mean shift, or scale factor of sigma or rho
        levels: truncation levels K of the truncation family
        target: perturbed part of the data, "coefficient" or "source"
    """
    family: str = "none"
    amount: float = 0.0
    levels: Optional[List[int]] = None
    target: str = "coefficient"

    def __post_init__(self) -> None:
        _choice(self.family, "family", PERTURBATIONS)
        _choice(self.target, "target", TARGETS)
        object.__setattr__(self, "amount", _number(self.amount, "amount"))
        if self.family in ("sigma_scale", "rho_scale") and not self.amount > 0:
            raise ConfigError(f"{self.family} needs a positive factor, got {self.amount}", "amount")
        if self.levels is not None:
            if not isinstance(self.levels, (list, tuple)) or not self.levels:
                raise ConfigError("levels must be a nonempty list", "levels")
            levels = [_number(K, f"levels[{i}]", integer=True) for i, K in enumerate(self.levels)]
            if any(K < 0 for K in levels):
                raise ConfigError("truncation levels must be nonnegative", "levels")
            object.__setattr__(self, "levels", sorted(set(levels)))

    @classmethod
    def from_dict(cls, data: Any, path: str = "perturbation") -> "PerturbationConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        return {"family": self.family, "amount": self.amount,
                "levels": None if self.levels is None else list(self.levels),
                "target": self.target}

    def apply(self, model: GaussianFieldModel) -> GaussianFieldModel:
        """The perturbed model Q; truncation leaves the model unchanged."""
        if self.family == "mean_shift":
            return model.with_mean(model.mean + self.amount)
        if self.family == "sigma_scale":
            return model.with_cov(sigma=model.cov.sigma * self.amount)
        if self.family == "rho_scale":
            return model.with_cov(rho=model.cov.rho * self.amount)
        return model


@dataclass(frozen=True)
class SourceConfig:
    """Source term f: amplitude * prod_i sin(pi x_i / L) ("sine"),
    the constant `amplitude`, or a Matern field around the sine ("gaussian")."""
    kind: str = "sine"
    amplitude: float = float(np.pi ** 2)
    sigma: float = 1.0
    rho: float = 0.5
    k: int = 0

    def __post_init__(self) -> None:
        _choice(self.kind, "kind", SOURCES)
        for name in ("amplitude", "sigma", "rho"):
            object.__setattr__(self, name, _number(getattr(self, name), name))
        object.__setattr__(self, "k", _number(self.k, "k", integer=True))
        if self.kind == "gaussian" and not (self.sigma > 0 and self.rho > 0 and self.k >= 0):
            raise ConfigError("a gaussian source needs sigma > 0, rho > 0 and k >= 0", "sigma")

    @classmethod
    def from_dict(cls, data: Any, path: str = "source") -> "SourceConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        data = {"kind": self.kind, "amplitude": self.amplitude}
        if self.kind == "gaussian":
            data.update(sigma=self.sigma, rho=self.rho, k=self.k)
        return data

    def mean(self, grid: Grid) -> Field:
        if self.kind == "constant":
            return Field.constant(grid, self.amplitude)
        return Field.from_function(
            grid, lambda *x: self.amplitude * np.prod(
                [np.sin(np.pi * xi / grid.length) for xi in x], axis=0))

    def model(self, grid: Grid) -> Optional[GaussianFieldModel]:
        """Gaussian model of f, None for a deterministic source."""
        if self.kind != "gaussian":
            return None
        return GaussianFieldModel(self.mean(grid), MaternParams(self.sigma, self.rho, self.k))


@dataclass(frozen=True)
class QoiConfig:
    kind: str = "subdomain_mean"
    x0: Optional[List[float]] = None
    region: Optional[List[List[float]]] = None

    def __post_init__(self) -> None:
        if self.x0 is not None:
            x0 = self.x0 if isinstance(self.x0, (list, tuple)) else [self.x0]
            object.__setattr__(self, "x0", [_number(x, "x0") for x in x0])
        if self.region is not None:
            try:
                region = [[float(lower), float(upper)] for lower, upper in self.region]
            except (TypeError, ValueError):
                raise ConfigError("region must be a list of [lower, upper] pairs", "region")
            object.__setattr__(self, "region", region)
        try:
            self.spec()
        except ValidationError as error:
            raise ConfigError(str(error), "kind") from None

    @classmethod
    def from_dict(cls, data: Any, path: str = "qoi") -> "QoiConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "x0": self.x0, "region": self.region}

    def spec(self) -> QoiSpec:
        region = None if self.region is None else tuple(tuple(r) for r in self.region)
        return QoiSpec(self.kind, self.x0, region)


@dataclass(frozen=True)
class RiskConfig:
    kind: str = "avar"
    alpha: float = 0.95
    beta: float = 1.0
    order: float = 1.0
    density: Optional[Dict[str, Any]] = None

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "order"):
            object.__setattr__(self, name, _number(getattr(self, name), name))
        if self.density is not None:
            _check_keys(_DensityKeys, self.density, "density")
        try:
            self.spec()
        except ValidationError as error:
            message = str(error)
            name = next((n for n in ("alpha", "beta", "order", "density")
                         if message.startswith(n) or f" {n} " in message), "kind")
            raise ConfigError(message, name) from None

    @classmethod
    def from_dict(cls, data: Any, path: str = "risk") -> "RiskConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        return self.spec().to_dict()

    def spec(self) -> RiskSpec:
        density = None
        if self.density is not None:
            density = SpectralDensity(self.density.get("knots"), self.density.get("values"),
                                      self.density.get("kind", "step"))
        return RiskSpec(self.kind, self.alpha, self.beta, self.order, density)


@dataclass(frozen=True)
class _DensityKeys:
    kind: str = "step"
    knots: Optional[List[float]] = None
    values: Optional[List[float]] = None


@dataclass(frozen=True)
class SensitivityConfig:
    """Hoelder data of the QoI for sensitivity bounds of risk values."""
    holder_constant: float = 1.0
    beta: float = 1.0
    p: float = 1.0

    def __post_init__(self) -> None:
        for name in ("holder_constant", "beta", "p"):
            object.__setattr__(self, name, _number(getattr(self, name), name))
        if not 0 < self.beta <= 1:
            raise ConfigError(f"beta must lie in (0,1], got {self.beta}", "beta")
        if not self.p >= max(1.0, self.beta):
            raise ConfigError(f"p must be at least 1, got {self.p}", "p")
        if self.holder_constant < 0:
            raise ConfigError("holder_constant must be nonnegative", "holder_constant")

    @classmethod
    def from_dict(cls, data: Any, path: str = "sensitivity") -> "SensitivityConfig":
        return _build(cls, _check_keys(cls, data, path), path)

    def to_dict(self) -> dict:
        return {"holder_constant": self.holder_constant, "beta": self.beta, "p": self.p}


@dataclass(frozen=True)
class StudyConfig:
    """Resolved configuration of a study or CLI request.

    Attributes:
        study: one of STUDIES
        grid, field, perturbation, source, qoi, risk, sensitivity: sections
        p: Wasserstein order
        n_samples: Monte Carlo sample count, at least 100
        seed: seed of the per-sample random streams
        slack: Monte Carlo slack in standard errors
        radius: bounded-support radius r of the data; unbounded when None
        clip: innovation truncation level of the bounded-support mode
        shifts: mean shifts of the local Lipschitz study
        trials: random instances of the TV study
        support: atoms per factor in the TV study, at most 4
    """
    study: str = "perturbation"
    grid: GridConfig = _dc_field(default_factory=GridConfig)
    field: FieldConfig = _dc_field(default_factory=FieldConfig)
    perturbation: PerturbationConfig = _dc_field(default_factory=PerturbationConfig)
    source: SourceConfig = _dc_field(default_factory=SourceConfig)
    qoi: QoiConfig = _dc_field(default_factory=QoiConfig)
    risk: RiskConfig = _dc_field(default_factory=RiskConfig)
    sensitivity: Optional[SensitivityConfig] = None
    p: float = 2.0
    n_samples: int = 1000
    seed: int = 0
    slack: float = 3.0
    radius: Optional[float] = None
    clip: float = 4.0
    shifts: List[float] = _dc_field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0])
    trials: int = 200
    support: int = 4

    def __post_init__(self) -> None:
        _choice(self.study, "study", STUDIES)
        object.__setattr__(self, "p", _number(self.p, "p"))
        object.__setattr__(self, "n_samples", _number(self.n_samples, "n_samples", integer=True))
        object.__setattr__(self, "seed", _number(self.seed, "seed", integer=True))
        object.__setattr__(self, "slack", _number(self.slack, "slack"))
        object.__setattr__(self, "clip", _number(self.clip, "clip"))
        object.__setattr__(self, "trials", _number(self.trials, "trials", integer=True))
        object.__setattr__(self, "support", _number(self.support, "support", integer=True))
        if self.radius is not None:
            object.__setattr__(self, "radius", _number(self.radius, "radius"))
            if not self.radius > 0:
                raise ConfigError(f"radius must be positive, got {self.radius}", "radius")
        if not self.p >= 1:
            raise ConfigError(f"p must be at least 1, got {self.p}", "p")
        if self.n_samples < MIN_SAMPLES:
            raise ConfigError(
                f"n_samples must be at least {MIN_SAMPLES}, got {self.n_samples}", "n_samples")
        if self.slack < 0:
            raise ConfigError("slack must be nonnegative", "slack")
        if not self.clip > 0:
            raise ConfigError("clip must be positive", "clip")
        if self.trials < 1:
            raise ConfigError("trials must be positive", "trials")
        if not 1 <= self.support <= 4:
            raise ConfigError(f"support must lie in [1, 4], got {self.support}", "support")
        if not isinstance(self.shifts, (list, tuple)) or not self.shifts:
            raise ConfigError("shifts must be a nonempty list", "shifts")
        shifts = [_number(m, f"shifts[{i}]") for i, m in enumerate(self.shifts)]
        if any(m == 0 for m in shifts):
            raise ConfigError("shifts must be nonzero", "shifts")
        object.__setattr__(self, "shifts", shifts)
        if self.study == "truncation" and self.perturbation.family not in ("none", "truncation"):
            raise ConfigError("the truncation study needs the truncation family",
                              "perturbation.family")
        if self.study in ("perturbation", "risk") and self.perturbation.family == "truncation":
            raise ConfigError("truncation is studied by the truncation study",
                              "perturbation.family")
        if self.radius is not None and self.study in ("perturbation", "risk"):
            self._check_source_radius()

    def _check_source_radius(self) -> None:
        # a gaussian source is filtered by the sampler instead
        if self.source.kind == "gaussian":
            return
        norm = l2_norm(self.source.mean(self.grid.build()))
        if norm > self.radius:
            raise ConfigError(
                f"source norm {norm:.6g} exceeds the radius {self.radius:g}; "
                "lower source.amplitude or raise the radius", "source.amplitude")

    @classmethod
    def from_dict(cls, data: Any, path: str = "") -> "StudyConfig":
        values = _check_keys(cls, data, path)
        sections = {"grid": GridConfig, "field": FieldConfig, "perturbation": PerturbationConfig,
                    "source": SourceConfig, "qoi": QoiConfig, "risk": RiskConfig,
                    "sensitivity": SensitivityConfig}
        for name, section in sections.items():
            if name in values:
                if name == "sensitivity" and values[name] is None:
                    continue
                values[name] = section.from_dict(values[name], _join(path, name))
        return _build(cls, values, path)

    def to_dict(self) -> dict:
        return {
            "study": self.study,
            "grid": self.grid.to_dict(),
            "field": self.field.to_dict(),
            "perturbation": self.perturbation.to_dict(),
            "source": self.source.to_dict(),
            "qoi": self.qoi.to_dict(),
            "risk": self.risk.to_dict(),
            "sensitivity": None if self.sensitivity is None else self.sensitivity.to_dict(),
            "p": self.p,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "slack": self.slack,
            "radius": self.radius,
            "clip": self.clip,
            "shifts": list(self.shifts),
            "trials": self.trials,
            "support": self.support,
        }

    def with_seed(self, seed: Optional[int]) -> "StudyConfig":
        """Copy with the seed overridden, unchanged for None."""
        if seed is None:
            return self
        return StudyConfig.from_dict({**self.to_dict(), "seed": seed})


def load_config(path: Union[Path, str]) -> StudyConfig:
    """Reads and validates a JSON configuration file.
    Raises:
        ConfigError: malformed JSON (with its line) or a schema violation
        OSError: the file cannot be read
    """
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(error.msg, line=error.lineno) from None
    return StudyConfig.from_dict(data)


def parse_config(data: Union[Dict[str, Any], str]) -> StudyConfig:
    """Validates a configuration given as a dict or a JSON string.
    >>> config = parse_config({})
    >>> config.p, config.n_samples, config.seed
    (2.0, 1000, 0)
    >>> parse_config('{"risk": {"alpha": 1.0}}')
    Traceback (most recent call last):
    ...
    sensipy.exceptions.ConfigError: risk.alpha: alpha must lie in [0,1), got 1.0
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as error:
            raise ConfigError(error.msg, line=error.lineno) from None
    return StudyConfig.from_dict(data)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
