from dataclasses import dataclass
from typing import Optional

import numpy as np

from sensipy.exceptions import ValidationError
from sensipy.metrics.measure import EmpiricalMeasure
from sensipy.risk.functional import (AverageValueAtRisk, EntropicValueAtRisk,
                                     EssentialSupremum, Expectation, RiskFunctional,
                                     Semideviation, SpectralDensity, SpectralRisk,
                                     ValueAtRisk)

RISK_KINDS = ("expectation", "esssup", "var", "avar", "evar", "spectral", "semideviation")


@dataclass(frozen=True)
class RiskSpec:
    """Tagged description of a risk functional.

    Attributes:
        kind: one of RISK_KINDS
        alpha: level of var, avar and evar, in [0, 1)
        beta: risk aversion of the semideviation, in [0, 1]
        order: order p >= 1 of the semideviation
        density: spectral density, required for "spectral"
    """
    kind: str
    alpha: float = 0.95
    beta: float = 1.0
    order: float = 1.0
    density: Optional[SpectralDensity] = None

    def __post_init__(self) -> None:
        if self.kind not in RISK_KINDS:
            raise ValidationError(
                f"unknown risk kind {self.kind!r}; valid kinds are {', '.join(RISK_KINDS)}")
        if not 0 <= self.alpha < 1:
            raise ValidationError(f"alpha must lie in [0,1), got {self.alpha}")
        if not 0 <= self.beta <= 1:
            raise ValidationError(f"beta must lie in [0,1], got {self.beta}")
        if not self.order >= 1:
            raise ValidationError(f"order must be at least 1, got {self.order}")
        if self.kind == "spectral" and self.density is None:
            raise ValidationError("a spectral risk needs a density")

    @property
    def label(self) -> str:
        """Short name used in report rows.
        >>> RiskSpec("avar", alpha=0.9).label
        'avar(alpha=0.9)'
        """
        if self.kind in ("var", "avar", "evar"):
            return f"{self.kind}(alpha={self.alpha:g})"
        if self.kind == "semideviation":
            return f"semideviation(beta={self.beta:g},p={self.order:g})"
        if self.kind == "spectral":
            return f"spectral({self.density.kind})"
        return self.kind

    def to_dict(self) -> dict:
        data = {"kind": self.kind}
        if self.kind in ("var", "avar", "evar"):
            data["alpha"] = self.alpha
        elif self.kind == "semideviation":
            data["beta"] = self.beta
            data["order"] = self.order
        elif self.kind == "spectral":
            data["density"] = self.density.to_dict()
        return data


class RiskFactory(object):
    """Builds a risk functional for a given spec.
    """
    @staticmethod
    def create(spec: RiskSpec) -> RiskFunctional:
        """Returns the functional described by `spec`.
        Args:
            spec: risk spec
        Returns:
            functional: callable on scalar samples
        Raises:
            ValidationError
        >>> type(RiskFactory.create(RiskSpec("avar", alpha=0.5))).__name__
        'AverageValueAtRisk'
        """
        kind = spec.kind
        if kind == "expectation":
            functional = Expectation()
        elif kind == "esssup":
            functional = EssentialSupremum()
        elif kind == "var":
            functional = ValueAtRisk(spec.alpha)
        elif kind == "avar":
            functional = AverageValueAtRisk(spec.alpha)
        elif kind == "evar":
            functional = EntropicValueAtRisk(spec.alpha)
        elif kind == "spectral":
            functional = SpectralRisk(spec.density)
        elif kind == "semideviation":
            functional = Semideviation(spec.beta, spec.order)
        else:
            raise ValidationError(f"unknown risk kind {kind!r}")
        return functional


def evaluate(
    spec: RiskSpec,
    samples,
    weights: Optional[np.ndarray] = None) -> float:
    """Evaluates the risk functional of `spec` on scalar samples.
    >>> evaluate(RiskSpec("avar", alpha=0.5), [1.0, 2.0, 3.0, 4.0])
    3.5
    >>> evaluate(RiskSpec("expectation"), EmpiricalMeasure([0.0, 1.0], [0.25, 0.75]))
    0.75
    """
    return RiskFactory.create(spec)(samples, weights)


if __name__ == "__main__":
    import doctest
    doctest.testmod()
