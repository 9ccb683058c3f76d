"""Duration distributions and histogram-residual best fit.

Durations are in seconds. Every family is fitted by the method of moments and
samples are truncated at zero.
"""

import math
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("fixed", "uniform", "normal", "exponential", "lognormal", "gamma")

_PARAMS = {
    "fixed": ("value",),
    "uniform": ("low", "high"),
    "normal": ("mean", "std"),
    "exponential": ("mean",),
    "lognormal": ("mu", "sigma"),
    "gamma": ("shape", "scale"),
}


NESTED_GAIN = 0.5


class DistributionError(ValueError):
    pass


@dataclass(frozen=True)
class DistributionSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in _PARAMS:
            raise DistributionError(f"unknown distribution family {self.family!r}")
        missing = [p for p in _PARAMS[self.family] if p not in self.params]
        if missing:
            raise DistributionError(f"{self.family} needs parameters {missing}")
        p = {k: float(v) for k, v in self.params.items()}
        object.__setattr__(self, "params", p)
        bad = {
            "fixed": p.get("value", 0) < 0,
            "uniform": not 0 <= p.get("low", 0) <= p.get("high", 0),
            "normal": p.get("std", 1) <= 0,
            "exponential": p.get("mean", 1) <= 0,
            "lognormal": p.get("sigma", 1) <= 0,
            "gamma": p.get("shape", 1) <= 0 or p.get("scale", 1) <= 0,
        }[self.family]
        if bad:
            raise DistributionError(f"invalid parameters for {self.family}: {p}")

    def __hash__(self):
        return hash((self.family, tuple(sorted(self.params.items()))))

    @classmethod
    def fixed(cls, value):
        return cls("fixed", {"value": value})

    @property
    def mean(self) -> float:
        p = self.params
        return {
            "fixed": lambda: p["value"],
            "uniform": lambda: (p["low"] + p["high"]) / 2,
            "normal": lambda: p["mean"],
            "exponential": lambda: p["mean"],
            "lognormal": lambda: math.exp(p["mu"] + p["sigma"] ** 2 / 2),
            "gamma": lambda: p["shape"] * p["scale"],
        }[self.family]()

    def sample(self, rng: np.random.Generator) -> float:
        p = self.params
        if self.family == "fixed":
            x = p["value"]
        elif self.family == "uniform":
            x = rng.uniform(p["low"], p["high"])
        elif self.family == "normal":
            x = rng.normal(p["mean"], p["std"])
        elif self.family == "exponential":
            x = rng.exponential(p["mean"])
        elif self.family == "lognormal":
            x = rng.lognormal(p["mu"], p["sigma"])
        else:
            x = rng.gamma(p["shape"], p["scale"])
        return max(0.0, float(x))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == "uniform":
            width = p["high"] - p["low"]
            return np.where((x >= p["low"]) & (x <= p["high"]), 1.0 / width, 0.0)
        if self.family == "normal":
            z = (x - p["mean"]) / p["std"]
            return np.exp(-0.5 * z * z) / (p["std"] * math.sqrt(2 * math.pi))
        if self.family == "exponential":
            return np.where(x >= 0, np.exp(-x / p["mean"]) / p["mean"], 0.0)
        pos = np.clip(x, 1e-300, None)
        if self.family == "lognormal":
            z = (np.log(pos) - p["mu"]) / p["sigma"]
            out = np.exp(-0.5 * z * z) / (pos * p["sigma"] * math.sqrt(2 * math.pi))
            return np.where(x > 0, out, 0.0)
        if self.family == "gamma":
            k, theta = p["shape"], p["scale"]
            logpdf = (k - 1) * np.log(pos) - pos / theta - math.lgamma(k) - k * math.log(theta)
            return np.where(x > 0, np.exp(logpdf), 0.0)
        raise DistributionError("fixed distributions have no density")

    def to_dict(self):
        return {"family": self.family, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, data):
        return cls(data["family"], dict(data.get("params", {})))


def fit_moments(family: str, samples) -> DistributionSpec:
    x = np.asarray(samples, dtype=float)
    mean, std = float(x.mean()), float(x.std())
    if family == "fixed":
        return DistributionSpec.fixed(mean)
    if std <= 0 or mean <= 0:
        raise DistributionError(f"cannot fit {family} to degenerate samples")
    if family == "uniform":
        half = math.sqrt(3.0) * std
        return DistributionSpec("uniform", {"low": max(0.0, mean - half), "high": mean + half})
    if family == "normal":
        return DistributionSpec("normal", {"mean": mean, "std": std})
    if family == "exponential":
        return DistributionSpec("exponential", {"mean": mean})
    if family == "lognormal":
        sigma2 = math.log(1.0 + (std / mean) ** 2)
        return DistributionSpec("lognormal", {"mu": math.log(mean) - sigma2 / 2, "sigma": math.sqrt(sigma2)})
    if family == "gamma":
        return DistributionSpec("gamma", {"shape": (mean / std) ** 2, "scale": std * std / mean})
    raise DistributionError(f"unknown distribution family {family!r}")


def histogram_bins(n: int) -> int:
    bins = math.ceil(math.sqrt(n))
    return max(bins, 10) if n >= 100 else max(bins, 1)


def residuals(spec: DistributionSpec, samples) -> float:
    """Sum of squared residuals between ``spec``'s density and the normalized histogram."""
    x = np.asarray(samples, dtype=float)
    density, edges = np.histogram(x, bins=histogram_bins(len(x)), density=True)
    centers = (edges[:-1] + edges[1:]) / 2
    return float(np.sum((spec.pdf(centers) - density) ** 2))


def best_fit_distribution(samples) -> DistributionSpec:
    """Family with the lowest histogram residual; zero-variance samples give ``fixed``."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DistributionError("no samples to fit")
    if np.any(x < 0):
        raise DistributionError("durations must be non-negative")
    if np.ptp(x) == 0 or x.mean() <= 0:
        return DistributionSpec.fixed(float(x.mean()))
    scores = {}
    for family in FAMILIES[1:]:
        try:
            spec = fit_moments(family, x)
        except DistributionError:
            continue
        scores[family] = (residuals(spec, x), spec)
    family = min(scores, key=lambda f: scores[f][0])
    # gamma nests exponential (shape 1); histogram noise alone lets gamma win about
    # half the time on exponential data, so it must at least halve the residual
    if family == "gamma" and "exponential" in scores:
        if scores["gamma"][0] > NESTED_GAIN * scores["exponential"][0]:
            family = "exponential"
    return scores[family][1]
