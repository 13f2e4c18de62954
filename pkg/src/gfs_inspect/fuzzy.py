"""Mamdani fuzzy inference with Gaussian membership banks.

Every variable carries five Gaussian MFs in linguistic order (NB, NS, Z, PS,
PB).  Inference uses the product t-norm for rule strength, max aggregation per
output MF and centroid defuzzification of the clipped output MFs on a uniform
201-point grid over the output range (trapezoid quadrature).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConfigurationError

N_MF = 5
N_DEFUZZ = 201
LABELS = ("NB", "NS", "Z", "PS", "PB")


@dataclass(frozen=True)
class GaussianMF:
    mean: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigurationError(f"MF sigma must be positive, got {self.sigma}")

    def __call__(self, x):
        return membership(self, x)


def membership(mf: GaussianMF, x):
    return np.exp(-((x - mf.mean) ** 2) / (2.0 * mf.sigma**2))


class VariableSpec:
    """A bounded linguistic variable with five Gaussian MFs."""

    def __init__(self, lo, hi, means, sigmas):
        self.lo = float(lo)
        self.hi = float(hi)
        self.means = np.array(means, dtype=float)
        self.sigmas = np.array(sigmas, dtype=float)
        if not self.lo < self.hi:
            raise ConfigurationError(f"variable range [{lo}, {hi}] is empty")
        if self.means.shape != (N_MF,) or self.sigmas.shape != (N_MF,):
            raise ConfigurationError(f"a variable needs exactly {N_MF} MFs")
        if np.any(np.diff(self.means) < 0):
            raise ConfigurationError("MF means must be non-decreasing")
        if self.means[0] < self.lo or self.means[-1] > self.hi:
            raise ConfigurationError("MF means must lie inside the variable range")
        if np.any(self.sigmas <= 0):
            raise ConfigurationError("MF sigmas must be positive")

    @classmethod
    def uniform(cls, lo, hi, sigma_frac=0.125):
        """Evenly spaced MFs covering ``[lo, hi]``."""
        return cls(lo, hi, np.linspace(lo, hi, N_MF), np.full(N_MF, sigma_frac * (hi - lo)))

    @property
    def mfs(self):
        return [GaussianMF(m, s) for m, s in zip(self.means, self.sigmas)]

    @property
    def width(self):
        return self.hi - self.lo

    def to_dict(self):
        return {"range": [self.lo, self.hi], "means": self.means.tolist(),
                "sigmas": self.sigmas.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["range"][0], d["range"][1], d["means"], d["sigmas"])

    def __eq__(self, other):
        return (isinstance(other, VariableSpec) and self.lo == other.lo and self.hi == other.hi
                and np.array_equal(self.means, other.means)
                and np.array_equal(self.sigmas, other.sigmas))

    def __repr__(self):
        return f"VariableSpec([{self.lo}, {self.hi}], means={self.means.tolist()})"


class RuleTable:
    """Dense map from input-MF index tuples to an output-MF index.

    ``entries`` is stored flat in C order, so the rule for input indices
    ``(i, j, k)`` sits at ``i * 25 + j * 5 + k`` for three inputs.
    """

    def __init__(self, entries, dims: Sequence[int] = None):
        entries = np.asarray(entries)
        if dims is None:
            dims = entries.shape
        self.dims = tuple(int(d) for d in dims)
        flat = entries.reshape(-1)
        if flat.size != int(np.prod(self.dims)):
            raise ConfigurationError(
                f"rule table has {flat.size} entries, expected {int(np.prod(self.dims))}")
        if not np.all(np.equal(np.mod(flat, 1), 0)) or flat.min() < 0 or flat.max() >= N_MF:
            raise ConfigurationError(f"rule entries must be integers in 0..{N_MF - 1}")
        self.entries = flat.astype(np.int64)

    def as_array(self):
        return self.entries.reshape(self.dims)

    def __eq__(self, other):
        return (isinstance(other, RuleTable) and self.dims == other.dims
                and np.array_equal(self.entries, other.entries))


class FisParams:
    """Immutable-by-convention FIS: input variables, output variable and rules."""

    def __init__(self, inputs: Sequence[VariableSpec], output: VariableSpec, rules: RuleTable):
        self.inputs = list(inputs)
        self.output = output
        self.rules = rules
        if not 2 <= len(self.inputs) <= 3:
            raise ConfigurationError("a FIS takes two or three inputs")
        if rules.dims != (N_MF,) * len(self.inputs):
            raise ConfigurationError(f"rule dims {rules.dims} do not match {len(self.inputs)} inputs")
        # cached arrays for the compiled kernel
        self._in_lo = np.array([v.lo for v in self.inputs])
        self._in_hi = np.array([v.hi for v in self.inputs])
        self._in_means = np.array([v.means for v in self.inputs])
        self._in_sigmas = np.array([v.sigmas for v in self.inputs])
        self._y = np.linspace(output.lo, output.hi, N_DEFUZZ)
        self._curves = np.exp(-((self._y[None, :] - output.means[:, None]) ** 2)
                              / (2.0 * output.sigmas[:, None] ** 2))

    def __call__(self, *x):
        return infer_and_defuzzify(self, x)

    def __eq__(self, other):
        return (isinstance(other, FisParams) and self.inputs == other.inputs
                and self.output == other.output and self.rules == other.rules)

    def to_dict(self):
        return {"inputs": [v.to_dict() for v in self.inputs], "output": self.output.to_dict(),
                "rules": self.rules.entries.tolist()}

    @classmethod
    def from_dict(cls, d):
        inputs = [VariableSpec.from_dict(v) for v in d["inputs"]]
        return cls(inputs, VariableSpec.from_dict(d["output"]),
                   RuleTable(d["rules"], (N_MF,) * len(inputs)))


def fuzzify(spec: VariableSpec, x):
    """Degrees of membership of ``x`` (clamped to the range) in each MF."""
    xc = min(max(float(x), spec.lo), spec.hi)
    return np.exp(-((xc - spec.means) ** 2) / (2.0 * spec.sigmas**2))


@njit(cache=True)
def _infer(x, lo, hi, means, sigmas, rules, y, curves):
    n_in = x.shape[0]
    deg = np.empty((n_in, 5))
    for i in range(n_in):
        xi = min(max(x[i], lo[i]), hi[i])
        for j in range(5):
            d = xi - means[i, j]
            deg[i, j] = np.exp(-d * d / (2.0 * sigmas[i, j] * sigmas[i, j]))
    agg = np.zeros(5)
    n_rules = rules.shape[0]
    for r in range(n_rules):
        s = 1.0
        rem = r
        for i in range(n_in - 1, -1, -1):
            s *= deg[i, rem % 5]
            rem //= 5
        k = rules[r]
        if s > agg[k]:
            agg[k] = s
    num = 0.0
    den = 0.0
    last = y.shape[0] - 1
    for t in range(last + 1):
        mu = 0.0
        for k in range(5):
            c = min(curves[k, t], agg[k])
            if c > mu:
                mu = c
        # trapezoid weights: the outer MFs are centred on the range ends
        if t == 0 or t == last:
            mu *= 0.5
        num += mu * y[t]
        den += mu
    if den <= 0.0:
        # only reachable when every rule strength underflows
        return 0.5 * (y[0] + y[-1])
    return num / den


def infer_and_defuzzify(fis: FisParams, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (len(fis.inputs),):
        raise ValueError(f"expected {len(fis.inputs)} inputs, got shape {x.shape}")
    return _infer(x, fis._in_lo, fis._in_hi, fis._in_means, fis._in_sigmas,
                  fis.rules.entries, fis._y, fis._curves)
