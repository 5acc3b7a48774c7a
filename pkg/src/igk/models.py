"""Families of measures indexed by a parameter, and their derived tensors.

A model assigns to each parameter vector a nonnegative density over the
atoms of a fixed :class:`~igk.measures.SampleSpace`; the atom masses are
density times base weight. Directional derivatives come from an analytic
gradient when the model carries one and from central finite differences
otherwise. Everything downstream (norms, Fisher matrix, higher symmetric
tensors, pushforwards under kernels) is built from the per-atom logarithmic
derivative d(mass)/mass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np

from .errors import (
    ContractError,
    DomainError,
    DominationError,
    ExponentError,
    NegativeDensityError,
    SpaceMismatchError,
    ZeroMassError,
)
from .measures import Measure, PowerMeasure, SampleSpace, lk_norm
from .markov import as_kernel

__all__ = [
    "ParameterDomain",
    "ParametrizedMeasureModel",
    "TangentVector",
    "TensorValue",
    "evaluate",
    "mass_gradient",
    "log_derivative",
    "k_norm",
    "check_k_integrability",
    "IntegrabilityReport",
    "power_path",
    "canonical_tensor",
    "tau_n",
    "tau_tensor",
    "fisher_metric",
    "amari_chentsov",
    "normalize_model",
    "induced_model",
]

_STAT_TOL = 1e-10
_NULL_DERIV_TOL = 1e-10
_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class ParameterDomain:
    """Open box of admissible parameters.

    ``bounds`` is a tuple of (low, high) pairs, one per coordinate;
    infinities are allowed. Membership is strict inequality on both sides.
    """

    bounds: tuple

    def __init__(self, bounds):
        norm = tuple(
            (float(lo), float(hi)) for lo, hi in bounds
        )
        for lo, hi in norm:
            if not lo < hi:
                raise DomainError(
                    "empty interval ({}, {}) in parameter domain".format(lo, hi)
                )
        object.__setattr__(self, "bounds", norm)

    @property
    def dim(self):
        return len(self.bounds)

    def contains(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if xi.shape != (self.dim,):
            return False
        return all(
            lo < x < hi for x, (lo, hi) in zip(xi, self.bounds)
        )


@dataclass(frozen=True)
class TangentVector:
    """A base point with a direction attached to it."""

    base: tuple
    direction: tuple

    def __init__(self, base, direction):
        base = tuple(float(v) for v in np.atleast_1d(base))
        direction = tuple(float(v) for v in np.atleast_1d(direction))
        if len(base) != len(direction):
            raise DomainError(
                "base has dimension {} but direction has {}".format(
                    len(base), len(direction)
                )
            )
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", direction)


class ParametrizedMeasureModel:
    """A parameter-indexed family of measures on a fixed finite space.

    Parameters
    ----------
    domain : ParameterDomain
        Open box of admissible parameter vectors.
    space : SampleSpace
        The common sample space of all members.
    density : callable
        ``density(xi) -> ndarray (n_atoms,)``, nonnegative values of the
        density with respect to the space's base weights.
    density_grad : callable, optional
        ``density_grad(xi) -> ndarray (dim, n_atoms)`` of partial
        derivatives of the density. When absent, directional derivatives
        fall back to central finite differences with per-coordinate step
        ``1e-6 * max(1, |xi_j|)``.
    statistical : bool
        Declares that every member has total mass one; checked at each
        evaluation within 1e-10.
    name : str, optional
        Identifier used in reports.
    """

    def __init__(self, domain, space, density, density_grad=None,
                 statistical=False, name=None):
        if not isinstance(domain, ParameterDomain):
            domain = ParameterDomain(domain)
        if not isinstance(space, SampleSpace):
            raise TypeError("space must be a SampleSpace")
        self.domain = domain
        self.space = space
        self.density = density
        self.density_grad = density_grad
        self.statistical = bool(statistical)
        self.name = name

    def __repr__(self):
        return "ParametrizedMeasureModel(name={!r}, dim={}, atoms={})".format(
            self.name, self.domain.dim, self.space.n_atoms
        )

    def _check_xi(self, xi):
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if xi.shape != (self.domain.dim,):
            raise DomainError(
                "parameter has shape {} but the domain has dimension {}".format(
                    xi.shape, self.domain.dim
                )
            )
        if not self.domain.contains(xi):
            raise DomainError(
                "parameter {} is outside the open domain {}".format(
                    xi.tolist(), self.domain.bounds
                )
            )
        return xi


@dataclass(frozen=True, eq=False)
class TensorValue:
    """A fully symmetric tensor on the parameter space."""

    order: int
    values: np.ndarray = field(repr=False)

    def __init__(self, order, values):
        order = int(order)
        values = np.asarray(values, dtype=float)
        if values.ndim != order:
            raise ContractError(
                "tensor of order {} needs {} axes, got shape {}".format(
                    order, order, values.shape
                )
            )
        if order >= 2:
            d = values.shape[0]
            if any(s != d for s in values.shape):
                raise ContractError(
                    "tensor axes must have equal length, got {}".format(values.shape)
                )
            base = values
            for perm in _transpositions(order):
                if not np.allclose(
                    base, np.transpose(values, perm),
                    rtol=0.0, atol=_SYMMETRY_TOL * max(1.0, np.abs(values).max()),
                ):
                    raise ContractError(
                        "tensor is not symmetric under permutation {}".format(perm)
                    )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "values", values)


def _transpositions(order):
    # adjacent transpositions generate the symmetric group
    for a in range(order - 1):
        perm = list(range(order))
        perm[a], perm[a + 1] = perm[a + 1], perm[a]
        yield tuple(perm)


# ---------------------------------------------------------------------------
# evaluation and derivatives
# ---------------------------------------------------------------------------

def evaluate(model, xi):
    """The member measure at parameter ``xi``.

    Raises DomainError outside the domain, NegativeDensityError if the
    density callable returns a negative value, and ContractError when a
    statistical model fails to have total mass one within 1e-10.
    """
    xi = model._check_xi(xi)
    dens = np.asarray(model.density(xi), dtype=float)
    if dens.shape != (model.space.n_atoms,):
        raise ContractError(
            "density returned shape {}, expected ({},)".format(
                dens.shape, model.space.n_atoms
            )
        )
    if np.any(dens < 0):
        i = int(np.argmin(dens))
        raise NegativeDensityError(
            "density is negative ({}) at atom {!r} for xi={}".format(
                dens[i], model.space.atoms[i], xi.tolist()
            )
        )
    mass = dens * model.space.base_masses
    if model.statistical and abs(mass.sum() - 1.0) > _STAT_TOL:
        raise ContractError(
            "statistical model has total mass {} at xi={}".format(
                mass.sum(), xi.tolist()
            )
        )
    return Measure(model.space, mass)


def _fd_steps(model, xi):
    h = 1e-6 * np.maximum(1.0, np.abs(xi))
    # shrink steps so both sample points stay strictly inside the open box
    for j, (lo, hi) in enumerate(model.domain.bounds):
        room = min(xi[j] - lo, hi - xi[j]) / 2.0
        if np.isfinite(room):
            h[j] = min(h[j], room)
    return h


def _density_jacobian(model, xi):
    """Partial derivatives of the density, shape (dim, n_atoms)."""
    if model.density_grad is not None:
        grad = np.asarray(model.density_grad(xi), dtype=float)
        want = (model.domain.dim, model.space.n_atoms)
        if grad.shape != want:
            raise ContractError(
                "density_grad returned shape {}, expected {}".format(grad.shape, want)
            )
        return grad
    h = _fd_steps(model, xi)
    rows = []
    for j in range(model.domain.dim):
        step = np.zeros_like(xi)
        step[j] = h[j]
        hi = np.asarray(model.density(xi + step), dtype=float)
        lo = np.asarray(model.density(xi - step), dtype=float)
        rows.append((hi - lo) / (2.0 * h[j]))
    return np.asarray(rows)


def mass_gradient(model, xi):
    """Partial derivatives of the atom masses, shape (dim, n_atoms)."""
    xi = model._check_xi(xi)
    return _density_jacobian(model, xi) * model.space.base_masses


def _as_direction(model, v):
    if isinstance(v, TangentVector):
        v = v.direction
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (model.domain.dim,):
        raise DomainError(
            "direction has shape {}, expected ({},)".format(v.shape, model.domain.dim)
        )
    return v


def log_derivative(model, xi, direction):
    """Per-atom logarithmic derivative along ``direction``.

    Returns d(mass)/mass with the convention 0 on atoms of zero mass. If
    the mass derivative fails to vanish on a zero-mass atom (beyond
    1e-10 relative to the largest derivative), the member measures do not
    stay dominated by the current one and DominationError is raised.
    """
    xi = model._check_xi(xi)
    v = _as_direction(model, direction)
    mass = evaluate(model, xi).mass
    dmass = v @ mass_gradient(model, xi)
    null = mass == 0.0
    if null.any():
        scale = max(1.0, float(np.abs(dmass).max()))
        bad = null & (np.abs(dmass) > _NULL_DERIV_TOL * scale)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise DominationError(
                "mass derivative {} is nonzero on zero-mass atom {!r} at xi={}".format(
                    dmass[i], model.space.atoms[i], xi.tolist()
                )
            )
    out = np.zeros_like(mass)
    np.divide(dmass, mass, out=out, where=~null)
    return out


def k_norm(model, xi, direction, k):
    """L^k norm of the logarithmic derivative under the member measure."""
    ld = log_derivative(model, xi, direction)
    mu = evaluate(model, xi)
    return lk_norm(ld, mu, k)


@dataclass(frozen=True, eq=False)
class IntegrabilityReport:
    k: float
    grid: tuple
    directions: tuple
    values: np.ndarray = field(repr=False)
    max_jump: float
    max_jump_at: tuple
    flagged: tuple
    passed: bool


def check_k_integrability(model, xi_grid, directions, k, tol=0.5):
    """Probe whether the k-norm of the log-derivative behaves continuously.

    Evaluates ``k_norm`` on an ordered parameter grid and flags any jump
    between adjacent grid points larger than ``tol`` times the local scale
    ``max(1, |v_i|, |v_{i+1}|)``. A DominationError from any grid point
    propagates with that point attached to the message.
    """
    grid = tuple(np.atleast_1d(np.asarray(x, dtype=float)) for x in xi_grid)
    dirs = tuple(_as_direction(model, v) for v in directions)
    values = np.empty((len(grid), len(dirs)))
    for i, xi in enumerate(grid):
        for a, v in enumerate(dirs):
            try:
                values[i, a] = k_norm(model, xi, v, k)
            except DominationError as err:
                raise DominationError(
                    "at grid point xi={}: {}".format(xi.tolist(), err)
                ) from err
    flagged = []
    max_jump = 0.0
    max_at = (0, 0)
    for a in range(len(dirs)):
        for i in range(len(grid) - 1):
            jump = abs(values[i + 1, a] - values[i, a])
            scale = max(1.0, abs(values[i, a]), abs(values[i + 1, a]))
            if jump / scale > max_jump:
                max_jump = jump / scale
                max_at = (i, a)
            if jump > tol * scale:
                flagged.append((i, a))
    values.setflags(write=False)
    return IntegrabilityReport(
        k=float(k),
        grid=tuple(tuple(x) for x in grid),
        directions=tuple(tuple(v) for v in dirs),
        values=values,
        max_jump=max_jump,
        max_jump_at=max_at,
        flagged=tuple(flagged),
        passed=not flagged,
    )


# ---------------------------------------------------------------------------
# power paths and canonical tensors
# ---------------------------------------------------------------------------

def power_path(model, xi, direction, k):
    """The member measure raised to power 1/k, with its derivative.

    Returns a pair of power measures with exponent r = 1/k: the rescaled
    member ``m^(1/k)`` and the path derivative ``(1/k) * (dm/m) * m^(1/k)``
    along ``direction``.
    """
    k = float(k)
    if not k >= 1.0:
        raise ExponentError("power_path needs k >= 1, got {}".format(k))
    r = 1.0 / k
    mass = evaluate(model, xi).mass
    ld = log_derivative(model, xi, direction)
    base = np.power(mass, r)
    point = PowerMeasure(model.space, r, base)
    velocity = PowerMeasure(model.space, r, r * ld * base)
    return point, velocity


def canonical_tensor(*power_measures):
    """Pair n power measures of exponent 1/n into a number.

    The product of the arguments is a signed measure (exponents sum to 1)
    and the value is n^n times its total mass.
    """
    n = len(power_measures)
    if n < 1:
        raise ExponentError("canonical_tensor needs at least one argument")
    space = power_measures[0].space
    r = 1.0 / n
    coeffs = np.ones(space.n_atoms)
    for nu in power_measures:
        if nu.space != space:
            raise SpaceMismatchError("power measures live on different spaces")
        if abs(nu.r - r) > 1e-12:
            raise ExponentError(
                "expected exponent 1/{} = {}, got {}".format(n, r, nu.r)
            )
        coeffs = coeffs * nu.coeff
    return float(n ** n * coeffs.sum())


def tau_n(model, xi, directions):
    """Symmetric n-point pairing of log-derivatives under the member.

    ``directions`` is a sequence of n tangent directions; the value is the
    sum over atoms of the product of their log-derivatives weighted by the
    member mass. For n=2 this is the Fisher pairing, for n=3 the cubic one.
    """
    dirs = [
        v.direction if isinstance(v, TangentVector) else v for v in directions
    ]
    if len(dirs) < 1:
        raise ExponentError("tau_n needs at least one direction")
    mass = evaluate(model, xi).mass
    prod = np.ones_like(mass)
    for v in dirs:
        prod = prod * log_derivative(model, xi, v)
    value = float((prod * mass).sum())
    if not math.isfinite(value):
        raise ContractError("tensor value is not finite at xi={}".format(xi))
    return value


def _log_derivative_basis(model, xi):
    d = model.domain.dim
    rows = [log_derivative(model, xi, np.eye(d)[a]) for a in range(d)]
    return np.asarray(rows)


def tau_tensor(model, xi, order):
    """The full symmetric order-n tensor over the coordinate basis.

    Entry (a1..an) is ``tau_n`` evaluated on the corresponding basis
    directions; order 2 is the Fisher matrix, order 3 the cubic tensor.
    """
    order = int(order)
    if order < 1:
        raise ExponentError("tensor order must be >= 1, got {}".format(order))
    if order > 8:
        raise ExponentError("tensor order {} is unreasonably large".format(order))
    ld = _log_derivative_basis(model, xi)
    mass = evaluate(model, xi).mass
    letters = "abcdefgh"[:order]
    spec = ",".join(c + "i" for c in letters) + ",i->" + letters
    values = np.einsum(spec, *([ld] * order), mass)
    return TensorValue(order, values)


def fisher_metric(model, xi):
    """The order-2 tensor g_ab = sum_i ld_a(i) ld_b(i) m_i."""
    return tau_tensor(model, xi, 2)


def amari_chentsov(model, xi):
    """The order-3 tensor T_abc = sum_i ld_a(i) ld_b(i) ld_c(i) m_i."""
    return tau_tensor(model, xi, 3)


# ---------------------------------------------------------------------------
# derived models
# ---------------------------------------------------------------------------

def normalize_model(model):
    """Rescale every member to total mass one.

    Gradients follow the quotient rule when the wrapped model has analytic
    ones; otherwise the normalized model falls back to finite differences.
    Evaluating at a parameter where the total mass vanishes raises
    ZeroMassError.
    """
    base_w = model.space.base_masses

    def total(xi):
        dens = np.asarray(model.density(xi), dtype=float)
        z = float((dens * base_w).sum())
        if z <= 0.0:
            raise ZeroMassError(
                "total mass {} at xi={} cannot be normalized".format(z, list(xi))
            )
        return dens, z

    def density(xi):
        dens, z = total(xi)
        return dens / z

    grad = None
    if model.density_grad is not None:
        def grad(xi):
            dens, z = total(xi)
            g = np.asarray(model.density_grad(xi), dtype=float)
            dz = (g * base_w).sum(axis=1)
            return (g * z - np.outer(dz, dens)) / (z * z)

    name = None if model.name is None else "normalized({})".format(model.name)
    return ParametrizedMeasureModel(
        model.domain, model.space, density, density_grad=grad,
        statistical=True, name=name,
    )


def induced_model(model, kernel):
    """Push every member (and its derivatives) through a Markov kernel."""
    kernel = as_kernel(kernel)
    if kernel.source != model.space:
        raise SpaceMismatchError(
            "kernel source does not match the model's sample space"
        )
    rows = kernel.rows
    src_w = model.space.base_masses
    tgt_w = kernel.target.base_masses

    def density(xi):
        mass = np.asarray(model.density(xi), dtype=float) * src_w
        return (mass @ rows) / tgt_w

    grad = None
    if model.density_grad is not None:
        def grad(xi):
            g = np.asarray(model.density_grad(xi), dtype=float) * src_w
            return (g @ rows) / tgt_w

    name = None if model.name is None else "induced({})".format(model.name)
    return ParametrizedMeasureModel(
        model.domain, kernel.target, density, density_grad=grad,
        statistical=model.statistical, name=name,
    )
