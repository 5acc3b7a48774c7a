"""Statistics, Markov kernels, conditional expectation, and congruence.

A statistic is a map between finite sample spaces, stored as one target
index per source atom. A Markov kernel attaches a probability row over the
target atoms to every source atom; statistics are the 0/1 special case.
The module provides the induced linear maps on (power) measures, the
conditional expectation operator, congruent embeddings and kernels,
transverse (fiber) measures, and the decomposition of an arbitrary kernel
into a congruent kernel followed by a statistic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DominationError, EmptyFiberError, SpaceMismatchError
from .measures import (
    Measure,
    PowerMeasure,
    ProbabilityMeasure,
    SampleSpace,
    SignedMeasure,
    radon_nikodym,
)

__all__ = [
    "Statistic",
    "MarkovKernel",
    "TransverseFamily",
    "as_kernel",
    "kernel_of_statistic",
    "pushforward",
    "conditional_expectation",
    "compose",
    "is_congruent",
    "congruent_embedding",
    "transverse_measures",
    "congruent_kernel_from_embedding",
    "decompose_kernel",
    "power_pushforward",
    "formal_power_derivative",
    "product_space",
]

_ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Statistic:
    """A map between sample spaces: one target-atom index per source atom."""

    source: SampleSpace
    target: SampleSpace
    map: np.ndarray = field(repr=False)

    def __init__(self, source, target, map):
        idx = np.asarray(map, dtype=np.intp)
        idx = np.atleast_1d(idx)
        if idx.shape != (source.n_atoms,):
            raise ValueError("statistic map must have one entry per source atom")
        if np.any(idx < 0) or np.any(idx >= target.n_atoms):
            raise ValueError("statistic map entry out of target range")
        idx.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "map", idx)

    def push(self, nu):
        """Pushforward of a signed measure: sum masses over each fiber."""
        if nu.space != self.source:
            raise SpaceMismatchError("measure does not live on the statistic's source")
        mass = np.bincount(self.map, weights=nu.mass, minlength=self.target.n_atoms)
        cls = Measure if isinstance(nu, Measure) else SignedMeasure
        return cls(self.target, mass)

    def pull(self, values):
        """Pullback of a per-target-atom function: compose with the map."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.target.n_atoms,):
            raise ValueError("expected one value per target atom")
        return values[self.map]

    def fiber(self, j):
        """Indices of the source atoms mapped to target atom ``j``."""
        return np.flatnonzero(self.map == j)


@dataclass(frozen=True, eq=False)
class MarkovKernel:
    """A row-stochastic matrix from the atoms of one space to another."""

    source: SampleSpace
    target: SampleSpace
    rows: np.ndarray = field(repr=False)

    def __init__(self, source, target, rows):
        rows = np.asarray(rows, dtype=float)
        if rows.shape != (source.n_atoms, target.n_atoms):
            raise ValueError(
                "kernel matrix must be (n_source, n_target) = ({}, {}), got {}".format(
                    source.n_atoms, target.n_atoms, rows.shape
                )
            )
        if not np.all(np.isfinite(rows)) or np.any(rows < 0):
            raise ValueError("kernel entries must be finite and nonnegative")
        sums = rows.sum(axis=1)
        bad = np.abs(sums - 1.0) > _ROW_SUM_TOL
        if np.any(bad):
            i = int(np.argmax(bad))
            raise ValueError(
                "kernel row {} sums to {!r}, not 1".format(i, float(sums[i]))
            )
        rows = rows.copy()
        rows.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "rows", rows)

    def row_measure(self, i):
        """The probability row attached to source atom ``i``."""
        mass = self.rows[i] / self.rows[i].sum()
        return ProbabilityMeasure(self.target, mass)


@dataclass(frozen=True, eq=False)
class TransverseFamily:
    """A disintegration of a measure along a statistic.

    One probability measure per target atom, supported on that atom's fiber;
    entries are ``None`` for empty fibers of zero pushforward mass.
    """

    statistic: Statistic
    fibers: tuple

    def __init__(self, statistic, fibers):
        fibers = tuple(fibers)
        if len(fibers) != statistic.target.n_atoms:
            raise ValueError("need one fiber entry per target atom")
        for j, fm in enumerate(fibers):
            if fm is None:
                continue
            if fm.space != statistic.source:
                raise SpaceMismatchError("fiber measures must live on the source space")
            off = fm.mass[statistic.map != j]
            if np.any(off != 0):
                raise ValueError("fiber measure {} has mass outside its fiber".format(j))
        object.__setattr__(self, "statistic", statistic)
        object.__setattr__(self, "fibers", fibers)


# ---------------------------------------------------------------------------
# kernels and pushforwards
# ---------------------------------------------------------------------------

def kernel_of_statistic(kappa):
    """The 0/1 kernel whose row at each atom is the Dirac row at its image."""
    rows = np.zeros((kappa.source.n_atoms, kappa.target.n_atoms))
    rows[np.arange(kappa.source.n_atoms), kappa.map] = 1.0
    return MarkovKernel(kappa.source, kappa.target, rows)


def as_kernel(k_or_statistic):
    """Coerce a Statistic to its kernel; pass kernels through."""
    if isinstance(k_or_statistic, Statistic):
        return kernel_of_statistic(k_or_statistic)
    return k_or_statistic


def pushforward(kernel, nu):
    """Push a signed measure through a kernel: ``mass'_j = sum_i K_ij mass_i``.

    Preserves total mass; preserves the TV norm of nonnegative measures and
    never increases it for signed ones.
    """
    kernel = as_kernel(kernel)
    if nu.space != kernel.source:
        raise SpaceMismatchError("measure does not live on the kernel's source space")
    mass = nu.mass @ kernel.rows
    cls = Measure if isinstance(nu, Measure) else SignedMeasure
    return cls(kernel.target, mass)


def conditional_expectation(kernel, mu, phi):
    """Average ``phi`` over the kernel against the base measure ``mu``.

    Returns the per-target-atom function ``phi'`` with
    ``pushforward(K, phi*mu) = phi' * pushforward(K, mu)``; explicitly
    ``phi'_j = (sum_i K_ij phi_i mu_i) / (sum_i K_ij mu_i)`` with the 0/0
    convention ``phi'_j = 0`` on pushforward-null atoms. For every k >= 1
    it contracts the L^k norm: ``||phi'||_{L^k(K mu)} <= ||phi||_{L^k(mu)}``.
    """
    kernel = as_kernel(kernel)
    if mu.space != kernel.source:
        raise SpaceMismatchError("measure does not live on the kernel's source space")
    if np.any(mu.mass < 0):
        raise ValueError("conditional expectation needs a nonnegative base measure")
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (kernel.source.n_atoms,):
        raise ValueError("expected one value per source atom")
    num = (phi * mu.mass) @ kernel.rows
    den = mu.mass @ kernel.rows
    out = np.zeros(kernel.target.n_atoms)
    np.divide(num, den, out=out, where=den != 0)
    return out


def compose(k2, k1):
    """Composite kernel: apply ``k1`` first, then ``k2`` (matrix product)."""
    k1 = as_kernel(k1)
    k2 = as_kernel(k2)
    if k1.target != k2.source:
        raise SpaceMismatchError("inner target space does not match outer source space")
    return MarkovKernel(k1.source, k2.target, k1.rows @ k2.rows)


def is_congruent(kernel, kappa, tol=1e-12):
    """Is ``kernel`` congruent for the statistic ``kappa``?

    ``kernel`` maps the target of ``kappa`` back to its source; congruence
    means pushing each row forward through ``kappa`` gives the Dirac at the
    row's own atom, i.e. each row's mass stays inside the matching fiber.
    """
    kernel = as_kernel(kernel)
    if kernel.target != kappa.source or kernel.source != kappa.target:
        raise SpaceMismatchError(
            "congruence pairs a kernel from Y to X with a statistic from X to Y"
        )
    n = kappa.target.n_atoms
    # aggregated[j', j] = mass row j' places on fiber j
    aggregated = np.zeros((n, n))
    np.add.at(aggregated.T, kappa.map, kernel.rows.T)
    return bool(np.all(np.abs(aggregated - np.eye(n)) <= tol))


def congruent_embedding(kappa, mu, nu_prime):
    """Embed a measure from the target space back into the source space.

    Writes ``nu'`` as a density against the pushforward of ``mu``, pulls the
    density back along ``kappa``, and multiplies by ``mu``. Pushing the
    result forward through ``kappa`` recovers ``nu'`` exactly.
    """
    mu_prime = kappa.push(mu)
    phi_prime = radon_nikodym(nu_prime, mu_prime)
    return SignedMeasure(kappa.source, kappa.pull(phi_prime) * mu.mass)


def transverse_measures(kappa, mu):
    """Disintegrate ``mu`` along ``kappa`` into per-fiber probabilities.

    Fibers of positive pushforward mass get the normalized restriction of
    ``mu``; nonempty null fibers get the uniform probability on the fiber;
    empty null fibers are recorded as absent (``None``).
    """
    if mu.space != kappa.source:
        raise SpaceMismatchError("measure does not live on the statistic's source")
    if np.any(mu.mass < 0):
        raise ValueError("transverse measures need a nonnegative measure")
    pushed = kappa.push(mu)
    fibers = []
    for j in range(kappa.target.n_atoms):
        idx = kappa.fiber(j)
        total = pushed.mass[j]
        if idx.size == 0:
            if total > 0:
                raise EmptyFiberError(
                    "target atom {!r} has positive mass {!r} but an empty fiber".format(
                        kappa.target.atoms[j], float(total)
                    )
                )
            fibers.append(None)
            continue
        mass = np.zeros(kappa.source.n_atoms)
        if total > 0:
            mass[idx] = mu.mass[idx] / total
        else:
            mass[idx] = 1.0 / idx.size
        fibers.append(ProbabilityMeasure(kappa.source, mass))
    return TransverseFamily(kappa, tuple(fibers))


def congruent_kernel_from_embedding(kappa, mu):
    """The congruent kernel whose rows are the transverse fiber measures.

    Requires every target atom to have a nonempty preimage. Pushing any
    measure dominated by the pushforward of ``mu`` through the result agrees
    with :func:`congruent_embedding`.
    """
    family = transverse_measures(kappa, mu)
    rows = []
    for j, fm in enumerate(family.fibers):
        if fm is None:
            raise EmptyFiberError(
                "target atom {!r} has an empty preimage".format(kappa.target.atoms[j])
            )
        rows.append(fm.mass)
    return MarkovKernel(kappa.target, kappa.source, np.asarray(rows))


def product_space(left, right, sep="|"):
    """Product sample space with row-major atom order (left index outer)."""
    atoms = [
        "{}{}{}".format(a, sep, b) for a in left.atoms for b in right.atoms
    ]
    return SampleSpace(atoms)


def decompose_kernel(kernel):
    """Split a kernel into a congruent kernel followed by a statistic.

    Returns ``(k_cong, kappa1, kappa2)`` where ``k_cong`` maps the source
    into the product space (source x target) by ``delta_omega x K(omega)``,
    ``kappa1``/``kappa2`` are the product projections, ``k_cong`` is
    congruent for ``kappa1``, and composing the ``kappa2`` kernel after
    ``k_cong`` reproduces the original kernel exactly.
    """
    kernel = as_kernel(kernel)
    n, m = kernel.rows.shape
    prod = product_space(kernel.source, kernel.target)
    rows = np.zeros((n, n * m))
    for i in range(n):
        rows[i, i * m : (i + 1) * m] = kernel.rows[i]
    k_cong = MarkovKernel(kernel.source, prod, rows)
    pairs = np.arange(n * m)
    kappa1 = Statistic(prod, kernel.source, pairs // m)
    kappa2 = Statistic(prod, kernel.target, pairs % m)
    return k_cong, kappa1, kappa2


# ---------------------------------------------------------------------------
# power-measure transport
# ---------------------------------------------------------------------------

def power_pushforward(kernel, nu):
    """Push a power measure of exponent r through a kernel.

    Computed by raising to the power 1/r (back to a signed measure),
    pushing forward, and taking the sign-preserving r-th power again.
    """
    kernel = as_kernel(kernel)
    if nu.space != kernel.source:
        raise SpaceMismatchError("power measure does not live on the kernel's source")
    signed = np.sign(nu.coeff) * np.abs(nu.coeff) ** (1.0 / nu.r)
    pushed = signed @ kernel.rows
    return PowerMeasure(kernel.target, nu.r, np.sign(pushed) * np.abs(pushed) ** nu.r)


def formal_power_derivative(kernel, mu, rho):
    """Derivative of the power pushforward at ``mu**r`` applied to ``rho``.

    ``rho`` must be of the form ``phi * mu**r`` (coefficients vanishing on
    ``mu``-null atoms); the result is ``phi' * (K mu)**r`` with ``phi'`` the
    conditional expectation of ``phi``. Its norm never exceeds the norm of
    ``rho``.
    """
    kernel = as_kernel(kernel)
    if mu.space != kernel.source or rho.space != kernel.source:
        raise SpaceMismatchError("operands do not live on the kernel's source space")
    null = mu.mass == 0
    offending = null & (rho.coeff != 0)
    if np.any(offending):
        i = int(np.argmax(offending))
        raise DominationError(
            "power measure has coefficient {!r} on a null atom {!r} of the base measure".format(
                float(rho.coeff[i]), mu.space.atoms[i]
            )
        )
    base = mu.mass**rho.r
    phi = np.zeros(mu.space.n_atoms)
    np.divide(rho.coeff, base, out=phi, where=~null)
    phi_prime = conditional_expectation(kernel, mu, phi)
    pushed = pushforward(kernel, mu)
    return PowerMeasure(kernel.target, rho.r, phi_prime * pushed.mass**rho.r)
