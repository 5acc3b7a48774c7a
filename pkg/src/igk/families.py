"""Builtin model families.

Each builder returns a ready :class:`~igk.models.ParametrizedMeasureModel`.
``build("name(arg1,arg2)")`` parses optional numeric arguments, so the CLI
can say ``builtin:categorical(4)`` or ``builtin:ex4.1(20000)``.

Registry:

========================  ====================================================
``bernoulli``             two atoms, success probability as the parameter
``categorical(n)``        n atoms, first n-1 probabilities as parameters
``gaussian-grid(L,N)``    normal density sampled on a regular grid of [-L, L]
``ex4.1(N)``              an oscillating family on (0, pi) whose curve is
                          differentiable in L^1 but not in stronger norms
``ex-suff(Ns,Nt)``        a piecewise family on a rectangle for which the
                          first coordinate is a sufficient statistic
========================  ====================================================
"""

from __future__ import annotations

import math
import re

import numpy as np

from .errors import DomainError, UnknownIdentifierError
from .markov import Statistic
from .measures import SampleSpace
from .models import ParameterDomain, ParametrizedMeasureModel

__all__ = [
    "build",
    "bernoulli",
    "categorical",
    "gaussian_grid",
    "ex41",
    "ex_suff",
    "ex_suff_projection",
    "BUILTIN_NAMES",
]


def midpoint_grid(lo, hi, n):
    """Cell midpoints and the common cell weight of a uniform partition."""
    n = int(n)
    if n < 1:
        raise DomainError("grid needs at least one cell, got {}".format(n))
    width = (hi - lo) / n
    points = lo + (np.arange(n) + 0.5) * width
    return points, width


def bernoulli():
    space = SampleSpace(("1", "0"))

    def density(xi):
        p = float(xi[0])
        return np.array([p, 1.0 - p])

    def grad(xi):
        return np.array([[1.0, -1.0]])

    return ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),)),
        space,
        density,
        density_grad=grad,
        statistical=True,
        name="bernoulli",
    )


def categorical(n):
    n = int(n)
    if n < 2:
        raise DomainError("categorical needs at least 2 atoms, got {}".format(n))
    space = SampleSpace(tuple(str(i) for i in range(n)))
    d = n - 1

    def density(xi):
        xi = np.asarray(xi, dtype=float)
        rest = 1.0 - xi.sum()
        if rest <= 0.0:
            raise DomainError(
                "probabilities sum to {} >= 1 at xi={}".format(xi.sum(), xi.tolist())
            )
        return np.concatenate([xi, [rest]])

    def grad(xi):
        g = np.zeros((d, n))
        g[:, :d] = np.eye(d)
        g[:, d] = -1.0
        return g

    return ParametrizedMeasureModel(
        ParameterDomain(((0.0, 1.0),) * d),
        space,
        density,
        density_grad=grad,
        statistical=True,
        name="categorical({})".format(n),
    )


def gaussian_grid(half_width=5.0, n_cells=200):
    """Normal density discretized on a regular grid.

    The grid truncates the real line, so members integrate to slightly
    less than one and the family is deliberately not flagged statistical.
    """
    x, w = midpoint_grid(-float(half_width), float(half_width), n_cells)
    space = SampleSpace(
        tuple("g{}".format(i) for i in range(len(x))),
        coords=x[:, None],
        weights=np.full(len(x), w),
    )

    def density(xi):
        m, s = float(xi[0]), float(xi[1])
        z = (x - m) / s
        return np.exp(-0.5 * z * z) / (s * math.sqrt(2.0 * math.pi))

    def grad(xi):
        m, s = float(xi[0]), float(xi[1])
        p = density(xi)
        z = (x - m) / s
        dm = p * z / s
        ds = p * (z * z - 1.0) / s
        return np.stack([dm, ds])

    return ParametrizedMeasureModel(
        ParameterDomain(((-math.inf, math.inf), (0.0, math.inf))),
        space,
        density,
        density_grad=grad,
        statistical=False,
        name="gaussian-grid({:g},{})".format(half_width, int(n_cells)),
    )


# tiny squared sines underflow the fractional powers below; their true
# contribution is zero in the limit, so cut them off outright
_EX41_FLOOR = 1e-280


def ex41(n_cells=1000):
    """Family 1 + xi * (sin^2(t - 1/xi))^(1/xi^2) on a grid of (0, pi).

    The member at xi = 0 is the uniform density and the family is
    differentiable there only in the L^1 sense; the difference quotient
    norm stays bounded away from zero as xi decreases, which is what the
    quadrature below exposes.
    """
    t, w = midpoint_grid(0.0, math.pi, n_cells)
    space = SampleSpace(
        tuple("t{}".format(i) for i in range(len(t))),
        coords=t[:, None],
        weights=np.full(len(t), w),
    )

    def _bump(xi):
        theta = t - 1.0 / xi
        s2 = np.sin(theta) ** 2
        with np.errstate(all="ignore"):
            g = np.where(s2 > _EX41_FLOOR, s2 ** (1.0 / (xi * xi)), 0.0)
        return theta, s2, g

    def density(xi):
        x = float(xi[0])
        if x == 0.0:
            return np.ones_like(t)
        _, _, g = _bump(x)
        return 1.0 + x * g

    def grad(xi):
        x = float(xi[0])
        if x == 0.0:
            return np.zeros((1, len(t)))
        theta, s2, g = _bump(x)
        live = (g > 0.0) & (s2 > _EX41_FLOOR)
        dg = np.zeros_like(g)
        with np.errstate(all="ignore"):
            term = (
                -2.0 * np.log(s2, where=live, out=np.zeros_like(s2)) / x ** 3
                + np.sin(2.0 * theta) / (s2 * x ** 4)
            )
            np.multiply(g, term, out=dg, where=live)
        return (g + x * dg)[None, :]

    return ParametrizedMeasureModel(
        ParameterDomain(((-1.0, math.inf),)),
        space,
        density,
        density_grad=grad,
        statistical=False,
        name="ex4.1({})".format(int(n_cells)),
    )


def _ex_suff_h(x):
    return math.exp(-1.0 / abs(x)) if x != 0.0 else 0.0


def _ex_suff_grid(n_s, n_t):
    s, ws = midpoint_grid(-1.0, 1.0, n_s)
    t, wt = midpoint_grid(0.0, 1.0, n_t)
    ss, tt = np.meshgrid(s, t, indexing="ij")
    atoms = tuple(
        "{}|{}".format(i, j) for i in range(n_s) for j in range(n_t)
    )
    coords = np.column_stack([ss.ravel(), tt.ravel()])
    weights = np.full(len(atoms), ws * wt)
    return SampleSpace(atoms, coords=coords, weights=weights), s, ws


def ex_suff(n_s=200, n_t=100):
    """Piecewise family on (-1,1) x (0,1) with a sufficient first coordinate.

    For xi >= 0 the density is constant on each half s < 0 / s >= 0; for
    xi < 0 the s >= 0 half instead carries the profile 2t. The projection
    onto s loses no information at any parameter, yet no single dominating
    product measure works across the sign change.
    """
    n_s, n_t = int(n_s), int(n_t)
    space, _, _ = _ex_suff_grid(n_s, n_t)
    sc = space.coords[:, 0]
    tc = space.coords[:, 1]
    pos = sc >= 0.0

    def density(xi):
        x = float(xi[0])
        h = _ex_suff_h(x)
        out = np.where(pos, h, 1.0 - h)
        if x < 0.0:
            out = np.where(pos, 2.0 * tc * h, 1.0 - h)
        return out

    def grad(xi):
        x = float(xi[0])
        if x == 0.0:
            return np.zeros((1, space.n_atoms))
        h = _ex_suff_h(x)
        dh = math.copysign(h / (x * x), x)
        row = np.where(pos, dh, -dh)
        if x < 0.0:
            row = np.where(pos, 2.0 * tc * dh, -dh)
        return row[None, :]

    return ParametrizedMeasureModel(
        ParameterDomain(((-math.inf, math.inf),)),
        space,
        density,
        density_grad=grad,
        statistical=True,
        name="ex-suff({},{})".format(n_s, n_t),
    )


def ex_suff_projection(n_s=200, n_t=100):
    """The first-coordinate statistic matching :func:`ex_suff`."""
    n_s, n_t = int(n_s), int(n_t)
    source, s, ws = _ex_suff_grid(n_s, n_t)
    target = SampleSpace(
        tuple(str(i) for i in range(n_s)),
        coords=s[:, None],
        weights=np.full(n_s, ws),
    )
    mapping = np.repeat(np.arange(n_s), n_t)
    return Statistic(source, target, mapping)


_BUILDERS = {
    "bernoulli": bernoulli,
    "categorical": categorical,
    "gaussian-grid": gaussian_grid,
    "ex4.1": ex41,
    "ex-suff": ex_suff,
}

BUILTIN_NAMES = tuple(sorted(_BUILDERS))

_NAME_RE = re.compile(r"^([A-Za-z0-9._-]+?)(?:\(([^()]*)\))?$")


def build(spec):
    """Build a builtin model from ``name`` or ``name(arg, ...)``."""
    m = _NAME_RE.match(spec.strip())
    if m is None:
        raise UnknownIdentifierError("malformed builtin name {!r}".format(spec))
    name, argtext = m.group(1), m.group(2)
    if name not in _BUILDERS:
        raise UnknownIdentifierError(
            "unknown builtin {!r} (available: {})".format(
                name, ", ".join(BUILTIN_NAMES)
            )
        )
    args = []
    if argtext is not None and argtext.strip():
        for part in argtext.split(","):
            try:
                args.append(float(part))
            except ValueError:
                raise UnknownIdentifierError(
                    "non-numeric argument {!r} in {!r}".format(part, spec)
                ) from None
    return _BUILDERS[name](*args)
