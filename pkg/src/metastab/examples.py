"""Bundled example landscapes.

Each bundle carries one canonical numeric realization of the ordinal
constraints that define it (which levels tie, which sit above which), plus
the closed-form reference values the analysis should reproduce. The
realization numbers themselves are conventional choices; only their order
relations and the Hessian data matter for the outputs quoted here.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.interpolate import BPoly

from .errors import InputDataError
from .landscape import (CriticalStructure, Minimum, Saddle, SampledPotential,
                        make_sampled)


class ExampleBundle(NamedTuple):
    name: str
    kind: str                  # "structure" or "sampled"
    structure: object          # CriticalStructure or None
    potential: object          # SampledPotential or None
    realization: dict          # the numeric choices made
    reference: dict            # closed-form values the run should reproduce
    validate_h: tuple          # h schedule for the direct check, or ()


def _chain_structure():
    """Four minima, two at the same depth, all three saddles at one level.

    The two equal minima m21, m22 form a class coupled through their shared
    saddle, with a second saddle leaking to the global well; m23 stays a
    singleton class.
    """
    minima = [Minimum("m11", 0.0, 1.0), Minimum("m21", 0.5, 1.0),
              Minimum("m22", 0.5, 1.0), Minimum("m23", 1.0, 1.0)]
    saddles = [Saddle("s1", 2.0, 1.0, 1.0, ("m21", "m22")),
               Saddle("s2", 2.0, 1.0, 1.0, ("m22", "m11")),
               Saddle("s3", 2.0, 1.0, 1.0, ("m23", "m11"))]
    return CriticalStructure(minima, saddles)


def ex_a():
    golden = math.sqrt(5.0) / 2.0
    return ExampleBundle(
        "ex-a", "structure", _chain_structure(), None,
        {"phi_minima": {"m11": 0.0, "m21": 0.5, "m22": 0.5, "m23": 1.0},
         "saddle_level": 2.0, "hessians": "unit"},
        {"classes": [
            {"members": ["m11"], "pi_zeta2": [0.0]},
            {"members": ["m21", "m22"], "S": [1.5],
             "pi_zeta2": [1.5 - golden, 1.5 + golden]},
            {"members": ["m23"], "S": [1.0], "pi_zeta2": [1.0]}]},
        ())


def ex_b(theta=1.0):
    """A three-member class with two barrier heights.

    The chain m21 - m22 - m23 - m11 has all saddles at one level; the exit
    saddle carries Hessian data theta^4, which feeds the parameter
    nu = 1/(1+theta^2) into the reduced second-level matrix.
    """
    if not theta > 0:
        raise InputDataError("theta must be positive")
    t4 = float(theta) ** 4
    minima = [Minimum("m11", 0.0, 1.0), Minimum("m21", 0.5, 1.0),
              Minimum("m22", 0.5, 1.0), Minimum("m23", 1.0, 1.0)]
    saddles = [Saddle("s1", 2.0, 1.0, 1.0, ("m21", "m22")),
               Saddle("s2", 2.0, 1.0, 1.0, ("m22", "m23")),
               Saddle("s3", 2.0, t4, t4, ("m23", "m11"))]
    nu = 1.0 / (1.0 + theta ** 2)
    disc = math.sqrt((3.0 - nu) ** 2 - 4.0 * (1.0 - nu))
    return ExampleBundle(
        "ex-b", "structure", CriticalStructure(minima, saddles), None,
        {"phi_minima": {"m11": 0.0, "m21": 0.5, "m22": 0.5, "m23": 1.0},
         "saddle_level": 2.0, "theta": float(theta),
         "hessians": "unit except the exit saddle (theta^4)"},
        {"nu": nu,
         "classes": [
             {"members": ["m11"], "pi_zeta2": [0.0]},
             {"members": ["m21", "m22", "m23"],
              "S": [1.0, 1.5],
              "pi_zeta2_by_level": [
                  [1.0 + theta ** 2],
                  [(3.0 - nu - disc) / 2.0, (3.0 - nu + disc) / 2.0]]}]},
        ())


def ex_c(n=4):
    """A ring of n equal minima joined by n equal saddles.

    The nonzero spectrum is that of the cycle graph Laplacian: the computed
    pi * zeta^2 multiset is {2(1 - cos(2 pi k / n)), k = 1..n-1}, with the
    k and n-k values exactly degenerate.
    """
    if n < 3:
        raise InputDataError("the ring needs at least 3 minima")
    width = len(str(n))
    minima = [Minimum(f"m{j + 1:0{width}d}", 0.0, 1.0) for j in range(n)]
    saddles = [Saddle(f"s{j + 1:0{width}d}", 1.0, 1.0, 1.0,
                      (minima[j].id, minima[(j + 1) % n].id))
               for j in range(n)]
    ref = sorted(2.0 - 2.0 * math.cos(2.0 * math.pi * k / n)
                 for k in range(1, n))
    return ExampleBundle(
        "ex-c", "structure", CriticalStructure(minima, saddles), None,
        {"n": n, "phi_minima": 0.0, "saddle_level": 1.0, "hessians": "unit"},
        {"pi_zeta2": ref, "S": 1.0},
        ())


def nine_wells():
    """The nine-minimum landscape used to exercise the full labelling.

    Three separating levels (40, 30, 20); the class at the top level has
    three barrier heights, and two of the five classes have multi-element
    same-level neighbourhoods feeding the prefactor weights.
    """
    mphi = {"m11": 0.0, "m21": 0.0, "m22": 8.0, "m23": 6.0, "m31": 10.0,
            "m32": 10.0, "m33": 6.0, "m34": 12.0, "m41": 0.0}
    joins = {"s1": (40.0, "m21", "m31"), "s2": (30.0, "m31", "m11"),
             "s3": (20.0, "m11", "m41"), "s4": (30.0, "m41", "m32"),
             "s5": (40.0, "m32", "m22"), "s6": (40.0, "m22", "m33"),
             "s7": (30.0, "m33", "m23"), "s8": (30.0, "m23", "m34")}
    minima = [Minimum(k, v, 1.0) for k, v in sorted(mphi.items())]
    saddles = [Saddle(k, lvl, 1.0, 1.0, (a, b))
               for k, (lvl, a, b) in sorted(joins.items())]
    return ExampleBundle(
        "nine-wells", "structure", CriticalStructure(minima, saddles), None,
        {"phi_minima": mphi,
         "saddle_levels": {k: v[0] for k, v in sorted(joins.items())},
         "hessians": "unit"},
        {"labels": {"m11": [1, 1], "m21": [2, 1], "m22": [2, 2],
                    "m23": [2, 3], "m31": [3, 1], "m32": [3, 2],
                    "m33": [3, 3], "m34": [3, 4], "m41": [4, 1]},
         "types": {"m21": "II", "m22": "I", "m23": "I", "m31": "I",
                   "m32": "I", "m33": "II", "m34": "I", "m41": "II"},
         "classes": [
             {"members": ["m11"]},
             {"members": ["m21", "m22", "m23"], "type": "II",
              "S": [32.0, 34.0, 40.0]},
             {"members": ["m31"], "type": "I", "S": [20.0]},
             {"members": ["m32"], "type": "I", "S": [20.0]},
             {"members": ["m33", "m34"], "type": "II", "S": [18.0, 24.0]},
             {"members": ["m41"], "type": "II", "S": [20.0]}]},
        ())


def _double_well_samples():
    xs = np.linspace(-2.5, 2.5, 2501)
    return make_sampled(xs, (xs ** 2 - 1.0) ** 2)


def double_well():
    """(x^2-1)^2 sampled on [-2.5, 2.5].

    One exponentially small eigenvalue, lambda = (8 sqrt(2) / pi) h e^(-2/h):
    barrier height 1 from either well to the top, curvatures 8 at the wells
    and -4 at the top.
    """
    zeta2 = 8.0 * math.sqrt(2.0) / math.pi
    return ExampleBundle(
        "double-well", "sampled", None, _double_well_samples(),
        {"potential": "(x^2-1)^2", "domain": [-2.5, 2.5], "samples": 2501},
        {"zeta2": zeta2, "S": 1.0,
         "lambda_form": "h * zeta2 * exp(-2/h)"},
        (0.15, 0.10, 0.07))


def chain_sampled():
    """A smooth 1D realization of the chain structure from ex-a.

    Piecewise-quintic interpolation through the critical points with unit
    curvature magnitudes, so the extracted structure reproduces ex-a's data
    and the predictions can be checked against a direct solve.
    """
    xq = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]
    curvs = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]
    levels = [0.5, 2.0, 0.5, 2.0, 0.0, 2.0, 1.0]
    # third and fourth derivatives pinned to zero at every critical point, so
    # quartic fits through sampled values recover the curvatures cleanly; the
    # wide spacing keeps the interpolant's high derivatives small, which is
    # what makes the finite-h corrections modest
    vals = [[v, 0.0, c, 0.0, 0.0] for v, c in zip(levels, curvs)]
    xs_b = [-2.5] + xq + [14.5]
    vals_b = [[4.0, -3.0]] + vals + [[4.0, 3.0]]
    poly = BPoly.from_derivatives(xs_b, vals_b)
    xs = np.linspace(-2.5, 14.5, 8501)
    return make_sampled(xs, poly(xs))


_BUILDERS = {"ex-a": ex_a, "ex-b": ex_b, "ex-c": ex_c,
             "nine-wells": nine_wells, "double-well": double_well}


def example_names():
    return sorted(_BUILDERS)


def build_example(name, n=None, theta=None):
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise InputDataError(
            f"unknown example {name!r}; available: {', '.join(example_names())}")
    if name == "ex-c":
        return builder(4 if n is None else int(n))
    if name == "ex-b":
        return builder(1.0 if theta is None else float(theta))
    if n is not None or theta is not None:
        raise InputDataError(f"example {name!r} takes no parameters")
    return builder()
