"""Shared builders for the test suite."""

import random

from imconnect.rationals import Q
from imconnect.symkernel import Chart, PolyMap, ScalarFn
from imconnect.geometry import ConnectionData, VectorField


def rand_scalar(rng, chart, max_degree=1, coeff_range=3, sparsity=0.5):
    terms = {}
    for _ in range(rng.randint(1, 3)):
        if rng.random() < sparsity:
            continue
        expo = [0] * chart.dim
        for _ in range(rng.randint(0, max_degree)):
            expo[rng.randrange(chart.dim)] += 1
        terms[tuple(expo)] = Q(rng.randint(-coeff_range, coeff_range))
    return ScalarFn(chart, terms)


def rand_connection(rng, chart, max_degree=1, density=0.3):
    dim = chart.dim
    gamma = [
        [
            [
                rand_scalar(rng, chart, max_degree)
                if rng.random() < density
                else ScalarFn.zero(chart)
                for _ in range(dim)
            ]
            for _ in range(dim)
        ]
        for _ in range(dim)
    ]
    return ConnectionData(chart, dim, gamma)


def rand_vector_field(rng, chart, max_degree=2):
    return VectorField(
        chart, tuple(rand_scalar(rng, chart, max_degree, sparsity=0.2) for _ in range(chart.dim))
    )


def const_field(chart, values):
    return VectorField(chart, tuple(ScalarFn.const(chart, v) for v in values))


def coordinate_field(chart, index):
    comps = [ScalarFn.zero(chart)] * chart.dim
    comps[index] = ScalarFn.const(chart, 1)
    return VectorField(chart, tuple(comps))
