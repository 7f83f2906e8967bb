# -*- coding: utf-8 -*-
"""
Property suites checking the discretisation against the identities it is
built on: discrete Maxwell identities, disk oracle, adjoint identity,
Taylor remainder, transport manufactured solution, gradient estimate and
the empirical stability constants.
"""

import logging

from collections import namedtuple

import numpy as np

from dask import compute, delayed

from matmi import derivative, elliptic
from matmi.fields import (Gauge, ScalarField, TensorField, VectorField,
                          l2_inner, l2_norm, lumped_norm, p1_gradient,
                          weak_divergence)
from matmi.forward import ForwardProblem
from matmi.mesh import build_disk_mesh, build_unit_square_mesh
from matmi.transport import TransportProblem, solve_transport

logger = logging.getLogger(__name__)

QUICK = "quick"
FULL = "full"

PropertyResult = namedtuple("PropertyResult", ["name", "passed", "value",
                                               "threshold", "details"])


def _result(name, passed, value, threshold, **details):
    result = PropertyResult(name, bool(passed), float(value),
                            float(threshold), details)
    status = "passed" if result.passed else "FAILED"
    logger.info(f"{name}: {status} (value {value:.4e}, threshold "
                f"{threshold:.4e})")
    return result


def sine_field(mesh, rng, amplitude, base=0.0, modes=3):
    """base + random combination of sin(k pi x) sin(l pi y), k, l <= modes

    Vanishes (up to base) on the boundary of the unit square.
    """
    coeffs = rng.uniform(-1.0, 1.0, (modes, modes)) / modes**2
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    values = np.zeros(mesh.n_vertices)
    for k in range(modes):
        for l in range(modes):
            values += coeffs[k, l] * np.sin((k + 1) * np.pi * x) * \
                np.sin((l + 1) * np.pi * y)
    values *= amplitude / max(np.abs(values).max(), 1e-300)
    return ScalarField(mesh, base + np.where(mesh.interior_mask, values, 0))


########################################################################
############################# Properties ###############################

def check_maxwell_identities(n=8, seed=0):
    """Element curl of E equals 1 and div(E~ x B0) equals 1 inside"""
    mesh = build_unit_square_mesh(n)
    rng = np.random.default_rng(seed)
    sigma = sine_field(mesh, rng, 0.2, base=0.5)
    fp = ForwardProblem(mesh)

    E = fp.compute_E(sigma)
    curl_dev = np.max(np.abs(E.curl() - 1.0))
    div = weak_divergence(fp.E_gauge.cross_b0()).values
    div_dev = np.max(np.abs(div[mesh.interior_mask] - 1.0))
    value = max(curl_dev, div_dev)
    return _result("maxwell_identities", value <= 1e-12, value, 1e-12,
                   curl=curl_dev, divergence=div_dev)


def check_disk_oracle(n_refine=3, value=0.7):
    """Constant sigma on the gauge-centered disk gives E = E~, F = sigma"""
    mesh = build_disk_mesh((0.5, 0.5), 0.5, n_refine)
    fp = ForwardProblem(mesh, rel_tol=1e-12)
    sigma = ScalarField.constant(mesh, value)

    E = fp.compute_E(sigma)
    E_err = (E - fp.E_gauge).l2_norm()
    F = fp.internal_data(sigma, E=E).values
    F_err = np.max(np.abs(F[mesh.interior_mask] - value))
    threshold = max(1e-8, mesh.h)
    err = max(E_err, F_err)
    return _result("disk_oracle", err <= threshold, err, threshold,
                   field_error=E_err, data_error=F_err, h=mesh.h)


def check_adjoint_identity(n=8, trials=10, seed=0):
    """<DF h, g> = <h, DF* g> for g vanishing on the boundary"""
    mesh = build_unit_square_mesh(n)
    rng = np.random.default_rng(seed)
    fp = ForwardProblem(mesh, rel_tol=1e-12)
    sigma = sine_field(mesh, rng, 0.2, base=0.5)
    st = derivative.linearize(fp, sigma)

    lumped, consistent = [], []
    for _ in range(trials):
        h = sine_field(mesh, rng, 1.0)
        g = sine_field(mesh, rng, 1.0)
        lumped.append(derivative.adjoint_mismatch(st, h, g))
        consistent.append(derivative.adjoint_mismatch(st, h, g,
                                                      inner=l2_inner))

    value = max(lumped)
    return _result("adjoint_identity", value <= 1e-6, value, 1e-6,
                   consistent_mass_mismatch=max(consistent),
                   consistent_mass_threshold=5 * mesh.h, trials=trials)


def check_taylor(n=16, seed=0, steps=(1e-1, 3e-2, 1e-2, 3e-3)):
    """Second order Taylor remainder of the forward map"""
    mesh = build_unit_square_mesh(n)
    rng = np.random.default_rng(seed)
    fp = ForwardProblem(mesh, rel_tol=1e-12)
    sigma = sine_field(mesh, rng, 0.2, base=0.5)
    h = sine_field(mesh, rng, 0.1)

    remainders = derivative.taylor_remainders(fp, sigma, h, steps)
    slope = derivative.convergence_order(steps, remainders)
    return _result("taylor_order", 1.8 <= slope <= 2.2, slope, 1.8,
                   remainders=remainders.tolist())


def manufactured_transport_error(n):
    """Relative error of the transport solver for a known solution"""
    mesh = build_unit_square_mesh(n)
    sigma = ScalarField.from_function(
        mesh, lambda x, y: 1 + 0.25 * np.sin(np.pi * x) * np.sin(np.pi * y))
    v = Gauge().field(mesh).cross_b0()
    flux = sigma.at_quadrature()[..., None] * v.at_quadrature()
    g = weak_divergence(VectorField.from_quadrature(mesh, flux))

    result = solve_transport(TransportProblem(v, g, sigma))
    return l2_norm(result - sigma) / l2_norm(sigma)


def check_transport(coarse=16, fine=32, max_error=5e-2, min_factor=1.7):
    """Manufactured solution error and its reduction under refinement"""
    e_coarse = manufactured_transport_error(coarse)
    e_fine = manufactured_transport_error(fine)
    factor = e_coarse / e_fine if e_fine > 0 else np.inf
    return _result("transport_convergence",
                   e_fine < max_error and factor >= min_factor, factor,
                   min_factor, coarse_error=e_coarse, fine_error=e_fine)


def check_gradient_estimate(n=8, trials=20, seed=0, c1=0.1, lam=0.4):
    """||grad u|| <= ||E_in|| / (c1 lam) for admissible coefficients"""
    mesh = build_unit_square_mesh(n)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        sigma = ScalarField(mesh, rng.uniform(c1, 1.0, mesh.n_vertices))
        theta = rng.uniform(0, np.pi, mesh.n_vertices)
        lo = rng.uniform(lam, 1.0, mesh.n_vertices)
        c, s = np.cos(theta), np.sin(theta)
        D = TensorField(mesh, c**2 + lo * s**2, (1 - lo) * c * s,
                        s**2 + lo * c**2)
        E_in = VectorField(mesh, rng.normal(size=(mesh.n_triangles, 3, 2)),
                           "broken")
        system = elliptic.assemble(sigma, D, E_in,
                                   elliptic.CoefficientBounds(c1, 1.0, lam))
        u = elliptic.solve(system, rel_tol=1e-12)
        bound = E_in.l2_norm() / (c1 * lam)
        worst = max(worst, p1_gradient(u).l2_norm() / bound)
    return _result("gradient_estimate", worst <= 1 + 1e-6, worst, 1.0,
                   trials=trials)


def stability_constants(n=8, trials=20, seed=0, amplitude=0.1):
    """Empirical constants of the stability and Lipschitz bounds

    Returns
    -------
    constants : :obj:`dict`
        ``stability`` min ||F1 - F2|| / ||s1 - s2||, ``lipschitz_E``
        max ||E1 - E2|| / ||s1 - s2|| and ``derivative_upper`` max
        ||DF h|| / ||h||
    """
    mesh = build_unit_square_mesh(n)
    rng = np.random.default_rng(seed)
    fp = ForwardProblem(mesh)
    stab, lip, upper = np.inf, 0.0, 0.0
    for _ in range(trials):
        s1 = sine_field(mesh, rng, amplitude, base=0.5)
        s2 = sine_field(mesh, rng, amplitude, base=0.5)
        st1, st2 = fp.solve_state(s1), fp.solve_state(s2)
        F1 = fp.internal_data(s1, E=st1.E)
        F2 = fp.internal_data(s2, E=st2.E)
        dist = l2_norm(s1 - s2)
        if dist == 0:
            continue
        stab = min(stab, l2_norm(F1 - F2) / dist)
        lip = max(lip, (st1.E - st2.E).l2_norm() / dist)

        h = s1 - s2
        dF = derivative.df_apply(derivative.linearize(fp, s1, st1), h)
        upper = max(upper, lumped_norm(dF) / lumped_norm(h))
    return {"stability": stab, "lipschitz_E": lip,
            "derivative_upper": upper}


def check_stability(n=8, trials=20, seeds=(0, 1), spread=0.2):
    """The stability constant is positive and reproducible across seeds"""
    constants = [stability_constants(n, trials, seed) for seed in seeds]
    values = [c["stability"] for c in constants]
    rel_spread = (max(values) - min(values)) / max(values)
    return _result("stability_constant",
                   min(values) > 0 and rel_spread <= spread, min(values), 0.0,
                   constants=constants, spread=rel_spread)


########################################################################
############################### Suites #################################

def suite(level=QUICK):
    """Property checks and their arguments for a verification level"""
    if level not in (QUICK, FULL):
        raise ValueError(f"Unknown verification level '{level}'")

    checks = [(check_maxwell_identities, {"n": 8}),
              (check_disk_oracle, {"n_refine": 3}),
              (check_adjoint_identity, {"n": 8, "trials": 10}),
              (check_taylor, {"n": 16}),
              (check_transport, {"coarse": 8, "fine": 16,
                                 "max_error": 0.1, "min_factor": 1.5}),
              (check_gradient_estimate, {"n": 8, "trials": 20}),
              (check_stability, {"n": 8, "trials": 20})]
    if level == FULL:
        checks = [(check_maxwell_identities, {"n": 32}),
                  (check_disk_oracle, {"n_refine": 5}),
                  (check_adjoint_identity, {"n": 16, "trials": 50}),
                  (check_taylor, {"n": 32}),
                  (check_transport, {"coarse": 32, "fine": 64}),
                  (check_gradient_estimate, {"n": 16, "trials": 100}),
                  (check_stability, {"n": 32, "trials": 100})]
    return checks


def run_suite(level=QUICK, n_workers=1):
    """Run all checks of a level

    Returns
    -------
    results : :obj:`list` of :obj:`PropertyResult`
    """
    tasks = [delayed(func)(**kwargs) for func, kwargs in suite(level)]
    if n_workers > 1:
        results = compute(*tasks, scheduler="processes",
                          num_workers=n_workers)
    else:
        results = compute(*tasks, scheduler="synchronous")
    return list(results)


def report(results, level):
    """JSON-ready report of a suite run"""
    return {"level": level,
            "passed": all(r.passed for r in results),
            "properties": [{"name": r.name, "passed": r.passed,
                            "value": r.value, "threshold": r.threshold,
                            "details": r.details} for r in results]}
