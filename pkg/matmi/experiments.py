# -*- coding: utf-8 -*-
"""
Synthetic experiments: phantoms, diffusion tensors, noise and error
metrics, the noise sweep and the tensor mismatch experiment.
"""

import logging

import numpy as np
import xarray as xr

from dask import compute, delayed

from matmi.exceptions import InputError
from matmi.fields import (ScalarField, TensorField, check_same_mesh,
                          interpolate_to, l2_norm)
from matmi.forward import ForwardProblem
from matmi.mesh import UNIT_SQUARE, build_unit_square_mesh

logger = logging.getLogger(__name__)

CENTER = (0.5, 0.5)

# tensor perturbations: amplitudes, bump centers and the Gaussian radius
TENSOR_AMPLITUDES = (0.3, 0.3, 0.2)
TENSOR_CENTERS = ((0.3, 0.3), (0.7, 0.7), (0.3, 0.7))
TENSOR_RADIUS = 0.08

# admissible set of the shipped phantoms
DEFAULT_ADMISSIBLE = {"c1": 0.1, "c2": 1.0, "c3": 1.0, "K": 20.0,
                      "L": 50.0, "lam": 0.4, "eta": 0.6}

NOISE_LEVELS = (0.0, 0.06, 0.12, 0.24)


def _require_unit_square(mesh):
    if mesh.domain_kind != UNIT_SQUARE:
        raise ValueError("Phantoms are defined on the unit square")


########################################################################
####################### Phantom ingredients ############################

def smoothstep(s):
    """Quintic smoothstep s^3 (6 s^2 - 15 s + 10) on [0, 1]"""
    s = np.clip(s, 0.0, 1.0)
    return s**3 * (6 * s**2 - 15 * s + 10)


def radial_profile(r, inner=0.12, outer=0.46, high=0.6, low=0.2):
    """high inside r <= inner, low outside r >= outer, smoothstep between"""
    s = (outer - r) / (outer - inner)
    return (high - low) * smoothstep(s) + low


def paper_sigma(mesh):
    """Radial cross-property phantom centered in the unit square

    0.6 for r <= 0.12, 0.2 for r >= 0.46 and
    0.4 s^3 (6 s^2 - 15 s + 10) + 0.2 with s = (0.46 - r) / 0.34 between.
    """
    _require_unit_square(mesh)
    return ScalarField.from_function(
        mesh, lambda x, y: radial_profile(np.hypot(x - CENTER[0],
                                                   y - CENTER[1])))


def bump(x, y, center, radius=TENSOR_RADIUS):
    """Gaussian bump of peak 1 shifted and scaled to vanish at 3 radii"""
    d2 = ((x - center[0])**2 + (y - center[1])**2) / radius**2
    floor = np.exp(-4.5)
    return np.maximum(np.exp(-0.5 * d2) - floor, 0.0) / (1.0 - floor)


def paper_tensor(mesh, amplitudes=TENSOR_AMPLITUDES, centers=TENSOR_CENTERS,
                 lam=0.4):
    """Diffusion tensor: identity plus three local perturbations

    D = I - a1 phi1 e1 e1' - a2 phi2 e2 e2' - a3 phi3 (1, -1)(1, -1)'

    The first two bumps shrink d11 and d22, the third adds the shear d12
    while keeping the eigenvalues below 1.
    """
    _require_unit_square(mesh)
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    a1, a2, a3 = amplitudes
    phi1, phi2, phi3 = (bump(x, y, c) for c in centers)

    D = TensorField(mesh, 1 - a1 * phi1 - a3 * phi3, a3 * phi3,
                    1 - a2 * phi2 - a3 * phi3)
    return D.clip_spectrum(lam)


########################################################################
############################# Phantoms #################################

class Phantom:
    """Synthetic ground truth

    Parameters
    ----------
    name : :obj:`str`
    sigma : :obj:`matmi.fields.ScalarField`
        True cross-property factor
    D : :obj:`matmi.fields.TensorField`
    sigma0 : :obj:`float`
        Background value, sigma on the boundary and initial guess
    admissible : :obj:`dict`
        Parameters of the admissible set (c1, c2, c3, K, L, lam, eta)
    description : :obj:`str`
    """

    def __init__(self, name, sigma, D, sigma0, admissible=None,
                 description=""):
        check_same_mesh(sigma, D)
        self.name = name
        self.sigma = sigma
        self.D = D
        self.sigma0 = float(sigma0)
        self.admissible = dict(DEFAULT_ADMISSIBLE if admissible is None
                               else admissible)
        self.description = description

        lam_min, _ = D.eigenvalue_range()
        self.lam = lam_min
        self.eta = float(D.spectral_distance().max())

    def __repr__(self):
        return "Phantom(%r, lam=%.3g, eta=%.3g)" % (self.name, self.lam,
                                                    self.eta)

    @property
    def mesh(self):
        return self.sigma.mesh

    def background(self):
        return ScalarField.constant(self.mesh, self.sigma0)

    def admissible_set(self):
        from matmi.reconstruct import AdmissibleSet
        return AdmissibleSet(self.background(), **self.admissible)


def _inclusion_phantom(mesh):
    return Phantom("inclusion", paper_sigma(mesh), paper_tensor(mesh), 0.2,
                   description="radial phantom with anisotropic tensor")


def _inclusion_isotropic_phantom(mesh):
    return Phantom("inclusion-isotropic", paper_sigma(mesh),
                   TensorField.identity(mesh), 0.2,
                   description="radial phantom with D = I")


def _smooth_bump_phantom(mesh):
    _require_unit_square(mesh)
    sigma = ScalarField.from_function(
        mesh, lambda x, y: 0.5 + 0.05 * np.sin(np.pi * x)**2 *
        np.sin(np.pi * y)**2)
    return Phantom("smooth-bump", sigma, TensorField.identity(mesh), 0.5,
                   description="small smooth perturbation of 0.5, D = I")


PHANTOMS = {
    "inclusion": _inclusion_phantom,
    "inclusion-isotropic": _inclusion_isotropic_phantom,
    "smooth-bump": _smooth_bump_phantom,
}


def get_phantom(name, mesh):
    """Build a registered phantom on a mesh

    Raises
    ------
    InputError
        For unknown names
    """
    try:
        builder = PHANTOMS[name]
    except KeyError:
        raise InputError(f"Unknown phantom '{name}'. Choose from: "
                         f"{', '.join(sorted(PHANTOMS))}")
    return builder(mesh)


########################################################################
######################## Data and metrics ##############################

def add_noise(g, delta, seed=0):
    """g + delta ||g|| w / ||w|| with w uniform in [-1, 1] per node

    Parameters
    ----------
    g : :obj:`matmi.fields.ScalarField`
    delta : :obj:`float`
        Relative noise level, >= 0
    seed : :obj:`int`

    Returns
    -------
    g_delta : :obj:`matmi.fields.ScalarField`
    """
    if delta < 0:
        raise ValueError(f"Noise level must be >= 0, got {delta}")
    if delta == 0:
        return g

    rng = np.random.default_rng(seed)
    w = ScalarField(g.mesh, rng.uniform(-1.0, 1.0, g.mesh.n_vertices))
    return g + w * (delta * l2_norm(g) / l2_norm(w))


def relative_l2_error(sigma, sigma_true):
    """||sigma - sigma_true|| / ||sigma_true|| over the interior nodes"""
    check_same_mesh(sigma, sigma_true)
    ref = l2_norm(sigma_true, interior_only=True)
    diff = l2_norm(sigma - sigma_true, interior_only=True)
    return diff / ref if ref > 0 else diff


def synthesize_data(phantom_name, n, rel_tol=1e-10, oracle_n=None,
                    diagonal="right"):
    """Internal data of a phantom on an n-cell unit-square mesh

    Parameters
    ----------
    phantom_name : :obj:`str`
    n : :obj:`int`
    rel_tol : :obj:`float`
        Tolerance of the Neumann solve
    oracle_n : :obj:`int`, optional
        Compute the data on an oracle_n-cell mesh and interpolate to n

    Returns
    -------
    phantom : :obj:`Phantom`
        On the n-cell mesh
    g : :obj:`matmi.fields.ScalarField`
    """

    mesh = build_unit_square_mesh(n, diagonal)
    phantom = get_phantom(phantom_name, mesh)

    if oracle_n is None or oracle_n == n:
        fp = ForwardProblem(mesh, phantom.D, rel_tol=rel_tol)
        return phantom, fp.internal_data(phantom.sigma)

    logger.info(f"Synthesising on a {oracle_n}-cell oracle mesh")
    fine = get_phantom(phantom_name, build_unit_square_mesh(oracle_n,
                                                            diagonal))
    fp = ForwardProblem(fine.mesh, fine.D, rel_tol=rel_tol)
    return phantom, interpolate_to(fp.internal_data(fine.sigma), mesh)


########################################################################
########################### Experiments ################################

def _noisy_run(phantom, g, delta, seed, cfg):
    from matmi.reconstruct import reconstruct

    g_delta = add_noise(g, delta, seed)
    fp = ForwardProblem(phantom.mesh, phantom.D)
    sigma, log = reconstruct(fp, g_delta, phantom.admissible_set(),
                             cfg.updated(noise_level=delta),
                             sigma_true=phantom.sigma)
    return {"delta": delta,
            "error": relative_l2_error(sigma, phantom.sigma),
            "residual": float(log.residuals[-1]),
            "iterations": len(log),
            "stop_reason": log.stop_reason}


def noise_sweep(phantom, g, cfg, deltas=NOISE_LEVELS, seed=0, n_workers=1):
    """Reconstruction error against noise level

    Every level uses the same noise seed, so the runs differ only in the
    noise amplitude.

    Parameters
    ----------
    phantom : :obj:`Phantom`
    g : :obj:`matmi.fields.ScalarField`
        Noise-free internal data
    cfg : :obj:`matmi.reconstruct.ReconstructionConfig`
    deltas : iterable of :obj:`float`
    seed : :obj:`int`
    n_workers : :obj:`int`
        Number of processes; the runs are independent

    Returns
    -------
    table : :obj:`xarray.Dataset`
        error, residual and iterations along ``delta``
    """
    deltas = [float(_) for _ in deltas]
    tasks = [delayed(_noisy_run)(phantom, g, d, seed, cfg) for d in deltas]

    if n_workers > 1:
        rows = compute(*tasks, scheduler="processes", num_workers=n_workers)
    else:
        rows = compute(*tasks, scheduler="synchronous")

    return xr.Dataset(
        {"error": ("delta", [r["error"] for r in rows]),
         "residual": ("delta", [r["residual"] for r in rows]),
         "iterations": ("delta", [r["iterations"] for r in rows]),
         "stop_reason": ("delta", [r["stop_reason"] for r in rows])},
        coords={"delta": deltas},
        attrs={"phantom": phantom.name, "algorithm": cfg.algorithm,
               "seed": seed})


def tensor_mismatch(phantom, g, cfg):
    """Reconstruct once with the true tensor and once with D = I

    Returns
    -------
    errors : :obj:`dict`
        ``matched`` and ``identity`` relative errors, and
        ``data_difference``, the relative distance between the internal
        data of the true sigma under the two tensors
    """
    from matmi.reconstruct import reconstruct

    g_identity = ForwardProblem(phantom.mesh).internal_data(phantom.sigma)
    g_matched = ForwardProblem(phantom.mesh,
                               phantom.D).internal_data(phantom.sigma)
    errors = {"data_difference": l2_norm(g_matched - g_identity,
                                         interior_only=True) /
              l2_norm(g_matched, interior_only=True)}
    logger.info(f"Tensor data difference: {errors['data_difference']:.4e}")

    S = phantom.admissible_set()
    for label, D in (("matched", phantom.D),
                     ("identity", TensorField.identity(phantom.mesh))):
        sigma, _ = reconstruct(ForwardProblem(phantom.mesh, D), g, S, cfg,
                               sigma_true=phantom.sigma)
        errors[label] = relative_l2_error(sigma, phantom.sigma)
        logger.info(f"Tensor {label}: error {errors[label]:.4e}")
    return errors
