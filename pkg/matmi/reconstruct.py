# -*- coding: utf-8 -*-
"""
Reconstruction drivers for the cross-property factor sigma: projected
Landweber iteration and the transport based quasi-Newton iteration, plus
the admissible set and its projection.
"""

import logging

from collections import namedtuple
from time import perf_counter

import numpy as np
import xarray as xr

from scipy.sparse import diags
from scipy.sparse.linalg import factorized

from matmi import derivative
from matmi.elliptic import assemble_stiffness
from matmi.exceptions import ReconstructionError, SolverError
from matmi.experiments import relative_l2_error
from matmi.fields import (ScalarField, check_same_mesh, l2_norm,
                          lumped_norm, p1_gradient)
from matmi.transport import (TransportProblem, solve_transport,
                             transport_velocity)
from matmi.utils import convert_value

logger = logging.getLogger(__name__)

LANDWEBER = "landweber"
QUASI_NEWTON = "quasi-newton"
ALGORITHMS = (LANDWEBER, QUASI_NEWTON)

L2 = "l2"
H1 = "h1"
METRICS = (L2, H1)


########################################################################
########################## Admissible set ##############################

Membership = namedtuple("Membership", ["boundary", "bounds", "ball",
                                       "gradient", "ratio", "details"])


class AdmissibleSet:
    """Constraint set for sigma = sigma0 + alpha

    Parameters
    ----------
    sigma0 : :obj:`matmi.fields.ScalarField`
        Background factor, equal to sigma on the boundary
    c1, c2 : :obj:`float`
        Pointwise bounds c1 <= sigma <= c2
    c3 : :obj:`float`
        Radius of the L2 ball containing alpha
    K : :obj:`float`
        Bound on |grad sigma|
    L : :obj:`float`
        Bound on ||grad alpha|| / ||alpha||
    lam, eta : :obj:`float`
        Ellipticity of the tensor and its distance to the identity
    """

    def __init__(self, sigma0, c1=0.1, c2=1.0, c3=1.0, K=20.0, L=50.0,
                 lam=0.4, eta=0.6):
        if not 0 < c1 <= c2:
            raise ValueError(f"Need 0 < c1 <= c2, got c1={c1}, c2={c2}")
        if not (c3 > 0 and K > 0 and L > 0):
            raise ValueError("c3, K and L must be positive")
        if not 0 <= eta < 1:
            raise ValueError(f"eta must lie in [0, 1), got {eta}")
        if not 0 < lam <= 1:
            raise ValueError(f"lam must lie in (0, 1], got {lam}")
        if abs(1 - lam) > eta + 1e-12:
            raise ValueError(f"|1 - lam| = {abs(1 - lam):.3g} exceeds "
                             f"eta = {eta}")

        self.sigma0 = sigma0
        self.c1, self.c2, self.c3 = float(c1), float(c2), float(c3)
        self.K, self.L = float(K), float(L)
        self.lam, self.eta = float(lam), float(eta)

    def __repr__(self):
        return ("AdmissibleSet(c1=%r, c2=%r, c3=%r, K=%r, L=%r, lam=%r, "
                "eta=%r)" % (self.c1, self.c2, self.c3, self.K, self.L,
                             self.lam, self.eta))

    def parameters(self):
        return {"c1": self.c1, "c2": self.c2, "c3": self.c3, "K": self.K,
                "L": self.L, "lam": self.lam, "eta": self.eta}

    def project(self, sigma):
        """Approximate projection T onto the set

        Resets the boundary to sigma0, clamps interior values to [c1, c2]
        and pulls the increment back onto the c3 ball. Each step is an exact
        projection in the lumped L2 norm.

        Parameters
        ----------
        sigma : :obj:`matmi.fields.ScalarField`

        Returns
        -------
        projected : :obj:`matmi.fields.ScalarField`
        """
        check_same_mesh(sigma, self.sigma0)
        mesh = sigma.mesh
        s0 = self.sigma0.values

        values = np.where(mesh.interior_mask,
                          np.clip(sigma.values, self.c1, self.c2), s0)

        alpha = values - s0
        norm = np.sqrt(np.sum(mesh.lumped_mass * alpha**2))
        if norm > self.c3 * (1 + 1e-12):
            values = s0 + alpha * (self.c3 / norm)

        return ScalarField(mesh, values)

    def membership(self, sigma, atol=1e-12):
        """Check sigma against every condition of the set

        Returns
        -------
        report : :obj:`Membership`
            One flag per condition and a dict of the measured values
        """
        mesh = sigma.mesh
        alpha = sigma - self.sigma0
        interior = sigma.values[mesh.interior_mask]
        on_bnd = np.abs(alpha.values[mesh.boundary_nodes])

        grad_alpha = p1_gradient(alpha).l2_norm()
        alpha_norm = l2_norm(alpha)
        details = {
            "boundary_deviation": float(on_bnd.max()) if on_bnd.size else 0,
            "min": float(interior.min()) if interior.size else np.nan,
            "max": float(interior.max()) if interior.size else np.nan,
            "increment_norm": lumped_norm(alpha),
            "gradient_max": p1_gradient(sigma).max_norm(),
            "gradient_ratio": (grad_alpha / alpha_norm if alpha_norm > 0
                               else 0.0),
        }

        return Membership(
            boundary=details["boundary_deviation"] <= atol,
            bounds=bool(np.all((interior >= self.c1 - atol) &
                               (interior <= self.c2 + atol))),
            ball=details["increment_norm"] <= self.c3 * (1 + 1e-10),
            gradient=details["gradient_max"] <= self.K,
            ratio=details["gradient_ratio"] <= self.L,
            details=details)


def projected_ok(report):
    """Whether the conditions enforced by the projection hold"""
    return report.boundary and report.bounds and report.ball


########################################################################
######################### Landweber metric #############################

class DomainMetric:
    """Inner product of the space holding the Landweber increments

    Increments vanish on the boundary. ``l2`` uses the lumped mass matrix,
    ``h1`` adds :attr:`weight` times the Laplace stiffness matrix, which
    damps the mesh scale part of the gradient.

    Parameters
    ----------
    mesh : :obj:`matmi.mesh.Mesh`
    kind : :obj:`str`
        ``l2`` or ``h1``
    weight : :obj:`float`
        Weight of the gradient term for ``h1``
    """

    def __init__(self, mesh, kind=L2, weight=0.05):
        if kind not in METRICS:
            raise ValueError(f"Unknown metric '{kind}'")
        if not weight > 0:
            raise ValueError(f"Metric weight must be positive, got {weight}")

        self.mesh = mesh
        self.kind = kind
        self.weight = float(weight)

        gram = diags(mesh.lumped_mass)
        self._solve = None
        if kind == H1:
            gram = gram + self.weight * assemble_stiffness(
                mesh, np.tile([1.0, 0.0, 1.0], (mesh.n_triangles, 1)))
            mask = mesh.interior_mask
            self._solve = factorized(gram.tocsr()[mask][:, mask].tocsc())
        self.gram = gram.tocsr()

    def __repr__(self):
        return "DomainMetric(%r, weight=%r)" % (self.kind, self.weight)

    def inner(self, f, g):
        check_same_mesh(f, g)
        return float(f.values @ (self.gram @ g.values))

    def norm(self, f):
        return float(np.sqrt(max(self.inner(f, f), 0.0)))

    def riesz(self, grad):
        """Gradient in this metric from its lumped L2 representation

        Parameters
        ----------
        grad : :obj:`matmi.fields.ScalarField`
            Nodal field g with <g, h>_lumped = dJ(h)

        Returns
        -------
        field : :obj:`matmi.fields.ScalarField`
            z with <z, h> = dJ(h) for every h vanishing on the boundary
        """
        mask = self.mesh.interior_mask
        values = np.zeros(self.mesh.n_vertices)
        if self._solve is None:
            values[mask] = grad.values[mask]
        else:
            values[mask] = self._solve(self.mesh.lumped_mass[mask] *
                                       grad.values[mask])
        return ScalarField(self.mesh, values)


########################################################################
########################## Configuration ###############################

class ReconstructionConfig:
    """Settings of a reconstruction run

    All settings are keyword arguments; see :attr:`DEFAULTS`.
    """

    DEFAULTS = {
        "algorithm": QUASI_NEWTON,
        "mu": None,
        "step_factor": 1.0,
        "landweber_metric": L2,
        "sobolev_weight": 0.05,
        "accelerate": False,
        "max_iter": 50,
        "tol_residual": 1e-6,
        "tol_update": 1e-10,
        "discrepancy_tau": 1.1,
        "noise_level": 0.0,
        "solver_rel_tol": 1e-8,
        "data_rel_tol": 1e-10,
        "transport_rel_tol": 1e-8,
        "c_eps": 0.5,
        "epsilon": None,
        "consistent_diffusion": True,
        "supg": True,
        "power_iterations": 20,
        "seed": 0,
        "exclude_boundary": True,
        "divergence_factor": 10.0,
        "divergence_window": 5,
    }

    TYPES = {"algorithm": str, "mu": float, "step_factor": float,
             "landweber_metric": str, "sobolev_weight": float,
             "accelerate": bool, "max_iter": int,
             "tol_residual": float, "tol_update": float,
             "discrepancy_tau": float, "noise_level": float,
             "solver_rel_tol": float, "data_rel_tol": float,
             "transport_rel_tol": float, "c_eps": float, "epsilon": float,
             "consistent_diffusion": bool, "supg": bool,
             "power_iterations": int, "seed": int, "exclude_boundary": bool,
             "divergence_factor": float, "divergence_window": int}

    def __init__(self, **kwargs):
        unknown = set(kwargs) - set(self.DEFAULTS)
        if unknown:
            raise ValueError(f"Unknown settings: {', '.join(sorted(unknown))}")

        settings = dict(self.DEFAULTS)
        settings.update(kwargs)
        for key, value in settings.items():
            setattr(self, key, value)

        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"Unknown algorithm '{self.algorithm}'")
        if self.mu is not None and self.mu < 0:
            raise ValueError(f"Step size must be >= 0, got {self.mu}")
        if not self.step_factor > 0:
            raise ValueError(f"step_factor must be positive, got "
                             f"{self.step_factor}")
        if self.landweber_metric not in METRICS:
            raise ValueError(f"Unknown metric '{self.landweber_metric}'")
        if not self.sobolev_weight > 0:
            raise ValueError("sobolev_weight must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.noise_level < 0:
            raise ValueError("noise_level must be >= 0")

    def __repr__(self):
        return "ReconstructionConfig(%s)" % ", ".join(
            f"{k}={v!r}" for k, v in self.to_dict().items())

    @classmethod
    def from_dict(cls, config):
        """Build from string values, e.g. read from a configuration file.
        Unrelated keys are ignored."""
        kwargs = {}
        for key, kind in cls.TYPES.items():
            if key in config:
                kwargs[key] = convert_value(config[key], kind)
        return cls(**kwargs)

    def to_dict(self):
        return {key: getattr(self, key) for key in self.DEFAULTS}

    def updated(self, **kwargs):
        settings = self.to_dict()
        settings.update(kwargs)
        return ReconstructionConfig(**settings)


########################################################################
########################## Iteration log ###############################

IterationRecord = namedtuple("IterationRecord", ["k", "error", "residual",
                                                 "ratio", "wall_time"])


class IterationLog:
    """Per-iteration history of a reconstruction run

    Parameters
    ----------
    algorithm : :obj:`str`
    """

    def __init__(self, algorithm, **attrs):
        self.algorithm = algorithm
        self.records = []
        self.attrs = dict(attrs)
        self.stop_reason = None

    def __repr__(self):
        return "IterationLog(%r, iterations=%r, stop=%r)" % (
            self.algorithm, len(self.records), self.stop_reason)

    def __len__(self):
        return len(self.records)

    def append(self, k, error, residual, ratio, wall_time):
        if self.records and k <= self.records[-1].k:
            raise ValueError("Iteration numbers must increase")
        self.records.append(IterationRecord(int(k), float(error),
                                            float(residual), float(ratio),
                                            float(wall_time)))

    def column(self, name):
        return np.array([getattr(r, name) for r in self.records])

    @property
    def errors(self):
        return self.column("error")

    @property
    def residuals(self):
        return self.column("residual")

    @property
    def ratios(self):
        return self.column("ratio")

    def to_dataset(self):
        """The log as an :obj:`xarray.Dataset` along ``iteration``"""
        attrs = {"algorithm": self.algorithm,
                 "stop_reason": self.stop_reason or ""}
        attrs.update({k: v for k, v in self.attrs.items() if v is not None})
        return xr.Dataset(
            {name: ("iteration", self.column(name))
             for name in ("error", "residual", "ratio", "wall_time")},
            coords={"iteration": self.column("k").astype(int)},
            attrs=attrs)

    @classmethod
    def from_dataset(cls, ds):
        attrs = dict(ds.attrs)
        log = cls(attrs.pop("algorithm", ""), **attrs)
        log.stop_reason = attrs.get("stop_reason") or None
        log.attrs.pop("stop_reason", None)
        for k, e, r, c, w in zip(ds["iteration"].values, ds["error"].values,
                                 ds["residual"].values, ds["ratio"].values,
                                 ds["wall_time"].values):
            log.append(k, e, r, c, w)
        return log


########################################################################
########################### Drivers ####################################

def _masked_norm(f, cfg):
    return l2_norm(f, interior_only=cfg.exclude_boundary)


def estimate_step_size(st, n_iter=20, seed=0, metric=None):
    """Landweber step 1 / ||DF* DF|| from a power iteration over
    increments vanishing on the boundary

    Parameters
    ----------
    st : :obj:`matmi.derivative.LinearizedState`
    n_iter : :obj:`int`
    seed : :obj:`int`
    metric : :obj:`DomainMetric`, optional
        Space of the increments, the lumped L2 metric by default

    Returns
    -------
    mu : :obj:`float`
    norm : :obj:`float`
        The estimated operator norm
    """
    mesh = st.sigma.mesh
    mask = mesh.interior_mask
    rng = np.random.default_rng(seed)
    if metric is None:
        metric = DomainMetric(mesh)

    x = ScalarField(mesh, np.where(mask, rng.uniform(-1, 1, mesh.n_vertices),
                                   0.0))
    x = x * (1.0 / metric.norm(x))
    norm = 0.0
    for _ in range(n_iter):
        y = derivative.df_apply(st, x) * mask
        z = metric.riesz(derivative.df_adjoint(st, y))
        norm = metric.inner(x, z)
        z_norm = metric.norm(z)
        if z_norm == 0:
            break
        x = z * (1.0 / z_norm)

    if norm <= 0:
        raise ReconstructionError(0, "Power iteration found a vanishing "
                                  "derivative")
    logger.info(f"Estimated ||DF* DF|| = {norm:.4e}, step size "
                f"{1 / norm:.4e}")
    return 1.0 / norm, norm


class _Tracker:
    """Shared bookkeeping of both drivers"""

    def __init__(self, log, cfg, g_norm, sigma_true):
        self.log = log
        self.cfg = cfg
        self.g_norm = g_norm
        self.sigma_true = sigma_true
        self.start = perf_counter()
        self.prev_error = None
        self.prev_update = None
        self.warned = False

    def record(self, k, sigma, residual, update=None):
        error = np.nan
        ratio = np.nan
        if self.sigma_true is not None:
            error = relative_l2_error(sigma, self.sigma_true)
            if self.prev_error:
                ratio = error / self.prev_error
            self.prev_error = error
        elif update is not None:
            if self.prev_update:
                ratio = update / self.prev_update
            self.prev_update = update

        self.log.append(k, error, residual, ratio,
                        perf_counter() - self.start)
        logger.info(f"{self.log.algorithm} iteration {k}: residual "
                    f"{residual:.4e}, error {error:.4e}, ratio {ratio:.4f}")

    def check_constraints(self, S, sigma):
        report = S.membership(sigma)
        if not self.warned and not (report.gradient and report.ratio):
            logger.warning(
                f"Iterate leaves the gradient constraints: max |grad| "
                f"{report.details['gradient_max']:.3g} (K = {S.K}), ratio "
                f"{report.details['gradient_ratio']:.3g} (L = {S.L})")
            self.warned = True

    def should_stop(self, residual):
        cfg = self.cfg
        if self.g_norm > 0 and residual <= cfg.tol_residual * self.g_norm:
            return "residual"
        if (cfg.noise_level > 0 and
                residual <= cfg.discrepancy_tau * cfg.noise_level *
                self.g_norm):
            return "discrepancy"
        return None

    def check_divergence(self, k):
        residuals = self.log.residuals
        window = self.cfg.divergence_window
        if len(residuals) > window:
            recent = residuals[-(window + 1):]
            if recent[-1] > self.cfg.divergence_factor * recent.min():
                raise ReconstructionError(
                    k, f"Residual grew from {recent.min():.3e} to "
                    f"{recent[-1]:.3e} within {window} iterations",
                    list(residuals))


def landweber_run(fp, g_data, S, cfg, sigma_true=None, initial=None):
    """Projected Landweber iteration

    sigma_{k+1} = T[sigma_k - mu DF[sigma_k]*(F(sigma_k) - g)]

    with the residual restricted to interior nodes. The adjoint is taken
    in the metric selected by ``cfg.landweber_metric``. Without an explicit
    ``cfg.mu`` the step is ``cfg.step_factor`` over the power method
    estimate of ||DF* DF|| at the first iterate. With ``cfg.accelerate``
    the gradient step is taken from the extrapolated point

    z_k = T[sigma_k + (t_{k-1} - 1) / t_k (sigma_k - sigma_{k-1})]

    with t_k = (1 + sqrt(1 + 4 t_{k-1}^2)) / 2, and residuals are those of
    z_k.

    Parameters
    ----------
    fp : :obj:`matmi.forward.ForwardProblem`
    g_data : :obj:`matmi.fields.ScalarField`
        Measured internal data
    S : :obj:`AdmissibleSet`
    cfg : :obj:`ReconstructionConfig`
    sigma_true : :obj:`matmi.fields.ScalarField`, optional
        If known, errors are tracked against it
    initial : :obj:`matmi.fields.ScalarField`, optional
        Initial guess, sigma0 by default

    Returns
    -------
    sigma : :obj:`matmi.fields.ScalarField`
    log : :obj:`IterationLog`
    """
    check_same_mesh(g_data, S.sigma0)
    mesh = g_data.mesh
    mask = mesh.interior_mask
    fp = fp.with_tolerance(cfg.solver_rel_tol)

    sigma = S.project(S.sigma0 if initial is None else initial)
    metric = DomainMetric(mesh, cfg.landweber_metric, cfg.sobolev_weight)
    log = IterationLog(LANDWEBER, mu=cfg.mu, metric=cfg.landweber_metric,
                       accelerate=int(cfg.accelerate))
    tracker = _Tracker(log, cfg, _masked_norm(g_data, cfg), sigma_true)
    mu = cfg.mu
    u_prev = None
    point = sigma
    t = 1.0

    for k in range(1, cfg.max_iter + 1):
        try:
            state = fp.solve_state(point, x0=u_prev)
            u_prev = state.u
            residual = fp.internal_data(point, E=state.E) - g_data
            res_norm = _masked_norm(residual, cfg)
            tracker.record(k, point, res_norm)
            tracker.check_divergence(k)

            stop = tracker.should_stop(res_norm)
            if stop is not None or k == cfg.max_iter:
                log.stop_reason = stop or "max_iter"
                sigma = point
                break

            st = derivative.linearize(fp, point, state)
            if mu is None:
                mu, _ = estimate_step_size(st, cfg.power_iterations,
                                           cfg.seed, metric)
                mu *= cfg.step_factor
                log.attrs["mu"] = mu

            step = metric.riesz(derivative.df_adjoint(st, residual * mask))
        except SolverError as err:
            if isinstance(err, ReconstructionError):
                raise
            raise ReconstructionError(k, str(err), err.residuals) from err

        new = S.project(point - mu * step)
        tracker.check_constraints(S, new)

        change = lumped_norm(new - sigma)
        if cfg.accelerate:
            t_prev, t = t, 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            point = S.project(new + (new - sigma) * ((t_prev - 1.0) / t))
        else:
            point = new
        sigma = new
        if change <= cfg.tol_update * lumped_norm(sigma):
            log.stop_reason = "stalled"
            break

    logger.info(f"Landweber finished after {len(log)} iterations "
                f"({log.stop_reason})")
    return sigma, log


def quasi_newton_run(fp, g_data, S, cfg, sigma_true=None, initial=None):
    """Transport based quasi-Newton iteration

    Each step computes E_k for the current sigma, solves the transport
    equation div(sigma v_k) = g with v_k = D E_k x B0 and the known boundary
    values, and projects the result onto the admissible set.

    Parameters and return values as :func:`landweber_run`.
    """
    check_same_mesh(g_data, S.sigma0)
    fp = fp.with_tolerance(cfg.solver_rel_tol)

    sigma = S.project(S.sigma0 if initial is None else initial)
    log = IterationLog(QUASI_NEWTON, c_eps=cfg.c_eps, epsilon=cfg.epsilon,
                       supg=int(cfg.supg),
                       consistent_diffusion=int(cfg.consistent_diffusion))
    tracker = _Tracker(log, cfg, _masked_norm(g_data, cfg), sigma_true)
    u_prev = None

    for k in range(1, cfg.max_iter + 1):
        try:
            state = fp.solve_state(sigma, x0=u_prev)
            u_prev = state.u
            residual = fp.internal_data(sigma, E=state.E) - g_data
            res_norm = _masked_norm(residual, cfg)
            update = None if k == 1 else change
            tracker.record(k, sigma, res_norm, update)

            stop = tracker.should_stop(res_norm)
            if stop is not None or k == cfg.max_iter:
                log.stop_reason = stop or "max_iter"
                break

            tp = TransportProblem(
                transport_velocity(fp.D, state.E), g_data, S.sigma0,
                epsilon=cfg.epsilon, c_eps=cfg.c_eps, supg=cfg.supg,
                reference=sigma if cfg.consistent_diffusion else None,
                rel_tol=cfg.transport_rel_tol)
            half = solve_transport(tp)
        except SolverError as err:
            if isinstance(err, ReconstructionError):
                raise
            raise ReconstructionError(k, str(err), err.residuals) from err

        log.attrs["epsilon_used"] = tp.epsilon
        new = S.project(half)
        tracker.check_constraints(S, new)

        change = lumped_norm(new - sigma)
        sigma = new
        if change <= cfg.tol_update * lumped_norm(sigma):
            log.stop_reason = "stalled"
            break

    logger.info(f"Quasi-Newton finished after {len(log)} iterations "
                f"({log.stop_reason})")
    return sigma, log


def reconstruct(fp, g_data, S, cfg, sigma_true=None, initial=None):
    """Run the algorithm selected in :attr:`cfg`"""
    run = landweber_run if cfg.algorithm == LANDWEBER else quasi_newton_run
    return run(fp, g_data, S, cfg, sigma_true=sigma_true, initial=initial)
