"""Coefficient fields: periodic backgrounds, localized defects, counterexamples.

A coefficient is a = a_per + atilde with a_per periodic on the unit cell and
atilde a localized (L^r) perturbation.  All evaluators are vectorized over a
leading batch of positions: x has shape (..., d) and matrices come back with
shape (..., d, d).
"""

import numpy as np


def _iso(vals, d):
    """Scalar samples (...,) -> isotropic matrices (..., d, d)."""
    vals = np.asarray(vals, dtype=float)
    return vals[..., None, None] * np.eye(d)


class CoefficientField:
    """Evaluable matrix coefficient with ellipticity/decay metadata.

    Attributes
    ----------
    d : dimension
    a_per, a_tilde : vectorized evaluators (a_tilde may be None)
    mu : declared ellipticity constant (sym eigenvalues in [mu, 1/mu])
    r : declared decay exponent (atilde in L^r)
    alpha : declared Holder exponent, or None for discontinuous fields
    diagnostic_only : True for counterexample fields that solvers must refuse
    defect_radius : radius outside which |atilde| < 1e-6 (np.inf if never)
    radial_profile / radial_dprofile : phi, phi' with atilde = phi(|x|) I,
        available when the defect is radial and the background is aper_const*I
    aper_const : scalar c when a_per = c*I, else None
    """

    def __init__(self, d, label, a_per, a_tilde, mu, r, alpha,
                 diagnostic_only=False, defect_radius=0.0,
                 radial_profile=None, radial_dprofile=None,
                 aper_const=None, params=None):
        self.d = d
        self.label = label
        self.a_per = a_per
        self.a_tilde = a_tilde
        self.mu = mu
        self.r = r
        self.alpha = alpha
        self.diagnostic_only = diagnostic_only
        self.defect_radius = defect_radius
        self.radial_profile = radial_profile
        self.radial_dprofile = radial_dprofile
        self.aper_const = aper_const
        self.params = dict(params or {})

    def __repr__(self):
        return f"CoefficientField({self.label}, d={self.d}, r={self.r})"

    @property
    def has_defect(self):
        return self.a_tilde is not None


def eval_matrix(field, x):
    """a(x) = a_per(x) + atilde(x); total, pure, vectorized."""
    x = np.asarray(x, dtype=float)
    a = field.a_per(x)
    if field.a_tilde is not None:
        a = a + field.a_tilde(x)
    return a


# ---------------------------------------------------------------------------
# built-in families

def _identity(d):
    def a_per(x):
        x = np.asarray(x, dtype=float)
        return _iso(np.ones(x.shape[:-1]), d)
    return CoefficientField(d, "identity", a_per, None, mu=1.0, r=1.0,
                            alpha=1.0, aper_const=1.0)


def _trig(d):
    if d == 1:
        def a_per(x):
            s = 2.0 + np.sin(2 * np.pi * np.asarray(x)[..., 0])
            return _iso(s, 1)
        mu = 1.0 / 3.0
    elif d == 2:
        def a_per(x):
            x = np.asarray(x, dtype=float)
            s = 2.0 + np.sin(2 * np.pi * x[..., 0]) * np.sin(2 * np.pi * x[..., 1])
            return _iso(s, 2)
        mu = 1.0 / 3.0
    else:
        raise ValueError("trig family is 1D/2D only")
    return CoefficientField(d, f"trig-{d}d", a_per, None, mu=mu, r=1.0,
                            alpha=1.0)


def laminate_profile(x1):
    """alpha(x1) in {1, 4} on half-cells, period 1, half-open convention."""
    frac = np.mod(np.asarray(x1, dtype=float), 1.0)
    return np.where(frac < 0.5, 1.0, 4.0)


def _laminate(d):
    def a_per(x):
        x = np.asarray(x, dtype=float)
        return _iso(laminate_profile(x[..., 0]), d)
    return CoefficientField(d, f"laminate-{d}d", a_per, None, mu=0.25, r=1.0,
                            alpha=None)


def _algebraic_defect(d, r, c=0.5, eta=0.01):
    """atilde = c (1+|x|)^(-d/r (1+eta)) I on an identity background."""
    gam = d / r * (1.0 + eta)

    def phi(rho):
        return c * (1.0 + np.asarray(rho, dtype=float)) ** (-gam)

    def dphi(rho):
        return -c * gam * (1.0 + np.asarray(rho, dtype=float)) ** (-gam - 1.0)

    def a_per(x):
        x = np.asarray(x, dtype=float)
        return _iso(np.ones(x.shape[:-1]), d)

    def a_tilde(x):
        x = np.asarray(x, dtype=float)
        return _iso(phi(np.linalg.norm(x, axis=-1)), d)

    radius = (abs(c) / 1e-6) ** (1.0 / gam) - 1.0
    return CoefficientField(
        d, f"algebraic-defect-r{r}", a_per, a_tilde,
        mu=1.0 / (1.0 + abs(c)), r=float(r), alpha=1.0,
        defect_radius=radius, radial_profile=phi, radial_dprofile=dphi,
        aper_const=1.0, params=dict(c=c, eta=eta, gamma=gam))


def _compact_defect(d, c=2.0, rho=2.0):
    """Smooth bump defect of amplitude c supported in |x| < rho."""
    def phi(s):
        s = np.asarray(s, dtype=float)
        t = np.clip(s / rho, 0.0, 1.0)
        out = np.zeros_like(t)
        inside = t < 1.0
        out[inside] = c * np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
        return out

    def dphi(s):
        s = np.asarray(s, dtype=float)
        t = np.clip(s / rho, 0.0, 1.0)
        out = np.zeros_like(t)
        inside = t < 1.0
        ti = t[inside]
        out[inside] = (c * np.exp(1.0 - 1.0 / (1.0 - ti ** 2))
                       * (-2.0 * ti / (1.0 - ti ** 2) ** 2) / rho)
        return out

    def a_per(x):
        x = np.asarray(x, dtype=float)
        return _iso(np.ones(x.shape[:-1]), d)

    def a_tilde(x):
        x = np.asarray(x, dtype=float)
        return _iso(phi(np.linalg.norm(x, axis=-1)), d)

    return CoefficientField(
        d, "compact-defect", a_per, a_tilde,
        mu=1.0 / (1.0 + abs(c)), r=1.0, alpha=1.0,
        defect_radius=rho, radial_profile=phi, radial_dprofile=dphi,
        aper_const=1.0, params=dict(c=c, rho=rho))


def slow_decay_profile(z, r, delta=1.0):
    """(1+|z|)^(-1/r) (1 + log(1+|z|)^(1+delta))^(-1/r)."""
    az = np.abs(np.asarray(z, dtype=float))
    return ((1.0 + az) ** (-1.0 / r)
            * (1.0 + np.log1p(az) ** (1.0 + delta)) ** (-1.0 / r))


def _slow_decay_1d(r, delta=1.0):
    def a_per(x):
        x = np.asarray(x, dtype=float)
        return _iso(np.ones(x.shape[:-1]), 1)

    def a_tilde(x):
        x = np.asarray(x, dtype=float)
        return _iso(slow_decay_profile(x[..., 0], r, delta), 1)

    return CoefficientField(
        1, f"slow-decay-1d-r{r}", a_per, a_tilde,
        mu=0.5, r=float(r), alpha=1.0, defect_radius=np.inf,
        aper_const=1.0, params=dict(delta=delta))


DYADIC_NMAX = 40


def dyadic_indicator(x, nmax=DYADIC_NMAX):
    """1 where x lies in some [2^n, 2^n + 2^n/log(1+n)], n >= 1, else 0.

    n = 0 is excluded: its window width 2^0/log(1) is infinite, so the
    family starts at n = 1.
    """
    x = np.asarray(x, dtype=float)
    hit = np.zeros(x.shape, dtype=bool)
    for n in range(1, nmax + 1):
        left = 2.0 ** n
        width = 2.0 ** n / np.log(1.0 + n)
        hit |= (x >= left) & (x <= left + width)
    return hit.astype(float)


def _dyadic():
    def a_per(x):
        x = np.asarray(x, dtype=float)
        return _iso(np.ones(x.shape[:-1]), 1)

    def a_tilde(x):
        x = np.asarray(x, dtype=float)
        return _iso(dyadic_indicator(x[..., 0]), 1)

    return CoefficientField(
        1, "dyadic", a_per, a_tilde, mu=0.5, r=np.inf, alpha=None,
        diagnostic_only=True, defect_radius=np.inf)


def _triangular_gamma_primitive(x2, nquad=64):
    """Primitive int_0^{x2} gamma(z) dz of the mollified dyadic gamma.

    gamma = chi * gamma0 with gamma0 = (1/2) sum of indicators of
    [2^(2n+1), 2^(2n+2)] and their mirrors; chi is a normalized smooth bump
    on [-1, 1].  The primitive is computed exactly through the closed-form
    primitive of gamma0 and Gauss-Legendre quadrature in the mollifier
    variable.
    """
    x2 = np.asarray(x2, dtype=float)

    def Gamma0(y):
        # primitive of gamma0 from 0, odd in y up to the mirror symmetry
        y = np.asarray(y, dtype=float)
        s = np.sign(y)
        ay = np.abs(y)
        total = np.zeros_like(ay)
        for n in range(0, 30):
            lo, hi = 2.0 ** (2 * n + 1), 2.0 ** (2 * n + 2)
            total += 0.5 * np.clip(ay - lo, 0.0, hi - lo)
        return s * total

    t, wt = np.polynomial.legendre.leggauss(nquad)
    # bump chi(t) = C exp(-1/(1-t^2)) on (-1,1)
    chi = np.exp(-1.0 / (1.0 - t ** 2))
    wt = wt * chi
    wt /= wt.sum()
    vals = Gamma0(x2[..., None] - t) - Gamma0(-t)
    return (vals * wt).sum(axis=-1)


def triangular_gamma(x2, nquad=64):
    """gamma(x2) of the upper-triangular counterexample (mollified blocks)."""
    x2 = np.asarray(x2, dtype=float)
    t, wt = np.polynomial.legendre.leggauss(nquad)
    chi = np.exp(-1.0 / (1.0 - t ** 2))
    wt = wt * chi
    wt /= wt.sum()

    def gamma0(y):
        y = np.asarray(y, dtype=float)
        ay = np.abs(y)
        hit = np.zeros(ay.shape, dtype=bool)
        for n in range(0, 30):
            hit |= (ay >= 2.0 ** (2 * n + 1)) & (ay <= 2.0 ** (2 * n + 2))
        return 0.5 * hit.astype(float)

    vals = gamma0(x2[..., None] - t)
    return (vals * wt).sum(axis=-1)


def _triangular():
    def a_per(x):
        x = np.asarray(x, dtype=float)
        g = triangular_gamma(x[..., 1])
        out = np.zeros(x.shape[:-1] + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        out[..., 0, 1] = g
        return out

    return CoefficientField(
        2, "triangular", a_per, None, mu=0.5, r=np.inf, alpha=1.0,
        diagnostic_only=True)


_FAMILIES = {
    "identity": lambda p: _identity(int(p.get("d", 2))),
    "trig": lambda p: _trig(int(p.get("d", 1))),
    "laminate": lambda p: _laminate(int(p.get("d", 2))),
    "algebraic-defect": lambda p: _algebraic_defect(
        int(p.get("d", 2)), float(p["r"]), float(p.get("c", 0.5)),
        float(p.get("eta", 0.01))),
    "compact-defect": lambda p: _compact_defect(
        int(p.get("d", 2)), float(p.get("c", 2.0)), float(p.get("rho", 2.0))),
    "slow-decay-1d": lambda p: _slow_decay_1d(
        float(p["r"]), float(p.get("delta", 1.0))),
    "dyadic": lambda p: _dyadic(),
    "triangular": lambda p: _triangular(),
}


def construct_field(spec):
    """Build a built-in coefficient family from a spec mapping.

    spec must contain "family" plus that family's parameters, e.g.
    {"family": "algebraic-defect", "d": 2, "r": 4, "c": 0.5}.
    """
    spec = dict(spec)
    name = spec.pop("family", None)
    if name not in _FAMILIES:
        raise ValueError(f"unknown field family: {name!r}")
    if name == "triangular" and abs(float(spec.get("gamma_max", 0.5))) > 1.0:
        raise ValueError("triangular family requires |gamma| <= 1")
    field = _FAMILIES[name](spec)
    return field


# ---------------------------------------------------------------------------
# validation helpers

def verify_ellipticity(field, n_samples=2000, box_halfside=8.0, seed=0,
                       slack=1e-9):
    """Sampled check of mu |xi|^2 <= (a xi, xi) <= |xi|^2 / mu.

    Samples the unit cell and a defect-centered box; returns the measured
    eigenvalue range of the symmetric part and a pass verdict against the
    declared mu.
    """
    rng = np.random.default_rng(seed)
    pts_cell = rng.uniform(0.0, 1.0, size=(n_samples, field.d))
    pts_box = rng.uniform(-box_halfside, box_halfside,
                          size=(n_samples, field.d))
    pts = np.concatenate([pts_cell, pts_box], axis=0)
    a = eval_matrix(field, pts)
    sym = 0.5 * (a + np.swapaxes(a, -1, -2))
    eigs = np.linalg.eigvalsh(sym)
    lo, hi = float(eigs.min()), float(eigs.max())
    ok = (lo >= field.mu * (1.0 - slack)) and (hi <= (1.0 + slack) / field.mu)
    return {"mu_measured": lo, "eig_max": hi, "pass": bool(ok)}


def holder_growth_sample(v, beta, scales, n_pairs=400, base_halfside=1.0,
                         center=None, seed=0):
    """Sampled Holder-type seminorm estimate per separation scale.

    v is a callable taking (..., d) points (a GridField works).  For each
    scale s the estimate is max over sampled pairs |x-y| = s of
    |v(x)-v(y)| / s^beta.
    """
    if not (0 < beta <= 1):
        raise ValueError("beta must lie in (0, 1]")
    scales = [float(s) for s in scales]
    if not scales:
        raise ValueError("empty scale list")
    probe = getattr(v, "grid", None)
    d = probe.d if probe is not None else None
    rng = np.random.default_rng(seed)
    out = []
    for s in scales:
        if d is None:
            # infer dimension from a trial call
            for dd in (1, 2, 3):
                try:
                    v(np.zeros((1, dd)))
                    d = dd
                    break
                except Exception:
                    continue
            if d is None:
                raise ValueError("cannot infer dimension of v")
        x = rng.uniform(-base_halfside, base_halfside, size=(n_pairs, d))
        if center is not None:
            x = x + np.asarray(center, dtype=float)
        u = rng.normal(size=(n_pairs, d))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        y = x + s * u
        dv = np.abs(np.asarray(v(x), dtype=float)
                    - np.asarray(v(y), dtype=float))
        out.append(float(dv.max()) / s ** beta)
    return out


def annulus_lr_mass(field, r, kmax=8, n_quad=200, seed=0):
    """Monte-Carlo L^r mass of atilde over dyadic annuli 2^k <= |x| < 2^(k+1)."""
    if field.a_tilde is None:
        return [0.0] * kmax
    rng = np.random.default_rng(seed)
    masses = []
    for k in range(kmax):
        lo, hi = 2.0 ** k, 2.0 ** (k + 1)
        # rejection sample the annulus inside the bounding box
        pts = rng.uniform(-hi, hi, size=(8 * n_quad, field.d))
        rad = np.linalg.norm(pts, axis=-1)
        pts = pts[(rad >= lo) & (rad < hi)][:n_quad]
        vol_box = (2 * hi) ** field.d
        frac = len(pts) / (8 * n_quad)
        vals = np.linalg.norm(field.a_tilde(pts), ord=2, axis=(-2, -1))
        masses.append(float(np.mean(vals ** r) * vol_box * frac))
    return masses
