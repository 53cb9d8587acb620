"""Function laws of the core products, as residual functions shared by tests."""

from ellint import core


def residue_limit(a: complex, bases, eps=(1e-5, 1e-6)) -> complex:
    """Extrapolate lim (1 - z/a) Gamma(z/a) as z -> a from z = a(1 +- e).

    The two one-sided values at each e are joined by a line through e = 0,
    which cancels the odd terms; the two e are then combined by Richardson
    in e^2.  Offsets are the exact 1 - z/a of the rounded z, not nominal e.
    """
    def centred(e):
        pts = []
        for sign in (1, -1):
            u = (a * (1 + sign * e)) / a
            d = 1 - u
            pts.append((d, d * core.elliptic_gamma(u, bases)))
        (d1, g1), (d2, g2) = pts
        return (d1 * g2 - d2 * g1) / (d1 - d2)

    e1, e2 = eps
    h1, h2 = centred(e1), centred(e2)
    r = (e1 / e2) ** 2
    return (r * h2 - h1) / (r - 1)


def gamma_laws(z: complex, bases) -> dict:
    """Relative residuals of the symmetry, reflection and difference equations at z."""
    p, q = bases.p, bases.q
    g = core.elliptic_gamma(z, bases)
    out = {
        "pq_symmetry": abs(core.elliptic_gamma(z, bases.swapped()) - g) / abs(g),
        "reflection": abs(g * core.elliptic_gamma(bases.pq / z, bases) - 1),
        "q_shift": abs(core.elliptic_gamma(q * z, bases) - core.theta(z, p) * g) / abs(core.elliptic_gamma(q * z, bases)),
        "p_shift": abs(core.elliptic_gamma(p * z, bases) - core.theta(z, q) * g) / abs(core.elliptic_gamma(p * z, bases)),
        "theta_reflection": abs(g * core.elliptic_gamma(1 / z, bases) * core.theta(z, p) * core.theta(1 / z, q) - 1),
    }
    return out
