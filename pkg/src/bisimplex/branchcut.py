"""Branch conventions for the multivalued functions used across the package.

Every square root and inverse trigonometric function here uses the principal
branch with the cut on the negative real half-axis and Re sqrt(z) >= 0.
Arguments that land exactly on a cut are pushed off it by an infinitesimal
+i0 (configurable sign), so results are deterministic instead of depending
on floating-point signed zeros.
"""

import numpy as np

# Relative offset used to displace on-cut arguments; small enough to be
# invisible at the 1e-12 tolerances used in tests, large enough to defeat
# signed-zero ambiguity.
_I0 = 0.0


def _nudge(z, i0):
    z = np.asarray(z, dtype=complex)
    on_cut = (z.real < 0.0) & (z.imag == 0.0)
    if np.any(on_cut):
        z = np.where(on_cut, z.real + 1j * np.copysign(0.0, i0), z)
    return z


def sqrt_pp(z, i0=1.0):
    """Principal square root, Re >= 0, negative reals resolved toward i0.

    sqrt_pp(-4) == 2j for the default +i0 prescription.
    """
    z = _nudge(z, i0)
    out = np.sqrt(z)
    # sqrt of the closed upper half-plane already has Re >= 0; enforce the
    # convention exactly for arguments nudged to the lower side too.
    flip = out.real < 0.0
    out = np.where(flip, -out, out)
    if out.ndim == 0:
        return complex(out)
    return out


def area_sqrt(z):
    """Square root convention for face squares, shared by areas and roots.

    Face squares built from real edge vectors are real up to roundoff, and
    the dead imaginary dust sits exactly on the sqrt branch cut when the
    square is negative.  The dust is cleaned first so the branch is chosen
    by the sign of the real part, never by floating-point noise.

    A positive square (spacelike triangle) gives the positive real root.  A
    negative square (timelike triangle) takes the -i branch: this is the one
    orientation convention that makes the rotor action stationary at the
    geometric connection rather than merely equal to it in value.
    """
    z = complex(z)
    if z.imag != 0.0 and abs(z.imag) <= 1e-12 * abs(z):
        z = complex(z.real, 0.0)
    root = sqrt_pp(z)
    if z.real < 0.0 and z.imag == 0.0:
        root = -root
    return root


def arcsin_i0(z, i0=1.0):
    """Principal arcsin; the cut |Re z| > 1, Im z = 0 is approached from i0.

    arcsin_i0(cosh(eta)) == pi/2 + 1j*eta for eta >= 0 under the default
    +i0 prescription.
    """
    z = np.asarray(z, dtype=complex)
    on_cut = (np.abs(z.real) > 1.0) & (z.imag == 0.0)
    if np.any(on_cut):
        z = np.where(on_cut, z.real + 1j * np.copysign(0.0, i0), z)
    out = np.arcsin(z)
    if out.ndim == 0:
        return complex(out)
    return out


def arccosh_pp(z):
    """Principal arccosh; the cut (-inf, 1) is approached from above."""
    z = np.asarray(z, dtype=complex)
    # a real argument below 1 sits exactly on the cut; a negative-zero
    # imaginary part would silently select the lower sheet
    on_cut = (z.real < 1.0) & (z.imag == 0.0)
    if np.any(on_cut):
        z = np.where(on_cut, z.real.astype(complex), z)
    out = np.arccosh(z)
    if out.ndim == 0:
        return complex(out)
    return out
