"""Independent reference computations used to freeze expected values.

Nothing here touches the package's quadrature rules or operators.
"""

import numpy as np
from scipy.integrate import quad


def conv_example_objects(n_points=400):
    dr = 2.0 / n_points
    r = -1.0 + (np.arange(n_points) + 0.5) * dr
    f = 1.0 + 2.0 * np.exp(-0.5 * (r / 0.15) ** 2)
    df = np.exp(-0.5 * ((r - 0.1) / 0.02) ** 2)
    return r, dr, f, df


def sinc_convolution(bandwidth, r, dr, values):
    """x -> sum_k B sinc(B (x - r_k)) values_k dr, as a scalar function."""
    def fn(x):
        return float(np.sum(bandwidth * np.sinc(bandwidth * (x - r)) * values) * dr)
    return fn


def binned_loss_quad(lf, ldf, edges, epsabs=1e-14, epsrel=1e-12):
    """Binning loss by adaptive quadrature over each bin.

    Returns (quadform_lm, quadform_binned, loss) with
    loss = sum_m int_bin (ldf/lf - c_m)^2 lf, c_m = int_bin ldf / int_bin lf.
    """
    kw = dict(epsabs=epsabs, epsrel=epsrel, limit=200)
    qlm = qb = loss = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        hf = quad(lf, lo, hi, **kw)[0]
        hdf = quad(ldf, lo, hi, **kw)[0]
        c = hdf / hf
        qlm += quad(lambda x: ldf(x) ** 2 / lf(x), lo, hi, **kw)[0]
        qb += hdf ** 2 / hf
        loss += quad(lambda x: (ldf(x) / lf(x) - c) ** 2 * lf(x), lo, hi, **kw)[0]
    return qlm, qb, loss


def conv_example_oracle(bandwidth, n_bins=8):
    r, dr, f, df = conv_example_objects()
    lf = sinc_convolution(bandwidth, r, dr, f)
    ldf = sinc_convolution(bandwidth, r, dr, df)
    edges = np.linspace(-1.0, 1.0, n_bins + 1)
    return binned_loss_quad(lf, ldf, edges)
