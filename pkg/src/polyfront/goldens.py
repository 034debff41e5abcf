"""Frozen regression values computed once by the validated pipeline.

These quantities have no externally stated value; they were measured at
the default production resolutions, frozen, and are regression-tested
thereafter.  Regenerate deliberately only when the numerics change on
purpose.
"""

# critical coefficient of the unit-mass steady profile, R -> E*(R) at the
# default grid (n = 2800 nodes, dr = R/2800).  The R-dependence visible in
# the 6th digit tracks the dr = R/2800 discretization bias, not physics:
# the true R-dependence is below 1e-30 at these radii.
E_STAR = {
    20.0: 0.07614795138397312,
    24.0: 0.07614836909633596,
    28.0: 0.07614886274859597,
}
E_STAR_RTOL = 1e-4  # matches the dr-refinement sensitivity bound

# relative sup-distance of the final steady profile (R = 28) to the
# best-fit centered Gaussian, and the minimizing sigma.  The steady state
# is a ~7% perturbation of the Ornstein-Uhlenbeck balance (E* is within
# 5% of |psi0^2|_2^2 = 1/(4 pi)), hence the small but nonzero distance.
GAUSS_REL_DIST = 0.0037373713328468544
GAUSS_SIGMA_STAR = 1.0250824628382043
GAUSS_RTOL = 2e-3

# largest Nash ratio observed along the validated 1d spreading run
# (identity kernel, indicator data, t to 1e5); the envelope adds headroom
NASH_MAX_OBSERVED = 0.16786724173502413
NASH_ENVELOPE = 0.20
