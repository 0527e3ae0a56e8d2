//! Closed-form kernels: the complementary error function, the absorbed
//! fraction of a sphere in free space, the two intra-step absorption
//! probabilities and the segment/sphere contact test.

#![allow(clippy::excessive_precision)]

use crate::config::{SimulationConfig, Vec3};
use crate::error::{Error, Result};

// Rational approximations of erf/erfc after FreeBSD msun s_erf.c
// (Sun Microsystems, freely distributable). Max error below 1 ulp of
// erfc on |x| <= 6, well under the 1e-12 absolute budget.

const ERX: f64 = 8.45062911510467529297e-01;

// erf on [0, 0.84375]
const PP: [f64; 5] = [
    1.28379167095512558561e-01,
    -3.25042107247001499370e-01,
    -2.84817495755985104766e-02,
    -5.77027029648944159157e-03,
    -2.37630166566501626084e-05,
];
const QQ: [f64; 5] = [
    3.97917223959155352819e-01,
    6.50222499887672944485e-02,
    5.08130628187576562776e-03,
    1.32494738004321644526e-04,
    -3.96022827877536812320e-06,
];

// erf on [0.84375, 1.25]
const PA: [f64; 7] = [
    -2.36211856075265944077e-03,
    4.14856118683748331666e-01,
    -3.72207876035701323847e-01,
    3.18346619901161753674e-01,
    -1.10894694282396677476e-01,
    3.54783043256182359371e-02,
    -2.16637559486879084300e-03,
];
const QA: [f64; 6] = [
    1.06420880400844228286e-01,
    5.40397917702171048937e-01,
    7.18286544141962662868e-02,
    1.26171219808761642112e-01,
    1.36370839120290507362e-02,
    1.19844998467991074170e-02,
];

// erfc on [1.25, 1/0.35]
const RA: [f64; 8] = [
    -9.86494403484714822705e-03,
    -6.93858572707181764372e-01,
    -1.05586262253232909814e+01,
    -6.23753324503260060396e+01,
    -1.62396669462573470355e+02,
    -1.84605092906711035994e+02,
    -8.12874355063065934246e+01,
    -9.81432934416914548592e+00,
];
const SA: [f64; 8] = [
    1.96512716674392571292e+01,
    1.37657754143519042600e+02,
    4.34565877475229228821e+02,
    6.45387271733267880336e+02,
    4.29008140027567833386e+02,
    1.08635005541779435134e+02,
    6.57024977031928170135e+00,
    -6.04244152148580987438e-02,
];

// erfc on [1/0.35, 28]
const RB: [f64; 7] = [
    -9.86494292470009928597e-03,
    -7.99283237680523006574e-01,
    -1.77579549177547519889e+01,
    -1.60636384855821916062e+02,
    -6.37566443368389627722e+02,
    -1.02509513161107724954e+03,
    -4.83519191608651397019e+02,
];
const SB: [f64; 7] = [
    3.03380607434824582924e+01,
    3.25792512996573918826e+02,
    1.53672958608443695994e+03,
    3.19985821950859553908e+03,
    2.55305040643316442583e+03,
    4.74528541206955367215e+02,
    -2.24409524465858183362e+01,
];

/// `c[0] + z*c[1] + z^2*c[2] + ...`
fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * z + k)
}

/// `1 + z*c[0] + z^2*c[1] + ...`
fn horner1(c: &[f64], z: f64) -> f64 {
    1.0 + z * horner(c, z)
}

/// Complementary error function, `1 - erf(x)`.
///
/// Total on finite inputs with result in `[0, 2]`; `NaN` propagates.
/// Absolute error stays below `1e-12` for `|x| <= 6` (in practice it is
/// within a couple of ulps everywhere).
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let negative = x < 0.0;
    let ax = x.abs();

    if ax < 0.84375 {
        if ax < f64::EPSILON / 4.0 {
            return 1.0 - x;
        }
        let z = ax * ax;
        let y = horner(&PP, z) / horner1(&QQ, z);
        // erf(ax) = ax + ax*y
        let erf_ax = if ax < 0.25 {
            ax + ax * y
        } else {
            0.5 + (ax * y + (ax - 0.5))
        };
        return if negative { 1.0 + erf_ax } else { 1.0 - erf_ax };
    }

    if ax < 1.25 {
        let s = ax - 1.0;
        let p = horner(&PA, s) / horner1(&QA, s);
        return if negative { 1.0 + ERX + p } else { 1.0 - ERX - p };
    }

    if ax >= 28.0 || (negative && ax >= 6.0) {
        return if negative { 2.0 } else { 0.0 };
    }

    let s = 1.0 / (ax * ax);
    let correction = if ax < 1.0 / 0.35 {
        horner(&RA, s) / horner1(&SA, s)
    } else {
        horner(&RB, s) / horner1(&SB, s)
    };
    // Split ax so that ax*ax is evaluated without losing low bits.
    let hi = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    let r = (-hi * hi - 0.5625).exp() * ((hi - ax) * (hi + ax) + correction).exp();
    let tail = r / ax;
    if negative {
        2.0 - tail
    } else {
        tail
    }
}

/// Fraction of the molecules released at distance `r_d` from the center of
/// an absorbing sphere of radius `r_r` that have been absorbed by time `t`:
///
/// `F(t) = (r_r / r_d) * erfc((r_d - r_r) / sqrt(4 D t))`.
///
/// `F(0) = 0` exactly and `F(t) -> r_r / r_d` as `t -> inf`.
pub fn analytic_fraction(t: f64, r_r: f64, r_d: f64, diffusion: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (r_r / r_d) * erfc((r_d - r_r) / (4.0 * diffusion * t).sqrt())
}

/// Expected number of molecules newly absorbed during step `k` (numbered
/// from 1), i.e. `N * (F(k dt) - F((k - 1) dt))`.
pub fn analytic_increment(k: usize, config: &SimulationConfig) -> f64 {
    debug_assert!(k >= 1);
    let later = config.analytic_fraction_at(config.time_at(k));
    let earlier = config.analytic_fraction_at(config.time_at(k.saturating_sub(1)));
    config.num_molecules as f64 * (later - earlier).max(0.0)
}

/// Planar-boundary probability that a molecule starting `l_i` from the
/// boundary and ending `l_f` from it touched the boundary in between.
pub fn pr_rmc(l_i: f64, l_f: f64, diffusion: f64, dt: f64) -> f64 {
    (-(l_i * l_f) / (diffusion * dt)).exp()
}

/// Probability that a molecule currently `d_j` from the receiver center is
/// absorbed within the next `dt`:
/// `(r_r / d_j) * erfc((d_j - r_r) / sqrt(4 D dt))`.
pub fn pr_apmc(d_j: f64, r_r: f64, diffusion: f64, dt: f64) -> Result<f64> {
    if d_j < r_r || d_j.is_nan() {
        return Err(Error::InsideReceiver {
            distance: d_j,
            radius: r_r,
        });
    }
    Ok((r_r / d_j) * erfc((d_j - r_r) / (4.0 * diffusion * dt).sqrt()))
}

/// Whether the closed segment `p0 -> p1` comes within `radius` of `center`.
/// An endpoint inside or on the sphere counts as contact.
pub fn segment_sphere_intersects(p0: Vec3, p1: Vec3, center: Vec3, radius: f64) -> bool {
    if p0.distance(center) <= radius || p1.distance(center) <= radius {
        return true;
    }
    let dir = p1 - p0;
    let len2 = dir.norm_squared();
    if len2 == 0.0 {
        return false;
    }
    let s = ((center - p0).dot(dir) / len2).clamp(0.0, 1.0);
    let closest = p0 + dir * s;
    closest.distance(center) <= radius
}
