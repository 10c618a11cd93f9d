//! Complementary error function and Gaussian tail.
//!
//! Rational approximations from FreeBSD's `s_erf.c` (Sun Microsystems,
//! 1993; "Permission to use, copy, modify, and distribute this software is
//! freely granted, provided that this notice is preserved."), evaluated in the
//! generic scalar. Errors of the rational fits are below 2^-57 on every
//! sub-interval, so the `f64` instantiation is accurate to a few ulp.

use crate::Real;

const ERX: f64 = 8.45062911510467529297e-01;

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

/// `c[0] + z c[1] + z² c[2] + ...`
#[inline]
fn poly<T: Real>(z: T, c: &[f64]) -> T {
    c.iter().rev().fold(T::zero(), |acc, &k| acc * z + T::lit(k))
}

/// `1 + z c[0] + z² c[1] + ...`
#[inline]
fn poly1<T: Real>(z: T, c: &[f64]) -> T {
    T::one() + z * poly(z, c)
}

/// `erfc(x) = 1 - erf(x)`.
pub fn erfc<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    if x == T::infinity() {
        return T::zero();
    }
    if x == T::neg_infinity() {
        return T::lit(2.0);
    }
    let negative = x < T::zero();
    let ax = x.abs();

    if ax < T::lit(0.84375) {
        let tail = if ax < T::lit(1.3877787807814457e-17) {
            ax
        } else {
            let z = ax * ax;
            let y = poly(z, &PP) / poly1(z, &QQ);
            if ax < T::lit(0.25) {
                ax + ax * y
            } else {
                T::lit(0.5) + (ax * y + (ax - T::lit(0.5)))
            }
        };
        // erfc(x) = 1 - erf(x), erf odd
        return if negative { T::one() + tail } else { T::one() - tail };
    }

    if ax < T::lit(1.25) {
        let s = ax - T::one();
        let ratio = poly(s, &PA) / poly1(s, &QA);
        let erx = T::lit(ERX);
        return if negative { T::one() + erx + ratio } else { T::one() - erx - ratio };
    }

    if ax >= T::lit(28.0) {
        return if negative { T::lit(2.0) } else { T::zero() };
    }
    if negative && ax > T::lit(6.0) {
        return T::lit(2.0);
    }

    let s = (ax * ax).recip();
    let (r, q) = if ax < T::lit(1.0 / 0.35) {
        (poly(s, &RA), poly1(s, &SA))
    } else {
        (poly(s, &RB), poly1(s, &SB))
    };
    // split x so that -x² is formed without cancellation
    let z = T::lit(ax.to_f64_lossy() as f32 as f64);
    let tail = (-z * z - T::lit(0.5625)).exp() * ((z - ax) * (z + ax) + r / q).exp() / ax;
    if negative {
        T::lit(2.0) - tail
    } else {
        tail
    }
}

/// Standard normal upper tail `Q(x) = P(N(0,1) > x) = erfc(x/√2)/2`.
pub fn q_function<T: Real>(x: T) -> T {
    T::lit(0.5) * erfc(x * T::FRAC_1_SQRT_2())
}
