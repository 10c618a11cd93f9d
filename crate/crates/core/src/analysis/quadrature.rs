//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite integrals are mapped to `(0, 1)` with `γ = t / (1 - t)`;
//! the 15-point rule never evaluates the endpoints, so integrable endpoint
//! behaviour is fine.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Real, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the odd Kronrod nodes (1, 3, 5) and the centre
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Upper bound on retained sub-intervals.
pub const MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub intervals: usize,
}

#[derive(Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let half = (b - a) * T::lit(0.5);
    let centre = (a + b) * T::lit(0.5);
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * T::lit(x);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair * T::lit(w);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// `∫_a^b f` to `max(abs_tol, rel_tol |I|)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, rel_tol: T, abs_tol: T) -> Result<Quadrature<T>> {
    let first = kronrod(&f, a, b);
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Integration {
                estimate: value.to_f64_lossy(),
                error: error.to_f64_lossy(),
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        let left = kronrod(&f, worst.a, mid);
        let right = kronrod(&f, mid, worst.b);
        value = value - worst.value + left.value + right.value;
        error = error - worst.error + left.error + right.error;
        heap.push(left);
        heap.push(right);
        // refresh the running sums to stop drift from the incremental updates
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    let value = heap.iter().map(|s| s.value).sum();
    Ok(Quadrature { value, error, intervals: heap.len() })
}

/// `∫_0^∞ f(γ) dγ` via `γ = t / (1 - t)`.
pub fn integrate_semi_infinite<T: Real, F: Fn(T) -> T>(f: F, rel_tol: T, abs_tol: T) -> Result<Quadrature<T>> {
    integrate(
        |t: T| {
            let one_minus = T::one() - t;
            let gamma = t / one_minus;
            let v = f(gamma) / (one_minus * one_minus);
            if v.is_finite() { v } else { T::zero() }
        },
        T::zero(),
        T::one(),
        rel_tol,
        abs_tol,
    )
}
