//! Seeded, thread-count independent Monte Carlo accumulation.
//!
//! Draw `i` is a pure function of `(seed, i)`, draws are grouped into
//! fixed-size chunks that are summed in parallel, and chunk sums are merged
//! in chunk order. The estimate is therefore bit-identical for a given seed
//! whatever the size of the rayon pool.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::scalar::{cabs, Real, C};

const CHUNK: usize = 1024;

/// Componentwise sample mean with standard errors of the real and imaginary
/// parts (stored in the real and imaginary slots of `std_err`).
#[derive(Clone, Debug, PartialEq)]
pub struct MonteCarloEstimate<T: Real> {
    pub mean: DMatrix<C<T>>,
    pub std_err: DMatrix<C<T>>,
    pub samples: usize,
    pub seed: u64,
}

impl<T: Real> MonteCarloEstimate<T> {
    pub fn max_abs_deviation(&self, exact: &DMatrix<C<T>>) -> T {
        self.mean
            .iter()
            .zip(exact.iter())
            .fold(T::zero(), |m, (a, b)| m.max(cabs(*a - *b)))
    }

    /// Largest deviation from `exact` measured in standard errors, taken over
    /// real and imaginary parts separately. A component with zero spread
    /// counts as zero only when it agrees to roundoff.
    pub fn max_z_score(&self, exact: &DMatrix<C<T>>) -> T {
        let floor = T::default_epsilon() * T::lit(64.0);
        let z = |dev: T, se: T, scale: T| {
            if se > T::zero() {
                dev / se
            } else if dev <= floor * (T::one() + scale) {
                T::zero()
            } else {
                T::max_value().unwrap_or_else(T::one)
            }
        };
        self.mean
            .iter()
            .zip(exact.iter())
            .zip(self.std_err.iter())
            .fold(T::zero(), |m, ((a, b), se)| {
                let zr = z((a.re - b.re).abs(), se.re, b.re.abs());
                let zi = z((a.im - b.im).abs(), se.im, b.im.abs());
                m.max(zr).max(zi)
            })
    }

    pub fn within(&self, exact: &DMatrix<C<T>>, z: T) -> bool {
        self.max_z_score(exact) <= z
    }
}

struct Partial<T: Real> {
    sum: DMatrix<C<T>>,
    sq_re: DMatrix<T>,
    sq_im: DMatrix<T>,
}

impl<T: Real> Partial<T> {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            sum: DMatrix::zeros(rows, cols),
            sq_re: DMatrix::zeros(rows, cols),
            sq_im: DMatrix::zeros(rows, cols),
        }
    }

    fn push(&mut self, x: &DMatrix<C<T>>) {
        self.sum += x;
        for ((z, r), i) in x.iter().zip(self.sq_re.iter_mut()).zip(self.sq_im.iter_mut()) {
            *r += z.re * z.re;
            *i += z.im * z.im;
        }
    }

    fn merge(&mut self, other: &Self) {
        self.sum += &other.sum;
        self.sq_re += &other.sq_re;
        self.sq_im += &other.sq_im;
    }
}

/// Averages `draw(i)` for `i in 0..samples`.
pub(crate) fn estimate<T, F>(
    rows: usize,
    cols: usize,
    samples: usize,
    seed: u64,
    draw: F,
) -> MonteCarloEstimate<T>
where
    T: Real,
    F: Fn(u64) -> DMatrix<C<T>> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let partials: Vec<Partial<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut p = Partial::zeros(rows, cols);
            let end = ((c + 1) * CHUNK).min(samples);
            for i in c * CHUNK..end {
                p.push(&draw(i as u64));
            }
            p
        })
        .collect();
    let mut total = Partial::zeros(rows, cols);
    for p in &partials {
        total.merge(p);
    }

    let n = T::from_usize_lossy(samples.max(1));
    let mean = total.sum.map(|z| z / n);
    let se = |sq: T, m: T| {
        if samples < 2 {
            return T::zero();
        }
        let var = (sq - n * m * m) / (n - T::one());
        (var.max(T::zero()) / n).sqrt()
    };
    let std_err = DMatrix::from_fn(rows, cols, |r, c| {
        let m = mean[(r, c)];
        C::new(se(total.sq_re[(r, c)], m.re), se(total.sq_im[(r, c)], m.im))
    });
    MonteCarloEstimate {
        mean,
        std_err,
        samples,
        seed,
    }
}
