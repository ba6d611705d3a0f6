//! Largest eigenpair of a Hermitian operator: thick-restart Lanczos with full
//! reorthogonalization, falling back to power iteration.

use crate::error::{Error, Result};
use crate::kernels::HermitianOperator;
use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest Krylov basis kept in memory.
const MAX_BASIS: usize = 32;
/// Ritz vectors carried across a restart.
const KEEP: usize = 10;
/// Seed of the deterministic starting vector.
const START_SEED: u64 = 0x5eed_1a4c;

/// Scalars the solver works with.
pub trait SolverScalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    fn random<R: Rng>(rng: &mut R) -> Self;
}

impl SolverScalar for f64 {
    fn random<R: Rng>(rng: &mut R) -> Self {
        rng.gen_range(-1.0..1.0)
    }
}

impl SolverScalar for Complex64 {
    fn random<R: Rng>(rng: &mut R) -> Self {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }
}

/// Converged principal eigenpair.
#[derive(Debug, Clone)]
pub struct Eigenpair<T> {
    pub value: f64,
    /// Unit vector whose largest-magnitude entry is real and positive.
    pub vector: Vec<T>,
    /// Operator applications used.
    pub iterations: usize,
    /// ‖Γψ - λψ‖₂ / λ.
    pub residual: f64,
    /// Second Ritz value within tolerance of the first.
    pub degenerate: bool,
}

fn inner<T: SolverScalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + x.conjugate() * *y)
}

fn norm<T: SolverScalar>(a: &[T]) -> f64 {
    a.iter().map(|x| x.modulus_squared()).sum::<f64>().sqrt()
}

fn axpy<T: SolverScalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

fn scale<T: SolverScalar>(s: f64, x: &mut [T]) {
    for v in x {
        *v = v.scale(s);
    }
}

/// Two passes of classical Gram-Schmidt; returns the norm left over.
fn orthogonalize<T: SolverScalar>(w: &mut [T], basis: &[Vec<T>]) -> f64 {
    for _ in 0..2 {
        let coeffs: Vec<T> = basis.iter().map(|v| inner(v, w)).collect();
        for (c, v) in coeffs.into_iter().zip(basis) {
            axpy(-c, v, w);
        }
    }
    norm(w)
}

/// Linear combinations Σ_j vectors[j] y[j] for each column y of `coeffs`.
fn combine<T: SolverScalar>(vectors: &[Vec<T>], coeffs: &DMatrix<T>, columns: &[usize]) -> Vec<Vec<T>> {
    let n = vectors[0].len();
    columns
        .iter()
        .map(|&c| {
            let mut out = vec![T::zero(); n];
            for (j, v) in vectors.iter().enumerate() {
                axpy(coeffs[(j, c)], v, &mut out);
            }
            out
        })
        .collect()
}

/// Rotates the vector so its largest-magnitude entry is real and positive.
pub fn fix_phase<T: SolverScalar>(x: &mut [T]) {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.modulus() > x[best].modulus() {
            best = i;
        }
    }
    let m = x[best].modulus();
    if m > 0.0 {
        let phase = x[best].conjugate().unscale(m);
        for v in x.iter_mut() {
            *v *= phase;
        }
        // Remove roundoff from the pivot.
        x[best] = T::from_real(x[best].real());
    }
}

struct Budget {
    used: usize,
    max: usize,
}

impl Budget {
    fn apply<T: SolverScalar>(&mut self, op: &dyn HermitianOperator<T>, x: &[T], y: &mut [T]) -> bool {
        if self.used >= self.max {
            return false;
        }
        self.used += 1;
        op.apply(x, y);
        true
    }
}

/// Principal eigenpair with ‖Γψ - λψ‖₂ ≤ tol·λ, using at most `max_iter`
/// operator applications.
pub fn principal_eigenpair_op<T: SolverScalar>(
    op: &dyn HermitianOperator<T>,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair<T>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let n = op.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let mut budget = Budget { used: 0, max: max_iter.max(1) };
    let mut best = f64::INFINITY;
    match lanczos(op, tol, &mut budget, &mut best) {
        Ok(pair) => return Ok(pair),
        Err(Error::EigensolverFailure { .. }) => {}
        Err(e) => return Err(e),
    }
    // Whatever budget is left goes to power iteration.
    budget.max = budget.max.max(budget.used) + max_iter.max(1) / 4;
    power_iteration(op, tol, &mut budget, &mut best)
}

fn random_vector<T: SolverScalar>(n: usize, rng: &mut ChaCha8Rng) -> Vec<T> {
    (0..n).map(|_| T::random(rng)).collect()
}

fn lanczos<T: SolverScalar>(
    op: &dyn HermitianOperator<T>,
    tol: f64,
    budget: &mut Budget,
    best: &mut f64,
) -> Result<Eigenpair<T>> {
    let n = op.dim();
    let max_basis = MAX_BASIS.min(n);
    let keep = KEEP.min(max_basis.saturating_sub(2)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);

    let mut v0 = random_vector::<T>(n, &mut rng);
    let nv = norm(&v0);
    scale(1.0 / nv, &mut v0);
    let mut basis: Vec<Vec<T>> = vec![v0];
    let mut images: Vec<Vec<T>> = Vec::new();
    let mut last_ritz = None;

    loop {
        // Apply Γ to the newest basis vectors.
        while images.len() < basis.len() {
            let mut y = vec![T::zero(); n];
            if !budget.apply(op, &basis[images.len()], &mut y) {
                return Err(Error::EigensolverFailure { iterations: budget.used, residual: *best });
            }
            images.push(y);
        }
        let k = basis.len();
        let mut breakdown = false;
        if k < max_basis {
            let mut w = images[k - 1].clone();
            let before = norm(&w);
            let left = orthogonalize(&mut w, &basis);
            if left > 1e-10 * before && left > 0.0 {
                scale(1.0 / left, &mut w);
                basis.push(w);
                continue;
            }
            breakdown = true;
        }

        // Rayleigh-Ritz on the current basis; a repeat without new
        // information cannot improve the residual.
        if last_ritz == Some(budget.used) {
            return Err(Error::EigensolverFailure { iterations: budget.used, residual: *best });
        }
        last_ritz = Some(budget.used);
        let h = DMatrix::from_fn(k, k, |i, j| inner(&basis[i], &images[j]));
        let h = (h.clone() + h.adjoint()).unscale(2.0);
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let theta = eig.eigenvalues[order[0]];
        let ritz = combine(&basis, &eig.eigenvectors, &order[..1]).pop().unwrap();
        let ritz_image = combine(&images, &eig.eigenvectors, &order[..1]).pop().unwrap();
        let mut r = ritz_image.clone();
        axpy(T::from_real(-theta), &ritz, &mut r);
        let denom = theta.abs().max(f64::MIN_POSITIVE);
        let res = norm(&r) / denom;
        *best = best.min(res);

        if res <= tol || norm(&r) == 0.0 {
            // Confirm with a fresh application.
            let mut x = ritz.clone();
            let nx = norm(&x);
            scale(1.0 / nx, &mut x);
            let mut y = vec![T::zero(); n];
            if !budget.apply(op, &x, &mut y) {
                return Err(Error::EigensolverFailure { iterations: budget.used, residual: *best });
            }
            let lambda = inner(&x, &y).real();
            let mut rr = y;
            axpy(T::from_real(-lambda), &x, &mut rr);
            let fresh = norm(&rr) / lambda.abs().max(f64::MIN_POSITIVE);
            *best = best.min(fresh);
            if fresh <= tol || norm(&rr) == 0.0 {
                let second = order.get(1).map(|&i| eig.eigenvalues[i]);
                let degenerate = second.is_some_and(|s| lambda - s < tol * lambda.abs());
                fix_phase(&mut x);
                return Ok(Eigenpair { value: lambda, vector: x, iterations: budget.used, residual: fresh, degenerate });
            }
        }

        // Thick restart with the leading Ritz vectors plus the residual direction.
        let kept = keep.min(k);
        let mut new_basis = combine(&basis, &eig.eigenvectors, &order[..kept]);
        let mut new_images = combine(&images, &eig.eigenvectors, &order[..kept]);
        // Re-normalize against drift from roundoff.
        for (b, im) in new_basis.iter_mut().zip(new_images.iter_mut()) {
            let nb = norm(b);
            scale(1.0 / nb, b);
            scale(1.0 / nb, im);
        }
        let mut next = if breakdown || k == n { random_vector::<T>(n, &mut rng) } else { r };
        let mut left = orthogonalize(&mut next, &new_basis);
        if !(left > 1e-12 * norm(&next).max(1.0)) || left == 0.0 {
            next = random_vector::<T>(n, &mut rng);
            left = orthogonalize(&mut next, &new_basis);
        }
        if kept < n && left > 0.0 {
            scale(1.0 / left, &mut next);
            new_basis.push(next);
        }
        basis = new_basis;
        images = new_images;
    }
}

fn power_iteration<T: SolverScalar>(
    op: &dyn HermitianOperator<T>,
    tol: f64,
    budget: &mut Budget,
    best: &mut f64,
) -> Result<Eigenpair<T>> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED ^ 1);
    let mut x = random_vector::<T>(n, &mut rng);
    let nx = norm(&x);
    scale(1.0 / nx, &mut x);
    let mut y = vec![T::zero(); n];
    loop {
        if !budget.apply(op, &x, &mut y) {
            return Err(Error::EigensolverFailure { iterations: budget.used, residual: *best });
        }
        let lambda = inner(&x, &y).real();
        let mut r = y.clone();
        axpy(T::from_real(-lambda), &x, &mut r);
        let res = norm(&r) / lambda.abs().max(f64::MIN_POSITIVE);
        *best = best.min(res);
        if res <= tol {
            fix_phase(&mut x);
            return Ok(Eigenpair { value: lambda, vector: x, iterations: budget.used, residual: res, degenerate: false });
        }
        let ny = norm(&y);
        if ny == 0.0 {
            return Err(Error::EigensolverFailure { iterations: budget.used, residual: *best });
        }
        std::mem::swap(&mut x, &mut y);
        scale(1.0 / ny, &mut x);
    }
}

/// Power iteration alone, exposed for cross-checks against the Lanczos path.
pub fn power_eigenpair_op<T: SolverScalar>(
    op: &dyn HermitianOperator<T>,
    tol: f64,
    max_iter: usize,
) -> Result<Eigenpair<T>> {
    let mut budget = Budget { used: 0, max: max_iter };
    let mut best = f64::INFINITY;
    power_iteration(op, tol, &mut budget, &mut best)
}
