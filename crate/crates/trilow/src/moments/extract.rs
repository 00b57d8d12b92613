//! Flatness detection and atom extraction from flat moment sequences.
//!
//! Extraction follows the classical multiplication-matrix method: factor
//! M_k(y) = V V', build per-variable multiplication matrices from the
//! degree <= k-1 rows of V, jointly diagonalize a random combination, read
//! the support points off the diagonalizing basis and recover weights from
//! the low degree moments.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::idx::zeta;
use crate::tensor::{Atom, AtomicMeasure};
use crate::Result;

use super::{numerical_rank, MomentOperators, MomentSequence};

/// Outcome of the k-th flatness test.
#[derive(Debug, Clone)]
pub struct FlatnessReport {
    /// Numerical rank of M_{k-1}(y).
    pub rank_low: usize,
    /// Numerical rank of M_k(y).
    pub rank_high: usize,
    /// Ranks equal, M_k(y) psd within tolerance, L_k(y) ~ 0.
    pub flat: bool,
    /// Smallest eigenvalue of M_k(y).
    pub min_eig: f64,
    /// Max abs entry of L_k(y).
    pub localizing_violation: f64,
    /// Eigenvalues of M_{k-1}(y), ascending.
    pub eigs_low: Vec<f64>,
    /// Eigenvalues of M_k(y), ascending.
    pub eigs_high: Vec<f64>,
}

/// Check the k-th flatness condition at relative rank threshold `tol_rank`.
pub fn flatness(y: &MomentSequence, tol_rank: f64) -> FlatnessReport {
    let ops = MomentOperators::new(y.n, y.k);
    flatness_with(&ops, y, tol_rank)
}

pub(crate) fn flatness_with(
    ops: &MomentOperators,
    y: &MomentSequence,
    tol_rank: f64,
) -> FlatnessReport {
    let m_high = ops.apply_m(&y.y);
    let low_dim = zeta(y.n + 1, y.k - 1);
    let m_low = m_high.view((0, 0), (low_dim, low_dim)).into_owned();

    let mut eigs_high: Vec<f64> = m_high.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigs_high.sort_by(f64::total_cmp);
    let mut eigs_low: Vec<f64> = m_low.symmetric_eigen().eigenvalues.iter().cloned().collect();
    eigs_low.sort_by(f64::total_cmp);

    let abs_high: Vec<f64> = eigs_high.iter().map(|v| v.abs()).collect();
    let abs_low: Vec<f64> = eigs_low.iter().map(|v| v.abs()).collect();
    let rank_high = numerical_rank(&abs_high, tol_rank);
    let rank_low = numerical_rank(&abs_low, tol_rank);

    let scale = eigs_high.last().map(|v| v.abs()).unwrap_or(0.0).max(1.0);
    let min_eig = *eigs_high.first().unwrap_or(&0.0);
    let localizing_violation = ops.apply_l(&y.y).amax();
    // psd and support-feasibility slack scale with the rank threshold so
    // that coarse data (e.g. values printed to 4 decimals) can be tested
    // at a coarse tol_rank without tripping the fixed gates.
    let flat = rank_low == rank_high
        && min_eig >= -tol_rank.max(1e-8) * scale
        && localizing_violation <= (10.0 * tol_rank).max(1e-6) * (1.0 + y.y.amax());

    FlatnessReport {
        rank_low,
        rank_high,
        flat,
        min_eig,
        localizing_violation,
        eigs_low,
        eigs_high,
    }
}

/// Extract the unique atomic measure represented by a flat moment sequence.
///
/// Errors with [`Error::NotFlat`] when the flatness condition fails and
/// [`Error::ExtractionFailed`] when the eigen steps are too ill-conditioned
/// to reproduce the input moments.
pub fn extract_atoms(y: &MomentSequence, tol_rank: f64, seed: u64) -> Result<AtomicMeasure> {
    let ops = MomentOperators::new(y.n, y.k);
    let report = flatness_with(&ops, y, tol_rank);
    if !report.flat {
        return Err(Error::NotFlat {
            low: report.rank_low,
            high: report.rank_high,
        });
    }
    let r = report.rank_high;
    if r == 0 {
        return Ok(AtomicMeasure::empty());
    }
    let n = y.n;
    let m = ops.apply_m(&y.y);
    let eig = m.clone().symmetric_eigen();

    // Rank-revealing factor V (columns scaled by sqrt of the top eigenvalues).
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = DMatrix::zeros(m.nrows(), r);
    for (col, &src) in order.iter().take(r).enumerate() {
        let lam = eig.eigenvalues[src].max(0.0);
        v.set_column(col, &(eig.eigenvectors.column(src) * lam.sqrt()));
    }

    // Degree <= k-1 rows and their shifts by each variable.
    let low_dim = zeta(n + 1, y.k - 1);
    let table = super::IndexTable::new(n, y.k);
    let exps = table.exponents();
    let v_low = v.view((0, 0), (low_dim, r)).into_owned();
    let pinv = v_low
        .clone()
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::ExtractionFailed(format!("pseudo-inverse: {e}")))?;

    let mut mult = Vec::with_capacity(n);
    for i in 0..n {
        let mut shifted = DMatrix::zeros(low_dim, r);
        for row in 0..low_dim {
            let mut alpha = exps[row].clone();
            alpha[i] += 1;
            let src = table.position(&alpha).expect("degree within k");
            shifted.set_row(row, &v.row(src));
        }
        let ni = &pinv * shifted;
        mult.push((&ni + ni.transpose()) * 0.5);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = y.y.amax().max(1.0);
    for _attempt in 0..8 {
        let mut c: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = c.iter().sum();
        c.iter_mut().for_each(|x| *x /= total);
        let mut comb = DMatrix::zeros(r, r);
        for (ci, ni) in c.iter().zip(&mult) {
            comb += ni * *ci;
        }
        let se = comb.symmetric_eigen();

        let mut ok = true;
        let mut points = DMatrix::zeros(n, r);
        for j in 0..r {
            let q = se.eigenvectors.column(j).into_owned();
            let mut x = DVector::zeros(n);
            for i in 0..n {
                x[i] = q.dot(&(&mult[i] * &q));
            }
            let norm = x.norm();
            // support points of a flat sphere sequence sit on the sphere;
            // a gross deviation means the combination was unlucky
            if (norm - 1.0).abs() > 1e-3 {
                ok = false;
                break;
            }
            points.set_column(j, &(&x / norm));
        }
        if !ok {
            continue;
        }
        let mut atoms = Vec::with_capacity(r);
        // Weights from the Vandermonde system on the degree <= 1 moments.
        let mut vand = DMatrix::zeros(n + 1, r);
        for j in 0..r {
            vand[(0, j)] = 1.0;
            for i in 0..n {
                vand[(i + 1, j)] = points[(i, j)];
            }
        }
        let rhs = DVector::from_fn(n + 1, |p, _| y.y[p]);
        let weights = match vand.clone().svd(true, true).solve(&rhs, 1e-12) {
            Ok(w) => w,
            Err(_) => continue,
        };
        if weights.iter().any(|&w| w < -1e-6 * scale) {
            continue;
        }
        for j in 0..r {
            if weights[j] > 1e-12 * scale {
                atoms.push(Atom::new(weights[j], points.column(j).into_owned())?);
            }
        }
        let measure = AtomicMeasure::new(atoms);
        let back = super::moments_from_atoms(&measure, n, y.k)?;
        let err = (&back.y - &y.y).norm();
        if err <= (10.0 * tol_rank).max(1e-6) * (1.0 + y.y.norm()) {
            return Ok(measure);
        }
    }
    Err(Error::ExtractionFailed(
        "joint diagonalization did not reproduce the input moments".into(),
    ))
}
