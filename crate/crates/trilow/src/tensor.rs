//! Third order symmetric tensors: storage by independent entries, norms,
//! flattening, rotations, rank-one assembly, spectral radius, coherence and
//! the conditioning constant entering the quasi-optimality bound.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::idx::{exps_exact, multiplicity3, zeta};
use crate::Result;

/// A symmetric tensor of order 3 and dimension `n`, stored by its
/// `zeta(n,3)` independent entries in graded-lex order (x1^3 first).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3 {
    n: usize,
    entries: Vec<f64>,
}

impl SymTensor3 {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SymTensor3 {
            n,
            entries: vec![0.0; zeta(n, 3)],
        }
    }

    /// Build from a dense slice over the graded-lex degree-3 exponent order.
    pub fn from_raw(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != zeta(n, 3) {
            return Err(Error::DimensionMismatch {
                expected: zeta(n, 3),
                got: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite tensor entry".into()));
        }
        Ok(SymTensor3 { n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Independent entries in graded-lex order.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Sorted index triples (i <= j <= k, 0-based) aligned with `entries()`.
    pub fn triples(n: usize) -> Vec<[usize; 3]> {
        exps_exact(n, 3)
            .iter()
            .map(|alpha| {
                let mut t = [0usize; 3];
                let mut pos = 0;
                for (i, &a) in alpha.iter().enumerate() {
                    for _ in 0..a {
                        t[pos] = i;
                        pos += 1;
                    }
                }
                t
            })
            .collect()
    }

    fn position(&self, mut i: usize, mut j: usize, mut k: usize) -> Result<usize> {
        if i >= self.n || j >= self.n || k >= self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: i.max(j).max(k) + 1,
            });
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        if j > k {
            std::mem::swap(&mut j, &mut k);
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        // Rank of the exponent of x_i x_j x_k in the graded-lex listing.
        let mut alpha = vec![0u8; self.n];
        alpha[i] += 1;
        alpha[j] += 1;
        alpha[k] += 1;
        Ok(exps_exact(self.n, 3)
            .iter()
            .position(|e| *e == alpha)
            .expect("exponent in listing"))
    }

    /// Entry a_{ijk} with 0-based indices in any order.
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.entries[self.position(i, j, k).expect("index in range")]
    }

    /// Set the entry a_{ijk} (and all its symmetric copies).
    pub fn set(&mut self, i: usize, j: usize, k: usize, val: f64) -> Result<()> {
        let p = self.position(i, j, k)?;
        self.entries[p] = val;
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0)
    }

    pub fn scale(&self, c: f64) -> SymTensor3 {
        SymTensor3 {
            n: self.n,
            entries: self.entries.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &SymTensor3) -> Result<SymTensor3> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(SymTensor3 {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Full n^3 expansion, index (i*n + j)*n + k.
    pub fn expand(&self) -> Vec<f64> {
        let n = self.n;
        let mut full = vec![0.0; n * n * n];
        for (t, &v) in Self::triples(n).iter().zip(&self.entries) {
            let perms = [
                [t[0], t[1], t[2]],
                [t[0], t[2], t[1]],
                [t[1], t[0], t[2]],
                [t[1], t[2], t[0]],
                [t[2], t[0], t[1]],
                [t[2], t[1], t[0]],
            ];
            for p in perms {
                full[(p[0] * n + p[1]) * n + p[2]] = v;
            }
        }
        full
    }

    /// The contraction (A x^2)_i = sum_{j,k} a_{ijk} x_j x_k.
    pub fn apply_x2(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut v = DVector::zeros(n);
        for (t, &a) in Self::triples(n).iter().zip(&self.entries) {
            let (i, j, k) = (t[0], t[1], t[2]);
            if i == j && j == k {
                v[i] += a * x[i] * x[i];
            } else if i == j {
                // entries iik (i=j<k): slot-1 index i occurs twice, k once
                v[i] += 2.0 * a * x[i] * x[k];
                v[k] += a * x[i] * x[i];
            } else if j == k {
                v[i] += a * x[j] * x[j];
                v[j] += 2.0 * a * x[i] * x[j];
            } else {
                v[i] += 2.0 * a * x[j] * x[k];
                v[j] += 2.0 * a * x[i] * x[k];
                v[k] += 2.0 * a * x[i] * x[j];
            }
        }
        v
    }

    /// The cubic form <A, x^{(x)3}>.
    pub fn cubic_form(&self, x: &DVector<f64>) -> f64 {
        Self::triples(self.n)
            .iter()
            .zip(&self.entries)
            .map(|(t, &a)| {
                let mut alpha = vec![0u8; self.n];
                alpha[t[0]] += 1;
                alpha[t[1]] += 1;
                alpha[t[2]] += 1;
                multiplicity3(&alpha) * a * x[t[0]] * x[t[1]] * x[t[2]]
            })
            .sum()
    }
}

/// A weighted unit vector: one rank-one term `weight * x^{(x)3}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    weight: f64,
    vector: DVector<f64>,
}

impl Atom {
    /// Requires a strictly positive weight; the vector is normalized.
    pub fn new(weight: f64, vector: DVector<f64>) -> Result<Self> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidInput(format!(
                "atom weight must be positive and finite, got {weight}"
            )));
        }
        let norm = vector.norm();
        if norm < 1e-14 {
            return Err(Error::InvalidInput("atom vector is zero".into()));
        }
        Ok(Atom {
            weight,
            vector: vector / norm,
        })
    }

    /// Canonicalize a signed rank-one term: at odd order, (-w, x) = (w, -x).
    pub fn from_signed(weight: f64, vector: DVector<f64>) -> Result<Self> {
        if weight < 0.0 {
            Atom::new(-weight, -vector)
        } else {
            Atom::new(weight, vector)
        }
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.vector
    }
}

/// A finite atomic measure on the unit sphere. Duplicate support points
/// (within Euclidean distance 1e-8) are merged by summing weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

const MERGE_TOL: f64 = 1e-8;

impl AtomicMeasure {
    pub fn empty() -> Self {
        AtomicMeasure { atoms: Vec::new() }
    }

    pub fn new(atoms: Vec<Atom>) -> Self {
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for atom in atoms {
            match merged
                .iter_mut()
                .find(|m| (m.vector() - atom.vector()).norm() <= MERGE_TOL)
            {
                Some(m) => m.weight += atom.weight,
                None => merged.push(atom),
            }
        }
        AtomicMeasure { atoms: merged }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Cardinality of the support.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Total mass, the l1 norm of the weights.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Atoms sorted by decreasing weight (deterministic reporting order).
    pub fn sorted_by_weight(&self) -> Vec<Atom> {
        let mut v = self.atoms.clone();
        v.sort_by(|a, b| b.weight.total_cmp(&a.weight));
        v
    }
}

/// The n x n^2 flattening M(A), columns indexed by pairs (i,j) in
/// lexicographic order, so column (i,j) sits at i*n + j.
#[derive(Debug, Clone, PartialEq)]
pub struct Flattening {
    n: usize,
    matrix: DMatrix<f64>,
}

impl Flattening {
    pub fn from_matrix(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != n || matrix.ncols() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n * n,
                got: matrix.nrows() * matrix.ncols(),
            });
        }
        Ok(Flattening { n, matrix })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Recover a symmetric tensor by averaging the slot placements of each
    /// independent entry. Exact when the matrix is a flattening.
    pub fn symmetrized_tensor(&self) -> SymTensor3 {
        let n = self.n;
        let mut t = SymTensor3::zeros(n);
        for (pos, trip) in SymTensor3::triples(n).iter().enumerate() {
            let perms = [
                (trip[0], trip[1], trip[2]),
                (trip[0], trip[2], trip[1]),
                (trip[1], trip[0], trip[2]),
                (trip[1], trip[2], trip[0]),
                (trip[2], trip[0], trip[1]),
                (trip[2], trip[1], trip[0]),
            ];
            let mut acc = 0.0;
            for (k, i, j) in perms {
                acc += self.matrix[(k, i * n + j)];
            }
            t.entries[pos] = acc / 6.0;
        }
        t
    }
}

/// Flatten a tensor to its n x n^2 matrix: m_{k,(i,j)} = a_{e_i+e_j+e_k}.
pub fn flatten(a: &SymTensor3) -> Flattening {
    let n = a.dim();
    let mut m = DMatrix::zeros(n, n * n);
    for (t, &v) in SymTensor3::triples(n).iter().zip(a.entries()) {
        let perms = [
            (t[0], t[1], t[2]),
            (t[0], t[2], t[1]),
            (t[1], t[0], t[2]),
            (t[1], t[2], t[0]),
            (t[2], t[0], t[1]),
            (t[2], t[1], t[0]),
        ];
        for (k, i, j) in perms {
            m[(k, i * n + j)] = v;
        }
    }
    Flattening { n, matrix: m }
}

/// Assemble the tensor sum_i w_i x_i^{(x)3} from an atomic measure.
pub fn assemble(measure: &AtomicMeasure, n: usize) -> Result<SymTensor3> {
    let mut t = SymTensor3::zeros(n);
    for atom in measure.atoms() {
        if atom.vector().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: atom.vector().len(),
            });
        }
    }
    for (pos, trip) in SymTensor3::triples(n).iter().enumerate() {
        let mut acc = 0.0;
        for atom in measure.atoms() {
            let x = atom.vector();
            acc += atom.weight() * x[trip[0]] * x[trip[1]] * x[trip[2]];
        }
        t.entries[pos] = acc;
    }
    Ok(t)
}

/// Hilbert-Schmidt inner product over the full n^3 expansion.
pub fn hs_inner(a: &SymTensor3, b: &SymTensor3) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let exps = exps_exact(a.dim(), 3);
    Ok(a.entries()
        .iter()
        .zip(b.entries())
        .zip(&exps)
        .map(|((&x, &y), alpha)| multiplicity3(alpha) * x * y)
        .sum())
}

pub fn hs_norm(a: &SymTensor3) -> f64 {
    hs_inner(a, a).expect("same tensor").sqrt()
}

/// Orthogonal change of basis (Q,Q,Q) . A.
pub fn rotate(q: &DMatrix<f64>, a: &SymTensor3) -> Result<SymTensor3> {
    let n = a.dim();
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: q.nrows(),
        });
    }
    let dev = (q.transpose() * q - DMatrix::identity(n, n)).amax();
    if dev > 1e-10 {
        return Err(Error::NotOrthogonal(dev));
    }
    let full = a.expand();
    let at = |v: &Vec<f64>, i: usize, j: usize, k: usize| v[(i * n + j) * n + k];
    // Contract one mode at a time.
    let mut t1 = vec![0.0; n * n * n];
    for r in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += q[(r, i)] * at(&full, i, j, k);
                }
                t1[(r * n + j) * n + k] = acc;
            }
        }
    }
    let mut t2 = vec![0.0; n * n * n];
    for r in 0..n {
        for s in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += q[(s, j)] * at(&t1, r, j, k);
                }
                t2[(r * n + s) * n + k] = acc;
            }
        }
    }
    let mut out = SymTensor3::zeros(n);
    for (pos, trip) in SymTensor3::triples(n).iter().enumerate() {
        let (r, s, t) = (trip[0], trip[1], trip[2]);
        let mut acc = 0.0;
        for k in 0..n {
            acc += q[(t, k)] * at(&t2, r, s, k);
        }
        out.entries[pos] = acc;
    }
    Ok(out)
}

/// Multistart configuration for the spectral radius lower bound.
#[derive(Debug, Clone)]
pub struct SpectralOptions {
    pub starts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            starts: 50,
            tol: 1e-12,
            max_iters: 10_000,
            seed: 0,
        }
    }
}

pub(crate) fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    // Box-Muller pairs give an isotropic Gaussian, then normalize.
    loop {
        let mut v = DVector::zeros(n);
        let mut i = 0;
        while i < n {
            let u1: f64 = rng.random::<f64>().max(1e-16);
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            v[i] = r * (2.0 * std::f64::consts::PI * u2).cos();
            if i + 1 < n {
                v[i + 1] = r * (2.0 * std::f64::consts::PI * u2).sin();
            }
            i += 2;
        }
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Certified lower bound on the spectral radius rho(A) = max <A, x^{(x)3}>
/// over the unit sphere, by multistart normalized power ascent. Returns the
/// best value found and a unit vector attaining it.
pub fn spectral_radius(a: &SymTensor3, opts: &SpectralOptions) -> Result<(f64, DVector<f64>)> {
    if a.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best_val = f64::NEG_INFINITY;
    let mut best_x = DVector::zeros(n);
    let consider = |x: &DVector<f64>, val: f64, best_val: &mut f64, best_x: &mut DVector<f64>| {
        let (v, xs) = if val < 0.0 { (-val, -x) } else { (val, x.clone()) };
        if v > *best_val {
            *best_val = v;
            *best_x = xs;
        }
    };
    for _ in 0..opts.starts {
        let mut x = random_unit_vector(&mut rng, n);
        consider(&x, a.cubic_form(&x), &mut best_val, &mut best_x);
        for _ in 0..opts.max_iters {
            let v = a.apply_x2(&x);
            let norm = v.norm();
            if norm < 1e-300 {
                break;
            }
            let xn = v / norm;
            consider(&xn, a.cubic_form(&xn), &mut best_val, &mut best_x);
            let step = (&xn - &x).norm().min((&xn + &x).norm());
            x = xn;
            if step <= opts.tol {
                break;
            }
        }
    }
    Ok((best_val, best_x))
}

/// Max absolute pairwise inner product of a family of unit vectors.
pub fn coherence(vectors: &[DVector<f64>]) -> Result<f64> {
    if vectors.len() < 2 {
        return Err(Error::InvalidInput(
            "coherence needs at least two vectors".into(),
        ));
    }
    let mut mu: f64 = 0.0;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            mu = mu.max(vectors[i].dot(&vectors[j]).abs());
        }
    }
    Ok(mu)
}

/// Conditioning constant tau of a candidate rank decomposition: the max of
/// kappa^6 (kappa the r-th singular value of the factor matrix) and
/// 1 - (r-1) mu^3 (mu the coherence), over whichever conditions hold.
/// Returns 1 for r = 1; errors when neither condition holds.
pub fn tau(measure: &AtomicMeasure, r: usize) -> Result<f64> {
    if measure.is_empty() {
        return Err(Error::InvalidInput("tau of an empty measure".into()));
    }
    for atom in measure.atoms() {
        if (atom.vector().norm() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput("atom vector not unit".into()));
        }
    }
    if r == 1 {
        return Ok(1.0);
    }
    let n = measure.atoms()[0].vector().len();
    let s = measure.len();
    let mut f = DMatrix::zeros(n, s);
    for (j, atom) in measure.atoms().iter().enumerate() {
        f.set_column(j, atom.vector());
    }
    let svals = f.singular_values();
    let kappa = if svals.len() >= r { svals[r - 1] } else { 0.0 };
    let mut best: Option<f64> = None;
    if kappa > 1e-12 {
        best = Some(kappa.powi(6));
    }
    if s >= 2 {
        let vecs: Vec<DVector<f64>> = measure.atoms().iter().map(|a| a.vector().clone()).collect();
        let mu = coherence(&vecs)?;
        if mu < (1.0 / (r as f64 - 1.0)).cbrt() {
            let v = 1.0 - (r as f64 - 1.0) * mu.powi(3);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best.ok_or(Error::IllConditioned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example1() -> SymTensor3 {
        let mut a = SymTensor3::zeros(2);
        a.set(0, 0, 0, 2.0).unwrap();
        a.set(0, 0, 1, 1.0).unwrap();
        a.set(0, 1, 1, 1.0).unwrap();
        a.set(1, 1, 1, 1.0).unwrap();
        a
    }

    #[test]
    fn flatten_zero() {
        let m = flatten(&SymTensor3::zeros(3));
        assert_eq!(m.matrix().nrows(), 3);
        assert_eq!(m.matrix().ncols(), 9);
        assert_eq!(m.matrix().amax(), 0.0);
    }

    #[test]
    fn flatten_example1_matrix() {
        let m = flatten(&example1());
        let expect = DMatrix::from_row_slice(2, 4, &[2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.matrix(), &expect);
    }

    #[test]
    fn flatten_unit_rank_one() {
        let mut a = SymTensor3::zeros(3);
        a.set(0, 0, 0, 1.0).unwrap();
        let m = flatten(&a);
        assert_eq!(m.matrix()[(0, 0)], 1.0);
        assert_eq!(m.matrix().iter().map(|v| v * v).sum::<f64>(), 1.0);
    }

    #[test]
    fn assemble_unit_atom() {
        let mu = AtomicMeasure::new(vec![Atom::new(1.0, DVector::from_vec(vec![1.0, 0.0])).unwrap()]);
        let t = assemble(&mu, 2).unwrap();
        assert_eq!(t.get(0, 0, 0), 1.0);
        assert_eq!(t.get(0, 0, 1), 0.0);
        assert_eq!(t.get(1, 1, 1), 0.0);
    }

    #[test]
    fn assemble_example6_odeco() {
        let mu = AtomicMeasure::new(vec![
            Atom::new(0.5945, DVector::from_vec(vec![0.9827, -0.1854])).unwrap(),
            Atom::new(0.2849, DVector::from_vec(vec![0.1854, 0.9827])).unwrap(),
        ]);
        let t = assemble(&mu, 2).unwrap();
        assert_relative_eq!(t.get(0, 0, 0), 0.5662, epsilon = 1e-3);
        assert_relative_eq!(t.get(0, 0, 1), -0.0971, epsilon = 1e-3);
        assert_relative_eq!(t.get(0, 1, 1), 0.0713, epsilon = 1e-3);
        assert_relative_eq!(t.get(1, 1, 1), 0.2664, epsilon = 1e-3);
    }

    #[test]
    fn assemble_odd_order_cancellation() {
        let x = DVector::from_vec(vec![0.6, 0.8]);
        let mu = AtomicMeasure::new(vec![
            Atom::new(1.3, x.clone()).unwrap(),
            Atom::new(1.3, -x).unwrap(),
        ]);
        let t = assemble(&mu, 2).unwrap();
        assert!(hs_norm(&t) < 1e-14);
    }

    #[test]
    fn hs_norm_example1_sqrt11() {
        // Oracle: expand the full 2x2x2 array and sum squares directly.
        let a = example1();
        let brute: f64 = a.expand().iter().map(|v| v * v).sum();
        assert_relative_eq!(brute, 11.0, epsilon = 1e-12);
        assert_relative_eq!(hs_norm(&a), 11f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn hs_inner_single_entry() {
        let mut a = SymTensor3::zeros(2);
        a.set(0, 0, 0, 1.0).unwrap();
        assert_eq!(hs_inner(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn cubic_form_cauchy_schwarz() {
        let a = example1();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = random_unit_vector(&mut rng, 2);
            assert!(a.cubic_form(&x) <= hs_norm(&a) + 1e-12);
        }
    }

    #[test]
    fn rotate_identity_and_parity() {
        let a = example1();
        let id = DMatrix::identity(2, 2);
        assert_eq!(rotate(&id, &a).unwrap(), a);
        let neg = -DMatrix::identity(2, 2);
        let r = rotate(&neg, &a).unwrap();
        assert_eq!(r, a.scale(-1.0));
    }

    #[test]
    fn rotate_preserves_norm_and_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3;
        let raw: Vec<f64> = (0..zeta(n, 3)).map(|_| rng.random::<f64>() - 0.5).collect();
        let a = SymTensor3::from_raw(n, raw).unwrap();
        let rand_orth = |rng: &mut ChaCha8Rng| {
            let m = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
            m.qr().q()
        };
        let q1 = rand_orth(&mut rng);
        let q2 = rand_orth(&mut rng);
        let r1 = rotate(&q1, &a).unwrap();
        assert_relative_eq!(hs_norm(&r1), hs_norm(&a), epsilon = 1e-10);
        let lhs = rotate(&q2, &r1).unwrap();
        let rhs = rotate(&(&q2 * &q1), &a).unwrap();
        assert!(hs_norm(&lhs.sub(&rhs).unwrap()) < 1e-10);
    }

    #[test]
    fn rotate_rejects_non_orthogonal() {
        let a = example1();
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(rotate(&m, &a), Err(Error::NotOrthogonal(_))));
    }

    #[test]
    fn spectral_radius_rank_one() {
        let mut a = SymTensor3::zeros(3);
        a.set(0, 0, 0, 3.0).unwrap();
        let (rho, x) = spectral_radius(&a, &SpectralOptions::default()).unwrap();
        assert_relative_eq!(rho, 3.0, epsilon = 1e-9);
        assert_relative_eq!(x[0].abs(), 1.0, epsilon = 1e-8);
        assert!(x[0] > 0.0);
    }

    #[test]
    fn spectral_radius_example1() {
        let (rho, x) = spectral_radius(&example1(), &SpectralOptions::default()).unwrap();
        assert_relative_eq!(rho, 3.2560, epsilon = 1e-3);
        assert_relative_eq!(x[0], 0.7981, epsilon = 1e-3);
        assert_relative_eq!(x[1], 0.6025, epsilon = 1e-3);
    }

    #[test]
    fn spectral_radius_zero_tensor_errors() {
        assert!(matches!(
            spectral_radius(&SymTensor3::zeros(2), &SpectralOptions::default()),
            Err(Error::ZeroTensor)
        ));
    }

    #[test]
    fn spectral_radius_scales_linearly() {
        let a = example1();
        let opts = SpectralOptions::default();
        let (rho, _) = spectral_radius(&a, &opts).unwrap();
        let (rho2, _) = spectral_radius(&a.scale(2.0), &opts).unwrap();
        assert_relative_eq!(rho2, 2.0 * rho, epsilon = 1e-8);
    }

    #[test]
    fn coherence_cases() {
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(coherence(&[e1.clone(), e2]).unwrap(), 0.0);
        assert_relative_eq!(coherence(&[e1.clone(), e1.clone()]).unwrap(), 1.0);
        let theta: f64 = 0.9;
        let x = DVector::from_vec(vec![theta.cos(), theta.sin()]);
        assert_relative_eq!(coherence(&[e1.clone(), x]).unwrap(), theta.cos().abs(), epsilon = 1e-14);
        assert!(coherence(&[e1]).is_err());
    }

    #[test]
    fn tau_orthonormal_and_rank_one() {
        let mu = AtomicMeasure::new(vec![
            Atom::new(2.0, DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap(),
            Atom::new(1.0, DVector::from_vec(vec![0.0, 1.0, 0.0])).unwrap(),
        ]);
        assert_relative_eq!(tau(&mu, 2).unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(tau(&mu, 1).unwrap(), 1.0);
    }

    #[test]
    fn tau_correlated_pair_against_gram_eigen_oracle() {
        // Two unit vectors with inner product 0.5: Gram [[1,.5],[.5,1]] has
        // eigenvalues 1.5 and 0.5, so kappa = sqrt(0.5) and kappa^6 = 0.125,
        // while 1 - mu^3 = 0.875. tau is the larger of the two.
        let x1 = DVector::from_vec(vec![1.0, 0.0]);
        let x2 = DVector::from_vec(vec![0.5, 0.75f64.sqrt()]);
        assert_relative_eq!(x1.dot(&x2), 0.5, epsilon = 1e-15);
        let mu = AtomicMeasure::new(vec![
            Atom::new(1.0, x1.clone()).unwrap(),
            Atom::new(1.0, x2.clone()).unwrap(),
        ]);
        let gram = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let eig: DVector<f64> = gram.symmetric_eigen().eigenvalues;
        let kappa = eig.min().sqrt();
        assert_relative_eq!(kappa * kappa, 0.5, epsilon = 1e-12);
        let expect = (kappa.powi(6)).max(1.0 - 0.5f64.powi(3));
        assert_relative_eq!(tau(&mu, 2).unwrap(), expect, epsilon = 1e-12);
        assert_relative_eq!(expect, 0.875, epsilon = 1e-12);
    }

    #[test]
    fn tau_ill_conditioned_duplicate_atoms() {
        // Coherence 1 and singular factor matrix: neither condition holds.
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let atoms = vec![
            Atom::new(1.0, x.clone()).unwrap(),
            Atom::new(1.0, DVector::from_vec(vec![1.0, 1e-7])).unwrap(),
        ];
        let mu = AtomicMeasure { atoms };
        assert!(matches!(tau(&mu, 3), Err(Error::IllConditioned)));
    }

    #[test]
    fn assemble_linear_in_weights() {
        let x = DVector::from_vec(vec![0.6, -0.8]);
        let one = assemble(
            &AtomicMeasure::new(vec![Atom::new(1.0, x.clone()).unwrap()]),
            2,
        )
        .unwrap();
        let lam = assemble(
            &AtomicMeasure::new(vec![Atom::new(2.5, x.clone()).unwrap()]),
            2,
        )
        .unwrap();
        assert!(hs_norm(&lam.sub(&one.scale(2.5)).unwrap()) < 1e-14);
    }

    #[test]
    fn flatten_norm_identity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=4 {
            let raw: Vec<f64> = (0..zeta(n, 3)).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let a = SymTensor3::from_raw(n, raw).unwrap();
            let m = flatten(&a);
            let fro = m.matrix().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_relative_eq!(fro, hs_norm(&a), max_relative = 1e-12);
        }
    }

    #[test]
    fn flatten_of_assembled_measure_is_sum_of_outer_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 3;
        let atoms: Vec<Atom> = (0..2)
            .map(|_| Atom::new(0.5 + rng.random::<f64>(), random_unit_vector(&mut rng, n)).unwrap())
            .collect();
        let mu = AtomicMeasure::new(atoms.clone());
        let m = flatten(&assemble(&mu, n).unwrap());
        let mut expect = DMatrix::zeros(n, n * n);
        for atom in &atoms {
            let x = atom.vector();
            let mut x2 = DVector::zeros(n * n);
            for i in 0..n {
                for j in 0..n {
                    x2[i * n + j] = x[i] * x[j];
                }
            }
            expect += atom.weight() * x * x2.transpose();
        }
        assert!((m.matrix() - expect).amax() < 1e-12);
    }

    #[test]
    fn duplicate_atoms_merge() {
        let x = DVector::from_vec(vec![0.0, 1.0]);
        let mu = AtomicMeasure::new(vec![
            Atom::new(1.0, x.clone()).unwrap(),
            Atom::new(0.5, x.clone()).unwrap(),
        ]);
        assert_eq!(mu.len(), 1);
        assert_relative_eq!(mu.atoms()[0].weight(), 1.5);
    }

    #[test]
    fn atom_sign_canonicalization() {
        let a = Atom::from_signed(-2.0, DVector::from_vec(vec![0.0, 3.0])).unwrap();
        assert_eq!(a.weight(), 2.0);
        assert_eq!(a.vector()[1], -1.0);
        assert!(Atom::new(0.0, DVector::from_vec(vec![1.0])).is_err());
    }

    #[test]
    fn symmetrized_tensor_roundtrip() {
        let a = example1();
        let back = flatten(&a).symmetrized_tensor();
        assert!(hs_norm(&a.sub(&back).unwrap()) < 1e-15);
    }
}
