//! Graded index sets, moment matrices, extended moment matrices, the
//! localizing matrix of 1 - x'x, their adjoints, and moment generation from
//! atomic measures. Atom extraction and flatness live in [`extract`].

mod extract;

pub use extract::{extract_atoms, flatness, FlatnessReport};

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::idx::{exps_upto, nu, zeta};
use crate::tensor::AtomicMeasure;
use crate::Result;

/// Graded index bookkeeping for a fixed dimension `n` and max degree `s`.
///
/// `graded_lex` lists the exponent vectors of `N^n_{<=s}` (degree ascending,
/// lexicographic within a degree); `tensor_index` lists `I^{<=s}`, the
/// redundant tensor index set of length nu(n,s).
#[derive(Debug, Clone)]
pub struct IndexTable {
    n: usize,
    s: usize,
    graded_lex: Vec<Vec<u8>>,
    lookup: HashMap<Vec<u8>, usize>,
    tensor_index: Vec<Vec<u8>>,
}

impl IndexTable {
    pub fn new(n: usize, s: usize) -> Self {
        let graded_lex = exps_upto(n, s);
        let lookup = graded_lex
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        let mut tensor_index: Vec<Vec<u8>> = vec![vec![0u8; n]];
        let mut level: Vec<Vec<u8>> = vec![vec![0u8; n]];
        for _ in 0..s {
            let mut next = Vec::with_capacity(level.len() * n);
            for i in 0..n {
                for e in &level {
                    let mut v = e.clone();
                    v[i] += 1;
                    next.push(v);
                }
            }
            tensor_index.extend(next.iter().cloned());
            level = next;
        }
        IndexTable {
            n,
            s,
            graded_lex,
            lookup,
            tensor_index,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.s
    }

    /// Listing of `N^n_{<=s}`, length zeta(n+1, s).
    pub fn exponents(&self) -> &[Vec<u8>] {
        &self.graded_lex
    }

    /// Listing of `I^{<=s}` with repetitions, length nu(n, s).
    pub fn tensor_index(&self) -> &[Vec<u8>] {
        &self.tensor_index
    }

    pub fn position(&self, alpha: &[u8]) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    pub fn zeta_count(&self) -> usize {
        zeta(self.n + 1, self.s)
    }

    pub fn nu_count(&self) -> usize {
        nu(self.n, self.s)
    }
}

/// A truncated moment vector of degree 2k in graded-lex order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    pub n: usize,
    pub k: usize,
    pub y: DVector<f64>,
}

impl MomentSequence {
    pub fn new(n: usize, k: usize, y: DVector<f64>) -> Result<Self> {
        let expect = zeta(n + 1, 2 * k);
        if y.len() != expect {
            return Err(Error::DimensionMismatch {
                expected: expect,
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite moment entry".into()));
        }
        Ok(MomentSequence { n, k, y })
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        MomentSequence {
            n,
            k,
            y: DVector::zeros(zeta(n + 1, 2 * k)),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

impl Serialize for MomentSequence {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            n: usize,
            k: usize,
            y: &'a [f64],
        }
        Wire {
            n: self.n,
            k: self.k,
            y: self.y.as_slice(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MomentSequence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            n: usize,
            k: usize,
            y: Vec<f64>,
        }
        let w = Wire::deserialize(deserializer)?;
        MomentSequence::new(w.n, w.k, DVector::from_vec(w.y))
            .map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Precomputed index structure for the operators M_k, G_k, P_k, L_k and
/// their adjoints, for a fixed (n, k). Immutable and shareable.
#[derive(Debug, Clone)]
pub struct MomentOperators {
    n: usize,
    k: usize,
    ylen: usize,
    mk_dim: usize,
    lk_dim: usize,
    g_dim: usize,
    m_idx: Vec<usize>,
    g_idx: Vec<usize>,
    p_idx: Vec<usize>,
    l_base: Vec<usize>,
    l_shift: Vec<Vec<usize>>,
}

impl MomentOperators {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(k >= 1, "relaxation order must be at least 1");
        let table = IndexTable::new(n, 2 * k);
        let ylen = table.zeta_count();
        let exps = table.exponents();
        let mk_dim = zeta(n + 1, k);
        let lk_dim = zeta(n + 1, k - 1);
        let g_list = IndexTable::new(n, k).tensor_index().to_vec();
        let g_dim = g_list.len();

        let pos_sum = |a: &[u8], b: &[u8]| -> usize {
            let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            table.position(&s).expect("degree within 2k")
        };

        let mut m_idx = Vec::with_capacity(mk_dim * mk_dim);
        for i in 0..mk_dim {
            for j in 0..mk_dim {
                m_idx.push(pos_sum(&exps[i], &exps[j]));
            }
        }
        let mut g_idx = Vec::with_capacity(g_dim * g_dim);
        for u in &g_list {
            for v in &g_list {
                g_idx.push(pos_sum(u, v));
            }
        }
        let mut p_idx = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    let mut e = vec![0u8; n];
                    e[i] += 1;
                    e[j] += 1;
                    e[l] += 1;
                    p_idx.push(table.position(&e).expect("degree 3 within 2k"));
                }
            }
        }
        let mut l_base = Vec::with_capacity(lk_dim * lk_dim);
        let mut l_shift = Vec::with_capacity(lk_dim * lk_dim);
        for a in 0..lk_dim {
            for b in 0..lk_dim {
                let base: Vec<u8> = exps[a].iter().zip(&exps[b]).map(|(x, y)| x + y).collect();
                l_base.push(table.position(&base).expect("degree within 2k-2"));
                let mut shifts = Vec::with_capacity(n);
                for i in 0..n {
                    let mut e = base.clone();
                    e[i] += 2;
                    shifts.push(table.position(&e).expect("degree within 2k"));
                }
                l_shift.push(shifts);
            }
        }
        MomentOperators {
            n,
            k,
            ylen,
            mk_dim,
            lk_dim,
            g_dim,
            m_idx,
            g_idx,
            p_idx,
            l_base,
            l_shift,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn y_len(&self) -> usize {
        self.ylen
    }

    pub fn moment_dim(&self) -> usize {
        self.mk_dim
    }

    pub fn localizing_dim(&self) -> usize {
        self.lk_dim
    }

    pub fn extended_dim(&self) -> usize {
        self.g_dim
    }

    fn check_y(&self, y: &DVector<f64>) {
        assert_eq!(y.len(), self.ylen, "moment vector length");
    }

    /// M_k(y), entry (alpha, beta) = y_{alpha+beta}.
    pub fn apply_m(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.check_y(y);
        let d = self.mk_dim;
        DMatrix::from_fn(d, d, |i, j| y[self.m_idx[i * d + j]])
    }

    /// Adjoint of M_k: `<adjoint_m(Z), y> = <Z, M_k(y)>`.
    pub fn adjoint_m(&self, z: &DMatrix<f64>) -> DVector<f64> {
        let d = self.mk_dim;
        assert_eq!((z.nrows(), z.ncols()), (d, d), "M_k adjoint shape");
        let mut out = DVector::zeros(self.ylen);
        for i in 0..d {
            for j in 0..d {
                out[self.m_idx[i * d + j]] += z[(i, j)];
            }
        }
        out
    }

    /// Extended moment matrix G_k(y) over the redundant tensor index set.
    pub fn apply_g(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.check_y(y);
        let d = self.g_dim;
        DMatrix::from_fn(d, d, |i, j| y[self.g_idx[i * d + j]])
    }

    /// P_k(y): the (I^1 rows, I^2 columns) block of G_k(y), an n x n^2 matrix.
    pub fn apply_p(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.check_y(y);
        let n = self.n;
        DMatrix::from_fn(n, n * n, |i, c| y[self.p_idx[i * n * n + c]])
    }

    /// Adjoint of P_k.
    pub fn adjoint_p(&self, u: &DMatrix<f64>) -> DVector<f64> {
        let n = self.n;
        assert_eq!((u.nrows(), u.ncols()), (n, n * n), "P_k adjoint shape");
        let mut out = DVector::zeros(self.ylen);
        for i in 0..n {
            for c in 0..n * n {
                out[self.p_idx[i * n * n + c]] += u[(i, c)];
            }
        }
        out
    }

    /// Localizing matrix of g(x) = 1 - x'x:
    /// entry (alpha, beta) = y_{alpha+beta} - sum_i y_{alpha+beta+2e_i}.
    pub fn apply_l(&self, y: &DVector<f64>) -> DMatrix<f64> {
        self.check_y(y);
        let d = self.lk_dim;
        DMatrix::from_fn(d, d, |a, b| {
            let e = a * d + b;
            let mut v = y[self.l_base[e]];
            for &s in &self.l_shift[e] {
                v -= y[s];
            }
            v
        })
    }

    /// Adjoint of L_k.
    pub fn adjoint_l(&self, w: &DMatrix<f64>) -> DVector<f64> {
        let d = self.lk_dim;
        assert_eq!((w.nrows(), w.ncols()), (d, d), "L_k adjoint shape");
        let mut out = DVector::zeros(self.ylen);
        for a in 0..d {
            for b in 0..d {
                let e = a * d + b;
                out[self.l_base[e]] += w[(a, b)];
                for &s in &self.l_shift[e] {
                    out[s] -= w[(a, b)];
                }
            }
        }
        out
    }

    /// M_k^*(E_0): the indicator of y_0 (E_0 selects the constant monomial).
    pub fn adjoint_m_e0(&self) -> DVector<f64> {
        let mut out = DVector::zeros(self.ylen);
        out[0] = 1.0;
        out
    }

    /// The Gram operator H = P*P + M*M + L*L on moment space, used by the
    /// least-squares step of the inner solver. P*P and M*M are diagonal
    /// (the masks are orthogonal 0/1 matrices); L*L is dense.
    pub fn normal_matrix(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.ylen, self.ylen);
        for &p in &self.m_idx {
            h[(p, p)] += 1.0;
        }
        for &p in &self.p_idx {
            h[(p, p)] += 1.0;
        }
        let d = self.lk_dim;
        for e in 0..d * d {
            let base = self.l_base[e];
            let shifts = &self.l_shift[e];
            h[(base, base)] += 1.0;
            for &s in shifts {
                h[(base, s)] -= 1.0;
                h[(s, base)] -= 1.0;
            }
            for &s in shifts {
                for &t in shifts {
                    h[(s, t)] += 1.0;
                }
            }
        }
        h
    }
}

/// Moments y_alpha = sum_i w_i x_i^alpha of an atomic measure, degree <= 2k.
pub fn moments_from_atoms(measure: &AtomicMeasure, n: usize, k: usize) -> Result<MomentSequence> {
    for atom in measure.atoms() {
        if atom.vector().len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: atom.vector().len(),
            });
        }
    }
    let exps = exps_upto(n, 2 * k);
    let mut y = DVector::zeros(exps.len());
    for (pos, alpha) in exps.iter().enumerate() {
        let mut acc = 0.0;
        for atom in measure.atoms() {
            let x = atom.vector();
            let mut m = atom.weight();
            for (i, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    m *= x[i];
                }
            }
            acc += m;
        }
        y[pos] = acc;
    }
    MomentSequence::new(n, k, y)
}

/// Convenience wrappers constructing the operator tables on the fly.
pub fn moment_matrix(y: &MomentSequence) -> DMatrix<f64> {
    MomentOperators::new(y.n, y.k).apply_m(&y.y)
}

pub fn extended_moment_matrix(y: &MomentSequence) -> DMatrix<f64> {
    MomentOperators::new(y.n, y.k).apply_g(&y.y)
}

pub fn block_p(y: &MomentSequence) -> DMatrix<f64> {
    MomentOperators::new(y.n, y.k).apply_p(&y.y)
}

pub fn localizing_matrix(y: &MomentSequence) -> DMatrix<f64> {
    MomentOperators::new(y.n, y.k).apply_l(&y.y)
}

/// Numerical rank: singular values above tol_rank * max(sigma_1, 1).
pub(crate) fn numerical_rank(svals: &[f64], tol_rank: f64) -> usize {
    let smax = svals.iter().cloned().fold(0.0f64, f64::max);
    let thresh = tol_rank * smax.max(1.0);
    svals.iter().filter(|&&s| s > thresh).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{assemble, flatten, random_unit_vector, Atom};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// The printed 15-entry moment vector of the worked n=2, r=2 example.
    pub(crate) fn example4_y() -> MomentSequence {
        MomentSequence::new(
            2,
            2,
            DVector::from_vec(vec![
                2.4345, -0.0000, 1.7678, 1.0134, -0.3730, 1.4211, 0.4771, 0.5603, -0.4771,
                1.2076, 0.6465, 0.1085, 0.3669, -0.4815, 1.0542,
            ]),
        )
        .unwrap()
    }

    fn dirac(_n: usize, x: DVector<f64>) -> AtomicMeasure {
        AtomicMeasure::new(vec![Atom::new(1.0, x).unwrap()])
    }

    #[test]
    fn index_table_counts() {
        let t = IndexTable::new(3, 2);
        assert_eq!(t.exponents().len(), zeta(4, 2));
        assert_eq!(t.tensor_index().len(), nu(3, 2));
        // distinct elements of I^s number zeta(n, s)
        let t2 = IndexTable::new(3, 4);
        let mut distinct: Vec<_> = t2
            .tensor_index()
            .iter()
            .filter(|e| e.iter().map(|&a| a as usize).sum::<usize>() == 4)
            .cloned()
            .collect();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), zeta(3, 4));
    }

    #[test]
    fn moment_matrix_of_unit_dirac_is_rank_one() {
        let y = moments_from_atoms(&dirac(2, DVector::from_vec(vec![1.0, 0.0])), 2, 2).unwrap();
        let m = moment_matrix(&y);
        // v = monomial vector of e1: (1, x1, x2, x1^2, x1 x2, x2^2) at (1,0)
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
        assert!((m.clone() - &v * v.transpose()).amax() < 1e-14);
        let eig = m.symmetric_eigen().eigenvalues;
        let svals: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        assert_eq!(numerical_rank(&svals, 1e-6), 1);
    }

    #[test]
    fn moment_matrix_zero() {
        let y = MomentSequence::zeros(3, 2);
        assert_eq!(moment_matrix(&y).amax(), 0.0);
    }

    #[test]
    fn example4_moment_matrix_eigenvalues() {
        let m = moment_matrix(&example4_y());
        let mut eig: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        // four near-zero eigenvalues, then 1.7691 and 5.1674
        for &e in &eig[..4] {
            assert!(e.abs() < 1e-3, "eig {e}");
        }
        assert_relative_eq!(eig[4], 1.7691, epsilon = 1e-3);
        assert_relative_eq!(eig[5], 5.1674, epsilon = 1e-3);
    }

    #[test]
    fn example4_block_p_matches_reported_entries() {
        let p = block_p(&example4_y());
        // b111, b112, b122, b222 appear at (row, col) = (0,(0,0)), (0,(0,1)), (0,(1,1)), (1,(1,1))
        assert_relative_eq!(p[(0, 0)], 0.4771, epsilon = 1e-12);
        assert_relative_eq!(p[(0, 1)], 0.5603, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 0)], 0.5603, epsilon = 1e-12);
        assert_relative_eq!(p[(0, 3)], -0.4771, epsilon = 1e-12);
        assert_relative_eq!(p[(1, 3)], 1.2076, epsilon = 1e-12);
    }

    #[test]
    fn block_p_equals_flattened_assembly() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 3;
        let atoms: Vec<Atom> = (0..3)
            .map(|_| Atom::new(0.2 + rng.random::<f64>(), random_unit_vector(&mut rng, n)).unwrap())
            .collect();
        let mu = AtomicMeasure::new(atoms);
        let y = moments_from_atoms(&mu, n, 2).unwrap();
        let p = block_p(&y);
        let m = flatten(&assemble(&mu, n).unwrap());
        assert!((p - m.matrix()).amax() < 1e-12);
    }

    #[test]
    fn localizing_matrix_vanishes_on_sphere_measures() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..=4 {
            let atoms: Vec<Atom> = (0..2)
                .map(|_| Atom::new(rng.random::<f64>() + 0.1, random_unit_vector(&mut rng, n)).unwrap())
                .collect();
            let y = moments_from_atoms(&AtomicMeasure::new(atoms), n, 2).unwrap();
            assert!(localizing_matrix(&y).amax() < 1e-12);
        }
    }

    #[test]
    fn localizing_matrix_off_sphere_atom() {
        // Point mass at 2 e1: y_alpha = 2^{alpha_1} on coordinate 1.
        // L entry (0,0) = y_0 - sum_i y_{2 e_i} = 1 - 4 = -3.
        let mu = AtomicMeasure::new(vec![Atom::new(1.0, DVector::from_vec(vec![1.0, 0.0])).unwrap()]);
        let mut y = moments_from_atoms(&mu, 2, 2).unwrap();
        // rescale moments to those of delta_{2 e1}: y_alpha = 2^{|alpha| on coord 1}
        let exps = exps_upto(2, 4);
        for (pos, alpha) in exps.iter().enumerate() {
            if y.y[pos] != 0.0 {
                y.y[pos] = 2f64.powi(alpha[0] as i32);
            }
        }
        let l = localizing_matrix(&y);
        assert_relative_eq!(l[(0, 0)], -3.0, epsilon = 1e-14);
        assert!(l.amax() > 0.0);
    }

    #[test]
    fn localizing_matrix_zero() {
        assert_eq!(localizing_matrix(&MomentSequence::zeros(2, 2)).amax(), 0.0);
    }

    #[test]
    fn adjoint_identities_hold_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (n, k) in [(2usize, 2usize), (3, 2), (2, 3)] {
            let ops = MomentOperators::new(n, k);
            let y = DVector::from_fn(ops.y_len(), |_, _| rng.random::<f64>() - 0.5);
            let md = ops.moment_dim();
            let ld = ops.localizing_dim();
            let z = DMatrix::from_fn(md, md, |_, _| rng.random::<f64>() - 0.5);
            let z = (&z + z.transpose()) * 0.5;
            let u = DMatrix::from_fn(n, n * n, |_, _| rng.random::<f64>() - 0.5);
            let w = DMatrix::from_fn(ld, ld, |_, _| rng.random::<f64>() - 0.5);
            let w = (&w + w.transpose()) * 0.5;

            let lhs_m = ops.adjoint_m(&z).dot(&y);
            let rhs_m = (z * ops.apply_m(&y)).trace();
            assert_relative_eq!(lhs_m, rhs_m, max_relative = 1e-12);

            let lhs_p = ops.adjoint_p(&u).dot(&y);
            let rhs_p = (u.transpose() * ops.apply_p(&y)).trace();
            assert_relative_eq!(lhs_p, rhs_p, max_relative = 1e-12);

            let lhs_l = ops.adjoint_l(&w).dot(&y);
            let rhs_l = (w * ops.apply_l(&y)).trace();
            assert_relative_eq!(lhs_l, rhs_l, max_relative = 1e-12);
        }
    }

    #[test]
    fn adjoint_m_of_e0_is_y0_indicator() {
        let ops = MomentOperators::new(3, 2);
        let mut e0 = DMatrix::zeros(ops.moment_dim(), ops.moment_dim());
        e0[(0, 0)] = 1.0;
        let v = ops.adjoint_m(&e0);
        assert_eq!(v, ops.adjoint_m_e0());
        assert_eq!(v[0], 1.0);
        assert_eq!(v.iter().map(|x| x.abs()).sum::<f64>(), 1.0);
    }

    #[test]
    fn adjoint_p_of_zero_is_zero() {
        let ops = MomentOperators::new(2, 2);
        let u = DMatrix::zeros(2, 4);
        assert_eq!(ops.adjoint_p(&u).amax(), 0.0);
    }

    #[test]
    fn mask_reconstruction_on_random_point() {
        // sum_alpha x^alpha A_alpha = x^k (x^k)' checked numerically:
        // the moment matrix of the dirac moments at x is exactly that product.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (n, k) in [(2usize, 2usize), (3, 3)] {
            let ops = MomentOperators::new(n, k);
            let x = DVector::from_fn(n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let exps = exps_upto(n, 2 * k);
            let y = DVector::from_fn(exps.len(), |p, _| {
                exps[p]
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| x[i].powi(a as i32))
                    .product::<f64>()
            });
            let basis = exps_upto(n, k);
            let v = DVector::from_fn(basis.len(), |p, _| {
                basis[p]
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| x[i].powi(a as i32))
                    .product::<f64>()
            });
            assert!((ops.apply_m(&y) - &v * v.transpose()).amax() < 1e-12);
            // extended side: x^{o k} against G_k
            let glist = IndexTable::new(n, k).tensor_index().to_vec();
            let g = DVector::from_fn(glist.len(), |p, _| {
                glist[p]
                    .iter()
                    .enumerate()
                    .map(|(i, &a)| x[i].powi(a as i32))
                    .product::<f64>()
            });
            assert!((ops.apply_g(&y) - &g * g.transpose()).amax() < 1e-12);
        }
    }

    #[test]
    fn rank_of_extended_equals_rank_of_moment_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..4 {
            let n = 2 + trial % 2;
            let atoms: Vec<Atom> = (0..=trial)
                .map(|_| Atom::new(rng.random::<f64>() + 0.2, random_unit_vector(&mut rng, n)).unwrap())
                .collect();
            let y = moments_from_atoms(&AtomicMeasure::new(atoms), n, 2).unwrap();
            let ops = MomentOperators::new(n, 2);
            let m_sv = ops.apply_m(&y.y).singular_values();
            let g_sv = ops.apply_g(&y.y).singular_values();
            let rm = numerical_rank(m_sv.as_slice(), 1e-8);
            let rg = numerical_rank(g_sv.as_slice(), 1e-8);
            assert_eq!(rm, rg);
        }
    }

    #[test]
    fn example4_moments_from_printed_decomposition() {
        let mu = AtomicMeasure::new(vec![
            Atom::new(1.6347, DVector::from_vec(vec![-0.4514, 0.8923])).unwrap(),
            Atom::new(0.8000, DVector::from_vec(vec![0.9222, 0.3867])).unwrap(),
        ]);
        let y = moments_from_atoms(&mu, 2, 2).unwrap();
        let printed = example4_y();
        assert!((y.y - printed.y).amax() < 1e-3);
    }

    #[test]
    fn moments_of_unit_dirac() {
        let y = moments_from_atoms(&dirac(3, DVector::from_vec(vec![1.0, 0.0, 0.0])), 3, 2).unwrap();
        let exps = exps_upto(3, 4);
        for (pos, alpha) in exps.iter().enumerate() {
            let on_first = alpha[1] == 0 && alpha[2] == 0;
            assert_eq!(y.y[pos], if on_first { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn sphere_measure_moment_matrix_is_psd_with_atom_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let n = 3;
        let atoms: Vec<Atom> = (0..3)
            .map(|_| Atom::new(rng.random::<f64>() + 0.3, random_unit_vector(&mut rng, n)).unwrap())
            .collect();
        let mu = AtomicMeasure::new(atoms);
        let y = moments_from_atoms(&mu, n, 2).unwrap();
        let m = moment_matrix(&y);
        let eig = m.symmetric_eigen().eigenvalues;
        assert!(eig.min() > -1e-12);
        let svals: Vec<f64> = eig.iter().map(|v| v.abs()).collect();
        assert_eq!(numerical_rank(&svals, 1e-8), mu.len());
        assert!(localizing_matrix(&y).amax() < 1e-12);
    }

    #[test]
    fn moment_sequence_json_roundtrip() {
        let y = example4_y();
        let s = serde_json::to_string(&y).unwrap();
        let back: MomentSequence = serde_json::from_str(&s).unwrap();
        assert_eq!(y, back);
        assert!(s.starts_with("{\"n\":2,\"k\":2,\"y\":["));
    }
}
