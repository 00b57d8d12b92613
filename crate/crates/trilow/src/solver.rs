//! The primal solver: a penalty reformulation of the rank constrained
//! moment relaxation, solved by a DC algorithm whose convex subproblems are
//! handled by an sGS-ADMM with closed-form block updates.
//!
//! The rank constraint rank(B) <= r enters as the penalty
//! rho (||B||_* - ||B||_(r)); each DCA round linearizes the concave part at
//! the current iterate and the resulting convex problem
//!
//!   min 0.5 ||M(A)-B||^2 + sigma <E0,X> + delta_psd(X) + rho(||B||_* - <C,B>)
//!   s.t. B = P(y), X = M(y), L(y) = 0
//!
//! is solved with blocks {B, y} (symmetric Gauss-Seidel sweep y, B, y) and
//! {X}: the B-step is a singular value soft-threshold, the y-step a linear
//! solve against a fixed Gram operator factored once, and the X-step a
//! projection onto the psd cone.

use nalgebra::{DMatrix, DVector};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::lowrank::{kyfan_norm, kyfan_subgradient, nuclear_norm, project_rank, soft_threshold};
use crate::moments::{moments_from_atoms, MomentOperators, MomentSequence};
use crate::tensor::{flatten, random_unit_vector, Atom, AtomicMeasure, SymTensor3};
use crate::Result;

/// Relaxation order used by the solver. The moment machinery is general in
/// k; the solver pins the basic relaxation.
pub const RELAXATION_ORDER: usize = 2;

/// Starting point strategy.
#[derive(Debug, Clone)]
pub enum InitStrategy {
    /// All variables zero.
    Zero,
    /// Moments of r random unit atoms with unit weights.
    RandomAtoms(usize),
    /// Start from a given moment vector.
    WarmStart(MomentSequence),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Control parameter sigma >= 0 multiplying <E0, X>.
    pub sigma: f64,
    /// Penalty rho on the nuclear minus Ky-Fan gap.
    pub rho_pen: f64,
    /// ADMM multiplier steplength tau.
    pub steplength: f64,
    /// Augmented Lagrangian penalty kappa.
    pub admm_penalty: f64,
    /// Proximal parameter gamma on the y-step.
    pub proximal: f64,
    /// Inner (ADMM) stopping tolerance on primal/dual residuals.
    pub tol_kkt: f64,
    /// Outer (DCA) stopping tolerance on objective decrease and rank gap.
    pub tol_dca: f64,
    pub max_admm_iters: usize,
    pub max_dca_iters: usize,
    pub seed: u64,
    pub init: InitStrategy,
    /// Geometric penalty escalation (x10 up to 1e3) when the rank gap
    /// stalls. Off by default.
    pub rho_escalation: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            sigma: 1e-5,
            rho_pen: 1.0,
            steplength: 1.5,
            admm_penalty: 1.0,
            proximal: 1e-3,
            tol_kkt: 1e-7,
            tol_dca: 1e-8,
            max_admm_iters: 20_000,
            max_dca_iters: 50,
            seed: 0,
            init: InitStrategy::RandomAtoms(1),
            rho_escalation: false,
        }
    }
}

impl SolverOptions {
    /// Default options with the random initialization matched to the rank.
    pub fn for_rank(r: usize) -> Self {
        SolverOptions {
            init: InitStrategy::RandomAtoms(r),
            ..SolverOptions::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sigma < 0.0 || !self.sigma.is_finite() {
            return Err(Error::InvalidInput("sigma must be >= 0".into()));
        }
        if !(self.rho_pen > 0.0) {
            return Err(Error::InvalidInput("rho_pen must be > 0".into()));
        }
        if !(self.steplength > 0.0 && self.steplength < 1.6180339887) {
            return Err(Error::InvalidInput(
                "steplength must lie in (0, (1+sqrt 5)/2)".into(),
            ));
        }
        if !(self.admm_penalty > 0.0) {
            return Err(Error::InvalidInput("admm_penalty must be > 0".into()));
        }
        if self.proximal < 0.0 {
            return Err(Error::InvalidInput("proximal must be >= 0".into()));
        }
        if !(self.tol_kkt > 0.0 && self.tol_dca > 0.0) {
            return Err(Error::InvalidInput("tolerances must be > 0".into()));
        }
        Ok(())
    }
}

/// Residuals reported with a solution.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// max(||B - P(y)||, ||X - M(y)||, ||L(y)||), Frobenius.
    pub primal_feas: f64,
    /// ||P*(U) - M*(V) - L*(W)||, the multiplier (dual constraint) residual.
    pub dual_feas: f64,
    /// Violation of 0 <= sigma E0 - V  perp  X >= 0.
    pub psd_residual: f64,
    /// Excess of 0.5||(M(A)-U) - B||^2 over the optimal rank-r projection
    /// value of M(A)-U.
    pub rank_residual: f64,
    /// ||B||_* - ||B||_(r).
    pub dca_gap: f64,
}

/// Primal-dual output of [`solve`].
#[derive(Debug, Clone)]
pub struct PrimalSolution {
    pub b: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub y: MomentSequence,
    /// Multiplier of B = P(y).
    pub u: DMatrix<f64>,
    /// Multiplier of X = M(y); the dual slack is Z = sigma E0 - V.
    pub v: DMatrix<f64>,
    /// Multiplier of L(y) = 0, signed so that P*(U) - M*(V) - L*(W) = 0 at
    /// optimality.
    pub w: DMatrix<f64>,
    /// Objective 0.5||M(A)-B||^2 + sigma <E0,X>.
    pub psi: f64,
    pub residuals: Residuals,
    pub converged: bool,
    /// Ky-Fan subgradient used in the final DCA round.
    pub kyfan_c: DMatrix<f64>,
    /// Penalized objective after each DCA round (monotonicity diagnostics).
    pub dca_objectives: Vec<f64>,
    pub admm_iters_total: usize,
}

impl PrimalSolution {
    /// Hilbert-Schmidt residual ||M(A) - B||_F.
    pub fn residual_hs(&self, a: &SymTensor3) -> f64 {
        let ma = flatten(a);
        (ma.matrix() - &self.b).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Spectral-norm residual ||M(A) - B||_2 (largest singular value).
    pub fn residual_spectral(&self, a: &SymTensor3) -> f64 {
        let ma = flatten(a);
        (ma.matrix() - &self.b).singular_values().max()
    }

    /// The dual slack Z = sigma E0 - V.
    pub fn dual_slack(&self, sigma: f64) -> DMatrix<f64> {
        let mut z = -self.v.clone();
        z[(0, 0)] += sigma;
        z
    }
}

/// Project a symmetric matrix onto the psd cone.
pub(crate) fn proj_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut out = DMatrix::zeros(s.nrows(), s.ncols());
    for i in 0..eig.eigenvalues.len() {
        let lam = eig.eigenvalues[i];
        if lam > 0.0 {
            let q = eig.eigenvectors.column(i);
            out += lam * q * q.transpose();
        }
    }
    out
}

struct Workspace {
    ops: MomentOperators,
    ma: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    scale: f64,
}

impl Workspace {
    fn new(a: &SymTensor3, opts: &SolverOptions) -> Result<Self> {
        let n = a.dim();
        let ops = MomentOperators::new(n, RELAXATION_ORDER);
        let ma = flatten(a).into_matrix();
        let h = ops.normal_matrix();
        let sys = h * opts.admm_penalty
            + DMatrix::identity(ops.y_len(), ops.y_len()) * opts.proximal.max(1e-12);
        let chol = nalgebra::Cholesky::new(sys)
            .ok_or_else(|| Error::InvalidInput("normal matrix not positive definite".into()))?;
        let scale = 1.0 + ma.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Workspace { ops, ma, chol, scale })
    }

    fn y_step(
        &self,
        b: &DMatrix<f64>,
        x: &DMatrix<f64>,
        u: &DMatrix<f64>,
        v: &DMatrix<f64>,
        w: &DMatrix<f64>,
        anchor: &DVector<f64>,
        opts: &SolverOptions,
    ) -> DVector<f64> {
        let kappa = opts.admm_penalty;
        let mut rhs = self.ops.adjoint_p(u) - self.ops.adjoint_m(v) - self.ops.adjoint_l(w);
        rhs += (self.ops.adjoint_p(b) + self.ops.adjoint_m(x)) * kappa;
        rhs += anchor * opts.proximal.max(1e-12);
        self.chol.solve(&rhs)
    }
}

struct State {
    b: DMatrix<f64>,
    y: DVector<f64>,
    x: DMatrix<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    w: DMatrix<f64>,
}

/// One sGS-ADMM pass for the current linearization C. Returns iterations used
/// and whether the inner tolerance was reached.
fn admm(ws: &Workspace, st: &mut State, c: &DMatrix<f64>, rho: f64, opts: &SolverOptions) -> (usize, bool) {
    let kappa = opts.admm_penalty;
    let tau = opts.steplength;
    let shrink = rho / (1.0 + kappa);
    let check_every = 20;
    for it in 1..=opts.max_admm_iters {
        // backward sweep: y with the old B
        st.y = ws.y_step(&st.b, &st.x, &st.u, &st.v, &st.w, &st.y.clone(), opts);
        // B-step (soft-threshold of an affine combination)
        let p_y = ws.ops.apply_p(&st.y);
        let g = (&ws.ma + c * rho - &st.u + &p_y * kappa) / (1.0 + kappa);
        st.b = soft_threshold(&g, shrink).expect("positive shrinkage");
        // forward sweep: y with the new B
        st.y = ws.y_step(&st.b, &st.x, &st.u, &st.v, &st.w, &st.y.clone(), opts);
        // X-step: psd projection
        let m_y = ws.ops.apply_m(&st.y);
        let mut shift = st.v.clone();
        shift[(0, 0)] -= opts.sigma;
        st.x = proj_psd(&(&m_y + &shift / kappa));
        // multiplier updates
        let p_y = ws.ops.apply_p(&st.y);
        let l_y = ws.ops.apply_l(&st.y);
        let r_b = &st.b - &p_y;
        let r_x = &st.x - &m_y;
        st.u += &r_b * (tau * kappa);
        st.v -= &r_x * (tau * kappa);
        st.w += &l_y * (tau * kappa);

        if it % check_every == 0 || it == opts.max_admm_iters {
            let pfeas = frob(&r_b).max(frob(&r_x)).max(frob(&l_y)) / ws.scale;
            let dres = (ws.ops.adjoint_p(&st.u)
                - ws.ops.adjoint_m(&st.v)
                - ws.ops.adjoint_l(&st.w))
            .norm()
                / ws.scale;
            if pfeas.max(dres) <= opts.tol_kkt {
                return (it, true);
            }
        }
    }
    (opts.max_admm_iters, false)
}

fn frob(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn initial_state(a: &SymTensor3, ws: &Workspace, opts: &SolverOptions) -> Result<State> {
    let n = a.dim();
    let ops = &ws.ops;
    let y = match &opts.init {
        InitStrategy::Zero => DVector::zeros(ops.y_len()),
        InitStrategy::RandomAtoms(r) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let atoms: Vec<Atom> = (0..(*r).max(1))
                .map(|_| Atom::new(1.0, random_unit_vector(&mut rng, n)).expect("unit atom"))
                .collect();
            moments_from_atoms(&AtomicMeasure::new(atoms), n, RELAXATION_ORDER)?.y
        }
        InitStrategy::WarmStart(y0) => {
            if y0.n != n || y0.k != RELAXATION_ORDER {
                return Err(Error::InvalidInput(
                    "warm start moment vector has wrong shape".into(),
                ));
            }
            y0.y.clone()
        }
    };
    Ok(State {
        b: ops.apply_p(&y),
        x: ops.apply_m(&y),
        u: DMatrix::zeros(n, n * n),
        v: DMatrix::zeros(ops.moment_dim(), ops.moment_dim()),
        w: DMatrix::zeros(ops.localizing_dim(), ops.localizing_dim()),
        y,
    })
}

/// Solve the k = 2 penalized relaxation for the given tensor and target rank.
///
/// Non-convergence within the iteration budget returns the best iterate with
/// `converged = false`; it is not an error.
pub fn solve(a: &SymTensor3, r: usize, opts: &SolverOptions) -> Result<PrimalSolution> {
    opts.validate()?;
    let n = a.dim();
    if n < 2 {
        return Err(Error::InvalidInput("solver needs dimension n >= 2".into()));
    }
    if r < 1 || r > n {
        return Err(Error::RankOutOfRange { r, max: n });
    }
    let ws = Workspace::new(a, opts)?;
    let mut st = initial_state(a, &ws, opts)?;

    let mut rho = opts.rho_pen;
    let mut dca_objectives = Vec::new();
    let mut admm_total = 0;
    let mut inner_ok = false;
    let mut c = kyfan_subgradient(&st.b, r).unwrap_or_else(|_| DMatrix::zeros(n, n * n));
    let mut stalled = 0usize;

    let penalized = |b: &DMatrix<f64>, x: &DMatrix<f64>, rho: f64| -> f64 {
        0.5 * frob(&(&ws.ma - b)).powi(2) + opts.sigma * x[(0, 0)]
            + rho * (nuclear_norm(b) - kyfan_norm(b, r).expect("rank checked"))
    };

    let mut f_prev = f64::INFINITY;
    for _round in 0..opts.max_dca_iters {
        let (iters, ok) = admm(&ws, &mut st, &c, rho, opts);
        admm_total += iters;
        inner_ok = ok;
        let f = penalized(&st.b, &st.x, rho);
        dca_objectives.push(f);
        let gap = nuclear_norm(&st.b) - kyfan_norm(&st.b, r).expect("rank checked");
        let gap_ok = gap <= opts.tol_dca * nuclear_norm(&st.b).max(1.0);
        let decrease_ok = (f_prev - f).abs() <= opts.tol_dca * f.abs().max(1.0);
        if gap_ok && decrease_ok {
            break;
        }
        if opts.rho_escalation {
            if gap > opts.tol_dca * nuclear_norm(&st.b).max(1.0) && (f_prev - f).abs() <= opts.tol_dca {
                stalled += 1;
            } else {
                stalled = 0;
            }
            if stalled >= 3 && rho < 1e3 {
                rho *= 10.0;
                stalled = 0;
            }
        }
        f_prev = f;
        c = kyfan_subgradient(&st.b, r).expect("rank checked");
    }

    let y = MomentSequence::new(n, RELAXATION_ORDER, st.y.clone())?;
    let residuals = compute_residuals(&ws, &st, &c, r, rho, opts);
    let psi = 0.5 * frob(&(&ws.ma - &st.b)).powi(2) + opts.sigma * st.x[(0, 0)];
    let dca_len = dca_objectives.len();
    Ok(PrimalSolution {
        b: st.b,
        x: st.x,
        y,
        u: st.u,
        v: st.v,
        w: st.w,
        psi,
        residuals,
        converged: inner_ok && dca_len < opts.max_dca_iters,
        kyfan_c: c,
        dca_objectives,
        admm_iters_total: admm_total,
    })
}

fn compute_residuals(
    ws: &Workspace,
    st: &State,
    c: &DMatrix<f64>,
    r: usize,
    _rho: f64,
    opts: &SolverOptions,
) -> Residuals {
    let p_y = ws.ops.apply_p(&st.y);
    let m_y = ws.ops.apply_m(&st.y);
    let l_y = ws.ops.apply_l(&st.y);
    let primal_feas = frob(&(&st.b - &p_y)).max(frob(&(&st.x - &m_y))).max(frob(&l_y));
    let dual_feas = (ws.ops.adjoint_p(&st.u) - ws.ops.adjoint_m(&st.v) - ws.ops.adjoint_l(&st.w))
        .norm();
    let mut z = -st.v.clone();
    z[(0, 0)] += opts.sigma;
    let z_min = symmetric_min_eig(&z);
    let x_min = symmetric_min_eig(&st.x);
    let comp = (z.transpose() * &st.x).trace().abs() / (1.0 + frob(&st.x));
    let psd_residual = (-z_min).max(0.0).max((-x_min).max(0.0)).max(comp);
    let shifted = &ws.ma - &st.u;
    let rank_residual = match project_rank(&shifted, r) {
        Ok(p) => {
            let excess = 0.5 * frob(&(&shifted - &st.b)).powi(2) - 0.5 * p.residual_sq;
            excess.max(0.0)
        }
        Err(_) => f64::NAN,
    };
    let dca_gap = nuclear_norm(&st.b) - kyfan_norm(&st.b, r).unwrap_or(0.0);
    let _ = c;
    Residuals {
        primal_feas,
        dual_feas,
        psd_residual,
        rank_residual,
        dca_gap,
    }
}

pub(crate) fn symmetric_min_eig(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen().eigenvalues.min()
}

/// The four optimality lines evaluated at a given primal-dual point.
#[derive(Debug, Clone)]
pub struct KktResiduals {
    /// Violation of 0 <= sigma E0 - V perp X >= 0.
    pub psd_complementarity: f64,
    /// Violation of C + (M(A) - U - B)/rho in the nuclear norm
    /// subdifferential at B (dual characterization).
    pub nuclear_subgradient: f64,
    /// ||P*(U) - M*(V) - L*(W)||.
    pub adjoint_equation: f64,
    /// max constraint violation of (B, X, y).
    pub primal_feasibility: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.psd_complementarity
            .max(self.nuclear_subgradient)
            .max(self.adjoint_equation)
            .max(self.primal_feasibility)
    }
}

/// Evaluate the optimality system at a solution, with the DC linearization C
/// and penalty rho used by the final round.
pub fn kkt_residuals(
    a: &SymTensor3,
    sol: &PrimalSolution,
    c: &DMatrix<f64>,
    rho: f64,
    sigma: f64,
) -> KktResiduals {
    let ops = MomentOperators::new(a.dim(), RELAXATION_ORDER);
    let ma = flatten(a).into_matrix();

    let z = sol.dual_slack(sigma);
    let z_min = symmetric_min_eig(&z);
    let x_min = symmetric_min_eig(&sol.x);
    let comp = (z.transpose() * &sol.x).trace().abs() / (1.0 + frob(&sol.x));
    let psd_complementarity = (-z_min).max(0.0).max((-x_min).max(0.0)).max(comp);

    let d = c + (&ma - &sol.u - &sol.b) / rho;
    let op_norm = d.singular_values().max();
    let pairing = ((d.transpose() * &sol.b).trace() - nuclear_norm(&sol.b)).abs()
        / (1.0 + nuclear_norm(&sol.b));
    let nuclear_subgradient = (op_norm - 1.0).max(0.0).max(pairing);

    let adjoint_equation =
        (ops.adjoint_p(&sol.u) - ops.adjoint_m(&sol.v) - ops.adjoint_l(&sol.w)).norm();

    let p_y = ops.apply_p(&sol.y.y);
    let m_y = ops.apply_m(&sol.y.y);
    let l_y = ops.apply_l(&sol.y.y);
    let primal_feasibility = frob(&(&sol.b - &p_y))
        .max(frob(&(&sol.x - &m_y)))
        .max(frob(&l_y));

    KktResiduals {
        psd_complementarity,
        nuclear_subgradient,
        adjoint_equation,
        primal_feasibility,
    }
}
