//! Single-layer symmetric factorizations and their multiplicative updates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use crate::config::{SolverConfig, StepRule};
use crate::descent::{descend, Schedule};
use crate::error::{MatrixError, SolveError};
use crate::matrix::{
    draw_column, draw_factor, pos_neg_split, seeded_rng, CentroidMatrix, FactorMatrix, LayerMatrix,
    SignMode,
};

/// Ridge added to a singular Gram matrix before giving up.
const GRAM_RIDGE: f64 = 1e-10;

/// Scale applied to the off-diagonal of the initial mixing matrix.
const MIXING_OFF_DIAGONAL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// `A ≈ H Hᵀ`
    Snmf,
    /// `A ≈ H Hᵀ A`
    Pnmf,
    /// `A ≈ H S Hᵀ` with `S ≥ 0`
    Snmtf,
    /// `A ≈ H S Hᵀ` with mixed-sign `S`
    Ssnmtf,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Snmf, Method::Pnmf, Method::Snmtf, Method::Ssnmtf];

    pub fn name(self) -> &'static str {
        match self {
            Method::Snmf => "snmf",
            Method::Pnmf => "pnmf",
            Method::Snmtf => "snmtf",
            Method::Ssnmtf => "ssnmtf",
        }
    }

    /// Sign convention of the mixing matrix, for tri-factorizations.
    pub fn sign_mode(self) -> Option<SignMode> {
        match self {
            Method::Snmf | Method::Pnmf => None,
            Method::Snmtf => Some(SignMode::Nonnegative),
            Method::Ssnmtf => Some(SignMode::Mixed),
        }
    }

    pub fn is_tri(self) -> bool {
        self.sign_mode().is_some()
    }

    /// Step policy used when the config leaves it open. The symmetric rule
    /// raises the raw objective along its ratio direction regardless of step
    /// size, so backtracking would stall it; it keeps the square-root step.
    pub fn default_step(self) -> StepRule {
        match self {
            Method::Snmf => StepRule::Fixed(0.5),
            _ => StepRule::Backtracking,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown method `{}`", self.0)
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizeResult {
    pub h: FactorMatrix,
    /// Present for tri-factorizations only.
    pub s: Option<CentroidMatrix>,
    /// Objective at the start, then after every update.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl FactorizeResult {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the starting objective")
    }
}

/// Squared Frobenius reconstruction error of `method` at `(h, s)`.
pub fn objective(
    a: &LayerMatrix,
    h: &FactorMatrix,
    s: Option<&CentroidMatrix>,
    method: Method,
) -> Result<f64, SolveError> {
    check_factor(a, h)?;
    let s = match (method.is_tri(), s) {
        (true, None) => return Err(SolveError::MissingCentroid),
        (true, Some(s)) => {
            check_mixing(h, s)?;
            Some(s.values())
        }
        (false, _) => None,
    };
    Ok(residual(a.values(), h.values(), s, method))
}

pub(crate) fn residual(a: &DMatrix<f64>, h: &DMatrix<f64>, s: Option<&DMatrix<f64>>, method: Method) -> f64 {
    match method {
        Method::Snmf => (a - h * h.transpose()).norm_squared(),
        Method::Pnmf => (a - h * (h.transpose() * a)).norm_squared(),
        Method::Snmtf | Method::Ssnmtf => {
            let s = s.expect("tri-factorization residual needs a mixing matrix");
            (a - h * s * h.transpose()).norm_squared()
        }
    }
}

/// `h ∘ (num / (den + eps))^eta`
pub(crate) fn ratio_update(
    h: &DMatrix<f64>,
    num: &DMatrix<f64>,
    den: &DMatrix<f64>,
    eps: f64,
    eta: f64,
) -> DMatrix<f64> {
    if eta == 0.0 {
        return h.clone();
    }
    h.zip_zip_map(num, den, |x, p, q| {
        let r = p / (q + eps);
        if eta == 1.0 {
            x * r
        } else {
            x * r.powf(eta)
        }
    })
}

/// `h ∘ (M h / (h hᵀ M h + eps))^eta` for a symmetric target `m`.
pub(crate) fn symmetric_step(h: &DMatrix<f64>, m: &DMatrix<f64>, eps: f64, eta: f64) -> DMatrix<f64> {
    let mh = m * h;
    let den = h * (h.transpose() * &mh);
    ratio_update(h, &mh, &den, eps, eta)
}

pub(crate) fn tri_factor_step(
    h: &DMatrix<f64>,
    s: &DMatrix<f64>,
    a: &DMatrix<f64>,
    eps: f64,
    eta: f64,
) -> DMatrix<f64> {
    let ahs = a * h * s;
    let den = h * (h.transpose() * &ahs);
    ratio_update(h, &ahs, &den, eps, eta)
}

pub(crate) fn tri_mixing_step(h: &DMatrix<f64>, s: &DMatrix<f64>, a: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let hah = h.transpose() * a * h;
    let g = h.transpose() * h;
    let den = &g * s * &g;
    ratio_update(s, &hah, &den, eps, 1.0)
}

/// Update for a mixed-sign product `p = A H S`, split into positive and
/// negative parts so every factor of the ratio stays non-negative.
pub(crate) fn semi_factor_step(
    h: &DMatrix<f64>,
    pos: &DMatrix<f64>,
    neg: &DMatrix<f64>,
    eps: f64,
    eta: f64,
) -> DMatrix<f64> {
    let ht = h.transpose();
    let num = pos + h * (&ht * neg);
    let den = neg + h * (&ht * pos);
    ratio_update(h, &num, &den, eps, eta)
}

/// `(HᵀH)⁻¹ Hᵀ A H (HᵀH)⁻¹`, with a small ridge when `HᵀH` is singular.
pub(crate) fn closed_form_mixing(h: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>, SolveError> {
    let k = h.ncols();
    let g = h.transpose() * h;
    let hah = h.transpose() * a * h;
    let chol = g
        .clone()
        .cholesky()
        .or_else(|| (g + DMatrix::<f64>::identity(k, k) * GRAM_RIDGE).cholesky())
        .ok_or(SolveError::SingularGram)?;
    let left = chol.solve(&hah);
    let s = chol.solve(&left.transpose()).transpose();
    if s.iter().all(|v| v.is_finite()) {
        Ok(s)
    } else {
        Err(SolveError::SingularGram)
    }
}

/// `Hᵀ A H` with its off-diagonal damped, so each column starts out
/// explaining its own block rather than the links between blocks.
pub(crate) fn initial_mixing(h: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = h.transpose() * a * h;
    let k = s.nrows();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                s[(i, j)] *= MIXING_OFF_DIAGONAL;
            }
        }
    }
    s
}

/// Re-draws any column that has collapsed below `eps` everywhere.
pub(crate) fn rescue_columns(rng: &mut ChaCha8Rng, h: &mut DMatrix<f64>, eps: f64) -> bool {
    let mut touched = false;
    for j in 0..h.ncols() {
        if h.column(j).iter().all(|&v| v < eps) {
            draw_column(rng, h, j);
            touched = true;
        }
    }
    touched
}

/// One full step of the symmetric rule: `H ∘ AH / (HHᵀAH + ε)`.
pub fn update_snmf(h: &FactorMatrix, a: &LayerMatrix, eps: f64) -> Result<FactorMatrix, SolveError> {
    check_factor(a, h)?;
    Ok(FactorMatrix::from_solver(symmetric_step(h.values(), a.values(), eps, 1.0)))
}

/// One full step of the projective rule: `H ∘ AAᵀH / (HHᵀAAᵀH + ε)`.
pub fn update_pnmf(h: &FactorMatrix, a: &LayerMatrix, eps: f64) -> Result<FactorMatrix, SolveError> {
    check_factor(a, h)?;
    let a = a.values();
    let aat = a * a.transpose();
    Ok(FactorMatrix::from_solver(symmetric_step(h.values(), &aat, eps, 1.0)))
}

/// One full step of the non-negative tri-factorization, `H` then `S`.
pub fn update_snmtf(
    h: &FactorMatrix,
    s: &CentroidMatrix,
    a: &LayerMatrix,
    eps: f64,
) -> Result<(FactorMatrix, CentroidMatrix), SolveError> {
    check_factor(a, h)?;
    check_mixing(h, s)?;
    if s.sign_mode() != SignMode::Nonnegative {
        return Err(SolveError::SignModeMismatch);
    }
    let h2 = tri_factor_step(h.values(), s.values(), a.values(), eps, 1.0);
    let s2 = tri_mixing_step(&h2, s.values(), a.values(), eps);
    Ok((FactorMatrix::from_solver(h2), CentroidMatrix::from_solver(s2, SignMode::Nonnegative)))
}

/// One full step of the semi tri-factorization: split update of `H`, then
/// the closed-form least-squares `S`.
pub fn update_ssnmtf(
    h: &FactorMatrix,
    s: &CentroidMatrix,
    a: &LayerMatrix,
    eps: f64,
) -> Result<(FactorMatrix, CentroidMatrix), SolveError> {
    check_factor(a, h)?;
    check_mixing(h, s)?;
    if s.sign_mode() != SignMode::Mixed {
        return Err(SolveError::SignModeMismatch);
    }
    let p = a.values() * h.values() * s.values();
    let (pos, neg) = pos_neg_split(&p);
    let h2 = semi_factor_step(h.values(), &pos, &neg, eps, 1.0);
    let s2 = closed_form_mixing(&h2, a.values())?;
    Ok((FactorMatrix::from_solver(h2), CentroidMatrix::from_solver(s2, SignMode::Mixed)))
}

pub(crate) fn schedule(cfg: &SolverConfig, method: Method) -> Schedule {
    Schedule {
        rule: cfg.step.unwrap_or_else(|| method.default_step()),
        max_iters: cfg.max_iters,
        rel_tol: cfg.rel_tol,
        floor: cfg.epsilon,
    }
}

/// Factorizes one layer from a seeded start until the relative objective
/// change falls below `cfg.rel_tol` or `cfg.max_iters` updates have run.
pub fn factorize(a: &LayerMatrix, method: Method, cfg: &SolverConfig) -> Result<FactorizeResult, SolveError> {
    cfg.validate()?;
    let n = a.n();
    if cfg.k > n {
        return Err(MatrixError::InvalidShape { n, k: cfg.k }.into());
    }
    let eps = cfg.epsilon;
    let am = a.values();
    let mut rng = seeded_rng(cfg.seed);
    let h0 = draw_factor(&mut rng, n, cfg.k);
    let plan = schedule(cfg, method);

    match method {
        Method::Snmf | Method::Pnmf => {
            let target = if method == Method::Pnmf { am * am.transpose() } else { am.clone() };
            let out = descend(
                h0,
                &plan,
                |h, eta| Ok(symmetric_step(h, &target, eps, eta)),
                |h| residual(am, h, None, method),
                |h| rescue_columns(&mut rng, h, eps),
            )?;
            Ok(FactorizeResult {
                h: FactorMatrix::from_solver(out.state),
                s: None,
                objective_trace: out.trace,
                iterations: out.iterations,
                converged: out.converged,
            })
        }
        Method::Snmtf | Method::Ssnmtf => {
            let s0 = initial_mixing(&h0, am);
            let out = descend(
                (h0, s0),
                &plan,
                |(h, s), eta| {
                    if method == Method::Snmtf {
                        let h2 = tri_factor_step(h, s, am, eps, eta);
                        let s2 = tri_mixing_step(&h2, s, am, eps);
                        Ok((h2, s2))
                    } else {
                        let (pos, neg) = pos_neg_split(&(am * h * s));
                        let h2 = semi_factor_step(h, &pos, &neg, eps, eta);
                        let s2 = closed_form_mixing(&h2, am)?;
                        Ok((h2, s2))
                    }
                },
                |(h, s)| residual(am, h, Some(s), method),
                |(h, _)| rescue_columns(&mut rng, h, eps),
            )?;
            let (h, s) = out.state;
            let mode = method.sign_mode().expect("tri-factorization");
            Ok(FactorizeResult {
                h: FactorMatrix::from_solver(h),
                s: Some(CentroidMatrix::from_solver(s, mode)),
                objective_trace: out.trace,
                iterations: out.iterations,
                converged: out.converged,
            })
        }
    }
}

fn check_factor(a: &LayerMatrix, h: &FactorMatrix) -> Result<(), MatrixError> {
    if h.n() != a.n() {
        return Err(MatrixError::ShapeMismatch { expected: (a.n(), h.k()), found: (h.n(), h.k()) });
    }
    Ok(())
}

fn check_mixing(h: &FactorMatrix, s: &CentroidMatrix) -> Result<(), MatrixError> {
    if s.k() != h.k() {
        return Err(MatrixError::ShapeMismatch { expected: (h.k(), h.k()), found: (s.k(), s.k()) });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::init_factor;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::Rng;

    fn layer(m: DMatrix<f64>) -> LayerMatrix {
        LayerMatrix::new(m).unwrap()
    }

    fn factor(m: DMatrix<f64>) -> FactorMatrix {
        FactorMatrix::new(m).unwrap()
    }

    /// Non-negative factor with orthonormal columns: disjoint supports.
    fn disjoint_factor(n: usize, k: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = seeded_rng(seed);
        let mut h = DMatrix::zeros(n, k);
        for i in 0..n {
            h[(i, i % k)] = 0.1 + rng.gen::<f64>();
        }
        for mut col in h.column_iter_mut() {
            let norm = col.norm();
            col /= norm;
        }
        h
    }

    fn random_graph(n: usize, density: f64, seed: u64) -> LayerMatrix {
        let mut rng = seeded_rng(seed);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < density {
                    a[(i, j)] = 1.0;
                    a[(j, i)] = 1.0;
                }
            }
        }
        layer(a)
    }

    fn two_blocks(size: usize, scale: f64) -> LayerMatrix {
        let n = 2 * size;
        layer(DMatrix::from_fn(n, n, |i, j| if i / size == j / size { scale } else { 0.0 }))
    }

    #[test]
    fn objective_examples() {
        let a = layer(DMatrix::from_element(2, 2, 1.0));
        let h = factor(DMatrix::from_element(2, 1, 1.0 / 2f64.sqrt()));
        let v = objective(&a, &h, None, Method::Snmf).unwrap();
        assert!((v - 1.0).abs() < 1e-12);

        let a = layer(dmatrix![0.0, 2.0, 1.0; 2.0, 0.0, 3.0; 1.0, 3.0, 5.0]);
        let eye = factor(DMatrix::identity(3, 3));
        assert!(objective(&a, &eye, None, Method::Pnmf).unwrap() < 1e-24);

        let h = disjoint_factor(6, 2, 3);
        let s = dmatrix![2.0, 0.5; 0.5, 3.0];
        let a = layer(&h * &s * h.transpose());
        let s = CentroidMatrix::new(s, SignMode::Nonnegative).unwrap();
        let v = objective(&a, &factor(h), Some(&s), Method::Snmtf).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_bad_inputs() {
        let a = two_blocks(2, 1.0);
        let h = init_factor(4, 2, 1).unwrap();
        assert_eq!(objective(&a, &h, None, Method::Snmtf), Err(SolveError::MissingCentroid));
        let short = init_factor(3, 2, 1).unwrap();
        assert!(matches!(
            objective(&a, &short, None, Method::Snmf),
            Err(SolveError::Matrix(MatrixError::ShapeMismatch { .. }))
        ));
    }

    #[test]
    fn snmf_fixed_point_on_constant_matrix() {
        let a = layer(DMatrix::from_element(2, 2, 1.0));
        let h = factor(DMatrix::from_element(2, 1, 1.0 / 2f64.sqrt()));
        let h2 = update_snmf(&h, &a, 1e-12).unwrap();
        assert!((h2.values() - h.values()).amax() < 1e-12);
        let zero = factor(DMatrix::zeros(2, 1));
        assert_eq!(update_snmf(&zero, &a, 1e-12).unwrap(), zero);
    }

    #[test]
    fn pnmf_fixed_points() {
        let eye = layer(DMatrix::identity(3, 3));
        let h = factor(DMatrix::identity(3, 3));
        let h2 = update_pnmf(&h, &eye, 1e-12).unwrap();
        assert!((h2.values() - h.values()).amax() < 1e-10);
        let zero = factor(DMatrix::zeros(3, 2));
        assert_eq!(update_pnmf(&zero, &eye, 1e-12).unwrap(), zero);
    }

    #[test]
    fn snmtf_fixed_point_and_zero_mixing() {
        let h = disjoint_factor(9, 3, 11);
        let s = dmatrix![3.0, 0.2, 0.1; 0.2, 2.0, 0.4; 0.1, 0.4, 1.5];
        let a = layer(&h * &s * h.transpose());
        let hf = factor(h.clone());
        let sf = CentroidMatrix::new(s.clone(), SignMode::Nonnegative).unwrap();
        let (h2, s2) = update_snmtf(&hf, &sf, &a, 1e-12).unwrap();
        assert!((h2.values() - &h).amax() < 1e-10);
        assert!((s2.values() - &s).amax() < 1e-10);

        let zero_s = CentroidMatrix::new(DMatrix::zeros(3, 3), SignMode::Nonnegative).unwrap();
        let (h3, _) = update_snmtf(&hf, &zero_s, &a, 1e-12).unwrap();
        assert_eq!(h3.values(), &DMatrix::zeros(9, 3));

        let mixed = CentroidMatrix::new(s, SignMode::Mixed).unwrap();
        assert_eq!(update_snmtf(&hf, &mixed, &a, 1e-12), Err(SolveError::SignModeMismatch));
    }

    #[test]
    fn ssnmtf_recovers_mixing_and_degenerates_without_negatives() {
        let h = disjoint_factor(8, 2, 5);
        let s = dmatrix![2.0, 0.3; 0.3, 1.0];
        let a = layer(&h * &s * h.transpose());
        let hf = factor(h.clone());
        let sf = CentroidMatrix::new(s.clone(), SignMode::Mixed).unwrap();
        let (_, s2) = update_ssnmtf(&hf, &sf, &a, 1e-12).unwrap();
        assert!((s2.values() - &s).amax() < 1e-10);

        // With P = AHS non-negative the split rule reduces to H ∘ P / (HHᵀP + ε).
        let a = random_graph(10, 0.4, 2);
        let h = init_factor(10, 3, 9).unwrap();
        let s = dmatrix![1.0, 0.2, 0.1; 0.2, 1.5, 0.3; 0.1, 0.3, 0.7];
        let sf = CentroidMatrix::new(s.clone(), SignMode::Mixed).unwrap();
        let (h2, _) = update_ssnmtf(&h, &sf, &a, 1e-12).unwrap();
        let p = a.values() * h.values() * &s;
        let expected = ratio_update(h.values(), &p, &(h.values() * (h.values().transpose() * &p)), 1e-12, 1.0);
        assert!((h2.values() - expected).amax() < 1e-12);
    }

    #[test]
    fn closed_form_uses_ridge_for_singular_gram() {
        let h = dmatrix![1.0, 1.0; 1.0, 1.0; 0.0, 0.0];
        let a = DMatrix::identity(3, 3);
        let s = closed_form_mixing(&h, &a);
        assert!(s.map(|m| m.iter().all(|v| v.is_finite())).unwrap_or(true));
    }

    #[test]
    fn block_diagonal_recovered_by_every_method() {
        let a = two_blocks(4, 1.0);
        for method in Method::ALL {
            let out = factorize(&a, method, &SolverConfig::new(2).with_seed(3)).unwrap();
            let labels = crate::fuse::hard_clustering(out.h.values()).unwrap();
            let l = labels.assignment.labels();
            assert!(l[..4].iter().all(|&x| x == l[0]), "{method}: {l:?}");
            assert!(l[4..].iter().all(|&x| x == l[4]), "{method}: {l:?}");
            assert_ne!(l[0], l[4], "{method}");
        }
    }

    #[test]
    fn iteration_cap_and_determinism() {
        let a = random_graph(12, 0.3, 4);
        for method in Method::ALL {
            let cfg = SolverConfig::new(3).with_seed(5).with_max_iters(1);
            let out = factorize(&a, method, &cfg).unwrap();
            assert_eq!(out.iterations, 1);
            assert!(!out.converged);
            let cfg = SolverConfig::new(3).with_seed(5);
            assert_eq!(factorize(&a, method, &cfg).unwrap(), factorize(&a, method, &cfg).unwrap());
        }
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let a = two_blocks(1, 1.0);
        assert!(factorize(&a, Method::Snmf, &SolverConfig::new(3)).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("nmf".parse::<Method>().is_err());
    }

    #[test]
    fn collapsed_columns_are_redrawn() {
        let mut rng = seeded_rng(1);
        let mut h = dmatrix![1.0, 0.0; 2.0, 1e-20; 3.0, 0.0];
        assert!(rescue_columns(&mut rng, &mut h, 1e-12));
        assert!(h.column(1).iter().all(|&v| v > 0.0));
        assert_eq!(h.column(0), dmatrix![1.0; 2.0; 3.0].column(0));
        assert!(!rescue_columns(&mut rng, &mut h, 1e-12));
    }

    fn assert_descends(trace: &[f64], slack: f64) -> Result<(), TestCaseError> {
        for w in trace.windows(2) {
            prop_assert!(w[1] <= w[0] + slack * w[0].abs(), "{} -> {}", w[0], w[1]);
        }
        Ok(())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn updates_preserve_nonnegativity(seed in any::<u64>(), n in 4usize..12, k in 1usize..4) {
            let a = random_graph(n, 0.4, seed);
            let h = init_factor(n, k, seed ^ 1).unwrap();
            let s = CentroidMatrix::new(initial_mixing(h.values(), a.values()), SignMode::Nonnegative).unwrap();
            let nonneg = |m: &DMatrix<f64>| m.iter().all(|&v| v >= 0.0);
            prop_assert!(nonneg(update_snmf(&h, &a, 1e-12).unwrap().values()));
            prop_assert!(nonneg(update_pnmf(&h, &a, 1e-12).unwrap().values()));
            let (h2, s2) = update_snmtf(&h, &s, &a, 1e-12).unwrap();
            prop_assert!(nonneg(h2.values()) && nonneg(s2.values()));
            let sm = CentroidMatrix::new(s.values().clone(), SignMode::Mixed).unwrap();
            if let Ok((h3, _)) = update_ssnmtf(&h, &sm, &a, 1e-12) {
                prop_assert!(nonneg(h3.values()));
            }
        }

        #[test]
        fn projective_and_tri_traces_descend(seed in any::<u64>()) {
            let a = random_graph(16, 0.35, seed);
            let cfg = SolverConfig::new(3).with_seed(seed).with_max_iters(150);
            for (method, slack) in [(Method::Pnmf, 1e-9), (Method::Snmtf, 1e-9), (Method::Ssnmtf, 1e-6)] {
                let out = factorize(&a, method, &cfg).unwrap();
                assert_descends(&out.objective_trace, slack)?;
            }
        }

        #[test]
        fn orthonormal_models_are_fixed_points(seed in any::<u64>(), n in 4usize..14, k in 1usize..4) {
            prop_assume!(k <= n);
            let h = disjoint_factor(n, k, seed);
            let a = layer(&h * h.transpose());
            let h2 = update_snmf(&factor(h.clone()), &a, 1e-12).unwrap();
            prop_assert!((h2.values() - &h).amax() <= 1e-10);

            let mut rng = seeded_rng(seed ^ 7);
            let s = DMatrix::from_fn(k, k, |_, _| 0.5 + rng.gen::<f64>());
            let s = (&s + s.transpose()) * 0.5;
            let a = layer(&h * &s * h.transpose());
            let sf = CentroidMatrix::new(s.clone(), SignMode::Nonnegative).unwrap();
            let (h3, s3) = update_snmtf(&factor(h.clone()), &sf, &a, 1e-12).unwrap();
            prop_assert!((h3.values() - &h).amax() <= 1e-10);
            prop_assert!((s3.values() - &s).amax() <= 1e-10 * s.amax());
        }

        #[test]
        fn labels_ignore_positive_rescaling(seed in 0u64..1000, scale in prop::sample::select(vec![0.5, 3.0, 100.0])) {
            let base = crate::synth::PlantedSpec::uniform(vec![10, 10], 0.8, 0.05, seed).unwrap();
            let a = crate::synth::generate_layer(&base).unwrap();
            let scaled = layer(a.values() * scale);
            for method in Method::ALL {
                let cfg = SolverConfig::new(2).with_seed(seed);
                let x = factorize(&a, method, &cfg).unwrap();
                let y = factorize(&scaled, method, &cfg).unwrap();
                let lx = crate::fuse::hard_clustering(x.h.values()).unwrap().assignment;
                let ly = crate::fuse::hard_clustering(y.h.values()).unwrap().assignment;
                prop_assert_eq!(lx, ly, "{}", method);
            }
        }
    }
}
