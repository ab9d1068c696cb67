//! Worst-case-expectation reformulation blocks.
//!
//! Three constructions share one public surface:
//!
//! * **Metric form** — the classical Wasserstein-ball reformulation with
//!   polytopal support handled by per-sample dual multipliers.
//! * **Copula full form** — the copula-restricted set. The inner maximization
//!   embeds each marginal-CDF evaluation as a small LP, replaces it by its
//!   optimality system (primal feasibility, dual feasibility with the dual
//!   variables capped at `vbar`, strong duality), relaxes the bilinear
//!   products with McCormick envelopes, and then dualizes the whole inner
//!   problem mechanically. Every inner row contributes one multiplier
//!   variable; every inner column contributes one stationarity row.
//! * **Copula projected form** — value-identical compression of the full
//!   form. Over a box support the inner problem separates per coordinate,
//!   and for each coordinate the feasible pairs (coordinate value, certified
//!   CDF level) form a 2-D polygon whose vertices are enumerable. The inner
//!   supremum is then a pointwise max over those vertices, which keeps
//!   OPF-scale models small. Equivalence with the full form is enforced by
//!   tests, not assumed.
//!
//! Chance constraints are wrapped through their worst-case CVaR
//! approximation: the hinge becomes one block whose per-sample constraint is
//! duplicated per affine piece, sharing the epigraph and norm-bound
//! variables.

use thiserror::Error;

use crate::lp::{
    LinExpr, ModelBuilder, ObjSense, RowId, SolveOptions, SolveResult, SolveStatus, SolverBackend,
    VarId,
};
use crate::model::{
    AffineUncertainExpression, AmbiguitySpec, GroundNorm, SupportPolytope, UncertaintyDataset,
};
use crate::stats::copula_pseudo_observations;

#[derive(Debug, Error)]
pub enum WceError {
    #[error("theta1 = {0} must be nonnegative")]
    NegativeTheta1(f64),
    #[error("ambiguity spec has no theta2; use the metric reformulation instead")]
    Theta2Missing,
    #[error("vbar = {0} must be positive")]
    InvalidVbar(f64),
    #[error("epsilon = {0} must lie strictly inside (0, 1)")]
    InvalidEpsilon(f64),
    #[error("chance constraint needs at least one affine piece")]
    NoPieces,
    #[error("McCormick relaxation requires finite bounds, got [{0}, {1}]")]
    UnboundedFactor(f64, f64),
    #[error("expression dimension {0} does not match dataset dimension {1}")]
    DimensionMismatch(usize, usize),
    #[error("projected form requires a box support")]
    NotABox,
    #[error("lp backend failed: {0}")]
    Backend(#[from] crate::lp::BackendError),
    #[error("lp solve ended with status {0:?}")]
    SolveStatus(SolveStatus),
}

/// Which reformulation produced a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WceForm {
    Metric,
    CopulaFull,
    CopulaProjected,
}

/// Dual multipliers of one piece of one block.
#[derive(Debug, Clone, Default)]
pub struct PieceDuals {
    /// Transport-distance duals, `[sample][dim]`.
    pub zeta1: Vec<Vec<VarId>>,
    /// Copula-distance duals, `[sample][dim]`; empty in the metric form.
    pub zeta2: Vec<Vec<VarId>>,
    /// Support-polytope multipliers, `[sample][support_row]`; metric form.
    pub gamma: Vec<Vec<VarId>>,
    /// Full copula form: one multiplier per inner row, `[sample][row]`.
    pub inner_row_duals: Vec<Vec<VarId>>,
    /// Full copula form: strong-duality multipliers, `[sample][dim]`.
    pub lambda: Vec<Vec<VarId>>,
    /// Projected copula form: per-coordinate epigraph variables,
    /// `[sample][dim]`.
    pub coord_sup: Vec<Vec<VarId>>,
}

/// One worst-case-expectation block wired into a model. The block's
/// `objective_contribution` upper-bounds the worst-case expectation of the
/// pointwise max of its pieces.
#[derive(Debug, Clone)]
pub struct WceBlock {
    pub form: WceForm,
    pub alpha: VarId,
    pub beta: Option<VarId>,
    pub y: Vec<VarId>,
    pub pieces: Vec<PieceDuals>,
    /// Copies of the piece expressions, for diagnostics and replay.
    pub piece_exprs: Vec<AffineUncertainExpression>,
    /// Projected form only: the per-coordinate polygons the cuts came from.
    pub polygons: Vec<Vec<PolyVertex>>,
    pub objective_contribution: LinExpr,
    /// Value of `vbar` the block was built with (copula forms).
    pub vbar: Option<f64>,
}

impl WceBlock {
    /// Flags an active dual-variable cap, which invalidates the relaxation
    /// and asks for a rebuild with a doubled `vbar`.
    pub fn vbar_cap_active(&self, result: &SolveResult, inner: Option<&InnerLp>) -> bool {
        match self.form {
            WceForm::Metric => false,
            WceForm::CopulaFull => {
                let Some(inner) = inner else { return false };
                self.pieces.iter().any(|p| {
                    p.inner_row_duals.iter().any(|sample| {
                        inner
                            .rows
                            .iter()
                            .zip(sample)
                            .any(|(row, &nu)| {
                                matches!(row.kind, InnerRowKind::SigUpper { .. })
                                    && result.value(nu) > 1e-7
                            })
                    })
                })
            }
            // Projected form: re-solve comparison is handled by the solve
            // wrapper, which always verifies value stability under doubling.
            WceForm::CopulaProjected => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Inner problem description (copula full form)
// ---------------------------------------------------------------------------

/// Column ordering of the per-sample inner problem: the uncertainty vector
/// first, then per (coordinate, sample-index) the CDF certificate variable,
/// its product proxy, the capped dual, its product proxy, and the dual upper
/// bound multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerCol {
    Xi { k: usize },
    Z { k: usize, j: usize },
    T { k: usize, j: usize },
    Sigma { k: usize, j: usize },
    V { k: usize, j: usize },
    Pi { k: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerRowKind {
    Support { r: usize },
    /// t >= z * sample value (primal feasibility of the CDF program).
    THat { k: usize, j: usize },
    TEnvLowerLo { k: usize, j: usize },
    TEnvLowerHi { k: usize, j: usize },
    TEnvUpperLo { k: usize, j: usize },
    TEnvUpperHi { k: usize, j: usize },
    ZUpper { k: usize, j: usize },
    ZLower { k: usize, j: usize },
    /// Dual feasibility of the CDF program with the product relaxed.
    DualFeas { k: usize, j: usize },
    VEnvLowerLo { k: usize, j: usize },
    VEnvLowerHi { k: usize, j: usize },
    VEnvUpperLo { k: usize, j: usize },
    VEnvUpperHi { k: usize, j: usize },
    SigUpper { k: usize, j: usize },
    SigLower { k: usize, j: usize },
    PiLower { k: usize, j: usize },
}

#[derive(Debug, Clone)]
pub struct InnerRow {
    pub kind: InnerRowKind,
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// The per-sample inner LP in `max c^T w : A w <= b, E w = 0` form. The
/// constraint data depends only on the dataset, support box and `vbar`, so
/// one instance serves every sample, piece and block.
#[derive(Debug, Clone)]
pub struct InnerLp {
    pub dim: usize,
    pub n: usize,
    pub rows: Vec<InnerRow>,
    /// Strong-duality equalities, one per coordinate.
    pub eqs: Vec<InnerRow>,
    pub ncols: usize,
    /// Transposed view: for each column, (row index, coef) over `rows`.
    pub col_rows: Vec<Vec<(usize, f64)>>,
    /// Transposed view over `eqs`.
    pub col_eqs: Vec<Vec<(usize, f64)>>,
    pub vbar: f64,
}

impl InnerLp {
    pub fn col_index(&self, c: InnerCol) -> usize {
        let (dim, n) = (self.dim, self.n);
        match c {
            InnerCol::Xi { k } => k,
            InnerCol::Z { k, j } => dim + k * n + j,
            InnerCol::T { k, j } => dim + dim * n + k * n + j,
            InnerCol::Sigma { k, j } => dim + 2 * dim * n + k * n + j,
            InnerCol::V { k, j } => dim + 3 * dim * n + k * n + j,
            InnerCol::Pi { k, j } => dim + 4 * dim * n + k * n + j,
        }
    }
}

/// Four McCormick envelope rows for `w ~ x*y` over a box, as
/// `(x_coef, y_coef, w_coef, rhs)` with sense `<=`.
fn envelope_coeffs(xlo: f64, xhi: f64, ylo: f64, yhi: f64) -> [(f64, f64, f64, f64); 4] {
    [
        (ylo, xlo, -1.0, xlo * ylo),
        (yhi, xhi, -1.0, xhi * yhi),
        (-ylo, -xhi, 1.0, -xhi * ylo),
        (-yhi, -xlo, 1.0, -xlo * yhi),
    ]
}

/// Builds the inner problem for the copula full form.
pub fn build_inner_lp(
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    vbar: f64,
) -> Result<InnerLp, WceError> {
    if vbar <= 0.0 {
        return Err(WceError::InvalidVbar(vbar));
    }
    let dim = ds.dim();
    let n = ds.sample_count();
    for k in 0..dim {
        if !sp.xi_min[k].is_finite() || !sp.xi_max[k].is_finite() {
            return Err(WceError::UnboundedFactor(sp.xi_min[k], sp.xi_max[k]));
        }
    }
    let ncols = dim + 5 * dim * n;
    let mut lp = InnerLp {
        dim,
        n,
        rows: Vec::with_capacity(sp.c.len() + 15 * dim * n),
        eqs: Vec::with_capacity(dim),
        ncols,
        col_rows: vec![Vec::new(); ncols],
        col_eqs: vec![Vec::new(); ncols],
        vbar,
    };
    let xi = |k: usize| k;
    let zc = |k: usize, j: usize| dim + k * n + j;
    let tc = |k: usize, j: usize| dim + dim * n + k * n + j;
    let sc = |k: usize, j: usize| dim + 2 * dim * n + k * n + j;
    let vc = |k: usize, j: usize| dim + 3 * dim * n + k * n + j;
    let pc = |k: usize, j: usize| dim + 4 * dim * n + k * n + j;

    for (r, row) in sp.c.iter().enumerate() {
        let coeffs: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| (xi(k), c))
            .collect();
        lp.rows.push(InnerRow { kind: InnerRowKind::Support { r }, coeffs, rhs: sp.d[r] });
    }

    for k in 0..dim {
        let (lo, hi) = (sp.xi_min[k], sp.xi_max[k]);
        for j in 0..n {
            let xhat = ds.sample(j)[k];
            // t >= z * xhat  (z-side primal feasibility, product relaxed)
            lp.rows.push(InnerRow {
                kind: InnerRowKind::THat { k, j },
                coeffs: vec![(zc(k, j), xhat), (tc(k, j), -1.0)],
                rhs: 0.0,
            });
            let env = envelope_coeffs(lo, hi, 0.0, 1.0);
            let kinds = [
                InnerRowKind::TEnvLowerLo { k, j },
                InnerRowKind::TEnvLowerHi { k, j },
                InnerRowKind::TEnvUpperHi { k, j },
                InnerRowKind::TEnvUpperLo { k, j },
            ];
            for (idx, &(cx, cy, cw, rhs)) in env.iter().enumerate() {
                let mut coeffs = Vec::with_capacity(3);
                if cx != 0.0 {
                    coeffs.push((xi(k), cx));
                }
                if cy != 0.0 {
                    coeffs.push((zc(k, j), cy));
                }
                coeffs.push((tc(k, j), cw));
                lp.rows.push(InnerRow { kind: kinds[idx], coeffs, rhs });
            }
            lp.rows.push(InnerRow {
                kind: InnerRowKind::ZUpper { k, j },
                coeffs: vec![(zc(k, j), 1.0)],
                rhs: 1.0,
            });
            lp.rows.push(InnerRow {
                kind: InnerRowKind::ZLower { k, j },
                coeffs: vec![(zc(k, j), -1.0)],
                rhs: 0.0,
            });
            // 1/N + v - sigma*xhat - pi <= 0  (dual feasibility, relaxed)
            lp.rows.push(InnerRow {
                kind: InnerRowKind::DualFeas { k, j },
                coeffs: vec![(vc(k, j), 1.0), (sc(k, j), -xhat), (pc(k, j), -1.0)],
                rhs: -1.0 / n as f64,
            });
            let venv = envelope_coeffs(lo, hi, 0.0, vbar);
            let vkinds = [
                InnerRowKind::VEnvLowerLo { k, j },
                InnerRowKind::VEnvLowerHi { k, j },
                InnerRowKind::VEnvUpperHi { k, j },
                InnerRowKind::VEnvUpperLo { k, j },
            ];
            for (idx, &(cx, cy, cw, rhs)) in venv.iter().enumerate() {
                let mut coeffs = Vec::with_capacity(3);
                if cx != 0.0 {
                    coeffs.push((xi(k), cx));
                }
                if cy != 0.0 {
                    coeffs.push((sc(k, j), cy));
                }
                coeffs.push((vc(k, j), cw));
                lp.rows.push(InnerRow { kind: vkinds[idx], coeffs, rhs });
            }
            lp.rows.push(InnerRow {
                kind: InnerRowKind::SigUpper { k, j },
                coeffs: vec![(sc(k, j), 1.0)],
                rhs: vbar,
            });
            lp.rows.push(InnerRow {
                kind: InnerRowKind::SigLower { k, j },
                coeffs: vec![(sc(k, j), -1.0)],
                rhs: 0.0,
            });
            lp.rows.push(InnerRow {
                kind: InnerRowKind::PiLower { k, j },
                coeffs: vec![(pc(k, j), -1.0)],
                rhs: 0.0,
            });
        }
        // Strong duality: (1/N) sum_j z = sum_j pi.
        let mut coeffs = Vec::with_capacity(2 * n);
        for j in 0..n {
            coeffs.push((zc(k, j), 1.0 / n as f64));
            coeffs.push((pc(k, j), -1.0));
        }
        lp.eqs.push(InnerRow { kind: InnerRowKind::Support { r: usize::MAX }, coeffs, rhs: 0.0 });
    }

    for (r, row) in lp.rows.iter().enumerate() {
        for &(c, v) in &row.coeffs {
            lp.col_rows[c].push((r, v));
        }
    }
    for (e, row) in lp.eqs.iter().enumerate() {
        for &(c, v) in &row.coeffs {
            lp.col_eqs[c].push((e, v));
        }
    }
    Ok(lp)
}

// ---------------------------------------------------------------------------
// Block construction
// ---------------------------------------------------------------------------

/// Adds the dual-norm rows `||components||_* <= bound` for the dual of the
/// ground norm, linearized per the ground-norm choice.
fn dual_norm_rows(
    model: &mut ModelBuilder,
    components: &[LinExpr],
    bound: VarId,
    ground: GroundNorm,
) {
    match ground {
        // Dual of the 1-norm is the infinity norm: componentwise bounds.
        GroundNorm::OneNorm => {
            for comp in components {
                let mut up = comp.clone();
                up.push(bound, -1.0);
                model.le(up, 0.0);
                let mut dn = comp.clone() * -1.0;
                dn.push(bound, -1.0);
                model.le(dn, 0.0);
            }
        }
        // Dual of the infinity norm is the 1-norm: absolute-value split.
        GroundNorm::InfNorm => {
            let mut sum = LinExpr::new();
            for comp in components {
                let s = model.free_var();
                let mut up = comp.clone();
                up.push(s, -1.0);
                model.le(up, 0.0);
                let mut dn = comp.clone() * -1.0;
                dn.push(s, -1.0);
                model.le(dn, 0.0);
                sum.push(s, 1.0);
            }
            sum.push(bound, -1.0);
            model.le(sum, 0.0);
        }
    }
}

fn check_pieces(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
) -> Result<(), WceError> {
    if pieces.is_empty() {
        return Err(WceError::NoPieces);
    }
    for p in pieces {
        if p.dim() != ds.dim() {
            return Err(WceError::DimensionMismatch(p.dim(), ds.dim()));
        }
    }
    Ok(())
}

/// Metric-ball reformulation over a polytopal support: per sample, one
/// epigraph row with support multipliers and a dual-norm bound tying the
/// uncertainty loading to the transport budget multiplier.
pub fn reformulate_wce_m1(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    theta1: f64,
    model: &mut ModelBuilder,
) -> Result<WceBlock, WceError> {
    if theta1 < 0.0 {
        return Err(WceError::NegativeTheta1(theta1));
    }
    check_pieces(pieces, ds)?;
    let n = ds.sample_count();
    let dim = ds.dim();
    let nsupport = sp.c.len();

    let alpha = model.nonneg_var();
    let y: Vec<VarId> = (0..n).map(|_| model.free_var()).collect();
    let mut piece_duals = Vec::with_capacity(pieces.len());

    for piece in pieces {
        let mut duals = PieceDuals::default();
        if piece.is_constant_in_xi() {
            // Constant piece: the support shift is optimal at zero, so the
            // epigraph row collapses to y_i >= b(x).
            for &yi in &y {
                let mut row = LinExpr::var(yi);
                row.add_scaled(&piece.b, -1.0);
                model.ge(row, 0.0);
            }
            piece_duals.push(duals);
            continue;
        }
        for i in 0..n {
            let xhat = ds.sample(i);
            let gamma: Vec<VarId> = (0..nsupport).map(|_| model.nonneg_var()).collect();
            // y_i >= a(x)^T xhat_i + b(x) + gamma^T (D - C xhat_i)
            let mut row = LinExpr::var(y[i]);
            for (k, a_k) in piece.a.iter().enumerate() {
                row.add_scaled(a_k, -xhat[k]);
            }
            row.add_scaled(&piece.b, -1.0);
            for (r, &g) in gamma.iter().enumerate() {
                let slack = sp.d[r] - sp.c[r].iter().zip(xhat).map(|(c, x)| c * x).sum::<f64>();
                row.push(g, -slack);
            }
            model.ge(row, 0.0);
            // || a(x) - C^T gamma ||_* <= alpha
            let comps: Vec<LinExpr> = (0..dim)
                .map(|k| {
                    let mut u = piece.a[k].clone();
                    for (r, &g) in gamma.iter().enumerate() {
                        u.push(g, -sp.c[r][k]);
                    }
                    u
                })
                .collect();
            dual_norm_rows(model, &comps, alpha, GroundNorm::OneNorm);
            duals.gamma.push(gamma);
        }
        piece_duals.push(duals);
    }

    let mut contribution = LinExpr::term(alpha, theta1);
    for &yi in &y {
        contribution.push(yi, 1.0 / n as f64);
    }
    Ok(WceBlock {
        form: WceForm::Metric,
        alpha,
        beta: None,
        y,
        pieces: piece_duals,
        piece_exprs: pieces.to_vec(),
        polygons: Vec::new(),
        objective_contribution: contribution,
        vbar: None,
    })
}

// The metric form above always linearizes with the one-norm ground metric's
// dual; the ground norm is threaded through the copula builders below, where
// the caller's ambiguity spec carries it. The metric entry point with an
// explicit spec lives in `reformulate_wce_m1_spec`.

/// Metric form honoring the spec's ground norm.
pub fn reformulate_wce_m1_spec(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    model: &mut ModelBuilder,
) -> Result<WceBlock, WceError> {
    if spec.ground_norm == GroundNorm::OneNorm {
        return reformulate_wce_m1(pieces, ds, sp, spec.theta1, model);
    }
    // Re-run the construction with the alternate dual norm.
    if spec.theta1 < 0.0 {
        return Err(WceError::NegativeTheta1(spec.theta1));
    }
    check_pieces(pieces, ds)?;
    let n = ds.sample_count();
    let dim = ds.dim();
    let alpha = model.nonneg_var();
    let y: Vec<VarId> = (0..n).map(|_| model.free_var()).collect();
    let mut piece_duals = Vec::with_capacity(pieces.len());
    for piece in pieces {
        let mut duals = PieceDuals::default();
        if piece.is_constant_in_xi() {
            for &yi in &y {
                let mut row = LinExpr::var(yi);
                row.add_scaled(&piece.b, -1.0);
                model.ge(row, 0.0);
            }
            piece_duals.push(duals);
            continue;
        }
        for i in 0..n {
            let xhat = ds.sample(i);
            let gamma: Vec<VarId> = (0..sp.c.len()).map(|_| model.nonneg_var()).collect();
            let mut row = LinExpr::var(y[i]);
            for (k, a_k) in piece.a.iter().enumerate() {
                row.add_scaled(a_k, -xhat[k]);
            }
            row.add_scaled(&piece.b, -1.0);
            for (r, &g) in gamma.iter().enumerate() {
                let slack = sp.d[r] - sp.c[r].iter().zip(xhat).map(|(c, x)| c * x).sum::<f64>();
                row.push(g, -slack);
            }
            model.ge(row, 0.0);
            let comps: Vec<LinExpr> = (0..dim)
                .map(|k| {
                    let mut u = piece.a[k].clone();
                    for (r, &g) in gamma.iter().enumerate() {
                        u.push(g, -sp.c[r][k]);
                    }
                    u
                })
                .collect();
            dual_norm_rows(model, &comps, alpha, spec.ground_norm);
            duals.gamma.push(gamma);
        }
        piece_duals.push(duals);
    }
    let mut contribution = LinExpr::term(alpha, spec.theta1);
    for &yi in &y {
        contribution.push(yi, 1.0 / n as f64);
    }
    Ok(WceBlock {
        form: WceForm::Metric,
        alpha,
        beta: None,
        y,
        pieces: piece_duals,
        piece_exprs: pieces.to_vec(),
        polygons: Vec::new(),
        objective_contribution: contribution,
        vbar: None,
    })
}

/// Full copula-form block: mechanical dual of the per-sample inner problem.
pub fn reformulate_wce_m2(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    vbar: f64,
    model: &mut ModelBuilder,
) -> Result<WceBlock, WceError> {
    let theta2 = spec.theta2.ok_or(WceError::Theta2Missing)?;
    if spec.theta1 < 0.0 {
        return Err(WceError::NegativeTheta1(spec.theta1));
    }
    check_pieces(pieces, ds)?;
    let inner = build_inner_lp(ds, sp, vbar)?;
    let n = ds.sample_count();
    let dim = ds.dim();
    let fhat = copula_pseudo_observations(ds);

    let alpha = model.nonneg_var();
    let beta = model.nonneg_var();
    let y: Vec<VarId> = (0..n).map(|_| model.free_var()).collect();
    let mut piece_duals = Vec::with_capacity(pieces.len());

    for piece in pieces {
        let mut duals = PieceDuals::default();
        if piece.is_constant_in_xi() {
            for &yi in &y {
                let mut row = LinExpr::var(yi);
                row.add_scaled(&piece.b, -1.0);
                model.ge(row, 0.0);
            }
            piece_duals.push(duals);
            continue;
        }
        for i in 0..n {
            let xhat = ds.sample(i);
            let zeta1: Vec<VarId> = (0..dim).map(|_| model.free_var()).collect();
            let zeta2: Vec<VarId> = (0..dim).map(|_| model.free_var()).collect();
            let nu: Vec<VarId> = (0..inner.rows.len()).map(|_| model.nonneg_var()).collect();
            let lam: Vec<VarId> = (0..inner.eqs.len()).map(|_| model.free_var()).collect();

            // Stationarity: one equality per inner column,
            //   A^T nu + E^T lam = inner objective coefficient.
            for col in 0..inner.ncols {
                let mut row = LinExpr::new();
                for &(r, v) in &inner.col_rows[col] {
                    row.push(nu[r], v);
                }
                for &(e, v) in &inner.col_eqs[col] {
                    row.push(lam[e], v);
                }
                if col < dim {
                    // xi_k column: coefficient a_k(x) + zeta1_ik.
                    row.add_scaled(&piece.a[col], -1.0);
                    row.push(zeta1[col], -1.0);
                } else if col < dim + dim * n {
                    // z_{k,j} column: coefficient zeta2_ik / N.
                    let k = (col - dim) / n;
                    row.push(zeta2[k], -1.0 / n as f64);
                }
                model.eq(row, 0.0);
            }
            // Epigraph: y_i >= b(x) - zeta1^T xhat_i - zeta2^T F(xhat_i) + rhs^T nu.
            let mut row = LinExpr::var(y[i]);
            row.add_scaled(&piece.b, -1.0);
            for k in 0..dim {
                row.push(zeta1[k], xhat[k]);
                row.push(zeta2[k], fhat[i][k]);
            }
            for (r, &nr) in nu.iter().enumerate() {
                row.push(nr, -inner.rows[r].rhs);
            }
            model.ge(row, 0.0);

            let comps1: Vec<LinExpr> = zeta1.iter().map(|&z| LinExpr::var(z)).collect();
            dual_norm_rows(model, &comps1, alpha, spec.ground_norm);
            let comps2: Vec<LinExpr> = zeta2.iter().map(|&z| LinExpr::var(z)).collect();
            dual_norm_rows(model, &comps2, beta, spec.ground_norm);

            duals.zeta1.push(zeta1);
            duals.zeta2.push(zeta2);
            duals.inner_row_duals.push(nu);
            duals.lambda.push(lam);
        }
        piece_duals.push(duals);
    }

    let mut contribution = LinExpr::term(alpha, spec.theta1);
    contribution.push(beta, theta2);
    for &yi in &y {
        contribution.push(yi, 1.0 / n as f64);
    }
    Ok(WceBlock {
        form: WceForm::CopulaFull,
        alpha,
        beta: Some(beta),
        y,
        pieces: piece_duals,
        piece_exprs: pieces.to_vec(),
        polygons: Vec::new(),
        objective_contribution: contribution,
        vbar: Some(vbar),
    })
}

// ---------------------------------------------------------------------------
// Projected copula form
// ---------------------------------------------------------------------------

/// One vertex of the per-coordinate feasible polygon. `vbar_sensitive`
/// vertices move when the dual cap changes; a solution leaning on one of
/// them triggers the cap post-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyVertex {
    pub x: f64,
    pub z: f64,
    pub vbar_sensitive: bool,
}

/// Vertices of the feasible (coordinate value, certified CDF level) polygon
/// for one coordinate. The upper chain is the concave McCormick envelope of
/// the step CDF; the lower chain is the convex level forced by the capped
/// dual certificate. Both chains are piecewise linear with enumerable
/// breakpoints.
pub fn coordinate_polygon(
    samples: &[f64],
    lo: f64,
    hi: f64,
    vbar: f64,
) -> Vec<PolyVertex> {
    let n = samples.len();
    let nf = n as f64;
    if hi - lo < 1e-12 {
        return vec![PolyVertex { x: lo, z: 1.0, vbar_sensitive: false }];
    }
    let width = hi - lo;
    let upper = |x: f64| -> f64 {
        samples
            .iter()
            .map(|&s| {
                if s - lo < 1e-15 {
                    1.0
                } else {
                    ((x - lo) / (s - lo)).min(1.0)
                }
            })
            .sum::<f64>()
            / nf
    };
    let lower = |x: f64| -> f64 {
        samples
            .iter()
            .map(|&s| (1.0 / nf - vbar * (s - lo) * (hi - x) / width).max(0.0))
            .sum::<f64>()
    };
    let mut xs: Vec<f64> = vec![lo, hi];
    for &s in samples {
        if s > lo + 1e-15 && s < hi - 1e-15 {
            xs.push(s);
        }
        // Lower-chain kink: where the capped certificate term activates.
        if s > lo + 1e-15 {
            let x = hi - width / (nf * vbar * (s - lo));
            if x > lo + 1e-15 && x < hi - 1e-15 {
                xs.push(x);
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    // A small dual cap can force the certified level above the envelope on
    // the low end of the range: those coordinates are infeasible inside the
    // inner problem. The gap (concave minus convex) is piecewise linear, so
    // the feasible stretch is one interval ending at the top of the range;
    // clip to it, inserting the exact crossing.
    let gaps: Vec<f64> = xs.iter().map(|&x| upper(x) - lower(x)).collect();
    let first_ok = gaps.iter().position(|&d| d >= -1e-12).unwrap_or(xs.len() - 1);
    let mut clipped: Vec<(f64, bool)> = Vec::with_capacity(xs.len() + 1);
    let mut was_clipped = false;
    if first_ok > 0 && gaps[first_ok] > 1e-12 {
        let (x0, x1) = (xs[first_ok - 1], xs[first_ok]);
        let (d0, d1) = (gaps[first_ok - 1], gaps[first_ok]);
        let cross = x0 + (x1 - x0) * (-d0) / (d1 - d0);
        if cross > x0 + 1e-14 && cross < x1 - 1e-14 {
            clipped.push((cross, true));
            was_clipped = true;
        }
    }
    if first_ok > 0 && !was_clipped {
        was_clipped = true;
    }
    clipped.extend(xs[first_ok..].iter().map(|&x| (x, false)));
    let _ = was_clipped;

    let mut verts: Vec<PolyVertex> = Vec::with_capacity(2 * clipped.len());
    for &(x, crossing) in &clipped {
        let (u, l) = (upper(x), lower(x));
        verts.push(PolyVertex { x, z: u, vbar_sensitive: crossing });
        if l < u - 1e-12 {
            // Lower-chain points with an active certificate term shift when
            // the cap changes; flat-zero stretches and the top corner do not.
            let sensitive = l > 1e-12 && x < hi - 1e-12;
            verts.push(PolyVertex { x, z: l.min(u), vbar_sensitive: sensitive });
        }
    }
    verts.dedup_by(|a, b| (a.x - b.x).abs() < 1e-14 && (a.z - b.z).abs() < 1e-12);
    verts
}

fn require_box(sp: &SupportPolytope, dim: usize) -> Result<(), WceError> {
    // The projected form exploits per-coordinate separability, which needs
    // pure box rows.
    if sp.c.len() != 2 * dim {
        return Err(WceError::NotABox);
    }
    for (r, row) in sp.c.iter().enumerate() {
        let expect_k = r % dim;
        let expect_v = if r < dim { 1.0 } else { -1.0 };
        for (k, &v) in row.iter().enumerate() {
            let want = if k == expect_k { expect_v } else { 0.0 };
            if (v - want).abs() > 1e-12 {
                return Err(WceError::NotABox);
            }
        }
    }
    Ok(())
}

/// Projected copula-form block: value-identical to [`reformulate_wce_m2`]
/// with per-coordinate vertex cuts instead of the full dual.
pub fn reformulate_wce_m2_projected(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    vbar: f64,
    model: &mut ModelBuilder,
) -> Result<WceBlock, WceError> {
    let theta2 = spec.theta2.ok_or(WceError::Theta2Missing)?;
    if spec.theta1 < 0.0 {
        return Err(WceError::NegativeTheta1(spec.theta1));
    }
    if vbar <= 0.0 {
        return Err(WceError::InvalidVbar(vbar));
    }
    check_pieces(pieces, ds)?;
    let dim = ds.dim();
    let n = ds.sample_count();
    require_box(sp, dim)?;
    for k in 0..dim {
        if !sp.xi_min[k].is_finite() || !sp.xi_max[k].is_finite() {
            return Err(WceError::UnboundedFactor(sp.xi_min[k], sp.xi_max[k]));
        }
    }
    let fhat = copula_pseudo_observations(ds);
    let polygons: Vec<Vec<PolyVertex>> = (0..dim)
        .map(|k| coordinate_polygon(&ds.column(k), sp.xi_min[k], sp.xi_max[k], vbar))
        .collect();

    let alpha = model.nonneg_var();
    let beta = model.nonneg_var();
    let y: Vec<VarId> = (0..n).map(|_| model.free_var()).collect();
    let mut piece_duals = Vec::with_capacity(pieces.len());

    for piece in pieces {
        let mut duals = PieceDuals::default();
        if piece.is_constant_in_xi() {
            for &yi in &y {
                let mut row = LinExpr::var(yi);
                row.add_scaled(&piece.b, -1.0);
                model.ge(row, 0.0);
            }
            piece_duals.push(duals);
            continue;
        }
        for i in 0..n {
            let xhat = ds.sample(i);
            let zeta1: Vec<VarId> = (0..dim).map(|_| model.free_var()).collect();
            let zeta2: Vec<VarId> = (0..dim).map(|_| model.free_var()).collect();
            let sup: Vec<VarId> = (0..dim).map(|_| model.free_var()).collect();
            // Per-coordinate epigraph over the polygon vertices:
            //   sup_k >= X_v * (a_k(x) + zeta1_ik) + Z_v * zeta2_ik.
            for k in 0..dim {
                for v in &polygons[k] {
                    let mut row = LinExpr::var(sup[k]);
                    row.add_scaled(&piece.a[k], -v.x);
                    row.push(zeta1[k], -v.x);
                    row.push(zeta2[k], -v.z);
                    model.ge(row, 0.0);
                }
            }
            // y_i >= b(x) - zeta1^T xhat - zeta2^T F(xhat) + sum_k sup_k.
            let mut row = LinExpr::var(y[i]);
            row.add_scaled(&piece.b, -1.0);
            for k in 0..dim {
                row.push(zeta1[k], xhat[k]);
                row.push(zeta2[k], fhat[i][k]);
                row.push(sup[k], -1.0);
            }
            model.ge(row, 0.0);

            let comps1: Vec<LinExpr> = zeta1.iter().map(|&z| LinExpr::var(z)).collect();
            dual_norm_rows(model, &comps1, alpha, spec.ground_norm);
            let comps2: Vec<LinExpr> = zeta2.iter().map(|&z| LinExpr::var(z)).collect();
            dual_norm_rows(model, &comps2, beta, spec.ground_norm);

            duals.zeta1.push(zeta1);
            duals.zeta2.push(zeta2);
            duals.coord_sup.push(sup);
        }
        piece_duals.push(duals);
    }

    let mut contribution = LinExpr::term(alpha, spec.theta1);
    contribution.push(beta, theta2);
    for &yi in &y {
        contribution.push(yi, 1.0 / n as f64);
    }
    Ok(WceBlock {
        form: WceForm::CopulaProjected,
        alpha,
        beta: Some(beta),
        y,
        pieces: piece_duals,
        piece_exprs: pieces.to_vec(),
        polygons,
        objective_contribution: contribution,
        vbar: Some(vbar),
    })
}

/// Dispatches on the ambiguity spec and requested form.
pub fn add_wce_block(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    vbar: f64,
    projected: bool,
    model: &mut ModelBuilder,
) -> Result<WceBlock, WceError> {
    match (spec.is_copula(), projected) {
        (false, _) => reformulate_wce_m1_spec(pieces, ds, sp, spec, model),
        (true, false) => reformulate_wce_m2(pieces, ds, sp, spec, vbar, model),
        (true, true) => reformulate_wce_m2_projected(pieces, ds, sp, spec, vbar, model),
    }
}

// ---------------------------------------------------------------------------
// McCormick utility
// ---------------------------------------------------------------------------

/// Adds the four standard envelope inequalities for the product `x * y` over
/// the given box and returns the proxy variable.
pub fn mccormick_envelope(
    x: VarId,
    y: VarId,
    x_bounds: (f64, f64),
    y_bounds: (f64, f64),
    model: &mut ModelBuilder,
) -> Result<VarId, WceError> {
    let (xlo, xhi) = x_bounds;
    let (ylo, yhi) = y_bounds;
    if !xlo.is_finite() || !xhi.is_finite() || xlo > xhi {
        return Err(WceError::UnboundedFactor(xlo, xhi));
    }
    if !ylo.is_finite() || !yhi.is_finite() || ylo > yhi {
        return Err(WceError::UnboundedFactor(ylo, yhi));
    }
    let w = model.free_var();
    for (cx, cy, cw, rhs) in envelope_coeffs(xlo, xhi, ylo, yhi) {
        let mut row = LinExpr::new();
        row.push(x, cx).push(y, cy).push(w, cw);
        model.le(row, rhs);
    }
    Ok(w)
}

// ---------------------------------------------------------------------------
// CVaR wrapping of distributionally robust chance constraints
// ---------------------------------------------------------------------------

/// A chance constraint: the pointwise max of the affine pieces must stay
/// nonpositive with probability at least `1 - epsilon` under every
/// distribution in the ambiguity set.
#[derive(Debug, Clone)]
pub struct DrccSpec {
    pub pieces: Vec<AffineUncertainExpression>,
    pub epsilon: f64,
}

/// Handles of one CVaR-approximated chance constraint.
#[derive(Debug, Clone)]
pub struct CvarDrcc {
    pub tau: VarId,
    pub block: WceBlock,
    pub row: RowId,
}

/// Replaces the chance constraint by its worst-case CVaR sufficient
/// condition: `tau + (1/eps) * WCE[max(pieces - tau, 0)] <= 0`. The hinge's
/// zero branch and each shifted piece all share the block's epigraph.
pub fn cvar_drcc(
    drcc: &DrccSpec,
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    vbar: f64,
    projected: bool,
    model: &mut ModelBuilder,
) -> Result<CvarDrcc, WceError> {
    if !(drcc.epsilon > 0.0 && drcc.epsilon < 1.0) {
        return Err(WceError::InvalidEpsilon(drcc.epsilon));
    }
    if drcc.pieces.is_empty() {
        return Err(WceError::NoPieces);
    }
    let tau = model.free_var();
    let mut hinge_pieces: Vec<AffineUncertainExpression> = Vec::with_capacity(drcc.pieces.len() + 1);
    for p in &drcc.pieces {
        let mut b = p.b.clone();
        b.push(tau, -1.0);
        hinge_pieces.push(AffineUncertainExpression::new(p.a.clone(), b));
    }
    hinge_pieces.push(AffineUncertainExpression::numeric(&vec![0.0; ds.dim()], 0.0));

    let block = add_wce_block(&hinge_pieces, ds, sp, spec, vbar, projected, model)?;

    let mut row = LinExpr::var(tau);
    row.add_scaled(&block.objective_contribution, 1.0 / drcc.epsilon);
    let row_id = model.le(row, 0.0);
    Ok(CvarDrcc { tau, block, row: row_id })
}

// ---------------------------------------------------------------------------
// Standalone block solves with the vbar post-check
// ---------------------------------------------------------------------------

/// Default dual-variable cap: generous relative to the equiprobable mass.
pub fn default_vbar(n: usize) -> f64 {
    10.0 / n as f64
}

/// Smallest cap (among doublings of `floor`) whose certificate envelope
/// contains the whole closed graph of every marginal step CDF: just below
/// each distinct sample value the forced level must not exceed the previous
/// step. Containment makes the relaxed feasible set a superset of the exact
/// one, so the block value stays a valid upper bound at this cap.
pub fn containment_vbar(ds: &UncertaintyDataset, sp: &SupportPolytope, floor: f64) -> f64 {
    let n = ds.sample_count();
    let nf = n as f64;
    let mut vbar = floor;
    'outer: for _ in 0..40 {
        for k in 0..ds.dim() {
            let (lo, hi) = (sp.xi_min[k], sp.xi_max[k]);
            let width = hi - lo;
            if width < 1e-12 {
                continue;
            }
            let mut col = ds.column(k);
            col.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            let forced = |x: f64| -> f64 {
                col.iter()
                    .map(|&s| (1.0 / nf - vbar * (s - lo) * (hi - x) / width).max(0.0))
                    .sum()
            };
            // Walk the distinct values; `below` counts samples strictly
            // under the current one, i.e. the CDF level just left of it.
            let mut idx = 0;
            while idx < n {
                let s = col[idx];
                let below = idx;
                if s > lo + 1e-15 && forced(s) > below as f64 / nf + 1e-9 {
                    vbar *= 2.0;
                    continue 'outer;
                }
                while idx < n && (col[idx] - s).abs() < 1e-15 {
                    idx += 1;
                }
            }
        }
        return vbar;
    }
    vbar
}

#[derive(Debug, Clone)]
pub struct WceSolveReport {
    pub value: f64,
    pub vbar_used: f64,
    pub doublings: u32,
    pub cap_warning: bool,
}

/// Solves the worst-case expectation of fixed-coefficient pieces as a
/// standalone model. The dual-variable cap is post-checked: while the cap is
/// active or the value still moves, `vbar` doubles (six times at most) and
/// the block is rebuilt, mirroring the documented remedy for an artificial
/// bound contaminating the relaxation.
pub fn solve_wce_value(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    vbar0: f64,
    projected: bool,
    backend: &dyn SolverBackend,
) -> Result<WceSolveReport, WceError> {
    solve_wce_detailed(pieces, ds, sp, spec, vbar0, projected, backend).map(|(r, _, _)| r)
}

/// As [`solve_wce_value`], additionally returning the final block handles
/// and raw solver result for tightness diagnostics.
///
/// The cap escalates only on a certified divergence (an unbounded dual means
/// the capped certificate system excludes the empirical copula itself);
/// starting from the containment floor this should not trigger.
pub fn solve_wce_detailed(
    pieces: &[AffineUncertainExpression],
    ds: &UncertaintyDataset,
    sp: &SupportPolytope,
    spec: &AmbiguitySpec,
    vbar0: f64,
    projected: bool,
    backend: &dyn SolverBackend,
) -> Result<(WceSolveReport, WceBlock, SolveResult), WceError> {
    let mut vbar = vbar0;
    let mut doublings = 0;
    loop {
        let mut model = ModelBuilder::new();
        let block = add_wce_block(pieces, ds, sp, spec, vbar, projected, &mut model)?;
        model.set_objective(ObjSense::Minimize, block.objective_contribution.clone());
        let res = backend.solve(&model, &SolveOptions::default())?;
        match res.status {
            SolveStatus::Optimal => {
                let report = WceSolveReport {
                    value: res.objective_value.expect("optimal"),
                    vbar_used: vbar,
                    doublings,
                    cap_warning: false,
                };
                return Ok((report, block, res));
            }
            SolveStatus::Unbounded if spec.is_copula() && doublings < 6 => {
                vbar *= 2.0;
                doublings += 1;
            }
            other => return Err(WceError::SolveStatus(other)),
        }
    }
}

/// Re-solves the inner maximization for one sample at fixed dual values,
/// recovering the worst-case point and its CDF certificate. Used to measure
/// relaxation tightness on desk-scale instances.
pub fn recover_inner_solution(
    inner: &InnerLp,
    a: &[f64],
    zeta1: &[f64],
    zeta2: &[f64],
    backend: &dyn SolverBackend,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, f64), WceError> {
    let mut m = ModelBuilder::new();
    let vars: Vec<VarId> = (0..inner.ncols).map(|_| m.free_var()).collect();
    for row in &inner.rows {
        let mut e = LinExpr::new();
        for &(c, v) in &row.coeffs {
            e.push(vars[c], v);
        }
        m.le(e, row.rhs);
    }
    for eq in &inner.eqs {
        let mut e = LinExpr::new();
        for &(c, v) in &eq.coeffs {
            e.push(vars[c], v);
        }
        m.eq(e, eq.rhs);
    }
    let mut obj = LinExpr::new();
    for k in 0..inner.dim {
        obj.push(vars[inner.col_index(InnerCol::Xi { k })], a[k] + zeta1[k]);
        for j in 0..inner.n {
            obj.push(
                vars[inner.col_index(InnerCol::Z { k, j })],
                zeta2[k] / inner.n as f64,
            );
        }
    }
    m.set_objective(ObjSense::Maximize, obj);
    let res = backend.solve(&m, &SolveOptions::default())?;
    if res.status != SolveStatus::Optimal {
        return Err(WceError::SolveStatus(res.status));
    }
    let xi: Vec<f64> =
        (0..inner.dim).map(|k| res.value(vars[inner.col_index(InnerCol::Xi { k })])).collect();
    let z: Vec<Vec<f64>> = (0..inner.dim)
        .map(|k| {
            (0..inner.n)
                .map(|j| res.value(vars[inner.col_index(InnerCol::Z { k, j })]))
                .collect()
        })
        .collect();
    Ok((xi, z, res.objective_value.expect("optimal")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;
    use crate::model::AmbiguitySpec;
    use crate::transport::oracle_worst_case_expectation;

    fn backend() -> DenseSimplex {
        DenseSimplex::default()
    }

    fn ds_1d(samples: &[f64], mu: f64) -> UncertaintyDataset {
        UncertaintyDataset::new(
            samples.iter().map(|&s| vec![s]).collect(),
            vec![mu],
            vec![1.0],
        )
        .unwrap()
    }

    fn numeric_piece(a: &[f64], b: f64) -> Vec<AffineUncertainExpression> {
        vec![AffineUncertainExpression::numeric(a, b)]
    }

    fn sample_average(a: &[f64], b: f64, ds: &UncertaintyDataset) -> f64 {
        let n = ds.sample_count() as f64;
        ds.deviations()
            .iter()
            .map(|row| a.iter().zip(row).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
            .sum::<f64>()
            / n
    }

    #[test]
    fn m1_zero_radius_is_sample_average() {
        let ds = ds_1d(&[-0.2, 0.1, 0.25], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::metric(0.0).unwrap();
        let rep = solve_wce_value(
            &numeric_piece(&[1.5], 0.3),
            &ds,
            &sp,
            &spec,
            default_vbar(3),
            false,
            &backend(),
        )
        .unwrap();
        let sa = sample_average(&[1.5], 0.3, &ds);
        assert!((rep.value - sa).abs() < 1e-9, "{} vs {}", rep.value, sa);
    }

    #[test]
    fn m1_zero_loading_is_constant() {
        let ds = ds_1d(&[-0.2, 0.1], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::metric(0.7).unwrap();
        let rep = solve_wce_value(
            &numeric_piece(&[0.0], 2.5),
            &ds,
            &sp,
            &spec,
            default_vbar(2),
            false,
            &backend(),
        )
        .unwrap();
        assert!((rep.value - 2.5).abs() < 1e-9);
    }

    #[test]
    fn m1_matches_oracle_on_desk_instance() {
        let ds = ds_1d(&[-0.15, 0.05, 0.2], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::metric(0.05).unwrap();
        let rep = solve_wce_value(
            &numeric_piece(&[1.0], 0.0),
            &ds,
            &sp,
            &spec,
            default_vbar(3),
            false,
            &backend(),
        )
        .unwrap();
        let oracle = oracle_worst_case_expectation(&[1.0], 0.0, &ds, &sp, &spec, 15, &backend())
            .unwrap()
            .value()
            .unwrap();
        assert!(
            (rep.value - oracle).abs() < 1e-5,
            "reformulation {} vs oracle {}",
            rep.value,
            oracle
        );
    }

    #[test]
    fn m1_negative_radius_is_typed_error() {
        let ds = ds_1d(&[0.0], 0.5);
        let sp = ds.implied_support();
        let mut model = ModelBuilder::new();
        match reformulate_wce_m1(&numeric_piece(&[1.0], 0.0), &ds, &sp, -0.1, &mut model) {
            Err(WceError::NegativeTheta1(_)) => {}
            other => panic!("expected NegativeTheta1, got {other:?}"),
        }
    }

    #[test]
    fn m2_requires_theta2() {
        let ds = ds_1d(&[0.0], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::metric(0.1).unwrap();
        let mut model = ModelBuilder::new();
        match reformulate_wce_m2(&numeric_piece(&[1.0], 0.0), &ds, &sp, &spec, 1.0, &mut model) {
            Err(WceError::Theta2Missing) => {}
            other => panic!("expected Theta2Missing, got {other:?}"),
        }
        match reformulate_wce_m2(
            &numeric_piece(&[1.0], 0.0),
            &ds,
            &sp,
            &AmbiguitySpec::copula(0.1, 0.1).unwrap(),
            -1.0,
            &mut model,
        ) {
            Err(WceError::InvalidVbar(_)) => {}
            other => panic!("expected InvalidVbar, got {other:?}"),
        }
    }

    #[test]
    fn m2_wide_copula_ball_matches_m1() {
        let ds = ds_1d(&[-0.2, 0.0, 0.15, 0.3], 0.5);
        let sp = ds.implied_support();
        let a = [1.2];
        let b = 0.1;
        let m1 = solve_wce_value(
            &numeric_piece(&a, b),
            &ds,
            &sp,
            &AmbiguitySpec::metric(0.04).unwrap(),
            default_vbar(4),
            false,
            &backend(),
        )
        .unwrap();
        // theta2 >= dim bounds the copula distance trivially under one-norm.
        let m2 = solve_wce_value(
            &numeric_piece(&a, b),
            &ds,
            &sp,
            &AmbiguitySpec::copula(0.04, 1.0).unwrap(),
            default_vbar(4),
            false,
            &backend(),
        )
        .unwrap();
        assert!((m1.value - m2.value).abs() < 1e-5, "m1 {} vs m2 {}", m1.value, m2.value);
    }

    #[test]
    fn m2_both_radii_collapsed_is_sample_average() {
        let ds = ds_1d(&[-0.1, 0.2], 0.4);
        let sp = ds.implied_support();
        let a = [0.8];
        let b = -0.2;
        let rep = solve_wce_value(
            &numeric_piece(&a, b),
            &ds,
            &sp,
            &AmbiguitySpec::copula(0.0, 1.0).unwrap(),
            default_vbar(2),
            false,
            &backend(),
        )
        .unwrap();
        let sa = sample_average(&a, b, &ds);
        assert!((rep.value - sa).abs() < 1e-7, "{} vs {}", rep.value, sa);
    }

    #[test]
    fn m2_brackets_oracle_from_above() {
        let ds = ds_1d(&[-0.1, 0.15], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::copula(0.1, 0.05).unwrap();
        let a = [1.0];
        let rep = solve_wce_value(
            &numeric_piece(&a, 0.0),
            &ds,
            &sp,
            &spec,
            default_vbar(2),
            false,
            &backend(),
        )
        .unwrap();
        let oracle = oracle_worst_case_expectation(&a, 0.0, &ds, &sp, &spec, 15, &backend())
            .unwrap()
            .value()
            .unwrap();
        assert!(
            rep.value >= oracle - 1e-6,
            "reformulation {} must dominate oracle {}",
            rep.value,
            oracle
        );
    }

    #[test]
    fn projected_form_equals_full_form() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        let be = backend();
        for trial in 0..12 {
            let dim = rng.random_range(1..=2);
            let n = rng.random_range(2..=4);
            let mu: Vec<f64> = (0..dim).map(|_| rng.random_range(0.3..0.7)).collect();
            let deviations: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    (0..dim)
                        .map(|k| rng.random_range(-mu[k] * 0.8..(1.0 - mu[k]) * 0.8))
                        .collect()
                })
                .collect();
            let ds = UncertaintyDataset::new(deviations, mu, vec![1.0; dim]).unwrap();
            let sp = ds.implied_support();
            let spec = AmbiguitySpec::copula(
                rng.random_range(0.0..0.2),
                rng.random_range(0.005..0.4),
            )
            .unwrap();
            let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.5..1.5)).collect();
            let b = rng.random_range(-0.5..0.5);
            let vbar = rng.random_range(0.5..4.0) / n as f64;
            let full = solve_wce_value(&numeric_piece(&a, b), &ds, &sp, &spec, vbar, false, &be)
                .unwrap();
            let proj = solve_wce_value(&numeric_piece(&a, b), &ds, &sp, &spec, vbar, true, &be)
                .unwrap();
            assert!(
                (full.value - proj.value).abs() < 1e-6,
                "trial {trial}: full {} vs projected {}",
                full.value,
                proj.value
            );
        }
    }

    #[test]
    fn block_value_dominates_sample_average_and_is_monotone() {
        let ds = ds_1d(&[-0.25, -0.05, 0.1, 0.3], 0.5);
        let sp = ds.implied_support();
        let a = [1.0];
        let b = 0.0;
        let sa = sample_average(&a, b, &ds);
        let be = backend();
        let mut prev = f64::NEG_INFINITY;
        for theta1 in [0.0, 0.02, 0.05, 0.1] {
            let spec = AmbiguitySpec::copula(theta1, 0.08).unwrap();
            let rep =
                solve_wce_value(&numeric_piece(&a, b), &ds, &sp, &spec, default_vbar(4), false, &be)
                    .unwrap();
            assert!(rep.value >= sa - 1e-9, "lower bound violated: {} < {}", rep.value, sa);
            assert!(rep.value >= prev - 1e-8, "theta1 monotonicity violated");
            prev = rep.value;
        }
        prev = f64::NEG_INFINITY;
        for theta2 in [0.01, 0.05, 0.2, 1.0] {
            let spec = AmbiguitySpec::copula(0.08, theta2).unwrap();
            let rep =
                solve_wce_value(&numeric_piece(&a, b), &ds, &sp, &spec, default_vbar(4), false, &be)
                    .unwrap();
            assert!(rep.value >= prev - 1e-8, "theta2 monotonicity violated");
            prev = rep.value;
        }
    }

    #[test]
    fn m2_value_stays_below_m1_plus_relaxation() {
        // The copula restriction can only shrink the ambiguity set; up to the
        // relaxation the copula value must not exceed the metric value.
        let ds = ds_1d(&[-0.2, 0.0, 0.2], 0.5);
        let sp = ds.implied_support();
        let a = [1.0];
        let be = backend();
        let m1 = solve_wce_value(
            &numeric_piece(&a, 0.0),
            &ds,
            &sp,
            &AmbiguitySpec::metric(0.08).unwrap(),
            default_vbar(3),
            false,
            &be,
        )
        .unwrap();
        let m2 = solve_wce_value(
            &numeric_piece(&a, 0.0),
            &ds,
            &sp,
            &AmbiguitySpec::copula(0.08, 0.03).unwrap(),
            default_vbar(3),
            false,
            &be,
        )
        .unwrap();
        assert!(m2.value <= m1.value + 1e-6, "m2 {} vs m1 {}", m2.value, m1.value);
    }

    #[test]
    fn mccormick_fixed_factor_is_exact() {
        let be = backend();
        let mut m = ModelBuilder::new();
        let x = m.add_var(0.7, 0.7);
        let y = m.add_var(0.0, 1.0);
        let w = mccormick_envelope(x, y, (0.7, 0.7), (0.0, 1.0), &mut m).unwrap();
        m.eq(LinExpr::var(y), 0.6);
        m.set_objective(ObjSense::Minimize, LinExpr::var(w));
        let lo = be.solve(&m, &SolveOptions::default()).unwrap();
        m.set_objective(ObjSense::Maximize, LinExpr::var(w));
        let hi = be.solve(&m, &SolveOptions::default()).unwrap();
        assert!((lo.objective_value.unwrap() - 0.42).abs() < 1e-9);
        assert!((hi.objective_value.unwrap() - 0.42).abs() < 1e-9);
    }

    #[test]
    fn mccormick_binary_factor_is_exact() {
        let be = backend();
        for yv in [0.0, 1.0] {
            let mut m = ModelBuilder::new();
            let x = m.add_var(-0.4, 0.9);
            let y = m.add_var(0.0, 1.0);
            let w = mccormick_envelope(x, y, (-0.4, 0.9), (0.0, 1.0), &mut m).unwrap();
            m.eq(LinExpr::var(y), yv);
            m.eq(LinExpr::var(x), 0.3);
            m.set_objective(ObjSense::Maximize, LinExpr::var(w));
            let r = be.solve(&m, &SolveOptions::default()).unwrap();
            assert!((r.objective_value.unwrap() - 0.3 * yv).abs() < 1e-9);
        }
    }

    #[test]
    fn mccormick_gap_bounded_on_interior_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let be = backend();
        let (xlo, xhi) = (-1.0, 1.0);
        let (ylo, yhi) = (0.0, 2.0);
        let max_gap = (xhi - xlo) * (yhi - ylo) / 4.0;
        for _ in 0..20 {
            let xv = rng.random_range(xlo..xhi);
            let yv = rng.random_range(ylo..yhi);
            let mut m = ModelBuilder::new();
            let x = m.add_var(xlo, xhi);
            let y = m.add_var(ylo, yhi);
            let w = mccormick_envelope(x, y, (xlo, xhi), (ylo, yhi), &mut m).unwrap();
            m.eq(LinExpr::var(x), xv);
            m.eq(LinExpr::var(y), yv);
            m.set_objective(ObjSense::Maximize, LinExpr::var(w));
            let hi = be.solve(&m, &SolveOptions::default()).unwrap().objective_value.unwrap();
            m.set_objective(ObjSense::Minimize, LinExpr::var(w));
            let lo = be.solve(&m, &SolveOptions::default()).unwrap().objective_value.unwrap();
            let product = xv * yv;
            assert!(lo <= product + 1e-9 && product <= hi + 1e-9, "envelope must contain product");
            // One-sided proxy deviation from the true product is bounded by
            // a quarter of the box area.
            assert!(hi - product <= max_gap + 1e-9, "upper gap {} exceeds {max_gap}", hi - product);
            assert!(product - lo <= max_gap + 1e-9, "lower gap {} exceeds {max_gap}", product - lo);
        }
    }

    #[test]
    fn mccormick_unbounded_factor_is_typed_error() {
        let mut m = ModelBuilder::new();
        let x = m.free_var();
        let y = m.add_var(0.0, 1.0);
        match mccormick_envelope(x, y, (f64::NEG_INFINITY, 1.0), (0.0, 1.0), &mut m) {
            Err(WceError::UnboundedFactor(_, _)) => {}
            other => panic!("expected UnboundedFactor, got {other:?}"),
        }
    }

    #[test]
    fn cvar_constant_negative_piece_is_feasible() {
        let ds = ds_1d(&[-0.1, 0.1], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::copula(0.05, 0.05).unwrap();
        let mut m = ModelBuilder::new();
        let drcc = DrccSpec { pieces: vec![AffineUncertainExpression::numeric(&[0.0], -1.0)], epsilon: 0.1 };
        cvar_drcc(&drcc, &ds, &sp, &spec, default_vbar(2), false, &mut m).unwrap();
        m.set_objective(ObjSense::Minimize, LinExpr::constant(0.0));
        let r = backend().solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
    }

    #[test]
    fn cvar_empirically_safe_piece_is_feasible_at_zero_radii() {
        // Samples all at least 0.05 below the threshold, zero radii: the
        // empirical CVaR is negative for any epsilon.
        let ds = ds_1d(&[-0.3, -0.2, -0.1], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::copula(0.0, 0.0).unwrap();
        for eps in [0.5, 0.2, 0.05] {
            let mut m = ModelBuilder::new();
            let drcc = DrccSpec {
                pieces: vec![AffineUncertainExpression::numeric(&[1.0], 0.05)],
                epsilon: eps,
            };
            cvar_drcc(&drcc, &ds, &sp, &spec, default_vbar(3), false, &mut m).unwrap();
            m.set_objective(ObjSense::Minimize, LinExpr::constant(0.0));
            let r = backend().solve(&m, &SolveOptions::default()).unwrap();
            assert_eq!(r.status, SolveStatus::Optimal, "eps {eps}");
        }
    }

    #[test]
    fn cvar_epsilon_validation() {
        let ds = ds_1d(&[0.0], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::metric(0.1).unwrap();
        let mut m = ModelBuilder::new();
        let drcc = DrccSpec {
            pieces: vec![AffineUncertainExpression::numeric(&[1.0], 0.0)],
            epsilon: 1.0,
        };
        match cvar_drcc(&drcc, &ds, &sp, &spec, 1.0, false, &mut m) {
            Err(WceError::InvalidEpsilon(_)) => {}
            other => panic!("expected InvalidEpsilon, got {other:?}"),
        }
    }

    #[test]
    fn cvar_boundary_matches_oracle_on_1d_toy() {
        // Find the largest threshold c for which the CVaR row admits a
        // feasible point, and compare with the oracle's zero crossing.
        let ds = ds_1d(&[-0.15, -0.05, 0.05, 0.12], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::copula(0.02, 0.05).unwrap();
        let eps = 0.05;
        let be = backend();
        let vbar = default_vbar(4);

        let reform_cvar = |c: f64| -> f64 {
            // min tau + (1/eps) * block for the loss xi - c.
            let mut m = ModelBuilder::new();
            let tau = m.free_var();
            let mut b = LinExpr::constant(-c);
            b.push(tau, -1.0);
            let pieces = vec![
                AffineUncertainExpression::new(vec![LinExpr::constant(1.0)], b),
                AffineUncertainExpression::numeric(&[0.0], 0.0),
            ];
            let block = add_wce_block(&pieces, &ds, &sp, &spec, vbar, false, &mut m).unwrap();
            let mut obj = LinExpr::var(tau);
            obj.add_scaled(&block.objective_contribution, 1.0 / eps);
            m.set_objective(ObjSense::Minimize, obj);
            be.solve(&m, &SolveOptions::default()).unwrap().objective_value.unwrap()
        };
        // Bisection on the reformulated worst-case CVaR's zero crossing.
        let (mut lo_c, mut hi_c) = (0.0, 0.6);
        assert!(reform_cvar(lo_c) > 0.0 && reform_cvar(hi_c) < 0.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo_c + hi_c);
            if reform_cvar(mid) > 0.0 {
                lo_c = mid;
            } else {
                hi_c = mid;
            }
        }
        let c_reform = 0.5 * (lo_c + hi_c);

        let oracle_cvar = |c: f64| -> f64 {
            crate::transport::oracle_worst_case_cvar(&[1.0], -c, eps, &ds, &sp, &spec, 13, &be)
                .unwrap()
                .unwrap()
        };
        let (mut lo_c, mut hi_c) = (0.0, 0.6);
        for _ in 0..40 {
            let mid = 0.5 * (lo_c + hi_c);
            if oracle_cvar(mid) > 0.0 {
                lo_c = mid;
            } else {
                hi_c = mid;
            }
        }
        let c_oracle = 0.5 * (lo_c + hi_c);
        assert!(
            (c_reform - c_oracle).abs() < 1e-4,
            "reform boundary {} vs oracle boundary {}",
            c_reform,
            c_oracle
        );
    }

    #[test]
    fn decision_variable_pieces_wire_into_the_model() {
        // One decision variable scales the loading; minimizing the block
        // value drives it to the cheapest robust choice.
        let ds = ds_1d(&[-0.2, 0.2], 0.5);
        let sp = ds.implied_support();
        let spec = AmbiguitySpec::copula(0.05, 0.1).unwrap();
        let mut m = ModelBuilder::new();
        let scale = m.add_var(0.5, 2.0);
        let piece = AffineUncertainExpression::new(
            vec![LinExpr::var(scale)],
            LinExpr::constant(0.0),
        );
        let block =
            add_wce_block(&[piece], &ds, &sp, &spec, default_vbar(2), false, &mut m).unwrap();
        m.set_objective(ObjSense::Minimize, block.objective_contribution.clone());
        let r = backend().solve(&m, &SolveOptions::default()).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        // The worst-case expectation of scale * xi grows with scale, so the
        // optimum sits at the lower bound.
        assert!((r.value(scale) - 0.5).abs() < 1e-6);
    }
}
