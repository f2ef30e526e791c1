//! Transfer matrices, the matrix Pruefer phase and its phase velocity.
//!
//! The Pruefer phase `U_N^E` is the stereographic projection of the frame
//! `M_N^E ⋯ M_1^E (1; 0)`. The raw product grows exponentially in `N`, so the
//! production path iterates the Möbius action of `C·M_n^E·C*` site by site,
//! carrying `∂_E U` along by the quotient rule. Every stored object stays
//! bounded. The raw product is kept as an oracle for short chains.

use alloc::vec::Vec;

use crate::krein::{
    cayley_conjugate, guarded_right_divide, stereographic_i, LagrangianFrame, DENOMINATOR_FLOOR,
};
use crate::linalg::{
    c64, defect_of_gram, eigenvalues, factor_in_place, gemm_adjoint_left_into, gemm_into,
    hermitian_eigen, inverse, ldl_inertia_in_place, operator_norm, orthonormalize_columns,
    polar_projection, solve_packed, ComplexMatrix, I, ONE,
};
use crate::model::{normalized_trace, BlockJacobi};
use crate::{Error, Result};

/// `U` is re-projected onto the unitary group once its defect exceeds this.
pub const REUNITARIZE_THRESHOLD: f64 = 1e-9;
/// Target defect of the polar projection.
pub const PROJECTION_TARGET: f64 = 1e-13;
/// Smallest eigenvalue of `S` tolerated before reporting `NotPositive`.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Longest chain evaluated through raw transfer products.
pub const RAW_PRODUCT_MAX_SITES: usize = 12;

/// `M = [[(E−V)T⁻¹, −T*], [T⁻¹, 0]]` and `∂_E M = [[T⁻¹, 0], [0, 0]]`.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub matrix: ComplexMatrix,
    pub derivative: ComplexMatrix,
    pub energy: f64,
    /// 1-based site, or 0 when built from bare blocks.
    pub site: usize,
}

pub fn transfer_matrix(
    energy: f64,
    v: &ComplexMatrix,
    t: &ComplexMatrix,
) -> Result<TransferMatrix> {
    let tinv = inverse(t)?;
    let m = v.rows();
    let zero = ComplexMatrix::zeros(m, m);
    let e_minus_v = v.scale_real(-1.0).shift_diagonal(c64::new(energy, 0.0));
    let matrix = ComplexMatrix::from_blocks(&(&e_minus_v * &tinv), &-&t.adjoint(), &tinv, &zero);
    let derivative = ComplexMatrix::from_blocks(&tinv, &zero, &zero, &zero);
    Ok(TransferMatrix {
        matrix,
        derivative,
        energy,
        site: 0,
    })
}

/// Transfer matrix of site `n` (1-based) of `j`.
pub fn site_transfer(j: &BlockJacobi, energy: f64, site: usize) -> Result<TransferMatrix> {
    if !(1..=j.len()).contains(&site) {
        return Err(Error::IndexOutOfRange {
            index: site,
            len: j.len(),
        });
    }
    let mut tm = transfer_matrix(energy, j.potential(site), j.hopping(site))?;
    tm.site = site;
    Ok(tm)
}

/// A polar re-projection of `U` after consuming `site`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionEvent {
    pub site: usize,
    /// Defect before projection.
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct PrueferState {
    pub u: ComplexMatrix,
    /// `∂_E U`.
    pub du: ComplexMatrix,
    pub energy: f64,
    /// Sites consumed so far.
    pub sites: usize,
    pub defect_log: Vec<ProjectionEvent>,
}

impl PrueferState {
    /// `U = 1`, `∂_E U = 0`, the projection of the reference frame.
    pub fn initial(m: usize, energy: f64) -> Self {
        Self {
            u: ComplexMatrix::identity(m),
            du: ComplexMatrix::zeros(m, m),
            energy,
            sites: 0,
            defect_log: Vec::new(),
        }
    }

    pub fn fiber(&self) -> usize {
        self.u.rows()
    }

    fn reunitarize(&mut self) -> Result<()> {
        let m = self.fiber();
        let mut gram = ComplexMatrix::zeros(m, m);
        gemm_adjoint_left_into(&mut gram, &self.u, &self.u);
        let defect = defect_of_gram(&gram);
        if !defect.is_finite() {
            return Err(Error::NonFinite);
        }
        if defect > REUNITARIZE_THRESHOLD {
            self.u = polar_projection(&self.u, PROJECTION_TARGET)?;
            self.defect_log.push(ProjectionEvent {
                site: self.sites,
                defect,
            });
        }
        Ok(())
    }
}

/// One site of the recursion, `U ↦ G·U` with `G = C·M·C*`, and the matching
/// derivative update.
pub fn pruefer_step(state: &PrueferState, tm: &TransferMatrix) -> Result<PrueferState> {
    let m = state.fiber();
    if tm.matrix.rows() != 2 * m {
        return Err(Error::ShapeMismatch(
            "transfer matrix and state differ in fiber size".into(),
        ));
    }
    let g = cayley_conjugate(&tm.matrix);
    let dg = cayley_conjugate(&tm.derivative);
    let blk = |x: &ComplexMatrix, r: usize, c: usize| x.block(r * m, c * m, m, m);
    let (a, b, c, d) = (blk(&g, 0, 0), blk(&g, 0, 1), blk(&g, 1, 0), blk(&g, 1, 1));
    let (da, db, dc, dd) = (
        blk(&dg, 0, 0),
        blk(&dg, 0, 1),
        blk(&dg, 1, 0),
        blk(&dg, 1, 1),
    );
    let (u, du) = (&state.u, &state.du);

    let num = &(&a * u) + &b;
    let den = &(&c * u) + &d;
    let (u_new, den_inv) = guarded_right_divide(&num, &den, 1.0)?;
    let dnum = &(&(&da * u) + &(&a * du)) + &db;
    let dden = &(&(&dc * u) + &(&c * du)) + &dd;
    let du_new = &(&dnum - &(&u_new * &dden)) * &den_inv;

    let mut next = PrueferState {
        u: u_new,
        du: du_new,
        energy: state.energy,
        sites: state.sites + 1,
        defect_log: state.defect_log.clone(),
    };
    next.reunitarize()?;
    Ok(next)
}

enum SiteData {
    /// `T = 1`: only `−V` and the spectrum of `V` are needed.
    Identity {
        minus_v: ComplexMatrix,
        v_eigs: Vec<f64>,
    },
    General {
        tinv: ComplexMatrix,
        /// `−V·T⁻¹`.
        p: ComplexMatrix,
        /// `T* + T⁻¹`.
        q_plus: ComplexMatrix,
        /// `T* − T⁻¹`.
        q_minus: ComplexMatrix,
        /// `(T·T*)⁻¹`.
        r: ComplexMatrix,
        /// `T*⁻¹·V·T⁻¹`.
        b: ComplexMatrix,
    },
}

struct Workspace {
    w1: ComplexMatrix,
    x: ComplexMatrix,
    num: ComplexMatrix,
    den: ComplexMatrix,
    inv: ComplexMatrix,
    eye: ComplexMatrix,
    dnum: ComplexMatrix,
    dden: ComplexMatrix,
    tmp: ComplexMatrix,
    d2: ComplexMatrix,
    k1: ComplexMatrix,
    y: ComplexMatrix,
    perm: Vec<usize>,
}

impl Workspace {
    fn new(m: usize) -> Self {
        let z = ComplexMatrix::zeros(m, m);
        Self {
            w1: z.clone(),
            x: z.clone(),
            num: z.clone(),
            den: z.clone(),
            inv: z.clone(),
            eye: ComplexMatrix::identity(m),
            dnum: z.clone(),
            dden: z.clone(),
            tmp: z.clone(),
            d2: z.clone(),
            k1: z.clone(),
            y: z,
            perm: Vec::with_capacity(m),
        }
    }
}

/// `a += z·b`, elementwise.
fn axpy(a: &mut ComplexMatrix, z: c64, b: &ComplexMatrix) {
    for (x, &y) in a.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x += z * y;
    }
}

fn add_diag(a: &mut ComplexMatrix, z: c64) {
    for i in 0..a.rows() {
        a[(i, i)] += z;
    }
}

/// Precomputed per-site data for repeated evaluation of the Pruefer phase
/// of one operator at many energies.
pub struct PrueferChain {
    m: usize,
    sites: Vec<SiteData>,
    /// Chain with conjugated blocks; `None` when all blocks are real.
    conjugate: Option<alloc::boxed::Box<PrueferChain>>,
}

/// The Pruefer phase together with the continuous branch of `arg det U`.
#[derive(Debug, Clone)]
pub struct LiftedPhase {
    pub state: PrueferState,
    /// `Θ(E)`, the lift of `arg det U_N^E` that vanishes as `E → −∞`.
    pub theta: f64,
}

impl LiftedPhase {
    /// `Θ/(2π·N·m)`.
    pub fn rotation(&self) -> f64 {
        let nm = (self.state.sites * self.state.u.rows()) as f64;
        self.theta / (2.0 * core::f64::consts::PI * nm)
    }
}

impl PrueferChain {
    pub fn new(j: &BlockJacobi) -> Result<Self> {
        let mut chain = Self::without_conjugate(j)?;
        if !j
            .potentials()
            .iter()
            .chain(j.hoppings())
            .all(ComplexMatrix::is_real)
        {
            let conj = |b: &[ComplexMatrix]| b.iter().map(ComplexMatrix::conj).collect();
            let jc = BlockJacobi::new(conj(j.potentials()), conj(j.hoppings()))?;
            chain.conjugate = Some(alloc::boxed::Box::new(Self::without_conjugate(&jc)?));
        }
        Ok(chain)
    }

    fn without_conjugate(j: &BlockJacobi) -> Result<Self> {
        let m = j.fiber();
        let one = ComplexMatrix::identity(m);
        let sites = (1..=j.len())
            .map(|n| {
                let (v, t) = (j.potential(n), j.hopping(n));
                if *t == one {
                    return Ok(SiteData::Identity {
                        minus_v: v.scale_real(-1.0),
                        v_eigs: hermitian_eigen(v)?.eigenvalues,
                    });
                }
                let tinv = inverse(t)?;
                let t_adj = t.adjoint();
                let tinv_adj = tinv.adjoint();
                Ok(SiteData::General {
                    p: &v.scale_real(-1.0) * &tinv,
                    q_plus: &t_adj + &tinv,
                    q_minus: &t_adj - &tinv,
                    r: &tinv_adj * &tinv,
                    b: &(&tinv_adj * v) * &tinv,
                    tinv,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            sites,
            conjugate: None,
        })
    }

    pub fn fiber(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Runs the recursion over all sites at `energy`.
    pub fn phase(&self, energy: f64) -> Result<PrueferState> {
        let mut state = PrueferState::initial(self.m, energy);
        let mut ws = Workspace::new(self.m);
        for site in &self.sites {
            step_fast(&mut state, site, &mut ws)?;
            state.sites += 1;
            state.reunitarize()?;
        }
        Ok(state)
    }

    pub fn velocity(&self, energy: f64) -> Result<PhaseVelocity> {
        phase_velocity(&self.phase(energy)?)
    }

    /// Runs the recursion and also returns `Θ(E)`.
    ///
    /// With `Y_n = a_n + i·b_n` for the frame `(a_n; b_n)` one has
    /// `Y_n = ½·Den_n·Y_{n−1}`, so `det Y_N` is a product of per-site factors
    /// that never vanish for real `E`. Each factor splits as
    /// `det(2D_n)·det(1 + K_n)` with `‖K_n‖ < 1`; the eigenvalues of
    /// `T_n*⁻¹·2D_n` lie in the upper half plane and those of `1 + K_n` in the
    /// right half plane, so summing principal arguments over eigenvalues gives
    /// the continuous branch without any integration in `E`. The lower frame
    /// combination satisfies `det(a − ib)(E) = conj(det Ȳ(E))` where `Ȳ`
    /// belongs to the conjugated blocks, hence `Θ = −(arg det Y + arg det Ȳ)`.
    pub fn lifted(&self, energy: f64) -> Result<LiftedPhase> {
        let (state, sum) = self.run_lifted(energy)?;
        let other = match &self.conjugate {
            None => sum,
            Some(c) => c.run_lifted(energy)?.1,
        };
        Ok(LiftedPhase {
            state,
            theta: -(sum + other),
        })
    }

    /// `arg det Y_N` minus its limit `N·m·π` at `E → −∞` (constant phases of
    /// `det T_n` cancel and are dropped).
    fn run_lifted(&self, energy: f64) -> Result<(PrueferState, f64)> {
        let mut state = PrueferState::initial(self.m, energy);
        let mut ws = Workspace::new(self.m);
        let mut sum = 0.0;
        for site in &self.sites {
            sum += step_fast_lifted(&mut state, site, &mut ws)?;
            state.sites += 1;
            state.reunitarize()?;
        }
        Ok((
            state,
            sum - core::f64::consts::PI * (self.sites.len() * self.m) as f64,
        ))
    }
}

fn step_fast_lifted(state: &mut PrueferState, site: &SiteData, ws: &mut Workspace) -> Result<f64> {
    let e = state.energy;
    let mut arg = 0.0;
    build_den(state, site, ws);
    // arg det(T*⁻¹·2D), 2D being the denominator at U = 0.
    ws.d2.copy_from(&ws.x);
    match site {
        SiteData::Identity { v_eigs, .. } => {
            add_diag(&mut ws.d2, c64::new(0.0, 2.0));
            arg += v_eigs.iter().map(|&v| libm::atan2(2.0, e - v)).sum::<f64>();
        }
        SiteData::General { q_plus, r, b, .. } => {
            axpy(&mut ws.d2, I, q_plus);
            ws.y.copy_from(r);
            for (y, &bb) in ws.y.as_mut_slice().iter_mut().zip(b.as_slice()) {
                *y = *y * c64::new(e, 1.0) - bb;
            }
            add_diag(&mut ws.y, I);
            arg += eigenvalues(&ws.y)?.iter().map(|z| z.arg()).sum::<f64>();
        }
    }
    factor_in_place(&mut ws.d2, &mut ws.perm)?;
    solve_packed(&ws.d2, &ws.perm, &ws.den, &mut ws.k1);
    arg += eigenvalues(&ws.k1)?.iter().map(|z| z.arg()).sum::<f64>();
    finish_step(state, site, ws)?;
    Ok(arg)
}

/// Möbius step with the factor ½ of the Cayley blocks cancelled:
/// `U' = [X(U+1) − iQ₊U + iQ₋]·[X(U+1) − iQ₋U + iQ₊]⁻¹` with `X = (E−V)T⁻¹`.
fn step_fast(state: &mut PrueferState, site: &SiteData, ws: &mut Workspace) -> Result<()> {
    build_den(state, site, ws);
    finish_step(state, site, ws)
}

/// Fills `x`, `w1 = U + 1`, `num` and `den`.
fn build_den(state: &PrueferState, site: &SiteData, ws: &mut Workspace) {
    let e = state.energy;
    ws.w1.copy_from(&state.u);
    add_diag(&mut ws.w1, ONE);
    match site {
        SiteData::Identity { minus_v, .. } => {
            ws.x.copy_from(minus_v);
            add_diag(&mut ws.x, c64::new(e, 0.0));
            gemm_into(&mut ws.num, &ws.x, &ws.w1);
            ws.den.copy_from(&ws.num);
            add_diag(&mut ws.den, c64::new(0.0, 2.0));
            axpy(&mut ws.num, c64::new(0.0, -2.0), &state.u);
        }
        SiteData::General {
            tinv,
            p,
            q_plus,
            q_minus,
            ..
        } => {
            ws.x.copy_from(p);
            axpy(&mut ws.x, c64::new(e, 0.0), tinv);
            gemm_into(&mut ws.num, &ws.x, &ws.w1);
            ws.den.copy_from(&ws.num);
            gemm_into(&mut ws.tmp, q_plus, &state.u);
            axpy(&mut ws.num, -I, &ws.tmp);
            axpy(&mut ws.den, I, q_plus);
            gemm_into(&mut ws.tmp, q_minus, &state.u);
            axpy(&mut ws.den, -I, &ws.tmp);
            axpy(&mut ws.num, I, q_minus);
        }
    }
}

fn finish_step(state: &mut PrueferState, site: &SiteData, ws: &mut Workspace) -> Result<()> {
    // Den⁻¹ from one LU factorization; `den` is overwritten by its factors.
    factor_in_place(&mut ws.den, &mut ws.perm)
        .map_err(|_| Error::NearSingularDenominator { bound: 0.0 })?;
    solve_packed(&ws.den, &ws.perm, &ws.eye, &mut ws.inv);
    // Den = 2(CU + D), so 1/(2‖Den⁻¹‖_F) bounds σ_min(CU + D) from below.
    let bound = 0.5 / ws.inv.frobenius_norm();
    if !(bound >= DENOMINATOR_FLOOR) {
        return Err(Error::NearSingularDenominator { bound });
    }

    // `tmp` holds the new U until the derivative no longer needs the old one.
    gemm_into(&mut ws.tmp, &ws.num, &ws.inv);
    let u_new = &ws.tmp;
    match site {
        SiteData::Identity { .. } => {
            gemm_into(&mut ws.dnum, &ws.x, &state.du);
            axpy(&mut ws.dnum, ONE, &ws.w1);
            ws.dden.copy_from(&ws.dnum);
            axpy(&mut ws.dnum, c64::new(0.0, -2.0), &state.du);
        }
        SiteData::General {
            tinv,
            q_plus,
            q_minus,
            ..
        } => {
            gemm_into(&mut ws.dnum, tinv, &ws.w1);
            gemm_into(&mut ws.num, &ws.x, &state.du);
            axpy(&mut ws.dnum, ONE, &ws.num);
            ws.dden.copy_from(&ws.dnum);
            gemm_into(&mut ws.num, q_plus, &state.du);
            axpy(&mut ws.dnum, -I, &ws.num);
            gemm_into(&mut ws.num, q_minus, &state.du);
            axpy(&mut ws.dden, -I, &ws.num);
        }
    }
    gemm_into(&mut ws.num, u_new, &ws.dden);
    axpy(&mut ws.dnum, -ONE, &ws.num);
    gemm_into(&mut state.du, &ws.dnum, &ws.inv);
    state.u.copy_from(&ws.tmp);
    Ok(())
}

/// `U_N^E` and `∂_E U_N^E` for the whole chain.
pub fn pruefer_phase(j: &BlockJacobi, energy: f64) -> Result<PrueferState> {
    PrueferChain::new(j)?.phase(energy)
}

/// Same quantity through the explicit transfer product and stereographic
/// projection. Only for chains of at most [`RAW_PRODUCT_MAX_SITES`] sites.
pub fn pruefer_phase_raw(j: &BlockJacobi, energy: f64) -> Result<PrueferState> {
    let (phi, dphi) = raw_frame(j, energy)?;
    let m = j.fiber();
    let frame = LagrangianFrame::new(phi)?;
    let u = stereographic_i(&frame)?;
    let (a, b) = (frame.top(), frame.bottom());
    let (da, db) = (dphi.block(0, 0, m, m), dphi.block(m, 0, m, m));
    let plus_inv = inverse(&(&a + &b.scale(I)))?;
    let dminus = &da - &db.scale(I);
    let dplus = &da + &db.scale(I);
    let du = &(&dminus - &(&u * &dplus)) * &plus_inv;
    Ok(PrueferState {
        u,
        du,
        energy,
        sites: j.len(),
        defect_log: Vec::new(),
    })
}

fn check_raw_length(j: &BlockJacobi) -> Result<()> {
    if j.len() > RAW_PRODUCT_MAX_SITES {
        return Err(Error::DimensionTooLarge {
            dim: j.len(),
            cap: RAW_PRODUCT_MAX_SITES,
        });
    }
    Ok(())
}

/// `Φ_N = M_N⋯M_1 (1; 0)` and its energy derivative.
fn raw_frame(j: &BlockJacobi, energy: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
    check_raw_length(j)?;
    let m = j.fiber();
    let mut phi = LagrangianFrame::reference(m).into_inner();
    let mut dphi = ComplexMatrix::zeros(2 * m, m);
    for site in 1..=j.len() {
        let tm = site_transfer(j, energy, site)?;
        dphi = &(&tm.derivative * &phi) + &(&tm.matrix * &dphi);
        phi = &tm.matrix * &phi;
    }
    Ok((phi, dphi))
}

/// `S = (1/(iN))·U*·∂_E U`, Hermitian-symmetrized.
#[derive(Debug, Clone)]
pub struct PhaseVelocity {
    pub s: ComplexMatrix,
    pub energy: f64,
    pub length: usize,
    /// Hermitian defect removed by symmetrization.
    pub symmetrization_defect: f64,
}

impl PhaseVelocity {
    /// `Tr(S)/m`.
    pub fn trace_per_site(&self) -> f64 {
        normalized_trace(&self.s).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigen(&self.s)?.eigenvalues[0])
    }
}

fn finish_velocity(raw: ComplexMatrix, energy: f64, length: usize) -> Result<PhaseVelocity> {
    let symmetrization_defect = raw.hermitian_defect();
    let s = raw.hermitian_part();
    if !s.is_finite() {
        return Err(Error::NonFinite);
    }
    check_positive(&s)?;
    Ok(PhaseVelocity {
        s,
        energy,
        length,
        symmetrization_defect,
    })
}

/// Fails with `NotPositive` if `S` has an eigenvalue below `−POSITIVITY_TOL`.
fn check_positive(s: &ComplexMatrix) -> Result<()> {
    let mut shifted = s.shift_diagonal(c64::new(POSITIVITY_TOL, 0.0));
    let clean = matches!(ldl_inertia_in_place(&mut shifted, 0.0), Ok(i) if i.negative == 0);
    if clean {
        return Ok(());
    }
    let min_eigenvalue = hermitian_eigen(s)?.eigenvalues[0];
    if min_eigenvalue < -POSITIVITY_TOL {
        return Err(Error::NotPositive { min_eigenvalue });
    }
    Ok(())
}

pub fn phase_velocity(state: &PrueferState) -> Result<PhaseVelocity> {
    if state.sites == 0 {
        return Err(Error::InvalidParams(
            "phase velocity needs at least one site".into(),
        ));
    }
    let m = state.fiber();
    let mut raw = ComplexMatrix::zeros(m, m);
    gemm_adjoint_left_into(&mut raw, &state.u, &state.du);
    let raw = raw.scale(c64::new(0.0, -1.0 / state.sites as f64));
    finish_velocity(raw, state.energy, state.sites)
}

/// The summands `Ψ_{n−1}*·diag((T_nT_n*)⁻¹, 0)·Ψ_{n−1}` with
/// `Ψ_{n−1} = M_{n−1}⋯M_1 (1; 0)`.
pub fn frame_summands(j: &BlockJacobi, energy: f64) -> Result<Vec<ComplexMatrix>> {
    Ok(frame_sum_parts(j, energy)?.0)
}

fn frame_sum_parts(j: &BlockJacobi, energy: f64) -> Result<(Vec<ComplexMatrix>, ComplexMatrix)> {
    check_raw_length(j)?;
    let m = j.fiber();
    let mut psi = LagrangianFrame::reference(m).into_inner();
    let mut terms = Vec::with_capacity(j.len());
    for site in 1..=j.len() {
        let t = j.hopping(site);
        let weight = inverse(&(t * &t.adjoint()))?;
        let top = psi.block(0, 0, m, m);
        terms.push(&(&top.adjoint() * &weight) * &top);
        psi = &site_transfer(j, energy, site)?.matrix * &psi;
        // S is unchanged under Ψ → ΨG (every term becomes G*·term·G), so the
        // frame is kept orthonormal instead of letting roundoff grow with it.
        let q = orthonormalize_columns(&psi).ok_or(Error::SingularMatrix { pivot: 0.0 })?;
        let g = inverse(&(&q.adjoint() * &psi))?;
        for term in &mut terms {
            *term = &(&g.adjoint() * &*term) * &g;
        }
        psi = q;
    }
    Ok((terms, psi))
}

/// `S = (2/N)·(φ₊⁻¹)*·F·φ₊⁻¹` with `F` the frame sum and `φ₊ = a + ib` for
/// `Φ_N = (a; b)`. An independent route to [`phase_velocity`] for short chains.
pub fn phase_velocity_via_frames(j: &BlockJacobi, energy: f64) -> Result<PhaseVelocity> {
    let (terms, phi) = frame_sum_parts(j, energy)?;
    let m = j.fiber();
    let mut f = ComplexMatrix::zeros(m, m);
    for t in &terms {
        f = &f + t;
    }
    let phi_plus = &phi.block(0, 0, m, m) + &phi.block(m, 0, m, m).scale(I);
    let inv = inverse(&phi_plus)?;
    let n = j.len() as f64;
    let raw = (&(&inv.adjoint() * &f) * &inv).scale_real(2.0 / n);
    finish_velocity(raw, energy, j.len())
}

/// Scaled deviations from the high-energy asymptotics at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRow {
    pub energy: f64,
    /// `E²‖U − (1 − 2i/E)‖`.
    pub u_scaled: f64,
    /// `E³‖∂_E U − 2i/E²‖`.
    pub du_scaled: f64,
    /// `N·E³‖S − 2/(N E²)‖`.
    pub s_scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub lambda: f64,
    pub rows: Vec<AsymptoticRow>,
}

/// Values below this are treated as converged when forming ratios.
const RATIO_FLOOR: f64 = 1e-9;

impl AsymptoticReport {
    /// Ratios `row[k+1]/row[k]` of the three scaled quantities.
    pub fn ratios(&self) -> Vec<[f64; 3]> {
        let ratio = |a: f64, b: f64| {
            if b <= RATIO_FLOOR {
                0.0
            } else {
                b / a.max(RATIO_FLOOR)
            }
        };
        self.rows
            .windows(2)
            .map(|w| {
                [
                    ratio(w[0].u_scaled, w[1].u_scaled),
                    ratio(w[0].du_scaled, w[1].du_scaled),
                    ratio(w[0].s_scaled, w[1].s_scaled),
                ]
            })
            .collect()
    }

    /// Largest ratio between consecutive rows with `|E| ≥ 16Λ`.
    pub fn max_tail_ratio(&self) -> f64 {
        let threshold = 16.0 * self.lambda;
        self.rows
            .windows(2)
            .zip(self.ratios())
            .filter(|(w, _)| w[0].energy.abs() >= threshold * (1.0 - 1e-12))
            .flat_map(|(_, r)| r)
            .fold(0.0, f64::max)
    }

    pub fn max_scaled(&self) -> [f64; 3] {
        self.rows.iter().fold([0.0; 3], |acc, r| {
            [
                acc[0].max(r.u_scaled),
                acc[1].max(r.du_scaled),
                acc[2].max(r.s_scaled),
            ]
        })
    }
}

/// High-energy deviation report at each of `energies`, all with `|E| > 4Λ`.
pub fn asymptotic_checks(j: &BlockJacobi, energies: &[f64]) -> Result<AsymptoticReport> {
    let lambda = j.lambda_bound();
    let chain = PrueferChain::new(j)?;
    let n = j.len() as f64;
    let mut rows = Vec::with_capacity(energies.len());
    for &e in energies {
        if !(e.abs() > 4.0 * lambda) {
            return Err(Error::EnergyBelowCutoff {
                energy: e,
                cutoff: 4.0 * lambda,
            });
        }
        let state = chain.phase(e)?;
        let vel = phase_velocity(&state)?;
        let u_dev = state.u.shift_diagonal(-c64::new(1.0, -2.0 / e));
        let du_dev = state.du.shift_diagonal(-c64::new(0.0, 2.0 / (e * e)));
        let s_dev = vel.s.shift_diagonal(c64::new(-2.0 / (n * e * e), 0.0));
        rows.push(AsymptoticRow {
            energy: e,
            u_scaled: e * e * operator_norm(&u_dev),
            du_scaled: (e * e * e).abs() * operator_norm(&du_dev),
            s_scaled: n * (e * e * e).abs() * operator_norm(&s_dev),
        });
    }
    Ok(AsymptoticReport { lambda, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krein::is_i_unitary;
    use crate::linalg::unitary_defect;
    use crate::model::testing::{random_chain, scaled_chain};

    fn scalar(v: f64) -> BlockJacobi {
        BlockJacobi::scalar(&[v], &[]).unwrap()
    }

    #[test]
    fn transfer_examples() {
        let free = transfer_matrix(
            0.0,
            &ComplexMatrix::zeros(1, 1),
            &ComplexMatrix::identity(1),
        )
        .unwrap();
        assert_eq!(
            free.matrix,
            ComplexMatrix::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0])
        );
        let tm = transfer_matrix(
            1.0,
            &ComplexMatrix::from_real(1, 1, &[0.5]),
            &ComplexMatrix::from_real(1, 1, &[2.0]),
        )
        .unwrap();
        assert_eq!(
            tm.matrix,
            ComplexMatrix::from_real(2, 2, &[0.25, -2.0, 0.5, 0.0])
        );
        assert_eq!(
            tm.derivative,
            ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, 0.0])
        );
    }

    #[test]
    fn transfer_is_i_unitary() {
        let mut seed = 21;
        for m in 1..=4 {
            let j = random_chain(m, 3, &mut seed, true);
            for site in 1..=3 {
                let tm = site_transfer(&j, 0.8, site).unwrap();
                let lam = j.lambda_bound();
                assert!(is_i_unitary(&tm.matrix, 1e-12 * lam * lam * 4.0).within);
            }
        }
    }

    #[test]
    fn single_site_closed_form() {
        for (e, v) in [(0.0, 0.3), (1.5, -0.5), (-2.0, 0.0)] {
            let s = pruefer_phase(&scalar(v), e).unwrap();
            let want = c64::new(e - v, -1.0) / c64::new(e - v, 1.0);
            assert!((s.u[(0, 0)] - want).norm() <= 1e-15);
            let vel = phase_velocity(&s).unwrap();
            let x = e - v;
            assert!((vel.s[(0, 0)].re - 2.0 / (x * x + 1.0)).abs() <= 1e-14);
        }
        let at_eigenvalue = pruefer_phase(&scalar(0.7), 0.7).unwrap();
        assert!((at_eigenvalue.u[(0, 0)] + ONE).norm() <= 1e-15);
    }

    #[test]
    fn fast_path_matches_generic_step() {
        let mut seed = 77;
        for (m, general) in [(1, false), (2, true), (3, false), (4, true)] {
            let j = random_chain(m, 10, &mut seed, general);
            let e = -0.4;
            let mut state = PrueferState::initial(m, e);
            for site in 1..=j.len() {
                state = pruefer_step(&state, &site_transfer(&j, e, site).unwrap()).unwrap();
            }
            let fast = pruefer_phase(&j, e).unwrap();
            assert_eq!(fast.sites, j.len());
            assert!((&fast.u - &state.u).frobenius_norm() <= 1e-11);
            assert!(
                (&fast.du - &state.du).frobenius_norm()
                    <= 1e-10 * (1.0 + state.du.frobenius_norm())
            );
        }
    }

    #[test]
    fn raw_product_oracle() {
        let mut seed = 3;
        for _ in 0..10 {
            let j = random_chain(2, 8, &mut seed, true);
            for e in [-2.5, 0.1, 1.9] {
                let a = pruefer_phase(&j, e).unwrap();
                let b = pruefer_phase_raw(&j, e).unwrap();
                assert!((&a.u - &b.u).frobenius_norm() <= 1e-8);
                assert!((&a.du - &b.du).frobenius_norm() <= 1e-8 * (1.0 + b.du.frobenius_norm()));
            }
        }
        let long = random_chain(1, 13, &mut seed, false);
        assert!(matches!(
            pruefer_phase_raw(&long, 0.0),
            Err(Error::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn derivative_matches_finite_differences() {
        // Plain central differences carry O(h²) truncation error that grows
        // with chain length, so the check is the h² rate plus agreement of
        // the Richardson-extrapolated difference.
        let mut seed = 9;
        for k in 0..8 {
            let m = 1 + k % 4;
            let j = scaled_chain(m, 4 + 4 * k, &mut seed, 0.5, k % 2 == 1);
            let e = 0.3 - 0.1 * k as f64;
            let chain = PrueferChain::new(&j).unwrap();
            let central = |h: f64| {
                (&chain.phase(e + h).unwrap().u - &chain.phase(e - h).unwrap().u)
                    .scale_real(0.5 / h)
            };
            let du = chain.phase(e).unwrap().du;
            let (d1, d2) = (central(1e-4), central(5e-5));
            let (e1, e2) = ((&d1 - &du).frobenius_norm(), (&d2 - &du).frobenius_norm());
            assert!((e1 / e2 - 4.0).abs() <= 1.2, "k = {k}: rate {}", e1 / e2);
            let extrapolated = (&d2.scale_real(4.0) - &d1).scale_real(1.0 / 3.0);
            assert!((&extrapolated - &du).frobenius_norm() <= 1e-6 * du.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn velocity_routes_agree() {
        let mut seed = 17;
        for trial in 0..100 {
            let j = random_chain(2, 6, &mut seed, trial % 2 == 0);
            let e = -3.0 + 0.06 * trial as f64;
            let a = pruefer_phase(&j, e)
                .and_then(|s| phase_velocity(&s))
                .unwrap();
            let b = phase_velocity_via_frames(&j, e).unwrap();
            assert!((&a.s - &b.s).frobenius_norm() <= 1e-7, "trial {trial}");
            for t in frame_summands(&j, e).unwrap() {
                let eig = hermitian_eigen(&t.hermitian_part()).unwrap();
                assert!(eig.eigenvalues[0] >= -1e-10 * eig.eigenvalues[1].abs().max(1.0));
            }
        }
        let one = phase_velocity_via_frames(&scalar(0.4), 1.0).unwrap();
        assert!((one.s[(0, 0)].re - 2.0 / (0.36 + 1.0)).abs() <= 1e-14);
    }

    #[test]
    fn velocity_is_positive_and_state_unitary() {
        let mut seed = 55;
        for k in 0..30 {
            let m = 1 + k % 4;
            let j = random_chain(m, 1 + 2 * k, &mut seed, k % 3 == 0);
            let e = -4.0 + 0.27 * k as f64;
            let s = pruefer_phase(&j, e).unwrap();
            assert!(unitary_defect(&s.u) <= 1e-9);
            assert!(s.defect_log.len() <= j.len());
            let v = phase_velocity(&s).unwrap();
            assert!(v.min_eigenvalue().unwrap() >= -1e-8);
            assert!(v.trace_per_site() >= -1e-8);
        }
    }

    #[test]
    fn single_site_asymptotics() {
        let j = scalar(0.0);
        let energies = [16.0, 32.0, 64.0, 128.0];
        let r = asymptotic_checks(&j, &energies).unwrap();
        for row in &r.rows {
            // R₁ = E⁻²(−2)(1 + i/E)⁻¹ for V = 0.
            let want = 2.0 / libm::hypot(1.0, 1.0 / row.energy);
            assert!((row.u_scaled - want).abs() <= 1e-9);
            assert!(row.u_scaled <= 8.0 * r.lambda);
        }
        assert!(r.max_tail_ratio() <= 1.5);
        assert!(matches!(
            asymptotic_checks(&j, &[3.0]),
            Err(Error::EnergyBelowCutoff { .. })
        ));
    }

    #[test]
    fn reunitarization_is_logged() {
        let mut s = PrueferState::initial(2, 0.0);
        s.u = s.u.scale_real(1.0 + 1e-6);
        s.sites = 3;
        s.reunitarize().unwrap();
        assert_eq!(s.defect_log.len(), 1);
        assert_eq!(s.defect_log[0].site, 3);
        assert!(unitary_defect(&s.u) <= PROJECTION_TARGET);
    }

    #[test]
    fn phase_velocity_needs_a_site() {
        assert!(phase_velocity(&PrueferState::initial(1, 0.0)).is_err());
    }

    #[test]
    fn lift_is_a_branch_of_arg_det() {
        let mut seed = 41;
        for k in 0..12 {
            let j = random_chain(1 + k % 4, 3 + k, &mut seed, k % 2 == 1);
            let chain = PrueferChain::new(&j).unwrap();
            for e in [-7.0, -1.3, 0.0, 0.4, 2.9, 8.0] {
                let lifted = chain.lifted(e).unwrap();
                let det = crate::linalg::Lu::factor(&lifted.state.u)
                    .unwrap()
                    .determinant();
                let gap = (lifted.theta - det.arg()) / (2.0 * core::f64::consts::PI);
                assert!((gap - libm::round(gap)).abs() <= 1e-10, "{gap}");
                assert!((0.0..=1.0).contains(&lifted.rotation()));
            }
        }
    }

    #[test]
    fn lift_derivative_is_the_velocity() {
        let mut seed = 5;
        for general in [false, true] {
            let j = random_chain(3, 10, &mut seed, general);
            let chain = PrueferChain::new(&j).unwrap();
            let scale = (j.len() * j.fiber()) as f64;
            for e in [-2.1, 0.35, 1.7] {
                let h = 1e-5;
                let fd = (chain.lifted(e + h).unwrap().theta - chain.lifted(e - h).unwrap().theta)
                    / (2.0 * h);
                let v = chain.velocity(e).unwrap().trace_per_site() * scale;
                assert!((fd - v).abs() <= 1e-5 * v.abs().max(1.0), "{fd} vs {v}");
            }
        }
    }

    #[test]
    fn lift_limits() {
        let mut seed = 9;
        let j = random_chain(2, 6, &mut seed, true);
        let chain = PrueferChain::new(&j).unwrap();
        assert!(chain.lifted(-1e4).unwrap().rotation() < 1e-3);
        assert!(chain.lifted(1e4).unwrap().rotation() > 1.0 - 1e-3);
    }
}
