//! Joint precoder / feedforward / feedback design.
//!
//! Both interference-subtraction schemes share one MSE model
//!
//! ```text
//! E = σ² C C^H − σ² C P^H H^H G − σ² G^H H P C^H + G^H R_y G,
//! R_y = σ² H P P^H H^H + R_n
//! ```
//!
//! with `σ² = 1` for decision feedback at the receiver and `σ² = σ_v²`
//! (the modulo power expansion) for Tomlinson-Harashima precoding. The
//! design is solved in three steps: the MMSE feedforward filter for any
//! `(P, C)`, the feedback matrix that makes `E` diagonal for any `P`, and
//! finally the precoder for the requested objective.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::majorization::{eval_objective, Objective, ObjectiveKind, SchurClass};
use crate::matdecomp::{
    c, cholesky_lower, diag_real, gmd_rotation, hermitian_eig, hermitian_part, identity,
    inverse, ln_det_hpd, lower_triangular_inverse, CMatrix, RANK_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Dfe,
    Thp,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dfe => "dfe",
            Scheme::Thp => "thp",
        }
    }
}

/// Physical problem input: channel, noise covariance, scheme scale `σ²`
/// and the number of streams.
#[derive(Debug, Clone)]
pub struct ChannelInstance {
    h: CMatrix,
    rn: CMatrix,
    scheme: Scheme,
    sigma2: f64,
    streams: usize,
}

impl ChannelInstance {
    pub fn new(h: CMatrix, rn: CMatrix, streams: usize, scheme: Scheme, sigma2: f64) -> Result<Self> {
        let (nr, nt) = h.shape();
        if rn.shape() != (nr, nr) {
            return Err(Error::Dimension(format!(
                "noise covariance is {}x{}, channel has {nr} receive antennas",
                rn.nrows(),
                rn.ncols()
            )));
        }
        if streams == 0 || streams > nr.min(nt) {
            return Err(Error::Dimension(format!(
                "{streams} streams over a {nr}x{nt} channel"
            )));
        }
        if !(sigma2.is_finite() && sigma2 >= 1.0) {
            return Err(Error::Domain(format!("scheme scale {sigma2} must be >= 1")));
        }
        if scheme == Scheme::Dfe && sigma2 != 1.0 {
            return Err(Error::Domain("decision feedback uses unit scale".into()));
        }
        crate::matdecomp::check_finite(&h)?;
        cholesky_lower(&rn)?;
        Ok(ChannelInstance {
            h,
            rn: hermitian_part(&rn),
            scheme,
            sigma2,
            streams,
        })
    }

    pub fn dfe(h: CMatrix, rn: CMatrix, streams: usize) -> Result<Self> {
        Self::new(h, rn, streams, Scheme::Dfe, 1.0)
    }

    pub fn thp(h: CMatrix, rn: CMatrix, streams: usize, sigma_v2: f64) -> Result<Self> {
        Self::new(h, rn, streams, Scheme::Thp, sigma_v2)
    }

    /// Same physical channel under another scheme.
    pub fn with_scheme(&self, scheme: Scheme, sigma2: f64) -> Result<Self> {
        Self::new(self.h.clone(), self.rn.clone(), self.streams, scheme, sigma2)
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn rn(&self) -> &CMatrix {
        &self.rn
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn tx_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn rx_antennas(&self) -> usize {
        self.h.nrows()
    }

    /// `σ² H^H R_n^{-1} H`.
    pub fn effective_gain(&self) -> Result<CMatrix> {
        let rn_inv = inverse(&self.rn)?;
        Ok(hermitian_part(&(self.h.adjoint() * rn_inv * &self.h).scale(self.sigma2)))
    }
}

/// Which rule produced a design.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum DesignRule {
    Optimal(Objective),
    LinearMmse,
    LinearMaxInfo,
}

impl DesignRule {
    pub fn label(&self) -> String {
        match self {
            DesignRule::Optimal(o) => {
                let class = match o.schur_class() {
                    SchurClass::ConvexInLogMse => "convex",
                    SchurClass::ConcaveInLogMse => "concave",
                };
                format!("{class}-{}", o.name())
            }
            DesignRule::LinearMmse => "linear-mmse".into(),
            DesignRule::LinearMaxInfo => "linear-maxinfo".into(),
        }
    }
}

/// Solver output: `P` (N_t×K), `G` (N_r×K), unit-diagonal lower
/// triangular `C = I + B` (K×K), and the resulting stream MSEs.
#[derive(Debug, Clone)]
pub struct TransceiverDesign {
    pub scheme: Scheme,
    pub rule: DesignRule,
    pub p: CMatrix,
    pub g: CMatrix,
    pub c: CMatrix,
    pub stream_mses: Vec<f64>,
    /// `None` when the objective is undefined at these MSEs (e.g. an SINR
    /// objective with an idle stream).
    pub objective_value: Option<f64>,
}

impl TransceiverDesign {
    pub fn streams(&self) -> usize {
        self.c.nrows()
    }

    /// Strictly lower triangular feedback `B = C − I`.
    pub fn feedback(&self) -> CMatrix {
        &self.c - identity(self.c.nrows())
    }

    pub fn transmit_trace(&self) -> f64 {
        self.p.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn label(&self) -> String {
        match self.rule {
            DesignRule::Optimal(_) => format!("{}-{}", self.scheme.name(), self.rule.label()),
            _ => self.rule.label(),
        }
    }
}

/// Power allocation from water-filling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterFillingResult {
    pub active_count: usize,
    /// Power per mode, zero on inactive modes (length = number of modes).
    pub powers: Vec<f64>,
    pub water_level: f64,
}

impl WaterFillingResult {
    /// `φ_i²` on the active modes.
    pub fn amplitudes_squared(&self) -> Vec<f64> {
        self.powers.iter().copied().filter(|p| *p > 0.0).collect()
    }
}

fn check_dims(ch: &ChannelInstance, p: &CMatrix, c_mat: Option<&CMatrix>) -> Result<()> {
    let k = p.ncols();
    if p.nrows() != ch.tx_antennas() {
        return Err(Error::Dimension(format!(
            "precoder has {} rows for {} transmit antennas",
            p.nrows(),
            ch.tx_antennas()
        )));
    }
    if let Some(c_mat) = c_mat {
        if c_mat.shape() != (k, k) {
            return Err(Error::Dimension(format!(
                "feedback matrix is {}x{}, expected {k}x{k}",
                c_mat.nrows(),
                c_mat.ncols()
            )));
        }
        for i in 0..k {
            if c_mat[(i, i)] != c(1.0, 0.0) || (i + 1..k).any(|j| c_mat[(i, j)] != c(0.0, 0.0)) {
                return Err(Error::Domain(
                    "C must be unit-diagonal lower triangular".into(),
                ));
            }
        }
    }
    Ok(())
}

fn received_covariance(ch: &ChannelInstance, p: &CMatrix) -> CMatrix {
    let hp = &ch.h * p;
    hermitian_part(&((&hp * hp.adjoint()).scale(ch.sigma2) + &ch.rn))
}

/// Error covariance of the quantizer input for arbitrary `(P, G, C)`.
pub fn mse_matrix(ch: &ChannelInstance, p: &CMatrix, g: &CMatrix, c_mat: &CMatrix) -> Result<CMatrix> {
    check_dims(ch, p, Some(c_mat))?;
    if g.shape() != (ch.rx_antennas(), p.ncols()) {
        return Err(Error::Dimension(format!(
            "feedforward matrix is {}x{}, expected {}x{}",
            g.nrows(),
            g.ncols(),
            ch.rx_antennas(),
            p.ncols()
        )));
    }
    let s2 = ch.sigma2;
    let ry = received_covariance(ch, p);
    let cross = c_mat * p.adjoint() * ch.h.adjoint() * g;
    let e = (c_mat * c_mat.adjoint()).scale(s2) - cross.scale(s2) - cross.adjoint().scale(s2)
        + g.adjoint() * ry * g;
    Ok(hermitian_part(&e))
}

/// MMSE feedforward filter `G = σ² R_y^{-1} H P C^H`.
pub fn optimal_g(ch: &ChannelInstance, p: &CMatrix, c_mat: &CMatrix) -> Result<CMatrix> {
    check_dims(ch, p, Some(c_mat))?;
    let ry = received_covariance(ch, p);
    let l = cholesky_lower(&ry)?;
    let l_inv = lower_triangular_inverse(&l)?;
    let ry_inv = l_inv.adjoint() * l_inv;
    Ok((ry_inv * &ch.h * p * c_mat.adjoint()).scale(ch.sigma2))
}

/// `M = σ² (I + σ² P^H H^H R_n^{-1} H P)^{-1}`, so that the MSE matrix at
/// the optimal feedforward filter is `C M C^H`.
pub fn reduced_mse(ch: &ChannelInstance, p: &CMatrix) -> Result<CMatrix> {
    check_dims(ch, p, None)?;
    let k = p.ncols();
    let rn_inv = inverse(&ch.rn)?;
    let inner = identity(k) + (p.adjoint() * ch.h.adjoint() * rn_inv * &ch.h * p).scale(ch.sigma2);
    let inner = hermitian_part(&inner);
    let l = cholesky_lower(&inner)?;
    let l_inv = lower_triangular_inverse(&l)?;
    Ok(hermitian_part(&(l_inv.adjoint() * l_inv).scale(ch.sigma2)))
}

/// Feedback matrix minimizing every stream MSE for a fixed precoder:
/// `C = Diag(L_11..L_KK) L^{-1}` with `M = L L^H`; the MSEs are `L_ii²`.
pub fn optimal_c(m: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    let l = cholesky_lower(m)?;
    let k = l.nrows();
    let l_inv = lower_triangular_inverse(&l)?;
    let diag: Vec<f64> = (0..k).map(|i| l[(i, i)].re).collect();
    let mut c_mat = diag_real(&diag) * l_inv;
    for i in 0..k {
        c_mat[(i, i)] = c(1.0, 0.0);
        for j in i + 1..k {
            c_mat[(i, j)] = c(0.0, 0.0);
        }
    }
    let mses = diag.iter().map(|d| d * d).collect();
    Ok((c_mat, mses))
}

/// Weighted water-filling: maximizes `Σ w_i ln(1 + λ_i p_i)` subject to
/// `Σ p_i = budget`, giving `p_i = (w_i μ − 1/λ_i)^+`.
pub fn waterfill(eigenvalues: &[f64], budget: f64, weights: Option<&[f64]>) -> Result<WaterFillingResult> {
    let n = eigenvalues.len();
    if n == 0 {
        return Err(Error::Dimension("water-filling over zero modes".into()));
    }
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::Domain(format!("power budget {budget} must be positive")));
    }
    if eigenvalues.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::Domain("mode gains must be positive".into()));
    }
    let uniform = vec![1.0; n];
    let w = match weights {
        Some(w) if w.len() != n => {
            return Err(Error::Dimension(format!("{} weights for {n} modes", w.len())))
        }
        Some(w) if w.iter().any(|x| !(x.is_finite() && *x > 0.0)) => {
            return Err(Error::Domain("water-filling weights must be positive".into()))
        }
        Some(w) => w,
        None => &uniform[..],
    };

    // Modes enter in order of increasing threshold 1/(w λ).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let ti = 1.0 / (w[i] * eigenvalues[i]);
        let tj = 1.0 / (w[j] * eigenvalues[j]);
        ti.total_cmp(&tj).then(i.cmp(&j))
    });

    let mut active = 1;
    let mut mu = 0.0;
    for count in (1..=n).rev() {
        let set = &order[..count];
        let inv_sum: f64 = set.iter().map(|&i| 1.0 / eigenvalues[i]).sum();
        let w_sum: f64 = set.iter().map(|&i| w[i]).sum();
        let level = (budget + inv_sum) / w_sum;
        let last = order[count - 1];
        if w[last] * level > 1.0 / eigenvalues[last] || count == 1 {
            active = count;
            mu = level;
            break;
        }
    }
    let mut powers = vec![0.0; n];
    for &i in &order[..active] {
        powers[i] = w[i] * mu - 1.0 / eigenvalues[i];
    }
    Ok(WaterFillingResult {
        active_count: active,
        powers,
        water_level: mu,
    })
}

/// Leading eigenmodes of `σ² H^H R_n^{-1} H` used by every design rule.
#[derive(Debug, Clone)]
pub struct ChannelModes {
    /// Largest K eigenvalues, descending.
    pub gains: Vec<f64>,
    /// Matching eigenvectors (N_t × K).
    pub basis: CMatrix,
    pub rank: usize,
}

pub fn channel_modes(ch: &ChannelInstance) -> Result<ChannelModes> {
    let eig = hermitian_eig(&ch.effective_gain()?)?;
    let top = eig.eigenvalues.first().copied().unwrap_or(0.0);
    let rank = eig
        .eigenvalues
        .iter()
        .filter(|&&l| top > 0.0 && l > RANK_FLOOR * top)
        .count();
    let k = ch.streams;
    if k > rank {
        return Err(Error::StreamsExceedRank { streams: k, rank });
    }
    Ok(ChannelModes {
        gains: eig.eigenvalues[..k].to_vec(),
        basis: eig.eigenvectors.columns(0, k).into_owned(),
        rank,
    })
}

fn check_budget(total_power: f64) -> Result<()> {
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(Error::Domain(format!(
            "total power {total_power} must be positive"
        )));
    }
    Ok(())
}

/// Precoder `U_1 Diag(√p)`, `C = I`, MMSE `G`. Shared by the Schur-concave
/// branch and the linear baselines.
pub fn linear_design(
    ch: &ChannelInstance,
    modes: &ChannelModes,
    powers: &[f64],
    rule: DesignRule,
) -> Result<TransceiverDesign> {
    let amps: Vec<f64> = powers.iter().map(|p| p.max(0.0).sqrt()).collect();
    let p = &modes.basis * diag_real(&amps);
    let k = ch.streams;
    let c_mat = identity(k);
    let m = reduced_mse(ch, &p)?;
    let stream_mses: Vec<f64> = (0..k).map(|i| m[(i, i)].re).collect();
    let g = optimal_g(ch, &p, &c_mat)?;
    let objective_value = match &rule {
        DesignRule::Optimal(o) => eval_objective(o, &stream_mses).ok(),
        DesignRule::LinearMmse => Some(stream_mses.iter().sum()),
        DesignRule::LinearMaxInfo => Some(stream_mses.iter().product()),
    };
    Ok(TransceiverDesign {
        scheme: ch.scheme,
        rule,
        p,
        g,
        c: c_mat,
        stream_mses,
        objective_value,
    })
}

/// Optimal transceiver for the objective under `tr(P P^H) ≤ P_total / σ²`.
pub fn design(ch: &ChannelInstance, total_power: f64, obj: &Objective) -> Result<TransceiverDesign> {
    check_budget(total_power)?;
    let modes = channel_modes(ch)?;
    let budget = total_power / ch.sigma2;
    let k = ch.streams;

    match obj.schur_class() {
        SchurClass::ConvexInLogMse => {
            let wf = waterfill(&modes.gains, budget, None)?;
            let amps: Vec<f64> = wf.powers.iter().map(|p| p.sqrt()).collect();
            let shaping: Vec<f64> = modes
                .gains
                .iter()
                .zip(&wf.powers)
                .map(|(l, p)| 1.0 / (1.0 + l * p).sqrt())
                .collect();
            let v = gmd_rotation(&diag_real(&shaping))?;
            let p = &modes.basis * diag_real(&amps) * v;
            let m = reduced_mse(ch, &p)?;
            let (c_mat, stream_mses) = optimal_c(&m)?;
            let g = optimal_g(ch, &p, &c_mat)?;
            let objective_value = eval_objective(obj, &stream_mses).ok();
            Ok(TransceiverDesign {
                scheme: ch.scheme,
                rule: DesignRule::Optimal(obj.clone()),
                p,
                g,
                c: c_mat,
                stream_mses,
                objective_value,
            })
        }
        SchurClass::ConcaveInLogMse => {
            let weights = match obj.kind() {
                ObjectiveKind::ProdMse => None,
                ObjectiveKind::WeightedGeoMean { weights } => {
                    if weights.len() != k {
                        return Err(Error::Dimension(format!(
                            "{} weights for {k} streams",
                            weights.len()
                        )));
                    }
                    Some(weights.as_slice())
                }
                other => return Err(Error::UnsupportedObjective(other.name().into())),
            };
            let wf = waterfill(&modes.gains, budget, weights)?;
            linear_design(ch, &modes, &wf.powers, DesignRule::Optimal(obj.clone()))
        }
    }
}

/// Gaussian mutual information `ln det(I + σ² P^H H^H R_n^{-1} H P)` in nats.
pub fn mutual_information(ch: &ChannelInstance, p: &CMatrix) -> Result<f64> {
    check_dims(ch, p, None)?;
    let rn_inv = inverse(&ch.rn)?;
    let k = p.ncols();
    let inner = identity(k) + (p.adjoint() * ch.h.adjoint() * rn_inv * &ch.h * p).scale(ch.sigma2);
    ln_det_hpd(&inner)
}

/// `SINR_i = 1/MSE_i − 1`; defined for decision-feedback designs only.
pub fn sinr_per_stream(design: &TransceiverDesign) -> Result<Vec<f64>> {
    if design.scheme != Scheme::Dfe {
        return Err(Error::SchemeMismatch {
            expected: "dfe",
            found: design.scheme.name(),
        });
    }
    sinr_from_mses(&design.stream_mses)
}

pub fn sinr_from_mses(mses: &[f64]) -> Result<Vec<f64>> {
    mses.iter()
        .map(|&m| {
            if m > 0.0 && m <= 1.0 {
                Ok(1.0 / m - 1.0)
            } else {
                Err(Error::Domain(format!("MSE {m} outside (0, 1]")))
            }
        })
        .collect()
}
