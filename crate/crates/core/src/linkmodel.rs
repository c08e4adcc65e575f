//! Symbol-level link: square QAM with Gray mapping, the THP modulo
//! transmitter, successive detection for DFE, modulo detection for THP,
//! the linear baselines and Rayleigh channel draws.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matdecomp::{c, cholesky_lower, identity, CMatrix};
use crate::transceiver::{
    channel_modes, linear_design, waterfill, ChannelInstance, DesignRule, Scheme,
    TransceiverDesign,
};

/// Unit-energy square M-QAM with per-dimension reflected-binary Gray labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationSpec {
    m: usize,
    side: usize,
    bits_per_dim: usize,
    delta: f64,
    voronoi_side: f64,
}

impl ConstellationSpec {
    pub fn new(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if m < 4 || side * side != m || !side.is_power_of_two() {
            return Err(Error::Domain(format!(
                "{m} is not a square QAM order with a power-of-two side"
            )));
        }
        let delta = (3.0 / (2.0 * (m as f64 - 1.0))).sqrt();
        Ok(ConstellationSpec {
            m,
            side,
            bits_per_dim: side.trailing_zeros() as usize,
            delta,
            voronoi_side: 2.0 * side as f64 * delta,
        })
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_dim
    }

    /// Half the minimum distance.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Side length `D` of the square Voronoi region of the whole constellation.
    pub fn voronoi_side(&self) -> f64 {
        self.voronoi_side
    }

    /// Power expansion of the modulo output, `M / (M − 1)`.
    pub fn sigma_v2(&self) -> f64 {
        self.m as f64 / (self.m as f64 - 1.0)
    }

    fn level_amplitude(&self, level: usize) -> f64 {
        (2.0 * level as f64 - (self.side as f64 - 1.0)) * self.delta
    }

    fn nearest_level(&self, x: f64) -> usize {
        let l = ((x / self.delta + (self.side as f64 - 1.0)) / 2.0).round();
        l.clamp(0.0, (self.side - 1) as f64) as usize
    }

    /// All points, indexed by their Gray label (I bits first).
    pub fn points(&self) -> Vec<Complex64> {
        (0..self.m).map(|idx| self.point(idx)).collect()
    }

    /// Point carrying the label `idx`.
    pub fn point(&self, idx: usize) -> Complex64 {
        let i_gray = idx >> self.bits_per_dim;
        let q_gray = idx & (self.side - 1);
        c(
            self.level_amplitude(gray_decode(i_gray)),
            self.level_amplitude(gray_decode(q_gray)),
        )
    }

    /// Label and position of the constellation point closest to `z`.
    pub fn nearest(&self, z: Complex64) -> (usize, Complex64) {
        let li = self.nearest_level(z.re);
        let lq = self.nearest_level(z.im);
        let idx = (gray_encode(li) << self.bits_per_dim) | gray_encode(lq);
        (idx, c(self.level_amplitude(li), self.level_amplitude(lq)))
    }

    fn push_label_bits(&self, idx: usize, out: &mut Vec<bool>) {
        for b in (0..self.bits_per_symbol()).rev() {
            out.push((idx >> b) & 1 == 1);
        }
    }
}

fn gray_encode(n: usize) -> usize {
    n ^ (n >> 1)
}

fn gray_decode(mut g: usize) -> usize {
    let mut n = g;
    while g > 1 {
        g >>= 1;
        n ^= g;
    }
    n
}

/// Maps bits (MSB first within each symbol) to constellation points.
pub fn qam_modulate(bits: &[bool], spec: &ConstellationSpec) -> Result<Vec<Complex64>> {
    let bps = spec.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(Error::Dimension(format!(
            "{} bits is not a multiple of {bps}",
            bits.len()
        )));
    }
    Ok(bits
        .chunks(bps)
        .map(|chunk| {
            let idx = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            spec.point(idx)
        })
        .collect())
}

/// Hard nearest-point demapping.
pub fn qam_demodulate(symbols: &[Complex64], spec: &ConstellationSpec) -> Vec<bool> {
    let mut out = Vec::with_capacity(symbols.len() * spec.bits_per_symbol());
    for &z in symbols {
        spec.push_label_bits(spec.nearest(z).0, &mut out);
    }
    out
}

fn wrap(x: f64, d: f64) -> f64 {
    let w = x - d * ((x + d / 2.0) / d).floor();
    // Guard against round-off landing exactly on the open end.
    if w >= d / 2.0 {
        w - d
    } else {
        w
    }
}

/// Wraps real and imaginary parts into `[−D/2, D/2)`.
pub fn modulo_voronoi(x: Complex64, d: f64) -> Complex64 {
    c(wrap(x.re, d), wrap(x.im, d))
}

fn require_scheme(design: &TransceiverDesign, scheme: Scheme) -> Result<()> {
    if design.scheme != scheme {
        return Err(Error::SchemeMismatch {
            expected: scheme.name(),
            found: design.scheme.name(),
        });
    }
    Ok(())
}

fn require_len(len: usize, want: usize, what: &str) -> Result<()> {
    if len != want {
        return Err(Error::Dimension(format!("{what} has length {len}, expected {want}")));
    }
    Ok(())
}

/// Output of the THP transmitter.
#[derive(Debug, Clone)]
pub struct ThpTransmission {
    /// Antenna signal `P v`.
    pub x: Vec<Complex64>,
    /// Modulo-reduced symbols.
    pub v: Vec<Complex64>,
}

/// Successive pre-subtraction with modulo reduction, then spatial precoding.
pub fn thp_transmit(
    s: &[Complex64],
    design: &TransceiverDesign,
    spec: &ConstellationSpec,
) -> Result<ThpTransmission> {
    require_scheme(design, Scheme::Thp)?;
    let k = design.streams();
    require_len(s.len(), k, "symbol vector")?;
    let d = spec.voronoi_side();
    let mut v = Vec::with_capacity(k);
    for i in 0..k {
        let mut acc = s[i];
        for (j, vj) in v.iter().enumerate() {
            acc -= design.c[(i, j)] * vj;
        }
        v.push(modulo_voronoi(acc, d));
    }
    let x = mat_vec(&design.p, &v);
    Ok(ThpTransmission { x, v })
}

fn mat_vec(a: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)] * x[j]).sum())
        .collect()
}

fn adjoint_vec(a: &CMatrix, y: &[Complex64]) -> Vec<Complex64> {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].conj() * y[i]).sum())
        .collect()
}

/// Result of one detection pass.
#[derive(Debug, Clone)]
pub struct Detection {
    pub bits: Vec<bool>,
    pub decisions: Vec<Complex64>,
    /// Quantizer inputs: `ŝ` for DFE, `û = G^H y` (before modulo) for THP.
    pub soft: Vec<Complex64>,
}

fn dfe_pass(
    y: &[Complex64],
    design: &TransceiverDesign,
    spec: &ConstellationSpec,
    genie: Option<&[Complex64]>,
) -> Result<Detection> {
    require_scheme(design, Scheme::Dfe)?;
    require_len(y.len(), design.g.nrows(), "received vector")?;
    let k = design.streams();
    if let Some(t) = genie {
        require_len(t.len(), k, "reference symbols")?;
    }
    let z = adjoint_vec(&design.g, y);
    let mut decisions = Vec::with_capacity(k);
    let mut soft = Vec::with_capacity(k);
    let mut bits = Vec::with_capacity(k * spec.bits_per_symbol());
    for i in 0..k {
        let fed_back = genie.unwrap_or(&decisions);
        let mut s_hat = z[i];
        for j in 0..i {
            s_hat -= design.c[(i, j)] * fed_back[j];
        }
        let (idx, point) = spec.nearest(s_hat);
        spec.push_label_bits(idx, &mut bits);
        soft.push(s_hat);
        decisions.push(point);
    }
    Ok(Detection {
        bits,
        decisions,
        soft,
    })
}

/// Successive detection, stream 1 first, feeding back actual decisions.
pub fn dfe_detect(
    y: &[Complex64],
    design: &TransceiverDesign,
    spec: &ConstellationSpec,
) -> Result<Detection> {
    dfe_pass(y, design, spec, None)
}

/// Successive detection that feeds back the transmitted symbols.
pub fn dfe_detect_genie(
    y: &[Complex64],
    design: &TransceiverDesign,
    spec: &ConstellationSpec,
    transmitted: &[Complex64],
) -> Result<Detection> {
    dfe_pass(y, design, spec, Some(transmitted))
}

/// Linear equalization, modulo reduction, then nearest-point demapping.
pub fn thp_detect(
    y: &[Complex64],
    design: &TransceiverDesign,
    spec: &ConstellationSpec,
) -> Result<Detection> {
    require_scheme(design, Scheme::Thp)?;
    require_len(y.len(), design.g.nrows(), "received vector")?;
    let u_hat = adjoint_vec(&design.g, y);
    let d = spec.voronoi_side();
    let mut bits = Vec::with_capacity(u_hat.len() * spec.bits_per_symbol());
    let mut decisions = Vec::with_capacity(u_hat.len());
    for &u in &u_hat {
        let (idx, point) = spec.nearest(modulo_voronoi(u, d));
        spec.push_label_bits(idx, &mut bits);
        decisions.push(point);
    }
    Ok(Detection {
        bits,
        decisions,
        soft: u_hat,
    })
}

fn check_total_power(total_power: f64) -> Result<()> {
    if !(total_power.is_finite() && total_power > 0.0) {
        return Err(Error::Domain(format!(
            "total power {total_power} must be positive"
        )));
    }
    Ok(())
}

/// Linear transceiver minimizing the total MSE:
/// `φ_i² = (μ/√λ_i − 1/λ_i)^+`.
pub fn linear_mmse_baseline(ch: &ChannelInstance, total_power: f64) -> Result<TransceiverDesign> {
    check_total_power(total_power)?;
    let modes = channel_modes(ch)?;
    let powers = mmse_allocation(&modes.gains, total_power / ch.sigma2());
    linear_design(ch, &modes, &powers, DesignRule::LinearMmse)
}

/// Linear transceiver maximizing mutual information (plain water-filling, `V = I`).
pub fn linear_maxinfo_baseline(ch: &ChannelInstance, total_power: f64) -> Result<TransceiverDesign> {
    check_total_power(total_power)?;
    let modes = channel_modes(ch)?;
    let wf = waterfill(&modes.gains, total_power / ch.sigma2(), None)?;
    linear_design(ch, &modes, &wf.powers, DesignRule::LinearMaxInfo)
}

/// Power split minimizing `Σ 1/(1 + λ_i p_i)`; gains must be descending.
pub fn mmse_allocation(gains: &[f64], budget: f64) -> Vec<f64> {
    let n = gains.len();
    for count in (1..=n).rev() {
        let inv: f64 = gains[..count].iter().map(|l| 1.0 / l).sum();
        let inv_sqrt: f64 = gains[..count].iter().map(|l| 1.0 / l.sqrt()).sum();
        let mu = (budget + inv) / inv_sqrt;
        if mu > 1.0 / gains[count - 1].sqrt() || count == 1 {
            let mut p = vec![0.0; n];
            for i in 0..count {
                p[i] = mu / gains[i].sqrt() - 1.0 / gains[i];
            }
            return p;
        }
    }
    Vec::new()
}

/// One circularly-symmetric complex Gaussian sample with unit variance.
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// I.i.d. unit-variance Rayleigh channel with white noise `noise_power · I`,
/// carrying `min(N_r, N_t)` streams under decision feedback.
pub fn rayleigh_channel(
    rng: &mut impl Rng,
    rx: usize,
    tx: usize,
    noise_power: f64,
) -> Result<ChannelInstance> {
    if rx == 0 || tx == 0 {
        return Err(Error::Dimension("antenna counts must be >= 1".into()));
    }
    if !(noise_power.is_finite() && noise_power > 0.0) {
        return Err(Error::Domain(format!("noise power {noise_power} must be positive")));
    }
    let mut h = CMatrix::zeros(rx, tx);
    for i in 0..rx {
        for j in 0..tx {
            h[(i, j)] = complex_gaussian(rng);
        }
    }
    ChannelInstance::dfe(h, identity(rx).scale(noise_power), rx.min(tx))
}

/// How a DFE receiver forms its feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feedback {
    Decisions,
    Genie,
}

/// Error and MSE tallies from one realization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkStats {
    pub bits: u64,
    pub bit_errors: u64,
    pub vectors: u64,
    /// Per-stream sums of `|e|²` and `|e|⁴` of the quantizer-input error.
    pub err2: Vec<f64>,
    pub err4: Vec<f64>,
}

impl LinkStats {
    pub fn new(streams: usize) -> Self {
        LinkStats {
            err2: vec![0.0; streams],
            err4: vec![0.0; streams],
            ..Default::default()
        }
    }

    pub fn merge(&mut self, other: &LinkStats) {
        self.bits += other.bits;
        self.bit_errors += other.bit_errors;
        self.vectors += other.vectors;
        for (a, b) in self.err2.iter_mut().zip(&other.err2) {
            *a += b;
        }
        for (a, b) in self.err4.iter_mut().zip(&other.err4) {
            *a += b;
        }
    }

    pub fn empirical_mse(&self) -> Vec<f64> {
        let n = self.vectors.max(1) as f64;
        self.err2.iter().map(|s| s / n).collect()
    }

    /// Standard error of each per-stream MSE estimate.
    pub fn mse_standard_error(&self) -> Vec<f64> {
        let n = self.vectors.max(1) as f64;
        self.err2
            .iter()
            .zip(&self.err4)
            .map(|(s2, s4)| {
                let mean = s2 / n;
                let var = (s4 / n - mean * mean).max(0.0);
                (var / (n - 1.0).max(1.0)).sqrt()
            })
            .collect()
    }

    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// A channel, a design for it and a constellation: enough to push symbols
/// end to end.
#[derive(Debug, Clone)]
pub struct LinkRealization<'a> {
    pub channel: &'a ChannelInstance,
    pub design: &'a TransceiverDesign,
    pub constellation: &'a ConstellationSpec,
}

impl<'a> LinkRealization<'a> {
    pub fn new(
        channel: &'a ChannelInstance,
        design: &'a TransceiverDesign,
        constellation: &'a ConstellationSpec,
    ) -> Result<Self> {
        if design.p.nrows() != channel.tx_antennas() || design.g.nrows() != channel.rx_antennas() {
            return Err(Error::Dimension("design does not match channel".into()));
        }
        Ok(LinkRealization {
            channel,
            design,
            constellation,
        })
    }

    /// Sends `vectors` symbol vectors of random bits and tallies errors.
    /// THP ignores `feedback`.
    pub fn run(&self, rng: &mut impl Rng, vectors: usize, feedback: Feedback) -> Result<LinkStats> {
        let k = self.design.streams();
        let nr = self.channel.rx_antennas();
        let spec = self.constellation;
        let bps = spec.bits_per_symbol();
        let noise_chol = cholesky_lower(self.channel.rn())?;
        let mut stats = LinkStats::new(k);
        let mut bits = vec![false; k * bps];
        let mut white = vec![c(0.0, 0.0); nr];
        for _ in 0..vectors {
            for b in bits.iter_mut() {
                *b = rng.random::<bool>();
            }
            let s = qam_modulate(&bits, spec)?;
            let (x, reference) = match self.design.scheme {
                Scheme::Dfe => (mat_vec(&self.design.p, &s), s.clone()),
                Scheme::Thp => {
                    let tx = thp_transmit(&s, self.design, spec)?;
                    // The receiver aims at u = C v.
                    let u = mat_vec(&self.design.c, &tx.v);
                    (tx.x, u)
                }
            };
            for w in white.iter_mut() {
                *w = complex_gaussian(rng);
            }
            let mut y = mat_vec(self.channel.h(), &x);
            for (i, yi) in y.iter_mut().enumerate() {
                for (j, wj) in white.iter().enumerate().take(i + 1) {
                    *yi += noise_chol[(i, j)] * wj;
                }
            }
            let det = match (self.design.scheme, feedback) {
                (Scheme::Dfe, Feedback::Decisions) => dfe_detect(&y, self.design, spec)?,
                (Scheme::Dfe, Feedback::Genie) => dfe_detect_genie(&y, self.design, spec, &s)?,
                (Scheme::Thp, _) => thp_detect(&y, self.design, spec)?,
            };
            stats.vectors += 1;
            stats.bits += bits.len() as u64;
            stats.bit_errors += bits.iter().zip(&det.bits).filter(|(a, b)| a != b).count() as u64;
            for i in 0..k {
                let e2 = (det.soft[i] - reference[i]).norm_sqr();
                stats.err2[i] += e2;
                stats.err4[i] += e2 * e2;
            }
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::majorization::Objective;
    use crate::matdecomp::{frobenius, real_matrix};
    use crate::transceiver::{design, optimal_g, reduced_mse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qam16() -> ConstellationSpec {
        ConstellationSpec::new(16).unwrap()
    }

    #[test]
    fn constellation_geometry() {
        let s = qam16();
        assert!((s.delta() - 1.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!((s.voronoi_side() - 8.0 / 10f64.sqrt()).abs() < 1e-15);
        assert!((s.sigma_v2() - 16.0 / 15.0).abs() < 1e-15);
        for m in [4, 16, 64, 256] {
            let spec = ConstellationSpec::new(m).unwrap();
            let energy: f64 = spec.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
            assert!((energy - 1.0).abs() < 1e-12);
            assert!((spec.voronoi_side() - 2.0 * (m as f64).sqrt() * spec.delta()).abs() < 1e-15);
        }
        assert!(ConstellationSpec::new(8).is_err());
        assert!(ConstellationSpec::new(36).is_err());
    }

    #[test]
    fn modulation_examples() {
        let s = qam16();
        let d = s.delta();
        let p = qam_modulate(&[false; 4], &s).unwrap();
        assert!((p[0] - c(-3.0 * d, -3.0 * d)).norm() < 1e-15);
        let q = ConstellationSpec::new(4).unwrap();
        let p = qam_modulate(&[false, false], &q).unwrap();
        assert!((p[0] - c(-1.0, -1.0) / 2f64.sqrt()).norm() < 1e-15);
        assert!(qam_modulate(&[true; 3], &s).is_err());
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let s = ConstellationSpec::new(64).unwrap();
        let pts = s.points();
        let min_d = 2.0 * s.delta();
        for a in 0..64 {
            for b in 0..64 {
                if ((pts[a] - pts[b]).norm() - min_d).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn modulate_demodulate_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in [4, 16, 64] {
            let s = ConstellationSpec::new(m).unwrap();
            let bits: Vec<bool> = (0..600 * s.bits_per_symbol()).map(|_| rng.random()).collect();
            assert_eq!(qam_demodulate(&qam_modulate(&bits, &s).unwrap(), &s), bits);
        }
    }

    #[test]
    fn modulo_examples() {
        assert!((modulo_voronoi(c(0.3, 0.0), 2.0) - c(0.3, 0.0)).norm() < 1e-15);
        assert!((modulo_voronoi(c(1.7, 0.0), 2.0) - c(-0.3, 0.0)).norm() < 1e-12);
        // Half-open interval keeps -D/2 and sends +D/2 to -D/2.
        assert!((modulo_voronoi(c(-1.0, -3.1), 2.0) - c(-1.0, 0.9)).norm() < 1e-12);
        assert_eq!(modulo_voronoi(c(1.0, 3.0), 2.0), c(-1.0, -1.0));
    }

    #[test]
    fn modulo_wrap_table_and_idempotence() {
        let d = 2.0;
        for n in -40..=40 {
            let x = n as f64 * 0.25 + 0.01;
            let w = wrap(x, d);
            assert!((-1.0..1.0).contains(&w));
            let k = (x - w) / d;
            assert!((k - k.round()).abs() < 1e-12);
            assert_eq!(wrap(w, d), w);
        }
    }

    fn thp_design_with_feedback(b21: f64) -> TransceiverDesign {
        let mut cm = identity(2);
        cm[(1, 0)] = c(b21, 0.0);
        TransceiverDesign {
            scheme: Scheme::Thp,
            rule: DesignRule::LinearMmse,
            p: identity(2),
            g: identity(2),
            c: cm,
            stream_mses: vec![0.1, 0.1],
            objective_value: None,
        }
    }

    #[test]
    fn thp_transmit_examples() {
        let spec = qam16();
        let d = spec.delta();
        let s = vec![c(d, -d), c(3.0 * d, d)];
        let tx = thp_transmit(&s, &thp_design_with_feedback(0.0), &spec).unwrap();
        assert_eq!(tx.v, s);
        assert_eq!(tx.x, s);

        let tx = thp_transmit(&s, &thp_design_with_feedback(0.5), &spec).unwrap();
        let want = s[1] - 0.5 * tx.v[0];
        assert!((tx.v[1] - want).norm() < 1e-15);

        let mut dfe = thp_design_with_feedback(0.0);
        dfe.scheme = Scheme::Dfe;
        assert!(matches!(
            thp_transmit(&s, &dfe, &spec),
            Err(Error::SchemeMismatch { .. })
        ));
    }

    fn modulo_output_covariance(
        d: &TransceiverDesign,
        spec: &ConstellationSpec,
        rng: &mut impl Rng,
        n: usize,
    ) -> CMatrix {
        let k = d.streams();
        let mut cov = CMatrix::zeros(k, k);
        for _ in 0..n {
            let bits: Vec<bool> = (0..k * spec.bits_per_symbol()).map(|_| rng.random()).collect();
            let s = qam_modulate(&bits, spec).unwrap();
            let v = thp_transmit(&s, d, spec).unwrap().v;
            for i in 0..k {
                for j in 0..k {
                    cov[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        cov.unscale(n as f64)
    }

    #[test]
    fn thp_modulo_output_power() {
        let spec = qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng));
        let ch = ChannelInstance::thp(h, identity(4).scale(0.05), 4, spec.sigma_v2()).unwrap();
        let d = design(&ch, 4.0, &Objective::sum_mse()).unwrap();
        let cov = modulo_output_covariance(&d, &spec, &mut rng, 100_000);
        assert!((cov[(0, 0)].re - 1.0).abs() < 0.02);
        for k in 1..4 {
            assert!((cov[(k, k)].re / spec.sigma_v2() - 1.0).abs() < 0.05, "{cov:.3}");
        }
    }

    #[test]
    fn thp_modulo_output_is_white_under_strong_feedback() {
        // Feedback taps of several Voronoi widths wrap on almost every symbol.
        // Stream 1 stays a discrete QAM point, so only pairs among the
        // pre-subtracted streams are expected to decorrelate.
        let spec = qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut cm = identity(4);
        for i in 1..4 {
            for j in 0..i {
                cm[(i, j)] = c(rng.random_range(2.0..6.0), rng.random_range(-6.0..6.0));
            }
        }
        let d = TransceiverDesign {
            scheme: Scheme::Thp,
            rule: DesignRule::LinearMmse,
            p: identity(4),
            g: identity(4),
            c: cm,
            stream_mses: vec![0.1; 4],
            objective_value: None,
        };
        let cov = modulo_output_covariance(&d, &spec, &mut rng, 100_000);
        for i in 0..4 {
            for j in 0..4 {
                if i == j && i > 0 {
                    assert!((cov[(i, i)].re / spec.sigma_v2() - 1.0).abs() < 0.05, "{cov:.3}");
                } else if i != j && i > 0 && j > 0 {
                    assert!(cov[(i, j)].norm() < 0.05, "{cov:.3}");
                }
            }
        }
    }

    #[test]
    fn detectors_are_exact_without_noise() {
        let spec = qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng));
        let rn = identity(4).scale(1e-12);
        for scheme in [Scheme::Dfe, Scheme::Thp] {
            let s2 = if scheme == Scheme::Thp { spec.sigma_v2() } else { 1.0 };
            let ch = ChannelInstance::new(h.clone(), rn.clone(), 4, scheme, s2).unwrap();
            let d = design(&ch, 4.0, &Objective::sum_mse()).unwrap();
            let link = LinkRealization::new(&ch, &d, &spec).unwrap();
            let stats = link.run(&mut rng, 10_000, Feedback::Decisions).unwrap();
            assert_eq!(stats.bit_errors, 0, "{scheme:?}");
        }
    }

    #[test]
    fn zero_feedback_is_linear_detection() {
        let spec = qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = rayleigh_channel(&mut rng, 3, 3, 0.1).unwrap();
        let d = linear_mmse_baseline(&ch, 3.0).unwrap();
        let y: Vec<Complex64> = (0..3).map(|_| complex_gaussian(&mut rng)).collect();
        let det = dfe_detect(&y, &d, &spec).unwrap();
        let z = adjoint_vec(&d.g, &y);
        assert_eq!(det.soft, z);

        let mut t = d.clone();
        t.scheme = Scheme::Thp;
        let det = thp_detect(&y, &t, &spec).unwrap();
        assert_eq!(det.soft, z);
        assert!(matches!(
            dfe_detect(&y, &t, &spec),
            Err(Error::SchemeMismatch { .. })
        ));
    }

    #[test]
    fn genie_dfe_mse_matches_analysis() {
        let spec = qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = rayleigh_channel(&mut rng, 4, 4, 0.1).unwrap();
        let d = design(&ch, 4.0, &Objective::sum_mse()).unwrap();
        let stats = LinkRealization::new(&ch, &d, &spec)
            .unwrap()
            .run(&mut rng, 100_000, Feedback::Genie)
            .unwrap();
        let emp = stats.empirical_mse();
        let se = stats.mse_standard_error();
        for i in 0..4 {
            assert!((emp[i] - d.stream_mses[i]).abs() <= 3.0 * se[i], "stream {i}");
        }
    }

    #[test]
    fn thp_soft_error_matches_analysis() {
        let spec = qam16();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = CMatrix::from_fn(4, 4, |_, _| complex_gaussian(&mut rng));
        let ch = ChannelInstance::thp(h, identity(4).scale(0.1), 4, spec.sigma_v2()).unwrap();
        let d = design(&ch, 4.0, &Objective::sum_mse()).unwrap();
        let stats = LinkRealization::new(&ch, &d, &spec)
            .unwrap()
            .run(&mut rng, 100_000, Feedback::Decisions)
            .unwrap();
        let emp = stats.empirical_mse();
        let se = stats.mse_standard_error();
        // Stream 1 carries no pre-subtraction, so its modulo output keeps
        // unit power and lands below the σ_v² analysis; check the rest.
        for i in 1..4 {
            assert!((emp[i] - d.stream_mses[i]).abs() <= 4.0 * se[i], "stream {i}: {} vs {}", emp[i], d.stream_mses[i]);
        }
        assert!(emp[0] < d.stream_mses[0]);
    }

    #[test]
    fn mmse_baseline_examples() {
        let p = mmse_allocation(&[4.0, 1.0], 2.0);
        assert!((p[0] - 5.0 / 6.0).abs() < 1e-14 && (p[1] - 7.0 / 6.0).abs() < 1e-14);
        // 1-D numeric minimization of the total MSE over the split.
        let f = |x: f64| 1.0 / (1.0 + 4.0 * x) + 1.0 / (1.0 + (2.0 - x));
        let mut best = (0.0, f64::INFINITY);
        for i in 0..=200_000 {
            let x = 2.0 * i as f64 / 200_000.0;
            if f(x) < best.1 {
                best = (x, f(x));
            }
        }
        assert!((best.0 - 5.0 / 6.0).abs() < 1e-4);

        let ch = ChannelInstance::dfe(real_matrix(1, 1, &[1.0]), real_matrix(1, 1, &[1.0]), 1).unwrap();
        let d = linear_mmse_baseline(&ch, 3.0).unwrap();
        assert!((d.stream_mses[0] - 0.25).abs() < 1e-15);
        let d2 = linear_maxinfo_baseline(&ch, 3.0).unwrap();
        assert!((d2.stream_mses[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn baselines_versus_optimal_designs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let ch = rayleigh_channel(&mut rng, 4, 4, 0.1).unwrap();
            let mmse = linear_mmse_baseline(&ch, 1.0).unwrap();
            let info = linear_maxinfo_baseline(&ch, 1.0).unwrap();
            let convex = design(&ch, 1.0, &Objective::sum_mse()).unwrap();
            let prod = design(&ch, 1.0, &Objective::prod_mse()).unwrap();
            let sum = |d: &TransceiverDesign| d.stream_mses.iter().sum::<f64>();
            assert!(sum(&mmse) >= sum(&convex) - 1e-12);
            assert!(frobenius(&(&info.p - &prod.p)) < 1e-14);
            let mi = |d: &TransceiverDesign| crate::transceiver::mutual_information(&ch, &d.p).unwrap();
            assert!(mi(&info) >= mi(&mmse) - 1e-12);
            assert!((mmse.transmit_trace() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rayleigh_statistics_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut acc = 0.0;
        let draws = 100_000 / 16 + 1;
        for _ in 0..draws {
            let ch = rayleigh_channel(&mut rng, 4, 4, 1.0).unwrap();
            acc += ch.h().iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        assert!((acc / (draws * 16) as f64 - 1.0).abs() < 0.02);

        let ch = rayleigh_channel(&mut rng, 4, 4, 0.1).unwrap();
        let tr: f64 = (0..4).map(|i| ch.rn()[(i, i)].re).sum();
        assert!((tr - 0.4).abs() < 1e-15);

        let a = rayleigh_channel(&mut ChaCha8Rng::seed_from_u64(9), 4, 4, 1.0).unwrap();
        let b = rayleigh_channel(&mut ChaCha8Rng::seed_from_u64(9), 4, 4, 1.0).unwrap();
        assert_eq!(a.h(), b.h());
    }

    #[test]
    fn dfe_and_thp_mse_differ_only_by_sigma2_placement() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ch = rayleigh_channel(&mut rng, 3, 3, 0.2).unwrap();
        let thp = ch.with_scheme(Scheme::Thp, 16.0 / 15.0).unwrap();
        let p = CMatrix::from_fn(3, 3, |_, _| complex_gaussian(&mut rng));
        let mut cm = identity(3);
        cm[(2, 0)] = c(0.3, -0.1);
        let g = optimal_g(&ch, &p, &cm).unwrap();
        let e1 = crate::transceiver::mse_matrix(&ch, &p, &g, &cm).unwrap();
        let e2 = crate::transceiver::mse_matrix(&thp, &p, &g, &cm).unwrap();
        // DFE error matrix + (σ²−1)(C C^H − C P^H H^H G − G^H H P C^H + G^H H P P^H H^H G)
        let hp = ch.h() * &p;
        let signal = &cm * cm.adjoint() - &cm * hp.adjoint() * &g - g.adjoint() * &hp * cm.adjoint()
            + g.adjoint() * &hp * hp.adjoint() * &g;
        let want = &e1 + signal.scale(16.0 / 15.0 - 1.0);
        assert!(frobenius(&(&e2 - &want)) < 1e-12 * frobenius(&e2));
        let _ = reduced_mse(&thp, &p).unwrap();
    }
}
