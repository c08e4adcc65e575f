//! Seeded BER/MSE sweeps over SNR and design rules.
//!
//! Every `(snr, channel)` pair is an independent task with its own seeds
//! derived from the master seed by index, so the output does not depend
//! on how tasks are scheduled. All designs at one task see the same
//! channel, bits and noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linkmodel::{
    linear_maxinfo_baseline, linear_mmse_baseline, rayleigh_channel, ConstellationSpec, Feedback,
    LinkRealization, LinkStats,
};
use crate::majorization::Objective;
use crate::transceiver::{design, ChannelInstance, Scheme, TransceiverDesign};

/// One transceiver to simulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum DesignSpec {
    Optimal {
        scheme: Scheme,
        objective: Objective,
        /// Feed back transmitted symbols instead of decisions (DFE only).
        #[serde(default)]
        genie: bool,
    },
    LinearMmse,
    LinearMaxinfo,
}

impl DesignSpec {
    pub fn optimal(scheme: Scheme, objective: Objective) -> Self {
        DesignSpec::Optimal {
            scheme,
            objective,
            genie: false,
        }
    }

    pub fn genie_dfe(objective: Objective) -> Self {
        DesignSpec::Optimal {
            scheme: Scheme::Dfe,
            objective,
            genie: true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DesignSpec::Optimal {
                scheme,
                objective,
                genie,
            } => {
                let class = match objective.schur_class() {
                    crate::majorization::SchurClass::ConvexInLogMse => "convex",
                    crate::majorization::SchurClass::ConcaveInLogMse => "concave",
                };
                let mut s = format!("{}-{class}-{}", scheme.name(), objective.name());
                if *genie {
                    s.push_str("-genie");
                }
                s
            }
            DesignSpec::LinearMmse => "linear-mmse".into(),
            DesignSpec::LinearMaxinfo => "linear-maxinfo".into(),
        }
    }

    fn scheme(&self) -> Scheme {
        match self {
            DesignSpec::Optimal { scheme, .. } => *scheme,
            _ => Scheme::Dfe,
        }
    }

    fn feedback(&self) -> Feedback {
        match self {
            DesignSpec::Optimal { genie: true, .. } => Feedback::Genie,
            _ => Feedback::Decisions,
        }
    }

    /// Builds the design for a channel already carrying the right scheme.
    pub fn build(&self, ch: &ChannelInstance, total_power: f64) -> Result<TransceiverDesign> {
        match self {
            DesignSpec::Optimal { objective, .. } => design(ch, total_power, objective),
            DesignSpec::LinearMmse => linear_mmse_baseline(ch, total_power),
            DesignSpec::LinearMaxinfo => linear_maxinfo_baseline(ch, total_power),
        }
    }
}

fn default_total_power() -> f64 {
    1.0
}

/// Sweep description. SNR is `P_total / tr(R_n)` in dB with white noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub streams: usize,
    pub constellation: usize,
    pub snr_db: Vec<f64>,
    pub channels_per_point: usize,
    /// Symbol vectors (K symbols each) sent per channel draw.
    pub symbols_per_channel: usize,
    pub designs: Vec<DesignSpec>,
    pub master_seed: u64,
    #[serde(default = "default_total_power")]
    pub total_power: f64,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("tx_antennas", self.tx_antennas),
            ("rx_antennas", self.rx_antennas),
            ("streams", self.streams),
            ("channels_per_point", self.channels_per_point),
            ("symbols_per_channel", self.symbols_per_channel),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Domain(format!("{name} must be >= 1")));
            }
        }
        if self.streams > self.tx_antennas.min(self.rx_antennas) {
            return Err(Error::Dimension(format!(
                "{} streams over {}x{} antennas",
                self.streams, self.rx_antennas, self.tx_antennas
            )));
        }
        ConstellationSpec::new(self.constellation)?;
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Domain("snr grid must be non-empty and finite".into()));
        }
        if self.designs.is_empty() {
            return Err(Error::Domain("no designs to simulate".into()));
        }
        for d in &self.designs {
            if let DesignSpec::Optimal {
                scheme: Scheme::Thp,
                genie: true,
                ..
            } = d
            {
                return Err(Error::Domain(
                    "genie feedback applies to decision feedback designs only".into(),
                ));
            }
        }
        if !(self.total_power.is_finite() && self.total_power > 0.0) {
            return Err(Error::Domain("total_power must be positive".into()));
        }
        Ok(())
    }

    /// White-noise power per receive antenna at `snr_db`.
    pub fn noise_power(&self, snr_db: f64) -> f64 {
        self.total_power / (10f64.powf(snr_db / 10.0) * self.rx_antennas as f64)
    }
}

/// One (SNR, design) measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerRecord {
    pub snr_db: f64,
    pub design_label: String,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub empirical_mse: Vec<f64>,
    pub analytic_mse: Vec<f64>,
    /// Channel draws on which the design could not be built.
    pub failed_channels: usize,
    pub error: Option<String>,
}

impl BerRecord {
    /// Wilson score interval at ~95% confidence.
    pub fn ber_interval(&self) -> (f64, f64) {
        wilson_interval(self.bit_errors, self.bits_total, 1.959964)
    }
}

pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// SplitMix64 finalizer; turns (seed, indices) into independent stream seeds.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut x = master;
    for &p in parts {
        x = x.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(p);
        let mut z = x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x = z ^ (z >> 31);
    }
    x
}

const CHANNEL_STREAM: u64 = 1;
const LINK_STREAM: u64 = 2;

struct TaskOutcome {
    per_design: Vec<std::result::Result<(LinkStats, Vec<f64>), String>>,
}

fn draw_channel(cfg: &SweepConfig, snr_db: f64, channel_index: usize) -> Result<ChannelInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        cfg.master_seed,
        &[CHANNEL_STREAM, channel_index as u64],
    ));
    let base = rayleigh_channel(&mut rng, cfg.rx_antennas, cfg.tx_antennas, cfg.noise_power(snr_db))?;
    ChannelInstance::dfe(base.h().clone(), base.rn().clone(), cfg.streams)
}

fn run_task(cfg: &SweepConfig, spec: &ConstellationSpec, snr_index: usize, channel_index: usize) -> TaskOutcome {
    let snr_db = cfg.snr_db[snr_index];
    let link_seed = derive_seed(
        cfg.master_seed,
        &[LINK_STREAM, snr_index as u64, channel_index as u64],
    );
    let base = draw_channel(cfg, snr_db, channel_index);
    let per_design = cfg
        .designs
        .iter()
        .map(|d| {
            let base = base.as_ref().map_err(|e| e.to_string())?;
            let ch = match d.scheme() {
                Scheme::Dfe => base.clone(),
                Scheme::Thp => base
                    .with_scheme(Scheme::Thp, spec.sigma_v2())
                    .map_err(|e| e.to_string())?,
            };
            let tx = d.build(&ch, cfg.total_power).map_err(|e| e.to_string())?;
            let mut rng = ChaCha8Rng::seed_from_u64(link_seed);
            let stats = LinkRealization::new(&ch, &tx, spec)
                .and_then(|l| l.run(&mut rng, cfg.symbols_per_channel, d.feedback()))
                .map_err(|e| e.to_string())?;
            Ok((stats, tx.stream_mses))
        })
        .collect();
    TaskOutcome { per_design }
}

/// Runs the sweep on the current rayon pool.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let spec = ConstellationSpec::new(cfg.constellation)?;
    let tasks: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|s| (0..cfg.channels_per_point).map(move |c| (s, c)))
        .collect();
    let outcomes: Vec<TaskOutcome> = tasks
        .par_iter()
        .map(|&(s, c)| run_task(cfg, &spec, s, c))
        .collect();

    let mut records = Vec::with_capacity(cfg.snr_db.len() * cfg.designs.len());
    for (s, &snr_db) in cfg.snr_db.iter().enumerate() {
        let chunk = &outcomes[s * cfg.channels_per_point..(s + 1) * cfg.channels_per_point];
        for (d, spec_d) in cfg.designs.iter().enumerate() {
            let mut stats = LinkStats::new(cfg.streams);
            let mut analytic = vec![0.0; cfg.streams];
            let mut ok = 0usize;
            let mut failed = 0usize;
            let mut error = None;
            for outcome in chunk {
                match &outcome.per_design[d] {
                    Ok((st, mses)) => {
                        stats.merge(st);
                        for (a, m) in analytic.iter_mut().zip(mses) {
                            *a += m;
                        }
                        ok += 1;
                    }
                    Err(e) => {
                        failed += 1;
                        error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            if ok > 0 {
                for a in &mut analytic {
                    *a /= ok as f64;
                }
            }
            records.push(BerRecord {
                snr_db,
                design_label: spec_d.label(),
                bit_errors: stats.bit_errors,
                bits_total: stats.bits,
                ber: stats.ber(),
                empirical_mse: stats.empirical_mse(),
                analytic_mse: analytic,
                failed_channels: failed,
                error,
            });
        }
    }
    Ok(records)
}

/// Runs the sweep on a dedicated pool with `threads` workers.
pub fn run_sweep_with_threads(cfg: &SweepConfig, threads: usize) -> Result<Vec<BerRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(cfg))
}

/// Per-stream comparison of simulated and analytic MSE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamMseCheck {
    pub stream: usize,
    pub empirical: f64,
    pub standard_error: f64,
    pub analytic: f64,
    pub z_score: f64,
    pub flagged: bool,
}

/// Simulates a decision-feedback design with genie feedback and compares
/// the quantizer-input error power of each stream with `L_ii²`.
pub fn empirical_vs_analytic_mse(
    ch: &ChannelInstance,
    tx: &TransceiverDesign,
    spec: &ConstellationSpec,
    vectors: usize,
    seed: u64,
) -> Result<Vec<StreamMseCheck>> {
    if tx.scheme != Scheme::Dfe {
        return Err(Error::SchemeMismatch {
            expected: "dfe",
            found: tx.scheme.name(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stats = LinkRealization::new(ch, tx, spec)?.run(&mut rng, vectors, Feedback::Genie)?;
    let emp = stats.empirical_mse();
    let se = stats.mse_standard_error();
    Ok((0..tx.streams())
        .map(|i| {
            let z = if se[i] > 0.0 {
                (emp[i] - tx.stream_mses[i]) / se[i]
            } else if emp[i] == tx.stream_mses[i] {
                0.0
            } else {
                f64::INFINITY
            };
            StreamMseCheck {
                stream: i + 1,
                empirical: emp[i],
                standard_error: se[i],
                analytic: tx.stream_mses[i],
                z_score: z,
                flagged: z.abs() > 3.0,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matdecomp::{identity, CMatrix};

    fn small_config() -> SweepConfig {
        SweepConfig {
            tx_antennas: 2,
            rx_antennas: 2,
            streams: 2,
            constellation: 16,
            snr_db: vec![10.0, 20.0],
            channels_per_point: 6,
            symbols_per_channel: 300,
            designs: vec![
                DesignSpec::optimal(Scheme::Dfe, Objective::sum_mse()),
                DesignSpec::optimal(Scheme::Thp, Objective::sum_mse()),
                DesignSpec::LinearMmse,
            ],
            master_seed: 42,
            total_power: 1.0,
        }
    }

    #[test]
    fn record_layout_and_ber_identity() {
        let recs = run_sweep(&small_config()).unwrap();
        assert_eq!(recs.len(), 6);
        assert_eq!(recs[0].design_label, "dfe-convex-sum_mse");
        assert_eq!(recs[1].design_label, "thp-convex-sum_mse");
        assert_eq!(recs[2].design_label, "linear-mmse");
        for r in &recs {
            assert_eq!(r.bits_total, 6 * 300 * 2 * 4);
            assert_eq!(r.ber, r.bit_errors as f64 / r.bits_total as f64);
            assert!((0.0..=1.0).contains(&r.ber));
        }
    }

    #[test]
    fn sweep_is_reproducible_across_thread_counts() {
        let cfg = small_config();
        let a = run_sweep_with_threads(&cfg, 1).unwrap();
        let b = run_sweep_with_threads(&cfg, 4).unwrap();
        let c = run_sweep_with_threads(&cfg, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn noiseless_sweep_has_no_errors() {
        let mut cfg = small_config();
        cfg.snr_db = vec![120.0];
        cfg.symbols_per_channel = 2_000;
        cfg.designs.push(DesignSpec::LinearMaxinfo);
        for r in run_sweep(&cfg).unwrap() {
            assert_eq!(r.bit_errors, 0, "{}", r.design_label);
        }
    }

    #[test]
    fn vanishing_snr_is_chance_level() {
        let mut cfg = small_config();
        cfg.snr_db = vec![-60.0];
        cfg.designs = vec![DesignSpec::LinearMmse];
        cfg.symbols_per_channel = 2_000;
        let r = &run_sweep(&cfg).unwrap()[0];
        assert!((r.ber - 0.5).abs() < 0.05, "{}", r.ber);
    }

    #[test]
    fn infeasible_designs_become_record_errors() {
        let mut cfg = small_config();
        cfg.designs = vec![DesignSpec::optimal(
            Scheme::Dfe,
            Objective::weighted_geo_mean(vec![1.0, 2.0, 3.0]).unwrap(),
        )];
        let recs = run_sweep(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        for r in recs {
            assert_eq!(r.failed_channels, 6);
            assert!(r.error.is_some());
            assert_eq!(r.bits_total, 0);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = small_config();
        cfg.streams = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.designs = vec![DesignSpec::Optimal {
            scheme: Scheme::Thp,
            objective: Objective::sum_mse(),
            genie: true,
        }];
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.snr_db = vec![f64::NAN];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seeds_differ_per_index() {
        let a = derive_seed(1, &[2, 0, 0]);
        let b = derive_seed(1, &[2, 0, 1]);
        let c = derive_seed(1, &[2, 1, 0]);
        assert!(a != b && b != c && a != c);
        assert_eq!(a, derive_seed(1, &[2, 0, 0]));
    }

    #[test]
    fn mse_check_zero_precoder_and_equal_streams() {
        let spec = ConstellationSpec::new(16).unwrap();
        let ch = ChannelInstance::dfe(identity(2), identity(2).scale(0.1), 2).unwrap();
        let zero = TransceiverDesign {
            scheme: Scheme::Dfe,
            rule: crate::transceiver::DesignRule::LinearMmse,
            p: CMatrix::zeros(2, 2),
            g: CMatrix::zeros(2, 2),
            c: identity(2),
            stream_mses: vec![1.0, 1.0],
            objective_value: None,
        };
        for s in empirical_vs_analytic_mse(&ch, &zero, &spec, 50_000, 1).unwrap() {
            assert!(!s.flagged, "{s:?}");
        }

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ch = rayleigh_channel(&mut rng, 4, 4, 0.05).unwrap();
        let tx = design(&ch, 1.0, &Objective::sum_mse()).unwrap();
        let checks = empirical_vs_analytic_mse(&ch, &tx, &spec, 100_000, 2).unwrap();
        for s in &checks {
            assert!(!s.flagged, "{s:?}");
        }
        // Equal-MSE design: every pair within overlapping 3σ bars.
        for a in &checks {
            for b in &checks {
                assert!((a.empirical - b.empirical).abs() <= 3.0 * (a.standard_error + b.standard_error));
            }
        }
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let (lo, hi) = wilson_interval(50, 1000, 1.96);
        assert!(lo < 0.05 && 0.05 < hi);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
        let (lo, _) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
    }
}
