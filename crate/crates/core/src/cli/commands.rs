use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::config::{load_design_config, load_sweep_config, matrix_to_repr, MatrixRepr};
use super::manifest::{ensure_dir, Command, RunManifest};
use super::verify::{run_verify, VerifyReport};
use super::CliError;
use crate::majorization::Objective;
use crate::montecarlo::{run_sweep, run_sweep_with_threads, BerRecord};
use crate::transceiver::{design, mutual_information, Scheme};

/// Everything `design` writes, with matrices at full double precision.
#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub label: String,
    pub scheme: Scheme,
    pub objective: Objective,
    pub streams: usize,
    pub sigma2: f64,
    pub total_power: f64,
    pub stream_mses: Vec<f64>,
    pub objective_value: Option<f64>,
    pub mutual_information_nats: f64,
    pub transmit_power: f64,
    pub h: MatrixRepr,
    pub rn: MatrixRepr,
    pub p: MatrixRepr,
    pub g: MatrixRepr,
    pub c: MatrixRepr,
}

impl DesignReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "design         {}", self.label);
        let _ = writeln!(s, "streams        {}", self.streams);
        let _ = writeln!(s, "sigma2         {:.6}", self.sigma2);
        let _ = writeln!(s, "total power    {:.6}", self.total_power);
        let _ = writeln!(s, "transmit power {:.6}", self.transmit_power);
        let mses: Vec<String> = self.stream_mses.iter().map(|m| format!("{m:.6}")).collect();
        let _ = writeln!(s, "stream mses    {}", mses.join(" "));
        match self.objective_value {
            Some(v) => {
                let _ = writeln!(s, "objective      {v:.6}");
            }
            None => s.push_str("objective      undefined\n"),
        }
        let _ = writeln!(s, "mutual info    {:.6} nats", self.mutual_information_nats);
        s
    }
}

pub fn cmd_design(config_path: &Path, out_dir: &Path) -> Result<DesignReport, CliError> {
    let cfg = load_design_config(config_path)?;
    let ch = cfg.channel_instance().map_err(|message| CliError::Config {
        path: config_path.display().to_string(),
        message,
    })?;
    let tx = design(&ch, cfg.total_power, &cfg.objective)?;
    let report = DesignReport {
        label: tx.label(),
        scheme: ch.scheme(),
        objective: cfg.objective.clone(),
        streams: tx.streams(),
        sigma2: ch.sigma2(),
        total_power: cfg.total_power,
        stream_mses: tx.stream_mses.clone(),
        objective_value: tx.objective_value,
        mutual_information_nats: mutual_information(&ch, &tx.p)?,
        transmit_power: tx.transmit_trace() * ch.sigma2(),
        h: matrix_to_repr(ch.h()),
        rn: matrix_to_repr(ch.rn()),
        p: matrix_to_repr(&tx.p),
        g: matrix_to_repr(&tx.g),
        c: matrix_to_repr(&tx.c),
    };

    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new(Command::Design, Some(config_path), out_dir);
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    manifest.emit(out_dir, "design.json", json.as_bytes())?;
    manifest.emit(out_dir, "design.txt", report.to_text().as_bytes())?;
    manifest.write(out_dir)?;
    Ok(report)
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text for sweep records: 17 significant digits, '.' decimal point.
pub fn ber_csv(records: &[BerRecord], streams: usize) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![
        "snr_db".to_string(),
        "design_label".into(),
        "bits_total".into(),
        "bit_errors".into(),
        "ber".into(),
    ];
    header.extend((1..=streams).map(|i| format!("mse_stream_{i}_empirical")));
    header.extend((1..=streams).map(|i| format!("mse_stream_{i}_analytic")));
    w.write_record(&header).expect("in-memory write");
    for r in records {
        let mut row = vec![
            sci(r.snr_db),
            r.design_label.clone(),
            r.bits_total.to_string(),
            r.bit_errors.to_string(),
            sci(r.ber),
        ];
        row.extend(r.empirical_mse.iter().map(|&x| sci(x)));
        row.extend(r.analytic_mse.iter().map(|&x| sci(x)));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

#[derive(Debug, Clone)]
pub struct SimulateOutcome {
    pub records: Vec<BerRecord>,
    pub manifest: RunManifest,
}

pub const BER_FILE: &str = "ber.csv";

pub fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<SimulateOutcome, CliError> {
    let cfg = load_sweep_config(config_path)?;
    let records = match threads {
        Some(n) => run_sweep_with_threads(&cfg, n)?,
        None => run_sweep(&cfg)?,
    };
    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new(Command::Simulate, Some(config_path), out_dir);
    manifest.master_seed = Some(cfg.master_seed);
    manifest.seed_derivation = Some(
        "channel: splitmix64(master, 1, channel_index); link: splitmix64(master, 2, snr_index, channel_index); ChaCha8".into(),
    );
    manifest.record_errors = records
        .iter()
        .filter_map(|r| {
            r.error.as_ref().map(|e| {
                format!(
                    "snr {} dB, {}: {} of {} channels failed: {e}",
                    r.snr_db, r.design_label, r.failed_channels, cfg.channels_per_point
                )
            })
        })
        .collect();
    manifest.emit(out_dir, BER_FILE, ber_csv(&records, cfg.streams).as_bytes())?;
    manifest.write(out_dir)?;
    Ok(SimulateOutcome { records, manifest })
}

/// Runs the invariant suites; with `out_dir`, also writes the report.
pub fn cmd_verify(
    seed: u64,
    trials: usize,
    inject_fault: bool,
    out_dir: Option<&Path>,
) -> Result<VerifyReport, CliError> {
    if trials == 0 {
        return Err(CliError::Config {
            path: "--trials".into(),
            message: "trials must be >= 1".into(),
        });
    }
    let report = run_verify(seed, trials, inject_fault);
    if let Some(dir) = out_dir {
        ensure_dir(dir)?;
        let mut manifest = RunManifest::new(Command::Verify, None, dir);
        manifest.master_seed = Some(seed);
        let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
        json.push('\n');
        manifest.emit(dir, "verify.json", json.as_bytes())?;
        manifest.write(dir)?;
    }
    Ok(report)
}
