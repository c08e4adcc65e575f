//! Randomized invariant suites behind the `verify` command.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linkmodel::complex_gaussian;
use crate::majorization::{
    additive_majorizes, mean_vector, multiplicative_majorizes, multiplicative_majorizes_via_logs,
    Objective,
};
use crate::matdecomp::{
    c, cholesky_lower, frobenius, gmd_rotation, hermitian_part, identity, ln_det_hpd, qr_positive,
    singular_values, CMatrix,
};
use crate::montecarlo::derive_seed;
use crate::transceiver::{design, mse_matrix, optimal_c, reduced_mse, waterfill, ChannelInstance};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    pub failures: usize,
    /// Largest observed value of the suite's checked quantity, scaled so
    /// that 1.0 sits exactly at the tolerance.
    pub worst: f64,
    pub first_failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: usize,
    pub fault_injected: bool,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.suites {
            s.push_str(&format!(
                "{:<14} {} {}/{} failed, worst {:.3e} of tolerance\n",
                r.name,
                if r.passed() { "PASS" } else { "FAIL" },
                r.failures,
                r.instances,
                r.worst
            ));
            if let Some(f) = &r.first_failure {
                s.push_str(&format!("    first failure: {f}\n"));
            }
        }
        s
    }
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// `A A^H / n + floor·I` with Gaussian `A`.
pub fn random_pd(rng: &mut impl Rng, n: usize, floor: f64) -> CMatrix {
    let a = random_matrix(rng, n, n);
    hermitian_part(&((&a * a.adjoint()).unscale(n as f64) + identity(n).scale(floor)))
}

pub fn random_unit_lower(rng: &mut impl Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => complex_gaussian(rng),
        std::cmp::Ordering::Equal => c(1.0, 0.0),
        std::cmp::Ordering::Less => c(0.0, 0.0),
    })
}

/// 4x4 Gaussian channel with coloured noise around 0.1 per antenna.
pub fn random_channel(rng: &mut impl Rng) -> Result<ChannelInstance> {
    let h = random_matrix(rng, 4, 4);
    let rn = random_pd(rng, 4, 0.2).scale(0.1);
    ChannelInstance::dfe(h, rn, 4)
}

struct Suite {
    result: SuiteResult,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite {
            result: SuiteResult {
                name,
                instances: 0,
                failures: 0,
                worst: 0.0,
                first_failure: None,
            },
        }
    }

    /// `ratio` is the checked quantity over its tolerance; > 1 fails.
    fn record(&mut self, trial: usize, outcome: Result<Vec<(&'static str, f64)>>) {
        self.result.instances += 1;
        let failure = match outcome {
            Ok(ratios) => {
                let mut failed = None;
                for (what, r) in ratios {
                    let r = if r.is_nan() { f64::INFINITY } else { r };
                    self.result.worst = self.result.worst.max(r);
                    if r > 1.0 && failed.is_none() {
                        failed = Some(format!("trial {trial}: {what} at {r:.3e} x tolerance"));
                    }
                }
                failed
            }
            Err(e) => Some(format!("trial {trial}: {e}")),
        };
        if let Some(f) = failure {
            self.result.failures += 1;
            self.result.first_failure.get_or_insert(f);
        }
    }
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        f64::INFINITY
    }
}

fn majorization_instance(rng: &mut impl Rng) -> Result<Vec<(&'static str, f64)>> {
    let n = 4;
    let mut l = random_matrix(rng, n, n);
    for i in 0..n {
        l[(i, i)] = c(rng.random_range(0.2..3.0), 0.0);
        for j in i + 1..n {
            l[(i, j)] = c(0.0, 0.0);
        }
    }
    let d: Vec<f64> = (0..n).map(|i| l[(i, i)].norm_sqr()).collect();
    let s: Vec<f64> = singular_values(&l)?.iter().map(|x| x * x).collect();
    let direct = multiplicative_majorizes(&d, &s)?;
    let logs = multiplicative_majorizes_via_logs(&d, &s)?;
    let reverse_equiv =
        multiplicative_majorizes(&s, &d)? == multiplicative_majorizes_via_logs(&s, &d)?;
    let mean = additive_majorizes(&mean_vector(&d), &d)?;
    Ok(vec![
        ("diag^2 <=x sv^2", flag(direct)),
        ("log equivalence", flag(direct == logs && reverse_equiv)),
        ("mean vector", flag(mean)),
    ])
}

fn diagonal_mse_instance(rng: &mut impl Rng) -> Result<Vec<(&'static str, f64)>> {
    let ch = random_channel(rng)?;
    let tx = design(&ch, 10.0, &Objective::sum_mse())?;
    let e = mse_matrix(&ch, &tx.p, &tx.g, &tx.c)?;
    let k = tx.streams();
    let mut off = e.clone();
    for i in 0..k {
        off[(i, i)] = c(0.0, 0.0);
    }
    let l = cholesky_lower(&reduced_mse(&ch, &tx.p)?)?;
    let diag_err = (0..k)
        .map(|i| {
            let want = l[(i, i)].re.powi(2);
            (e[(i, i)].re - want).abs() / want
        })
        .fold(0.0, f64::max);
    Ok(vec![
        ("off-diagonal mass", frobenius(&off) / frobenius(&e) / 1e-9),
        ("diagonal vs L_ii^2", diag_err / 1e-9),
    ])
}

fn equal_mse_instance(rng: &mut impl Rng) -> Result<Vec<(&'static str, f64)>> {
    let ch = random_channel(rng)?;
    let tx = design(&ch, 10.0, &Objective::max_mse())?;
    let k = tx.streams() as f64;
    let gm = (ln_det_hpd(&reduced_mse(&ch, &tx.p)?)? / k).exp();
    let max = tx.stream_mses.iter().cloned().fold(f64::MIN, f64::max);
    let min = tx.stream_mses.iter().cloned().fold(f64::MAX, f64::min);
    let dev = tx
        .stream_mses
        .iter()
        .map(|m| (m - gm).abs() / gm)
        .fold(0.0, f64::max);
    Ok(vec![("max/min - 1", (max / min - 1.0) / 1e-7), ("det^(1/K)", dev / 1e-7)])
}

fn trace_cmc(c_mat: &CMatrix, m: &CMatrix) -> f64 {
    (c_mat * m * c_mat.adjoint()).trace().re
}

fn weyl_instance(rng: &mut impl Rng, inject_fault: bool) -> Result<Vec<(&'static str, f64)>> {
    let m = random_pd(rng, 4, 0.05);
    let cp = random_unit_lower(rng, 4);
    let (mut c_opt, mses) = optimal_c(&m)?;
    if inject_fault {
        c_opt[(1, 0)] += c(0.05, -0.05);
    }
    let bound: f64 = mses.iter().sum();
    let slack = bound - trace_cmc(&cp, &m);
    let gap = (trace_cmc(&c_opt, &m) - bound).abs();
    Ok(vec![
        ("trace below bound", slack.max(0.0) / 1e-9),
        ("optimal C gap", gap / (1e-9 * bound.max(1.0))),
    ])
}

fn waterfill_instance(rng: &mut impl Rng) -> Result<Vec<(&'static str, f64)>> {
    let n = rng.random_range(1..=6);
    let mut lambda: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-1.3..1.3))).collect();
    lambda.sort_by(|a, b| b.total_cmp(a));
    let budget = 10f64.powf(rng.random_range(-1.0..1.3));
    let weights: Option<Vec<f64>> = rng
        .random_bool(0.5)
        .then(|| (0..n).map(|_| rng.random_range(0.5..2.0)).collect());
    let wf = waterfill(&lambda, budget, weights.as_deref())?;
    let w = |i: usize| weights.as_ref().map_or(1.0, |w| w[i]);
    let mut active = 0.0f64;
    let mut inactive = 0.0f64;
    for i in 0..n {
        let level = w(i) * wf.water_level - 1.0 / lambda[i];
        if wf.powers[i] > 0.0 {
            active = active.max((level - wf.powers[i]).abs());
        } else {
            inactive = inactive.max(level);
        }
    }
    let total: f64 = wf.powers.iter().sum();
    Ok(vec![
        ("active level", active / 1e-10),
        ("inactive level", inactive.max(0.0) / 1e-10),
        ("budget", (total - budget).abs() / budget / 1e-12),
    ])
}

fn gmd_instance(rng: &mut impl Rng) -> Result<Vec<(&'static str, f64)>> {
    let a = random_matrix(rng, 4, 4);
    let v = gmd_rotation(&a)?;
    let (_, r) = qr_positive(&(&a * v))?;
    let gm = (singular_values(&a)?.iter().map(|s| s.ln()).sum::<f64>() / 4.0).exp();
    let diag: Vec<f64> = (0..4).map(|i| r[(i, i)].re).collect();
    let max = diag.iter().cloned().fold(f64::MIN, f64::max);
    let min = diag.iter().cloned().fold(f64::MAX, f64::min);
    let dev = diag.iter().map(|d| (d - gm).abs() / gm).fold(0.0, f64::max);
    Ok(vec![("R diagonal spread", (max - min) / gm / 1e-8), ("|det|^(1/4)", dev / 1e-8)])
}

/// Runs every suite for `trials` random instances each.
pub fn run_verify(seed: u64, trials: usize, inject_fault: bool) -> VerifyReport {
    let names = ["majorization", "diagonal-mse", "equal-mse", "weyl-bound", "waterfill-kkt", "gmd"];
    let suites = names
        .iter()
        .enumerate()
        .map(|(idx, &name)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[idx as u64]));
            let mut suite = Suite::new(name);
            for t in 0..trials {
                let outcome = match idx {
                    0 => majorization_instance(&mut rng),
                    1 => diagonal_mse_instance(&mut rng),
                    2 => equal_mse_instance(&mut rng),
                    3 => weyl_instance(&mut rng, inject_fault),
                    4 => waterfill_instance(&mut rng),
                    _ => gmd_instance(&mut rng),
                };
                suite.record(t, outcome);
            }
            suite.result
        })
        .collect();
    VerifyReport {
        seed,
        trials,
        fault_injected: inject_fault,
        suites,
    }
}
