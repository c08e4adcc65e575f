//! Majorization predicates and the catalog of design objectives over
//! per-stream MSEs.
//!
//! Objectives are written as `g(mse)`, but their Schur class is stated
//! with respect to the log-MSE vector `l = ln(mse)`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Absolute slack on (log-)sums in the predicates.
pub const MAJORIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchurClass {
    ConvexInLogMse,
    ConcaveInLogMse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    MaxMse,
    SumMse,
    /// `det(E)`; both Schur-convex and Schur-concave in `l`. Filed as
    /// concave so the linear design applies; the equal-MSE design reaches
    /// the same value.
    ProdMse,
    WeightedGeoMean { weights: Vec<f64> },
    /// Maximize the weakest stream's SINR, evaluated as `-min_i SINR_i`.
    MinSinrMax,
    SumBer { constellation_size: usize },
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::MaxMse => "max_mse",
            ObjectiveKind::SumMse => "sum_mse",
            ObjectiveKind::ProdMse => "prod_mse",
            ObjectiveKind::WeightedGeoMean { .. } => "weighted_geo_mean",
            ObjectiveKind::MinSinrMax => "min_sinr_max",
            ObjectiveKind::SumBer { .. } => "sum_ber",
        }
    }

    pub fn schur_class(&self) -> SchurClass {
        match self {
            ObjectiveKind::MaxMse
            | ObjectiveKind::SumMse
            | ObjectiveKind::MinSinrMax
            | ObjectiveKind::SumBer { .. } => SchurClass::ConvexInLogMse,
            ObjectiveKind::ProdMse | ObjectiveKind::WeightedGeoMean { .. } => {
                SchurClass::ConcaveInLogMse
            }
        }
    }
}

/// A design criterion together with its Schur class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectiveKind", into = "ObjectiveKind")]
pub struct Objective {
    kind: ObjectiveKind,
    schur_class: SchurClass,
}

impl TryFrom<ObjectiveKind> for Objective {
    type Error = Error;

    fn try_from(kind: ObjectiveKind) -> Result<Self> {
        Objective::new(kind)
    }
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        o.kind
    }
}

impl Objective {
    pub fn new(kind: ObjectiveKind) -> Result<Self> {
        match &kind {
            ObjectiveKind::WeightedGeoMean { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::Domain(
                        "weighted geometric mean needs strictly positive weights".into(),
                    ));
                }
            }
            ObjectiveKind::SumBer { constellation_size } => {
                let m = *constellation_size;
                let side = (m as f64).sqrt().round() as usize;
                if m < 4 || side * side != m {
                    return Err(Error::Domain(format!(
                        "constellation size {m} is not a square QAM order"
                    )));
                }
            }
            _ => {}
        }
        let schur_class = kind.schur_class();
        Ok(Objective { kind, schur_class })
    }

    pub fn max_mse() -> Self {
        Self::new(ObjectiveKind::MaxMse).expect("valid")
    }

    pub fn sum_mse() -> Self {
        Self::new(ObjectiveKind::SumMse).expect("valid")
    }

    pub fn prod_mse() -> Self {
        Self::new(ObjectiveKind::ProdMse).expect("valid")
    }

    pub fn min_sinr_max() -> Self {
        Self::new(ObjectiveKind::MinSinrMax).expect("valid")
    }

    pub fn weighted_geo_mean(weights: Vec<f64>) -> Result<Self> {
        Self::new(ObjectiveKind::WeightedGeoMean { weights })
    }

    pub fn sum_ber(constellation_size: usize) -> Result<Self> {
        Self::new(ObjectiveKind::SumBer { constellation_size })
    }

    pub fn kind(&self) -> &ObjectiveKind {
        &self.kind
    }

    pub fn schur_class(&self) -> SchurClass {
        self.schur_class
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }
}

fn require_same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Dimension(format!(
            "majorization needs equal non-empty lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn sorted_desc(a: &[f64]) -> Vec<f64> {
    let mut v = a.to_vec();
    v.sort_by(|x, y| y.total_cmp(x));
    v
}

/// `a ≺ b`: `b` additively majorizes `a`.
pub fn additive_majorizes(a: &[f64], b: &[f64]) -> Result<bool> {
    require_same_len(a, b)?;
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Domain("majorization input must be finite".into()));
    }
    let (a, b) = (sorted_desc(a), sorted_desc(b));
    let k = a.len();
    let (mut sa, mut sb) = (0.0, 0.0);
    for i in 0..k {
        sa += a[i];
        sb += b[i];
        if i + 1 < k && sa > sb + MAJORIZATION_TOL {
            return Ok(false);
        }
    }
    Ok((sa - sb).abs() <= MAJORIZATION_TOL)
}

/// `a ≺× b`: `b` multiplicatively majorizes `a` (positive entries).
pub fn multiplicative_majorizes(a: &[f64], b: &[f64]) -> Result<bool> {
    require_same_len(a, b)?;
    if a.iter().chain(b).any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Domain(
            "multiplicative majorization needs strictly positive entries".into(),
        ));
    }
    let (a, b) = (sorted_desc(a), sorted_desc(b));
    let k = a.len();
    let (mut pa, mut pb) = (1.0, 1.0);
    for i in 0..k {
        pa *= a[i];
        pb *= b[i];
        if i + 1 < k && pa > pb * (1.0 + MAJORIZATION_TOL) {
            return Ok(false);
        }
    }
    Ok(((pa - pb) / pb).abs() <= MAJORIZATION_TOL)
}

/// Same relation evaluated through `ln a ≺ ln b`.
pub fn multiplicative_majorizes_via_logs(a: &[f64], b: &[f64]) -> Result<bool> {
    require_same_len(a, b)?;
    if a.iter().chain(b).any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(Error::Domain(
            "multiplicative majorization needs strictly positive entries".into(),
        ));
    }
    let la: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let lb: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    additive_majorizes(&la, &lb)
}

/// Vector whose entries all equal the mean of `a`.
pub fn mean_vector(a: &[f64]) -> Vec<f64> {
    let m = a.iter().sum::<f64>() / a.len() as f64;
    vec![m; a.len()]
}

/// Standard normal tail probability.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-coded square M-QAM bit error rate approximation at a given SINR.
pub fn qam_ber_approx(sinr: f64, constellation_size: usize) -> f64 {
    let m = constellation_size as f64;
    (4.0 / m.log2()) * (1.0 - 1.0 / m.sqrt()) * q_function((3.0 * sinr / (m - 1.0)).sqrt())
}

/// Value of the objective (to be minimized) at the given stream MSEs.
pub fn eval_objective(obj: &Objective, mses: &[f64]) -> Result<f64> {
    if mses.is_empty() {
        return Err(Error::Dimension("empty MSE vector".into()));
    }
    if mses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::Domain("MSEs must be finite and positive".into()));
    }
    let sinrs = || -> Result<Vec<f64>> {
        if mses.iter().any(|&m| m >= 1.0) {
            return Err(Error::Domain(
                "SINR-based objectives need every MSE below 1".into(),
            ));
        }
        Ok(mses.iter().map(|m| 1.0 / m - 1.0).collect())
    };
    Ok(match obj.kind() {
        ObjectiveKind::MaxMse => mses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ObjectiveKind::SumMse => mses.iter().sum(),
        ObjectiveKind::ProdMse => mses.iter().product(),
        ObjectiveKind::WeightedGeoMean { weights } => {
            if weights.len() != mses.len() {
                return Err(Error::Dimension(format!(
                    "{} weights for {} streams",
                    weights.len(),
                    mses.len()
                )));
            }
            let total: f64 = weights.iter().sum();
            let log: f64 = weights.iter().zip(mses).map(|(w, m)| w * m.ln()).sum();
            (log / total).exp()
        }
        ObjectiveKind::MinSinrMax => -sinrs()?.into_iter().fold(f64::INFINITY, f64::min),
        ObjectiveKind::SumBer { constellation_size } => sinrs()?
            .into_iter()
            .map(|s| qam_ber_approx(s, *constellation_size))
            .sum(),
    })
}

/// Outcome of [`schur_verify`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchurReport {
    pub objective: &'static str,
    pub declared: SchurClass,
    pub trials: usize,
    /// Pairs `a ≺ b` that contradict the declared class.
    pub violations: usize,
    /// Pairs that contradict the opposite class.
    pub opposite_violations: usize,
    pub worst_violation: f64,
}

/// Log-MSE range sampled by the verifier for each objective.
fn sample_range(obj: &Objective) -> (f64, f64) {
    match obj.kind() {
        // High-SNR regime where the Gray BER approximation is convex in l.
        ObjectiveKind::SumBer { .. } => (1e-4f64.ln(), 0.1f64.ln()),
        ObjectiveKind::MinSinrMax => (1e-4f64.ln(), 0.95f64.ln()),
        _ => (1e-4f64.ln(), 2f64.ln()),
    }
}

/// Evaluation used by the verifier: weighted objectives are made
/// symmetric by giving the largest weight to the smallest MSE, which is
/// the assignment a designer is free to choose.
fn eval_symmetric(obj: &Objective, mses: &[f64]) -> Result<f64> {
    match obj.kind() {
        ObjectiveKind::WeightedGeoMean { weights } => {
            let mut w = weights.clone();
            w.sort_by(|x, y| y.total_cmp(x));
            let mut m = mses.to_vec();
            m.sort_by(|x, y| x.total_cmp(y));
            eval_objective(&Objective::weighted_geo_mean(w)?, &m)
        }
        _ => eval_objective(obj, mses),
    }
}

/// Empirically checks the declared Schur class on random pairs `a ≺ b`
/// of log-MSE vectors, where `a` averages random blocks of `b`.
pub fn schur_verify(obj: &Objective, trials: usize, seed: u64) -> Result<SchurReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = sample_range(obj);
    let fixed_len = match obj.kind() {
        ObjectiveKind::WeightedGeoMean { weights } => Some(weights.len()),
        _ => None,
    };
    let mut report = SchurReport {
        objective: obj.name(),
        declared: obj.schur_class(),
        trials,
        violations: 0,
        opposite_violations: 0,
        worst_violation: 0.0,
    };
    for _ in 0..trials {
        let k = fixed_len.unwrap_or_else(|| rng.random_range(2..=6));
        let b: Vec<f64> = (0..k).map(|_| rng.random_range(lo..hi)).collect();
        let mut idx: Vec<usize> = (0..k).collect();
        idx.shuffle(&mut rng);
        let mut a = b.clone();
        let mut start = 0;
        while start < k {
            let len = rng.random_range(1..=k - start);
            let block = &idx[start..start + len];
            let mean = block.iter().map(|&i| b[i]).sum::<f64>() / len as f64;
            for &i in block {
                a[i] = mean;
            }
            start += len;
        }
        let ga = eval_symmetric(obj, &a.iter().map(|x| x.exp()).collect::<Vec<_>>())?;
        let gb = eval_symmetric(obj, &b.iter().map(|x| x.exp()).collect::<Vec<_>>())?;
        let tol = 1e-12 * (1.0 + ga.abs().max(gb.abs()));
        // Convex: g(a) <= g(b). Concave: g(a) >= g(b).
        let convex_gap = ga - gb;
        let concave_gap = gb - ga;
        let (own, other) = match obj.schur_class() {
            SchurClass::ConvexInLogMse => (convex_gap, concave_gap),
            SchurClass::ConcaveInLogMse => (concave_gap, convex_gap),
        };
        if own > tol {
            report.violations += 1;
            report.worst_violation = report.worst_violation.max(own);
        }
        if other > tol {
            report.opposite_violations += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn additive_examples() {
        assert!(additive_majorizes(&[2.0, 2.0], &[3.0, 1.0]).unwrap());
        assert!(!additive_majorizes(&[3.0, 1.0], &[2.0, 2.0]).unwrap());
        assert!(!additive_majorizes(&[1.0, 1.0], &[3.0, 1.0]).unwrap());
        assert!(matches!(
            additive_majorizes(&[1.0], &[1.0, 2.0]),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn multiplicative_examples() {
        assert!(multiplicative_majorizes(&[2.0, 2.0], &[4.0, 1.0]).unwrap());
        assert!(!multiplicative_majorizes(&[4.0, 1.0], &[2.0, 2.0]).unwrap());
        let v = [0.3, 1.7, 0.02];
        assert!(multiplicative_majorizes(&v, &v).unwrap());
        assert!(matches!(
            multiplicative_majorizes(&[0.0, 1.0], &[1.0, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn objective_examples() {
        let m = [0.1, 0.3, 0.2];
        assert_eq!(eval_objective(&Objective::max_mse(), &m).unwrap(), 0.3);
        assert!((eval_objective(&Objective::sum_mse(), &m).unwrap() - 0.6).abs() < 1e-15);
        let w = Objective::weighted_geo_mean(vec![1.0, 1.0]).unwrap();
        assert!((eval_objective(&w, &[0.25, 0.04]).unwrap() - 0.1).abs() < 1e-15);
        assert!((eval_objective(&Objective::min_sinr_max(), &[0.25, 0.5]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn objective_domain_errors() {
        assert!(eval_objective(&Objective::min_sinr_max(), &[0.5, 1.0]).is_err());
        assert!(eval_objective(&Objective::sum_mse(), &[0.5, -1.0]).is_err());
        assert!(Objective::weighted_geo_mean(vec![1.0, 0.0]).is_err());
        assert!(Objective::sum_ber(8).is_err());
        let w = Objective::weighted_geo_mean(vec![1.0, 2.0]).unwrap();
        assert!(matches!(eval_objective(&w, &[0.1]), Err(Error::Dimension(_))));
    }

    #[test]
    fn catalog_classes() {
        use SchurClass::*;
        assert_eq!(Objective::max_mse().schur_class(), ConvexInLogMse);
        assert_eq!(Objective::sum_mse().schur_class(), ConvexInLogMse);
        assert_eq!(Objective::min_sinr_max().schur_class(), ConvexInLogMse);
        assert_eq!(Objective::sum_ber(16).unwrap().schur_class(), ConvexInLogMse);
        assert_eq!(Objective::prod_mse().schur_class(), ConcaveInLogMse);
        assert_eq!(
            Objective::weighted_geo_mean(vec![1.0]).unwrap().schur_class(),
            ConcaveInLogMse
        );
    }

    #[test]
    fn ber_approximation_reference_point() {
        // 4-QAM: BER = Q(sqrt(SINR)); Q(1) = 0.158655...
        assert!((qam_ber_approx(1.0, 4) - 0.15865525393145707).abs() < 1e-9);
    }

    #[test]
    fn schur_verify_catalog_has_no_violations() {
        let r = schur_verify(&Objective::sum_mse(), 1000, 7).unwrap();
        assert_eq!(r.violations, 0);
        let r = schur_verify(&Objective::max_mse(), 1000, 8).unwrap();
        assert_eq!(r.violations, 0);
        let r = schur_verify(&Objective::prod_mse(), 1000, 9).unwrap();
        assert_eq!((r.violations, r.opposite_violations), (0, 0));
        for obj in [
            Objective::min_sinr_max(),
            Objective::sum_ber(16).unwrap(),
            Objective::weighted_geo_mean(vec![3.0, 1.0, 0.5, 2.0]).unwrap(),
        ] {
            let r = schur_verify(&obj, 1000, 10).unwrap();
            assert_eq!(r.violations, 0, "{}", obj.name());
        }
    }

    #[test]
    fn schur_verify_detects_misclassification() {
        // Sum of MSEs filed as concave must show violations.
        let mislabeled = Objective {
            kind: ObjectiveKind::SumMse,
            schur_class: SchurClass::ConcaveInLogMse,
        };
        assert!(schur_verify(&mislabeled, 200, 1).unwrap().violations > 0);
    }

    #[test]
    fn objective_serde_validates() {
        let o: Objective = serde_json::from_str(r#"{"kind":"sum_ber","constellation_size":16}"#).unwrap();
        assert_eq!(o, Objective::sum_ber(16).unwrap());
        assert!(serde_json::from_str::<Objective>(r#"{"kind":"weighted_geo_mean","weights":[-1.0]}"#).is_err());
    }

    proptest! {
        #[test]
        fn mean_vector_is_majorized(v in prop::collection::vec(-20.0f64..5.0, 1..12)) {
            prop_assert!(additive_majorizes(&mean_vector(&v), &v).unwrap());
        }

        #[test]
        fn product_and_log_routes_agree(
            a in prop::collection::vec(1e-3f64..10.0, 1..8),
            seed in any::<u64>(),
        ) {
            // Positive b with the same product as a, either a rearrangement
            // (always majorizes both ways) or a random spread.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let b: Vec<f64> = if rand::Rng::random_bool(&mut rng, 0.5) {
                let mut b = a.clone();
                b.shuffle(&mut rng);
                b
            } else {
                let mut b: Vec<f64> = a.iter().map(|_| rand::Rng::random_range(&mut rng, 1e-3..10.0)).collect();
                let scale = (a.iter().map(|x| x.ln()).sum::<f64>()
                    - b.iter().map(|x| x.ln()).sum::<f64>()) / b.len() as f64;
                for x in &mut b { *x *= scale.exp(); }
                b
            };
            prop_assert_eq!(
                multiplicative_majorizes(&a, &b).unwrap(),
                multiplicative_majorizes_via_logs(&a, &b).unwrap()
            );
        }

        #[test]
        fn objectives_nondecreasing_in_each_mse(
            m in prop::collection::vec(1e-3f64..0.9, 1..6),
            idx in 0usize..6,
            bump in 1e-6f64..0.05,
        ) {
            let i = idx % m.len();
            let mut up = m.clone();
            up[i] = (up[i] + bump).min(0.95);
            for obj in [
                Objective::max_mse(),
                Objective::sum_mse(),
                Objective::prod_mse(),
                Objective::min_sinr_max(),
                Objective::sum_ber(16).unwrap(),
                Objective::weighted_geo_mean(vec![1.5; m.len()]).unwrap(),
            ] {
                let lo = eval_objective(&obj, &m).unwrap();
                let hi = eval_objective(&obj, &up).unwrap();
                prop_assert!(hi >= lo, "{} decreased", obj.name());
            }
        }
    }
}
