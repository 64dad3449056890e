//! Comparing evaluated proposals and sweeping the weight vector.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::Category;
use crate::scoring::{
    dot, CategoryScores, Evaluation, WeightError, WeightVector, MAX_TOTAL, WEIGHT_SUM, WEIGHT_TOLERANCE,
};

/// Totals closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-9;
/// Upper bound on sweep grid points.
pub const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, thiserror::Error)]
pub enum ReportError {
    #[error("nothing to compare")]
    Empty,
    #[error("proposal {0:?} appears more than once")]
    DuplicateProposal(String),
    #[error("proposals were scored under different schema variants ({0:?} and {1:?})")]
    MixedVariants(Option<String>, Option<String>),
    #[error("proposals were scored under different weight vectors")]
    MixedWeights,
    #[error("sweep step must be positive and finite, got {0}")]
    Step(f64),
    #[error("sweep bound must be non-negative and finite, got {0}")]
    Bound(f64),
    #[error("{0} is both fixed and varied")]
    Overlap(Category),
    #[error("{0} is listed twice")]
    Repeated(Category),
    #[error("fixed weight for {category} must be finite and non-negative, got {value}")]
    Fixed { category: Category, value: f64 },
    #[error("sweep would visit more than {MAX_GRID_POINTS} grid points")]
    TooLarge,
    #[error("no grid point keeps the weights non-negative with sum 7")]
    Infeasible,
    #[error(transparent)]
    Weights(#[from] WeightError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub proposal: String,
    pub scores: CategoryScores,
    pub total: f64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub rank: usize,
    pub proposal: String,
    pub total: f64,
    /// Set when the total equals a neighbour's; order then falls back to name.
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub variant: Option<String>,
    pub weights: WeightVector,
    /// In input order.
    pub entries: Vec<ComparisonEntry>,
    pub ranking: Vec<RankEntry>,
}

impl ComparisonReport {
    pub fn winner(&self) -> &str {
        &self.ranking[0].proposal
    }

    pub fn entry(&self, proposal: &str) -> Option<&ComparisonEntry> {
        self.entries.iter().find(|e| e.proposal == proposal)
    }

    pub fn has_ties(&self) -> bool {
        self.ranking.iter().any(|r| r.tied)
    }
}

pub fn compare(evaluations: &[Evaluation]) -> Result<ComparisonReport, ReportError> {
    let first = evaluations.first().ok_or(ReportError::Empty)?;
    for (i, e) in evaluations.iter().enumerate() {
        if e.variant != first.variant {
            return Err(ReportError::MixedVariants(first.variant.clone(), e.variant.clone()));
        }
        if e.weights != first.weights {
            return Err(ReportError::MixedWeights);
        }
        if evaluations[..i].iter().any(|p| p.proposal == e.proposal) {
            return Err(ReportError::DuplicateProposal(e.proposal.clone()));
        }
    }
    let entries: Vec<ComparisonEntry> = evaluations
        .iter()
        .map(|e| ComparisonEntry {
            proposal: e.proposal.clone(),
            scores: e.scores.clone(),
            total: e.total,
            percent: e.percent,
        })
        .collect();
    let totals: Vec<(&str, f64)> = entries.iter().map(|e| (e.proposal.as_str(), e.total)).collect();
    Ok(ComparisonReport { variant: first.variant.clone(), weights: first.weights, ranking: rank(&totals), entries })
}

/// Sort by total, highest first; near-equal totals fall back to name order
/// and are flagged.
pub fn rank(totals: &[(&str, f64)]) -> Vec<RankEntry> {
    let mut order: Vec<usize> = (0..totals.len()).collect();
    order.sort_by(|&a, &b| {
        let (na, ta) = totals[a];
        let (nb, tb) = totals[b];
        if (ta - tb).abs() <= TIE_TOLERANCE {
            na.cmp(nb)
        } else {
            tb.total_cmp(&ta)
        }
    });
    let close = |i: usize, j: usize| (totals[order[i]].1 - totals[order[j]].1).abs() <= TIE_TOLERANCE;
    (0..order.len())
        .map(|i| {
            let (name, total) = totals[order[i]];
            let tied = (i > 0 && close(i - 1, i)) || (i + 1 < order.len() && close(i, i + 1));
            RankEntry { rank: i + 1, proposal: name.into(), total, tied }
        })
        .collect()
}

fn default_max() -> f64 {
    WEIGHT_SUM
}

/// Each varied weight walks `0, step, 2·step, …` up to `max`; fixed weights
/// stay put. Whatever mass is left of 7 is spread over the remaining
/// categories in proportion to their `base` weights (evenly if those are all
/// zero). Grid points that would need a negative remainder are skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    #[serde(default = "unit")]
    pub base: WeightVector,
    #[serde(default)]
    pub fixed: BTreeMap<Category, f64>,
    #[serde(default)]
    pub vary: Vec<Category>,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_max")]
    pub max: f64,
}

fn unit() -> WeightVector {
    WeightVector::UNIT
}

fn default_step() -> f64 {
    0.5
}

impl SweepSpec {
    pub fn vary(categories: &[Category], step: f64) -> Self {
        Self { base: WeightVector::UNIT, fixed: BTreeMap::new(), vary: categories.into(), step, max: WEIGHT_SUM }
    }

    pub fn degenerate() -> Self {
        Self::vary(&[], default_step())
    }

    fn check(&self) -> Result<usize, ReportError> {
        if !self.step.is_finite() || self.step <= 0.0 {
            return Err(ReportError::Step(self.step));
        }
        if !self.max.is_finite() || self.max < 0.0 {
            return Err(ReportError::Bound(self.max));
        }
        self.base.validate()?;
        for (&category, &value) in &self.fixed {
            if !value.is_finite() || value < 0.0 {
                return Err(ReportError::Fixed { category, value });
            }
        }
        for (i, c) in self.vary.iter().enumerate() {
            if self.vary[..i].contains(c) {
                return Err(ReportError::Repeated(*c));
            }
            if self.fixed.contains_key(c) {
                return Err(ReportError::Overlap(*c));
            }
        }
        let per_axis = libm_floor(self.max / self.step + 1e-9) + 1;
        let mut points: usize = 1;
        for _ in &self.vary {
            points = points.checked_mul(per_axis).filter(|&p| p <= MAX_GRID_POINTS).ok_or(ReportError::TooLarge)?;
        }
        Ok(per_axis)
    }

    /// Weight vector for one grid coordinate, or None if infeasible.
    fn weights_at(&self, steps: &[usize]) -> Option<WeightVector> {
        let mut w = [0.0; 7];
        let mut free = [false; 7];
        let mut used = 0.0;
        for c in Category::ALL {
            let i = c.index();
            if let Some(&v) = self.fixed.get(&c) {
                w[i] = v;
            } else if let Some(k) = self.vary.iter().position(|v| *v == c) {
                w[i] = steps[k] as f64 * self.step;
            } else {
                free[i] = true;
                continue;
            }
            used += w[i];
        }
        let remainder = WEIGHT_SUM - used;
        if remainder < -WEIGHT_TOLERANCE {
            return None;
        }
        let base = self.base.as_array();
        let n_free = free.iter().filter(|f| **f).count();
        if n_free == 0 {
            return (remainder.abs() <= WEIGHT_TOLERANCE).then(|| WeightVector::from_array(w));
        }
        let base_mass: f64 = (0..7).filter(|&i| free[i]).map(|i| base[i]).sum();
        for i in (0..7).filter(|&i| free[i]) {
            w[i] = if base_mass > 0.0 {
                remainder.max(0.0) * base[i] / base_mass
            } else {
                remainder.max(0.0) / n_free as f64
            };
        }
        Some(WeightVector::from_array(w))
    }
}

fn libm_floor(x: f64) -> usize {
    // x is finite and non-negative here; truncation is floor
    x as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub weights: WeightVector,
    /// Same order as `SensitivityReport::proposals`.
    pub totals: Vec<f64>,
    pub winner: String,
    pub tied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub spec: SweepSpec,
    pub variant: Option<String>,
    pub proposals: Vec<String>,
    /// Winner under `spec.base`.
    pub baseline_winner: String,
    pub points: Vec<GridPoint>,
    /// Grid coordinates dropped because the remainder went negative.
    pub skipped: usize,
    /// Share of grid points whose winner is the baseline winner.
    pub rank_stability: f64,
}

/// Re-weight the stored category scores at every grid point. Categories are
/// never re-scored; totals are linear in the weights.
pub fn weight_sweep(evaluations: &[Evaluation], spec: &SweepSpec) -> Result<SensitivityReport, ReportError> {
    let baseline = compare(&reweight(evaluations, &spec.base))?;
    let per_axis = spec.check()?;
    let scores: Vec<[f64; 7]> = evaluations.iter().map(|e| e.scores.as_array()).collect();
    let names: Vec<&str> = evaluations.iter().map(|e| e.proposal.as_str()).collect();

    let mut points = Vec::new();
    let mut skipped = 0;
    let mut steps = alloc::vec![0usize; spec.vary.len()];
    loop {
        match spec.weights_at(&steps) {
            Some(weights) => {
                let w = weights.as_array();
                let totals: Vec<f64> = scores.iter().map(|s| dot(&w, s)).collect();
                let pairs: Vec<(&str, f64)> = names.iter().copied().zip(totals.iter().copied()).collect();
                let ranking = rank(&pairs);
                points.push(GridPoint { weights, totals, winner: ranking[0].proposal.clone(), tied: ranking[0].tied });
            }
            None => skipped += 1,
        }
        // odometer over the varied axes, first axis fastest
        let mut axis = 0;
        while axis < steps.len() {
            steps[axis] += 1;
            if steps[axis] < per_axis {
                break;
            }
            steps[axis] = 0;
            axis += 1;
        }
        if axis == steps.len() {
            break;
        }
    }
    if points.is_empty() {
        return Err(ReportError::Infeasible);
    }
    let baseline_winner = String::from(baseline.winner());
    let stable = points.iter().filter(|p| p.winner == baseline_winner).count();
    Ok(SensitivityReport {
        spec: spec.clone(),
        variant: baseline.variant,
        proposals: names.iter().map(|n| String::from(*n)).collect(),
        baseline_winner,
        rank_stability: stable as f64 / points.len() as f64,
        skipped,
        points,
    })
}

/// Copies of `evaluations` with totals recomputed under `weights`.
pub fn reweight(evaluations: &[Evaluation], weights: &WeightVector) -> Vec<Evaluation> {
    evaluations
        .iter()
        .map(|e| {
            let total = dot(&weights.as_array(), &e.scores.as_array());
            Evaluation { weights: *weights, total, percent: total / MAX_TOTAL * 100.0, ..e.clone() }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    const FINAL: [(&str, [f64; 7]); 5] = [
        ("No eHMI", [10.00, 10.00, 3.56, 0.81, 0.83, 10.00, 0.0]),
        ("FBL", [9.63, 9.95, 4.25, 0.93, 0.42, 6.67, 0.0]),
        ("KRD", [5.93, 8.56, 4.79, 0.99, 1.25, 6.67, 0.81]),
        ("BSD", [8.52, 8.56, 4.79, 0.93, 1.25, 6.67, 0.81]),
        ("BTD", [7.41, 8.56, 6.30, 0.95, 1.67, 6.67, 0.81]),
    ];

    fn evals() -> Vec<Evaluation> {
        let rows: Vec<Evaluation> = FINAL
            .iter()
            .map(|(name, s)| Evaluation {
                proposal: (*name).into(),
                variant: Some("results".into()),
                weights: WeightVector::UNIT,
                scores: CategoryScores::from_array(*s),
                total: 0.0,
                percent: 0.0,
            })
            .collect();
        reweight(&rows, &WeightVector::UNIT)
    }

    #[test]
    fn final_ranking() {
        let r = compare(&evals()).unwrap();
        let order: Vec<&str> = r.ranking.iter().map(|e| e.proposal.as_str()).collect();
        assert_eq!(order, ["No eHMI", "BTD", "FBL", "BSD", "KRD"]);
        assert!(!r.has_ties());
        assert!((r.entry("KRD").unwrap().total - 29.00).abs() < 0.02);
    }

    #[test]
    fn single_and_empty() {
        let r = compare(&evals()[1..2]).unwrap();
        assert_eq!(r.ranking[0].rank, 1);
        assert_eq!(r.winner(), "FBL");
        assert_eq!(compare(&[]), Err(ReportError::Empty));
    }

    #[test]
    fn ties_fall_back_to_name_and_are_flagged() {
        let mut e = evals();
        e[0].proposal = "Zeta".into();
        e[1] = Evaluation { proposal: "Alpha".into(), ..e[0].clone() };
        let r = compare(&e[..3]).unwrap();
        assert_eq!(r.ranking[0].proposal, "Alpha");
        assert_eq!(r.ranking[1].proposal, "Zeta");
        assert!(r.ranking[0].tied && r.ranking[1].tied && !r.ranking[2].tied);
    }

    #[test]
    fn mixed_inputs_rejected() {
        let mut e = evals();
        e[1].variant = Some("appendix".into());
        assert!(matches!(compare(&e), Err(ReportError::MixedVariants(..))));
        let mut e = evals();
        e[2].weights.s = 2.0;
        assert_eq!(compare(&e), Err(ReportError::MixedWeights));
        let mut e = evals();
        e[2].proposal = "FBL".into();
        assert!(matches!(compare(&e), Err(ReportError::DuplicateProposal(_))));
    }

    #[test]
    fn degenerate_sweep_is_compare() {
        let e = evals();
        let s = weight_sweep(&e, &SweepSpec::degenerate()).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].weights, WeightVector::UNIT);
        let c = compare(&e).unwrap();
        assert_eq!(s.points[0].winner, c.winner());
        for (t, entry) in s.points[0].totals.iter().zip(&c.entries) {
            assert_eq!(*t, entry.total);
        }
        assert_eq!(s.rank_stability, 1.0);
    }

    #[test]
    fn zeroing_s_ce_p_promotes_btd() {
        let spec = SweepSpec {
            fixed: [(Category::S, 0.0), (Category::CE, 0.0), (Category::P, 0.0)].into_iter().collect(),
            ..SweepSpec::degenerate()
        };
        let s = weight_sweep(&evals(), &spec).unwrap();
        assert_eq!(s.points.len(), 1);
        assert_eq!(s.points[0].weights.a, 1.75);
        assert_eq!(s.points[0].winner, "BTD");
        assert_eq!(s.rank_stability, 0.0);
    }

    #[test]
    fn accessibility_sweep_grid() {
        let spec = SweepSpec { max: 3.5, ..SweepSpec::vary(&[Category::A], 0.5) };
        let s = weight_sweep(&evals(), &spec).unwrap();
        assert_eq!(s.points.len(), 8);
        for p in &s.points {
            assert!((p.weights.sum() - 7.0).abs() <= 1e-9, "{:?}", p.weights);
        }
        assert_eq!(s.points[2].weights, WeightVector::UNIT);
    }

    #[test]
    fn infeasible_and_bad_specs() {
        let spec = SweepSpec { fixed: Category::ALL.iter().map(|c| (*c, 2.0)).collect(), ..SweepSpec::degenerate() };
        assert_eq!(weight_sweep(&evals(), &spec), Err(ReportError::Infeasible));
        assert_eq!(weight_sweep(&evals(), &SweepSpec::vary(&[Category::A], 0.0)), Err(ReportError::Step(0.0)));
        let spec =
            SweepSpec { fixed: [(Category::A, 1.0)].into_iter().collect(), ..SweepSpec::vary(&[Category::A], 1.0) };
        assert_eq!(weight_sweep(&evals(), &spec), Err(ReportError::Overlap(Category::A)));
        let all = SweepSpec::vary(&Category::ALL, 0.001);
        assert_eq!(weight_sweep(&evals(), &all), Err(ReportError::TooLarge));
        assert!(format!("{}", ReportError::Infeasible).contains("sum 7"));
    }

    #[test]
    fn all_weight_varied_keeps_only_exact_sums() {
        let s = weight_sweep(&evals(), &SweepSpec { max: 2.0, ..SweepSpec::vary(&Category::ALL, 1.0) }).unwrap();
        assert!(s.points.iter().all(|p| (p.weights.sum() - 7.0).abs() <= 1e-9));
        assert!(s.points.iter().any(|p| p.weights == WeightVector::UNIT));
        assert_eq!(s.points.len() + s.skipped, 3usize.pow(7));
        let _ = vec![0];
    }
}
