//! Combined grid and random hyperparameter search scored by cross-validated AUC.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::metrics::auc;
use crate::model::Model;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Real(r) => Some(*r),
            ParamValue::Text(_) => None,
        }
    }
}

impl std::fmt::Display for ParamValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(r) => write!(f, "{r}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

/// One hyperparameter assignment, keyed by parameter name.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, ParamValue>);

impl Params {
    pub fn set(&mut self, name: &str, value: ParamValue) {
        self.0.insert(name.to_string(), value);
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.set(name, value);
        self
    }

    pub fn real(&self, name: &str, default: f64) -> Result<f64> {
        match self.0.get(name) {
            None => Ok(default),
            Some(v) => v.as_f64().ok_or_else(|| {
                Error::Tuning(format!("parameter `{name}` must be numeric, got `{v}`"))
            }),
        }
    }

    pub fn count(&self, name: &str, default: usize) -> Result<usize> {
        match self.0.get(name) {
            None => Ok(default),
            Some(ParamValue::Int(i)) if *i >= 0 => Ok(*i as usize),
            Some(v) => Err(Error::Tuning(format!(
                "parameter `{name}` must be a nonnegative integer, got `{v}`"
            ))),
        }
    }

    pub fn text<'a>(&'a self, name: &str, default: &'a str) -> Result<&'a str> {
        match self.0.get(name) {
            None => Ok(default),
            Some(ParamValue::Text(s)) => Ok(s),
            Some(v) => Err(Error::Tuning(format!(
                "parameter `{name}` must be a string, got `{v}`"
            ))),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Finite {
        values: Vec<ParamValue>,
    },
    /// Inclusive on both ends.
    IntRange {
        lo: i64,
        hi: i64,
    },
    RealRange {
        lo: f64,
        hi: f64,
    },
    LogRealRange {
        lo: f64,
        hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub name: String,
    #[serde(flatten)]
    pub shape: Shape,
}

impl ParamDomain {
    pub fn finite(name: &str, values: Vec<ParamValue>) -> Self {
        ParamDomain {
            name: name.into(),
            shape: Shape::Finite { values },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Tuning(format!("domain `{}`: {m}", self.name)));
        match &self.shape {
            Shape::Finite { values } if values.is_empty() => bad("empty value list".into()),
            Shape::IntRange { lo, hi } if lo >= hi => bad(format!("lo {lo} >= hi {hi}")),
            Shape::RealRange { lo, hi } if !(lo < hi) || !lo.is_finite() || !hi.is_finite() => {
                bad(format!("invalid range [{lo}, {hi}]"))
            }
            Shape::LogRealRange { lo, hi } if !(*lo > 0.0 && lo < hi && hi.is_finite()) => {
                bad(format!("invalid log range [{lo}, {hi}]"))
            }
            _ => Ok(()),
        }
    }

    fn draw(&self, rng: &mut seed::Rng) -> ParamValue {
        match &self.shape {
            Shape::Finite { values } => values[rng.random_range(0..values.len())].clone(),
            Shape::IntRange { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
            Shape::RealRange { lo, hi } => ParamValue::Real(rng.random_range(*lo..*hi)),
            Shape::LogRealRange { lo, hi } => {
                ParamValue::Real(rng.random_range(lo.ln()..hi.ln()).exp())
            }
        }
    }
}

fn default_folds() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchPlan {
    #[serde(default)]
    pub grid: Vec<ParamDomain>,
    #[serde(default)]
    pub random: Vec<ParamDomain>,
    #[serde(default)]
    pub n_random: usize,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SearchPlan {
    pub fn grid(grid: Vec<ParamDomain>) -> Self {
        SearchPlan {
            grid,
            random: Vec::new(),
            n_random: 0,
            cv_folds: default_folds(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() && self.random.is_empty() {
            return Err(Error::Tuning("empty search plan".into()));
        }
        if !self.random.is_empty() && self.n_random == 0 {
            return Err(Error::Tuning("random domains need n_random >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::Tuning(format!(
                "cv_folds = {} must be >= 2",
                self.cv_folds
            )));
        }
        for d in self.grid.iter().chain(&self.random) {
            d.validate()?;
        }
        if let Some(d) = self
            .grid
            .iter()
            .find(|d| !matches!(d.shape, Shape::Finite { .. }))
        {
            return Err(Error::Tuning(format!(
                "grid domain `{}` must be a finite list",
                d.name
            )));
        }
        Ok(())
    }
}

/// Grid product (first domain varies slowest) crossed with `n_random` draws.
pub fn enumerate_candidates(plan: &SearchPlan, rng: &mut seed::Rng) -> Result<Vec<Params>> {
    plan.validate()?;
    let mut grid = vec![Params::default()];
    for d in &plan.grid {
        let Shape::Finite { values } = &d.shape else {
            unreachable!()
        };
        grid = grid
            .into_iter()
            .flat_map(|p| {
                values
                    .iter()
                    .map(move |v| p.clone().with(&d.name, v.clone()))
            })
            .collect();
    }
    if plan.random.is_empty() {
        return Ok(grid);
    }
    let draws: Vec<Params> = (0..plan.n_random)
        .map(|_| {
            let mut p = Params::default();
            for d in &plan.random {
                p.set(&d.name, d.draw(rng));
            }
            p
        })
        .collect();
    Ok(grid
        .iter()
        .flat_map(|g| {
            draws.iter().map(move |r| {
                let mut p = g.clone();
                p.0.extend(r.0.clone());
                p
            })
        })
        .collect())
}

/// Anything that turns a row into a minority score.
pub trait Scorer: Send + Sync {
    fn score(&self, row: &[f64]) -> Result<f64>;
}

impl Scorer for Model {
    fn score(&self, row: &[f64]) -> Result<f64> {
        self.predict_score(row)
    }
}

/// A trainable algorithm with named hyperparameters.
pub trait Learner: Sync {
    fn fit(&self, train: &Dataset, params: &Params, seed: u64) -> Result<Box<dyn Scorer>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    /// Position in the candidate list.
    pub candidate: usize,
    pub params: Params,
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
}

/// Fold index of every row; each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Tuning(format!("k = {k} must be >= 2")));
    }
    let mut rng = seed::rng(seed);
    let mut fold = vec![0; labels.len()];
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::Tuning(format!(
                "class {class} has {} rows, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (j, i) in members.into_iter().enumerate() {
            fold[i] = j % k;
        }
    }
    Ok(fold)
}

pub fn cross_validate(
    data: &Dataset,
    learner: &dyn Learner,
    params: &Params,
    k: usize,
    seed: u64,
) -> Result<Trial> {
    let fold = stratified_folds(data.labels(), k, seed)?;
    let fold_aucs = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..data.n()).partition(|&i| fold[i] == f);
            let model = learner.fit(&data.subset(&train), params, seed::derive(seed, f as u64))?;
            let held = data.subset(&test);
            let scores = held
                .rows()
                .map(|r| model.score(r))
                .collect::<Result<Vec<_>>>()?;
            auc(&scores, held.labels())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Trial {
        candidate: 0,
        params: params.clone(),
        mean_auc: fold_aucs.iter().sum::<f64>() / k as f64,
        fold_aucs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Trial,
    /// Every candidate, best first; equal means keep candidate order.
    pub leaderboard: Vec<Trial>,
}

/// Evaluates every candidate on the same folds and ranks them by mean AUC.
pub fn search(data: &Dataset, learner: &dyn Learner, plan: &SearchPlan) -> Result<SearchResult> {
    let candidates = enumerate_candidates(plan, &mut seed::rng(plan.seed))?;
    let fold_seed = seed::derive(plan.seed, 1);
    let mut leaderboard = candidates
        .into_par_iter()
        .enumerate()
        .map(|(i, params)| {
            let mut t = cross_validate(data, learner, &params, plan.cv_folds, fold_seed)?;
            t.candidate = i;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    leaderboard.sort_by(|a, b| b.mean_auc.total_cmp(&a.mean_auc));
    Ok(SearchResult {
        best: leaderboard[0].clone(),
        leaderboard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_gaussian;
    use crate::learners::knn_fit;

    struct Constant;
    impl Scorer for f64 {
        fn score(&self, _: &[f64]) -> Result<f64> {
            Ok(*self)
        }
    }
    impl Learner for Constant {
        fn fit(&self, _: &Dataset, _: &Params, _: u64) -> Result<Box<dyn Scorer>> {
            Ok(Box::new(0.3))
        }
    }

    struct Memorizer;
    impl Learner for Memorizer {
        fn fit(&self, train: &Dataset, _: &Params, _: u64) -> Result<Box<dyn Scorer>> {
            Ok(Box::new(Model::Knn(knn_fit(train, 1)?)))
        }
    }

    /// Picks one of the two above through a parameter.
    struct Switch;
    impl Learner for Switch {
        fn fit(&self, train: &Dataset, p: &Params, s: u64) -> Result<Box<dyn Scorer>> {
            match p.text("kind", "constant")? {
                "memorize" => Memorizer.fit(train, p, s),
                _ => Constant.fit(train, p, s),
            }
        }
    }

    fn text(s: &str) -> ParamValue {
        ParamValue::Text(s.into())
    }

    #[test]
    fn grid_is_lexicographic() {
        let plan = SearchPlan::grid(vec![
            ParamDomain::finite("a", vec![ParamValue::Int(1), ParamValue::Int(2)]),
            ParamDomain::finite("b", vec![text("x"), text("y")]),
        ]);
        let c = enumerate_candidates(&plan, &mut seed::rng(0)).unwrap();
        let flat: Vec<String> = c
            .iter()
            .map(|p| format!("{}{}", p.0["a"], p.0["b"]))
            .collect();
        assert_eq!(flat, ["1x", "1y", "2x", "2y"]);
    }

    #[test]
    fn random_only_and_empty_plans() {
        let plan = SearchPlan {
            random: vec![ParamDomain {
                name: "c".into(),
                shape: Shape::IntRange { lo: 1, hi: 9 },
            }],
            n_random: 7,
            ..SearchPlan::grid(vec![])
        };
        let c = enumerate_candidates(&plan, &mut seed::rng(0)).unwrap();
        assert_eq!(c.len(), 7);
        assert!(c.iter().all(|p| matches!(p.0["c"], ParamValue::Int(1..=9))));
        assert!(enumerate_candidates(&SearchPlan::grid(vec![]), &mut seed::rng(0)).is_err());
    }

    #[test]
    fn log_uniform_passes_ks() {
        let d = ParamDomain {
            name: "c".into(),
            shape: Shape::LogRealRange { lo: 1e-3, hi: 1e3 },
        };
        let mut rng = seed::rng(11);
        let mut x: Vec<f64> = (0..1000)
            .map(|_| (d.draw(&mut rng).as_f64().unwrap().log10() + 3.0) / 6.0)
            .collect();
        x.sort_by(f64::total_cmp);
        let n = x.len() as f64;
        let stat = x
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(stat < 1.628 / n.sqrt(), "D = {stat}");
    }

    #[test]
    fn constant_learner_scores_half() {
        let d = synth_gaussian(200, 0.1, 2, 2.0, 1).unwrap();
        let t = cross_validate(&d, &Constant, &Params::default(), 5, 3).unwrap();
        assert_eq!(t.fold_aucs, vec![0.5; 5]);
        assert_eq!(t.mean_auc, 0.5);
    }

    #[test]
    fn folds_are_stratified_and_seeded() {
        let d = synth_gaussian(103, 0.2, 2, 2.0, 1).unwrap();
        let f = stratified_folds(d.labels(), 5, 9).unwrap();
        for k in 0..5 {
            let minority = (0..d.n()).filter(|&i| f[i] == k && d.label(i) == 1).count();
            assert!((4..=5).contains(&minority));
        }
        assert_eq!(f, stratified_folds(d.labels(), 5, 9).unwrap());
        assert!(stratified_folds(&[0, 0, 0, 1], 2, 0).is_err());
    }

    #[test]
    fn memorizer_beats_constant() {
        let d = synth_gaussian(120, 0.25, 2, 4.0, 2).unwrap();
        let plan = SearchPlan::grid(vec![ParamDomain::finite(
            "kind",
            vec![text("constant"), text("memorize")],
        )]);
        let r = search(&d, &Switch, &plan).unwrap();
        assert_eq!(r.leaderboard.len(), 2);
        assert_eq!(r.best.candidate, 1);
        assert!(r.best.mean_auc > 0.9);
        assert_eq!(r, search(&d, &Switch, &plan).unwrap());
    }

    #[test]
    fn shuffled_labels_leave_no_signal() {
        let base = synth_gaussian(200, 0.25, 2, 4.0, 3).unwrap();
        let mut total = 0.0;
        for s in 0..10 {
            let mut labels = base.labels().to_vec();
            labels.shuffle(&mut seed::rng(100 + s));
            let d = Dataset::new(base.features().clone(), labels, base.row_ids().to_vec()).unwrap();
            total += cross_validate(&d, &Memorizer, &Params::default(), 2, s)
                .unwrap()
                .mean_auc;
        }
        let mean = total / 10.0;
        assert!((mean - 0.5).abs() < 0.1, "mean {mean}");
    }
}
