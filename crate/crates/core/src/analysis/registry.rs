use std::collections::BTreeMap;

use crate::dataset::Dataset;
use crate::ensembles::{
    adaboost_fit, brf_fit, easy_ensemble_fit, random_forest_fit, rusboost_fit,
    svc_seeded_rusboost_fit, BoostConfig, EasyConfig, ForestConfig, SeededRusConfig,
};
use crate::error::{Error, Result};
use crate::learners::{
    cart_fit, knn_fit, logreg_fit, svc_fit, CartConfig, Criterion, Kernel, LogRegConfig, SvcConfig,
    DEFAULT_K,
};
use crate::model::Model;
use crate::tuning::{Learner, ParamDomain, ParamValue, Params, Scorer, SearchPlan, Shape};

/// Baselines followed by the imbalance-aware methods.
pub const NATIVE_ALGORITHMS: [&str; 12] = [
    "random_forest",
    "svc_linear",
    "svc_poly",
    "svc_rbf",
    "decision_tree",
    "logistic_regression",
    "knn",
    "adaboost",
    "easy_ensemble",
    "brf",
    "rusboost",
    "rusboost_svc",
];

const TREE: &[&str] = &["max_depth", "min_samples_leaf", "criterion"];
const FOREST: &[&str] = &[
    "trees",
    "max_features",
    "max_depth",
    "min_samples_leaf",
    "criterion",
];
const BOOST: &[&str] = &["rounds", "depth", "rus_fraction", "max_retries"];
const SVC: &[&str] = &["c", "degree", "gamma", "coef0", "tol", "max_iter"];
const SEEDED_SVC: &[&str] = &["svc_c", "svc_degree", "svc_gamma", "svc_coef0", "beta"];

fn accepted(name: &str) -> Option<Vec<&'static str>> {
    Some(match name {
        "decision_tree" => TREE.to_vec(),
        "random_forest" => FOREST.to_vec(),
        "brf" => [FOREST, &["per_class"]].concat(),
        "svc_linear" | "svc_poly" | "svc_rbf" => SVC.to_vec(),
        "logistic_regression" => vec!["learning_rate", "iterations", "l2"],
        "knn" => vec!["k"],
        "adaboost" => vec!["rounds", "depth"],
        "rusboost" => BOOST.to_vec(),
        "rusboost_svc" => [BOOST, SEEDED_SVC].concat(),
        "easy_ensemble" => vec!["subsets", "rounds", "depth"],
        _ => return None,
    })
}

pub fn is_native(name: &str) -> bool {
    accepted(name).is_some()
}

fn check_params(name: &str, params: &Params) -> Result<()> {
    let allowed = accepted(name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{name}`")))?;
    match params.names().find(|p| !allowed.contains(p)) {
        Some(p) => Err(Error::Tuning(format!("`{name}` has no parameter `{p}`"))),
        None => Ok(()),
    }
}

fn criterion(p: &Params) -> Result<Criterion> {
    match p.text("criterion", "gini")? {
        "gini" => Ok(Criterion::Gini),
        "info_gain" => Ok(Criterion::InfoGain),
        other => Err(Error::Tuning(format!("unknown criterion `{other}`"))),
    }
}

fn tree_config(p: &Params, default_depth: usize, seed: u64) -> Result<CartConfig> {
    Ok(CartConfig {
        max_depth: p.count("max_depth", default_depth)?,
        min_samples_leaf: p.count("min_samples_leaf", 1)?.max(1),
        criterion: criterion(p)?,
        max_features: 0,
        seed,
    })
}

fn forest_config(p: &Params, seed: u64) -> Result<ForestConfig> {
    Ok(ForestConfig {
        trees: p.count("trees", 100)?,
        max_features: match p.0.get("max_features") {
            None => None,
            Some(_) => Some(p.count("max_features", 0)?),
        },
        per_class: match p.0.get("per_class") {
            None => None,
            Some(_) => Some(p.count("per_class", 0)?),
        },
        max_depth: p.count("max_depth", 0)?,
        min_samples_leaf: p.count("min_samples_leaf", 1)?.max(1),
        criterion: criterion(p)?,
        seed,
        ..ForestConfig::default()
    })
}

fn svc_config(name: &str, p: &Params, prefix: &str, seed: u64) -> Result<SvcConfig> {
    let key = |k: &str| format!("{prefix}{k}");
    let kernel = match name {
        "svc_linear" => Kernel::Linear,
        "svc_rbf" => Kernel::Rbf {
            gamma: p.real(&key("gamma"), 0.1)?,
        },
        _ => Kernel::Polynomial {
            degree: p.count(&key("degree"), 3)? as u32,
            gamma: p.real(&key("gamma"), 0.1)?,
            coef0: p.real(&key("coef0"), 1.0)?,
        },
    };
    let defaults = SvcConfig::default();
    Ok(SvcConfig {
        c: p.real(&key("c"), 1.0)?,
        kernel,
        tol: p.real("tol", defaults.tol)?,
        max_iter: p.count("max_iter", defaults.max_iter)?,
        seed,
        ..defaults
    })
}

/// Post-undersampling minority fraction for both RUSBoost variants. Nearly
/// every minority row ends up a support vector, so at 50:50 the beta-scaled
/// minority mass dominates each undersample of the seeded variant and
/// first-round pseudo-losses land above 0.5. Both variants share the value so
/// that beta is the only difference between them.
pub const RUS_FRACTION: f64 = 0.25;

fn boost_config(p: &Params, seed: u64) -> Result<BoostConfig> {
    let defaults = BoostConfig::default();
    Ok(BoostConfig {
        rounds: p.count("rounds", defaults.rounds)?,
        base: CartConfig::with_depth(p.count("depth", 3)?),
        rus_minority_fraction: p.real("rus_fraction", RUS_FRACTION)?,
        max_retries_per_round: p.count("max_retries", defaults.max_retries_per_round)?,
        seed,
        ..defaults
    })
}

/// Fits a built-in algorithm with the given hyperparameters.
pub fn fit_algorithm(name: &str, data: &Dataset, params: &Params, seed: u64) -> Result<Model> {
    check_params(name, params)?;
    let p = params;
    Ok(match name {
        "decision_tree" => Model::Cart(cart_fit(
            data,
            &vec![1.0; data.n()],
            &tree_config(p, 0, seed)?,
        )?),
        "random_forest" => Model::Forest(random_forest_fit(data, &forest_config(p, seed)?)?),
        "brf" => Model::Forest(brf_fit(data, &forest_config(p, seed)?)?),
        "svc_linear" | "svc_poly" | "svc_rbf" => {
            Model::Svc(svc_fit(data, &svc_config(name, p, "", seed)?)?)
        }
        "logistic_regression" => {
            let d = LogRegConfig::default();
            Model::Logistic(logreg_fit(
                data,
                &LogRegConfig {
                    learning_rate: p.real("learning_rate", d.learning_rate)?,
                    iterations: p.count("iterations", d.iterations)?,
                    l2: p.real("l2", d.l2)?,
                },
            )?)
        }
        "knn" => Model::Knn(knn_fit(data, p.count("k", DEFAULT_K)?)?),
        "adaboost" => {
            let cfg = BoostConfig::adaboost(
                p.count("rounds", 50)?,
                CartConfig::with_depth(p.count("depth", 3)?),
                seed,
            );
            Model::Boosted(adaboost_fit(data, &cfg)?)
        }
        "rusboost" => Model::Boosted(rusboost_fit(data, &boost_config(p, seed)?)?),
        "rusboost_svc" => {
            let cfg = SeededRusConfig {
                svc: svc_config("svc_poly", p, "svc_", seed)?,
                beta: p.real("beta", 2.0)?,
                boost: boost_config(p, seed)?,
            };
            Model::Boosted(svc_seeded_rusboost_fit(data, &cfg)?.0)
        }
        "easy_ensemble" => {
            let d = EasyConfig::default();
            Model::Easy(easy_ensemble_fit(
                data,
                &EasyConfig {
                    subsets: p.count("subsets", d.subsets)?,
                    rounds: p.count("rounds", d.rounds)?,
                    base: CartConfig::with_depth(p.count("depth", 2)?),
                    seed,
                },
            )?)
        }
        _ => unreachable!("checked above"),
    })
}

fn ints(name: &str, values: &[i64]) -> ParamDomain {
    ParamDomain::finite(name, values.iter().map(|&v| ParamValue::Int(v)).collect())
}

fn reals(name: &str, values: &[f64]) -> ParamDomain {
    ParamDomain::finite(name, values.iter().map(|&v| ParamValue::Real(v)).collect())
}

fn log_range(name: &str, lo: f64, hi: f64) -> ParamDomain {
    ParamDomain {
        name: name.into(),
        shape: Shape::LogRealRange { lo, hi },
    }
}

/// Search plan used when an algorithm is tuned without an explicit plan.
pub fn default_plan(name: &str) -> Result<SearchPlan> {
    let (grid, random, n_random) = match name {
        "decision_tree" => (
            vec![
                ints("max_depth", &[3, 5, 8, 0]),
                ints("min_samples_leaf", &[1, 5]),
            ],
            vec![],
            0,
        ),
        "random_forest" | "brf" => (
            vec![ints("trees", &[50, 100]), ints("min_samples_leaf", &[1, 3])],
            vec![],
            0,
        ),
        "svc_linear" => (vec![], vec![log_range("c", 1e-2, 1e2)], 4),
        "svc_poly" => (
            vec![ints("degree", &[2, 3])],
            vec![log_range("c", 1e-2, 1e2)],
            3,
        ),
        "svc_rbf" => (
            vec![],
            vec![log_range("c", 1e-2, 1e2), log_range("gamma", 1e-3, 1.0)],
            6,
        ),
        "logistic_regression" => (vec![], vec![log_range("l2", 1e-4, 1.0)], 4),
        "knn" => (vec![ints("k", &[3, 5, 7, 9])], vec![], 0),
        "adaboost" | "rusboost" => (
            vec![ints("rounds", &[25, 50]), ints("depth", &[1, 2, 3])],
            vec![],
            0,
        ),
        "rusboost_svc" => (
            vec![
                ints("rounds", &[25, 50]),
                ints("depth", &[1, 2, 3]),
                reals("beta", &[1.5, 2.0, 3.0]),
            ],
            vec![],
            0,
        ),
        "easy_ensemble" => (
            vec![ints("subsets", &[4, 10]), ints("depth", &[1, 2])],
            vec![],
            0,
        ),
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}`"
            )))
        }
    };
    Ok(SearchPlan {
        grid,
        random,
        n_random,
        ..SearchPlan::grid(vec![])
    })
}

/// A built-in algorithm with fixed parameters layered under each candidate.
pub struct Native {
    pub name: String,
    pub fixed: Params,
}

impl Learner for Native {
    fn fit(&self, train: &Dataset, params: &Params, seed: u64) -> Result<Box<dyn Scorer>> {
        let mut merged = self.fixed.clone();
        merged.0.extend(params.0.clone());
        Ok(Box::new(fit_algorithm(&self.name, train, &merged, seed)?))
    }
}

/// Learners available to the benchmark, keyed by name. Starts with the
/// built-in set; external learners can be added with [`Registry::register`].
pub struct Registry {
    external: BTreeMap<String, (Box<dyn Learner + Send>, SearchPlan)>,
}

impl Registry {
    pub fn native() -> Self {
        Registry {
            external: BTreeMap::new(),
        }
    }

    pub fn register(
        &mut self,
        name: &str,
        learner: Box<dyn Learner + Send>,
        plan: SearchPlan,
    ) -> Result<()> {
        if is_native(name) || self.external.contains_key(name) {
            return Err(Error::InvalidArgument(format!(
                "algorithm `{name}` already registered"
            )));
        }
        self.external.insert(name.into(), (learner, plan));
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        is_native(name) || self.external.contains_key(name)
    }

    pub fn plan(&self, name: &str) -> Result<SearchPlan> {
        match self.external.get(name) {
            Some((_, plan)) => Ok(plan.clone()),
            None => default_plan(name),
        }
    }

    /// Fits `name` and returns its scorer.
    pub fn fit(
        &self,
        name: &str,
        fixed: &Params,
        train: &Dataset,
        params: &Params,
        seed: u64,
    ) -> Result<Box<dyn Scorer>> {
        match self.external.get(name) {
            Some((learner, _)) => {
                let mut merged = fixed.clone();
                merged.0.extend(params.0.clone());
                learner.fit(train, &merged, seed)
            }
            None => Native {
                name: name.into(),
                fixed: fixed.clone(),
            }
            .fit(train, params, seed),
        }
    }

    pub fn learner<'a>(&'a self, name: &str, fixed: &Params) -> Box<dyn Learner + 'a> {
        struct Bound<'r> {
            registry: &'r Registry,
            name: String,
            fixed: Params,
        }
        impl Learner for Bound<'_> {
            fn fit(&self, train: &Dataset, params: &Params, seed: u64) -> Result<Box<dyn Scorer>> {
                self.registry
                    .fit(&self.name, &self.fixed, train, params, seed)
            }
        }
        Box::new(Bound {
            registry: self,
            name: name.into(),
            fixed: fixed.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synth_gaussian;
    use crate::seed;
    use crate::tuning::enumerate_candidates;

    #[test]
    fn every_native_algorithm_fits_with_defaults_and_its_plan() {
        let d = synth_gaussian(120, 0.2, 3, 2.0, 1).unwrap();
        for name in NATIVE_ALGORITHMS {
            let m = fit_algorithm(name, &d, &Params::default(), 7).unwrap();
            assert_eq!(m.dim(), 3, "{name}");
            let s = m.predict_score(d.row(0)).unwrap();
            assert!((0.0..=1.0).contains(&s), "{name}: {s}");
            let plan = default_plan(name).unwrap();
            for c in enumerate_candidates(&plan, &mut seed::rng(0)).unwrap() {
                check_params(name, &c).unwrap();
            }
        }
    }

    #[test]
    fn unknown_names_rejected() {
        let d = synth_gaussian(60, 0.2, 2, 2.0, 1).unwrap();
        assert!(fit_algorithm("lightgbm", &d, &Params::default(), 0).is_err());
        let bad = Params::default().with("depthh", ParamValue::Int(2));
        assert!(matches!(
            fit_algorithm("adaboost", &d, &bad, 0),
            Err(Error::Tuning(_))
        ));
    }

    #[test]
    fn external_learners_can_be_registered() {
        struct Half;
        impl Learner for Half {
            fn fit(&self, _: &Dataset, _: &Params, _: u64) -> Result<Box<dyn Scorer>> {
                struct S;
                impl Scorer for S {
                    fn score(&self, _: &[f64]) -> Result<f64> {
                        Ok(0.5)
                    }
                }
                Ok(Box::new(S))
            }
        }
        let mut r = Registry::native();
        r.register(
            "const",
            Box::new(Half),
            SearchPlan::grid(vec![ints("x", &[1])]),
        )
        .unwrap();
        assert!(r
            .register("knn", Box::new(Half), SearchPlan::grid(vec![]))
            .is_err());
        let d = synth_gaussian(60, 0.2, 2, 2.0, 1).unwrap();
        let s = r
            .fit("const", &Params::default(), &d, &Params::default(), 0)
            .unwrap();
        assert_eq!(s.score(d.row(0)).unwrap(), 0.5);
    }
}
