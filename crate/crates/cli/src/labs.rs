//! Typed payloads of each lab and their execution for a single seed.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use popscale_adaptive as adaptive;
use popscale_branching as branching;
use popscale_core::RngStream;
use popscale_groupsel as groupsel;
use popscale_hj as hj;

use crate::config::{display_path, Lab};
use crate::error::{CliError, Result};
use crate::output::{CellOutput, Field, Table};

/// A packaged model by name, or a full inline specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelRef<T> {
    Packaged(String),
    Inline(T),
}

fn group_model(name: &str) -> Option<groupsel::PenalizedWfModel> {
    match name {
        "polymorphic" => Some(groupsel::scenarios::polymorphic()),
        "fixation_c" => Some(groupsel::scenarios::fixation_c()),
        "fixation_d" => Some(groupsel::scenarios::fixation_d()),
        _ => None,
    }
}

trait Resolve {
    type Model;
    fn resolve(&self) -> Result<Self::Model>;
}

fn unknown(name: &str) -> CliError {
    CliError::schema("model.packaged", format!("unknown packaged model `{name}`"))
}

fn invalid(err: impl std::fmt::Display) -> CliError {
    CliError::schema("model.inline", err.to_string())
}

impl Resolve for ModelRef<groupsel::PenalizedWfModel> {
    type Model = groupsel::PenalizedWfModel;
    fn resolve(&self) -> Result<Self::Model> {
        match self {
            Self::Packaged(name) => group_model(name).ok_or_else(|| unknown(name)),
            Self::Inline(m) => m.validate().map(|_| m.clone()).map_err(invalid),
        }
    }
}

impl Resolve for ModelRef<hj::DiscreteTraitModel> {
    type Model = hj::DiscreteTraitModel;
    fn resolve(&self) -> Result<Self::Model> {
        match self {
            Self::Packaged(name) => hj::models::by_name(name).ok_or_else(|| unknown(name)),
            Self::Inline(m) => m.validate().map(|_| m.clone()).map_err(invalid),
        }
    }
}

impl Resolve for ModelRef<adaptive::EcologySpec> {
    type Model = adaptive::EcologySpec;
    fn resolve(&self) -> Result<Self::Model> {
        match self {
            Self::Packaged(name) => adaptive::models::by_name(name).ok_or_else(|| unknown(name)),
            Self::Inline(m) => m.validate().map(|_| m.clone()).map_err(invalid),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BranchingExperiment {
    /// Pointwise RMSE of the invariant-density estimate across tree depths.
    NuRate { generations: Vec<u32>, y0: f64, replicates: usize },
    /// Wald coverage of the division-rate MLE across tree depths.
    MleCoverage { generations: Vec<u32>, replicates: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSelectionExperiment {
    Qsd {
        model: ModelRef<groupsel::PenalizedWfModel>,
        grid: usize,
    },
    Classify {
        model: ModelRef<groupsel::PenalizedWfModel>,
        grid: usize,
        exit_paths: usize,
    },
    /// Wasserstein-1 distance of nested Moran populations (groups = group size) to the limit.
    IbmVsLimit {
        model: ModelRef<groupsel::PenalizedWfModel>,
        sizes: Vec<u32>,
        horizon: f64,
        grid: usize,
    },
    /// Monte Carlo against the grid solution for the mean of the limit law.
    FeynmanKac {
        model: ModelRef<groupsel::PenalizedWfModel>,
        horizon: f64,
        paths: usize,
        dt: f64,
        grid: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum HjExperiment {
    Phi { model: ModelRef<hj::DiscreteTraitModel>, horizon: f64, steps: usize },
    EpsConvergence { model: ModelRef<hj::DiscreteTraitModel>, epsilons: Vec<f64>, horizon: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AdaptiveExperiment {
    /// First substitution times of the individual-based model against the jump process.
    FirstJump {
        model: ModelRef<adaptive::EcologySpec>,
        k: u64,
        marker_rate: f64,
        x0: f64,
        #[serde(default)]
        marker: usize,
        replicates: usize,
    },
    Tss {
        model: ModelRef<adaptive::EcologySpec>,
        sigma: f64,
        x0: f64,
        horizon: f64,
    },
    Cead {
        model: ModelRef<adaptive::EcologySpec>,
        x0: f64,
        horizon: f64,
    },
    /// Sup distance between rescaled jump paths and the canonical equation per step size.
    TssCead {
        model: ModelRef<adaptive::EcologySpec>,
        sigmas: Vec<f64>,
        x0: f64,
        horizon: f64,
        replicates: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum LabPayload {
    Branching(BranchingExperiment),
    GroupSelection(GroupSelectionExperiment),
    Hj(HjExperiment),
    Adaptive(AdaptiveExperiment),
}

/// Payloads select their variant with an `experiment` field. The object is rewritten to
/// the externally tagged form first, since internally tagged enums lose field paths.
fn typed<T: serde::de::DeserializeOwned>(value: Value) -> Result<T> {
    let Value::Object(mut fields) = value else {
        return Err(CliError::schema("<root>", "must be an object"));
    };
    let tag = match fields.remove("experiment") {
        Some(Value::String(tag)) => tag,
        Some(_) => return Err(CliError::schema("experiment", "must be a string")),
        None => return Err(CliError::schema("experiment", "missing field `experiment`")),
    };
    let mut wrapped = serde_json::Map::new();
    wrapped.insert(tag, Value::Object(fields));
    serde_path_to_error::deserialize(Value::Object(wrapped)).map_err(|e| {
        let path = e.path().to_string();
        let inner = match path.split_once('.') {
            Some((_, rest)) => rest.to_string(),
            None if path.is_empty() || path == "." => "experiment".to_string(),
            None => "<root>".to_string(),
        };
        CliError::schema(&display_path(&inner), e.inner().to_string())
    })
}

fn check(ok: bool, path: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::schema(path, message))
    }
}

fn positive(v: f64, path: &str) -> Result<()> {
    check(v > 0.0 && v.is_finite(), path, "must be positive and finite")
}

fn increasing(v: &[f64], path: &str) -> Result<()> {
    check(v.len() >= 2 && v.windows(2).all(|w| w[1] > w[0]), path, "need at least two strictly increasing values")
}

impl LabPayload {
    pub fn parse(lab: Lab, value: Value) -> Result<Self> {
        let payload = match lab {
            Lab::Branching => Self::Branching(typed(value)?),
            Lab::GroupSelection => Self::GroupSelection(typed(value)?),
            Lab::Hj => Self::Hj(typed(value)?),
            Lab::AdaptiveDynamics => Self::Adaptive(typed(value)?),
        };
        payload.validate()?;
        Ok(payload)
    }

    /// Checks that hold before anything is simulated.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Branching(e) => match e {
                BranchingExperiment::NuRate { generations, y0, replicates } => {
                    let g: Vec<f64> = generations.iter().map(|&g| g as f64).collect();
                    increasing(&g, "generations")?;
                    check(
                        generations.iter().all(|&g| (6..=24).contains(&g)),
                        "generations",
                        "each depth must lie in 6..=24",
                    )?;
                    check(*y0 > 0.0 && *y0 < 1.0, "y0", "must lie in (0, 1)")?;
                    check(*replicates > 0, "replicates", "must be positive")
                }
                BranchingExperiment::MleCoverage { generations, replicates } => {
                    check(!generations.is_empty(), "generations", "must be nonempty")?;
                    check(
                        generations.iter().all(|&g| (4..=20).contains(&g)),
                        "generations",
                        "each depth must lie in 4..=20",
                    )?;
                    check(*replicates > 0, "replicates", "must be positive")
                }
            },
            Self::GroupSelection(e) => {
                let (model, grid) = match e {
                    GroupSelectionExperiment::Qsd { model, grid } => (model, grid),
                    GroupSelectionExperiment::Classify { model, grid, exit_paths } => {
                        check(*exit_paths == 0 || *exit_paths >= 100, "exit_paths", "use 0 or at least 100")?;
                        (model, grid)
                    }
                    GroupSelectionExperiment::IbmVsLimit { model, sizes, horizon, grid } => {
                        check(!sizes.is_empty() && sizes.iter().all(|&s| s >= 2), "sizes", "need sizes of at least 2")?;
                        positive(*horizon, "horizon")?;
                        (model, grid)
                    }
                    GroupSelectionExperiment::FeynmanKac { model, horizon, paths, dt, grid } => {
                        positive(*horizon, "horizon")?;
                        positive(*dt, "dt")?;
                        check(*paths >= 100, "paths", "need at least 100")?;
                        (model, grid)
                    }
                };
                check(*grid >= groupsel::MIN_QSD_GRID, "grid", "grid too coarse")?;
                model.resolve().map(|_| ())
            }
            Self::Hj(e) => match e {
                HjExperiment::Phi { model, horizon, steps } => {
                    positive(*horizon, "horizon")?;
                    check(*steps > 0, "steps", "must be positive")?;
                    model.resolve().map(|_| ())
                }
                HjExperiment::EpsConvergence { model, epsilons, horizon } => {
                    positive(*horizon, "horizon")?;
                    check(epsilons.iter().all(|&e| e > 0.0 && e < 1.0), "epsilons", "each must lie in (0, 1)")?;
                    check(!epsilons.is_empty(), "epsilons", "must be nonempty")?;
                    model.resolve().map(|_| ())
                }
            },
            Self::Adaptive(e) => match e {
                AdaptiveExperiment::FirstJump { model, k, marker_rate, x0, marker, replicates } => {
                    let eco = model.resolve()?;
                    check(eco.in_box(*x0), "x0", "outside the trait box")?;
                    check(*marker < eco.markers.markers(), "marker", "not a marker of the model")?;
                    check(*replicates > 0, "replicates", "must be positive")?;
                    let regime = adaptive::ScalingRegime::marker_model(*k, *marker_rate);
                    regime.validate().map_err(|e| CliError::schema("k", e.to_string()))?;
                    regime
                        .marker_jump_scale(&eco.markers)
                        .map_err(|e| CliError::schema("marker_rate", e.to_string()))?;
                    Ok(())
                }
                AdaptiveExperiment::Tss { model, sigma, x0, horizon } => {
                    positive(*sigma, "sigma")?;
                    positive(*horizon, "horizon")?;
                    check(model.resolve()?.in_box(*x0), "x0", "outside the trait box")
                }
                AdaptiveExperiment::Cead { model, x0, horizon } => {
                    positive(*horizon, "horizon")?;
                    check(model.resolve()?.in_box(*x0), "x0", "outside the trait box")
                }
                AdaptiveExperiment::TssCead { model, sigmas, x0, horizon, replicates } => {
                    check(!sigmas.is_empty() && sigmas.iter().all(|&s| s > 0.0), "sigmas", "need positive step sizes")?;
                    positive(*horizon, "horizon")?;
                    check(*replicates > 0, "replicates", "must be positive")?;
                    check(model.resolve()?.in_box(*x0), "x0", "outside the trait box")
                }
            },
        }
    }

    /// Validity of the scaling assumptions, for experiments that have a scaling regime.
    pub fn regime_report(&self) -> Option<Value> {
        match self {
            Self::Adaptive(AdaptiveExperiment::FirstJump { k, marker_rate, .. }) => {
                let regime = adaptive::ScalingRegime::marker_model(*k, *marker_rate);
                serde_json::to_value(regime.report(1.0)).ok()
            }
            _ => None,
        }
    }

    /// Runs one cell. The error is the lab's diagnostic message.
    pub fn run(&self, seed: u64) -> std::result::Result<CellOutput, String> {
        match self {
            Self::Branching(e) => run_branching(e, seed).map_err(|e| e.to_string()),
            Self::GroupSelection(e) => run_groupsel(e, seed).map_err(|e| e.to_string()),
            Self::Hj(e) => run_hj(e).map_err(|e| e.to_string()),
            Self::Adaptive(e) => run_adaptive(e, seed).map_err(|e| e.to_string()),
        }
    }
}

fn resolved<R: Resolve>(r: &R) -> std::result::Result<R::Model, String> {
    r.resolve().map_err(|e| e.to_string())
}

fn convergence_table(scales: &[f64], errors: &[f64]) -> Table {
    let mut t = Table::new("convergence", &["scale", "error"]);
    for (s, e) in scales.iter().zip(errors) {
        t.push(vec![(*s).into(), (*e).into()]);
    }
    t
}

fn run_branching(e: &BranchingExperiment, seed: u64) -> branching::Result<CellOutput> {
    match e {
        BranchingExperiment::NuRate { generations, y0, replicates } => {
            let study = branching::nu_rate_study(generations, *y0, *replicates, seed)?;
            let sizes: Vec<f64> = study.sizes.iter().map(|&n| n as f64).collect();
            Ok(CellOutput {
                tables: vec![convergence_table(&sizes, &study.rmse)],
                summary: json!({ "slope": study.slope, "slope_se": study.slope_se }),
            })
        }
        BranchingExperiment::MleCoverage { generations, replicates } => {
            let levels = branching::mle_coverage_study(generations, *replicates, seed)?;
            let mut coverage = Table::new(
                "coverage",
                &[
                    "generations",
                    "mean_sample_size",
                    "joint_coverage",
                    "coverage_0",
                    "coverage_1",
                    "width_0",
                    "width_1",
                ],
            );
            let mut errors = Table::new("scaled_errors", &["generations", "replicate", "error_0", "error_1"]);
            for l in &levels {
                coverage.push(vec![
                    l.generations.into(),
                    l.mean_sample_size.into(),
                    l.joint_coverage.into(),
                    l.coordinate_coverage[0].into(),
                    l.coordinate_coverage[1].into(),
                    l.mean_width[0].into(),
                    l.mean_width[1].into(),
                ]);
                for (r, e) in l.scaled_errors.iter().enumerate() {
                    errors.push(vec![l.generations.into(), r.into(), e[0].into(), e[1].into()]);
                }
            }
            let joint: Vec<f64> = levels.iter().map(|l| l.joint_coverage).collect();
            Ok(CellOutput { tables: vec![coverage, errors], summary: json!({ "joint_coverage": joint }) })
        }
    }
}

fn run_groupsel(e: &GroupSelectionExperiment, seed: u64) -> std::result::Result<CellOutput, String> {
    let err = |e: groupsel::GroupSelError| e.to_string();
    match e {
        GroupSelectionExperiment::Qsd { model, grid } => {
            let q = groupsel::compute_qsd(&resolved(model)?, *grid).map_err(err)?;
            let mut t = Table::new("qsd", &["x", "alpha_density", "eta"]);
            for (i, (a, h)) in q.alpha.density.iter().zip(&q.eta).enumerate() {
                t.push(vec![q.alpha.center(i).into(), (*a).into(), (*h).into()]);
            }
            Ok(CellOutput {
                tables: vec![t],
                summary: json!({
                    "rho_alpha": q.unshifted_rho_alpha(),
                    "zeta": q.zeta,
                    "residual": q.residual,
                    "exit_split": [q.exit_split0(), q.exit_split1()],
                }),
            })
        }
        GroupSelectionExperiment::Classify { model, grid, exit_paths } => {
            let exit = (*exit_paths > 0).then_some(groupsel::ExitSplitConfig { paths: *exit_paths, dt: 1e-3, seed });
            let report = groupsel::classify_regime(&resolved(model)?, *grid, exit).map_err(err)?;
            Ok(CellOutput { tables: vec![], summary: serde_json::to_value(report).map_err(|e| e.to_string())? })
        }
        GroupSelectionExperiment::IbmVsLimit { model, sizes, horizon, grid } => {
            let m = resolved(model)?;
            let mu0 = groupsel::scenarios::feynman_kac_start(*grid);
            let limit =
                groupsel::evolve_limit_measure(&mu0, &m, *horizon, groupsel::default_dt(&m, *grid)).map_err(err)?;
            let mut w1 = Vec::new();
            for &size in sizes {
                let mut rng = RngStream::new(seed, size as u64);
                let state =
                    groupsel::NestedMoranState::from_limit(&m, size as usize, size, &mu0, &mut rng).map_err(err)?;
                let snap = groupsel::simulate_nested_moran(&state, &[*horizon], &mut rng).map_err(err)?;
                w1.push(snap[0].wasserstein1(&limit));
            }
            let scales: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
            Ok(CellOutput {
                tables: vec![convergence_table(&scales, &w1)],
                summary: json!({ "limit_mean": limit.mean() }),
            })
        }
        GroupSelectionExperiment::FeynmanKac { model, horizon, paths, dt, grid } => {
            let m = resolved(model)?;
            let mu0 = groupsel::scenarios::feynman_kac_start(*grid);
            let est = groupsel::feynman_kac_estimate(&mu0, &m, *horizon, |x| x, *paths, *dt, seed).map_err(err)?;
            let fine =
                groupsel::evolve_limit_measure(&mu0, &m, *horizon, groupsel::default_dt(&m, *grid)).map_err(err)?;
            Ok(CellOutput {
                tables: vec![],
                summary: json!({
                    "monte_carlo": est.value,
                    "std_error": est.std_error,
                    "effective_sample_size": est.effective_sample_size,
                    "grid": fine.mean(),
                }),
            })
        }
    }
}

fn run_hj(e: &HjExperiment) -> std::result::Result<CellOutput, String> {
    let err = |e: hj::HjError| e.to_string();
    match e {
        HjExperiment::Phi { model, horizon, steps } => {
            let m = resolved(model)?;
            let sol = hj::solve_phi_discrete(&m, *horizon, *steps).map_err(err)?;
            let mut cols = vec!["time".to_string()];
            cols.extend((0..m.types()).map(|k| format!("phi_{k}")));
            cols.extend((0..m.resources()).map(|i| format!("psi_{i}")));
            let mut t = Table { name: "phi".into(), columns: cols, rows: Vec::new() };
            for ((time, phi), psi) in sol.times.iter().zip(&sol.phi).zip(&sol.psi) {
                let mut row = vec![Field::from(*time)];
                row.extend(phi.iter().chain(psi).map(|&v| Field::from(v)));
                t.push(row);
            }
            Ok(CellOutput { tables: vec![t], summary: json!({ "catastrophe_times": sol.catastrophe_times }) })
        }
        HjExperiment::EpsConvergence { model, epsilons, horizon } => {
            let m = resolved(model)?;
            let sol = hj::solve_phi_discrete(&m, *horizon, 100).map_err(err)?;
            let gaps = epsilons
                .iter()
                .map(|&eps| {
                    let opts = hj::EpsSolverOptions { samples: 100, ..Default::default() };
                    hj::solve_u_eps_discrete(&m, eps, *horizon, opts).map(|u| u.sup_distance(&sol))
                })
                .collect::<hj::Result<Vec<f64>>>()
                .map_err(err)?;
            Ok(CellOutput { tables: vec![convergence_table(epsilons, &gaps)], summary: json!({}) })
        }
    }
}

fn run_adaptive(e: &AdaptiveExperiment, seed: u64) -> std::result::Result<CellOutput, String> {
    let err = |e: adaptive::AdaptiveError| e.to_string();
    match e {
        AdaptiveExperiment::FirstJump { model, k, marker_rate, x0, marker, replicates } => {
            let eco = resolved(model)?;
            let regime = adaptive::ScalingRegime::marker_model(*k, *marker_rate);
            let study = adaptive::first_jump_study(&eco, &regime, *x0, *marker, *replicates, seed).map_err(err)?;
            let mut t = Table::new("waiting_times", &["time", "destination"]);
            for (time, to) in study.times.iter().zip(&study.destinations) {
                t.push(vec![(*time).into(), (*to).into()]);
            }
            Ok(CellOutput {
                tables: vec![t],
                summary: json!({
                    "tss_rate": study.tss_rate,
                    "censored": study.censored,
                    "destination_tv": study.destination_tv,
                }),
            })
        }
        AdaptiveExperiment::Tss { model, sigma, x0, horizon } => {
            let eco = resolved(model)?;
            let log = adaptive::simulate_tss(&eco, *sigma, *x0, *horizon, &RngStream::new(seed, 0)).map_err(err)?;
            let mut t = Table::new("jumps", &["time", "from", "to", "fitness", "resident_fitness"]);
            for j in &log.jumps {
                let resident = eco.invasion_fitness(j.from, j.from);
                t.push(vec![j.time.into(), j.from.into(), j.to.into(), j.fitness.into(), resident.into()]);
            }
            Ok(CellOutput { tables: vec![t], summary: json!({ "warnings": log.warnings.len() }) })
        }
        AdaptiveExperiment::Cead { model, x0, horizon } => {
            let eco = resolved(model)?;
            let traj = adaptive::integrate_cead(&eco, *x0, *horizon, &adaptive::CeadOptions::default()).map_err(err)?;
            let mut t = Table::new("trajectory", &["time", "trait"]);
            for (time, x) in traj.times.iter().zip(&traj.traits) {
                t.push(vec![(*time).into(), (*x).into()]);
            }
            Ok(CellOutput { tables: vec![t], summary: json!({ "halt": traj.halt }) })
        }
        AdaptiveExperiment::TssCead { model, sigmas, x0, horizon, replicates } => {
            let eco = resolved(model)?;
            let mut raw = Table::new("distances", &["sigma", "replicate", "distance"]);
            let mut means = Vec::new();
            for &sigma in sigmas {
                let d = adaptive::tss_cead_distances(&eco, sigma, *x0, *horizon, *replicates, seed).map_err(err)?;
                for (r, v) in d.iter().enumerate() {
                    raw.push(vec![sigma.into(), r.into(), (*v).into()]);
                }
                means.push(d.iter().sum::<f64>() / d.len() as f64);
            }
            Ok(CellOutput { tables: vec![convergence_table(sigmas, &means), raw], summary: json!({}) })
        }
    }
}
