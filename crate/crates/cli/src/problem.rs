use std::time::Instant;

use fairalloc::ambiguity::MomentAmbiguity;
use fairalloc::baselines::{self, EvOptions};
use fairalloc::cutting::{solve_sadr_with, CutLog, SadrOptions};
use fairalloc::model::{load_instance, Labels};
use fairalloc::scenarios::{generate, ingest_trace, sample_moments, Family, GeneratorSpec};
use fairalloc::{
    DiscreteDistribution, FairnessParams, Matrix, ResourceInstance, ScenarioSet, SolveReport,
};

use crate::args::{ModelArg, ProblemArgs};
use crate::{CliError, CliResult};

/// Where the SA-DR ambiguity set comes from.
#[derive(Clone, Debug)]
pub enum SetSource {
    Vacuous,
    Delta(f64),
    Instance,
}

/// A loaded problem: instance, scenarios and everything needed to solve it.
#[derive(Clone, Debug)]
pub struct Problem {
    pub instance: ResourceInstance,
    pub scenarios: ScenarioSet,
    pub labels: Labels,
    pub generator: Option<GeneratorSpec>,
    pub params: FairnessParams,
    pub set_source: SetSource,
    pub seed: u64,
    pub corners: bool,
    pub printed_ev: bool,
    pub timing: bool,
}

pub fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Fds => "fds",
        ModelArg::Ev => "ev",
        ModelArg::Robust => "robust",
        ModelArg::Saa => "saa",
        ModelArg::Sadr => "sadr",
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &std::path::Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|source| fairalloc::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Lib(fairalloc::Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            reason: e.to_string(),
        })
    })
}

pub fn load_generator(path: &std::path::Path) -> CliResult<GeneratorSpec> {
    let spec: GeneratorSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

impl Problem {
    pub fn load(a: &ProblemArgs) -> CliResult<Problem> {
        let instance = load_instance(&a.instance)?;
        let (scenarios, labels, generator) = match (&a.scenarios, &a.gen) {
            (Some(path), None) => {
                if a.count.is_some() {
                    return Err(CliError::Usage("--count needs --gen".into()));
                }
                let tr = ingest_trace(path)?;
                let labels = tr.labels();
                (tr.scenarios, labels, None)
            }
            (None, Some(path)) => {
                let mut spec = load_generator(path)?;
                if let Some(n) = a.count {
                    spec = spec.with_count(n);
                }
                (generate(&spec)?, instance.labels.clone(), Some(spec))
            }
            _ => {
                return Err(CliError::Usage(
                    "give exactly one of --scenarios or --gen".into(),
                ))
            }
        };
        instance.check_scenarios(&scenarios)?;
        let params = match a.lambda {
            Some(l) => FairnessParams::explicit(a.beta, l, a.theta, a.epsilon),
            None => FairnessParams::coupled(a.beta, a.theta, a.epsilon),
        };
        params.validate()?;
        let set_source = if a.vacuous {
            SetSource::Vacuous
        } else if let Some(d) = a.delta {
            SetSource::Delta(d)
        } else {
            SetSource::Instance
        };
        Ok(Problem {
            instance,
            scenarios,
            labels,
            generator,
            params,
            set_source,
            seed: a.seed,
            corners: a.corners,
            printed_ev: a.printed_ev,
            timing: a.timing,
        })
    }

    /// Replaces the generator and redraws the scenarios.
    pub fn regenerate(&mut self, spec: GeneratorSpec) -> CliResult<()> {
        self.scenarios = generate(&spec)?;
        self.instance.check_scenarios(&self.scenarios)?;
        self.generator = Some(spec);
        Ok(())
    }

    pub fn generator(&self, what: &str) -> CliResult<&GeneratorSpec> {
        self.generator
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("{what} needs --gen")))
    }

    pub fn ambiguity(&self) -> CliResult<MomentAmbiguity> {
        Ok(match &self.set_source {
            SetSource::Vacuous => MomentAmbiguity::vacuous(&self.scenarios),
            SetSource::Delta(d) => {
                let (m, v) = sample_moments(&self.scenarios, None)?;
                MomentAmbiguity::from_moments(&m, &v, *d)?
            }
            SetSource::Instance => match &self.instance.ambiguity {
                Some(spec) => spec.resolve(&self.scenarios)?,
                None => {
                    return Err(CliError::Usage(
                        "sadr needs --delta, --vacuous or an ambiguity entry in the instance"
                            .into(),
                    ))
                }
            },
        })
    }

    /// Scenarios seen by the robust and EV models.
    fn baseline_scenarios(&self) -> CliResult<ScenarioSet> {
        if !self.corners {
            return Ok(self.scenarios.clone());
        }
        let spec = self.generator("--corners")?;
        let (lo, hi) = match &spec.family {
            Family::Uniform { lower, upper } | Family::Triangular { lower, upper, .. } => {
                (lower.clone(), upper.clone())
            }
            Family::TwoPoint { low, high, .. } => (low.clone(), high.clone()),
            Family::Box { nominal, radius } => (
                nominal.map(|r| (r - radius).max(0.0)),
                nominal.map(|r| r + radius),
            ),
        };
        Ok(ScenarioSet::new(vec![lo, hi])?)
    }

    pub fn solve(&self, model: ModelArg) -> CliResult<(SolveReport, Option<CutLog>)> {
        let start = Instant::now();
        let (inst, p, seed) = (&self.instance, &self.params, self.seed);
        let (mut report, log) = match model {
            ModelArg::Fds => {
                let mean = baselines::mean_requirements(
                    &self.scenarios,
                    &DiscreteDistribution::uniform(self.scenarios.len()),
                )?;
                (baselines::solve_fds(inst, &mean, p, seed)?, None)
            }
            ModelArg::Ev => {
                let sc = self.baseline_scenarios()?;
                let opts = EvOptions {
                    printed_form: self.printed_ev,
                    timing: self.timing,
                };
                let u = DiscreteDistribution::uniform(sc.len());
                (
                    baselines::solve_ev_with(inst, &sc, &u, p, seed, &opts)?,
                    None,
                )
            }
            ModelArg::Robust => (
                baselines::solve_robust(inst, &self.baseline_scenarios()?, p, seed)?,
                None,
            ),
            ModelArg::Saa => (baselines::solve_saa(inst, &self.scenarios, p, seed)?, None),
            ModelArg::Sadr => {
                let set = self.ambiguity()?;
                let opts = SadrOptions {
                    timing: self.timing,
                    ..SadrOptions::default()
                };
                let out = solve_sadr_with(inst, &self.scenarios, &set, p, seed, &opts)?;
                (out.report, Some(out.log))
            }
        };
        report.wall_time = if self.timing {
            start.elapsed().as_secs_f64()
        } else {
            0.0
        };
        Ok((report, log))
    }

    /// Expected unused capacity on the sample under uniform weights.
    pub fn leftovers(&self, report: &SolveReport) -> CliResult<Vec<f64>> {
        let u = DiscreteDistribution::uniform(self.scenarios.len());
        Ok(baselines::leftovers(
            report,
            &self.instance,
            &self.scenarios,
            &u,
        )?)
    }

    pub fn user_names(&self) -> Vec<String> {
        names(
            self.labels
                .users
                .as_ref()
                .or(self.instance.labels.users.as_ref()),
            self.instance.num_users,
            "u",
        )
    }

    pub fn resource_names(&self) -> Vec<String> {
        names(
            self.labels
                .resources
                .as_ref()
                .or(self.instance.labels.resources.as_ref()),
            self.instance.num_resources,
            "r",
        )
    }
}

fn names(given: Option<&Vec<String>>, n: usize, prefix: &str) -> Vec<String> {
    given
        .filter(|v| v.len() == n)
        .cloned()
        .unwrap_or_else(|| (1..=n).map(|k| format!("{prefix}{k}")).collect())
}

/// The generator with its spread set to ρ around its centre.
pub fn with_radius(spec: &GeneratorSpec, rho: f64) -> CliResult<GeneratorSpec> {
    let around = |c: &Matrix| (c.map(|r| (r - rho).max(0.0)), c.map(|r| r + rho));
    let family = match &spec.family {
        Family::Box { nominal, .. } => Family::Box {
            nominal: nominal.clone(),
            radius: rho,
        },
        Family::Triangular { mode, .. } => {
            let (lower, upper) = around(mode);
            Family::Triangular {
                lower,
                mode: mode.clone(),
                upper,
            }
        }
        Family::Uniform { lower, upper } => {
            let mid = Matrix::new(
                lower.rows(),
                lower.cols(),
                lower
                    .data()
                    .iter()
                    .zip(upper.data())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            )?;
            let (lower, upper) = around(&mid);
            Family::Uniform { lower, upper }
        }
        Family::TwoPoint { .. } => {
            return Err(CliError::Usage(
                "rho needs a box, uniform or triangular generator".into(),
            ))
        }
    };
    let out = GeneratorSpec {
        family,
        count: spec.count,
        seed: spec.seed,
    };
    out.validate()?;
    Ok(out)
}
