use std::io::Write;
use std::path::Path;

use fairalloc::ambiguity::AmbiguitySpec;
use fairalloc::analysis::{
    check_properties, confidence_bounds, BoundsMode, BoundsModel, BoundsReport,
};
use fairalloc::model::{load_report, save_instance, save_report, Labels};
use fairalloc::presets;
use fairalloc::scenarios::{generate, write_scenarios_csv, GeneratorSpec};
use fairalloc::SolveReport;

use crate::args::{
    BoundsArgs, BoundsModeArg, CheckArgs, CompareArgs, FamilyArg, GenArgs, ModelArg, PresetArgs,
    PresetName, SolveArgs,
};
use crate::problem::{load_generator, model_name, Problem, SetSource};
use crate::{CliError, CliResult};

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| {
        CliError::Lib(fairalloc::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Writes `text` to `out`, or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(io_err(p)),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .map_err(io_err(Path::new("<stdout>")))
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

pub fn solve(a: SolveArgs) -> CliResult<()> {
    if a.cut_log.is_some() && a.model != ModelArg::Sadr {
        return Err(CliError::Usage(
            "--cut-log applies to --model sadr only".into(),
        ));
    }
    let pb = Problem::load(&a.problem)?;
    let (mut report, log) = pb.solve(a.model)?;
    if a.check {
        report.properties = Some(check_properties(
            &report,
            &pb.scenarios,
            &pb.instance,
            fairalloc::analysis::DEFAULT_PARETO_TRIALS,
            pb.seed,
        )?);
    }
    if let (Some(path), Some(log)) = (&a.cut_log, &log) {
        log.to_csv(path)?;
    }
    match &a.out {
        Some(p) => save_report(&report, p)?,
        None => emit(None, &json(&report))?,
    }
    Ok(())
}

/// CSV columns shared by `compare` and `sweep`.
pub fn csv_header(pb: &Problem, lead: &str, gap: bool) -> String {
    let mut cols = vec![lead.to_string(), "status".into(), "objective".into()];
    cols.extend(pb.user_names().iter().map(|u| format!("x_{u}")));
    cols.extend(pb.resource_names().iter().map(|r| format!("leftover_{r}")));
    if gap {
        cols.push("gap_percent".into());
    }
    cols.push("wall_time".into());
    cols.join(",")
}

/// One CSV row; failed solves keep their status and leave the numbers empty.
pub fn csv_row(
    pb: &Problem,
    lead: &str,
    outcome: &CliResult<(SolveReport, Vec<f64>)>,
    gap: Option<&CliResult<BoundsReport>>,
) -> String {
    let (d, m) = (pb.instance.num_users, pb.instance.num_resources);
    let mut cells = vec![lead.to_string()];
    match outcome {
        Ok((rep, left)) => {
            cells.push("ok".into());
            cells.push(rep.objective.to_string());
            cells.extend(rep.x().iter().map(f64::to_string));
            cells.extend(left.iter().map(f64::to_string));
        }
        Err(e) => {
            cells.push(status(e));
            cells.extend(std::iter::repeat_n(String::new(), 1 + d + m));
        }
    }
    if let Some(g) = gap {
        cells.push(match g {
            Ok(b) => b.gap_percent.to_string(),
            Err(_) => String::new(),
        });
    }
    cells.push(match outcome {
        Ok((rep, _)) => rep.wall_time.to_string(),
        Err(_) => String::new(),
    });
    cells.join(",")
}

fn status(e: &CliError) -> String {
    match e {
        CliError::Lib(err) if err.is_infeasible() => "infeasible".into(),
        CliError::Lib(fairalloc::Error::NonConvergence { .. }) => "nonconvergence".into(),
        other => format!("error: {}", other.to_string().replace([',', '\n'], ";")),
    }
}

pub fn solve_row(pb: &Problem, model: ModelArg) -> CliResult<(SolveReport, Vec<f64>)> {
    let (rep, _) = pb.solve(model)?;
    let left = pb.leftovers(&rep)?;
    Ok((rep, left))
}

pub fn compare(a: CompareArgs) -> CliResult<()> {
    let pb = Problem::load(&a.problem)?;
    let mut lines = vec![csv_header(&pb, "model", false)];
    for m in [
        ModelArg::Fds,
        ModelArg::Ev,
        ModelArg::Robust,
        ModelArg::Saa,
        ModelArg::Sadr,
    ] {
        lines.push(csv_row(&pb, model_name(m), &solve_row(&pb, m), None));
    }
    emit(a.out.as_deref(), &(lines.join("\n") + "\n"))
}

pub fn bounds_model(pb: &Problem, model: ModelArg) -> CliResult<BoundsModel> {
    match model {
        ModelArg::Saa => Ok(BoundsModel::Saa),
        ModelArg::Sadr => {
            let spec = match &pb.set_source {
                SetSource::Delta(d) => AmbiguitySpec::Delta { delta: *d },
                SetSource::Instance => pb.instance.ambiguity.clone().ok_or_else(|| {
                    CliError::Usage(
                        "sadr bounds need --delta or an ambiguity entry in the instance".into(),
                    )
                })?,
                SetSource::Vacuous => {
                    return Err(CliError::Usage("bounds do not support --vacuous".into()));
                }
            };
            Ok(BoundsModel::Sadr(spec))
        }
        _ => Err(CliError::Usage("bounds support --model saa or sadr".into())),
    }
}

pub fn default_mode(model: ModelArg, mode: Option<BoundsModeArg>) -> BoundsMode {
    match (mode, model) {
        (Some(BoundsModeArg::SaaPoint), _) => BoundsMode::SaaPoint,
        (Some(BoundsModeArg::DrReplicate), _) => BoundsMode::DrReplicate,
        (None, ModelArg::Sadr) => BoundsMode::DrReplicate,
        (None, _) => BoundsMode::SaaPoint,
    }
}

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    let pb = Problem::load(&a.problem)?;
    let model = bounds_model(&pb, a.model)?;
    let gen = pb.generator("bounds")?.with_seed(pb.seed);
    let rep = confidence_bounds(
        &model,
        &pb.instance,
        &gen,
        &pb.params,
        a.replicates,
        default_mode(a.model, a.mode),
    )?;
    emit(a.out.as_deref(), &json(&rep))
}

pub fn check(a: CheckArgs) -> CliResult<()> {
    let report = load_report(&a.report)?;
    let pb = Problem::load(&a.problem)?;
    let props = check_properties(&report, &pb.scenarios, &pb.instance, a.trials, pb.seed)?;
    emit(a.out.as_deref(), &json(&props))?;
    if props.passed() {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn builtin_generator(f: FamilyArg) -> CliResult<GeneratorSpec> {
    Ok(match f {
        FamilyArg::Uniform => presets::azure_generator(4, false, 100, 0)?,
        FamilyArg::Triangular => presets::azure_generator(4, true, 100, 0)?,
        FamilyArg::TwoPoint => presets::toy_generator(presets::TWO_POINT_CONFIGS[0], 0.5, 2, 0),
        FamilyArg::Box => {
            let (_, nominal) = presets::cloudsim_like();
            GeneratorSpec {
                family: fairalloc::scenarios::Family::Box {
                    nominal,
                    radius: 0.5,
                },
                count: 100,
                seed: 0,
            }
        }
    })
}

pub fn gen(a: GenArgs) -> CliResult<()> {
    let mut spec = match (&a.spec, a.family) {
        (Some(p), _) => load_generator(p)?,
        (None, Some(f)) => builtin_generator(f)?,
        (None, None) => return Err(CliError::Usage("give --spec or --family".into())),
    };
    if let Some(n) = a.count {
        spec = spec.with_count(n);
    }
    if let Some(s) = a.seed {
        spec = spec.with_seed(s);
    }
    let sc = generate(&spec)?;
    write_scenarios_csv(&sc, &Labels::default(), &a.out)?;
    Ok(())
}

pub fn preset(a: PresetArgs) -> CliResult<()> {
    let (mut inst, gen, delta) = match a.name {
        PresetName::Toy => (
            presets::toy_instance(),
            presets::toy_generator(presets::TWO_POINT_CONFIGS[0], 0.5, 2, 1),
            0.2,
        ),
        PresetName::Azure4 => (
            presets::azure_like(4)?.0,
            presets::azure_generator(4, true, 100, 7)?,
            0.1,
        ),
        PresetName::Cloudsim => (
            presets::cloudsim_like().0,
            presets::cloudsim_generator(0.5, 100, 7),
            0.5,
        ),
    };
    inst.ambiguity = Some(AmbiguitySpec::Delta { delta });
    std::fs::create_dir_all(&a.dir).map_err(io_err(&a.dir))?;
    save_instance(&inst, a.dir.join("instance.json"))?;
    let p = a.dir.join("gen.json");
    std::fs::write(&p, json(&gen)).map_err(io_err(&p))?;
    if a.name == PresetName::Azure4 {
        let p = a.dir.join("gen_uniform.json");
        std::fs::write(&p, json(&presets::azure_generator(4, false, 100, 7)?))
            .map_err(io_err(&p))?;
    }
    Ok(())
}
