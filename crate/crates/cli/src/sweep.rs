use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use fairalloc::analysis::confidence_bounds;
use fairalloc::presets::{toy_generator, TWO_POINT_CONFIGS};
use fairalloc::scenarios::Family;

use crate::args::{SweepArgs, SweepParam};
use crate::commands::{bounds_model, csv_header, csv_row, default_mode, emit, solve_row};
use crate::problem::{with_radius, Problem, SetSource};
use crate::{CliError, CliResult};

/// Parses "a,b,c" or the inclusive range "start:stop:step".
pub fn parse_values(s: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::Usage(format!("cannot parse values `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let vals = match parts.as_slice() {
        [one] => one.split(',').map(num).collect::<CliResult<Vec<_>>>()?,
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(bad());
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| a + k as f64 * step).collect()
        }
        _ => return Err(bad()),
    };
    if vals.is_empty() || vals.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(vals)
}

/// The base problem with one parameter replaced.
fn variant(base: &Problem, param: SweepParam, v: f64) -> CliResult<Problem> {
    let mut pb = base.clone();
    match param {
        SweepParam::Theta => pb.params = pb.params.with_theta(v),
        SweepParam::Beta => pb.params = pb.params.with_beta(v),
        SweepParam::Delta => pb.set_source = SetSource::Delta(v),
        SweepParam::Rho => {
            let spec = with_radius(pb.generator("rho")?, v)?;
            pb.regenerate(spec)?;
        }
        SweepParam::Omega => {
            if v < 1.0 || v.fract() != 0.0 {
                return Err(CliError::Usage(format!(
                    "omega must be a positive integer, got {v}"
                )));
            }
            let spec = pb.generator("omega")?.with_count(v as usize);
            pb.regenerate(spec)?;
        }
        SweepParam::VarianceConfig => {
            let k = v as usize;
            if v.fract() != 0.0 || k >= TWO_POINT_CONFIGS.len() {
                return Err(CliError::Usage(format!(
                    "variance config must be 0..{}",
                    TWO_POINT_CONFIGS.len()
                )));
            }
            let g = pb.generator("variance_config")?;
            let Family::TwoPoint { prob, .. } = g.family else {
                return Err(CliError::Usage(
                    "variance_config needs a two-point generator".into(),
                ));
            };
            let spec = toy_generator(TWO_POINT_CONFIGS[k], prob, g.count, g.seed);
            pb.regenerate(spec)?;
        }
    }
    pb.params.validate()?;
    Ok(pb)
}

fn label(param: SweepParam) -> &'static str {
    match param {
        SweepParam::Theta => "theta",
        SweepParam::Beta => "beta",
        SweepParam::Delta => "delta",
        SweepParam::Rho => "rho",
        SweepParam::Omega => "omega",
        SweepParam::VarianceConfig => "variance_config",
    }
}

fn row(base: &Problem, a: &SweepArgs, v: f64) -> String {
    let lead = v.to_string();
    let pb = match variant(base, a.param, v) {
        Ok(pb) => pb,
        Err(e) => {
            return csv_row(
                base,
                &lead,
                &Err(e),
                a.bounds.then_some(&Err(CliError::Usage(String::new()))),
            )
        }
    };
    let outcome = solve_row(&pb, a.model);
    let gap = a.bounds.then(|| {
        let model = bounds_model(&pb, a.model)?;
        let gen = pb.generator("--bounds")?.with_seed(pb.seed);
        Ok(confidence_bounds(
            &model,
            &pb.instance,
            &gen,
            &pb.params,
            a.replicates,
            default_mode(a.model, None),
        )?)
    });
    csv_row(&pb, &lead, &outcome, gap.as_ref())
}

pub fn run(a: SweepArgs) -> CliResult<()> {
    let values = parse_values(&a.values)?;
    if a.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let base = Problem::load(&a.problem)?;
    if a.bounds {
        bounds_model(&base, a.model)?;
        base.generator("--bounds")?;
    }
    let rows: Vec<Mutex<Option<String>>> = values.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..a.jobs.min(values.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                if k >= values.len() {
                    break;
                }
                let line = row(&base, &a, values[k]);
                *rows[k].lock().expect("row lock") = Some(line);
            });
        }
    });
    let mut lines = vec![csv_header(&base, label(a.param), a.bounds)];
    lines.extend(rows.into_iter().map(|r| {
        r.into_inner()
            .expect("row lock")
            .expect("every row is filled")
    }));
    emit(a.out.as_deref(), &(lines.join("\n") + "\n"))
}

#[cfg(test)]
mod tests {
    use super::parse_values;

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("1,2.5, 3").unwrap(), vec![1.0, 2.5, 3.0]);
        let r = parse_values("0.90:1.00:0.02").unwrap();
        assert_eq!(r.len(), 6);
        assert!((r[5] - 1.0).abs() < 1e-12);
        assert!(parse_values("1:0:0.1").is_err());
        assert!(parse_values("a,b").is_err());
        assert!(parse_values("1:2").is_err());
    }
}
