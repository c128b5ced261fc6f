use std::fs;
use std::io::Write;

use serde::Deserialize;

use nmkit::adc::{self, g_analytic, g_numeric, rates, GTrajectory, Kernel};
use nmkit::blp::{self, maximize, maximize_over_candidates, PairSearchConfig};
use nmkit::channel::{audit_divisibility, MapFamily, AUDIT_CP_TOL};
use nmkit::io::{self, GeneratorTrajectoryDoc, KernelSpec, MatrixDoc, SourceDoc, WitnessScenario};
use nmkit::qmat::DensityMatrix;
use nmkit::tcl::{evolve_state, propagator_family};
use nmkit::witness::run_witness;

use crate::error::CliError;
use crate::{Common, Format, GMode};

const DEFAULT_T_MAX: f64 = 10.0;
const DEFAULT_DT: f64 = 1e-3;

type Result<T> = std::result::Result<T, CliError>;

/// Grid settings that may appear next to the command-specific fields.
#[derive(Debug, Default, Deserialize)]
struct GridDoc {
    t_max: Option<f64>,
    dt: Option<f64>,
    tol: Option<f64>,
}

struct Input {
    text: String,
    grid: GridDoc,
}

fn read_config(common: &Common) -> Result<Input> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Validation(format!("{}: {e}", common.config.display())))?;
    let grid: GridDoc = serde_json::from_str(&text)?;
    Ok(Input { text, grid })
}

impl Input {
    fn t_max(&self, common: &Common) -> f64 {
        common.t_max.or(self.grid.t_max).unwrap_or(DEFAULT_T_MAX)
    }

    fn dt(&self, common: &Common) -> f64 {
        common.dt.or(self.grid.dt).unwrap_or(DEFAULT_DT)
    }

    fn tol(&self, common: &Common, default: f64) -> Result<f64> {
        let tol = common.tol.or(self.grid.tol).unwrap_or(default);
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(CliError::Validation(format!(
                "tolerance must be >= 0, got {tol}"
            )));
        }
        Ok(tol)
    }

    fn parse<'a, T: Deserialize<'a>>(&'a self) -> Result<T> {
        Ok(serde_json::from_str(&self.text)?)
    }
}

fn emit(
    common: &Common,
    default: Format,
    json: impl FnOnce() -> String,
    csv: impl FnOnce(&mut Vec<u8>) -> nmkit::Result<()>,
) -> Result<()> {
    let bytes = match common.format.unwrap_or(default) {
        Format::Json => json().into_bytes(),
        Format::Csv => {
            let mut buf = Vec::new();
            csv(&mut buf)?;
            buf
        }
    };
    match &common.out {
        Some(path) => fs::write(path, bytes)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?,
        None => match std::io::stdout().write_all(&bytes) {
            // a closed pipe (`nmkit ... | head`) is not an error
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            other => other?,
        },
    }
    Ok(())
}

fn json_only(common: &Common, what: &str) -> Result<()> {
    if common.format == Some(Format::Csv) {
        return Err(CliError::Validation(format!(
            "{what} is only available as JSON"
        )));
    }
    Ok(())
}

fn family_from_source(source: &SourceDoc, input: &Input, common: &Common) -> Result<MapFamily> {
    Ok(match source {
        SourceDoc::Kernel(spec) => {
            adc::family(&spec.build()?, input.t_max(common), input.dt(common))?
        }
        SourceDoc::Family(doc) => doc.build()?,
    })
}

fn analytic_trajectory(kernel: &Kernel, t_max: f64, dt: f64) -> Result<GTrajectory> {
    let Kernel::Exponential(k) = kernel else {
        return Err(CliError::Validation(
            "the closed form exists only for the exponential kernel".into(),
        ));
    };
    let numeric_grid = nmkit::grid::time_grid(t_max, dt)?;
    let g = numeric_grid
        .iter()
        .map(|&t| g_analytic(k, t))
        .collect::<nmkit::Result<Vec<_>>>()?;
    Ok(GTrajectory::new(numeric_grid, g)?)
}

pub fn gfun(common: &Common, mode: GMode) -> Result<()> {
    let input = read_config(common)?;
    let kernel = KernelSpec::from_json(&input.text)?.build()?;
    let (t_max, dt) = (input.t_max(common), input.dt(common));
    let g = match mode {
        GMode::Analytic => analytic_trajectory(&kernel, t_max, dt)?,
        GMode::Numeric | GMode::Both => g_numeric(&kernel, t_max, dt)?,
    };
    let r = rates(&g)?;
    if mode != GMode::Both {
        return emit(
            common,
            Format::Csv,
            || io::g_trajectory_json(&g, &r),
            |buf| io::g_trajectory_csv(buf, &g, &r),
        );
    }

    let exact = analytic_trajectory(&kernel, t_max, dt)?;
    let deviation: Vec<f64> = g
        .values()
        .iter()
        .zip(exact.values())
        .map(|(a, b)| (a - b).norm())
        .collect();
    let max_deviation = deviation.iter().fold(0.0f64, |m, d| m.max(*d));
    eprintln!(
        "max |G_numeric - G_analytic| = {}",
        io::format_float(max_deviation)
    );
    emit(
        common,
        Format::Csv,
        || {
            #[derive(serde::Serialize)]
            struct Out<'a> {
                max_deviation: f64,
                times: &'a [f64],
                re_g: Vec<f64>,
                im_g: Vec<f64>,
                abs_g: Vec<f64>,
                gamma: &'a [Option<f64>],
                shift: &'a [Option<f64>],
                re_g_analytic: Vec<f64>,
                im_g_analytic: Vec<f64>,
                deviation: &'a [f64],
            }
            io::to_json(&Out {
                max_deviation,
                times: g.times(),
                re_g: g.values().iter().map(|z| z.re).collect(),
                im_g: g.values().iter().map(|z| z.im).collect(),
                abs_g: g.moduli(),
                gamma: &r.gamma,
                shift: &r.shift,
                re_g_analytic: exact.values().iter().map(|z| z.re).collect(),
                im_g_analytic: exact.values().iter().map(|z| z.im).collect(),
                deviation: &deviation,
            })
        },
        |buf| {
            let header = [
                "t",
                "re_G",
                "im_G",
                "abs_G",
                "gamma",
                "S",
                "re_G_analytic",
                "im_G_analytic",
                "deviation",
            ];
            let rows = (0..g.len()).map(|k| {
                let (z, e) = (g.values()[k], exact.values()[k]);
                vec![
                    Some(g.times()[k]),
                    Some(z.re),
                    Some(z.im),
                    Some(z.norm()),
                    r.gamma[k],
                    r.shift[k],
                    Some(e.re),
                    Some(e.im),
                    Some(deviation[k]),
                ]
            });
            io::write_csv(buf, &header, rows)
        },
    )
}

#[derive(Debug, Default, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum EvolveOutput {
    #[default]
    States,
    Family,
}

#[derive(Debug, Deserialize)]
struct EvolveDoc {
    generators: Option<GeneratorTrajectoryDoc>,
    kernel: Option<KernelSpec>,
    rho0: Option<MatrixDoc>,
    #[serde(default)]
    output: EvolveOutput,
}

pub fn evolve(common: &Common) -> Result<()> {
    let input = read_config(common)?;
    let doc: EvolveDoc = input.parse()?;
    let traj = match (&doc.generators, &doc.kernel) {
        (Some(g), None) => g.build()?,
        (None, Some(k)) => {
            let g = g_numeric(&k.build()?, input.t_max(common), input.dt(common))?;
            adc::generator_trajectory(&g)?
        }
        _ => {
            return Err(CliError::Validation(
                "evolve needs exactly one of \"generators\" or \"kernel\"".into(),
            ))
        }
    };
    if doc.output == EvolveOutput::Family {
        json_only(common, "a map family")?;
        let fam = propagator_family(&traj)?;
        return emit(
            common,
            Format::Json,
            || io::family_to_json(&fam),
            |_| Ok(()),
        );
    }
    let rho0 = doc
        .rho0
        .as_ref()
        .ok_or_else(|| CliError::Validation("missing \"rho0\"".into()))?;
    let rho0 = DensityMatrix::new(io::matrix_from_doc(rho0)?)?;
    let states = evolve_state(&traj, &rho0)?;
    emit(
        common,
        Format::Csv,
        || io::states_json(traj.times(), &states),
        |buf| io::states_csv(buf, traj.times(), &states),
    )
}

#[derive(Debug, Default, Deserialize)]
struct SearchDoc {
    radii: Option<usize>,
    include_antipodal: Option<bool>,
    seeds: Option<usize>,
    initial_step: Option<f64>,
    min_step: Option<f64>,
    max_iterations: Option<usize>,
}

impl SearchDoc {
    fn config(&self) -> PairSearchConfig {
        let d = PairSearchConfig::default();
        PairSearchConfig {
            radii: self.radii.unwrap_or(d.radii),
            include_antipodal: self.include_antipodal.unwrap_or(d.include_antipodal),
            seeds: self.seeds.unwrap_or(d.seeds),
            initial_step: self.initial_step.unwrap_or(d.initial_step),
            min_step: self.min_step.unwrap_or(d.min_step),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
struct MeasureExtras {
    #[serde(default)]
    search: SearchDoc,
    candidates: Option<Vec<[MatrixDoc; 2]>>,
}

pub fn measure(common: &Common) -> Result<()> {
    let input = read_config(common)?;
    let source = SourceDoc::from_json(&input.text)?;
    let extras: MeasureExtras = input.parse()?;
    let family = family_from_source(&source, &input, common)?;
    let report = match &extras.candidates {
        Some(list) => {
            let pairs = list
                .iter()
                .map(|[a, b]| {
                    Ok((
                        DensityMatrix::new(io::matrix_from_doc(a)?)?,
                        DensityMatrix::new(io::matrix_from_doc(b)?)?,
                    ))
                })
                .collect::<nmkit::Result<Vec<_>>>()?;
            maximize_over_candidates(&family, &pairs)?
        }
        None => maximize(&family, &extras.search.config())?,
    };
    emit(
        common,
        Format::Json,
        || io::measure_report_json(&report),
        |buf| {
            let (r1, r2) = &report.optimal_pair;
            let traj = blp::distance_trajectory(&family, r1, r2)?;
            let sigma = blp::sigma(&traj)?;
            io::distance_csv(buf, &traj, &sigma)
        },
    )
}

pub fn divisibility(common: &Common) -> Result<()> {
    let input = read_config(common)?;
    let source = SourceDoc::from_json(&input.text)?;
    let family = family_from_source(&source, &input, common)?;
    let tol = input.tol(common, AUDIT_CP_TOL)?;
    let violations = audit_divisibility(&family, tol)?;
    emit(
        common,
        Format::Json,
        || io::divisibility_json(&violations),
        |buf| io::divisibility_csv(buf, &violations),
    )
}

pub fn witness(common: &Common) -> Result<()> {
    let input = read_config(common)?;
    let scenario = WitnessScenario::from_json(&input.text)?;
    let setup = scenario.build()?;
    let t_max = common.t_max.unwrap_or(scenario.t_max);
    let dt = common.dt.unwrap_or(scenario.dt);
    let tol = input.tol(common, scenario.tol)?;
    let record = run_witness(&setup.model, &setup.rho1, &setup.local_op, t_max, dt, tol)?;
    emit(
        common,
        Format::Json,
        || io::witness_record_json(&record),
        |buf| io::witness_csv(buf, &record),
    )
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
struct SweepDoc {
    #[serde(default = "default_lambda")]
    lambda: f64,
    gamma0: Vec<f64>,
    #[serde(default)]
    search: SearchDoc,
}

pub fn sweep(common: &Common) -> Result<()> {
    let input = read_config(common)?;
    let doc: SweepDoc = input.parse()?;
    if doc.gamma0.is_empty() {
        return Err(CliError::Validation(
            "\"gamma0\" must list at least one value".into(),
        ));
    }
    let cfg = doc.search.config();
    let (t_max, dt) = (input.t_max(common), input.dt(common));
    let mut rows = Vec::with_capacity(doc.gamma0.len());
    for &g0 in &doc.gamma0 {
        let kernel: Kernel = adc::ExponentialKernel::new(g0, doc.lambda)?.into();
        let report = maximize(&adc::family(&kernel, t_max, dt)?, &cfg)?;
        let b1 = report.optimal_pair.0.bloch()?;
        let b2 = report.optimal_pair.1.bloch()?;
        rows.push((g0, report.n_value, b1, b2));
    }
    emit(
        common,
        Format::Csv,
        || {
            #[derive(serde::Serialize)]
            struct Row {
                gamma0: f64,
                n: f64,
                pair: [[f64; 3]; 2],
            }
            #[derive(serde::Serialize)]
            struct Out {
                lambda: f64,
                rows: Vec<Row>,
            }
            io::to_json(&Out {
                lambda: doc.lambda,
                rows: rows
                    .iter()
                    .map(|&(gamma0, n, b1, b2)| Row {
                        gamma0,
                        n,
                        pair: [b1, b2],
                    })
                    .collect(),
            })
        },
        |buf| {
            let header = ["gamma0", "n", "x1", "y1", "z1", "x2", "y2", "z2"];
            let data = rows.iter().map(|(g0, n, b1, b2)| {
                let mut row = vec![Some(*g0), Some(*n)];
                row.extend(b1.iter().chain(b2).map(|&x| Some(x)));
                row
            });
            io::write_csv(buf, &header, data)
        },
    )
}
