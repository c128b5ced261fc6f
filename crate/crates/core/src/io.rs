//! JSON and CSV formats shared by the library and the `nmkit` tool.
//!
//! Matrices are row-major arrays of rows; an entry is either `[re, im]` or a
//! bare real number. Every float is written as `{:.16e}` (17 significant
//! digits, lowercase exponent), so identical inputs give identical bytes.

use std::io::{self, Write};

use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::adc::{ExponentialKernel, GTrajectory, Kernel, Rates, TabulatedKernel};
use crate::blp::{DistanceTrajectory, MeasureReport};
use crate::channel::{DivisibilityViolation, KrausSet, MapFamily, Superoperator, ViolationKind};
use crate::error::{Error, Result};
use crate::qmat::{ComplexMatrix, DensityMatrix, C64};
use crate::tcl::{GeneratorTrajectory, LindbladGenerator};
use crate::witness::{TotalModel, Verdict, WitnessRecord, WITNESS_TOL};

/// One matrix entry as read from JSON.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for C64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Real(re) => C64::new(re, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        }
    }
}

pub type MatrixDoc = Vec<Vec<Entry>>;

pub fn matrix_from_doc(doc: &[Vec<Entry>]) -> Result<ComplexMatrix> {
    let rows = doc.len();
    let cols = doc.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if let Some(bad) = doc.iter().find(|r| r.len() != cols) {
        return Err(Error::Parse(format!(
            "ragged matrix: row of length {} in a {rows}x{cols} matrix",
            bad.len()
        )));
    }
    let data = doc.iter().flatten().map(|&e| C64::from(e)).collect();
    ComplexMatrix::from_vec(rows, cols, data)
}

/// Serializes a matrix as rows of `[re, im]` pairs.
pub struct MatrixOut<'a>(pub &'a ComplexMatrix);

impl Serialize for MatrixOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let m = self.0;
        let mut seq = s.serialize_seq(Some(m.rows()))?;
        for i in 0..m.rows() {
            let row: Vec<[f64; 2]> = (0..m.cols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

fn parse<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Exponential { gamma0: f64, lambda: f64 },
    Tabulated { dt: f64, values: Vec<Entry> },
}

impl KernelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn build(&self) -> Result<Kernel> {
        Ok(match self {
            KernelSpec::Exponential { gamma0, lambda } => {
                ExponentialKernel::new(*gamma0, *lambda)?.into()
            }
            KernelSpec::Tabulated { dt, values } => {
                TabulatedKernel::new(*dt, values.iter().map(|&e| e.into()).collect())?.into()
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct MapFamilyDoc {
    pub dim: usize,
    pub times: Vec<f64>,
    pub maps: Vec<MatrixDoc>,
}

impl MapFamilyDoc {
    pub fn build(&self) -> Result<MapFamily> {
        let maps = self
            .maps
            .iter()
            .map(|m| Superoperator::new(self.dim, matrix_from_doc(m)?))
            .collect::<Result<Vec<_>>>()?;
        MapFamily::new(self.times.clone(), maps)
    }
}

pub fn family_from_json(text: &str) -> Result<MapFamily> {
    parse::<MapFamilyDoc>(text)?.build()
}

pub fn family_to_json(family: &MapFamily) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        dim: usize,
        times: &'a [f64],
        maps: Vec<MatrixOut<'a>>,
    }
    to_json(&Out {
        dim: family.dim(),
        times: family.times(),
        maps: family
            .maps()
            .iter()
            .map(|m| MatrixOut(m.matrix()))
            .collect(),
    })
}

/// A dynamics source: either a kernel of the decay model or an explicit map
/// family.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum SourceDoc {
    Kernel(KernelSpec),
    Family(MapFamilyDoc),
}

impl SourceDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        parse(text)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct ChannelDoc {
    pub rate: f64,
    pub op: MatrixDoc,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GeneratorStepDoc {
    #[serde(rename = "H")]
    pub hamiltonian: MatrixDoc,
    #[serde(default)]
    pub channels: Vec<ChannelDoc>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GeneratorTrajectoryDoc {
    pub dim: usize,
    pub dt: f64,
    pub steps: Vec<GeneratorStepDoc>,
}

impl GeneratorTrajectoryDoc {
    pub fn build(&self) -> Result<GeneratorTrajectory> {
        let gens = self
            .steps
            .iter()
            .map(|s| {
                let h = matrix_from_doc(&s.hamiltonian)?;
                if h.rows() != self.dim {
                    return Err(Error::DimMismatch {
                        expected: self.dim,
                        found: h.rows(),
                    });
                }
                let channels = s
                    .channels
                    .iter()
                    .map(|c| Ok((c.rate, matrix_from_doc(&c.op)?)))
                    .collect::<Result<Vec<_>>>()?;
                LindbladGenerator::new(h, channels)
            })
            .collect::<Result<Vec<_>>>()?;
        if gens.len() < 2 {
            return Err(Error::InvalidGrid(
                "need at least two generator steps".into(),
            ));
        }
        GeneratorTrajectory::uniform(self.dt, gens)
    }
}

pub fn generators_from_json(text: &str) -> Result<GeneratorTrajectory> {
    parse::<GeneratorTrajectoryDoc>(text)?.build()
}

fn default_witness_tol() -> f64 {
    WITNESS_TOL
}

#[derive(Debug, Clone, Deserialize)]
pub struct WitnessScenario {
    pub dim_s: usize,
    pub dim_e: usize,
    #[serde(rename = "H_S")]
    pub h_s: MatrixDoc,
    #[serde(rename = "H_E")]
    pub h_e: MatrixDoc,
    #[serde(rename = "H_I")]
    pub h_i: MatrixDoc,
    pub rho1: MatrixDoc,
    pub local_op_kraus: Vec<MatrixDoc>,
    pub t_max: f64,
    pub dt: f64,
    #[serde(default = "default_witness_tol")]
    pub tol: f64,
}

/// Validated contents of a [`WitnessScenario`].
#[derive(Debug, Clone)]
pub struct WitnessSetup {
    pub model: TotalModel,
    pub rho1: DensityMatrix,
    pub local_op: Superoperator,
}

impl WitnessScenario {
    pub fn from_json(text: &str) -> Result<Self> {
        parse(text)
    }

    pub fn build(&self) -> Result<WitnessSetup> {
        let h_s = matrix_from_doc(&self.h_s)?;
        let h_e = matrix_from_doc(&self.h_e)?;
        if h_s.rows() != self.dim_s || h_e.rows() != self.dim_e {
            return Err(Error::DimMismatch {
                expected: self.dim_s,
                found: h_s.rows(),
            });
        }
        let model = TotalModel::from_parts(&h_s, &h_e, &matrix_from_doc(&self.h_i)?)?;
        let rho1 = DensityMatrix::new(matrix_from_doc(&self.rho1)?)?;
        let kraus = self
            .local_op_kraus
            .iter()
            .map(|k| matrix_from_doc(k))
            .collect::<Result<Vec<_>>>()?;
        let local_op = KrausSet::new(kraus)?.to_super();
        Ok(WitnessSetup {
            model,
            rho1,
            local_op,
        })
    }
}

struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            w.write_all(format_float(v).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

/// `{:.16e}` with negative zero folded into zero.
pub fn format_float(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

/// Compact JSON with fixed float formatting and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    value
        .serialize(&mut ser)
        .expect("serializing plain data into memory cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

#[derive(Serialize)]
#[serde(untagged)]
enum PairOut<'a> {
    Bloch([[f64; 3]; 2]),
    Matrices([MatrixOut<'a>; 2]),
}

pub fn measure_report_json(report: &MeasureReport) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        n: f64,
        pair: PairOut<'a>,
        intervals: Vec<[f64; 3]>,
        evaluations: usize,
    }
    let (r1, r2) = &report.optimal_pair;
    let pair = match (r1.bloch(), r2.bloch()) {
        (Ok(b1), Ok(b2)) => PairOut::Bloch([b1, b2]),
        _ => PairOut::Matrices([MatrixOut(r1.matrix()), MatrixOut(r2.matrix())]),
    };
    to_json(&Out {
        n: report.n_value,
        pair,
        intervals: report
            .intervals
            .iter()
            .map(|i| [i.start, i.end, i.gain])
            .collect(),
        evaluations: report.evaluations,
    })
}

fn kind_name(kind: ViolationKind) -> &'static str {
    match kind {
        ViolationKind::NotCompletelyPositive => "not_completely_positive",
        ViolationKind::Singular => "singular",
    }
}

pub fn divisibility_json(violations: &[DivisibilityViolation]) -> String {
    #[derive(Serialize)]
    struct Interval {
        start: f64,
        end: f64,
        kind: &'static str,
        min_choi_eigenvalue: Option<f64>,
    }
    #[derive(Serialize)]
    struct Out {
        divisible: bool,
        violations: Vec<Interval>,
    }
    to_json(&Out {
        divisible: violations.is_empty(),
        violations: violations
            .iter()
            .map(|v| Interval {
                start: v.start,
                end: v.end,
                kind: kind_name(v.kind),
                min_choi_eigenvalue: v.min_choi_eigenvalue,
            })
            .collect(),
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::CorrelationsWitnessed => "correlations_witnessed",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn witness_record_json(record: &WitnessRecord) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        verdict: &'static str,
        max_increase: f64,
        d_local_0: f64,
        d_total_0: f64,
        bound_corr1: f64,
        bound_corr2: f64,
        bound_env: f64,
        times: &'a [f64],
        d_local: &'a [f64],
    }
    to_json(&Out {
        verdict: verdict_name(record.verdict),
        max_increase: record.max_increase(),
        d_local_0: record.d_local_0,
        d_total_0: record.d_total_0,
        bound_corr1: record.bound_corr1,
        bound_corr2: record.bound_corr2,
        bound_env: record.bound_env,
        times: &record.times,
        d_local: &record.d_local,
    })
}

pub fn states_json(times: &[f64], states: &[DensityMatrix]) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        times: &'a [f64],
        states: Vec<MatrixOut<'a>>,
    }
    to_json(&Out {
        times,
        states: states.iter().map(|s| MatrixOut(s.matrix())).collect(),
    })
}

/// `G` samples with optional rates.
pub fn g_trajectory_json(g: &GTrajectory, rates: &Rates) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        times: &'a [f64],
        re_g: Vec<f64>,
        im_g: Vec<f64>,
        abs_g: Vec<f64>,
        gamma: &'a [Option<f64>],
        shift: &'a [Option<f64>],
    }
    to_json(&Out {
        times: g.times(),
        re_g: g.values().iter().map(|z| z.re).collect(),
        im_g: g.values().iter().map(|z| z.im).collect(),
        abs_g: g.moduli(),
        gamma: &rates.gamma,
        shift: &rates.shift,
    })
}

/// Writes a header and rows; `None` cells are left blank.
pub fn write_csv<W: Write>(
    w: W,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<Option<f64>>>,
) -> Result<()> {
    let io_err = |e: csv::Error| Error::Parse(e.to_string());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header).map_err(io_err)?;
    for row in rows {
        out.write_record(row.iter().map(|c| c.map(format_float).unwrap_or_default()))
            .map_err(io_err)?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// Columns `t, re_G, im_G, abs_G, gamma, S`.
pub fn g_trajectory_csv<W: Write>(w: W, g: &GTrajectory, rates: &Rates) -> Result<()> {
    let rows = (0..g.len()).map(|k| {
        let z = g.values()[k];
        vec![
            Some(g.times()[k]),
            Some(z.re),
            Some(z.im),
            Some(z.norm()),
            rates.gamma[k],
            rates.shift[k],
        ]
    });
    write_csv(w, &["t", "re_G", "im_G", "abs_G", "gamma", "S"], rows)
}

/// Columns `t, D, sigma`.
pub fn distance_csv<W: Write>(w: W, traj: &DistanceTrajectory, sigma: &[f64]) -> Result<()> {
    let rows =
        (0..traj.d.len()).map(|k| vec![Some(traj.times[k]), Some(traj.d[k]), Some(sigma[k])]);
    write_csv(w, &["t", "D", "sigma"], rows)
}

/// Columns `t, D_local`.
pub fn witness_csv<W: Write>(w: W, record: &WitnessRecord) -> Result<()> {
    let rows = record
        .times
        .iter()
        .zip(&record.d_local)
        .map(|(&t, &d)| vec![Some(t), Some(d)]);
    write_csv(w, &["t", "D_local"], rows)
}

/// Columns `t, re_00, im_00, re_01, …` in row-major order.
pub fn states_csv<W: Write>(w: W, times: &[f64], states: &[DensityMatrix]) -> Result<()> {
    let n = states.first().map_or(0, DensityMatrix::dim);
    let mut header = vec!["t".to_string()];
    for i in 0..n {
        for j in 0..n {
            header.push(format!("re_{i}{j}"));
            header.push(format!("im_{i}{j}"));
        }
    }
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = times.iter().zip(states).map(|(&t, s)| {
        let mut row = vec![Some(t)];
        for z in s.matrix().as_slice() {
            row.push(Some(z.re));
            row.push(Some(z.im));
        }
        row
    });
    write_csv(w, &header, rows)
}

/// Columns `start, end, kind, min_choi_eigenvalue`.
pub fn divisibility_csv<W: Write>(w: W, violations: &[DivisibilityViolation]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    out.write_record(["start", "end", "kind", "min_choi_eigenvalue"])
        .map_err(err)?;
    for v in violations {
        out.write_record([
            format_float(v.start),
            format_float(v.end),
            kind_name(v.kind).to_string(),
            v.min_choi_eigenvalue.map(format_float).unwrap_or_default(),
        ])
        .map_err(err)?;
    }
    out.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::pauli;

    #[test]
    fn float_format_is_fixed() {
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
        assert_eq!(format_float(-0.0), "0.0000000000000000e0");
        assert_eq!(to_json(&[1.0, f64::NAN]), "[1.0000000000000000e0,null]\n");
    }

    #[test]
    fn matrix_round_trip() {
        let m = pauli::y();
        let text = to_json(&MatrixOut(&m));
        let doc: MatrixDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(matrix_from_doc(&doc).unwrap(), m);
        let mixed: MatrixDoc = serde_json::from_str("[[1, [0, 2]], [[0, -2], 3]]").unwrap();
        let m = matrix_from_doc(&mixed).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.0, 2.0));
        assert_eq!(m[(1, 1)], C64::new(3.0, 0.0));
        let ragged: MatrixDoc = serde_json::from_str("[[1, 2], [3]]").unwrap();
        assert!(matrix_from_doc(&ragged).is_err());
    }

    #[test]
    fn family_round_trip() {
        let times = vec![0.0, 0.5, 1.0];
        let maps = vec![
            Superoperator::identity(2),
            crate::adc::map_at(C64::new(0.5, 0.1)).unwrap(),
            crate::adc::map_at(C64::new(0.2, 0.0)).unwrap(),
        ];
        let fam = MapFamily::new(times, maps).unwrap();
        let back = family_from_json(&family_to_json(&fam)).unwrap();
        assert_eq!(back.times(), fam.times());
        for (a, b) in back.maps().iter().zip(fam.maps()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn kernel_specs() {
        let k =
            KernelSpec::from_json(r#"{"type": "exponential", "gamma0": 5, "lambda": 1}"#).unwrap();
        assert_eq!(
            k,
            KernelSpec::Exponential {
                gamma0: 5.0,
                lambda: 1.0
            }
        );
        let t = KernelSpec::from_json(r#"{"type": "tabulated", "dt": 0.1, "values": [[0, 0], 0]}"#)
            .unwrap();
        assert!(t.build().is_ok());
        assert!(KernelSpec::from_json(r#"{"type": "gaussian"}"#).is_err());
        assert!(matches!(
            SourceDoc::from_json(r#"{"type": "exponential", "gamma0": 1, "lambda": 1}"#).unwrap(),
            SourceDoc::Kernel(_)
        ));
    }

    #[test]
    fn generator_doc() {
        let text = r#"{"dim": 2, "dt": 0.1, "steps": [
            {"H": [[0, 0], [0, 1]], "channels": [{"rate": 0.5, "op": [[0, 1], [0, 0]]}]},
            {"H": [[0, 0], [0, 1]]}
        ]}"#;
        let traj = generators_from_json(text).unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.generators()[0].channels().len(), 1);
        assert!(generators_from_json(r#"{"dim": 3, "dt": 0.1, "steps": []}"#).is_err());
    }

    #[test]
    fn csv_blanks_gaps() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b"], vec![vec![Some(1.0), None]]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "a,b\n1.0000000000000000e0,\n"
        );
    }
}
