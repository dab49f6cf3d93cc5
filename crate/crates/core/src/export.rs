//! Dense matrix CSV files and the JSON manifest of an exported lifting pair.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::FactorGraph;
use crate::operators::{build_q, LiftingPair};
use crate::scalar::Scalar;

/// Row-major CSV without a header, entries in shortest round-trip scientific
/// notation.
pub fn write_matrix_csv<W: Write, T: Scalar>(out: W, m: &DMatrix<T>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for row in m.row_iter() {
        w.write_record(row.iter().map(|v| format!("{:e}", v.to_f64_lossy())))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut data = Vec::new();
    let mut cols = None;
    for rec in rd.records() {
        let rec = rec?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::Parse("ragged matrix rows".into()));
        }
        for field in rec.iter() {
            data.push(field.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad entry {field:?}")))?);
        }
    }
    let cols = cols.unwrap_or(0);
    let rows = data.len().checked_div(cols).unwrap_or(0);
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixFile {
    pub file: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairManifest {
    pub graph: String,
    pub n: usize,
    pub num_ehat: usize,
    pub gamma: f64,
    pub rho: Vec<f64>,
    pub alpha: f64,
    pub d_g: Vec<f64>,
    pub d_a: Vec<f64>,
    pub v_g: Vec<f64>,
    pub v_a: Vec<f64>,
    pub matrices: BTreeMap<String, MatrixFile>,
}

/// Writes `S`, `Q`, `T_G`, `T_A`, `M_G`, `M_A` as CSV files into `dir` and
/// a `pair.json` manifest referencing them. Returns the manifest.
pub fn export_lifting_pair<T: Scalar>(
    dir: &Path,
    graph: &str,
    fg: &FactorGraph<T>,
    pair: &LiftingPair<T>,
) -> Result<PairManifest> {
    std::fs::create_dir_all(dir)?;
    let q = build_q(fg, fg.weights())?.into_matrix();
    let mats: [(&str, &DMatrix<T>); 6] = [
        ("S", fg.selection()),
        ("Q", &q),
        ("T_G", &pair.t_g),
        ("T_A", &pair.t_a),
        ("M_G", &pair.m_g),
        ("M_A", &pair.m_a),
    ];
    let mut matrices = BTreeMap::new();
    for (name, m) in mats {
        let file = format!("{}.csv", name.to_lowercase());
        write_matrix_csv(BufWriter::new(File::create(dir.join(&file))?), m)?;
        matrices.insert(name.to_string(), MatrixFile { file, rows: m.nrows(), cols: m.ncols() });
    }
    let f64s = |v: &[T]| v.iter().map(Scalar::to_f64_lossy).collect::<Vec<_>>();
    let manifest = PairManifest {
        graph: graph.to_string(),
        n: fg.n(),
        num_ehat: fg.num_ehat(),
        gamma: pair.gamma.to_f64_lossy(),
        rho: f64s(&pair.rho),
        alpha: pair.alpha.to_f64_lossy(),
        d_g: f64s(&pair.d_g),
        d_a: f64s(&pair.d_a),
        v_g: f64s(&pair.v_g),
        v_a: f64s(&pair.v_a),
        matrices,
    };
    let mut out = BufWriter::new(File::create(dir.join("pair.json"))?);
    serde_json::to_writer_pretty(&mut out, &manifest)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(manifest)
}
