//! Input files and generator specs.

use distmaj::applications::{Rectangle, RegressionData};
use distmaj::io::{self, Table};
use distmaj::projections::ConvexSet;
use distmaj::synthetic;
use nalgebra::{DMatrix, DVector};

use crate::{Kind, Source};

/// Fixed design of the generated robust regression data.
const ROBUST_BETA: [f64; 3] = [1.0, -2.0, 0.5];
const ROBUST_OUTLIER: f64 = 25.0;

/// Parsed `--generate` pairs.
#[derive(Debug, Default)]
pub struct GenSpec {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub seed: u64,
}

impl GenSpec {
    pub fn parse(pairs: &[String]) -> Result<Self, String> {
        let mut spec = GenSpec::default();
        let mut seed = None;
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| format!("generator argument `{pair}` is not KEY=VALUE"))?;
            let number = || {
                value
                    .parse::<u64>()
                    .map_err(|_| format!("generator key `{key}`: `{value}` is not a nonnegative integer"))
            };
            match key {
                "n" | "size" => spec.n = Some(number()? as usize),
                "p" | "dim" => spec.p = Some(number()? as usize),
                "seed" => seed = Some(number()?),
                _ => return Err(format!("unknown generator key `{key}` (expected n, p, seed)")),
            }
        }
        spec.seed = seed.ok_or("generator needs `seed=..`")?;
        Ok(spec)
    }
}

pub enum Data {
    File(Table),
    Generated(GenSpec),
}

impl Source {
    /// Exactly one of `--input` and `--generate`.
    pub fn load(&self) -> Result<Data, String> {
        match (&self.input, &self.generate) {
            (Some(path), None) => Ok(Data::File(io::read_table_file(path).map_err(|e| e.to_string())?)),
            (None, Some(pairs)) => Ok(Data::Generated(GenSpec::parse(pairs)?)),
            (None, None) => Err("one of --input or --generate is required".into()),
            (Some(_), Some(_)) => Err("--input and --generate are mutually exclusive".into()),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.input.is_none() && self.generate.is_none()
    }
}

fn err(e: distmaj::Error) -> String {
    e.to_string()
}

/// The dataset of `kind` as a table, as written by `generate`.
pub fn generate_table(kind: Kind, size: Option<usize>, dim: Option<usize>, seed: u64) -> Result<Table, String> {
    let spec = GenSpec { n: size, p: dim, seed };
    Ok(match kind {
        Kind::Feasibility => {
            let (a, b) = halfspace_data(&spec)?;
            let p = a.ncols();
            let mut headers: Vec<String> = (1..=p).map(|j| format!("a{j}")).collect();
            headers.push("b".into());
            let values = DMatrix::from_fn(a.nrows(), p + 1, |i, j| if j < p { a[(i, j)] } else { b[i] });
            Table { headers, values }
        }
        Kind::Dnn => io::matrix_table(&dnn_matrix(&spec)),
        Kind::Isotone => io::regression_table(&isotone_data(&spec)?),
        Kind::Convexreg => io::regression_table(&convexreg_data(&spec)?),
        Kind::Svm => {
            // the intercept column is implied and added on reading
            let data = svm_data(&spec)?;
            let features = data.x.columns(1, data.p() - 1).into_owned();
            io::regression_table(&RegressionData::new(features, data.y, data.w).map_err(err)?)
        }
        Kind::Firestation => io::rectangle_table(&synthetic::fire_station_rectangles()),
        Kind::Robust => {
            let (x, y) = robust_data(&spec);
            io::regression_table(&RegressionData::unweighted(x, y).map_err(err)?)
        }
    })
}

pub fn halfspace_data(spec: &GenSpec) -> Result<(DMatrix<f64>, DVector<f64>), String> {
    synthetic::halfspace_system(spec.n.unwrap_or(10), spec.p.unwrap_or(5), spec.seed).map_err(err)
}

pub fn dnn_matrix(spec: &GenSpec) -> DMatrix<f64> {
    synthetic::symmetric_normal(spec.n.unwrap_or(50), spec.seed)
}

pub fn isotone_data(spec: &GenSpec) -> Result<RegressionData, String> {
    synthetic::isotone_data(spec.n.unwrap_or(100), spec.seed).map_err(err)
}

pub fn convexreg_data(spec: &GenSpec) -> Result<RegressionData, String> {
    synthetic::convex_regression_data(spec.n.unwrap_or(20), spec.p.unwrap_or(1), spec.seed).map_err(err)
}

/// `p` counts the intercept column.
pub fn svm_data(spec: &GenSpec) -> Result<RegressionData, String> {
    synthetic::svm_data(spec.n.unwrap_or(200), spec.p.unwrap_or(5), spec.seed).map_err(err)
}

pub fn robust_data(spec: &GenSpec) -> (DMatrix<f64>, DVector<f64>) {
    let beta = DVector::from_row_slice(&ROBUST_BETA);
    synthetic::contaminated_regression(spec.n.unwrap_or(40), &beta, ROBUST_OUTLIER, spec.seed)
}

pub fn halfspaces(data: Data) -> Result<Vec<ConvexSet>, String> {
    match data {
        Data::File(table) => io::halfspaces(&table).map_err(err),
        Data::Generated(spec) => {
            let (a, b) = halfspace_data(&spec)?;
            (0..a.nrows())
                .map(|i| ConvexSet::halfspace(a.row(i).transpose(), b[i]).map_err(err))
                .collect()
        }
    }
}

pub fn symmetric_matrix(data: Data) -> Result<DMatrix<f64>, String> {
    match data {
        Data::File(table) => io::square_matrix(&table).map_err(err),
        Data::Generated(spec) => Ok(dnn_matrix(&spec)),
    }
}

pub fn regression(
    data: Data,
    generated: impl FnOnce(&GenSpec) -> Result<RegressionData, String>,
) -> Result<RegressionData, String> {
    match data {
        Data::File(table) => io::regression_data(&table).map_err(err),
        Data::Generated(spec) => generated(&spec),
    }
}

/// SVM cases with the intercept column first.
pub fn svm_cases(data: Data) -> Result<RegressionData, String> {
    match data {
        Data::File(table) => {
            let data = io::regression_data(&table).map_err(err)?;
            let x = data.x.clone().insert_column(0, 1.0);
            RegressionData::new(x, data.y, data.w).map_err(err)
        }
        Data::Generated(spec) => svm_data(&spec),
    }
}

pub fn robust_cases(data: Data) -> Result<(DMatrix<f64>, DVector<f64>), String> {
    match data {
        Data::File(table) => {
            let data = io::regression_data(&table).map_err(err)?;
            if data.w.iter().any(|&w| w != 1.0) {
                return Err("column `w`: robust regression does not take case weights".into());
            }
            Ok((data.x, data.y))
        }
        Data::Generated(spec) => Ok(robust_data(&spec)),
    }
}

pub fn rectangles(source: &Source) -> Result<Vec<Rectangle>, String> {
    if source.is_empty() {
        return Ok(synthetic::fire_station_rectangles());
    }
    match source.load()? {
        Data::File(table) => io::rectangles(&table).map_err(err),
        Data::Generated(_) => Ok(synthetic::fire_station_rectangles()),
    }
}
