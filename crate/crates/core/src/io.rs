//! CSV ingestion and run summaries.
//!
//! Tables have a header row and one numeric record per row. Regression
//! tables name their response column `y` and optional case weights `w`;
//! every other column is a predictor, in file order.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, Vector2};
use serde::{Deserialize, Serialize};

use crate::applications::{Rectangle, RegressionData};
use crate::error::{Error, Result};
use crate::penalty::Solution;
use crate::projections::ConvexSet;

/// A numeric table with its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub values: DMatrix<f64>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::invalid(format!("missing column `{name}`")))
    }
}

pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut csv = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = csv.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::invalid("CSV has no header row"));
    }
    let mut data = Vec::new();
    let mut rows = 0;
    for (r, record) in csv.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::invalid(format!(
                "row {} has {} fields, expected {}",
                r + 1,
                record.len(),
                headers.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::invalid(format!(
                    "row {}, column `{}`: `{field}` is not a number",
                    r + 1,
                    headers[c]
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::invalid(format!(
                    "row {}, column `{}` is not finite",
                    r + 1,
                    headers[c]
                )));
            }
            data.push(value);
        }
        rows += 1;
    }
    Ok(Table {
        values: DMatrix::from_row_slice(rows, headers.len(), &data),
        headers,
    })
}

pub fn read_table_file(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| Error::invalid(format!("cannot open {}: {e}", path.display())))?;
    read_table(file)
}

pub fn write_table<W: Write>(writer: W, headers: &[String], values: &DMatrix<f64>) -> Result<()> {
    if headers.len() != values.ncols() {
        return Err(Error::DimensionMismatch {
            expected: values.ncols(),
            found: headers.len(),
        });
    }
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(headers)?;
    for row in values.row_iter() {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_table_file(path: &Path, headers: &[String], values: &DMatrix<f64>) -> Result<()> {
    write_table(BufWriter::new(File::create(path)?), headers, values)
}

/// Response `y`, optional weights `w`, all other columns as predictors.
pub fn regression_data(table: &Table) -> Result<RegressionData> {
    let y_col = table.require("y")?;
    let w_col = table.column_index("w");
    let predictors: Vec<usize> = (0..table.headers.len())
        .filter(|&c| c != y_col && Some(c) != w_col)
        .collect();
    let v = &table.values;
    let x = v.select_columns(&predictors);
    let y = v.column(y_col).into_owned();
    let w = match w_col {
        Some(c) => v.column(c).into_owned(),
        None => DVector::from_element(v.nrows(), 1.0),
    };
    RegressionData::new(x, y, w).map_err(|e| match e {
        Error::InvalidInput(msg) => Error::invalid(format!("column `w`: {msg}")),
        other => other,
    })
}

/// Table for `data` with predictors `x1..xp` (or `x` when `p = 1`), `y`
/// and, unless all weights are one, `w`.
pub fn regression_table(data: &RegressionData) -> Table {
    let p = data.p();
    let mut headers: Vec<String> = if p == 1 {
        vec!["x".into()]
    } else {
        (1..=p).map(|j| format!("x{j}")).collect()
    };
    headers.push("y".into());
    let weighted = data.w.iter().any(|&w| w != 1.0);
    if weighted {
        headers.push("w".into());
    }
    let values = DMatrix::from_fn(data.n(), headers.len(), |i, j| match j {
        _ if j < p => data.x[(i, j)],
        _ if j == p => data.y[i],
        _ => data.w[i],
    });
    Table { headers, values }
}

/// Square matrix stored row-major with header `c0..c{n-1}`.
pub fn square_matrix(table: &Table) -> Result<DMatrix<f64>> {
    let (rows, cols) = table.values.shape();
    if rows != cols {
        return Err(Error::invalid(format!("matrix has {rows} rows and {cols} columns")));
    }
    Ok(table.values.clone())
}

pub fn matrix_table(m: &DMatrix<f64>) -> Table {
    Table {
        headers: (0..m.ncols()).map(|j| format!("c{j}")).collect(),
        values: m.clone(),
    }
}

/// Columns `cx, cy, hx, hy`.
pub fn rectangles(table: &Table) -> Result<Vec<Rectangle>> {
    let (cx, cy, hx, hy) = (
        table.require("cx")?,
        table.require("cy")?,
        table.require("hx")?,
        table.require("hy")?,
    );
    let v = &table.values;
    (0..v.nrows())
        .map(|i| {
            Rectangle::new(
                Vector2::new(v[(i, cx)], v[(i, cy)]),
                Vector2::new(v[(i, hx)], v[(i, hy)]),
            )
            .map_err(|e| Error::invalid(format!("row {}: {e}", i + 1)))
        })
        .collect()
}

pub fn rectangle_table(rects: &[Rectangle]) -> Table {
    Table {
        headers: ["cx", "cy", "hx", "hy"].map(String::from).to_vec(),
        values: DMatrix::from_fn(rects.len(), 4, |i, j| match j {
            0 => rects[i].center.x,
            1 => rects[i].center.y,
            2 => rects[i].half_sides.x,
            _ => rects[i].half_sides.y,
        }),
    }
}

/// Halfspaces `a' x <= b`, one per row, with the last column named `b`.
pub fn halfspaces(table: &Table) -> Result<Vec<ConvexSet>> {
    let b = table.require("b")?;
    if b + 1 != table.headers.len() || b == 0 {
        return Err(Error::invalid(
            "column `b` must be last, after at least one coefficient",
        ));
    }
    let v = &table.values;
    (0..v.nrows())
        .map(|i| {
            let normal = DVector::from_fn(b, |j, _| v[(i, j)]);
            ConvexSet::halfspace(normal, v[(i, b)]).map_err(|e| Error::invalid(format!("row {}: {e}", i + 1)))
        })
        .collect()
}

/// Summary of one solve, with fixed keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub objective: f64,
    pub violation_max: f64,
    pub violation_signed: f64,
    pub iterations: usize,
    pub seconds: f64,
    pub mu_final: f64,
    pub converged: bool,
}

impl Summary {
    pub fn from_solution(solution: &Solution, objective: f64, seconds: f64) -> Self {
        Self {
            objective,
            violation_max: solution.violation.max_abs,
            violation_signed: solution.violation.signed,
            iterations: solution.iterations,
            seconds,
            mu_final: solution.mu_final,
            converged: solution.converged,
        }
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writeln!(writer)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn regression_round_trip() {
        let data = RegressionData::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.5]),
            dvector![0.5, -1.0],
            dvector![1.0, 2.0],
        )
        .unwrap();
        let table = regression_table(&data);
        let mut buf = Vec::new();
        write_table(&mut buf, &table.headers, &table.values).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap().lines().next(),
            Some("x1,x2,y,w")
        );
        let back = regression_data(&read_table(buf.as_slice()).unwrap()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn response_column_may_come_first() {
        let table = read_table("y,a,b\n1,2,3\n-1,4,5\n".as_bytes()).unwrap();
        let data = regression_data(&table).unwrap();
        assert_eq!(data.x, DMatrix::from_row_slice(2, 2, &[2.0, 3.0, 4.0, 5.0]));
        assert_eq!(data.y, dvector![1.0, -1.0]);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = read_table("x,y\n1,abc\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("column `y`"), "{err}");
        let err = regression_data(&read_table("x,z\n1,2\n".as_bytes()).unwrap()).unwrap_err();
        assert!(err.to_string().contains("`y`"));
        let err = read_table("x,y\n1\n".as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn halfspace_rows() {
        let table = read_table("a1,a2,b\n1,0,2\n0,1,-1\n".as_bytes()).unwrap();
        let sets = halfspaces(&table).unwrap();
        assert_eq!(sets.len(), 2);
        assert!(sets[0].contains(&dvector![2.0, -1.0], 0.0).unwrap());
        assert!(!sets[1].contains(&dvector![0.0, 0.0], 0.0).unwrap());
    }

    #[test]
    fn rectangle_rows() {
        let table = read_table("cx,cy,hx,hy\n1,2,0.5,0.5\n".as_bytes()).unwrap();
        let rects = rectangles(&table).unwrap();
        assert_eq!(rectangle_table(&rects), table);
        assert!(rectangles(&read_table("cx,cy,hx\n1,2,3\n".as_bytes()).unwrap()).is_err());
    }
}
