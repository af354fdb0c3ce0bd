use serde::Serialize;

use super::svg::ScatterPlot;
use crate::data::{format_float, Dataset};
use crate::detect::{reconstruct_dataset, Reconstructor};
use crate::error::{Error, Result};

/// Binned reconstruction of one input column over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveBin {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub mean_input: f64,
    pub mean_output: f64,
    /// Mean of `|x̂ − x|` over the bin.
    pub mean_abs_error: f64,
}

/// Per-column curves of `x̂_d` against `x_d` on normalized inputs, in
/// `bins` equal-width bins. Values outside `[0, 1]` fall into the edge bins;
/// empty bins are omitted.
pub fn reconstruction_curves<R: Reconstructor + ?Sized>(
    model: &R,
    ds: &Dataset,
    bins: usize,
) -> Result<Vec<CurveBin>> {
    if bins == 0 {
        return Err(Error::Config("bins must be at least 1".into()));
    }
    let (x, y) = reconstruct_dataset(model, ds)?;
    let m = x.cols();
    let mut out = Vec::new();
    for d in 0..m {
        let mut acc = vec![(0usize, 0.0, 0.0, 0.0); bins];
        for (xr, yr) in x.row_iter().zip(y.row_iter()) {
            let b = ((xr[d] * bins as f64).floor().max(0.0) as usize).min(bins - 1);
            let a = &mut acc[b];
            a.0 += 1;
            a.1 += xr[d];
            a.2 += yr[d];
            a.3 += (yr[d] - xr[d]).abs();
        }
        for (b, (count, sx, sy, se)) in acc.into_iter().enumerate() {
            if count == 0 {
                continue;
            }
            let c = count as f64;
            out.push(CurveBin {
                dim: d,
                lo: b as f64 / bins as f64,
                hi: (b + 1) as f64 / bins as f64,
                count,
                mean_input: sx / c,
                mean_output: sy / c,
                mean_abs_error: se / c,
            });
        }
    }
    Ok(out)
}

pub fn curves_csv(curves: &[CurveBin]) -> String {
    let mut out = String::from("dim,bin_lo,bin_hi,count,mean_input,mean_output,mean_abs_error\n");
    for c in curves {
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            c.dim,
            format_float(c.lo),
            format_float(c.hi),
            c.count,
            format_float(c.mean_input),
            format_float(c.mean_output),
            format_float(c.mean_abs_error)
        );
    }
    out
}

/// Scatter of `x̂_d` against `x_d` for every row.
pub fn reconstruction_scatter<R: Reconstructor + ?Sized>(model: &R, ds: &Dataset, dim: usize) -> Result<ScatterPlot> {
    let (x, y) = reconstruct_dataset(model, ds)?;
    if dim >= x.cols() {
        return Err(Error::Config(format!("column {dim} out of range for {} columns", x.cols())));
    }
    let name = &ds.column_names[dim];
    Ok(ScatterPlot {
        id: format!("reconstruction_{name}"),
        title: format!("reconstruction of {name}"),
        x_label: format!("{name} (input)"),
        y_label: format!("{name} (output)"),
        points: x.row_iter().zip(y.row_iter()).map(|(a, b)| [a[dim], b[dim]]).collect(),
        flags: Vec::new(),
    })
}
