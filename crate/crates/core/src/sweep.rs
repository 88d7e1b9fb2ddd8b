//! Parameter grids and parallel sweeps. Rows always come back in grid
//! order, whatever order the workers finish in.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::laminate::{actuation_deflection, ActuationModel, LaminateStack};
use crate::power::{synthetic_power, LoadModel, PowerResult};
use crate::pump::{flow_rate, PumpParams};

const MAX_GRID_POINTS: usize = 1_000_000;

/// Ordered list of sample values, written either as an explicit list
/// `a,b,c` or as an inclusive range `start:stop:step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct Grid(Vec<f64>);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GridRepr {
    Text(String),
    List(Vec<f64>),
}

impl TryFrom<GridRepr> for Grid {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        match r {
            GridRepr::Text(s) => s.parse(),
            GridRepr::List(v) => Grid::from_values(v),
        }
    }
}

impl From<Grid> for GridRepr {
    fn from(g: Grid) -> Self {
        GridRepr::List(g.0)
    }
}

impl Grid {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(validation("grid is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(validation("grid values must be finite"));
        }
        Ok(Grid(values))
    }

    /// Inclusive range; the stop value is kept when it lies within a
    /// millionth of a step of the last point.
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(validation("grid range must be finite"));
        }
        if !(step > 0.0) {
            return Err(validation(format!("grid step must be positive, got {step}")));
        }
        if stop < start {
            return Err(validation(format!("grid stop {stop} is below start {start}")));
        }
        let count = ((stop - start) / step + 1e-6).floor() + 1.0;
        if count > MAX_GRID_POINTS as f64 {
            return Err(validation(format!("grid has more than {MAX_GRID_POINTS} points")));
        }
        let values = (0..count as usize).map(|i| start + step * i as f64).collect();
        Ok(Grid(values))
    }

    pub fn single(value: f64) -> Self {
        Grid(vec![value])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .map_err(|_| validation(format!("invalid grid value '{}'", t.trim())))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return Err(validation(format!("grid range '{s}' must be start:stop:step")));
            }
            Grid::range(num(parts[0])?, num(parts[1])?, num(parts[2])?)
        } else {
            Grid::from_values(s.split(',').map(num).collect::<Result<Vec<_>>>()?)
        }
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRow {
    pub vpp: f64,
    pub freq: f64,
    pub dp: f64,
    /// m³/s.
    pub flow: f64,
}

/// Flow over the full `vpp x freq x dp` grid, vpp outermost.
pub fn flow_sweep(params: &PumpParams, vpp: &Grid, freq: &Grid, dp: &Grid) -> Result<Vec<FlowRow>> {
    let (nv, nf, nd) = (vpp.len(), freq.len(), dp.len());
    (0..nv * nf * nd)
        .into_par_iter()
        .map(|idx| {
            let (v, f, p) = (vpp.0[idx / (nf * nd)], freq.0[(idx / nd) % nf], dp.0[idx % nd]);
            Ok(FlowRow {
                vpp: v,
                freq: f,
                dp: p,
                flow: flow_rate(params, v, f, p)?,
            })
        })
        .collect()
}

/// Peak-to-peak centre deflection at each drive amplitude.
pub fn deflection_sweep(
    stack: &LaminateStack,
    model: &ActuationModel,
    vpp: &Grid,
) -> Result<Vec<(f64, f64)>> {
    vpp.0
        .par_iter()
        .map(|&v| Ok((v, actuation_deflection(stack, v, model)?)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRow {
    pub vpp: f64,
    pub freq: f64,
    pub power: PowerResult,
}

/// Synthetic three-channel power over the `vpp x freq` grid.
pub fn power_sweep(
    load: &LoadModel,
    vpp: &Grid,
    freq: &Grid,
    samples_per_period: usize,
) -> Result<Vec<PowerRow>> {
    let nf = freq.len();
    (0..vpp.len() * nf)
        .into_par_iter()
        .map(|idx| {
            let (v, f) = (vpp.0[idx / nf], freq.0[idx % nf]);
            Ok(PowerRow {
                vpp: v,
                freq: f,
                power: synthetic_power(load, v, f, samples_per_period)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pump::{calibrate, CalibrationSet};

    #[test]
    fn range_is_inclusive() {
        let g: Grid = "10:160:1".parse().unwrap();
        assert_eq!(g.len(), 151);
        assert_eq!(g.values()[50], 60.0);
        assert_eq!(*g.values().last().unwrap(), 160.0);
        let g: Grid = "0:1:0.1".parse().unwrap();
        assert_eq!(g.len(), 11);
    }

    #[test]
    fn list_and_errors() {
        assert_eq!("10, 60".parse::<Grid>().unwrap().values(), &[10.0, 60.0]);
        assert!("1:2".parse::<Grid>().is_err());
        assert!("5:1:1".parse::<Grid>().is_err());
        assert!("0:1:0".parse::<Grid>().is_err());
        assert!("".parse::<Grid>().is_err());
        assert!("0:1e12:1e-6".parse::<Grid>().is_err());
    }

    #[test]
    fn flow_rows_follow_grid_order() {
        let p = calibrate(&CalibrationSet::published()).unwrap();
        let rows = flow_sweep(
            &p,
            &"80,160".parse().unwrap(),
            &"10:60:10".parse().unwrap(),
            &"0,900".parse().unwrap(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2 * 6 * 2);
        assert_eq!((rows[0].vpp, rows[0].freq, rows[0].dp), (80.0, 10.0, 0.0));
        assert_eq!((rows[1].vpp, rows[1].freq, rows[1].dp), (80.0, 10.0, 900.0));
        assert_eq!((rows[23].vpp, rows[23].freq, rows[23].dp), (160.0, 60.0, 900.0));
    }
}
