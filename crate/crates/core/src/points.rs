use crate::error::{Error, Result};

/// Row-major `n × d` matrix of input points.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    pub fn new(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("point dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::input(format!(
                "{} values do not form rows of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("points must be finite"));
        }
        Ok(Points { data, dim })
    }

    /// One-dimensional points from a slice of scalars.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Points::new(values.to_vec(), 1)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::input("ragged rows"));
        }
        Points::new(rows.concat(), dim)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Keeps only the rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Points {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Points {
            data,
            dim: self.dim,
        }
    }

    /// The first `k` coordinates of every row.
    pub fn project(&self, k: usize) -> Result<Points> {
        if k == 0 || k > self.dim {
            return Err(Error::input(format!(
                "cannot project dimension {} onto {k} coordinates",
                self.dim
            )));
        }
        let data = self.rows().flat_map(|r| r[..k].iter().copied()).collect();
        Ok(Points { data, dim: k })
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
