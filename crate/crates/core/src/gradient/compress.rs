use crate::Matrix;

/// Default absolute drop threshold for stored sensitivities.
pub const DEFAULT_THRESHOLD: f64 = 1e-5;
/// Cases with at least this many buses store chains compressed by default.
pub const COMPRESS_FROM_BUSES: usize = 200;

/// Coordinate-format matrix keeping only entries with `|v| >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedMatrix {
    nrows: usize,
    ncols: usize,
    threshold: f64,
    rows: Vec<u32>,
    cols: Vec<u32>,
    values: Vec<f64>,
}

pub fn compress(m: &Matrix, threshold: f64) -> CompressedMatrix {
    assert!(threshold >= 0.0, "threshold must be nonnegative");
    let mut out = CompressedMatrix {
        nrows: m.nrows(),
        ncols: m.ncols(),
        threshold,
        rows: Vec::new(),
        cols: Vec::new(),
        values: Vec::new(),
    };
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            let keep = if threshold == 0.0 { v != 0.0 } else { v.abs() >= threshold };
            if keep {
                out.rows.push(i as u32);
                out.cols.push(j as u32);
                out.values.push(v);
            }
        }
    }
    out
}

impl CompressedMatrix {
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn dense_len(&self) -> usize {
        self.nrows * self.ncols
    }

    pub fn kept_fraction(&self) -> f64 {
        if self.dense_len() == 0 {
            return 1.0;
        }
        self.nnz() as f64 / self.dense_len() as f64
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.values.len()).map(|k| (self.rows[k] as usize, self.cols[k] as usize, self.values[k]))
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }
}

/// How chain sensitivities are held in the tree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Storage {
    Dense,
    Compressed { threshold: f64 },
}

impl Storage {
    /// Dense below [`COMPRESS_FROM_BUSES`] buses, compressed above.
    pub fn auto(n_buses: usize, threshold: f64) -> Self {
        if n_buses >= COMPRESS_FROM_BUSES {
            Storage::Compressed { threshold }
        } else {
            Storage::Dense
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainMatrix {
    Dense(Matrix),
    Compressed(CompressedMatrix),
}

impl ChainMatrix {
    pub fn store(m: Matrix, storage: Storage) -> Self {
        match storage {
            Storage::Dense => ChainMatrix::Dense(m),
            Storage::Compressed { threshold } => ChainMatrix::Compressed(compress(&m, threshold)),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match self {
            ChainMatrix::Dense(m) => m.clone(),
            ChainMatrix::Compressed(c) => c.to_dense(),
        }
    }

    pub fn stored_entries(&self) -> usize {
        match self {
            ChainMatrix::Dense(m) => m.len(),
            ChainMatrix::Compressed(c) => c.nnz(),
        }
    }

    pub fn dense_entries(&self) -> usize {
        match self {
            ChainMatrix::Dense(m) => m.len(),
            ChainMatrix::Compressed(c) => c.dense_len(),
        }
    }
}
