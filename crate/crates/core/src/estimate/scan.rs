use crate::coherence::{coherence_product, simulate_fringe, uniform_phase_grid, SamplingMode};
use crate::error::{invalid, Result};
use crate::estimate::fit::FitPoint;
use crate::estimate::fringe_fit::fit_fringe;
use crate::estimate::zero_cross::SeriesPoint;
use crate::noise::DiscreteSpectrum;
use crate::par::map_indexed;
use crate::rng::derive_seed;
use crate::schedule::ModulationScheme;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measurement {
    /// Exact Bessel-product coherence, `sigma = 0`.
    Analytic,
    /// Simulated fringe per cell, fitted for its contrast.
    Fringe { shots: u32, phi_points: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanCell {
    pub coherence: f64,
    pub sigma: f64,
}

/// Coherence over modulation frequency x pulse count. Cells are stored row by
/// row, one row per entry of `n_values`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    freqs: Vec<f64>,
    n_values: Vec<usize>,
    cells: Vec<ScanCell>,
}

impl ScanGrid {
    pub fn new(freqs: Vec<f64>, n_values: Vec<usize>, cells: Vec<ScanCell>) -> Result<Self> {
        if freqs.is_empty() || n_values.is_empty() {
            return Err(invalid("scan axes must be non-empty"));
        }
        if cells.len() != freqs.len() * n_values.len() {
            return Err(invalid(format!("{} cells for a {}x{} grid", cells.len(), n_values.len(), freqs.len())));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("scan frequencies must be strictly increasing"));
        }
        if freqs.iter().any(|&f| !(f > 0.0) || !f.is_finite()) {
            return Err(invalid("scan frequencies must be positive"));
        }
        if n_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("pulse counts must be strictly increasing"));
        }
        if let Some(c) = cells.iter().find(|c| !c.coherence.is_finite() || !(c.sigma >= 0.0)) {
            return Err(invalid(format!("bad scan cell {c:?}")));
        }
        Ok(Self { freqs, n_values, cells })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn n_values(&self) -> &[usize] {
        &self.n_values
    }

    pub fn cells(&self) -> &[ScanCell] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> ScanCell {
        self.cells[row * self.freqs.len() + col]
    }

    pub fn row(&self, row: usize) -> &[ScanCell] {
        let w = self.freqs.len();
        &self.cells[row * w..(row + 1) * w]
    }

    /// Coherence versus `n` at one frequency column.
    pub fn column_series(&self, col: usize) -> Vec<SeriesPoint> {
        (0..self.n_values.len())
            .map(|row| {
                let c = self.cell(row, col);
                SeriesPoint { n: self.n_values[row], coherence: c.coherence, sigma: c.sigma }
            })
            .collect()
    }

    /// All cells as fit data.
    pub fn fit_points(&self) -> Vec<FitPoint> {
        let mut out = Vec::with_capacity(self.cells.len());
        for (row, &n) in self.n_values.iter().enumerate() {
            for (col, &f_mod) in self.freqs.iter().enumerate() {
                let c = self.cell(row, col);
                out.push(FitPoint { n, f_mod, coherence: c.coherence, sigma: c.sigma });
            }
        }
        out
    }
}

/// Fill a scan grid for a known spectrum.
///
/// In fringe mode each cell gets its own seed derived from the scan seed and
/// the cell index, so cells can be evaluated in any order.
pub fn scan_coherence(
    spectrum: &DiscreteSpectrum,
    scheme: ModulationScheme,
    freqs: &[f64],
    n_values: &[usize],
    measurement: Measurement,
) -> Result<ScanGrid> {
    if freqs.is_empty() || n_values.is_empty() {
        return Err(invalid("scan axes must be non-empty"));
    }
    let width = freqs.len();
    let grid = match measurement {
        Measurement::Fringe { phi_points, .. } => uniform_phase_grid(phi_points),
        Measurement::Analytic => Vec::new(),
    };
    let cells = map_indexed(width * n_values.len(), |idx| -> Result<ScanCell> {
        let (row, col) = (idx / width, idx % width);
        let tf = scheme.schedule(n_values[row], freqs[col])?.toggling();
        match measurement {
            Measurement::Analytic => Ok(ScanCell { coherence: coherence_product(spectrum, &tf)?.value, sigma: 0.0 }),
            Measurement::Fringe { shots, seed, .. } => {
                let cell_seed = derive_seed(seed, idx as u64);
                let scan = simulate_fringe(spectrum, &tf, &grid, shots, cell_seed, SamplingMode::IndependentPhases)?;
                let fit = fit_fringe(&scan)?;
                Ok(ScanCell { coherence: fit.coherence, sigma: fit.sigma })
            }
        }
    });
    let cells = cells.into_iter().collect::<Result<Vec<_>>>()?;
    ScanGrid::new(freqs.to_vec(), n_values.to_vec(), cells)
}
