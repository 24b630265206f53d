use crate::estimate::scan::ScanGrid;
use crate::schedule::ModulationScheme;

pub const DEFAULT_DIP_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakMode {
    Free,
    /// Snap candidates to multiples of `base` (e.g. power-line harmonics).
    Comb {
        base: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    pub mode: PeakMode,
    /// Minimum `1 - A` for a minimum to count as a dip.
    pub dip_threshold: f64,
    /// Merge radius in Hz; `None` uses `2 / T` of the largest-`n` schedule at
    /// the dominant dip.
    pub merge_width: Option<f64>,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { mode: PeakMode::Free, dip_threshold: DEFAULT_DIP_THRESHOLD, merge_width: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateTone {
    pub frequency: f64,
    /// `1 - A` at the deepest merged minimum, in `(0, 2]`.
    pub dip_depth: f64,
    /// Smallest scanned pulse count whose row already shows the dip.
    pub first_n_detected: usize,
}

#[derive(Debug, Clone, Copy)]
struct Dip {
    freq: f64,
    depth: f64,
}

fn dips(grid: &ScanGrid, row: usize, threshold: f64) -> Vec<Dip> {
    let a: Vec<f64> = grid.row(row).iter().map(|c| c.coherence).collect();
    let f = grid.freqs();
    (1..a.len().saturating_sub(1))
        .filter(|&i| a[i] < a[i - 1] && a[i] <= a[i + 1] && 1.0 - a[i] >= threshold)
        .map(|i| Dip { freq: f[i], depth: 1.0 - a[i] })
        .collect()
}

/// Stage one: candidate tone frequencies from the largest-`n` row.
///
/// Local minima deeper than the threshold are grouped around the deepest
/// remaining one: everything within the merge width joins it, and the group
/// becomes one candidate at its depth-weighted centroid. A single strong tone
/// produces a cluster of power-broadened minima; this folds them back into
/// one frequency.
pub fn identify_peaks(grid: &ScanGrid, options: &PeakOptions) -> Vec<CandidateTone> {
    let last = grid.n_values().len() - 1;
    let n_max = grid.n_values()[last];
    let mut pending = dips(grid, last, options.dip_threshold);
    // deepest first, lower frequency wins ties
    pending.sort_by(|a, b| b.depth.total_cmp(&a.depth).then(a.freq.total_cmp(&b.freq)));

    let mut found = Vec::new();
    while let Some(&dominant) = pending.first() {
        let width = options.merge_width.unwrap_or_else(|| 2.0 / ModulationScheme::duration(n_max, dominant.freq));
        let (cluster, rest): (Vec<Dip>, Vec<Dip>) =
            pending.iter().partition(|d| (d.freq - dominant.freq).abs() <= width);
        pending = rest;
        let weight: f64 = cluster.iter().map(|d| d.depth).sum();
        let centroid = cluster.iter().map(|d| d.depth * d.freq).sum::<f64>() / weight;
        found.push((CandidateTone { frequency: centroid, dip_depth: dominant.depth, first_n_detected: n_max }, width));
    }

    for (cand, width) in found.iter_mut() {
        for row in 0..=last {
            if dips(grid, row, options.dip_threshold).iter().any(|d| (d.freq - cand.frequency).abs() <= *width) {
                cand.first_n_detected = grid.n_values()[row];
                break;
            }
        }
    }
    let mut out: Vec<CandidateTone> = found.into_iter().map(|(c, _)| c).collect();

    if let PeakMode::Comb { base } = options.mode {
        let mut snapped: Vec<CandidateTone> = Vec::new();
        for mut c in out {
            let tooth = (c.frequency / base).round().max(1.0);
            c.frequency = tooth * base;
            match snapped.iter_mut().find(|s| s.frequency == c.frequency) {
                Some(s) => {
                    s.dip_depth = s.dip_depth.max(c.dip_depth);
                    s.first_n_detected = s.first_n_detected.min(c.first_n_detected);
                }
                None => snapped.push(c),
            }
        }
        out = snapped;
    }
    out.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    out
}
