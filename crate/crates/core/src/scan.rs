//! Singularity detection along a matrix-valued path sampled on a grid.
//! Used for the Jacobi solution operator and the steady determinant.

use alloc::vec::Vec;

#[allow(unused_imports)]
use nalgebra::ComplexField;
use nalgebra::DMatrix;

use crate::jacobi::{ConjugateEvent, Detection};
use crate::linalg;

pub(crate) trait MatrixPath {
    /// Next grid sample, or None past the horizon.
    fn advance(&mut self) -> Option<(f64, DMatrix<f64>)>;
    /// Matrix at a time within the last two grid intervals.
    fn at(&mut self, t: f64) -> DMatrix<f64>;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Probe {
    pub det: f64,
    pub ratio: f64,
    pub small: usize,
    pub sigma_max: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ScanSettings {
    pub time_tol: f64,
    pub sigma_rel: f64,
    /// Sampled σ_min/σ_max must dip below this before a dip is refined.
    pub candidate: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        ScanSettings {
            time_tol: 1e-9,
            sigma_rel: 1e-6,
            candidate: 0.05,
        }
    }
}

/// σ values are measured against max(σ_max, reference) so that a matrix
/// collapsing as a whole still registers as a dip.
pub(crate) fn probe(m: &DMatrix<f64>, sigma_rel: f64, reference: f64) -> Probe {
    let sv = linalg::singular_values(m);
    let smax = sv[0].max(reference);
    let smin = sv[sv.len() - 1];
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    let small = sv.iter().filter(|&&s| s <= sigma_rel * smax).count();
    Probe {
        det: m.clone().lu().determinant(),
        ratio,
        small,
        sigma_max: sv[0],
    }
}

fn ratio_of(m: &DMatrix<f64>, reference: f64) -> f64 {
    let sv = linalg::singular_values(m);
    let smax = sv[0].max(reference);
    if smax > 0.0 {
        sv[sv.len() - 1] / smax
    } else {
        0.0
    }
}

/// Walks the path, refining determinant sign changes by bisection and
/// σ_min/σ_max dips by Brent minimisation of the squared ratio.
pub(crate) fn scan_path<P: MatrixPath>(path: &mut P, s: ScanSettings) -> Vec<ConjugateEvent> {
    let mut events: Vec<ConjugateEvent> = Vec::new();
    let mut hist: Vec<(f64, Probe)> = Vec::with_capacity(3);
    let mut step: f64 = 0.0;
    let mut reference: f64 = 0.0;
    while let Some((t, m)) = path.advance() {
        let p = probe(&m, s.sigma_rel, reference);
        reference = reference.max(p.sigma_max);
        if let Some(&(tp, pp)) = hist.last() {
            step = t - tp;
            if pp.det != 0.0 && p.det != 0.0 && (pp.det > 0.0) != (p.det > 0.0) {
                let ts = linalg::bisect(|x| path.at(x).lu().determinant(), tp, t, s.time_tol);
                let at = probe(&path.at(ts), s.sigma_rel, reference);
                events.push(ConjugateEvent {
                    t: ts,
                    multiplicity: at.small.max(1),
                    detection: Detection::DetSignChange,
                    value: at.ratio,
                    parameter: None,
                });
            }
        }
        hist.push((t, p));
        if hist.len() > 3 {
            hist.remove(0);
        }
        if hist.len() == 3 {
            let (ta, a) = hist[0];
            let (_, b) = hist[1];
            let (tc, c) = hist[2];
            if b.ratio < a.ratio && b.ratio <= c.ratio && b.ratio < s.candidate {
                let near = events
                    .iter()
                    .any(|e| e.t >= ta - step && e.t <= tc + step);
                if !near {
                    let (tm, r2) = linalg::brent_min(
                        |x| {
                            let r = ratio_of(&path.at(x), reference);
                            r * r
                        },
                        ta,
                        tc,
                        1e-12,
                    );
                    if r2.sqrt() < s.sigma_rel {
                        let at = probe(&path.at(tm), s.sigma_rel, reference);
                        events.push(ConjugateEvent {
                            t: tm,
                            multiplicity: at.small.max(1),
                            detection: Detection::SigmaMinDip,
                            value: at.ratio,
                            parameter: None,
                        });
                    }
                }
            }
        }
    }
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(core::cmp::Ordering::Equal));
    events
}
