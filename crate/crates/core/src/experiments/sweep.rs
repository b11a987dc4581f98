//! Repeated aspect experiments over reservoir sizes and frame sizes.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiments::metrics::{accuracy, isolated_flips, Accuracy};
use crate::experiments::{run_aspect, AspectHyper, Method, PreparedScene};
use crate::raster::Rect;
use crate::reservoir::ReservoirConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronSweepRow {
    pub n_res: usize,
    pub overall: f64,
    pub regions: Vec<(String, f64)>,
    pub learn_time_s: f64,
    pub classify_time_s: f64,
}

/// One CVRC aspect experiment per reservoir size, run one after another so
/// the timings do not compete for cores.
pub fn sweep_neurons(
    scene: &PreparedScene,
    n_res_list: &[usize],
    hyper: &AspectHyper,
    base: &ReservoirConfig,
    seed: u64,
) -> Result<Vec<NeuronSweepRow>> {
    if n_res_list.is_empty() {
        return Err(Error::invalid("neuron sweep grid is empty"));
    }
    n_res_list
        .iter()
        .map(|&n_res| {
            let config = ReservoirConfig { n_res, ..base.clone() };
            let out = run_aspect(scene, Method::Cvrc, hyper, &config, seed)?;
            Ok(NeuronSweepRow {
                n_res,
                overall: out.metrics.overall.percent,
                regions: out.metrics.regions.iter().map(|(n, a)| (n.clone(), a.percent)).collect(),
                learn_time_s: out.metrics.learn_time_s,
                classify_time_s: out.metrics.classify_time_s,
            })
        })
        .collect()
}

pub fn neuron_sweep_csv(rows: &[NeuronSweepRow]) -> String {
    let mut out = String::from("n_res,overall_pct");
    if let Some(first) = rows.first() {
        for (name, _) in &first.regions {
            let _ = write!(out, ",{name}_pct");
        }
    }
    out.push_str(",learn_time_s,classify_time_s\n");
    for r in rows {
        let _ = write!(out, "{},{:.4}", r.n_res, r.overall);
        for (_, v) in &r.regions {
            let _ = write!(out, ",{v:.4}");
        }
        let _ = writeln!(out, ",{:.6},{:.6}", r.learn_time_s, r.classify_time_s);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameSweepRow {
    pub n_w: usize,
    pub n_t: usize,
    /// Accuracy on the interior every grid point covers.
    pub accuracy: Accuracy,
    pub isolated_flips: usize,
    pub learn_time_s: f64,
}

/// Pixels covered by both scans for every window width up to `max_n_w`.
pub fn common_interior(width: usize, height: usize, max_n_w: usize) -> Option<Rect> {
    if max_n_w == 0 || max_n_w > width || max_n_w > height {
        return None;
    }
    let half = max_n_w / 2;
    Some(Rect::new(half, half, height - max_n_w + 1, width - max_n_w + 1))
}

/// One CVRC aspect experiment per `(N_W, N_T)`; the scan window follows
/// `N_W`. Grid points run concurrently. Accuracy and flip counts are taken
/// over the interior that the largest window still covers, so all rows
/// are measured on the same pixels.
pub fn sweep_frames(
    scene: &PreparedScene,
    sizes: &[(usize, usize)],
    hyper: &AspectHyper,
    base: &ReservoirConfig,
    seed: u64,
) -> Result<Vec<FrameSweepRow>> {
    if sizes.is_empty() {
        return Err(Error::invalid("frame sweep grid is empty"));
    }
    let max_n_w = sizes.iter().map(|s| s.0).max().unwrap_or(1);
    let interior = common_interior(scene.width(), scene.height(), max_n_w)
        .ok_or_else(|| Error::invalid(format!("window width {max_n_w} does not fit the scene")))?;
    let results: Vec<Result<FrameSweepRow>> = std::thread::scope(|s| {
        let handles: Vec<_> = sizes
            .iter()
            .map(|&(n_w, n_t)| {
                s.spawn(move || {
                    let h = AspectHyper { n_w, n_t, ..*hyper };
                    let out = run_aspect(scene, Method::Cvrc, &h, base, seed)?;
                    Ok(FrameSweepRow {
                        n_w,
                        n_t,
                        accuracy: accuracy(&out.labels, &scene.truth, Some(interior))?,
                        isolated_flips: isolated_flips(&out.labels, Some(interior)),
                        learn_time_s: out.metrics.learn_time_s,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("frame sweep thread panicked"))
            .collect()
    });
    results.into_iter().collect()
}

pub fn frame_sweep_csv(rows: &[FrameSweepRow]) -> String {
    let mut out = String::from("n_w,n_t,overall_pct,evaluated,isolated_flips,learn_time_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.4},{},{},{:.6}",
            r.n_w, r.n_t, r.accuracy.percent, r.accuracy.evaluated, r.isolated_flips, r.learn_time_s
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_of_largest_window() {
        assert_eq!(common_interior(400, 400, 50), Some(Rect::new(25, 25, 351, 351)));
        assert_eq!(common_interior(10, 8, 1), Some(Rect::new(0, 0, 8, 10)));
        assert_eq!(common_interior(10, 8, 9), None);
    }
}
