use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{EnergyBranch, QesSolution};

/// Acceptance threshold on the relative smallest singular value.
pub const ROOT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub threshold: f64,
    /// Width at which golden-section refinement stops.
    pub refine_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            threshold: ROOT_THRESHOLD,
            refine_tol: 1e-12,
        }
    }
}

const INVPHI: f64 = 0.618_033_988_749_894_9;

fn value(f: &impl Fn(f64) -> Option<f64>, x: f64) -> f64 {
    f(x).unwrap_or(f64::INFINITY)
}

/// Golden-section minimization on [a, b]; returns the best point seen, ends included.
fn golden(f: &impl Fn(f64) -> Option<f64>, mut a: f64, mut b: f64, start: (f64, f64), tol: f64) -> (f64, f64) {
    let mut best = start;
    for x in [a, b] {
        let v = value(f, x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let (mut fc, mut fd) = (value(f, c), value(f, d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = value(f, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = value(f, d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// Points in [lo, hi] where the nonnegative function `f` drops below the threshold.
///
/// `f` is sampled on a uniform grid (ends included, in parallel); every local minimum is
/// refined by golden section between its neighbours. `None` marks infeasible points.
pub(crate) fn scan_roots<F>(f: F, lo: f64, hi: f64, grid: usize, opts: ScanOptions) -> Vec<(f64, f64)>
where
    F: Fn(f64) -> Option<f64> + Sync,
{
    let step = (hi - lo) / (grid - 1) as f64;
    let xs: Vec<f64> = (0..grid)
        .map(|i| if i + 1 == grid { hi } else { lo + step * i as f64 })
        .collect();
    let vals: Vec<f64> = xs.par_iter().map(|&x| value(&f, x)).collect();
    let mut roots: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .filter(|&i| {
            let v = vals[i];
            v.is_finite()
                && (i == 0 || v < vals[i - 1])
                && (i + 1 == grid || v <= vals[i + 1])
        })
        .filter_map(|i| {
            let a = xs[i.saturating_sub(1)];
            let b = xs[(i + 1).min(grid - 1)];
            let tol = opts.refine_tol * (1.0 + xs[i].abs());
            let (x, v) = golden(&f, a, b, (xs[i], vals[i]), tol);
            (v < opts.threshold).then_some((x, v))
        })
        .collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(roots.len());
    for r in roots {
        match merged.last_mut() {
            Some(last) if (r.0 - last.0).abs() < 0.5 * step => {
                if r.1 < last.1 {
                    *last = r;
                }
            }
            _ => merged.push(r),
        }
    }
    merged
}

/// Labels roots across consecutive sweep points by nearest-neighbour continuation.
///
/// Each ε branch is tracked separately; a root is matched to the active branch whose
/// linearly extrapolated (coupling, ε) is closest. Unmatched roots open new branches.
pub fn assign_branches(points: &mut [Vec<QesSolution>]) {
    struct Track {
        id: usize,
        last: (f64, f64),
        prev: Option<(f64, f64)>,
    }
    let mut next_id = 0;
    let mut active: BTreeMap<EnergyBranch, Vec<Track>> = BTreeMap::new();
    for sols in points.iter_mut() {
        for branch in EnergyBranch::BOTH {
            let tracks = active.entry(branch).or_default();
            let idx: Vec<usize> = (0..sols.len())
                .filter(|&i| sols[i].energy_branch == branch)
                .collect();
            let mut pairs = Vec::new();
            for (t, tr) in tracks.iter().enumerate() {
                let pred = match tr.prev {
                    Some(p) => (2.0 * tr.last.0 - p.0, 2.0 * tr.last.1 - p.1),
                    None => tr.last,
                };
                for &i in &idx {
                    let d = (sols[i].fixed_coupling - pred.0).abs() + (sols[i].epsilon - pred.1).abs();
                    pairs.push((d, t, i));
                }
            }
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut track_used = vec![false; tracks.len()];
            let mut root_track: BTreeMap<usize, usize> = BTreeMap::new();
            for (_, t, i) in pairs {
                if !track_used[t] && !root_track.contains_key(&i) {
                    track_used[t] = true;
                    root_track.insert(i, t);
                }
            }
            let mut new_tracks = Vec::new();
            for &i in &idx {
                let here = (sols[i].fixed_coupling, sols[i].epsilon);
                let (id, prev) = match root_track.get(&i) {
                    Some(&t) => (tracks[t].id, Some(tracks[t].last)),
                    None => {
                        next_id += 1;
                        (next_id - 1, None)
                    }
                };
                sols[i].branch_id = id;
                new_tracks.push(Track { id, last: here, prev });
            }
            *tracks = new_tracks;
        }
    }
}

/// Checks that no step of a branch, given as (sweep, coupling) pairs, exceeds ten times
/// the grid step times the branch's median slope.
pub fn branch_is_continuous(points: &[(f64, f64)]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let mut slopes: Vec<f64> = points
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .collect();
    let steps: Vec<(f64, f64)> = points
        .windows(2)
        .map(|w| ((w[1].0 - w[0].0).abs(), (w[1].1 - w[0].1).abs()))
        .collect();
    slopes.sort_by(f64::total_cmp);
    let median = slopes[slopes.len() / 2].max(1e-9);
    steps.iter().all(|&(ds, dc)| dc <= 10.0 * ds * median)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::PolySpinor;

    #[test]
    fn finds_v_shaped_zeros() {
        let f = |x: f64| Some((x - 0.3).abs().min((x + 0.55).abs()));
        let roots = scan_roots(f, -1.0, 1.0, 41, ScanOptions::default());
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 + 0.55).abs() < 1e-11);
        assert!((roots[1].0 - 0.3).abs() < 1e-11);
    }

    #[test]
    fn endpoint_roots_and_infeasible_points() {
        let f = |x: f64| if x > 0.9 { None } else { Some((x + 1.0).abs()) };
        let roots = scan_roots(f, -1.0, 1.0, 11, ScanOptions::default());
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].0, -1.0);
        let g = |x: f64| Some(1.0 + x * x);
        assert!(scan_roots(g, -1.0, 1.0, 11, ScanOptions::default()).is_empty());
    }

    fn sol(c: f64, e: f64) -> QesSolution {
        QesSolution {
            n: 1,
            fixed_coupling: c,
            epsilon: e,
            exponent: 0.0,
            spinor: PolySpinor::default(),
            sigma_min: 0.0,
            branch_id: 99,
            energy_branch: EnergyBranch::of(e),
        }
    }

    #[test]
    fn continuation_follows_crossing_lines() {
        let mut pts: Vec<Vec<QesSolution>> = (0..6)
            .map(|i| {
                let s = i as f64 * 0.1;
                vec![sol(s, 1.0), sol(0.45 - s, 1.0 + 0.01 * i as f64)]
            })
            .collect();
        assign_branches(&mut pts);
        let a = pts[0][0].branch_id;
        let b = pts[0][1].branch_id;
        assert_ne!(a, b);
        for p in &pts {
            assert_eq!(p[0].branch_id, a);
            assert_eq!(p[1].branch_id, b);
        }
    }

    #[test]
    fn continuity_flags_jumps() {
        let smooth: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.1 * i as f64)).collect();
        assert!(branch_is_continuous(&smooth));
        let mut jumpy = smooth.clone();
        jumpy[5].1 += 5.0;
        assert!(!branch_is_continuous(&jumpy));
    }
}
