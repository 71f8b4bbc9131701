//! Space-filling design: maximin selection over a random candidate cloud.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Candidate points drawn before selection.
pub const CANDIDATES: usize = 4096;
const BISECTION_STEPS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DesignError {
    #[error("cannot select {requested} points from {available} candidates")]
    TooManyPoints { requested: usize, available: usize },
    #[error("design space has no dimensions")]
    EmptySpace,
    #[error("at least one point is required")]
    NoPoints,
}

/// `CANDIDATES` uniform points in the unit cube.
pub fn candidates(dims: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..CANDIDATES)
        .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
        .collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One WSP pass: start at the candidate nearest the centre, drop every
/// candidate closer than `dmin` to the current point, move to the nearest
/// survivor, repeat. Returns selected indices in visiting order.
fn wsp_pass(points: &[Vec<f64>], dmin: f64) -> Vec<usize> {
    let dims = points[0].len();
    let centre = vec![0.5; dims];
    let mut alive = vec![true; points.len()];
    let mut current = (0..points.len())
        .min_by(|&a, &b| dist2(&points[a], &centre).total_cmp(&dist2(&points[b], &centre)))
        .expect("non-empty");
    let d2 = dmin * dmin;
    let mut selected = Vec::new();
    loop {
        selected.push(current);
        alive[current] = false;
        let mut next: Option<(f64, usize)> = None;
        for (i, p) in points.iter().enumerate() {
            if !alive[i] {
                continue;
            }
            let d = dist2(p, &points[current]);
            if d < d2 {
                alive[i] = false;
            } else if next.is_none_or(|(best, _)| d < best) {
                next = Some((d, i));
            }
        }
        match next {
            Some((_, i)) => current = i,
            None => return selected,
        }
    }
}

/// Selects `n` well spread points of the unit cube. The spacing `dmin` is
/// bisected until exactly `n` points survive; if no spacing yields exactly
/// `n`, the first `n` of the smallest larger design are kept.
pub fn wsp_unit(dims: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>, DesignError> {
    if dims == 0 {
        return Err(DesignError::EmptySpace);
    }
    if n == 0 {
        return Err(DesignError::NoPoints);
    }
    if n > CANDIDATES {
        return Err(DesignError::TooManyPoints {
            requested: n,
            available: CANDIDATES,
        });
    }
    let pts = candidates(dims, seed);
    if n == CANDIDATES {
        return Ok(pts);
    }
    // Spacing 0 keeps everything, the cube diagonal keeps one point.
    let (mut lo, mut hi) = (0.0f64, (dims as f64).sqrt() + 1.0);
    let mut best = (0..CANDIDATES).collect::<Vec<_>>();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let sel = wsp_pass(&pts, mid);
        if sel.len() == n {
            best = sel;
            break;
        }
        if sel.len() > n {
            lo = mid;
            best = sel;
        } else {
            hi = mid;
        }
    }
    Ok(best.into_iter().take(n).map(|i| pts[i].clone()).collect())
}

/// Space-filling design scaled into the given box.
pub fn wsp_design(
    bounds: &[(f64, f64)],
    n: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, DesignError> {
    let unit = wsp_unit(bounds.len(), n, seed)?;
    Ok(unit
        .into_iter()
        .map(|p| {
            p.iter()
                .zip(bounds)
                .map(|(u, &(lo, hi))| lo + u * (hi - lo))
                .collect()
        })
        .collect())
}

/// Smallest pairwise distance of a point set.
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min(dist2(a, b));
        }
    }
    best.sqrt()
}
