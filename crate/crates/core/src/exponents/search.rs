//! Minimisation of `g(pi_U) = min { D(pi_UV || Q_UV) : pi_UV has marginals
//! (pi_U, P_V) }` over the two regions cut out by a divergence ball around
//! `P_U`: the ball itself `D(pi_U || P_U) <= tau` and its complement
//! `D(pi_U || P_U) >= tau`.
//!
//! `g` is convex with unconstrained minimiser `T_U`. When `T_U` lies in the
//! region the answer is `g(T_U)`; otherwise the minimum sits on the region's
//! boundary. Boundary points are parametrised by rays from `P_U` inside the
//! face spanned by its support: along a ray the divergence to `P_U` is
//! convex and increasing, so each ray meets the boundary once. For binary
//! alphabets there are only two rays and the answer is exact; otherwise a
//! simplex grid seeds the ray directions and a pattern search refines them.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::probability::kl_nats_or_inf;

use super::ipf;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub ipf_tol: f64,
    pub ipf_max_iter: usize,
    /// Upper bound on the number of simplex-grid seeds (alphabets of three
    /// or more source symbols).
    pub seed_points: usize,
    /// How many of the best seeds are refined.
    pub refine_starts: usize,
    /// Pattern-search step at which refinement stops.
    pub direction_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            ipf_tol: ipf::DEFAULT_TOLERANCE,
            ipf_max_iter: ipf::DEFAULT_MAX_ITER,
            seed_points: 600,
            refine_starts: 4,
            direction_tol: 1e-9,
        }
    }
}

/// `g` for a fixed reference law and column target.
pub(crate) struct CouplingCost<'a> {
    pub q: &'a [f64],
    pub p_v: &'a [f64],
    pub tol: f64,
    pub max_iter: usize,
}

impl CouplingCost<'_> {
    pub fn coupling(&self, pi_u: &[f64]) -> Result<Option<Vec<f64>>> {
        match ipf::ipf(self.q, pi_u, self.p_v, self.tol, self.max_iter) {
            Ok(p) => Ok(Some(p)),
            Err(Error::Infeasible) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// `+inf` where no coupling fits inside the support of `Q_UV`.
    pub fn eval(&self, pi_u: &[f64]) -> Result<f64> {
        Ok(self
            .coupling(pi_u)?
            .map_or(f64::INFINITY, |p| ipf::divergence_nats(&p, self.q)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Region {
    /// `D(pi || P_U) <= tau`.
    Inside,
    /// `D(pi || P_U) >= tau`.
    Outside,
}

#[derive(Debug, Clone)]
pub(crate) struct Found {
    pub value: f64,
    pub pi_u: Vec<f64>,
}

/// Ray geometry on the face `supp P_U`.
struct Rays<'a> {
    face: Vec<usize>,
    p_face: Vec<f64>,
    dim: usize,
    tau: f64,
    cost: &'a CouplingCost<'a>,
}

impl Rays<'_> {
    fn point(&self, w: &[f64], t: f64) -> Vec<f64> {
        let mut local: Vec<f64> = self.p_face.iter().zip(w).map(|(p, d)| (p + t * d).max(0.0)).collect();
        let s: f64 = local.iter().sum();
        local.iter_mut().for_each(|x| *x /= s);
        let mut full = alloc::vec![0.0; self.dim];
        for (&i, &x) in self.face.iter().zip(&local) {
            full[i] = x;
        }
        full
    }

    fn div(&self, w: &[f64], t: f64) -> f64 {
        let pt = self.point(w, t);
        let local: Vec<f64> = self.face.iter().map(|&i| pt[i]).collect();
        kl_nats_or_inf(&local, &self.p_face)
    }

    /// Where the ray in direction `w` leaves the ball: `(t, on_level_set)`.
    /// When the whole segment to the simplex boundary is inside the ball,
    /// returns the simplex-boundary end with `false`.
    fn boundary(&self, w: &[f64]) -> (f64, bool) {
        let t_max = self
            .p_face
            .iter()
            .zip(w)
            .filter(|(_, &d)| d < 0.0)
            .map(|(p, d)| p / -d)
            .fold(f64::INFINITY, f64::min);
        if self.div(w, t_max) <= self.tau {
            return (t_max, false);
        }
        let t = math::bisect(|t| self.div(w, t) - self.tau, 0.0, t_max, 200);
        (t, true)
    }

    fn objective(&self, w: &[f64], region: Region) -> Result<(f64, Vec<f64>)> {
        let (t, on_level) = self.boundary(w);
        let pi = self.point(w, t);
        if region == Region::Outside && !on_level {
            return Ok((f64::INFINITY, pi));
        }
        Ok((self.cost.eval(&pi)?, pi))
    }
}

fn normalized(mut w: Vec<f64>) -> Option<Vec<f64>> {
    let norm = math::sqrt(w.iter().map(|x| x * x).sum());
    if norm < 1e-14 {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= norm);
    Some(w)
}

/// Minimum of `g` over `region` relative to the ball `D(. || p_u) <= tau`.
/// `None` when the region carries no point with finite cost that the
/// search can reach.
pub(crate) fn minimize(
    cost: &CouplingCost<'_>,
    p_u: &[f64],
    t_u: &[f64],
    tau: f64,
    region: Region,
    opts: &SearchOptions,
) -> Result<Option<Found>> {
    let d_t = kl_nats_or_inf(t_u, p_u);
    let t_in_region = match region {
        Region::Inside => d_t <= tau,
        Region::Outside => d_t >= tau,
    };
    if t_in_region {
        return Ok(Some(Found { value: cost.eval(t_u)?, pi_u: t_u.to_vec() }));
    }
    let face: Vec<usize> = (0..p_u.len()).filter(|&i| p_u[i] > 0.0).collect();
    if face.len() == 1 {
        // The ball is the single point P_U (inside), and every other point
        // with finite cost lies in the same face (outside is empty there).
        return Ok(match region {
            Region::Inside => Some(Found { value: cost.eval(p_u)?, pi_u: p_u.to_vec() }),
            Region::Outside => None,
        });
    }
    let rays = Rays {
        p_face: face.iter().map(|&i| p_u[i]).collect(),
        face,
        dim: p_u.len(),
        tau,
        cost,
    };
    let k = rays.face.len();

    let mut seeds: Vec<Vec<f64>> = Vec::new();
    if k == 2 {
        seeds.push(alloc::vec![1.0, -1.0]);
        seeds.push(alloc::vec![-1.0, 1.0]);
    } else {
        let mut n = 1;
        while math::composition_count(n + 1, k) <= opts.seed_points as f64 {
            n += 1;
        }
        math::for_each_composition(n, k, |c| {
            let w: Vec<f64> = c.iter().zip(&rays.p_face).map(|(&ci, p)| ci as f64 / n as f64 - p).collect();
            if let Some(w) = normalized(w) {
                seeds.push(w);
            }
        });
        // towards and away from the unconstrained minimiser, when it lies in the face
        if rays.face.iter().map(|&i| t_u[i]).sum::<f64>() > 1.0 - 1e-12 {
            let w: Vec<f64> = rays.face.iter().zip(&rays.p_face).map(|(&i, p)| t_u[i] - p).collect();
            if let Some(w) = normalized(w) {
                seeds.push(w.iter().map(|x| -x).collect());
                seeds.push(w);
            }
        }
    }

    let mut evaluated: Vec<(f64, Vec<f64>, Vec<f64>)> = Vec::with_capacity(seeds.len());
    for w in seeds {
        let (v, pi) = rays.objective(&w, region)?;
        evaluated.push((v, w, pi));
    }
    evaluated.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    if !evaluated[0].0.is_finite() {
        return Ok(None);
    }
    if k == 2 {
        let (v, _, pi) = evaluated.swap_remove(0);
        return Ok(Some(Found { value: v, pi_u: pi }));
    }

    let mut best: Option<Found> = None;
    for (v0, w0, pi0) in evaluated.into_iter().take(opts.refine_starts) {
        if !v0.is_finite() {
            break;
        }
        let (v, pi) = pattern_search(&rays, region, w0, v0, pi0, opts.direction_tol)?;
        if best.as_ref().map_or(true, |b| v < b.value) {
            best = Some(Found { value: v, pi_u: pi });
        }
    }
    Ok(best)
}

/// Coordinate-pair compass search on the unit sphere of ray directions.
fn pattern_search(
    rays: &Rays<'_>,
    region: Region,
    mut w: Vec<f64>,
    mut value: f64,
    mut pi: Vec<f64>,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let k = w.len();
    let mut step = 0.25;
    while step > tol {
        let mut improved = false;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let mut trial = w.clone();
                trial[i] += step;
                trial[j] -= step;
                let Some(trial) = normalized(trial) else { continue };
                let (v, p) = rays.objective(&trial, region)?;
                if v < value {
                    value = v;
                    w = trial;
                    pi = p;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((value, pi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kl(p: &[f64], q: &[f64]) -> f64 {
        kl_nats_or_inf(p, q)
    }

    #[test]
    fn degenerate_v_reduces_to_source_divergence() {
        // |V| = 1: g(pi) = D(pi || Q_U)
        let q = [0.3, 0.7];
        let cost = CouplingCost { q: &q, p_v: &[1.0], tol: 1e-12, max_iter: 10_000 };
        let p_u = [0.8, 0.2];
        let tau = 0.1;
        let inside = minimize(&cost, &p_u, &q, tau, Region::Inside, &SearchOptions::default()).unwrap().unwrap();
        assert!((kl(&inside.pi_u, &p_u) - tau).abs() < 1e-12);
        assert!((inside.value - kl(&inside.pi_u, &q)).abs() < 1e-10);
        // T_U = Q_U is far from P_U, so the outside region contains it
        let outside = minimize(&cost, &p_u, &q, tau, Region::Outside, &SearchOptions::default()).unwrap().unwrap();
        assert!(outside.value < 1e-12);
    }

    #[test]
    fn point_mass_source_law() {
        let q = [0.3, 0.7];
        let cost = CouplingCost { q: &q, p_v: &[1.0], tol: 1e-12, max_iter: 10_000 };
        let p_u = [1.0, 0.0];
        let r = minimize(&cost, &p_u, &q, 0.2, Region::Inside, &SearchOptions::default()).unwrap().unwrap();
        assert!((r.value - -math::ln(0.3)).abs() < 1e-12);
        // T_U = Q_U is not dominated by P_U, so it is outside the ball
        let r = minimize(&cost, &p_u, &q, 0.2, Region::Outside, &SearchOptions::default()).unwrap().unwrap();
        assert!(r.value < 1e-12);
    }

    #[test]
    fn ternary_inside_matches_fine_grid() {
        let q = [0.5, 0.3, 0.2];
        let cost = CouplingCost { q: &q, p_v: &[1.0], tol: 1e-12, max_iter: 10_000 };
        let p_u = [0.1, 0.3, 0.6];
        let tau = 0.05;
        let r = minimize(&cost, &p_u, &q, tau, Region::Inside, &SearchOptions::default()).unwrap().unwrap();
        let mut grid = f64::INFINITY;
        let n = 1000;
        math::for_each_composition(n, 3, |c| {
            let pi: Vec<f64> = c.iter().map(|&x| x as f64 / n as f64).collect();
            if kl(&pi, &p_u) <= tau {
                grid = grid.min(kl(&pi, &q));
            }
        });
        assert!(r.value <= grid + 1e-12, "search {} grid {}", r.value, grid);
        assert!(grid - r.value < 1e-3);
        assert!((kl(&r.pi_u, &p_u) - tau).abs() < 1e-9);
    }
}
