//! I-projection onto the set of couplings with prescribed marginals,
//! computed by iterative proportional fitting.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::probability::{JointPmf, Pmf};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Slack allowed when deciding that the support graph can carry all mass.
const FLOW_SLACK: f64 = 1e-12;

/// Maximum flow from row masses `r` to column masses `c` through the edges
/// `(i, j)` with `support[i * cols + j]` (Edmonds-Karp on a dense graph).
fn max_flow(support: &[bool], r: &[f64], c: &[f64]) -> f64 {
    let rows = r.len();
    let cols = c.len();
    let n = rows + cols + 2;
    let (source, sink) = (n - 2, n - 1);
    let mut cap = alloc::vec![0.0f64; n * n];
    for i in 0..rows {
        cap[source * n + i] = r[i];
        for j in 0..cols {
            if support[i * cols + j] {
                cap[i * n + rows + j] = f64::INFINITY;
            }
        }
    }
    for j in 0..cols {
        cap[(rows + j) * n + sink] = c[j];
    }
    let mut flow = 0.0;
    let mut parent = alloc::vec![usize::MAX; n];
    let mut queue = Vec::with_capacity(n);
    loop {
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        parent[source] = source;
        queue.clear();
        queue.push(source);
        let mut head = 0;
        while head < queue.len() && parent[sink] == usize::MAX {
            let u = queue[head];
            head += 1;
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u * n + v] > FLOW_SLACK {
                    parent[v] = u;
                    queue.push(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            return flow;
        }
        let mut bottleneck = f64::INFINITY;
        let mut v = sink;
        while v != source {
            let u = parent[v];
            bottleneck = bottleneck.min(cap[u * n + v]);
            v = u;
        }
        let mut v = sink;
        while v != source {
            let u = parent[v];
            cap[u * n + v] -= bottleneck;
            cap[v * n + u] += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
}

/// Whether some joint law supported on `q > 0` has marginals `r` and `c`.
pub(crate) fn coupling_feasible(q: &[f64], r: &[f64], c: &[f64]) -> bool {
    let support: Vec<bool> = q.iter().map(|&x| x > 0.0).collect();
    max_flow(&support, r, c) >= 1.0 - 1e-9
}

/// IPF on raw row-major slices. Returns the fitted joint law.
pub(crate) fn ipf(q: &[f64], r: &[f64], c: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let rows = r.len();
    let cols = c.len();
    debug_assert_eq!(q.len(), rows * cols);
    if !coupling_feasible(q, r, c) {
        return Err(Error::Infeasible);
    }
    let mut p: Vec<f64> = (0..rows * cols)
        .map(|k| if r[k / cols] > 0.0 && c[k % cols] > 0.0 { q[k] } else { 0.0 })
        .collect();
    let mut sums = alloc::vec![0.0; rows.max(cols)];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        for i in 0..rows {
            let row = &mut p[i * cols..(i + 1) * cols];
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                let f = r[i] / s;
                row.iter_mut().for_each(|x| *x *= f);
            }
        }
        sums[..cols].iter_mut().for_each(|s| *s = 0.0);
        for i in 0..rows {
            for j in 0..cols {
                sums[j] += p[i * cols + j];
            }
        }
        for j in 0..cols {
            if sums[j] > 0.0 {
                let f = c[j] / sums[j];
                for i in 0..rows {
                    p[i * cols + j] *= f;
                }
            }
        }
        residual = 0.0;
        for i in 0..rows {
            let s: f64 = p[i * cols..(i + 1) * cols].iter().sum();
            residual = residual.max(math::abs(s - r[i]));
        }
        if residual <= tol {
            return Ok(p);
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual })
}

/// `D(p || q)` in nats for `p` supported inside `q`.
pub(crate) fn divergence_nats(p: &[f64], q: &[f64]) -> f64 {
    crate::probability::kl_nats_or_inf(p, q)
}

/// The joint law closest to `q` in KL divergence among those with row
/// marginal `target_row` and column marginal `target_col`.
///
/// Zeros of `q` are preserved; if no coupling fits inside the support of
/// `q` the result is [`Error::Infeasible`]. Convergence means both
/// marginals match in sup-norm to within `tol`.
pub fn i_projection_coupling(
    q: &JointPmf,
    target_row: &Pmf,
    target_col: &Pmf,
    tol: f64,
    max_iter: usize,
) -> Result<JointPmf> {
    q.row_alphabet().ensure_same(target_row.alphabet(), "i_projection_coupling rows")?;
    q.col_alphabet().ensure_same(target_col.alphabet(), "i_projection_coupling columns")?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let p = ipf(q.probs(), target_row.probs(), target_col.probs(), tol, max_iter)?;
    JointPmf::new(q.row_alphabet().clone(), q.col_alphabet().clone(), p)
}
