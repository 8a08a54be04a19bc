//! Exact solver for the cutting-plane master problem: minimize the pointwise
//! maximum of affine cuts over binary vectors with at most s ones. Best-first
//! branch-and-bound; node bounds come from a Lagrangian dual whose inner
//! minimization is solved exactly by greedy selection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::Array1;

use crate::error::{Result, SpcaError};

/// One affine minorant: value + grad . (z - anchor), stored as offset + grad . z.
#[derive(Debug, Clone)]
pub struct Cut {
    pub anchor: Vec<bool>,
    pub value: f64,
    pub grad: Array1<f64>,
    pub offset: f64,
}

impl Cut {
    pub fn new(anchor: Vec<bool>, value: f64, grad: Array1<f64>) -> Self {
        let at_anchor: f64 = anchor
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(|(v, _)| grad[v])
            .sum();
        Cut {
            anchor,
            value,
            grad,
            offset: value - at_anchor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MasterProblem {
    pub p: usize,
    pub s: usize,
    pub cuts: Vec<Cut>,
    /// Warm incumbent; the stored objective is recomputed before use.
    pub incumbent: Option<(Vec<bool>, f64)>,
    /// Variables pinned to zero for the whole solve.
    pub forced_zero: Vec<usize>,
    pub node_budget: usize,
    pub dual_iters: usize,
}

impl MasterProblem {
    pub fn new(p: usize, s: usize) -> Self {
        MasterProblem {
            p,
            s,
            cuts: Vec::new(),
            incumbent: None,
            forced_zero: Vec::new(),
            node_budget: 200_000,
            dual_iters: 50,
        }
    }

    pub fn add_cut(&mut self, cut: Cut) {
        self.cuts.push(cut);
    }

    /// Max over cuts of offset + grad . z at the given support. Every caller
    /// (solver, brute force, incumbent checks) goes through here so ties are
    /// broken on bit-identical values.
    pub fn value_at(&self, support: &[usize]) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.offset + support.iter().map(|&v| c.grad[v]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// A branch-and-bound node described by its fixings.
#[derive(Debug, Clone)]
pub struct BnbNode {
    pub fixed_one: Vec<usize>,
    pub fixed_zero: Vec<usize>,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct MasterSolution {
    pub z: Vec<bool>,
    pub eta: f64,
    pub nodes_explored: usize,
}

const FREE: i8 = 0;
const ONE: i8 = 1;
const ZERO: i8 = -1;

/// Valid lower bound for a node's restricted problem: max over simplex
/// weights of sum(lambda_i a_i) + min over feasible z of (sum lambda_i g_i).z,
/// the inner minimum taken exactly (fixed ones plus the most negative free
/// coefficients within the remaining budget). Vertex weights seed a projected
/// supergradient ascent; any iteration count yields a valid bound.
pub fn node_lower_bound(mp: &MasterProblem, node: &BnbNode, dual_iters: usize) -> Result<f64> {
    let mut state = vec![FREE; mp.p];
    for &v in mp.forced_zero.iter().chain(&node.fixed_zero) {
        if v >= mp.p {
            return Err(SpcaError::InvalidParameter("fixing out of range".into()));
        }
        state[v] = ZERO;
    }
    for &v in &node.fixed_one {
        if v >= mp.p || state[v] == ZERO {
            return Err(SpcaError::InvalidParameter(
                "conflicting or out-of-range node fixings".into(),
            ));
        }
        state[v] = ONE;
    }
    if node.fixed_one.len() > mp.s {
        return Err(SpcaError::InvalidParameter(
            "node fixes more ones than the cardinality cap".into(),
        ));
    }
    validate(mp)?;
    let work = DualWork::new(mp);
    let mut ws = Scratch::new(&work);
    Ok(bound_state(&work, &state, None, dual_iters, None, &mut ws, None).bound)
}

/// Exact best-first branch-and-bound over the cut maximum.
pub fn solve_master(mp: &MasterProblem, gap_tol: f64) -> Result<MasterSolution> {
    validate(mp)?;
    if gap_tol < 0.0 {
        return Err(SpcaError::InvalidParameter("gap_tol must be >= 0".into()));
    }
    let p = mp.p;

    let mut root_state = vec![FREE; p];
    for &v in &mp.forced_zero {
        root_state[v] = ZERO;
    }

    let mut inc: Option<(f64, Vec<usize>)> = None;
    if let Some((z, _)) = &mp.incumbent {
        if z.len() == p {
            let support: Vec<usize> = (0..p).filter(|&v| z[v]).collect();
            let feasible = support.len() <= mp.s && support.iter().all(|&v| root_state[v] != ZERO);
            if feasible {
                consider(&mut inc, mp.value_at(&support), support);
            }
        }
    }

    let work = DualWork::new(mp);
    let mut ws = Scratch::new(&work);
    let mut root_dual = RootDual::new(&work);

    let mut heap: BinaryHeap<Entry> = BinaryHeap::new();
    let mut seq = 0usize;
    let root_target = inc.as_ref().map(|(eta, _)| *eta);
    let root = bound_state(
        &work,
        &root_state,
        None,
        ROOT_ITER_MULT * mp.dual_iters,
        root_target,
        &mut ws,
        Some(&mut root_dual),
    );
    consider(&mut inc, mp.value_at(&root.candidate), root.candidate);
    for &q in &root.fix_zero {
        root_state[q] = ZERO;
    }
    push_entry(
        &mut heap,
        &inc,
        root_state,
        root.bound,
        root.branch,
        0,
        &mut seq,
        true,
    );

    let mut explored = 0usize;
    while let Some(entry) = heap.pop() {
        let (inc_eta, _) = inc.as_ref().expect("incumbent set at root");
        if prunable(entry.bound, *inc_eta) {
            continue;
        }
        if gap_tol > 0.0 && inc_eta - entry.bound <= gap_tol * inc_eta.abs().max(1e-12) {
            break;
        }

        let ones: Vec<usize> = (0..p).filter(|&v| entry.state[v] == ONE).collect();
        let has_free = entry.state.contains(&FREE);
        if ones.len() >= mp.s || !has_free {
            explored += 1;
            if explored > mp.node_budget {
                return Err(budget_error(p, inc, entry.bound, explored - 1));
            }
            consider(&mut inc, mp.value_at(&ones), ones);
            continue;
        }

        // Children are pushed with a one-greedy bound; the full ascent runs
        // only when a node surfaces as the frontier minimum.
        if !entry.refined {
            let target = Some(*inc_eta);
            let info = bound_state(
                &work,
                &entry.state,
                Some(&root_dual),
                mp.dual_iters,
                target,
                &mut ws,
                None,
            );
            consider(&mut inc, mp.value_at(&info.candidate), info.candidate);
            let mut state = entry.state;
            for &q in &info.fix_zero {
                state[q] = ZERO;
            }
            let bound = info.bound.max(entry.bound);
            push_entry(
                &mut heap,
                &inc,
                state,
                bound,
                info.branch,
                entry.depth,
                &mut seq,
                true,
            );
            continue;
        }

        explored += 1;
        if explored > mp.node_budget {
            return Err(budget_error(p, inc, entry.bound, explored - 1));
        }

        let v = entry
            .branch
            .expect("refined non-leaf nodes carry a branch variable");
        for fix in [ONE, ZERO] {
            let mut state = entry.state.clone();
            state[v] = fix;
            let (qbound, qcand) = quick_bound(&work, &state, &root_dual, &mut ws);
            consider(&mut inc, mp.value_at(&qcand), qcand);
            // A child's true optimum is at least the parent's bound, so the
            // popped bound sequence stays monotone.
            let bound = qbound.max(entry.bound);
            push_entry(
                &mut heap,
                &inc,
                state,
                bound,
                None,
                entry.depth + 1,
                &mut seq,
                false,
            );
        }
    }

    let (eta, support) = inc.expect("incumbent set at root");
    Ok(MasterSolution {
        z: support_to_mask(p, &support),
        eta,
        nodes_explored: explored,
    })
}

/// Exhaustive reference solver with the same evaluation and tie-break.
pub fn milp_bruteforce(mp: &MasterProblem) -> Result<(Vec<bool>, f64)> {
    const MAX_P: usize = 20;
    if mp.p > MAX_P {
        return Err(SpcaError::BruteforceSize {
            p: mp.p,
            max: MAX_P,
        });
    }
    validate(mp)?;
    let mut forced = 0u32;
    for &v in &mp.forced_zero {
        forced |= 1 << v;
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..1u32 << mp.p {
        if mask.count_ones() as usize > mp.s || mask & forced != 0 {
            continue;
        }
        let support: Vec<usize> = (0..mp.p).filter(|&v| mask >> v & 1 == 1).collect();
        let eta = mp.value_at(&support);
        consider(&mut best, eta, support);
    }
    let (eta, support) = best.expect("the empty support is always feasible");
    Ok((support_to_mask(mp.p, &support), eta))
}

fn validate(mp: &MasterProblem) -> Result<()> {
    if mp.cuts.is_empty() {
        return Err(SpcaError::InvalidParameter(
            "master problem needs at least one cut".into(),
        ));
    }
    for cut in &mp.cuts {
        if cut.grad.len() != mp.p || cut.anchor.len() != mp.p {
            return Err(SpcaError::InvalidParameter(
                "cut dimension does not match the master problem".into(),
            ));
        }
    }
    if mp.forced_zero.iter().any(|&v| v >= mp.p) {
        return Err(SpcaError::InvalidParameter(
            "forced-zero index out of range".into(),
        ));
    }
    Ok(())
}

/// Incumbent update: smaller value wins, exact ties go to the
/// lexicographically smaller sorted support.
fn consider(best: &mut Option<(f64, Vec<usize>)>, eta: f64, support: Vec<usize>) {
    match best {
        None => *best = Some((eta, support)),
        Some((e, sup)) => {
            if eta < *e || (eta == *e && support < *sup) {
                *best = Some((eta, support));
            }
        }
    }
}

/// Nodes whose bound clears the incumbent by more than float noise cannot
/// contain a strictly better point; equal-bound nodes stay open so the
/// tie-break is exact.
fn prunable(bound: f64, inc_eta: f64) -> bool {
    bound - 1e-12 * (1.0 + bound.abs()) > inc_eta
}

fn support_to_mask(p: usize, support: &[usize]) -> Vec<bool> {
    let mut z = vec![false; p];
    for &v in support {
        z[v] = true;
    }
    z
}

fn budget_error(
    p: usize,
    inc: Option<(f64, Vec<usize>)>,
    lower_bound: f64,
    explored: usize,
) -> SpcaError {
    let (eta, support) = inc.expect("incumbent set at root");
    SpcaError::MasterBudget {
        z: support_to_mask(p, &support),
        eta,
        lower_bound,
        explored,
    }
}

/// Bound from one greedy pass against the precomputed root aggregate.
fn quick_bound(
    work: &DualWork,
    state: &[i8],
    rd: &RootDual,
    ws: &mut Scratch,
) -> (f64, Vec<usize>) {
    ws.ones.clear();
    ws.free.clear();
    for (v, &st) in state.iter().enumerate() {
        match st {
            ONE => ws.ones.push(v),
            FREE => ws.free.push(v),
            _ => {}
        }
    }
    let r = work.s.saturating_sub(ws.ones.len());
    let val = rd.base + greedy_min(&rd.c, &ws.ones, &ws.free, r, &mut ws.neg, &mut ws.chosen);
    (val, ws.chosen.clone())
}

/// Extra ascent steps granted to the root relative to `dual_iters`; the root
/// multipliers seed every other bound in the tree, and the ascent cost is
/// negligible next to the search itself.
const ROOT_ITER_MULT: usize = 40;

struct Entry {
    bound: f64,
    depth: usize,
    seq: usize,
    state: Vec<i8>,
    branch: Option<usize>,
    refined: bool,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed so BinaryHeap pops the smallest (bound, depth, seq).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.depth.cmp(&self.depth))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[allow(clippy::too_many_arguments)]
fn push_entry(
    heap: &mut BinaryHeap<Entry>,
    inc: &Option<(f64, Vec<usize>)>,
    state: Vec<i8>,
    bound: f64,
    branch: Option<usize>,
    depth: usize,
    seq: &mut usize,
    refined: bool,
) {
    if let Some((eta, _)) = inc {
        if prunable(bound, *eta) {
            return;
        }
    }
    heap.push(Entry {
        bound,
        depth,
        seq: *seq,
        state,
        branch,
        refined,
    });
    *seq += 1;
}

struct BoundInfo {
    bound: f64,
    /// Feasible support produced by the best inner minimization; doubles as a
    /// primal heuristic.
    candidate: Vec<usize>,
    branch: Option<usize>,
    /// Free variables provably absent from every support that beats the
    /// incumbent, given this node's fixings.
    fix_zero: Vec<usize>,
}

/// Multipliers shared across the tree. Any simplex point is dual feasible for
/// every node, so the root's best multipliers (with their precomputed
/// aggregate) give each child a first bound for the cost of one greedy pass.
struct RootDual {
    lambda: Vec<f64>,
    c: Vec<f64>,
    base: f64,
}

impl RootDual {
    fn new(work: &DualWork) -> Self {
        RootDual {
            lambda: vec![0.0; work.k()],
            c: vec![0.0; work.p],
            base: 0.0,
        }
    }
}

/// Cut data flattened into one contiguous block so the bound loops stay tight.
struct DualWork {
    p: usize,
    s: usize,
    g: Vec<f64>,
    offsets: Vec<f64>,
}

impl DualWork {
    fn new(mp: &MasterProblem) -> Self {
        let mut g = Vec::with_capacity(mp.cuts.len() * mp.p);
        let mut offsets = Vec::with_capacity(mp.cuts.len());
        for cut in &mp.cuts {
            g.extend_from_slice(cut.grad.as_slice().expect("gradients are contiguous"));
            offsets.push(cut.offset);
        }
        DualWork {
            p: mp.p,
            s: mp.s,
            g,
            offsets,
        }
    }

    fn k(&self) -> usize {
        self.offsets.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.g[i * self.p..(i + 1) * self.p]
    }
}

/// Buffers reused across every bound evaluation of one solve.
struct Scratch {
    ones: Vec<usize>,
    free: Vec<usize>,
    agg: Vec<f64>,
    lambda: Vec<f64>,
    lambda_best: Vec<f64>,
    d: Vec<f64>,
    neg: Vec<usize>,
    chosen: Vec<usize>,
}

impl Scratch {
    fn new(work: &DualWork) -> Self {
        Scratch {
            ones: Vec::with_capacity(work.p),
            free: Vec::with_capacity(work.p),
            agg: vec![0.0; work.p],
            lambda: vec![0.0; work.k()],
            lambda_best: vec![0.0; work.k()],
            d: vec![0.0; work.k()],
            neg: Vec::with_capacity(work.p),
            chosen: Vec::with_capacity(work.p),
        }
    }
}

/// Dual bound at one node. A cold start sweeps the simplex vertices and
/// ascends from the best one; a warm start reuses the root aggregate for its
/// first evaluation and refines from the root multipliers. When a target
/// (the incumbent) is known, steps follow the Polyak rule aimed at it and the
/// ascent stops as soon as the node is provably prunable.
fn bound_state(
    work: &DualWork,
    state: &[i8],
    warm: Option<&RootDual>,
    iters: usize,
    target: Option<f64>,
    ws: &mut Scratch,
    root_out: Option<&mut RootDual>,
) -> BoundInfo {
    let k = work.k();
    ws.ones.clear();
    ws.free.clear();
    for (v, &st) in state.iter().enumerate() {
        match st {
            ONE => ws.ones.push(v),
            FREE => ws.free.push(v),
            _ => {}
        }
    }
    let r = work.s.saturating_sub(ws.ones.len());

    let mut bound;
    let mut candidate = ws.ones.clone();
    let mut phi_cur;
    match warm {
        Some(rd) => {
            phi_cur =
                rd.base + greedy_min(&rd.c, &ws.ones, &ws.free, r, &mut ws.neg, &mut ws.chosen);
            bound = phi_cur;
            candidate.clear();
            candidate.extend_from_slice(&ws.chosen);
            if let Some(tg) = target {
                if prunable(bound, tg) {
                    return BoundInfo {
                        bound,
                        candidate,
                        branch: None,
                        fix_zero: Vec::new(),
                    };
                }
            }
            ws.lambda.copy_from_slice(&rd.lambda);
        }
        None => {
            bound = f64::NEG_INFINITY;
            let mut best_vertex = 0;
            for i in 0..k {
                let val = work.offsets[i]
                    + greedy_min(
                        work.row(i),
                        &ws.ones,
                        &ws.free,
                        r,
                        &mut ws.neg,
                        &mut ws.chosen,
                    );
                if val > bound {
                    bound = val;
                    candidate.clear();
                    candidate.extend_from_slice(&ws.chosen);
                    best_vertex = i;
                }
            }
            for li in ws.lambda.iter_mut() {
                *li = 0.0;
            }
            ws.lambda[best_vertex] = 1.0;
            phi_cur = work.offsets[best_vertex]
                + greedy_min(
                    work.row(best_vertex),
                    &ws.ones,
                    &ws.free,
                    r,
                    &mut ws.neg,
                    &mut ws.chosen,
                );
        }
    }
    ws.lambda_best.copy_from_slice(&ws.lambda);

    let mut early_prune = false;
    if k > 1 && iters > 0 {
        // Polyak steps toward a level slightly above the best dual value seen;
        // the level offset halves whenever progress stalls and re-expands on
        // improvement, so the ascent neither oscillates nor freezes.
        let floor = 1e-7 * (1.0 + bound.abs());
        let cap = match target {
            Some(tg) => (tg - bound).max(floor),
            None => 0.1 * bound.abs() + 1.0,
        };
        let mut delta = cap;
        let mut fails = 0u32;
        let mut since_best = 0u32;
        for _ in 1..=iters {
            for i in 0..k {
                let row = work.row(i);
                ws.d[i] = work.offsets[i] + ws.chosen.iter().map(|&v| row[v]).sum::<f64>();
            }
            let dn2 = ws.d.iter().map(|x| x * x).sum::<f64>();
            if dn2 == 0.0 {
                break;
            }
            let step = (bound + delta - phi_cur) / dn2;
            for (li, di) in ws.lambda.iter_mut().zip(&ws.d) {
                *li += step * di;
            }
            project_simplex(&mut ws.lambda);

            let mut base = 0.0;
            for a in ws.agg.iter_mut() {
                *a = 0.0;
            }
            for i in 0..k {
                let li = ws.lambda[i];
                if li != 0.0 {
                    base += li * work.offsets[i];
                    for (a, g) in ws.agg.iter_mut().zip(work.row(i)) {
                        *a += li * g;
                    }
                }
            }
            phi_cur =
                base + greedy_min(&ws.agg, &ws.ones, &ws.free, r, &mut ws.neg, &mut ws.chosen);
            if phi_cur > bound {
                bound = phi_cur;
                candidate.clear();
                candidate.extend_from_slice(&ws.chosen);
                ws.lambda_best.copy_from_slice(&ws.lambda);
                fails = 0;
                since_best = 0;
                delta = (delta * 2.0).min(cap);
            } else {
                fails += 1;
                if fails >= 2 {
                    delta = (delta * 0.5).max(floor);
                    fails = 0;
                }
                since_best += 1;
                if since_best >= 25 {
                    ws.lambda.copy_from_slice(&ws.lambda_best);
                    ws.chosen.clear();
                    ws.chosen.extend_from_slice(&candidate);
                    phi_cur = bound;
                    since_best = 0;
                }
            }
            if let Some(tg) = target {
                if prunable(bound, tg) {
                    early_prune = true;
                    break;
                }
            }
        }
    }
    if early_prune {
        return BoundInfo {
            bound,
            candidate,
            branch: None,
            fix_zero: Vec::new(),
        };
    }

    // Rebuild the aggregate at the best multipliers; it feeds the branch
    // choice, the exclusion tests, and the shared warm start.
    let mut base_best = 0.0;
    for a in ws.agg.iter_mut() {
        *a = 0.0;
    }
    for i in 0..k {
        let li = ws.lambda_best[i];
        if li != 0.0 {
            base_best += li * work.offsets[i];
            for (a, g) in ws.agg.iter_mut().zip(work.row(i)) {
                *a += li * g;
            }
        }
    }
    let phi_best =
        base_best + greedy_min(&ws.agg, &ws.ones, &ws.free, r, &mut ws.neg, &mut ws.chosen);
    debug_assert!((phi_best - bound).abs() <= 1e-9 * (1.0 + bound.abs()));

    let mut branch = None;
    let mut best_c = f64::INFINITY;
    for &v in &candidate {
        if state[v] == FREE && ws.agg[v] < best_c {
            best_c = ws.agg[v];
            branch = Some(v);
        }
    }
    if branch.is_none() {
        for &v in &ws.free {
            if ws.agg[v] < best_c {
                best_c = ws.agg[v];
                branch = Some(v);
            }
        }
    }

    let mut fix_zero = Vec::new();
    if let Some(tg) = target {
        let slots_full = ws.neg.len() == r;
        let tau = ws
            .neg
            .iter()
            .map(|&v| ws.agg[v])
            .fold(f64::NEG_INFINITY, f64::max);
        for &v in &ws.free {
            if ws.neg.contains(&v) {
                continue;
            }
            let forced = phi_best + ws.agg[v] - if slots_full { tau } else { 0.0 };
            if prunable(forced, tg) {
                fix_zero.push(v);
            }
        }
    }

    if let Some(rd) = root_out {
        rd.lambda.copy_from_slice(&ws.lambda_best);
        rd.c.copy_from_slice(&ws.agg);
        rd.base = base_best;
    }
    BoundInfo {
        bound,
        candidate,
        branch,
        fix_zero,
    }
}

/// Exact minimum of agg . z over binary z with the given fixings and at most
/// r additional ones: take every fixed-one coordinate, then the r most
/// negative free coefficients. Fills `chosen` with the selected support and
/// returns the value.
fn greedy_min(
    agg: &[f64],
    ones: &[usize],
    free: &[usize],
    r: usize,
    neg: &mut Vec<usize>,
    chosen: &mut Vec<usize>,
) -> f64 {
    let mut val: f64 = ones.iter().map(|&v| agg[v]).sum();
    neg.clear();
    neg.extend(free.iter().copied().filter(|&v| agg[v] < 0.0));
    if neg.len() > r {
        neg.sort_unstable_by(|&a, &b| agg[a].total_cmp(&agg[b]).then(a.cmp(&b)));
        neg.truncate(r);
    }
    neg.sort_unstable();
    for &v in neg.iter() {
        val += agg[v];
    }
    chosen.clear();
    chosen.extend_from_slice(ones);
    chosen.extend_from_slice(neg);
    chosen.sort_unstable();
    val
}

fn project_simplex(x: &mut [f64]) {
    let mut sorted = x.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if u - t > 0.0 {
            theta = t;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn mp_with(p: usize, s: usize, cuts: Vec<Cut>) -> MasterProblem {
        let mut mp = MasterProblem::new(p, s);
        for c in cuts {
            mp.add_cut(c);
        }
        mp
    }

    fn raw_cut(p: usize, offset: f64, grad: Vec<f64>) -> Cut {
        Cut {
            anchor: vec![false; p],
            value: offset,
            grad: Array1::from_vec(grad),
            offset,
        }
    }

    #[test]
    fn offset_recomputes_from_anchor() {
        let anchor = vec![true, false, true];
        let grad = array![0.5, -2.0, 1.5];
        let cut = Cut::new(anchor.clone(), 3.0, grad.clone());
        let at_anchor: f64 = anchor
            .iter()
            .enumerate()
            .filter(|(_, on)| **on)
            .map(|(v, _)| grad[v])
            .sum();
        assert!((cut.offset + at_anchor - cut.value).abs() < 1e-10);
    }

    #[test]
    fn two_cut_tie_breaks_to_smallest_support() {
        let cuts = vec![
            raw_cut(2, 0.0, vec![-1.0, -3.0]),
            raw_cut(2, -1.0, vec![0.0, 0.0]),
        ];
        let mp = mp_with(2, 1, cuts);
        let sol = solve_master(&mp, 0.0).expect("solvable");
        assert_eq!(sol.eta, -1.0);
        assert_eq!(sol.z, vec![true, false]);
        let (zb, eb) = milp_bruteforce(&mp).expect("small");
        assert_eq!(zb, sol.z);
        assert_eq!(eb, sol.eta);
    }

    #[test]
    fn positive_gradients_turn_everything_off() {
        let mp = mp_with(3, 2, vec![raw_cut(3, 0.7, vec![1.0, 2.0, 0.5])]);
        let sol = solve_master(&mp, 0.0).expect("solvable");
        assert_eq!(sol.z, vec![false; 3]);
        assert_eq!(sol.eta, 0.7);
    }

    #[test]
    fn single_cut_root_bound_is_exact() {
        let mp = mp_with(4, 2, vec![raw_cut(4, 1.0, vec![-3.0, 2.0, -1.0, -0.5])]);
        let node = BnbNode {
            fixed_one: vec![],
            fixed_zero: vec![],
            bound: f64::NEG_INFINITY,
        };
        let bound = node_lower_bound(&mp, &node, 50).expect("valid node");
        let sol = solve_master(&mp, 0.0).expect("solvable");
        assert!((bound - sol.eta).abs() < 1e-12);
        assert_eq!(sol.eta, 1.0 - 3.0 - 1.0);
    }

    #[test]
    fn duplicate_cuts_do_not_change_the_bound() {
        let single = mp_with(4, 2, vec![raw_cut(4, 1.0, vec![-3.0, 2.0, -1.0, -0.5])]);
        let doubled = mp_with(
            4,
            2,
            vec![
                raw_cut(4, 1.0, vec![-3.0, 2.0, -1.0, -0.5]),
                raw_cut(4, 1.0, vec![-3.0, 2.0, -1.0, -0.5]),
            ],
        );
        let node = BnbNode {
            fixed_one: vec![],
            fixed_zero: vec![],
            bound: f64::NEG_INFINITY,
        };
        let a = node_lower_bound(&single, &node, 50).expect("valid");
        let b = node_lower_bound(&doubled, &node, 50).expect("valid");
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn cardinality_zero_keeps_only_the_origin() {
        let mp = mp_with(
            3,
            0,
            vec![
                raw_cut(3, -2.0, vec![-1.0, -1.0, -1.0]),
                raw_cut(3, -5.0, vec![0.0, 0.0, 0.0]),
            ],
        );
        let sol = solve_master(&mp, 0.0).expect("solvable");
        assert_eq!(sol.z, vec![false; 3]);
        assert_eq!(sol.eta, -2.0);
        let (_, eb) = milp_bruteforce(&mp).expect("small");
        assert_eq!(eb, -2.0);
    }

    #[test]
    fn zero_gradient_cut_evaluates_at_origin() {
        let mp = mp_with(3, 2, vec![raw_cut(3, 4.2, vec![0.0, 0.0, 0.0])]);
        let (z, eta) = milp_bruteforce(&mp).expect("small");
        assert_eq!(z, vec![false; 3]);
        assert_eq!(eta, 4.2);
    }

    #[test]
    fn forced_zero_variables_stay_off() {
        let mut mp = mp_with(3, 2, vec![raw_cut(3, 0.0, vec![-5.0, -1.0, -3.0])]);
        mp.forced_zero = vec![0];
        let sol = solve_master(&mp, 0.0).expect("solvable");
        assert_eq!(sol.z, vec![false, true, true]);
        assert_eq!(sol.eta, -4.0);
        let (zb, eb) = milp_bruteforce(&mp).expect("small");
        assert_eq!(zb, sol.z);
        assert_eq!(eb, sol.eta);
    }

    #[test]
    fn budget_exhaustion_reports_a_valid_bound() {
        let cuts = vec![
            raw_cut(6, 0.0, vec![-1.0, -2.0, -3.0, -0.5, -1.5, -2.5]),
            raw_cut(6, -1.0, vec![-2.0, -0.1, -0.2, -3.0, -0.3, -0.4]),
            raw_cut(6, 2.0, vec![-4.0, -4.0, 0.0, 0.0, -4.0, 0.0]),
        ];
        let mut mp = mp_with(6, 3, cuts);
        mp.node_budget = 1;
        mp.dual_iters = 2;
        let err = solve_master(&mp, 0.0).expect_err("budget too small");
        let SpcaError::MasterBudget {
            z,
            eta,
            lower_bound,
            ..
        } = err
        else {
            panic!("expected a budget error");
        };
        mp.node_budget = 200_000;
        let exact = solve_master(&mp, 0.0).expect("solvable");
        assert!(lower_bound <= exact.eta + 1e-12);
        assert!(eta >= exact.eta - 1e-12);
        let support: Vec<usize> = (0..6).filter(|&v| z[v]).collect();
        assert!(support.len() <= 3);
    }

    #[test]
    fn deterministic_across_repeat_solves() {
        let cuts = vec![
            raw_cut(5, 0.3, vec![-1.0, 2.0, -3.0, 0.5, -1.5]),
            raw_cut(5, -0.7, vec![0.2, -2.0, -0.2, -3.0, 0.3]),
        ];
        let mp = mp_with(5, 2, cuts);
        let a = solve_master(&mp, 0.0).expect("solvable");
        let b = solve_master(&mp, 0.0).expect("solvable");
        assert_eq!(a.z, b.z);
        assert_eq!(a.eta, b.eta);
        assert_eq!(a.nodes_explored, b.nodes_explored);
    }
}
