//! James tree norm as a combinatorial optimization.
//!
//! The norm of a finitely supported vector on the dyadic tree is the
//! supremum of `sqrt(sum_j (sum_{node in S_j} x(node))^2)` over families of
//! pairwise disjoint segments (chains of immediate successors). Two exact
//! routes are provided: a brute-force enumeration of disjoint families
//! (the oracle, capped at support size 14) and a bottom-up dynamic program
//! whose state is the best subtree value as a function of the incoming
//! open-segment partial sum, kept as a pruned set of quadratics
//! `(s + a)^2 + b`.

use crate::rat::Rat;
use crate::spaces::{DyadicNode, Index, IndexUniverse, NormValue, SparseVector};
use crate::{Error, Result};
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

pub const BRUTE_FORCE_SUPPORT_CAP: usize = 14;
pub const DP_LEVEL_CAP: u32 = 24;

/// A maximal-information chain of tree nodes, top to bottom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Segment {
    nodes: Vec<DyadicNode>,
}

impl Segment {
    pub fn new(nodes: Vec<DyadicNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Invalid("empty segment".into()));
        }
        for w in nodes.windows(2) {
            if !w[1].is_child_of(&w[0]) {
                return Err(Error::Invalid(format!(
                    "segment break: {} is not an immediate successor of {}",
                    w[1], w[0]
                )));
            }
        }
        Ok(Segment { nodes })
    }

    /// The chain from `top` down to `bottom`; `top` must be an ancestor.
    pub fn between(top: DyadicNode, bottom: DyadicNode) -> Result<Self> {
        if !top.is_ancestor_of(&bottom) {
            return Err(Error::Invalid(format!("{top} is not an ancestor of {bottom}")));
        }
        let mut chain = vec![bottom];
        let mut cur = bottom;
        while cur != top {
            cur = cur.parent().expect("ancestor chain reaches the root");
            chain.push(cur);
        }
        chain.reverse();
        Ok(Segment { nodes: chain })
    }

    pub fn nodes(&self) -> &[DyadicNode] {
        &self.nodes
    }
}

/// Pairwise node-disjoint list of segments.
#[derive(Debug, Clone, Default)]
pub struct SegmentFamily {
    pub segments: Vec<Segment>,
}

impl SegmentFamily {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for seg in &segments {
            for n in seg.nodes() {
                if !seen.insert(*n) {
                    return Err(Error::Invalid(format!("segments overlap at {n}")));
                }
            }
        }
        Ok(SegmentFamily { segments })
    }
}

fn support_nodes(v: &SparseVector) -> Result<Vec<(DyadicNode, Rat)>> {
    let mut out = Vec::new();
    for (idx, val) in v.entries() {
        match idx {
            Index::Node(n) => out.push((*n, val.clone())),
            other => {
                return Err(Error::IndexOutOfUniverse(
                    other.to_string(),
                    "dyadic tree".into(),
                ))
            }
        }
    }
    Ok(out)
}

/// Union of root paths of the support, as a sorted node list.
fn relevant_nodes(support: &[DyadicNode]) -> Vec<DyadicNode> {
    let mut set = BTreeSet::new();
    for n in support {
        let mut cur = *n;
        loop {
            if !set.insert(cur) {
                break;
            }
            match cur.parent() {
                Some(p) => cur = p,
                None => break,
            }
        }
    }
    set.into_iter().collect()
}

/// All segments with both endpoints on root-to-support paths that
/// intersect the support.
pub fn enumerate_segments(
    support: &BTreeSet<DyadicNode>,
    max_level: u32,
) -> Result<Vec<Segment>> {
    for n in support {
        if n.level > max_level {
            return Err(Error::LevelTooLarge(n.level, max_level));
        }
    }
    let sup: Vec<DyadicNode> = support.iter().copied().collect();
    let rel = relevant_nodes(&sup);
    let mut out = Vec::new();
    for top in &rel {
        for bottom in &rel {
            if top.is_ancestor_of(bottom) {
                let seg = Segment::between(*top, *bottom)?;
                if seg.nodes().iter().any(|n| support.contains(n)) {
                    out.push(seg);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

// ---------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------

struct BruteCtx {
    /// per support node: candidate segments whose minimal support node is
    /// that node, as (node bitmask over support order, squared sum)
    options: Vec<Vec<(u128, Rat)>>,
    best: Rat,
    best_family: Vec<usize>, // flat encoding: (support idx, option idx)
    chosen: Vec<(usize, usize)>,
    best_chosen: Vec<(usize, usize)>,
}

/// Exact JT norm by enumerating disjoint segment families; the segments
/// are trimmed so both endpoints carry support (trimming removes only
/// zero-valued nodes and relaxes no constraint).
pub fn jt_norm_bruteforce(v: &SparseVector) -> Result<NormValue> {
    Ok(jt_norm_bruteforce_with_witness(v)?.0)
}

pub fn jt_norm_bruteforce_with_witness(v: &SparseVector) -> Result<(NormValue, SegmentFamily)> {
    if !matches!(v.universe, IndexUniverse::DyadicTree(_)) {
        return Err(Error::IncompatibleSpace(v.universe.to_string(), "jt".into()));
    }
    let entries = support_nodes(v)?;
    if entries.len() > BRUTE_FORCE_SUPPORT_CAP {
        return Err(Error::SupportTooLarge(entries.len(), BRUTE_FORCE_SUPPORT_CAP));
    }
    if entries.is_empty() {
        return Ok((NormValue::zero(), SegmentFamily::default()));
    }

    let sup: Vec<DyadicNode> = entries.iter().map(|(n, _)| *n).collect();
    let value_of = |n: &DyadicNode| -> Rat {
        entries
            .iter()
            .find(|(m, _)| m == n)
            .map(|(_, v)| v.clone())
            .unwrap_or_else(Rat::zero)
    };
    // bit positions over the relevant node set (paths can pass through
    // zero-valued interior nodes, which still block disjointness)
    let rel = relevant_nodes(&sup);
    let bit_of: BTreeMap<DyadicNode, usize> =
        rel.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    assert!(rel.len() <= 128, "relevant tree exceeds mask width");

    // trimmed segments grouped by their minimal support node
    let mut options: Vec<Vec<(u128, Rat)>> = vec![Vec::new(); sup.len()];
    let mut seg_nodes: Vec<Vec<(usize, usize, Segment)>> = vec![Vec::new(); sup.len()];
    for top in sup.iter() {
        for bottom in sup.iter() {
            if !top.is_ancestor_of(bottom) {
                continue;
            }
            let seg = Segment::between(*top, *bottom)?;
            let mut mask = 0u128;
            let mut sum = Rat::zero();
            for n in seg.nodes() {
                mask |= 1u128 << bit_of[n];
                sum += value_of(n);
            }
            // owner: first support node (in `sup` order) on the segment;
            // disjoint segments have distinct owners, so branching on the
            // owner enumerates every disjoint family exactly once
            let owner = sup
                .iter()
                .position(|s| seg.nodes().contains(s))
                .expect("segment touches support");
            let sq = &sum * &sum;
            let opt_idx = options[owner].len();
            options[owner].push((mask, sq));
            seg_nodes[owner].push((owner, opt_idx, seg));
        }
    }

    let mut ctx = BruteCtx {
        options,
        best: Rat::zero(),
        best_family: Vec::new(),
        chosen: Vec::new(),
        best_chosen: Vec::new(),
    };
    brute_rec(&mut ctx, 0, 0u128, Rat::zero());
    let _ = &ctx.best_family;

    let mut segs = Vec::new();
    for (owner, opt) in &ctx.best_chosen {
        if let Some((_, _, seg)) = seg_nodes[*owner].iter().find(|(_, o, _)| o == opt) {
            segs.push(seg.clone());
        }
    }
    let family = SegmentFamily::new(segs)?;
    Ok((NormValue::square(ctx.best), family))
}

fn brute_rec(ctx: &mut BruteCtx, i: usize, used: u128, acc: Rat) {
    if i == ctx.options.len() {
        if acc > ctx.best {
            ctx.best = acc;
            ctx.best_chosen = ctx.chosen.clone();
        }
        return;
    }
    // support node i left uncovered (it may still be swallowed by a
    // segment owned by an earlier node, in which case `used` has its bit)
    brute_rec(ctx, i + 1, used, acc.clone());
    let opts = ctx.options[i].clone();
    for (k, (mask, sq)) in opts.iter().enumerate() {
        if mask & used == 0 {
            ctx.chosen.push((i, k));
            brute_rec(ctx, i + 1, used | mask, &acc + sq);
            ctx.chosen.pop();
        }
    }
}

// ---------------------------------------------------------------------
// Dynamic program
// ---------------------------------------------------------------------

/// Scalar abstraction so the same DP runs on exact rationals and on the
/// fast integer path used by tag searches.
pub trait DpNum: Clone + Ord {
    fn dp_zero() -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self {
        let n = self.neg();
        if *self >= n {
            self.clone()
        } else {
            n
        }
    }
    fn sq(&self) -> Self {
        self.mul(self)
    }
}

impl DpNum for i128 {
    fn dp_zero() -> Self {
        0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
}

impl DpNum for Rat {
    fn dp_zero() -> Self {
        <Rat as Zero>::zero()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
}

struct DpCtx<T> {
    values: BTreeMap<DyadicNode, T>,
    rel: BTreeSet<DyadicNode>,
    /// bound on |partial sum| along any chain, used for dominance pruning
    bound: T,
    prune: bool,
}

/// one subtree result: closed best, and open candidates (a, b) meaning
/// `(s + a)^2 + b` for incoming partial sum `s`
struct SubResult<T> {
    closed: T,
    open: Vec<(T, T)>,
}

fn quad_at<T: DpNum>(s: &T, a: &T, b: &T) -> T {
    s.add(a).sq().add(b)
}

fn prune_open<T: DpNum>(ctx: &DpCtx<T>, mut open: Vec<(T, T)>) -> Vec<(T, T)> {
    if !ctx.prune || open.len() <= 1 {
        return open;
    }
    // dedupe equal slopes, keeping the best offset
    open.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
    open.dedup_by(|next, prev| next.0 == prev.0);
    // dominance on the reachable range s in [-M, M]: the difference of two
    // candidates is linear in s, so endpoint checks suffice
    let lo = ctx.bound.neg();
    let hi = ctx.bound.clone();
    let mut keep: Vec<(T, T)> = Vec::with_capacity(open.len());
    'outer: for (a, b) in open.iter() {
        for (a2, b2) in open.iter() {
            if (a2, b2) == (a, b) {
                continue;
            }
            let dom_lo = quad_at(&lo, a2, b2) >= quad_at(&lo, a, b);
            let dom_hi = quad_at(&hi, a2, b2) >= quad_at(&hi, a, b);
            let strictly_better = quad_at(&lo, a2, b2) > quad_at(&lo, a, b)
                || quad_at(&hi, a2, b2) > quad_at(&hi, a, b);
            if dom_lo && dom_hi && (strictly_better || (a2, b2) < (a, b)) {
                continue 'outer;
            }
        }
        keep.push((a.clone(), b.clone()));
    }
    keep
}

fn dp_rec<T: DpNum>(ctx: &DpCtx<T>, node: DyadicNode) -> SubResult<T> {
    let x = ctx
        .values
        .get(&node)
        .cloned()
        .unwrap_or_else(T::dp_zero);
    let kids: Vec<DyadicNode> = [node.left_child(), node.right_child()]
        .into_iter()
        .filter(|c| ctx.rel.contains(c))
        .collect();
    let results: Vec<SubResult<T>> = kids.iter().map(|c| dp_rec(ctx, *c)).collect();

    let mut open: Vec<(T, T)> = Vec::new();
    let (closed_kids, o_candidates): (T, Vec<(T, T)>) = match results.as_slice() {
        [] => (T::dp_zero(), Vec::new()),
        [only] => (only.closed.clone(), only.open.clone()),
        [l, r] => {
            let both = l.closed.add(&r.closed);
            let mut cands = Vec::new();
            for (a, b) in &l.open {
                cands.push((a.clone(), b.add(&r.closed)));
            }
            for (a, b) in &r.open {
                cands.push((a.clone(), b.add(&l.closed)));
            }
            (both, cands)
        }
        _ => unreachable!(),
    };

    // open segment through this node, continuing into a child
    for (a, b) in &o_candidates {
        open.push((x.add(a), b.clone()));
    }
    // open segment ending here
    open.push((x.clone(), closed_kids.clone()));
    let open = prune_open(ctx, open);

    // closed: node unused, or a segment starting at this node (s = 0)
    let mut closed = closed_kids;
    let zero = T::dp_zero();
    for (a, b) in &open {
        let v = quad_at(&zero, a, b);
        if v > closed {
            closed = v;
        }
    }
    SubResult { closed, open }
}

fn dp_run<T: DpNum>(entries: Vec<(DyadicNode, T)>, prune: bool) -> T {
    if entries.is_empty() {
        return T::dp_zero();
    }
    let sup: Vec<DyadicNode> = entries.iter().map(|(n, _)| *n).collect();
    let rel: BTreeSet<DyadicNode> = relevant_nodes(&sup).into_iter().collect();
    let mut bound = T::dp_zero();
    let mut values = BTreeMap::new();
    for (n, v) in entries {
        bound = bound.add(&v.abs());
        values.insert(n, v);
    }
    let ctx = DpCtx { values, rel, bound, prune };
    let root = DyadicNode { level: 0, pos: 1 };
    dp_rec(&ctx, root).closed
}

/// Exact JT norm via the pruned dynamic program.
pub fn jt_norm_dp(v: &SparseVector) -> Result<NormValue> {
    jt_norm_dp_opts(v, true)
}

/// Same DP with pruning optionally disabled (used to certify that the
/// pruning is lossless).
pub fn jt_norm_dp_opts(v: &SparseVector, prune: bool) -> Result<NormValue> {
    match &v.universe {
        IndexUniverse::DyadicTree(l) => {
            if *l > DP_LEVEL_CAP {
                return Err(Error::LevelTooLarge(*l, DP_LEVEL_CAP));
            }
        }
        u => return Err(Error::IncompatibleSpace(u.to_string(), "jt".into())),
    }
    let entries = support_nodes(v)?;
    Ok(NormValue::square(dp_run(entries, prune)))
}

/// Fast integer path: squared JT norm of an integer-valued node list.
/// Used by tag searches where all coefficients share a power-of-two
/// denominator; the certified value is recomputed exactly afterwards.
pub fn jt_norm_sq_int(entries: &[(DyadicNode, i128)]) -> i128 {
    dp_run(
        entries.iter().filter(|(_, v)| *v != 0).copied().collect(),
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_i;
    use crate::spaces::Certificate;

    fn vec_of(l: u32, entries: &[(u32, u64, i64)]) -> SparseVector {
        SparseVector::from_entries(
            IndexUniverse::DyadicTree(l),
            entries
                .iter()
                .map(|(n, k, v)| (Index::Node(DyadicNode::new(*n, *k).unwrap()), rat_i(*v))),
        )
        .unwrap()
    }

    fn nd(n: u32, k: u64) -> DyadicNode {
        DyadicNode::new(n, k).unwrap()
    }

    #[test]
    fn enumerate_segments_examples() {
        let sup: BTreeSet<DyadicNode> = [nd(0, 1)].into();
        let segs = enumerate_segments(&sup, 3).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].nodes(), &[nd(0, 1)]);

        let sup: BTreeSet<DyadicNode> = [nd(1, 1)].into();
        let segs = enumerate_segments(&sup, 1).unwrap();
        assert_eq!(segs.len(), 2);

        let sup: BTreeSet<DyadicNode> = [nd(1, 1), nd(1, 2)].into();
        let segs = enumerate_segments(&sup, 1).unwrap();
        assert_eq!(segs.len(), 4);

        let sup: BTreeSet<DyadicNode> = [nd(4, 1)].into();
        assert!(enumerate_segments(&sup, 3).is_err());
    }

    #[test]
    fn bruteforce_examples() {
        let v = vec_of(1, &[(0, 1, 1)]);
        assert_eq!(
            jt_norm_bruteforce(&v).unwrap().certificate,
            Certificate::ExactSquare(rat_i(1))
        );

        // (0,1),(1,1),(1,2) all ones: best family squares to 5
        let v = vec_of(1, &[(0, 1, 1), (1, 1, 1), (1, 2, 1)]);
        assert_eq!(
            jt_norm_bruteforce(&v).unwrap().certificate,
            Certificate::ExactSquare(rat_i(5))
        );

        // e_(1,1) - e_(1,2): two singletons
        let v = vec_of(1, &[(1, 1, 1), (1, 2, -1)]);
        assert_eq!(
            jt_norm_bruteforce(&v).unwrap().certificate,
            Certificate::ExactSquare(rat_i(2))
        );
    }

    #[test]
    fn bruteforce_witness_is_disjoint_and_matches() {
        let v = vec_of(2, &[(0, 1, 2), (1, 1, -1), (2, 2, 3), (2, 4, 1)]);
        let (n, fam) = jt_norm_bruteforce_with_witness(&v).unwrap();
        // witness family value equals the certificate
        let mut total = Rat::zero();
        for seg in &fam.segments {
            let mut s = Rat::zero();
            for node in seg.nodes() {
                s += v.get(&Index::Node(*node));
            }
            total += &s * &s;
        }
        assert_eq!(n.certificate, Certificate::ExactSquare(total));
    }

    #[test]
    fn bruteforce_support_cap() {
        let entries: Vec<(u32, u64, i64)> = (1..=15).map(|k| (4u32, k as u64, 1i64)).collect();
        let v = vec_of(4, &entries);
        assert!(matches!(
            jt_norm_bruteforce(&v),
            Err(Error::SupportTooLarge(15, 14))
        ));
    }

    #[test]
    fn dp_examples() {
        let v = vec_of(0, &[(0, 1, 1)]);
        assert_eq!(
            jt_norm_dp(&v).unwrap().certificate,
            Certificate::ExactSquare(rat_i(1))
        );
        // chain of three ones down one branch: single segment sums to 3
        let v = vec_of(2, &[(0, 1, 1), (1, 2, 1), (2, 3, 1)]);
        assert_eq!(
            jt_norm_dp(&v).unwrap().certificate,
            Certificate::ExactSquare(rat_i(9))
        );
    }

    #[test]
    fn dp_matches_bruteforce_small() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n_sup = rng.gen_range(1..=8);
            let mut entries = Vec::new();
            for _ in 0..n_sup {
                let level = rng.gen_range(0..=4u32);
                let pos = rng.gen_range(1..=(1u64 << level));
                let val = loop {
                    let v = rng.gen_range(-3i64..=3);
                    if v != 0 {
                        break v;
                    }
                };
                entries.push((level, pos, val));
            }
            let v = vec_of(4, &entries);
            let bf = jt_norm_bruteforce(&v).unwrap();
            let dp = jt_norm_dp(&v).unwrap();
            let dp_raw = jt_norm_dp_opts(&v, false).unwrap();
            assert_eq!(bf.certificate, dp.certificate, "entries {entries:?}");
            assert_eq!(dp.certificate, dp_raw.certificate, "entries {entries:?}");
        }
    }

    #[test]
    fn sign_flip_invariance() {
        let v = vec_of(3, &[(0, 1, 2), (1, 1, -3), (3, 5, 1)]);
        let flipped = v.scale(&rat_i(-1));
        assert_eq!(
            jt_norm_dp(&v).unwrap().certificate,
            jt_norm_dp(&flipped).unwrap().certificate
        );
    }

    #[test]
    fn integer_fast_path_agrees() {
        let entries = [(nd(0, 1), 3i128), (nd(1, 2), -2), (nd(2, 4), 5), (nd(2, 1), 1)];
        let sq = jt_norm_sq_int(&entries);
        let v = vec_of(
            2,
            &[(0, 1, 3), (1, 2, -2), (2, 4, 5), (2, 1, 1)],
        );
        assert_eq!(
            jt_norm_dp(&v).unwrap().certificate,
            Certificate::ExactSquare(rat_i(sq as i64))
        );
    }

    #[test]
    fn level_cap_enforced() {
        let v = SparseVector::zero(IndexUniverse::DyadicTree(25));
        assert!(matches!(jt_norm_dp(&v), Err(Error::LevelTooLarge(25, 24))));
    }
}
