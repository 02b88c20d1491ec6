//! The constructed counterexample functions and their certified bounds:
//! the dyadic-tree function with its special partitions, the fat and null
//! Cantor sets, characteristic families over translated Cantor sets, and
//! the Kadets-style rescaled-bump function with its adversarial taggings.

use crate::exec;
use crate::intervals::{Interval, IntervalSet};
use crate::jt_norm::{jt_norm_dp, jt_norm_sq_int};
use crate::partitions::{IntervalValueSummary, Partition, PointFunction, TaggedPartition};
use crate::rat::{fmt_rat, odd_dyadic, pow2, pow_u, rat, rat_i, sqrt_upper, Rat};
use crate::spaces::{
    apply_functional, norm, DyadicNode, Functional, Index, IndexUniverse, NormValue, SpaceSpec,
    SparseVector,
};
use crate::{Error, Result};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;

pub const JT_LEVEL_CAP: u32 = 24;

fn check_unit_domain(t: &Rat) -> Result<()> {
    if t.is_negative() || *t > Rat::one() {
        return Err(Error::PointOutOfDomain(fmt_rat(t)));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Piecewise-linear scalar functions on [0,1]
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseLinearScalar {
    pts: Vec<(Rat, Rat)>,
}

impl PiecewiseLinearScalar {
    pub fn new(pts: Vec<(Rat, Rat)>) -> Result<Self> {
        if pts.len() < 2 || !pts[0].0.is_zero() || !pts[pts.len() - 1].0.is_one() {
            return Err(Error::Invalid("breakpoints must run from 0 to 1".into()));
        }
        for w in pts.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::Invalid("breakpoints not strictly increasing".into()));
            }
        }
        Ok(PiecewiseLinearScalar { pts })
    }

    pub fn breakpoints(&self) -> &[(Rat, Rat)] {
        &self.pts
    }

    pub fn eval(&self, t: &Rat) -> Result<Rat> {
        check_unit_domain(t)?;
        for w in self.pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if t >= x0 && t <= x1 {
                return Ok(y0 + (t - x0) * (y1 - y0) / (x1 - x0));
            }
        }
        unreachable!("breakpoints cover [0,1]")
    }

    /// exact for piecewise-linear functions: attained at a breakpoint
    pub fn sup_norm(&self) -> Rat {
        self.pts.iter().map(|(_, y)| y.abs()).max().unwrap()
    }

    pub fn integral(&self) -> Rat {
        let two = rat_i(2);
        self.pts
            .windows(2)
            .map(|w| (&w[1].0 - &w[0].0) * (&w[0].1 + &w[1].1) / &two)
            .sum()
    }

    pub fn is_antisymmetric(&self) -> bool {
        if !self.pts[0].1.is_zero() || !self.pts[self.pts.len() - 1].1.is_zero() {
            return false;
        }
        self.pts.iter().all(|(x, y)| {
            let mirrored = Rat::one() - x;
            self.eval(&mirrored).map(|v| v == -y.clone()).unwrap_or(false)
        })
    }

    pub fn combine(c1: &Rat, g1: &Self, c2: &Rat, g2: &Self) -> Self {
        let mut xs: Vec<Rat> = g1
            .pts
            .iter()
            .map(|(x, _)| x.clone())
            .chain(g2.pts.iter().map(|(x, _)| x.clone()))
            .collect();
        xs.sort();
        xs.dedup();
        let pts = xs
            .into_iter()
            .map(|x| {
                let y = c1 * g1.eval(&x).unwrap() + c2 * g2.eval(&x).unwrap();
                (x, y)
            })
            .collect();
        PiecewiseLinearScalar { pts }
    }

    /// all exact zeros: zero breakpoints plus sign-change crossings
    pub fn zero_points(&self) -> Vec<Rat> {
        let mut out = Vec::new();
        for (x, y) in &self.pts {
            if y.is_zero() {
                out.push(x.clone());
            }
        }
        for w in self.pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if (y0.is_positive() && y1.is_negative()) || (y0.is_negative() && y1.is_positive()) {
                out.push(x0 + (x1 - x0) * y0 / (y0 - y1));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// a breakpoint where |g| attains its sup
    pub fn peak(&self) -> (Rat, Rat) {
        let s = self.sup_norm();
        self.pts
            .iter()
            .find(|(_, y)| y.abs() == s)
            .cloned()
            .unwrap()
    }
}

/// The antisymmetric bump: 0 at 0, 1 at 1/4, 0 at 1/2, -1 at 3/4, 0 at 1.
pub fn hat_g() -> PiecewiseLinearScalar {
    PiecewiseLinearScalar::new(vec![
        (rat_i(0), rat_i(0)),
        (rat(1, 4), rat_i(1)),
        (rat(1, 2), rat_i(0)),
        (rat(3, 4), rat_i(-1)),
        (rat_i(1), rat_i(0)),
    ])
    .unwrap()
}

// ---------------------------------------------------------------------
// Cantor-type sets
// ---------------------------------------------------------------------

/// A finite-stage Cantor construction: stage n (1-based) removes one
/// centered open interval from each surviving interval of stage n-1.
#[derive(Debug, Clone)]
pub struct CantorSetDescriptor {
    /// removed open intervals, grouped by stage
    pub removed: Vec<Vec<Interval>>,
    /// measure surviving after each stage
    pub remaining: Vec<Rat>,
    /// the closed stage cover: survivors after the final stage
    pub cover: IntervalSet,
}

impl CantorSetDescriptor {
    pub fn stages(&self) -> usize {
        self.removed.len()
    }

    /// the removed interval whose open interior contains t, if any
    pub fn locate_removed(&self, t: &Rat) -> Option<(usize, usize, &Interval)> {
        for (s, stage) in self.removed.iter().enumerate() {
            for (i, iv) in stage.iter().enumerate() {
                if &iv.lo < t && t < &iv.hi {
                    return Some((s + 1, i, iv));
                }
            }
        }
        None
    }

    pub fn removed_set(&self) -> IntervalSet {
        IntervalSet::from_intervals(self.removed.iter().flatten().cloned().collect())
    }
}

fn cantor_schedule(
    stages: usize,
    removal_len: impl Fn(usize, &Interval) -> Rat,
) -> Result<CantorSetDescriptor> {
    let mut survivors = vec![Interval::new(rat_i(0), rat_i(1))];
    let mut removed = Vec::new();
    let mut remaining = Vec::new();
    let mut measure = rat_i(1);
    for n in 1..=stages {
        let mut stage = Vec::new();
        let mut next = Vec::new();
        for iv in &survivors {
            let len = removal_len(n, iv);
            if len >= iv.length() || !len.is_positive() {
                return Err(Error::Invalid(format!(
                    "stage {n} removal does not fit inside {iv}"
                )));
            }
            let c = (&iv.lo + &iv.hi) / rat_i(2);
            let half = &len / rat_i(2);
            let (a, b) = (&c - &half, &c + &half);
            next.push(Interval::new(iv.lo.clone(), a.clone()));
            next.push(Interval::new(b.clone(), iv.hi.clone()));
            stage.push(Interval::new(a, b));
            measure -= len;
        }
        removed.push(stage);
        remaining.push(measure.clone());
        survivors = next;
    }
    Ok(CantorSetDescriptor {
        removed,
        remaining,
        cover: IntervalSet::from_intervals(survivors),
    })
}

/// Stage n removes 2^{n-1} centered open intervals of length 8^{-n};
/// the remaining measure stays above 5/6 > 2/3 at every stage.
pub fn fat_cantor(stages: usize) -> Result<CantorSetDescriptor> {
    if !(1..=12).contains(&stages) {
        return Err(Error::OutOfRange("fat cantor stages", stages.to_string()));
    }
    let d = cantor_schedule(stages, |n, _| pow2(-3 * n as i64))?;
    for m in &d.remaining {
        assert!(*m > rat(2, 3), "fat Cantor measure dipped below 2/3");
    }
    Ok(d)
}

/// Middle-thirds construction to the given stage; the stage cover has
/// measure (2/3)^m.
pub fn null_cantor(stages: usize) -> Result<CantorSetDescriptor> {
    if !(1..=20).contains(&stages) {
        return Err(Error::OutOfRange("null cantor stages", stages.to_string()));
    }
    let d = cantor_schedule(stages, |_, iv| iv.length() / rat_i(3))?;
    debug_assert_eq!(d.cover.measure(), pow_u(&rat(2, 3), stages as u32));
    Ok(d)
}

/// Exact middle-thirds Cantor membership for rationals: iterate the
/// expanding map (3t on [0,1/3], 3t-2 on [2/3,1]); the orbit of p/q stays
/// on denominators dividing q, so it either leaves the two outer thirds
/// (not a member) or cycles (member).
pub fn in_middle_thirds(t: &Rat) -> bool {
    if t.is_negative() || *t > Rat::one() {
        return false;
    }
    let third = rat(1, 3);
    let two_thirds = rat(2, 3);
    let mut x = t.clone();
    let mut seen = BTreeSet::new();
    loop {
        if !seen.insert(x.clone()) {
            return true;
        }
        if x <= third {
            x = rat_i(3) * x;
        } else if x >= two_thirds {
            x = rat_i(3) * x - rat_i(2);
        } else {
            return false;
        }
    }
}

// ---------------------------------------------------------------------
// The dyadic tree function
// ---------------------------------------------------------------------

/// f(t) = e_{(n-1,k)} when t = (2k-1)/2^n in lowest terms, 0 otherwise.
#[derive(Debug, Clone)]
pub struct JtFunction {
    pub max_level: u32,
    /// point-level depth for summary records on a partition interval
    pub summary_depth: u32,
}

impl Default for JtFunction {
    fn default() -> Self {
        JtFunction { max_level: JT_LEVEL_CAP, summary_depth: 12 }
    }
}

pub fn jt_function_eval(t: &Rat) -> Result<SparseVector> {
    JtFunction::default().eval(t)
}

/// interior dyadic points (2k-1)/2^n, n <= max_point_level, of (lo, hi)
fn dyadics_in_open(lo: &Rat, hi: &Rat, max_point_level: u32) -> Vec<(u32, u64)> {
    let mut out = Vec::new();
    for n in 1..=max_point_level {
        let scale = pow2(n as i64);
        let a = lo * &scale;
        let b = hi * &scale;
        // odd integers m with a < m < b
        let mut m = a.floor().to_integer() + BigInt::one();
        if num_integer::Integer::is_even(&m) {
            m += 1;
        }
        while Rat::from_integer(m.clone()) < b {
            if Rat::from_integer(m.clone()) > a {
                let k = ((&m + BigInt::one()) / BigInt::from(2)).to_u64().unwrap();
                out.push((n, k));
            }
            m += 2;
        }
    }
    out
}

impl JtFunction {
    fn universe(&self) -> IndexUniverse {
        IndexUniverse::DyadicTree(self.max_level)
    }

    pub fn eval(&self, t: &Rat) -> Result<SparseVector> {
        check_unit_domain(t)?;
        match odd_dyadic(t) {
            Some((n, k)) if n >= 1 => {
                if n - 1 > self.max_level {
                    return Err(Error::LevelTooLarge(n - 1, self.max_level));
                }
                SparseVector::basis(self.universe(), Index::Node(DyadicNode::new(n - 1, k)?))
            }
            _ => Ok(SparseVector::zero(self.universe())),
        }
    }
}

/// a rational in (lo, hi) that is not a dyadic rational
fn nondyadic_in(lo: &Rat, hi: &Rat) -> Rat {
    let len = hi - lo;
    for den in [3i64, 5, 7] {
        let t = lo + &len / rat_i(den);
        if odd_dyadic(&t).is_none() && !t.is_zero() && !t.is_one() {
            return t;
        }
    }
    unreachable!("one of the 1/3, 1/5, 1/7 points is non-dyadic")
}

impl PointFunction for JtFunction {
    fn universe(&self) -> IndexUniverse {
        JtFunction::universe(self)
    }

    fn eval(&self, t: &Rat) -> Result<SparseVector> {
        JtFunction::eval(self, t)
    }

    fn summaries(&self, p: &Partition) -> Result<Vec<IntervalValueSummary>> {
        p.intervals()
            .into_iter()
            .map(|iv| {
                let zero_tag = nondyadic_in(&iv.lo, &iv.hi);
                let mut records = vec![(zero_tag, SparseVector::zero(JtFunction::universe(self)))];
                let mut dy = dyadics_in_open(&iv.lo, &iv.hi, self.summary_depth);
                dy.truncate(12); // coarsest levels first
                for (n, k) in dy {
                    let t = Rat::new(BigInt::from(2 * k - 1), BigInt::from(1u64) << n);
                    records.push((t.clone(), JtFunction::eval(self, &t)?));
                }
                Ok(IntervalValueSummary {
                    interval: iv,
                    records,
                    zero_attainable: true,
                    tail_bound: None,
                })
            })
            .collect()
    }

    fn sum_sup_bound(&self, p: &Partition) -> Option<NormValue> {
        for n in 1..=12u32 {
            if p.len() + 1 != (2usize << n) {
                continue;
            }
            if let Ok(sp) = jt_special_partition(n) {
                if sp.partition == *p {
                    return Some(NormValue::rational(jt_sum_bound_rational(n)));
                }
            }
        }
        // uniform dyadic grid of level K: every interior dyadic tag sits
        // at the midpoint of a node interval of length <= 2^{-K}, which is
        // dyadic-aligned and hence inside a single cell; so each segment
        // collects at most one tag and the family aggregates within
        // sum of mu_i^2 = 2^{-K}
        uniform_dyadic_level(p).map(|k| NormValue::square(pow2(-(k as i64))))
    }

    fn special_partitions(&self, budget: u32) -> Vec<Partition> {
        (1..=budget.min(12))
            .map(|n| jt_special_partition(n).unwrap().partition)
            .collect()
    }
}

/// Some(K) when p is exactly the uniform dyadic partition into 2^K cells.
fn uniform_dyadic_level(p: &Partition) -> Option<u32> {
    let n = p.len();
    if !n.is_power_of_two() {
        return None;
    }
    let k = n.trailing_zeros();
    let h = pow2(-(k as i64));
    let mut x = Rat::zero();
    for b in p.breakpoints() {
        if *b != x {
            return None;
        }
        x += &h;
    }
    Some(k)
}

#[derive(Debug, Clone)]
pub struct JtSpecialPartition {
    pub n: u32,
    pub partition: Partition,
    /// per interval: true for the I-intervals around k/2^N
    pub is_i: Vec<bool>,
}

/// I_n = [n/2^N - 2^{-2N-1}, n/2^N + 2^{-2N-1}] for n = 1..2^N-1, with
/// the closed complements as J-intervals.
pub fn jt_special_partition(n: u32) -> Result<JtSpecialPartition> {
    if !(1..=12).contains(&n) {
        return Err(Error::OutOfRange("special partition N", n.to_string()));
    }
    let h = pow2(-(2 * n as i64) - 1);
    let mut pts = vec![rat_i(0)];
    for j in 1..(1u64 << n) {
        let c = Rat::new(BigInt::from(j), BigInt::one() << n);
        pts.push(&c - &h);
        pts.push(&c + &h);
    }
    pts.push(rat_i(1));
    let partition = Partition::new(pts)?;
    let is_i = (0..partition.len()).map(|i| i % 2 == 1).collect();
    Ok(JtSpecialPartition { n, partition, is_i })
}

/// certified rational upper bound for sup over taggings of ||f(P_N)||:
/// any segment chain uses tags from at most two adjacent J-intervals, so
/// the J-part aggregates as sqrt(2 * sum mu(J)^2); the I-part adds at
/// most 2 * sum mu(I).
pub fn jt_sum_bound_rational(n: u32) -> Rat {
    let sp = jt_special_partition(n).unwrap();
    let mut sum_j_sq = Rat::zero();
    let mut sum_i = Rat::zero();
    for (i, iv) in sp.partition.intervals().iter().enumerate() {
        let mu = iv.length();
        if sp.is_i[i] {
            sum_i += mu;
        } else {
            sum_j_sq += &mu * &mu;
        }
    }
    sqrt_upper(&(rat_i(2) * sum_j_sq), 40) + rat_i(2) * sum_i
}

pub struct JtWorstcase {
    pub achieved: NormValue,
    pub bound: NormValue,
    pub tagged: TaggedPartition,
}

pub fn jt_worstcase_bound(n: u32) -> Result<JtWorstcase> {
    jt_worstcase_bound_depth(n, n + 4)
}

/// Finite adversarial tag search on the special partition: per interval,
/// candidate tags are the interior dyadics of point-level <= depth plus a
/// non-dyadic (zero-value) tag; coordinate ascent from two starting
/// corners, with the squared JT norm evaluated on the integer fast path
/// (all interval measures are multiples of 2^{-2N-1}).
pub fn jt_worstcase_bound_depth(n: u32, depth: u32) -> Result<JtWorstcase> {
    if !(1..=8).contains(&n) {
        return Err(Error::OutOfRange("worst-case N", n.to_string()));
    }
    let sp = jt_special_partition(n)?;
    let ivs = sp.partition.intervals();
    let scale = pow2(2 * n as i64 + 1);
    let mu_scaled: Vec<i128> = ivs
        .iter()
        .map(|iv| (iv.length() * &scale).to_integer().to_i128().unwrap())
        .collect();

    // candidates[i][0] = None (zero-value tag); the rest are dyadic nodes
    let candidates: Vec<Vec<Option<DyadicNode>>> = ivs
        .iter()
        .map(|iv| {
            let mut c: Vec<Option<DyadicNode>> = vec![None];
            for (pn, k) in dyadics_in_open(&iv.lo, &iv.hi, depth) {
                c.push(Some(DyadicNode::new(pn - 1, k).unwrap()));
            }
            c
        })
        .collect();

    let entries_for = |choice: &[usize]| -> Vec<(DyadicNode, i128)> {
        choice
            .iter()
            .enumerate()
            .filter_map(|(i, &c)| candidates[i][c].map(|node| (node, mu_scaled[i])))
            .collect()
    };

    let ascend = |mut choice: Vec<usize>| -> (Vec<usize>, i128) {
        let mut best = jt_norm_sq_int(&entries_for(&choice));
        for _sweep in 0..20 {
            let mut improved = false;
            for i in 0..choice.len() {
                let scores = exec::map_indexed(&candidates[i], |k, _| {
                    if k == choice[i] {
                        return i64::MIN as i128;
                    }
                    let mut alt = choice.clone();
                    alt[i] = k;
                    jt_norm_sq_int(&entries_for(&alt))
                });
                if let Some((k, &s)) =
                    scores.iter().enumerate().max_by_key(|(_, &s)| s)
                {
                    if s > best {
                        best = s;
                        choice[i] = k;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        (choice, best)
    };

    let start_none = vec![0usize; ivs.len()];
    let start_coarse: Vec<usize> = candidates
        .iter()
        .map(|c| if c.len() > 1 { 1 } else { 0 })
        .collect();
    let (c1, s1) = ascend(start_none);
    let (c2, s2) = ascend(start_coarse);
    let choice = if s1 >= s2 { c1 } else { c2 };

    // exact certificate for the winning tagging
    let universe = IndexUniverse::DyadicTree(depth.saturating_sub(1).max(1));
    let v = SparseVector::from_entries(
        universe,
        choice.iter().enumerate().filter_map(|(i, &c)| {
            candidates[i][c].map(|node| (Index::Node(node), ivs[i].length()))
        }),
    )?;
    let achieved = jt_norm_dp(&v)?;
    let bound = NormValue::square(rat_i(4) * pow2(-(n as i64)));
    if !achieved.le(&bound) {
        return Err(Error::Invalid(format!(
            "worst-case search exceeded the 2/sqrt(2^N) bound at N = {n}"
        )));
    }
    let tags: Vec<Rat> = choice
        .iter()
        .enumerate()
        .map(|(i, &c)| match candidates[i][c] {
            Some(node) => {
                Rat::new(BigInt::from(2 * node.pos - 1), BigInt::one() << (node.level + 1))
            }
            None => nondyadic_in(&ivs[i].lo, &ivs[i].hi),
        })
        .collect();
    let tagged = TaggedPartition::new(sp.partition.clone(), tags)?;
    Ok(JtWorstcase { achieved, bound, tagged })
}

/// The truncated-branch witness: follow the bits down the tree from the
/// root, pair each node's dyadic point image with the branch functional.
/// All pairings equal 1 — the non-weak-continuity certificate.
pub fn jt_branch_witness(bits: &[bool]) -> Result<(Functional, Vec<Rat>)> {
    if bits.is_empty() || bits.len() > 20 {
        return Err(Error::OutOfRange("branch bits", bits.len().to_string()));
    }
    let mut chain = vec![DyadicNode::new(0, 1)?];
    for &b in &bits[1..] {
        let last = *chain.last().unwrap();
        chain.push(if b { last.right_child() } else { last.left_child() });
    }
    let f = JtFunction::default();
    let phi = Functional::branch(chain.clone())?;
    let mut pairings = Vec::new();
    for node in &chain {
        let t = Rat::new(BigInt::from(2 * node.pos - 1), BigInt::one() << (node.level + 1));
        pairings.push(apply_functional(&phi, &f.eval(&t)?)?);
    }
    Ok((phi, pairings))
}

// ---------------------------------------------------------------------
// Characteristic families over translated Cantor sets
// ---------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CharFamily {
    pub descriptor: CantorSetDescriptor,
    pub translates: Vec<Rat>,
    pub target: SpaceSpec,
}

pub fn default_translates() -> Vec<Rat> {
    (0..16).map(|k| rat(k, 17)).collect()
}

impl CharFamily {
    pub fn new(stage: usize, translates: Vec<Rat>, target: SpaceSpec) -> Result<Self> {
        Ok(CharFamily { descriptor: null_cantor(stage)?, translates, target })
    }

    fn universe(&self) -> IndexUniverse {
        IndexUniverse::FiniteLabels(self.translates.len() as u64)
    }

    /// membership of t in F_alpha = ((x_alpha + F) and [0,1]) minus the
    /// earlier F_beta; exact via the middle-thirds orbit test
    pub fn member(&self, alpha: usize, t: &Rat) -> bool {
        let shifted = t - &self.translates[alpha];
        if shifted.is_negative() || shifted > Rat::one() {
            return false;
        }
        if !in_middle_thirds(&shifted) {
            return false;
        }
        (0..alpha).all(|b| {
            let s = t - &self.translates[b];
            s.is_negative() || s > Rat::one() || !in_middle_thirds(&s)
        })
    }

    /// breakpoints at every translated cover piece endpoint, so each
    /// partition interval lies inside or outside each cover exactly
    pub fn aligned_partition(&self) -> Partition {
        let mut pts = vec![rat_i(0), rat_i(1)];
        for x in &self.translates {
            for piece in self.descriptor.cover.translate_clip_unit(x).intervals() {
                pts.push(piece.lo.clone());
                pts.push(piece.hi.clone());
            }
        }
        pts.sort();
        pts.dedup();
        Partition::new(pts).expect("clipped endpoints stay in [0,1]")
    }

    /// the disjointified stage covers D_alpha
    pub fn covers(&self) -> Vec<IntervalSet> {
        let mut done = IntervalSet::empty();
        let mut out = Vec::new();
        for x in &self.translates {
            let c = self.descriptor.cover.translate_clip_unit(x);
            out.push(c.subtract(&done));
            done = done.union(&c);
        }
        out
    }
}

pub fn char_family_eval(fam: &CharFamily, t: &Rat) -> Result<SparseVector> {
    check_unit_domain(t)?;
    for alpha in 0..fam.translates.len() {
        if fam.member(alpha, t) {
            return SparseVector::basis(fam.universe(), Index::Label(alpha as u64));
        }
    }
    Ok(SparseVector::zero(fam.universe()))
}

/// Total length of partition intervals whose open interiors meet the
/// interval set, via binary search on the breakpoints.
fn meeting_length(p: &Partition, set: &IntervalSet) -> Rat {
    let pts = p.breakpoints();
    let mut hit = vec![false; p.len()];
    for piece in set.intervals() {
        // intervals i with pts[i+1] > piece.lo and pts[i] < piece.hi
        let start = pts.partition_point(|x| *x <= piece.lo).saturating_sub(1);
        for i in start..p.len() {
            if pts[i] >= piece.hi {
                break;
            }
            if pts[i + 1] > piece.lo {
                hit[i] = true;
            }
        }
    }
    (0..p.len())
        .filter(|&i| hit[i])
        .map(|i| &pts[i + 1] - &pts[i])
        .sum()
}

/// Exact sup over taggings of ||f(P)||: per alpha, the total length S_a
/// of partition intervals whose interiors meet the stage cover of
/// F_alpha; c0 takes max_a S_a, lp aggregates (sum S_a^p)^{1/p}.
pub fn char_family_sum_sup(fam: &CharFamily, p: &Partition) -> Result<NormValue> {
    let covers = fam.covers();
    let s: Vec<Rat> = covers.iter().map(|d| meeting_length(p, d)).collect();
    match &fam.target {
        SpaceSpec::C0 => Ok(NormValue::rational(s.into_iter().max().unwrap_or_else(Rat::zero))),
        SpaceSpec::Lp(q) => {
            if !q.is_integer() || !q.is_positive() {
                return Err(Error::UnsupportedExponent(fmt_rat(q)));
            }
            let qi = q.to_integer().to_u32().unwrap();
            let total: Rat = s.iter().map(|x| pow_u(x, qi)).sum();
            if qi == 1 {
                Ok(NormValue::rational(total))
            } else {
                Ok(NormValue::power_p(total, qi))
            }
        }
        other => Err(Error::IncompatibleSpace(
            format!("{other:?}"),
            "char family".into(),
        )),
    }
}

impl PointFunction for CharFamily {
    fn universe(&self) -> IndexUniverse {
        CharFamily::universe(self)
    }

    fn eval(&self, t: &Rat) -> Result<SparseVector> {
        char_family_eval(self, t)
    }

    fn summaries(&self, p: &Partition) -> Result<Vec<IntervalValueSummary>> {
        let covers = self.covers();
        p.intervals()
            .into_iter()
            .map(|iv| {
                let mut records = Vec::new();
                let mut tags = Vec::new();
                // candidates inside each cover piece meeting the
                // interior: the clipped midpoint plus the piece
                // endpoints, which are genuine Cantor points
                for d in &covers {
                    for piece in d.intervals() {
                        let lo = piece.lo.clone().max(iv.lo.clone());
                        let hi = piece.hi.clone().min(iv.hi.clone());
                        if lo < hi {
                            tags.push((&lo + &hi) / rat_i(2));
                            tags.push(lo);
                            tags.push(hi);
                        } else if lo == hi {
                            tags.push(lo);
                        }
                    }
                }
                // plus the midpoint (often outside every cover)
                tags.push((&iv.lo + &iv.hi) / rat_i(2));
                tags.retain(|t| *t > iv.lo && *t < iv.hi);
                tags.sort();
                tags.dedup();
                let mut zero_attainable = false;
                for t in tags {
                    let v = char_family_eval(self, &t)?;
                    zero_attainable |= v.is_zero();
                    records.push((t, v));
                }
                let meets_any = covers.iter().any(|d| d.meets_open(&iv.lo, &iv.hi));
                let osc = if meets_any { rat_i(2) } else { Rat::zero() };
                Ok(IntervalValueSummary {
                    tail_bound: Some(iv.length() * osc),
                    interval: iv,
                    records,
                    zero_attainable,
                })
            })
            .collect()
    }

    fn sum_sup_bound(&self, p: &Partition) -> Option<NormValue> {
        char_family_sum_sup(self, p).ok()
    }

    fn special_partitions(&self, _budget: u32) -> Vec<Partition> {
        vec![self.aligned_partition()]
    }
}

// ---------------------------------------------------------------------
// The Kadets-style function f_g
// ---------------------------------------------------------------------

/// f_g(t) = g_I(t) x_n on the stage-n removed interval I, 0 on the
/// survivors; x_n = e_n in the l2 truncation.
#[derive(Debug, Clone)]
pub struct KadetsFunction {
    pub g: PiecewiseLinearScalar,
    pub k: CantorSetDescriptor,
}

pub fn kadets_eval(f: &KadetsFunction, t: &Rat) -> Result<SparseVector> {
    check_unit_domain(t)?;
    match f.k.locate_removed(t) {
        Some((stage, _, iv)) => {
            let rescaled = (t - &iv.lo) / iv.length();
            let c = f.g.eval(&rescaled)?;
            Ok(SparseVector::from_entries(
                IndexUniverse::Naturals,
                [(Index::Nat(stage as u64), c)],
            )?)
        }
        None => Ok(SparseVector::zero(IndexUniverse::Naturals)),
    }
}

impl KadetsFunction {
    /// an interior tag of (lo, hi) where f_g vanishes exactly, if one is
    /// certifiable: a survivor point, or an exact zero of the rescaled g
    fn zero_tag(&self, lo: &Rat, hi: &Rat) -> Option<Rat> {
        // survivor sliver: midpoint of some cover piece inside
        for piece in self.k.cover.intervals() {
            let a = piece.lo.clone().max(lo.clone());
            let b = piece.hi.clone().min(hi.clone());
            if a < b {
                let t = (&a + &b) / rat_i(2);
                if *lo < t && t < *hi && self.k.locate_removed(&t).is_none() {
                    return Some(t);
                }
            }
        }
        // inside a removed interval: use a zero of g
        for stage in &self.k.removed {
            for iv in stage {
                for z in self.g.zero_points() {
                    let t = &iv.lo + iv.length() * z;
                    if *lo < t && t < *hi && iv.lo < t && t < iv.hi {
                        return Some(t);
                    }
                }
            }
        }
        None
    }

    /// interior tag minimizing |g| among the certifiable candidates
    fn calm_tag(&self, lo: &Rat, hi: &Rat) -> Result<(Rat, Rat)> {
        if let Some(t) = self.zero_tag(lo, hi) {
            return Ok((t, Rat::zero()));
        }
        // entirely inside one removed interval with no g-zero available:
        // probe the rescaled breakpoints and the midpoint
        let mid = (lo + hi) / rat_i(2);
        let mut best: Option<(Rat, Rat)> = None;
        let mut cands = vec![mid];
        if let Some((_, _, iv)) = self.k.locate_removed(&(lo + (hi - lo) / rat_i(3))) {
            for (x, _) in self.g.breakpoints() {
                let t = &iv.lo + iv.length() * x;
                if *lo < t && t < *hi {
                    cands.push(t);
                }
            }
        }
        for t in cands {
            if t <= *lo || t >= *hi {
                continue;
            }
            let v = kadets_eval_scalar(self, &t)?;
            let mag = v.abs();
            if best.as_ref().map(|(_, m)| mag < *m).unwrap_or(true) {
                best = Some((t, mag));
            }
        }
        best.ok_or_else(|| Error::Invalid("no interior tag candidate".into()))
    }
}

fn kadets_eval_scalar(f: &KadetsFunction, t: &Rat) -> Result<Rat> {
    match f.k.locate_removed(t) {
        Some((_, _, iv)) => f.g.eval(&((t - &iv.lo) / iv.length())),
        None => Ok(Rat::zero()),
    }
}

impl PointFunction for KadetsFunction {
    fn universe(&self) -> IndexUniverse {
        IndexUniverse::Naturals
    }

    fn eval(&self, t: &Rat) -> Result<SparseVector> {
        kadets_eval(self, t)
    }

    fn summaries(&self, p: &Partition) -> Result<Vec<IntervalValueSummary>> {
        let (px, py) = self.g.peak();
        p.intervals()
            .into_iter()
            .map(|iv| {
                let mut records = Vec::new();
                let mut zero_attainable = false;
                if let Some(z) = self.zero_tag(&iv.lo, &iv.hi) {
                    records.push((z.clone(), kadets_eval(self, &z)?));
                    zero_attainable = true;
                }
                // one peak record per stage with a removal wholly inside;
                // same-stage removals yield the identical value
                for (s, stage) in self.k.removed.iter().enumerate() {
                    let j = stage.partition_point(|rm| rm.lo < iv.lo);
                    if let Some(rm) = stage.get(j) {
                        if rm.hi <= iv.hi {
                            let t = &rm.lo + rm.length() * &px;
                            if t > iv.lo && t < iv.hi {
                                let v = SparseVector::from_entries(
                                    IndexUniverse::Naturals,
                                    [(Index::Nat(s as u64 + 1), py.clone())],
                                )?;
                                records.push((t, v));
                            }
                        }
                    }
                }
                if records.is_empty() {
                    let (t, _) = self.calm_tag(&iv.lo, &iv.hi)?;
                    records.push((t.clone(), kadets_eval(self, &t)?));
                }
                Ok(IntervalValueSummary {
                    interval: iv,
                    records,
                    zero_attainable,
                    tail_bound: None,
                })
            })
            .collect()
    }
}

pub struct KadetsLower {
    pub achieved: NormValue,
    pub threshold: NormValue,
    pub stage: usize,
    pub tagged: TaggedPartition,
}

/// The adversarial tagging: pick the stage m whose removed intervals sit
/// strictly inside the largest total measure of partition intervals, tag
/// those intervals at the rescaled peak of g (value ||g|| x_m), tag the
/// rest where f_g provably vanishes or is smallest, and certify
/// ||T f_g(P)|| > (1/3)||g|| exactly.
pub fn kadets_sum_lowerbound(
    f: &KadetsFunction,
    p: &Partition,
    op: Option<&crate::dp_operators::MatrixOperator>,
) -> Result<KadetsLower> {
    let gnorm = f.g.sup_norm();
    let threshold = NormValue::rational(&gnorm / rat_i(3));
    let (px, _) = f.g.peak();
    let ivs = p.intervals();

    let mut best: Option<(usize, Rat, Vec<Option<Interval>>)> = None;
    for m in 1..=f.k.stages() {
        let mut covered = Rat::zero();
        let mut slots: Vec<Option<Interval>> = vec![None; ivs.len()];
        for (i, iv) in ivs.iter().enumerate() {
            for rm in &f.k.removed[m - 1] {
                if rm.lo > iv.lo && rm.hi < iv.hi {
                    slots[i] = Some(rm.clone());
                    covered += iv.length();
                    break;
                }
            }
        }
        if best.as_ref().map(|(_, c, _)| covered > *c).unwrap_or(true) {
            best = Some((m, covered, slots));
        }
    }
    let (stage, _, slots) = best.unwrap();

    let tags: Vec<Rat> = ivs
        .iter()
        .zip(&slots)
        .map(|(iv, slot)| match slot {
            Some(rm) => Ok(&rm.lo + rm.length() * &px),
            None => Ok(f.calm_tag(&iv.lo, &iv.hi)?.0),
        })
        .collect::<Result<_>>()?;
    let tagged = TaggedPartition::new(p.clone(), tags)?;

    let mut sum = SparseVector::zero(IndexUniverse::Naturals);
    for (i, t) in tagged.tags().iter().enumerate() {
        sum = sum.add(&kadets_eval(f, t)?.scale(&ivs[i].length()))?;
    }
    let image = match op {
        Some(t) => crate::dp_operators::matrix_apply(t, &sum)?,
        None => sum,
    };
    let achieved = norm(&image, &SpaceSpec::Lp(rat_i(2)))?;
    if !threshold.lt(&achieved) {
        return Err(Error::PartitionTooCoarse(format!(
            "adversarial tagging reached {} <= threshold {}",
            achieved, threshold
        )));
    }
    Ok(KadetsLower { achieved, threshold, stage, tagged })
}

pub struct PhiVerdict {
    pub linear: bool,
    pub norm_preserving: bool,
    pub probes: usize,
}

/// phi(g) = f_g is linear in g and, with ||x_n|| = 1, satisfies
/// ||phi(g)||_inf = ||g||_inf; checked exactly on the probe grid of all
/// rescaled breakpoint images plus survivor points.
pub fn phi_isometry_check(
    g1: &PiecewiseLinearScalar,
    g2: &PiecewiseLinearScalar,
    c1: &Rat,
    c2: &Rat,
    k: &CantorSetDescriptor,
) -> Result<PhiVerdict> {
    let combo = PiecewiseLinearScalar::combine(c1, g1, c2, g2);
    let f1 = KadetsFunction { g: g1.clone(), k: k.clone() };
    let f2 = KadetsFunction { g: g2.clone(), k: k.clone() };
    let fc = KadetsFunction { g: combo.clone(), k: k.clone() };

    let mut probes: Vec<Rat> = vec![rat_i(0), rat_i(1)];
    for stage in &k.removed {
        for iv in stage {
            for (x, _) in combo.breakpoints() {
                probes.push(&iv.lo + iv.length() * x);
            }
        }
    }
    for piece in k.cover.intervals() {
        probes.push((&piece.lo + &piece.hi) / rat_i(2));
    }
    probes.sort();
    probes.dedup();

    let mut linear = true;
    let mut sup1 = Rat::zero();
    for t in &probes {
        let lhs = kadets_eval(&fc, t)?;
        let rhs = kadets_eval(&f1, t)?
            .scale(c1)
            .add(&kadets_eval(&f2, t)?.scale(c2))?;
        if lhs != rhs {
            linear = false;
        }
        sup1 = sup1.max(kadets_eval_scalar(&f1, t)?.abs());
    }
    // the sup over all t of ||f_g(t)|| equals the max |g| over rescaled
    // breakpoint images, all of which are probed
    let norm_preserving = sup1 == g1.sup_norm();
    Ok(PhiVerdict { linear, norm_preserving, probes: probes.len() })
}
