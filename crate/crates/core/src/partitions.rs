//! Tagged partitions of [0,1], exact Riemann sums, and the certified
//! retagging-gap interval behind the Gordon-style integrability criterion.

use crate::intervals::Interval;
use crate::rat::{fmt_rat, parse_rat, Rat};
use crate::spaces::{norm, IndexUniverse, NormValue, SpaceSpec, SparseVector};
use crate::{Error, Result};
use num_traits::{One, Zero};

/// Strictly increasing rational breakpoints from exactly 0 to exactly 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    breakpoints: Vec<Rat>,
}

impl Partition {
    pub fn new(breakpoints: Vec<Rat>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidPartition("needs at least two breakpoints".into()));
        }
        if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
            return Err(Error::InvalidPartition("endpoints must be exactly 0 and 1".into()));
        }
        for w in breakpoints.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidPartition(format!(
                    "breakpoints not strictly increasing at {}",
                    fmt_rat(&w[1])
                )));
            }
        }
        Ok(Partition { breakpoints })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidPartition("uniform partition needs n >= 1".into()));
        }
        let nn = Rat::from_integer((n as i64).into());
        Self::new(
            (0..=n)
                .map(|i| Rat::from_integer((i as i64).into()) / nn.clone())
                .collect(),
        )
    }

    pub fn breakpoints(&self) -> &[Rat] {
        &self.breakpoints
    }

    pub fn len(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn interval(&self, i: usize) -> Interval {
        Interval::new(self.breakpoints[i].clone(), self.breakpoints[i + 1].clone())
    }

    pub fn intervals(&self) -> Vec<Interval> {
        (0..self.len()).map(|i| self.interval(i)).collect()
    }

    pub fn mesh(&self) -> Rat {
        self.breakpoints
            .windows(2)
            .map(|w| &w[1] - &w[0])
            .max()
            .expect("nonempty partition")
    }

    pub fn common_refinement(&self, other: &Partition) -> Partition {
        let mut pts: Vec<Rat> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .cloned()
            .collect();
        pts.sort();
        pts.dedup();
        Partition { breakpoints: pts }
    }
}

/// A partition with one tag strictly inside each interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedPartition {
    partition: Partition,
    tags: Vec<Rat>,
}

impl TaggedPartition {
    pub fn new(partition: Partition, tags: Vec<Rat>) -> Result<Self> {
        if tags.len() != partition.len() {
            return Err(Error::InvalidPartition(format!(
                "{} tags for {} intervals",
                tags.len(),
                partition.len()
            )));
        }
        for (i, s) in tags.iter().enumerate() {
            let iv = partition.interval(i);
            if *s <= iv.lo || *s >= iv.hi {
                return Err(Error::TagNotInterior(format!("{} in {iv}", fmt_rat(s))));
            }
        }
        Ok(TaggedPartition { partition, tags })
    }

    /// Tags each interval via `pick(interval) -> tag in the open interior`.
    pub fn with_tags(partition: Partition, mut pick: impl FnMut(&Interval) -> Rat) -> Result<Self> {
        let tags = partition.intervals().iter().map(&mut pick).collect();
        TaggedPartition::new(partition, tags)
    }

    pub fn midpoint_tags(partition: Partition) -> Self {
        TaggedPartition::with_tags(partition, |iv| (&iv.lo + &iv.hi) / Rat::from_integer(2.into()))
            .expect("midpoints are interior")
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn tags(&self) -> &[Rat] {
        &self.tags
    }
}

/// What a gallery function can certify about its values inside one
/// closed interval: finitely many attainable (tag, value) records and an
/// optional analytic bound on the remaining retagging oscillation.
#[derive(Debug, Clone)]
pub struct IntervalValueSummary {
    pub interval: Interval,
    /// attainable evaluations; each tag is interior and value = f(tag)
    pub records: Vec<(Rat, SparseVector)>,
    pub zero_attainable: bool,
    /// bound on `sup ||f(s) - f(s')||` over interior tags beyond what the
    /// records already witness; None leaves the retag gap upper-unbounded
    pub tail_bound: Option<Rat>,
}

impl IntervalValueSummary {
    pub fn validate(&self) -> Result<()> {
        for (tag, _) in &self.records {
            if *tag <= self.interval.lo || *tag >= self.interval.hi {
                return Err(Error::TagNotInterior(format!("{} in {}", fmt_rat(tag), self.interval)));
            }
        }
        Ok(())
    }
}

/// Interface the gallery implements for exact Riemann sums and retag
/// searches.
pub trait PointFunction: Sync {
    fn universe(&self) -> IndexUniverse;
    fn eval(&self, t: &Rat) -> Result<SparseVector>;
    fn summaries(&self, p: &Partition) -> Result<Vec<IntervalValueSummary>>;
    /// certified upper bound on `sup over taggings of ||f(P)||`, when the
    /// construction can produce one for this partition
    fn sum_sup_bound(&self, _p: &Partition) -> Option<NormValue> {
        None
    }
    /// optional construction-specific bound on the whole-partition retag
    /// gap, tighter than summing per-interval tails; by default the
    /// triangle inequality doubles the one-sided sum bound
    fn partition_gap_bound(&self, p: &Partition) -> Option<NormValue> {
        self.sum_sup_bound(p)
            .map(|b| b.scale(&Rat::from_integer(2.into())))
    }
    /// construction-specific partitions worth probing before the generic
    /// dyadic refinement schedule
    fn special_partitions(&self, _budget: u32) -> Vec<Partition> {
        Vec::new()
    }
}

fn space_accepts(space: &SpaceSpec, universe: &IndexUniverse) -> bool {
    match space {
        SpaceSpec::Jt => matches!(universe, IndexUniverse::DyadicTree(_)),
        _ => true,
    }
}

/// `sum_i (t_i - t_{i-1}) f(s_i)`, exactly.
pub fn riemann_sum(
    f: &dyn PointFunction,
    p: &TaggedPartition,
    space: &SpaceSpec,
) -> Result<SparseVector> {
    let universe = f.universe();
    if !space_accepts(space, &universe) {
        return Err(Error::IncompatibleSpace(
            universe.to_string(),
            format!("{space:?}"),
        ));
    }
    let mut acc = SparseVector::zero(universe);
    for (i, s) in p.tags().iter().enumerate() {
        let iv = p.partition().interval(i);
        let mu = &iv.hi - &iv.lo;
        acc = acc.add(&f.eval(s)?.scale(&mu))?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GapUpper {
    Bounded(NormValue),
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct RetagGap {
    pub lower: NormValue,
    pub upper: GapUpper,
    /// taggings witnessing the lower bound
    pub witness: Option<(TaggedPartition, TaggedPartition)>,
}

/// Certified interval around `sup ||f(P1) - f(P2)||` over retaggings of
/// `p`. The lower bound is the exact maximum over the summaries' finite
/// tag lists, found by coordinate ascent run to a fixed point from every
/// single-record starting corner; the upper bound adds the analytic tails
/// (or uses a construction-specific whole-partition bound when provided).
pub fn retag_gap(f: &dyn PointFunction, p: &Partition, space: &SpaceSpec) -> Result<RetagGap> {
    let universe = f.universe();
    if !space_accepts(space, &universe) {
        return Err(Error::IncompatibleSpace(
            universe.to_string(),
            format!("{space:?}"),
        ));
    }
    let summaries = f.summaries(p)?;
    if summaries.len() != p.len() {
        return Err(Error::Invalid(format!(
            "{} summaries for {} intervals",
            summaries.len(),
            p.len()
        )));
    }
    for s in &summaries {
        s.validate()?;
        if s.records.is_empty() {
            return Err(Error::Invalid(format!(
                "no evaluation records on {}",
                s.interval
            )));
        }
    }
    let n = p.len();
    let mu: Vec<Rat> = (0..n)
        .map(|i| {
            let iv = p.interval(i);
            &iv.hi - &iv.lo
        })
        .collect();

    // scaled record values, per interval
    let scaled: Vec<Vec<SparseVector>> = summaries
        .iter()
        .enumerate()
        .map(|(i, s)| s.records.iter().map(|(_, v)| v.scale(&mu[i])).collect())
        .collect();

    // choice[i] = (record for P1, record for P2); diff = sum mu_i (v1 - v2)
    let mut choice: Vec<(usize, usize)> = vec![(0, 0); n];
    // start from a spread-out corner: P2 takes the last record
    for (i, c) in choice.iter_mut().enumerate() {
        c.1 = scaled[i].len() - 1;
    }
    let mut diff = SparseVector::zero(universe.clone());
    for (i, c) in choice.iter().enumerate() {
        diff = diff.add(&scaled[i][c.0].sub(&scaled[i][c.1])?)?;
    }
    let mut best = norm(&diff, space)?;
    loop {
        let mut improved = false;
        for i in 0..n {
            for role in 0..2 {
                let cur = if role == 0 { choice[i].0 } else { choice[i].1 };
                let mut local_best = cur;
                let mut local_norm = best.clone();
                for k in 0..scaled[i].len() {
                    if k == cur {
                        continue;
                    }
                    let delta = if role == 0 {
                        scaled[i][k].sub(&scaled[i][cur])?
                    } else {
                        scaled[i][cur].sub(&scaled[i][k])?
                    };
                    let cand = diff.add(&delta)?;
                    let nv = norm(&cand, space)?;
                    if local_norm.lt(&nv) {
                        local_norm = nv;
                        local_best = k;
                    }
                }
                if local_best != cur {
                    let delta = if role == 0 {
                        scaled[i][local_best].sub(&scaled[i][cur])?
                    } else {
                        scaled[i][cur].sub(&scaled[i][local_best])?
                    };
                    diff = diff.add(&delta)?;
                    if role == 0 {
                        choice[i].0 = local_best;
                    } else {
                        choice[i].1 = local_best;
                    }
                    best = local_norm;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }

    let witness = {
        let t1: Vec<Rat> = (0..n)
            .map(|i| summaries[i].records[choice[i].0].0.clone())
            .collect();
        let t2: Vec<Rat> = (0..n)
            .map(|i| summaries[i].records[choice[i].1].0.clone())
            .collect();
        Some((
            TaggedPartition::new(p.clone(), t1)?,
            TaggedPartition::new(p.clone(), t2)?,
        ))
    };

    let mut upper: Option<NormValue> = None;
    if summaries.iter().all(|s| s.tail_bound.is_some()) {
        let tails: Rat = summaries
            .iter()
            .map(|s| s.tail_bound.clone().unwrap())
            .sum();
        let (_, hi) = best.bracket(40);
        upper = Some(NormValue::rational(hi + tails));
    }
    if let Some(bound) = f.partition_gap_bound(p) {
        upper = Some(match upper {
            Some(u) if u.le(&bound) => u,
            _ => bound,
        });
    }
    Ok(RetagGap {
        lower: best,
        upper: upper.map(GapUpper::Bounded).unwrap_or(GapUpper::Unbounded),
        witness,
    })
}

// ---------------------------------------------------------------------
// File format: one breakpoint per line; tagged form appends `@ tag` to
// the right-endpoint line of each interval.
// ---------------------------------------------------------------------

pub fn parse_partition(text: &str) -> Result<(Partition, Option<Vec<Rat>>)> {
    let mut pts = Vec::new();
    let mut tags = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ctx = |e: String| Error::Parse(format!("line {}: {e}", ln + 1));
        if let Some((bp, tag)) = line.split_once('@') {
            if pts.is_empty() {
                return Err(ctx("tag before the first interval".into()));
            }
            pts.push(parse_rat(bp.trim()).map_err(|e| ctx(e.to_string()))?);
            tags.push(parse_rat(tag.trim()).map_err(|e| ctx(e.to_string()))?);
        } else {
            pts.push(parse_rat(line).map_err(|e| ctx(e.to_string()))?);
        }
    }
    let p = Partition::new(pts)?;
    if tags.is_empty() {
        Ok((p, None))
    } else if tags.len() == p.len() {
        Ok((p, Some(tags)))
    } else {
        Err(Error::Parse(format!(
            "{} tags for {} intervals",
            tags.len(),
            p.len()
        )))
    }
}

pub fn format_partition(p: &Partition, tags: Option<&[Rat]>) -> String {
    let mut out = String::new();
    for (i, bp) in p.breakpoints().iter().enumerate() {
        out.push_str(&fmt_rat(bp));
        if i > 0 {
            if let Some(tags) = tags {
                out.push_str(&format!(" @ {}", fmt_rat(&tags[i - 1])));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{rat, rat_i};
    use crate::spaces::Index;

    struct ConstCoord {
        value: Rat,
        idx: u64,
    }

    impl PointFunction for ConstCoord {
        fn universe(&self) -> IndexUniverse {
            IndexUniverse::Naturals
        }
        fn eval(&self, _t: &Rat) -> Result<SparseVector> {
            SparseVector::from_entries(
                IndexUniverse::Naturals,
                [(Index::Nat(self.idx), self.value.clone())],
            )
        }
        fn summaries(&self, p: &Partition) -> Result<Vec<IntervalValueSummary>> {
            p.intervals()
                .into_iter()
                .map(|iv| {
                    let tag = (&iv.lo + &iv.hi) / rat_i(2);
                    Ok(IntervalValueSummary {
                        records: vec![(tag.clone(), self.eval(&tag)?)],
                        zero_attainable: self.value.is_zero(),
                        tail_bound: Some(Rat::zero()),
                        interval: iv,
                    })
                })
                .collect()
        }
    }

    #[test]
    fn mesh_examples() {
        assert_eq!(Partition::uniform(4).unwrap().mesh(), rat(1, 4));
        let p = Partition::new(vec![rat_i(0), rat(1, 3), rat_i(1)]).unwrap();
        assert_eq!(p.mesh(), rat(2, 3));
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![rat_i(0), rat(1, 2), rat(1, 2), rat_i(1)]).is_err());
        assert!(Partition::new(vec![rat(1, 4), rat_i(1)]).is_err());
        assert!(Partition::new(vec![rat_i(0), rat(3, 4)]).is_err());
    }

    #[test]
    fn refinement_examples() {
        let p2 = Partition::uniform(2).unwrap();
        let p3 = Partition::uniform(3).unwrap();
        assert_eq!(p2.common_refinement(&p2), p2);
        let r = p2.common_refinement(&p3);
        assert_eq!(
            r.breakpoints(),
            &[rat_i(0), rat(1, 3), rat(1, 2), rat(2, 3), rat_i(1)]
        );
        let trivial = Partition::uniform(1).unwrap();
        assert_eq!(p3.common_refinement(&trivial), p3);
        // mesh contraction
        assert!(r.mesh() <= p2.mesh().min(p3.mesh()));
    }

    #[test]
    fn boundary_tags_rejected() {
        let p = Partition::uniform(2).unwrap();
        assert!(TaggedPartition::new(p.clone(), vec![rat(1, 2), rat(3, 4)]).is_err());
        assert!(TaggedPartition::new(p.clone(), vec![rat_i(0), rat(3, 4)]).is_err());
        assert!(TaggedPartition::new(p, vec![rat(1, 4), rat(3, 4)]).is_ok());
    }

    #[test]
    fn riemann_sum_const_and_linearity() {
        let p = TaggedPartition::midpoint_tags(Partition::uniform(5).unwrap());
        let one = ConstCoord { value: rat_i(1), idx: 0 };
        let s = riemann_sum(&one, &p, &SpaceSpec::C0).unwrap();
        assert_eq!(s.get(&Index::Nat(0)), rat_i(1));

        let zero = ConstCoord { value: rat_i(0), idx: 0 };
        let z = riemann_sum(&zero, &p, &SpaceSpec::C0).unwrap();
        assert!(z.is_zero());

        // linearity across two constants on the same coordinate
        let a = ConstCoord { value: rat(2, 3), idx: 1 };
        let b = ConstCoord { value: rat(1, 6), idx: 1 };
        let sa = riemann_sum(&a, &p, &SpaceSpec::C0).unwrap();
        let sb = riemann_sum(&b, &p, &SpaceSpec::C0).unwrap();
        let both = ConstCoord { value: rat(2, 3) + rat(1, 6), idx: 1 };
        let sboth = riemann_sum(&both, &p, &SpaceSpec::C0).unwrap();
        assert_eq!(sa.add(&sb).unwrap(), sboth);
    }

    #[test]
    fn retag_gap_zero_function() {
        let zero = ConstCoord { value: rat_i(0), idx: 0 };
        let p = Partition::uniform(4).unwrap();
        let g = retag_gap(&zero, &p, &SpaceSpec::C0).unwrap();
        assert!(g.lower.is_zero());
        match g.upper {
            GapUpper::Bounded(u) => assert!(u.is_zero()),
            GapUpper::Unbounded => panic!("expected bounded"),
        }
    }

    #[test]
    fn file_roundtrip() {
        let p = Partition::new(vec![rat_i(0), rat(1, 3), rat(1, 2), rat_i(1)]).unwrap();
        let tags = vec![rat(1, 4), rat(2, 5), rat(3, 4)];
        let text = format_partition(&p, Some(&tags));
        let (p2, t2) = parse_partition(&text).unwrap();
        assert_eq!(p, p2);
        assert_eq!(t2.unwrap(), tags);

        let text = format_partition(&p, None);
        let (p3, t3) = parse_partition(&text).unwrap();
        assert_eq!(p, p3);
        assert!(t3.is_none());

        assert!(parse_partition("0\nbad\n1\n").is_err());
    }
}
