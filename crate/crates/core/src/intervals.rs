//! Finite unions of closed intervals with rational endpoints.
//!
//! Used for Cantor-set stage descriptions, oscillation covers and
//! exact measure bookkeeping.

use crate::rat::Rat;
use num_traits::Zero;

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", crate::rat::fmt_rat(&self.lo), crate::rat::fmt_rat(&self.hi))
    }
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn length(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn contains(&self, t: &Rat) -> bool {
        &self.lo <= t && t <= &self.hi
    }

    /// True iff the open interval `(a, b)` intersects `self`.
    pub fn meets_open(&self, a: &Rat, b: &Rat) -> bool {
        // nonempty intersection of [lo,hi] with (a,b)
        &self.lo < b && a < &self.hi
    }
}

/// Sorted, pairwise-disjoint (non-touching) union of closed intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntervalSet {
    ivs: Vec<Interval>,
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { ivs: Vec::new() }
    }

    pub fn from_intervals(mut ivs: Vec<Interval>) -> Self {
        ivs.sort_by(|a, b| a.lo.cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(ivs.len());
        for iv in ivs {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        IntervalSet { ivs: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.ivs
    }

    pub fn is_empty(&self) -> bool {
        self.ivs.is_empty()
    }

    pub fn measure(&self) -> Rat {
        self.ivs.iter().map(|iv| iv.length()).sum()
    }

    pub fn contains(&self, t: &Rat) -> bool {
        self.ivs.iter().any(|iv| iv.contains(t))
    }

    /// True iff some component intersects the open interval `(a, b)`.
    pub fn meets_open(&self, a: &Rat, b: &Rat) -> bool {
        self.ivs.iter().any(|iv| iv.meets_open(a, b))
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.ivs.clone();
        all.extend(other.ivs.iter().cloned());
        IntervalSet::from_intervals(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.ivs {
            for b in &other.ivs {
                let lo = if a.lo >= b.lo { a.lo.clone() } else { b.lo.clone() };
                let hi = if a.hi <= b.hi { a.hi.clone() } else { b.hi.clone() };
                if lo <= hi {
                    out.push(Interval::new(lo, hi));
                }
            }
        }
        IntervalSet::from_intervals(out)
    }

    /// Closed-set difference `self \ other` (removes open interiors of
    /// `other`, so shared endpoints survive).
    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for a in &self.ivs {
            let mut pieces = vec![a.clone()];
            for b in &other.ivs {
                let mut next = Vec::new();
                for p in pieces {
                    if !p.meets_open(&b.lo, &b.hi) && !(b.lo <= p.lo && p.hi <= b.hi) {
                        next.push(p);
                        continue;
                    }
                    if b.lo >= p.lo && b.lo <= p.hi {
                        next.push(Interval::new(p.lo.clone(), b.lo.clone()));
                    } else if p.lo < b.lo {
                        next.push(p.clone());
                        continue;
                    }
                    if b.hi <= p.hi && b.hi >= p.lo {
                        next.push(Interval::new(b.hi.clone(), p.hi.clone()));
                    } else if p.hi > b.hi {
                        // left part already pushed above
                    }
                }
                pieces = next;
            }
            out.extend(pieces);
        }
        // keep degenerate points: they are closed sets of measure zero
        IntervalSet::from_intervals(out)
    }

    /// Translate every interval by `x` and clip to `[0, 1]`.
    pub fn translate_clip_unit(&self, x: &Rat) -> IntervalSet {
        let zero = Rat::zero();
        let one = Rat::from_integer(1.into());
        let mut out = Vec::new();
        for iv in &self.ivs {
            let lo = &iv.lo + x;
            let hi = &iv.hi + x;
            let lo = if lo < zero { zero.clone() } else { lo };
            let hi = if hi > one { one.clone() } else { hi };
            if lo <= hi {
                out.push(Interval::new(lo, hi));
            }
        }
        IntervalSet::from_intervals(out)
    }
}
