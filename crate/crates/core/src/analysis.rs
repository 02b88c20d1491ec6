//! Oscillation covers on dyadic grids, exact scalar traces, and the
//! certified integrability verdict engine built on the retag gap.

use crate::gallery::{KadetsFunction, PiecewiseLinearScalar};
use crate::intervals::{Interval, IntervalSet};
use crate::partitions::{retag_gap, GapUpper, Partition, PointFunction};
use crate::rat::{fmt_rat, pow2, rat_i, Rat};
use crate::spaces::{apply_functional, Functional, NormValue, SpaceSpec};
use crate::{exec, Error, Result};
use num_traits::{One, Signed, Zero};

pub const RESOLUTION_CAP: u32 = 14;
/// refinement depth K (dyadic grids up to 2^K cells) for the probe
pub const DEFAULT_PROBE_BUDGET: u32 = 18;
/// partitions larger than this skip the retag search and rely on
/// construction-certified bounds only
const RETAG_SIZE_CAP: usize = 256;

/// A scalar function on [0,1] arising as a functional composed with a
/// gallery function, with exact piecewise structure where available.
pub enum ScalarTrace<'a> {
    Constant(Rat),
    PiecewiseLinear(PiecewiseLinearScalar),
    Composed { phi: Functional, f: &'a dyn PointFunction },
}

impl ScalarTrace<'_> {
    pub fn eval(&self, t: &Rat) -> Result<Rat> {
        match self {
            ScalarTrace::Constant(c) => Ok(c.clone()),
            ScalarTrace::PiecewiseLinear(g) => g.eval(t),
            ScalarTrace::Composed { phi, f } => apply_functional(phi, &f.eval(t)?),
        }
    }

    /// Oscillation (sup minus inf of attainable values) per closed cell
    /// of the uniform dyadic grid with 2^resolution cells.
    fn cell_oscillations(&self, resolution: u32) -> Result<Vec<Rat>> {
        if resolution > RESOLUTION_CAP {
            return Err(Error::OutOfRange("resolution", resolution.to_string()));
        }
        let cells = 1usize << resolution;
        let h = pow2(-(resolution as i64));
        match self {
            ScalarTrace::Constant(_) => Ok(vec![Rat::zero(); cells]),
            ScalarTrace::PiecewiseLinear(g) => {
                // linear between breakpoints, so per-cell extremes sit at
                // cell endpoints or interior breakpoints: exact
                let mut out = Vec::with_capacity(cells);
                for i in 0..cells {
                    let lo = &h * rat_i(i as i64);
                    let hi = &h * rat_i(i as i64 + 1);
                    let mut vals = vec![g.eval(&lo)?, g.eval(&hi)?];
                    for (x, y) in g.breakpoints() {
                        if *x > lo && *x < hi {
                            vals.push(y.clone());
                        }
                    }
                    let max = vals.iter().max().unwrap().clone();
                    let min = vals.iter().min().unwrap().clone();
                    out.push(max - min);
                }
                Ok(out)
            }
            ScalarTrace::Composed { phi, f } => {
                let p = Partition::uniform(cells)?;
                let summaries = f.summaries(&p)?;
                exec::map_indexed(&summaries, |i, s| {
                    let mut vals = Vec::new();
                    // closed-cell endpoints, then the interior records
                    vals.push(apply_functional(phi, &f.eval(&s.interval.lo)?)?);
                    vals.push(apply_functional(phi, &f.eval(&s.interval.hi)?)?);
                    for (_, v) in &s.records {
                        vals.push(apply_functional(phi, v)?);
                    }
                    if s.zero_attainable {
                        vals.push(Rat::zero());
                    }
                    let _ = i;
                    let max = vals.iter().max().unwrap().clone();
                    let min = vals.iter().min().unwrap().clone();
                    Ok(max - min)
                })
                .into_iter()
                .collect()
            }
        }
    }
}

/// Closed dyadic cells where the trace's oscillation strictly exceeds
/// the threshold, merged where adjacent, with the exact total length.
pub fn oscillation_cover(
    tr: &ScalarTrace,
    threshold: &Rat,
    resolution: u32,
) -> Result<(Vec<Interval>, Rat)> {
    let osc = tr.cell_oscillations(resolution)?;
    let h = pow2(-(resolution as i64));
    let mut out: Vec<Interval> = Vec::new();
    let mut total = Rat::zero();
    for (i, o) in osc.iter().enumerate() {
        if o <= threshold {
            continue;
        }
        total += &h;
        let lo = &h * rat_i(i as i64);
        let hi = &h * rat_i(i as i64 + 1);
        match out.last_mut() {
            Some(last) if last.hi == lo => last.hi = hi,
            _ => out.push(Interval::new(lo, hi)),
        }
    }
    Ok((out, total))
}

#[derive(Debug)]
pub enum IntegrabilityVerdict {
    /// a partition whose certified tagging gap against the candidate
    /// integral (always 0 for the gallery) stays below epsilon
    IntegrableWitness {
        partition: Partition,
        gap: NormValue,
        candidate_integral_zero: bool,
    },
    /// a refining partition family on which the retag-gap lower bound
    /// never drops below delta >= epsilon
    NonIntegrableWitness {
        delta: NormValue,
        family: Vec<Partition>,
    },
    /// search budget exhausted without a certificate either way
    Inconclusive {
        budget: u32,
        best_upper: Option<NormValue>,
        min_lower: Option<NormValue>,
    },
}

/// Searches the construction's own partitions, then the dyadic
/// refinement schedule, for a Gordon-style witness either way. The
/// witness gap is the certified `sup over taggings of ||f(P) - 0||`;
/// small partitions also contribute retag-gap lower bounds toward a
/// non-integrability certificate.
pub fn integrability_probe(
    f: &dyn PointFunction,
    space: &SpaceSpec,
    eps: &Rat,
    budget: u32,
) -> Result<IntegrabilityVerdict> {
    if !eps.is_positive() {
        return Err(Error::OutOfRange("epsilon", fmt_rat(eps)));
    }
    let eps_nv = NormValue::rational(eps.clone());
    let mut best_upper: Option<NormValue> = None;
    let mut lowers: Vec<NormValue> = Vec::new();
    let mut family: Vec<Partition> = Vec::new();

    let mut candidates = f.special_partitions(budget);
    for k in 1..=budget.min(20) {
        candidates.push(Partition::uniform(1usize << k)?);
    }

    for p in candidates {
        let mut upper: Option<NormValue> = f.sum_sup_bound(&p);
        if upper.is_none() && p.len() <= RETAG_SIZE_CAP {
            // the retag upper also bounds ||f(P)|| since the gallery
            // functions attain 0 on every interval
            let gap = retag_gap(f, &p, space)?;
            if let GapUpper::Bounded(u) = gap.upper {
                upper = Some(u);
            } else {
                lowers.push(gap.lower.clone());
                family.push(p.clone());
            }
        }
        if let Some(u) = upper {
            if u.lt(&eps_nv) {
                return Ok(IntegrabilityVerdict::IntegrableWitness {
                    partition: p,
                    gap: u,
                    candidate_integral_zero: true,
                });
            }
            if best_upper.as_ref().map(|b| u.lt(b)).unwrap_or(true) {
                best_upper = Some(u);
            }
        }
    }

    let min_lower = lowers
        .iter()
        .cloned()
        .reduce(|a, b| if a.le(&b) { a } else { b });
    if let Some(delta) = &min_lower {
        if family.len() >= 3 && eps_nv.le(delta) {
            return Ok(IntegrabilityVerdict::NonIntegrableWitness {
                delta: delta.clone(),
                family,
            });
        }
    }
    Ok(IntegrabilityVerdict::Inconclusive { budget, best_upper, min_lower })
}

/// The coordinate trace of the Kadets function at one stage: a rescaled
/// copy of g on each stage removal, 0 elsewhere — exactly piecewise
/// linear, with integral c * integral(g) summed over the removals.
pub fn kadets_coordinate_trace(
    f: &KadetsFunction,
    stage: usize,
) -> Result<PiecewiseLinearScalar> {
    if stage == 0 || stage > f.k.stages() {
        return Err(Error::OutOfRange("kadets stage", stage.to_string()));
    }
    let mut removals = f.k.removed[stage - 1].clone();
    removals.sort_by(|a, b| a.lo.cmp(&b.lo));
    let mut pts = vec![(rat_i(0), rat_i(0))];
    for iv in &removals {
        let len = iv.length();
        for (x, y) in f.g.breakpoints() {
            let t = &iv.lo + &len * x;
            if pts.last().map(|(px, _)| *px < t).unwrap_or(true) {
                pts.push((t, y.clone()));
            }
        }
    }
    if pts.last().map(|(px, _)| !px.is_one()).unwrap_or(true) {
        pts.push((rat_i(1), rat_i(0)));
    }
    PiecewiseLinearScalar::new(pts)
}

pub struct FunctionalCover {
    pub phi: Functional,
    /// (threshold, cover intervals, cover length) down the 1/n ladder
    pub ladder: Vec<(Rat, Vec<Interval>, Rat)>,
}

pub struct WeakDiscontinuityReport {
    pub per_functional: Vec<FunctionalCover>,
    pub union_cover: IntervalSet,
    pub union_length: Rat,
}

/// Oscillation covers per functional at thresholds 1/1, 1/2, ..., 1/n,
/// and the exact length of the union of the finest-threshold covers —
/// the finite surrogate of "weakly continuous almost everywhere".
pub fn weak_discontinuity_report(
    f: &dyn PointFunction,
    functionals: &[Functional],
    resolution: u32,
    ladder_depth: u32,
) -> Result<WeakDiscontinuityReport> {
    if ladder_depth == 0 {
        return Err(Error::OutOfRange("ladder depth", "0".into()));
    }
    let per: Vec<FunctionalCover> = functionals
        .iter()
        .map(|phi| {
            let tr = ScalarTrace::Composed { phi: phi.clone(), f };
            let ladder = (1..=ladder_depth)
                .map(|n| {
                    let th = Rat::new(1.into(), (n as i64).into());
                    let (cover, len) = oscillation_cover(&tr, &th, resolution)?;
                    Ok((th, cover, len))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(FunctionalCover { phi: phi.clone(), ladder })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut union_cover = IntervalSet::empty();
    for fc in &per {
        let (_, cover, _) = fc.ladder.last().expect("ladder nonempty");
        union_cover = union_cover.union(&IntervalSet::from_intervals(cover.clone()));
    }
    let union_length = union_cover.measure();
    Ok(WeakDiscontinuityReport { per_functional: per, union_cover, union_length })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{
        fat_cantor, hat_g, jt_special_partition, null_cantor, CharFamily, JtFunction,
    };
    use crate::rat::rat;
    use crate::spaces::{DyadicNode, Index};

    fn jt_coord_trace(f: &JtFunction, level: u32, pos: u64) -> ScalarTrace<'_> {
        ScalarTrace::Composed {
            phi: Functional::Coordinate(Index::Node(DyadicNode::new(level, pos).unwrap())),
            f,
        }
    }

    #[test]
    fn constant_trace_cover_empty() {
        let tr = ScalarTrace::Constant(rat(5, 7));
        let (cover, len) = oscillation_cover(&tr, &rat(1, 100), 6).unwrap();
        assert!(cover.is_empty());
        assert!(len.is_zero());
    }

    #[test]
    fn jt_single_jump_cover() {
        let f = JtFunction::default();
        let tr = jt_coord_trace(&f, 0, 1);
        for res in [3u32, 5, 7] {
            let (cover, len) = oscillation_cover(&tr, &rat(1, 2), res).unwrap();
            assert_eq!(len, pow2(1 - res as i64), "resolution {res}");
            assert_eq!(cover.len(), 1);
            assert!(cover[0].lo < rat(1, 2) && rat(1, 2) < cover[0].hi);
        }
    }

    #[test]
    fn cover_monotonicity() {
        let f = JtFunction::default();
        let tr = jt_coord_trace(&f, 1, 2);
        let mut prev: Option<Rat> = None;
        for res in 3..=8 {
            let (_, len) = oscillation_cover(&tr, &rat(1, 2), res).unwrap();
            if let Some(p) = prev {
                assert!(len <= p, "length grew at resolution {res}");
            }
            prev = Some(len);
        }
        // lower threshold flags at least as much
        let (_, a) = oscillation_cover(&tr, &rat(1, 2), 5).unwrap();
        let (_, b) = oscillation_cover(&tr, &rat(1, 4), 5).unwrap();
        assert!(a <= b);
    }

    #[test]
    fn char_trace_cover_length() {
        let fam = CharFamily::new(8, vec![rat_i(0)], SpaceSpec::C0).unwrap();
        let res = 4;
        let tr = ScalarTrace::Composed {
            phi: Functional::Coordinate(Index::Label(0)),
            f: &fam,
        };
        let (_, len) = oscillation_cover(&tr, &rat(1, 2), res).unwrap();
        let stage_cover = null_cantor(res as usize).unwrap().cover.measure();
        assert!(len >= stage_cover, "{len} < {stage_cover}");
    }

    #[test]
    fn probe_jt_integrable() {
        let f = JtFunction::default();
        match integrability_probe(&f, &SpaceSpec::Jt, &rat(1, 2), 12).unwrap() {
            IntegrabilityVerdict::IntegrableWitness { gap, candidate_integral_zero, .. } => {
                assert!(gap.lt(&NormValue::rational(rat(1, 2))));
                assert!(candidate_integral_zero);
            }
            other => panic!("expected integrable witness, got {other:?}"),
        }
    }

    #[test]
    fn probe_jt_small_eps() {
        let f = JtFunction::default();
        let eps = pow2(-8);
        match integrability_probe(&f, &SpaceSpec::Jt, &eps, DEFAULT_PROBE_BUDGET).unwrap() {
            IntegrabilityVerdict::IntegrableWitness { partition, gap, .. } => {
                assert!(gap.lt(&NormValue::rational(eps)));
                assert!(partition.len() >= 1 << 15);
            }
            other => panic!("expected integrable witness, got {other:?}"),
        }
    }

    #[test]
    fn probe_char_integrable() {
        let fam = CharFamily::new(6, vec![rat_i(0)], SpaceSpec::C0).unwrap();
        match integrability_probe(&fam, &SpaceSpec::C0, &rat(1, 4), 6).unwrap() {
            IntegrabilityVerdict::IntegrableWitness { gap, .. } => {
                assert!(gap.lt(&NormValue::rational(rat(1, 4))));
            }
            other => panic!("expected integrable witness, got {other:?}"),
        }
        let deep = CharFamily::new(14, vec![rat_i(0)], SpaceSpec::C0).unwrap();
        match integrability_probe(&deep, &SpaceSpec::C0, &pow2(-8), DEFAULT_PROBE_BUDGET)
            .unwrap()
        {
            IntegrabilityVerdict::IntegrableWitness { .. } => {}
            other => panic!("expected integrable witness, got {other:?}"),
        }
    }

    #[test]
    fn probe_kadets_nonintegrable() {
        let f = KadetsFunction { g: hat_g(), k: fat_cantor(12).unwrap() };
        match integrability_probe(&f, &SpaceSpec::Lp(rat_i(2)), &rat(1, 4), 9).unwrap() {
            IntegrabilityVerdict::NonIntegrableWitness { delta, family } => {
                assert!(NormValue::rational(rat(1, 3)).le(&delta));
                assert!(family.len() >= 3);
            }
            other => panic!("expected non-integrable witness, got {other:?}"),
        }
    }

    #[test]
    fn probe_inconclusive_on_tiny_budget() {
        let f = JtFunction::default();
        match integrability_probe(&f, &SpaceSpec::Jt, &pow2(-8), 4).unwrap() {
            IntegrabilityVerdict::Inconclusive { best_upper, .. } => {
                assert!(best_upper.is_some());
            }
            other => panic!("expected inconclusive, got {other:?}"),
        }
        assert!(integrability_probe(&f, &SpaceSpec::Jt, &rat_i(0), 4).is_err());
    }

    #[test]
    fn kadets_traces_integrate_to_zero() {
        let f = KadetsFunction { g: hat_g(), k: fat_cantor(6).unwrap() };
        for stage in 1..=6 {
            let tr = kadets_coordinate_trace(&f, stage).unwrap();
            assert!(tr.integral().is_zero(), "stage {stage}");
            // trace agrees with the functional composition
            let phi = Functional::Coordinate(Index::Nat(stage as u64));
            for t in [rat(1, 7), rat(1, 2), rat(15, 32), rat(31, 64), rat(9, 11)] {
                assert_eq!(
                    tr.eval(&t).unwrap(),
                    apply_functional(&phi, &crate::gallery::kadets_eval(&f, &t).unwrap())
                        .unwrap(),
                    "stage {stage} at {t}"
                );
            }
        }
        assert!(kadets_coordinate_trace(&f, 0).is_err());
        assert!(kadets_coordinate_trace(&f, 7).is_err());
    }

    #[test]
    fn weak_report_zero_function() {
        let zero_g = PiecewiseLinearScalar::new(vec![(rat_i(0), rat_i(0)), (rat_i(1), rat_i(0))])
            .unwrap();
        let f = KadetsFunction { g: zero_g, k: fat_cantor(4).unwrap() };
        let phis: Vec<Functional> =
            (1..=4).map(|n| Functional::Coordinate(Index::Nat(n))).collect();
        let rep = weak_discontinuity_report(&f, &phis, 6, 3).unwrap();
        assert!(rep.union_length.is_zero());
    }

    #[test]
    fn weak_report_kadets_shrinks() {
        let f = KadetsFunction { g: hat_g(), k: fat_cantor(4).unwrap() };
        let phis: Vec<Functional> =
            (1..=4).map(|n| Functional::Coordinate(Index::Nat(n))).collect();
        let r4 = weak_discontinuity_report(&f, &phis, 4, 3).unwrap();
        let r7 = weak_discontinuity_report(&f, &phis, 7, 3).unwrap();
        assert!(r7.union_length <= r4.union_length);
    }

    #[test]
    fn weak_report_char_persists() {
        let fam = CharFamily::new(8, vec![rat_i(0)], SpaceSpec::C0).unwrap();
        let phis = vec![Functional::Coordinate(Index::Label(0))];
        let rep = weak_discontinuity_report(&fam, &phis, 5, 2).unwrap();
        assert!(rep.union_length >= null_cantor(5).unwrap().cover.measure());
    }

    #[test]
    fn jt_special_partitions_probed_first() {
        let f = JtFunction::default();
        let specials = f.special_partitions(3);
        assert_eq!(specials.len(), 3);
        assert_eq!(specials[1], jt_special_partition(2).unwrap().partition);
    }
}
