//! Matrix operators between truncated sequence spaces, the
//! horizon-bounded Dunford-Pettis test, and the Riemann-sum dichotomy
//! demo built on the Kadets-style gallery function.

use crate::gallery::{CantorSetDescriptor, KadetsFunction, PiecewiseLinearScalar};
use crate::partitions::{riemann_sum, Partition, TaggedPartition};
use crate::rat::{fmt_rat, parse_rat, pow2, rat, rat_i, Rat};
use crate::spaces::{
    apply_functional, norm, Functional, Index, IndexUniverse, NormValue, SpaceSpec, SparseVector,
};
use crate::{Error, Result};
use num_traits::{Signed, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixKind {
    Identity,
    Zero,
    /// diag(2^{-n}) on the naturals
    DiagPow2,
    /// sparse entries keyed (row, col)
    Sparse(BTreeMap<(Index, Index), Rat>),
}

#[derive(Debug, Clone)]
pub struct MatrixOperator {
    pub domain_space: SpaceSpec,
    pub domain: IndexUniverse,
    pub codomain_space: SpaceSpec,
    pub codomain: IndexUniverse,
    pub kind: MatrixKind,
}

impl MatrixOperator {
    pub fn identity_l2() -> Self {
        MatrixOperator {
            domain_space: SpaceSpec::Lp(rat_i(2)),
            domain: IndexUniverse::Naturals,
            codomain_space: SpaceSpec::Lp(rat_i(2)),
            codomain: IndexUniverse::Naturals,
            kind: MatrixKind::Identity,
        }
    }

    pub fn zero_l2() -> Self {
        MatrixOperator { kind: MatrixKind::Zero, ..Self::identity_l2() }
    }

    pub fn diag_pow2_l2() -> Self {
        MatrixOperator { kind: MatrixKind::DiagPow2, ..Self::identity_l2() }
    }

    pub fn sparse_l2(entries: BTreeMap<(Index, Index), Rat>) -> Result<Self> {
        let op = MatrixOperator {
            kind: MatrixKind::Sparse(entries),
            ..Self::identity_l2()
        };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if let MatrixKind::Sparse(m) = &self.kind {
            for (row, col) in m.keys() {
                if !self.codomain.contains(row) {
                    return Err(Error::IndexOutOfUniverse(
                        row.to_string(),
                        self.codomain.to_string(),
                    ));
                }
                if !self.domain.contains(col) {
                    return Err(Error::IndexOutOfUniverse(
                        col.to_string(),
                        self.domain.to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn matrix_apply(t: &MatrixOperator, v: &SparseVector) -> Result<SparseVector> {
    if v.universe != t.domain {
        return Err(Error::IncompatibleSpace(
            v.universe.to_string(),
            t.domain.to_string(),
        ));
    }
    match &t.kind {
        MatrixKind::Identity => Ok(v.clone()),
        MatrixKind::Zero => Ok(SparseVector::zero(t.codomain.clone())),
        MatrixKind::DiagPow2 => {
            let entries: Vec<(Index, Rat)> = v
                .entries()
                .map(|(idx, c)| match idx {
                    Index::Nat(n) => Ok((idx.clone(), c * pow2(-(*n as i64)))),
                    other => Err(Error::IndexOutOfUniverse(
                        other.to_string(),
                        "naturals".into(),
                    )),
                })
                .collect::<Result<_>>()?;
            SparseVector::from_entries(t.codomain.clone(), entries)
        }
        MatrixKind::Sparse(m) => {
            let mut acc: BTreeMap<Index, Rat> = BTreeMap::new();
            for ((row, col), a) in m {
                let c = v.get(col);
                if !c.is_zero() {
                    *acc.entry(row.clone()).or_insert_with(Rat::zero) += a * c;
                }
            }
            SparseVector::from_entries(t.codomain.clone(), acc)
        }
    }
}

#[derive(Debug, Clone)]
pub enum SeqKind {
    CanonicalBasis,
    ScaledBasis(Vec<Rat>),
    Explicit(Vec<SparseVector>),
}

/// A declared bounded tau-null sequence: the tau topology is stood in for
/// by the finite list of functionals the sequence is declared null
/// against.
#[derive(Debug, Clone)]
pub struct SequenceSpec {
    pub kind: SeqKind,
    pub universe: IndexUniverse,
    pub space: SpaceSpec,
    pub bound: Rat,
    pub null_against: Vec<Functional>,
}

impl SequenceSpec {
    pub fn canonical_l2() -> Self {
        SequenceSpec {
            kind: SeqKind::CanonicalBasis,
            universe: IndexUniverse::Naturals,
            space: SpaceSpec::Lp(rat_i(2)),
            bound: rat_i(1),
            null_against: (1..=4)
                .map(|k| Functional::Coordinate(Index::Nat(k)))
                .collect(),
        }
    }

    /// x_n, 1-based
    pub fn vector(&self, n: u64) -> Result<SparseVector> {
        match &self.kind {
            SeqKind::CanonicalBasis => {
                SparseVector::basis(self.universe.clone(), Index::Nat(n))
            }
            SeqKind::ScaledBasis(scales) => {
                let c = scales
                    .get((n - 1) as usize)
                    .ok_or_else(|| Error::OutOfRange("sequence index", n.to_string()))?;
                SparseVector::from_entries(self.universe.clone(), [(Index::Nat(n), c.clone())])
            }
            SeqKind::Explicit(vs) => vs
                .get((n - 1) as usize)
                .cloned()
                .ok_or_else(|| Error::OutOfRange("sequence index", n.to_string())),
        }
    }

    /// checks the declared bound and the declared tau-null pairings up to
    /// the horizon: tail-window pairings must not exceed head-window ones
    /// and must vanish whenever the head window already vanished
    pub fn validate(&self, horizon: u64) -> Result<()> {
        let bound_nv = NormValue::rational(self.bound.clone());
        for n in 1..=horizon {
            let x = self.vector(n)?;
            let nv = norm(&x, &self.space)?;
            if bound_nv.lt(&nv) {
                return Err(Error::SequenceBoundViolated(n, fmt_rat(&self.bound)));
            }
        }
        let half = (horizon / 2).max(1);
        for phi in &self.null_against {
            let head: Rat = (1..=half)
                .map(|n| Ok(apply_functional(phi, &self.vector(n)?)?.abs()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max()
                .unwrap();
            let tail: Rat = (half + 1..=horizon)
                .map(|n| Ok(apply_functional(phi, &self.vector(n)?)?.abs()))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .max()
                .unwrap_or_else(Rat::zero);
            if tail > head || (head.is_zero() && !tail.is_zero()) {
                return Err(Error::Invalid(
                    "sequence is not null against a declared functional".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum DpVerdict {
    /// all tail-window norms stayed below eta — a horizon-bounded
    /// surrogate, not a proof of the DP property
    PassAtHorizon { horizon: u64, max_tail_norm: NormValue },
    FailWitness { n: u64, norm: NormValue },
}

/// ||T x_n|| < eta for every n in the tail window [horizon/2, horizon]?
pub fn dp_test(
    t: &MatrixOperator,
    xs: &SequenceSpec,
    horizon: u64,
    eta: &Rat,
) -> Result<DpVerdict> {
    xs.validate(horizon)?;
    let eta_nv = NormValue::rational(eta.clone());
    let mut max_tail = NormValue::zero();
    for n in (horizon / 2).max(1)..=horizon {
        let nv = norm(&matrix_apply(t, &xs.vector(n)?)?, &t.codomain_space)?;
        if !nv.lt(&eta_nv) {
            return Ok(DpVerdict::FailWitness { n, norm: nv });
        }
        if max_tail.lt(&nv) {
            max_tail = nv;
        }
    }
    Ok(DpVerdict::PassAtHorizon { horizon, max_tail_norm: max_tail })
}

#[derive(Debug)]
pub enum DpDemo {
    /// non-integrability side: per partition, the adversarial sum and the
    /// (1/3)||g|| threshold it strictly exceeds
    Fail {
        witness_n: u64,
        rows: Vec<(usize, NormValue, NormValue)>,
    },
    /// integrability side: successive Riemann-sum gaps along the refining
    /// partition list
    Pass {
        gaps: Vec<NormValue>,
        strictly_decreasing: bool,
    },
}

// a non-dyadic offset keeps the tags off every uniform refinement's grid,
// so no two successive sums accidentally coincide
fn demo_tags(p: &Partition) -> TaggedPartition {
    TaggedPartition::with_tags(p.clone(), |iv| &iv.lo + iv.length() * rat(1, 7))
        .expect("1/7 points are interior")
}

/// The Riemann-sum dichotomy: if dp_test fails, renormalize the witness
/// direction so ||T x_n|| = 1 and exhibit the uniform (1/3)||g|| lower
/// bound on every supplied partition; if it passes, report the Cauchy
/// behavior of the sums T f_g(P_i) along the refining list.
pub fn dp_riemann_demo(
    t: &MatrixOperator,
    xs: &SequenceSpec,
    g: &PiecewiseLinearScalar,
    k: &CantorSetDescriptor,
    partitions: &[Partition],
) -> Result<DpDemo> {
    let horizon = 16;
    let eta = rat(1, 100);
    match dp_test(t, xs, horizon, &eta)? {
        DpVerdict::FailWitness { n, .. } => {
            // scale column n of T by 1 / ||T x_n|| for each stage index;
            // only exactly representable (rational) norms are allowed
            let stages = k.stages() as u64;
            let mut entries = BTreeMap::new();
            for col in 1..=stages {
                let image = matrix_apply(t, &xs.vector(col)?)?;
                let nv = norm(&image, &t.codomain_space)?;
                let r = nv.as_rational().ok_or_else(|| {
                    Error::Renormalization(format!(
                        "||T x_{col}|| is not an exact rational"
                    ))
                })?;
                if r.is_zero() {
                    return Err(Error::Renormalization(format!(
                        "||T x_{col}|| = 0 in the witness tail"
                    )));
                }
                for (idx, c) in image.entries() {
                    entries.insert((idx.clone(), Index::Nat(col)), c / &r);
                }
            }
            let tn = MatrixOperator::sparse_l2(entries)?;
            let f = KadetsFunction { g: g.clone(), k: k.clone() };
            let rows = partitions
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let lb = crate::gallery::kadets_sum_lowerbound(&f, p, Some(&tn))?;
                    Ok((i, lb.achieved, lb.threshold))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(DpDemo::Fail { witness_n: n, rows })
        }
        DpVerdict::PassAtHorizon { .. } => {
            let f = KadetsFunction { g: g.clone(), k: k.clone() };
            let mut sums = Vec::new();
            for p in partitions {
                let tagged = demo_tags(p);
                let s = riemann_sum(&f, &tagged, &SpaceSpec::Lp(rat_i(2)))?;
                sums.push(matrix_apply(t, &s)?);
            }
            let mut gaps = Vec::new();
            for w in sums.windows(2) {
                gaps.push(norm(&w[0].sub(&w[1])?, &t.codomain_space)?);
            }
            let strictly_decreasing = gaps.windows(2).all(|w| w[1].lt(&w[0]));
            Ok(DpDemo::Pass { gaps, strictly_decreasing })
        }
    }
}

// ---------------------------------------------------------------------
// Matrix file format: `rows cols` header, then `i j p/q` triples with
// 1-based natural indices.
// ---------------------------------------------------------------------

pub fn parse_matrix(text: &str) -> Result<MatrixOperator> {
    let mut lines = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let dims: Vec<u64> = header
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| Error::Parse(format!("bad dimension {w}"))))
        .collect::<Result<_>>()?;
    if dims.len() != 2 {
        return Err(Error::Parse("header must be `rows cols`".into()));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut entries = BTreeMap::new();
    for line in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("expected `i j p/q`, got `{line}`")));
        }
        let i: u64 = parts[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad row index {}", parts[0])))?;
        let j: u64 = parts[1]
            .parse()
            .map_err(|_| Error::Parse(format!("bad col index {}", parts[1])))?;
        if i == 0 || i > rows || j == 0 || j > cols {
            return Err(Error::Parse(format!("entry ({i},{j}) outside {rows}x{cols}")));
        }
        entries.insert((Index::Nat(i), Index::Nat(j)), parse_rat(parts[2])?);
    }
    MatrixOperator::sparse_l2(entries)
}

pub fn format_matrix(t: &MatrixOperator) -> Result<String> {
    match &t.kind {
        MatrixKind::Sparse(m) => {
            let rows = m
                .keys()
                .filter_map(|(r, _)| match r {
                    Index::Nat(n) => Some(*n),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            let cols = m
                .keys()
                .filter_map(|(_, c)| match c {
                    Index::Nat(n) => Some(*n),
                    _ => None,
                })
                .max()
                .unwrap_or(0);
            let mut out = format!("{rows} {cols}\n");
            for ((r, c), v) in m {
                if let (Index::Nat(i), Index::Nat(j)) = (r, c) {
                    out.push_str(&format!("{i} {j} {}\n", fmt_rat(v)));
                }
            }
            Ok(out)
        }
        _ => Err(Error::Invalid("only sparse matrices serialize".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery::{fat_cantor, hat_g};

    #[test]
    fn matrix_apply_examples() {
        let e3 = SparseVector::basis(IndexUniverse::Naturals, Index::Nat(3)).unwrap();
        let id = MatrixOperator::identity_l2();
        assert_eq!(matrix_apply(&id, &e3).unwrap(), e3);

        let d = MatrixOperator::diag_pow2_l2();
        let out = matrix_apply(&d, &e3).unwrap();
        assert_eq!(out.get(&Index::Nat(3)), rat(1, 8));

        let z = MatrixOperator::zero_l2();
        assert!(matrix_apply(&z, &e3).unwrap().is_zero());
    }

    #[test]
    fn matrix_apply_linear() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut entries = BTreeMap::new();
        for _ in 0..12 {
            let i = rng.gen_range(1..=5u64);
            let j = rng.gen_range(1..=5u64);
            entries.insert(
                (Index::Nat(i), Index::Nat(j)),
                rat(rng.gen_range(-4i64..=4), rng.gen_range(1i64..=4)),
            );
        }
        let t = MatrixOperator::sparse_l2(entries).unwrap();
        for _ in 0..10 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                SparseVector::from_entries(
                    IndexUniverse::Naturals,
                    (1..=5u64).map(|n| (Index::Nat(n), rat(rng.gen_range(-3i64..=3), 2))),
                )
                .unwrap()
            };
            let x = mk(&mut rng);
            let y = mk(&mut rng);
            let lhs = matrix_apply(&t, &x.add(&y).unwrap()).unwrap();
            let rhs = matrix_apply(&t, &x)
                .unwrap()
                .add(&matrix_apply(&t, &y).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dp_test_examples() {
        let xs = SequenceSpec::canonical_l2();
        let eta = rat(1, 100);
        match dp_test(&MatrixOperator::diag_pow2_l2(), &xs, 16, &eta).unwrap() {
            DpVerdict::PassAtHorizon { max_tail_norm, .. } => {
                assert!(max_tail_norm.le(&NormValue::rational(pow2(-8))));
            }
            _ => panic!("expected pass"),
        }
        match dp_test(&MatrixOperator::identity_l2(), &xs, 16, &eta).unwrap() {
            DpVerdict::FailWitness { norm, .. } => {
                assert_eq!(norm.cmp_exact(&NormValue::rational(rat_i(1))), std::cmp::Ordering::Equal);
            }
            _ => panic!("expected fail"),
        }
        match dp_test(&MatrixOperator::zero_l2(), &xs, 16, &eta).unwrap() {
            DpVerdict::PassAtHorizon { max_tail_norm, .. } => assert!(max_tail_norm.is_zero()),
            _ => panic!("expected pass"),
        }
    }

    #[test]
    fn dp_test_monotone_in_eta() {
        let xs = SequenceSpec::canonical_l2();
        let t = MatrixOperator::diag_pow2_l2();
        assert!(matches!(
            dp_test(&t, &xs, 16, &rat(1, 100)).unwrap(),
            DpVerdict::PassAtHorizon { .. }
        ));
        assert!(matches!(
            dp_test(&t, &xs, 16, &rat(1, 10)).unwrap(),
            DpVerdict::PassAtHorizon { .. }
        ));
    }

    #[test]
    fn sequence_bound_enforced() {
        let xs = SequenceSpec {
            kind: SeqKind::ScaledBasis((1..=16).map(rat_i).collect()),
            bound: rat_i(1),
            ..SequenceSpec::canonical_l2()
        };
        assert!(matches!(
            xs.validate(16),
            Err(Error::SequenceBoundViolated(2, _))
        ));
    }

    #[test]
    fn demo_zero_operator_all_sums_zero() {
        let xs = SequenceSpec::canonical_l2();
        let k = fat_cantor(4).unwrap();
        let parts: Vec<Partition> = [4usize, 8, 16]
            .iter()
            .map(|&n| Partition::uniform(n).unwrap())
            .collect();
        match dp_riemann_demo(&MatrixOperator::zero_l2(), &xs, &hat_g(), &k, &parts).unwrap() {
            DpDemo::Pass { gaps, .. } => assert!(gaps.iter().all(|g| g.is_zero())),
            _ => panic!("expected pass branch"),
        }
    }

    #[test]
    fn matrix_file_roundtrip() {
        let text = "3 3\n1 1 1/2\n2 3 -4\n";
        let t = parse_matrix(text).unwrap();
        let back = format_matrix(&t).unwrap();
        let t2 = parse_matrix(&back).unwrap();
        assert_eq!(t.kind, t2.kind);
        assert!(parse_matrix("2 2\n3 1 1/2\n").is_err());
        assert!(parse_matrix("2 2\n1 1 x\n").is_err());
    }
}
