//! Sparse exact vectors, the four norm families, functionals and the
//! l1-sum inequality.

use crate::rat::{
    decimal_string, fmt_rat, nth_root_lower, nth_root_upper, parse_rat, pow_u, sqrt_lower,
    sqrt_upper, Rat,
};
use crate::{Error, Result};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A node `(level, pos)` of the dyadic tree, `1 <= pos <= 2^level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicNode {
    pub level: u32,
    pub pos: u64,
}

impl DyadicNode {
    pub fn new(level: u32, pos: u64) -> Result<Self> {
        if level > 62 || pos == 0 || pos > (1u64 << level) {
            return Err(Error::OutOfRange(
                "dyadic node",
                format!("({level},{pos})"),
            ));
        }
        Ok(DyadicNode { level, pos })
    }

    pub fn left_child(&self) -> DyadicNode {
        DyadicNode { level: self.level + 1, pos: 2 * self.pos - 1 }
    }

    pub fn right_child(&self) -> DyadicNode {
        DyadicNode { level: self.level + 1, pos: 2 * self.pos }
    }

    pub fn parent(&self) -> Option<DyadicNode> {
        if self.level == 0 {
            None
        } else {
            Some(DyadicNode { level: self.level - 1, pos: (self.pos + 1) / 2 })
        }
    }

    pub fn is_child_of(&self, other: &DyadicNode) -> bool {
        self.parent().as_ref() == Some(other)
    }

    /// True iff `self` lies on the root path of `other` (or equals it).
    pub fn is_ancestor_of(&self, other: &DyadicNode) -> bool {
        if self.level > other.level {
            return false;
        }
        let shift = other.level - self.level;
        (other.pos - 1) >> shift == self.pos - 1
    }
}

impl fmt::Display for DyadicNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Index {
    Nat(u64),
    Label(u64),
    Node(DyadicNode),
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Index::Nat(n) => write!(f, "{n}"),
            Index::Label(n) => write!(f, "{n}"),
            Index::Node(nd) => write!(f, "{nd}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexUniverse {
    Naturals,
    FiniteLabels(u64),
    DyadicTree(u32),
}

impl IndexUniverse {
    pub fn contains(&self, idx: &Index) -> bool {
        match (self, idx) {
            (IndexUniverse::Naturals, Index::Nat(_)) => true,
            (IndexUniverse::FiniteLabels(k), Index::Label(i)) => i < k,
            (IndexUniverse::DyadicTree(max), Index::Node(n)) => {
                n.level <= *max && n.pos >= 1 && n.pos <= (1u64 << n.level)
            }
            _ => false,
        }
    }
}

impl fmt::Display for IndexUniverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexUniverse::Naturals => write!(f, "naturals"),
            IndexUniverse::FiniteLabels(k) => write!(f, "labels {k}"),
            IndexUniverse::DyadicTree(l) => write!(f, "dyadic {l}"),
        }
    }
}

/// Finitely supported vector; zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseVector {
    pub universe: IndexUniverse,
    entries: BTreeMap<Index, Rat>,
}

impl SparseVector {
    pub fn zero(universe: IndexUniverse) -> Self {
        SparseVector { universe, entries: BTreeMap::new() }
    }

    pub fn from_entries(
        universe: IndexUniverse,
        entries: impl IntoIterator<Item = (Index, Rat)>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, val) in entries {
            if !universe.contains(&idx) {
                return Err(Error::IndexOutOfUniverse(idx.to_string(), universe.to_string()));
            }
            if !val.is_zero() {
                let cur = map.entry(idx).or_insert_with(Rat::zero);
                *cur += val;
            }
        }
        map.retain(|_, v: &mut Rat| !v.is_zero());
        Ok(SparseVector { universe, entries: map })
    }

    pub fn basis(universe: IndexUniverse, idx: Index) -> Result<Self> {
        Self::from_entries(universe, [(idx, Rat::one())])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Index, &Rat)> {
        self.entries.iter()
    }

    pub fn get(&self, idx: &Index) -> Rat {
        self.entries.get(idx).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add(&self, other: &SparseVector) -> Result<SparseVector> {
        if self.universe != other.universe {
            return Err(Error::Invalid("vector universes differ".into()));
        }
        let mut map = self.entries.clone();
        for (idx, val) in &other.entries {
            let cur = map.entry(idx.clone()).or_insert_with(Rat::zero);
            *cur += val;
        }
        map.retain(|_, v| !v.is_zero());
        Ok(SparseVector { universe: self.universe.clone(), entries: map })
    }

    pub fn sub(&self, other: &SparseVector) -> Result<SparseVector> {
        self.add(&other.scale(&-Rat::one()))
    }

    pub fn scale(&self, c: &Rat) -> SparseVector {
        if c.is_zero() {
            return SparseVector::zero(self.universe.clone());
        }
        SparseVector {
            universe: self.universe.clone(),
            entries: self.entries.iter().map(|(i, v)| (i.clone(), v * c)).collect(),
        }
    }

    /// Restriction to the index set `keep`; the complement restriction is
    /// `self - project`.
    pub fn project(&self, keep: &BTreeSet<Index>) -> SparseVector {
        SparseVector {
            universe: self.universe.clone(),
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| keep.contains(i))
                .map(|(i, v)| (i.clone(), v.clone()))
                .collect(),
        }
    }
}

/// Which norm to apply to a vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpaceSpec {
    C0,
    Lp(Rat),
    /// l1-sum of finite blocks; the map sends each index to its block
    /// label and must be total on the vector's support.
    L1Sum(BTreeMap<Index, u64>),
    Jt,
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::C0 => write!(f, "c0"),
            SpaceSpec::Lp(p) => write!(f, "lp({})", fmt_rat(p)),
            SpaceSpec::L1Sum(_) => write!(f, "l1sum"),
            SpaceSpec::Jt => write!(f, "jt"),
        }
    }
}

/// Exact norm certificate. The stored rational determines the norm
/// exactly: either the norm itself, its p-th power, or its square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    ExactRational(Rat),
    ExactPowerP { value_pow_p: Rat, p: u32 },
    ExactSquare(Rat),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormValue {
    pub certificate: Certificate,
}

impl NormValue {
    pub fn rational(r: Rat) -> Self {
        assert!(!r.is_negative());
        NormValue { certificate: Certificate::ExactRational(r) }
    }

    pub fn square(s: Rat) -> Self {
        assert!(!s.is_negative());
        NormValue { certificate: Certificate::ExactSquare(s) }
    }

    pub fn power_p(v: Rat, p: u32) -> Self {
        assert!(!v.is_negative());
        NormValue { certificate: Certificate::ExactPowerP { value_pow_p: v, p } }
    }

    pub fn zero() -> Self {
        NormValue::rational(Rat::zero())
    }

    pub fn is_zero(&self) -> bool {
        match &self.certificate {
            Certificate::ExactRational(r) => r.is_zero(),
            Certificate::ExactPowerP { value_pow_p, .. } => value_pow_p.is_zero(),
            Certificate::ExactSquare(s) => s.is_zero(),
        }
    }

    /// The exact rational value of this norm, when it has one.
    pub fn as_rational(&self) -> Option<Rat> {
        match &self.certificate {
            Certificate::ExactRational(r) => Some(r.clone()),
            Certificate::ExactSquare(s) => crate::rat::exact_sqrt(s),
            Certificate::ExactPowerP { value_pow_p, p } => {
                if value_pow_p.is_negative() {
                    return None;
                }
                let a = value_pow_p.numer().nth_root(*p);
                let b = value_pow_p.denom().nth_root(*p);
                let root = Rat::new(a, b);
                (pow_u(&root, *p) == *value_pow_p).then_some(root)
            }
        }
    }

    /// `(exponent, norm^exponent)` view of the certificate.
    fn power_view(&self) -> (u32, Rat) {
        match &self.certificate {
            Certificate::ExactRational(r) => (1, r.clone()),
            Certificate::ExactPowerP { value_pow_p, p } => (*p, value_pow_p.clone()),
            Certificate::ExactSquare(s) => (2, s.clone()),
        }
    }

    /// Exact comparison: norms are nonnegative, so `a <= b` iff
    /// `a^pq <= b^pq` for the cross exponents.
    pub fn cmp_exact(&self, other: &NormValue) -> std::cmp::Ordering {
        let (p, a) = self.power_view();
        let (q, b) = other.power_view();
        pow_u(&a, q).cmp(&pow_u(&b, p))
    }

    pub fn le(&self, other: &NormValue) -> bool {
        self.cmp_exact(other) != std::cmp::Ordering::Greater
    }

    pub fn lt(&self, other: &NormValue) -> bool {
        self.cmp_exact(other) == std::cmp::Ordering::Less
    }

    /// Certificate for `|c| * norm`.
    pub fn scale(&self, c: &Rat) -> NormValue {
        let c = c.abs();
        match &self.certificate {
            Certificate::ExactRational(r) => NormValue::rational(r * &c),
            Certificate::ExactSquare(s) => NormValue::square(s * &c * &c),
            Certificate::ExactPowerP { value_pow_p, p } => {
                NormValue::power_p(value_pow_p * pow_u(&c, *p), *p)
            }
        }
    }

    /// Rational bracket `[lo, hi]` of the norm, `hi - lo <= 2*10^-digits`.
    pub fn bracket(&self, digits: u32) -> (Rat, Rat) {
        match &self.certificate {
            Certificate::ExactRational(r) => (r.clone(), r.clone()),
            Certificate::ExactSquare(s) => (sqrt_lower(s, digits), sqrt_upper(s, digits)),
            Certificate::ExactPowerP { value_pow_p, p } => (
                nth_root_lower(value_pow_p, *p, digits),
                nth_root_upper(value_pow_p, *p, digits),
            ),
        }
    }

    /// High-precision decimal of the norm value.
    pub fn decimal(&self, digits: u32) -> String {
        let (lo, _) = self.bracket(digits + 4);
        decimal_string(&lo, digits)
    }

    /// Exact check of `||u + v|| <= ||u|| + ||v||` given the three
    /// certificates, all in the same certificate family.
    pub fn triangle_holds(sum: &NormValue, a: &NormValue, b: &NormValue) -> bool {
        // sum <= a + b  <=>  sum^2 <= a^2 + b^2 + 2ab, checked on squares
        // with the cross term squared once more when needed.
        let (ps, s) = sum.power_view();
        let (pa, av) = a.power_view();
        let (pb, bv) = b.power_view();
        if ps == 1 && pa == 1 && pb == 1 {
            return s <= av + bv;
        }
        if ps == 2 && pa == 2 && pb == 2 {
            // s <= a2 + b2 + 2*sqrt(a2*b2)
            let rest = &s - &av - &bv;
            if !rest.is_positive() {
                return true;
            }
            return &rest * &rest <= Rat::from_integer(4.into()) * av * bv;
        }
        // mixed families: fall back to a certified bracket comparison
        let digits = 60;
        let (_, s_hi) = sum.bracket(digits);
        let (a_lo, _) = a.bracket(digits);
        let (b_lo, _) = b.bracket(digits);
        // allow the bracket slack
        let slack = Rat::new(4.into(), num_bigint::BigInt::from(10u32).pow(digits));
        s_hi <= a_lo + b_lo + slack
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cert = match &self.certificate {
            Certificate::ExactRational(r) => format!("exact={}", fmt_rat(r)),
            Certificate::ExactSquare(s) => format!("square={}", fmt_rat(s)),
            Certificate::ExactPowerP { value_pow_p, p } => {
                format!("pow{}={}", p, fmt_rat(value_pow_p))
            }
        };
        write!(f, "{} ({})", self.decimal(12), cert)
    }
}

/// A norm-continuous functional usable against sparse vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Functional {
    Coordinate(Index),
    /// Chain of dyadic nodes, each an immediate successor of the previous;
    /// pairs as the sum of the coordinate functionals along the chain.
    Branch(Vec<DyadicNode>),
    FiniteCombination(BTreeMap<Index, Rat>),
}

impl Functional {
    pub fn branch(nodes: Vec<DyadicNode>) -> Result<Self> {
        for w in nodes.windows(2) {
            if !w[1].is_child_of(&w[0]) {
                return Err(Error::Invalid(format!(
                    "branch break: {} is not an immediate successor of {}",
                    w[1], w[0]
                )));
            }
        }
        if nodes.is_empty() {
            return Err(Error::Invalid("empty branch functional".into()));
        }
        Ok(Functional::Branch(nodes))
    }
}

/// Exact pairing `<v, functional>`.
pub fn apply_functional(phi: &Functional, v: &SparseVector) -> Result<Rat> {
    match phi {
        Functional::Coordinate(idx) => {
            if !v.universe.contains(idx) {
                return Err(Error::IndexOutOfUniverse(idx.to_string(), v.universe.to_string()));
            }
            Ok(v.get(idx))
        }
        Functional::Branch(nodes) => {
            let mut acc = Rat::zero();
            for n in nodes {
                let idx = Index::Node(*n);
                if !v.universe.contains(&idx) {
                    return Err(Error::IndexOutOfUniverse(idx.to_string(), v.universe.to_string()));
                }
                acc += v.get(&idx);
            }
            Ok(acc)
        }
        Functional::FiniteCombination(coefs) => {
            let mut acc = Rat::zero();
            for (idx, c) in coefs {
                if !v.universe.contains(idx) {
                    return Err(Error::IndexOutOfUniverse(idx.to_string(), v.universe.to_string()));
                }
                acc += c * v.get(idx);
            }
            Ok(acc)
        }
    }
}

/// Certified norm of `v` in `space`.
pub fn norm(v: &SparseVector, space: &SpaceSpec) -> Result<NormValue> {
    match space {
        SpaceSpec::C0 => {
            let mut best = Rat::zero();
            for (_, val) in v.entries() {
                let a = val.abs();
                if a > best {
                    best = a;
                }
            }
            Ok(NormValue::rational(best))
        }
        SpaceSpec::Lp(p) => {
            if !p.denom().is_one() || *p < Rat::one() {
                return Err(Error::UnsupportedExponent(fmt_rat(p)));
            }
            let pi = p
                .numer()
                .to_u32()
                .ok_or_else(|| Error::UnsupportedExponent(fmt_rat(p)))?;
            let mut acc = Rat::zero();
            for (_, val) in v.entries() {
                acc += pow_u(&val.abs(), pi);
            }
            if pi == 1 {
                Ok(NormValue::rational(acc))
            } else if pi == 2 {
                Ok(NormValue::square(acc))
            } else {
                Ok(NormValue::power_p(acc, pi))
            }
        }
        SpaceSpec::L1Sum(blocks) => {
            // block spaces are finite l1 spaces, so the total norm is the
            // plain l1 norm; the block structure matters for projections
            // and the inequality check
            let mut acc = Rat::zero();
            for (idx, val) in v.entries() {
                if !blocks.contains_key(idx) {
                    return Err(Error::MissingBlock(idx.to_string()));
                }
                acc += val.abs();
            }
            Ok(NormValue::rational(acc))
        }
        SpaceSpec::Jt => match &v.universe {
            IndexUniverse::DyadicTree(_) => crate::jt_norm::jt_norm_dp(v),
            u => Err(Error::IncompatibleSpace(u.to_string(), "jt".into())),
        },
    }
}

/// Outcome of the l1-sum inequality check
/// `max{||x+y||, ||x-y||} >= sum_A ||pi_i x|| + sum_B ||pi_i y||`.
#[derive(Debug, Clone)]
pub struct L1SumVerdict {
    pub lhs: Rat,
    pub rhs: Rat,
    pub holds: bool,
}

pub fn l1sum_inequality_check(
    x: &SparseVector,
    y: &SparseVector,
    a_blocks: &BTreeSet<u64>,
    b_blocks: &BTreeSet<u64>,
    blocks: &BTreeMap<Index, u64>,
) -> Result<L1SumVerdict> {
    if let Some(overlap) = a_blocks.intersection(b_blocks).next() {
        return Err(Error::OverlappingBlocks(overlap.to_string()));
    }
    let space = SpaceSpec::L1Sum(blocks.clone());
    let sum = x.add(y)?;
    let diff = x.sub(y)?;
    let n_sum = match norm(&sum, &space)?.certificate {
        Certificate::ExactRational(r) => r,
        _ => unreachable!(),
    };
    let n_diff = match norm(&diff, &space)?.certificate {
        Certificate::ExactRational(r) => r,
        _ => unreachable!(),
    };
    let lhs = if n_sum >= n_diff { n_sum } else { n_diff };

    let block_l1 = |v: &SparseVector, wanted: &BTreeSet<u64>| -> Result<Rat> {
        let mut acc = Rat::zero();
        for (idx, val) in v.entries() {
            let b = blocks
                .get(idx)
                .ok_or_else(|| Error::MissingBlock(idx.to_string()))?;
            if wanted.contains(b) {
                acc += val.abs();
            }
        }
        Ok(acc)
    };
    let rhs = block_l1(x, a_blocks)? + block_l1(y, b_blocks)?;
    let holds = lhs >= rhs;
    Ok(L1SumVerdict { lhs, rhs, holds })
}

// ---------------------------------------------------------------------
// Vector file format: header `universe <kind> [param]`, then one
// `index value` pair per line; dyadic nodes serialize as `n:k`.
// ---------------------------------------------------------------------

pub fn parse_index(s: &str, universe: &IndexUniverse) -> Result<Index> {
    let idx = match universe {
        IndexUniverse::Naturals => Index::Nat(
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad natural index `{s}`")))?,
        ),
        IndexUniverse::FiniteLabels(_) => Index::Label(
            s.parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad label index `{s}`")))?,
        ),
        IndexUniverse::DyadicTree(_) => {
            let (n, k) = s
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("bad dyadic index `{s}`, expected n:k")))?;
            let n = n
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad dyadic level in `{s}`")))?;
            let k = k
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("bad dyadic position in `{s}`")))?;
            Index::Node(DyadicNode::new(n, k)?)
        }
    };
    if !universe.contains(&idx) {
        return Err(Error::IndexOutOfUniverse(idx.to_string(), universe.to_string()));
    }
    Ok(idx)
}

pub fn parse_vector(text: &str) -> Result<SparseVector> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline_no, header) = lines
        .next()
        .ok_or_else(|| Error::Parse("empty vector file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("universe") {
        return Err(Error::Parse(format!(
            "line {hline_no}: expected `universe <kind> [param]`"
        )));
    }
    let universe = match (parts.next(), parts.next()) {
        (Some("naturals"), None) => IndexUniverse::Naturals,
        (Some("labels"), Some(k)) => IndexUniverse::FiniteLabels(
            k.parse()
                .map_err(|_| Error::Parse(format!("line {hline_no}: bad label count `{k}`")))?,
        ),
        (Some("dyadic"), Some(l)) => IndexUniverse::DyadicTree(
            l.parse()
                .map_err(|_| Error::Parse(format!("line {hline_no}: bad tree level `{l}`")))?,
        ),
        _ => {
            return Err(Error::Parse(format!(
                "line {hline_no}: unknown universe `{header}`"
            )))
        }
    };

    let mut entries = Vec::new();
    for (no, line) in lines {
        let mut parts = line.split_whitespace();
        let (idx, val) = match (parts.next(), parts.next(), parts.next()) {
            (Some(i), Some(v), None) => (i, v),
            _ => {
                return Err(Error::Parse(format!(
                    "line {no}: expected `index value`, got `{line}`"
                )))
            }
        };
        let idx = parse_index(idx, &universe).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("line {no}: {m}")),
            other => other,
        })?;
        let val = parse_rat(val).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("line {no}: {m}")),
            other => other,
        })?;
        entries.push((idx, val));
    }
    SparseVector::from_entries(universe, entries)
}

pub fn format_vector(v: &SparseVector) -> String {
    let mut out = format!("universe {}\n", v.universe);
    for (idx, val) in v.entries() {
        out.push_str(&format!("{} {}\n", idx, fmt_rat(val)));
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rat::{rat, rat_i};

    pub fn dyadic_vec(l: u32, entries: &[(u32, u64, i64)]) -> SparseVector {
        SparseVector::from_entries(
            IndexUniverse::DyadicTree(l),
            entries
                .iter()
                .map(|(n, k, v)| (Index::Node(DyadicNode::new(*n, *k).unwrap()), rat_i(*v))),
        )
        .unwrap()
    }

    #[test]
    fn zero_vector_norm_in_every_space() {
        let z = SparseVector::zero(IndexUniverse::FiniteLabels(4));
        assert!(norm(&z, &SpaceSpec::C0).unwrap().is_zero());
        assert!(norm(&z, &SpaceSpec::Lp(rat_i(2))).unwrap().is_zero());
        let zt = SparseVector::zero(IndexUniverse::DyadicTree(3));
        assert!(norm(&zt, &SpaceSpec::Jt).unwrap().is_zero());
    }

    #[test]
    fn jt_examples_from_norm_contract() {
        // e_(1,1) + e_(1,2): antichain, norm sqrt(2)
        let v = dyadic_vec(2, &[(1, 1, 1), (1, 2, 1)]);
        let n = norm(&v, &SpaceSpec::Jt).unwrap();
        assert_eq!(n.certificate, Certificate::ExactSquare(rat_i(2)));
        // e_(0,1) + e_(1,1): single segment, norm 2
        let v = dyadic_vec(2, &[(0, 1, 1), (1, 1, 1)]);
        let n = norm(&v, &SpaceSpec::Jt).unwrap();
        assert_eq!(n.certificate, Certificate::ExactSquare(rat_i(4)));
    }

    #[test]
    fn l1sum_norm_example() {
        let blocks: BTreeMap<Index, u64> =
            [(Index::Label(1), 1u64), (Index::Label(2), 2u64)].into();
        let v = SparseVector::from_entries(
            IndexUniverse::FiniteLabels(8),
            [(Index::Label(1), rat(1, 2)), (Index::Label(2), rat(1, 3))],
        )
        .unwrap();
        let n = norm(&v, &SpaceSpec::L1Sum(blocks)).unwrap();
        assert_eq!(n.certificate, Certificate::ExactRational(rat(5, 6)));
    }

    #[test]
    fn functional_examples() {
        let tree = IndexUniverse::DyadicTree(2);
        let e11 = SparseVector::basis(tree.clone(), Index::Node(DyadicNode::new(1, 1).unwrap()))
            .unwrap();
        let phi = Functional::branch(vec![
            DyadicNode::new(0, 1).unwrap(),
            DyadicNode::new(1, 1).unwrap(),
        ])
        .unwrap();
        assert_eq!(apply_functional(&phi, &e11).unwrap(), rat_i(1));

        let z = SparseVector::zero(IndexUniverse::Naturals);
        let coord = Functional::Coordinate(Index::Nat(5));
        assert_eq!(apply_functional(&coord, &z).unwrap(), rat_i(0));

        let u = IndexUniverse::Naturals;
        let v = SparseVector::from_entries(
            u,
            [(Index::Nat(1), rat_i(1)), (Index::Nat(2), rat_i(1))],
        )
        .unwrap();
        let comb = Functional::FiniteCombination(
            [(Index::Nat(1), rat_i(2)), (Index::Nat(2), rat_i(-1))].into(),
        );
        assert_eq!(apply_functional(&comb, &v).unwrap(), rat_i(1));
    }

    #[test]
    fn branch_must_chain() {
        assert!(Functional::branch(vec![
            DyadicNode::new(0, 1).unwrap(),
            DyadicNode::new(2, 1).unwrap(),
        ])
        .is_err());
    }

    #[test]
    fn l1sum_inequality_examples() {
        let blocks: BTreeMap<Index, u64> =
            [(Index::Label(1), 1u64), (Index::Label(2), 2u64)].into();
        let u = IndexUniverse::FiniteLabels(8);
        let zero = SparseVector::zero(u.clone());
        let a: BTreeSet<u64> = [1].into();
        let b: BTreeSet<u64> = [2].into();
        let v = l1sum_inequality_check(&zero, &zero, &a, &b, &blocks).unwrap();
        assert!(v.holds && v.lhs.is_zero() && v.rhs.is_zero());

        let e1 = SparseVector::basis(u.clone(), Index::Label(1)).unwrap();
        let e2 = SparseVector::basis(u.clone(), Index::Label(2)).unwrap();
        let v = l1sum_inequality_check(&e1, &e2, &a, &b, &blocks).unwrap();
        assert_eq!(v.lhs, rat_i(2));
        assert_eq!(v.rhs, rat_i(2));
        assert!(v.holds);

        let bad: BTreeSet<u64> = [1, 2].into();
        assert!(l1sum_inequality_check(&e1, &e2, &a, &bad, &blocks).is_err());
    }

    #[test]
    fn projection_identities() {
        let u = IndexUniverse::FiniteLabels(4);
        let v = SparseVector::from_entries(
            u.clone(),
            [(Index::Label(1), rat_i(3)), (Index::Label(2), rat(-1, 2))],
        )
        .unwrap();
        let all: BTreeSet<Index> = (0..4).map(Index::Label).collect();
        assert_eq!(v.project(&all), v);
        assert!(v.project(&BTreeSet::new()).is_zero());
        let just1: BTreeSet<Index> = [Index::Label(1)].into();
        let p = v.project(&just1);
        assert_eq!(p.get(&Index::Label(1)), rat_i(3));
        let comp = v.sub(&p).unwrap();
        assert_eq!(p.add(&comp).unwrap(), v);
    }

    #[test]
    fn vector_roundtrip_and_errors() {
        let text = "universe dyadic 3\n1:1 1\n2:3 -5/7\n";
        let v = parse_vector(text).unwrap();
        assert_eq!(v.support_size(), 2);
        let back = parse_vector(&format_vector(&v)).unwrap();
        assert_eq!(v, back);

        let err = parse_vector("universe dyadic 3\n1;1 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn norm_certificate_scaling() {
        let v = dyadic_vec(2, &[(0, 1, 1), (1, 1, 2)]);
        let n = norm(&v, &SpaceSpec::Jt).unwrap();
        let n3 = norm(&v.scale(&rat_i(-3)), &SpaceSpec::Jt).unwrap();
        assert_eq!(n.scale(&rat_i(-3)), n3);
    }

    #[test]
    fn cmp_exact_cross_family() {
        // sqrt(2) vs 3/2: 2 vs 9/4
        let a = NormValue::square(rat_i(2));
        let b = NormValue::rational(rat(3, 2));
        assert!(a.lt(&b));
        // cube-power family vs square family: 2^(1/3) vs sqrt(2)
        let c = NormValue::power_p(rat_i(2), 3);
        assert!(c.lt(&a));
        assert!(!a.lt(&c));
    }
}
