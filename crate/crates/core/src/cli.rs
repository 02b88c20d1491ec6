//! Command-line front end: certified norm queries, per-construction
//! verification suites, and CSV plot data.

use crate::analysis::{oscillation_cover, ScalarTrace};
use crate::dp_operators::{
    dp_riemann_demo, dp_test, DpDemo, DpVerdict, MatrixOperator, SequenceSpec,
};
use crate::gallery::{
    char_family_sum_sup, fat_cantor, hat_g, jt_branch_witness, jt_sum_bound_rational,
    jt_worstcase_bound, kadets_sum_lowerbound, CharFamily, KadetsFunction,
};
use crate::jt_norm::{jt_norm_bruteforce, jt_norm_dp, BRUTE_FORCE_SUPPORT_CAP};
use crate::partitions::Partition;
use crate::rat::{decimal_string, fmt_rat, parse_rat, pow2, pow_u, rat, rat_i, sqrt_lower, Rat};
use crate::report::{format_report, RunReport, Verdict, LIMITATION_LINE};
use crate::spaces::{
    l1sum_inequality_check, parse_vector, Certificate, Functional, Index, NormValue,
    SpaceSpec, SparseVector,
};
use crate::{Error, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

pub const DEFAULT_SEED: u64 = 0x5eed_1ab;

#[derive(Parser, Debug)]
#[command(name = "rlab", version, about = "exact-arithmetic Riemann integration laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Report,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certified JT norm of a vector file, with brute-force cross-check
    /// when the support is small
    JtNorm {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a construction's invariant suite; exit status is nonzero iff
    /// an exact inequality fails
    Verify {
        /// one of: jt, kadets, char-c0, char-lp, l1sum, dp
        name: String,
        #[arg(long = "N")]
        n: Option<u32>,
        #[arg(long)]
        p: Option<u32>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        stages: Option<usize>,
        /// e.g. "uniform:4..256" (doubling sizes) or "random:20", comma-separated
        #[arg(long)]
        partitions: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Report)]
        format: OutputFormat,
    },
    /// Sweep a construction parameter and emit CSV rows for plotting
    Plotdata {
        /// one of: jt, char-c0
        construction: String,
        /// inclusive range "a..b"; empty for a header-only file
        #[arg(long, default_value = "")]
        sweep: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
    },
}

/// norm^2 of an l2-style certificate, for report serialization
fn norm_sq(nv: &NormValue) -> Rat {
    match &nv.certificate {
        Certificate::ExactRational(r) => r * r,
        Certificate::ExactSquare(s) => s.clone(),
        Certificate::ExactPowerP { value_pow_p, p } => {
            assert_eq!(*p, 2, "norm_sq needs an exponent-2 certificate");
            value_pow_p.clone()
        }
    }
}

pub fn cmd_jt_norm(text: &str) -> Result<RunReport> {
    let mut r = RunReport::new("jt-norm");
    let v = parse_vector(text)?;
    let nv = jt_norm_dp(&v)?;
    let mut values = vec![("norm_sq".to_string(), norm_sq(&nv))];
    if let Some(exact) = nv.as_rational() {
        values.push(("norm".into(), exact));
    }
    r.check("jt-norm-certificate", Verdict::Info, values);
    if v.support_size() <= BRUTE_FORCE_SUPPORT_CAP {
        let oracle = jt_norm_bruteforce(&v)?;
        let agree = oracle.cmp_exact(&nv) == std::cmp::Ordering::Equal;
        r.check(
            "oracle-agreement",
            if agree { Verdict::Pass } else { Verdict::Fail },
            vec![("oracle_norm_sq".into(), norm_sq(&oracle))],
        );
    }
    Ok(r)
}

fn parse_range(s: &str) -> Result<(u64, u64)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Parse(format!("expected a..b, got {s:?}")))?;
    let lo = a.parse().map_err(|_| Error::Parse(format!("bad range start {a:?}")))?;
    let hi = b.parse().map_err(|_| Error::Parse(format!("bad range end {b:?}")))?;
    if lo > hi {
        return Err(Error::Parse(format!("empty range {s:?}")));
    }
    Ok((lo, hi))
}

/// Random partition with breakpoints on the 2^12 grid.
pub fn random_partition(rng: &mut ChaCha8Rng, max_interior: usize) -> Partition {
    let count = rng.gen_range(8..=max_interior.max(9));
    let mut pts: BTreeSet<u64> = BTreeSet::new();
    while pts.len() < count {
        pts.insert(rng.gen_range(1..(1u64 << 12)));
    }
    let mut bps = vec![rat_i(0)];
    bps.extend(pts.into_iter().map(|k| Rat::new(k.into(), BigInt::one() << 12)));
    bps.push(rat_i(1));
    Partition::new(bps).expect("grid breakpoints are strictly increasing")
}

fn parse_partition_spec(spec: &str, seed: u64) -> Result<Vec<Partition>> {
    let mut out = Vec::new();
    for part in spec.split(',') {
        match part.split_once(':') {
            Some(("uniform", range)) => {
                let (lo, hi) = parse_range(range)?;
                let mut n = lo.max(1);
                while n <= hi {
                    out.push(Partition::uniform(n as usize)?);
                    n *= 2;
                }
            }
            Some(("random", count)) => {
                let count: u64 =
                    count.parse().map_err(|_| Error::Parse(format!("bad count {count:?}")))?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..count {
                    out.push(random_partition(&mut rng, 40));
                }
            }
            _ => return Err(Error::Parse(format!("unknown partition spec {part:?}"))),
        }
    }
    Ok(out)
}

pub struct VerifyParams {
    pub n: Option<u32>,
    pub p: Option<u32>,
    pub eps: Option<Rat>,
    pub stages: Option<usize>,
    pub partitions: Option<String>,
    pub seed: u64,
}

pub fn cmd_verify(name: &str, params: &VerifyParams) -> Result<RunReport> {
    let mut r = RunReport::new(format!("verify {name}"));
    match name {
        "jt" => verify_jt(&mut r, params)?,
        "kadets" => verify_kadets(&mut r, params)?,
        "char-c0" => verify_char_c0(&mut r, params)?,
        "char-lp" => verify_char_lp(&mut r, params)?,
        "l1sum" => verify_l1sum(&mut r, params)?,
        "dp" => verify_dp(&mut r, params)?,
        other => return Err(Error::Parse(format!("unknown construction {other:?}"))),
    }
    r.note(LIMITATION_LINE);
    Ok(r)
}

fn pass(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn verify_jt(r: &mut RunReport, params: &VerifyParams) -> Result<()> {
    let n = params.n.unwrap_or(6);
    r.param("N", n);
    let w = jt_worstcase_bound(n)?;
    let (a, b) = (norm_sq(&w.achieved), norm_sq(&w.bound));
    r.check(
        "worstcase-bound",
        pass(a <= b),
        vec![("achieved_sq".into(), a), ("bound_sq".into(), b)],
    );
    let s = jt_sum_bound_rational(n);
    r.check(
        "sum-bound",
        pass(&s * &s <= pow2(2 - n as i64)),
        vec![("sum_bound".into(), s)],
    );
    let (_, pairings) = jt_branch_witness(&[false, true, false])?;
    r.check(
        "branch-witness",
        pass(pairings.iter().all(|x| x.is_one())),
        vec![("pairing".into(), pairings[0].clone())],
    );
    Ok(())
}

fn verify_kadets(r: &mut RunReport, params: &VerifyParams) -> Result<()> {
    let stages = params.stages.unwrap_or(8);
    r.param("stages", stages);
    r.param("seed", params.seed);
    let spec = params.partitions.as_deref().unwrap_or("uniform:4..256");
    r.param("partitions", spec);
    let f = KadetsFunction { g: hat_g(), k: fat_cantor(stages)? };
    for (i, p) in parse_partition_spec(spec, params.seed)?.iter().enumerate() {
        let lb = kadets_sum_lowerbound(&f, p, None)?;
        let (a, t) = (norm_sq(&lb.achieved), norm_sq(&lb.threshold));
        r.check(
            &format!("lowerbound-{i}"),
            pass(t < a),
            vec![
                ("intervals".into(), rat_i(p.len() as i64)),
                ("achieved_sq".into(), a),
                ("threshold_sq".into(), t),
            ],
        );
    }
    Ok(())
}

fn verify_char_c0(r: &mut RunReport, params: &VerifyParams) -> Result<()> {
    let m = params.stages.unwrap_or(6) as u32;
    r.param("stages", m);
    let mut prev: Option<Rat> = None;
    for mm in 2..=m.max(2) {
        let fam = CharFamily::new(mm as usize, vec![rat_i(0)], SpaceSpec::C0)?;
        let p = Partition::uniform(3usize.pow(mm))?;
        let s = char_family_sum_sup(&fam, &p)?
            .as_rational()
            .expect("c0 sup is rational");
        let bound = pow_u(&rat(2, 3), mm) + rat_i(2) * rat_i(1 << mm) * pow_u(&rat(1, 3), mm);
        let monotone = prev.as_ref().map(|q| s < *q).unwrap_or(true);
        r.check(
            &format!("sup-stage-{mm}"),
            pass(s <= bound && monotone),
            vec![("sup".into(), s.clone()), ("bound".into(), bound)],
        );
        prev = Some(s);
    }
    Ok(())
}

fn verify_char_lp(r: &mut RunReport, params: &VerifyParams) -> Result<()> {
    let p_exp = params.p.unwrap_or(2);
    if p_exp < 2 {
        return Err(Error::OutOfRange("lp exponent", p_exp.to_string()));
    }
    let eps = params.eps.clone().unwrap_or_else(|| rat(1, 16));
    if !eps.is_positive() || eps >= Rat::one() {
        return Err(Error::OutOfRange("eps", fmt_rat(&eps)));
    }
    r.param("p", p_exp);
    r.param("eps", fmt_rat(&eps));
    // deepest stage whose cover measure drops below eps
    let mut stage = 1;
    while pow_u(&rat(2, 3), stage as u32) >= eps {
        stage += 1;
        if stage > 20 {
            return Err(Error::InsufficientDepth(format!(
                "no stage within cap reaches cover < {}",
                fmt_rat(&eps)
            )));
        }
    }
    let fam = CharFamily::new(
        stage,
        crate::gallery::default_translates(),
        SpaceSpec::Lp(rat_i(p_exp as i64)),
    )?;
    let partition = fam.aligned_partition();
    let per_alpha_max = fam
        .covers()
        .iter()
        .map(|d| d.measure())
        .max()
        .unwrap_or_else(Rat::zero);
    r.check(
        "per-alpha-below-eps",
        pass(per_alpha_max < eps),
        vec![("max_cover".into(), per_alpha_max)],
    );
    let result = char_family_sum_sup(&fam, &partition)?;
    let bound = NormValue::power_p(pow_u(&eps, p_exp - 1), p_exp);
    let (rv, bv) = match (&result.certificate, &bound.certificate) {
        (
            Certificate::ExactPowerP { value_pow_p: a, .. },
            Certificate::ExactPowerP { value_pow_p: b, .. },
        ) => (a.clone(), b.clone()),
        _ => (norm_sq(&result), norm_sq(&bound)),
    };
    r.check(
        "lp-aggregate",
        pass(result.le(&bound)),
        vec![("result_pow_p".into(), rv), ("bound_pow_p".into(), bv)],
    );
    Ok(())
}

/// Universe Naturals 0..31 split into 8 blocks of 4 consecutive indices.
fn l1_blocks() -> BTreeMap<Index, u64> {
    (0u64..32).map(|i| (Index::Nat(i), i / 4)).collect()
}

fn random_l1_vector(rng: &mut ChaCha8Rng) -> SparseVector {
    let entries: Vec<(Index, Rat)> = (0..rng.gen_range(1..=8))
        .map(|_| {
            let idx = rng.gen_range(0u64..32);
            let num = rng.gen_range(-5i64..=5);
            let den = rng.gen_range(1i64..=4);
            (Index::Nat(idx), rat(num, den))
        })
        .collect();
    let mut v = SparseVector::zero(crate::spaces::IndexUniverse::Naturals);
    for (idx, c) in entries {
        v = v
            .add(&SparseVector::from_entries(
                crate::spaces::IndexUniverse::Naturals,
                [(idx, c)],
            )
            .unwrap())
            .unwrap();
    }
    v
}

fn verify_l1sum(r: &mut RunReport, params: &VerifyParams) -> Result<()> {
    let samples = 1000u32;
    r.param("samples", samples);
    r.param("seed", params.seed);
    let blocks = l1_blocks();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut worst_slack: Option<Rat> = None;
    for i in 0..samples {
        let x = random_l1_vector(&mut rng);
        let y = random_l1_vector(&mut rng);
        let mut a = BTreeSet::new();
        let mut b = BTreeSet::new();
        for blk in 0u64..8 {
            match rng.gen_range(0..3) {
                0 => {
                    a.insert(blk);
                }
                1 => {
                    b.insert(blk);
                }
                _ => {}
            }
        }
        let v = l1sum_inequality_check(&x, &y, &a, &b, &blocks)?;
        if !v.holds {
            r.check(
                "l1sum-inequality",
                Verdict::Fail,
                vec![
                    ("sample".into(), rat_i(i as i64)),
                    ("lhs".into(), v.lhs),
                    ("rhs".into(), v.rhs),
                ],
            );
            return Ok(());
        }
        let slack = &v.lhs - &v.rhs;
        if worst_slack.as_ref().map(|w| slack < *w).unwrap_or(true) {
            worst_slack = Some(slack);
        }
    }
    r.check(
        "l1sum-inequality",
        Verdict::Pass,
        vec![
            ("samples".into(), rat_i(samples as i64)),
            ("min_slack".into(), worst_slack.unwrap_or_else(Rat::zero)),
        ],
    );
    Ok(())
}

fn verify_dp(r: &mut RunReport, params: &VerifyParams) -> Result<()> {
    r.param("seed", params.seed);
    let xs = SequenceSpec::canonical_l2();
    let diag = MatrixOperator::diag_pow2_l2();
    let ident = MatrixOperator::identity_l2();
    match dp_test(&diag, &xs, 16, &rat(1, 100))? {
        DpVerdict::PassAtHorizon { max_tail_norm, .. } => r.check(
            "diag-dp-pass",
            Verdict::Pass,
            vec![("max_tail_sq".into(), norm_sq(&max_tail_norm))],
        ),
        DpVerdict::FailWitness { n, norm } => r.check(
            "diag-dp-pass",
            Verdict::Fail,
            vec![("n".into(), rat_i(n as i64)), ("norm_sq".into(), norm_sq(&norm))],
        ),
    }
    match dp_test(&ident, &xs, 16, &rat(1, 100))? {
        DpVerdict::FailWitness { norm, .. } => r.check(
            "identity-dp-fail",
            pass(norm_sq(&norm).is_one()),
            vec![("witness_norm_sq".into(), norm_sq(&norm))],
        ),
        DpVerdict::PassAtHorizon { .. } => {
            r.check("identity-dp-fail", Verdict::Fail, vec![])
        }
    }
    let k = fat_cantor(8)?;
    let partitions: Vec<Partition> = [4usize, 8, 16, 32, 64, 128, 256]
        .iter()
        .map(|&n| Partition::uniform(n))
        .collect::<Result<_>>()?;
    match dp_riemann_demo(&ident, &xs, &hat_g(), &k, &partitions)? {
        DpDemo::Fail { rows, .. } => {
            let ok = rows.iter().all(|(_, a, t)| t.lt(a));
            r.check(
                "demo-fail-branch",
                pass(ok),
                vec![("partitions".into(), rat_i(rows.len() as i64))],
            );
        }
        DpDemo::Pass { .. } => r.check("demo-fail-branch", Verdict::Fail, vec![]),
    }
    match dp_riemann_demo(&diag, &xs, &hat_g(), &k, &partitions)? {
        DpDemo::Pass { gaps, strictly_decreasing } => {
            r.check(
                "demo-pass-branch",
                pass(strictly_decreasing),
                vec![("gaps".into(), rat_i(gaps.len() as i64))],
            );
        }
        DpDemo::Fail { .. } => r.check("demo-pass-branch", Verdict::Fail, vec![]),
    }
    Ok(())
}

const CSV_HEADER: &str = "param,name,decimal,rational";

/// decimal approximation (12 digits) of the norm value
fn norm_decimal(nv: &NormValue) -> String {
    if let Some(r) = nv.as_rational() {
        return decimal_string(&r, 12);
    }
    decimal_string(&sqrt_lower(&norm_sq(nv), 14), 12)
}

pub fn cmd_plotdata(construction: &str, sweep: &str) -> Result<String> {
    let mut rows = vec![CSV_HEADER.to_string()];
    if !sweep.is_empty() {
        let (lo, hi) = parse_range(sweep)?;
        match construction {
            "jt" => {
                for n in lo..=hi {
                    let w = jt_worstcase_bound(n as u32)?;
                    rows.push(format!(
                        "{n},achieved,{},{}",
                        norm_decimal(&w.achieved),
                        fmt_rat(&norm_sq(&w.achieved))
                    ));
                    rows.push(format!(
                        "{n},bound,{},{}",
                        norm_decimal(&w.bound),
                        fmt_rat(&norm_sq(&w.bound))
                    ));
                }
            }
            "char-c0" => {
                let fam = CharFamily::new(8, vec![rat_i(0)], SpaceSpec::C0)?;
                let tr = ScalarTrace::Composed {
                    phi: Functional::Coordinate(Index::Label(0)),
                    f: &fam,
                };
                for res in lo..=hi {
                    let (_, len) = oscillation_cover(&tr, &rat(1, 2), res as u32)?;
                    rows.push(format!(
                        "{res},cover_length,{},{}",
                        decimal_string(&len, 12),
                        fmt_rat(&len)
                    ));
                }
            }
            other => return Err(Error::Parse(format!("unknown construction {other:?}"))),
        }
    }
    rows.push(String::new());
    Ok(rows.join("\n"))
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Dispatch a parsed command line; the returned code is the process exit
/// status (0 = all checks passed).
pub fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Command::JtNorm { file, out } => {
            let start = std::time::Instant::now();
            let text = std::fs::read_to_string(&file)?;
            let mut report = cmd_jt_norm(&text)?;
            report.elapsed_ms = start.elapsed().as_millis() as u64;
            let ok = report.all_pass();
            emit(&format_report(&report), &out)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Verify { name, n, p, eps, stages, partitions, seed, out, format } => {
            let start = std::time::Instant::now();
            let eps = eps.as_deref().map(parse_rat).transpose()?;
            let params = VerifyParams { n, p, eps, stages, partitions, seed };
            let mut report = cmd_verify(&name, &params)?;
            report.elapsed_ms = start.elapsed().as_millis() as u64;
            let ok = report.all_pass();
            let text = match format {
                OutputFormat::Report => format_report(&report),
                OutputFormat::Csv => {
                    let mut rows = vec!["name,verdict,values".to_string()];
                    for c in &report.checks {
                        let vals: Vec<String> =
                            c.values.iter().map(|(k, v)| format!("{k}={}", fmt_rat(v))).collect();
                        rows.push(format!("{},{},{}", c.name, c.verdict, vals.join(";")));
                    }
                    rows.push(String::new());
                    rows.join("\n")
                }
            };
            emit(&text, &out)?;
            Ok(if ok { 0 } else { 1 })
        }
        Command::Plotdata { construction, sweep, out, format } => {
            if format == OutputFormat::Report {
                return Err(Error::Parse("plotdata only emits csv".into()));
            }
            let text = cmd_plotdata(&construction, &sweep)?;
            emit(&text, &out)?;
            Ok(0)
        }
    }
}
