//! Exact decision procedures for embeddings, the algebra property, products
//! `M^{s1}_{p1,q1} · M^{s2}_{p2,q2} ↪ M^{s0}_{p,q}`, and the exponents of the
//! composition results.
//!
//! Every comparison runs over rationals with `1/∞ = 0`; no floating point is
//! involved in any verdict.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::{ExtendedExponent, Rational};
use crate::norm::SpaceParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Holds,
    Fails,
    Unknown,
}

/// A rule that fired (sufficient) or was violated (necessary).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleRef {
    pub id: String,
    pub citation: String,
}

impl RuleRef {
    fn new(id: &str, citation: &str) -> Self {
        Self {
            id: id.to_string(),
            citation: citation.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub rules: Vec<RuleRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Verdict {
    fn holds(rules: Vec<RuleRef>) -> Self {
        Self {
            status: Status::Holds,
            rules,
            notes: Vec::new(),
        }
    }

    fn fails(rules: Vec<RuleRef>) -> Self {
        Self {
            status: Status::Fails,
            rules,
            notes: Vec::new(),
        }
    }

    pub fn is_holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn is_fails(&self) -> bool {
        self.status == Status::Fails
    }

    pub fn rule_ids(&self) -> Vec<&str> {
        self.rules.iter().map(|r| r.id.as_str()).collect()
    }
}

/// `q'` with `1/q + 1/q' = 1`.
pub fn conjugate(q: ExtendedExponent) -> ExtendedExponent {
    q.conjugate()
}

fn nr(n: usize) -> Rational {
    Rational::from_integer(n as i64)
}

/// `n/q'`.
fn n_over_qprime(n: usize, q: ExtendedExponent) -> Rational {
    nr(n) * (Rational::one() - q.recip())
}

/// `(s >= 0 and q = 1) or s > n/q'`.
fn linfty_condition(s: Rational, q: ExtendedExponent, n: usize) -> bool {
    (s >= Rational::zero() && q.is_one()) || s > n_over_qprime(n, q)
}

const EMBED_CITATION: &str =
    "Proposition einbettung1: p0 <= p1 and s0 - s1 > n(1/q1 - 1/q0), or p0 <= p1, s0 = s1, q0 = q1";
const MONO_CITATION: &str =
    "Corollary einbettung: monotonicity in s, p and q";

/// `M^{s0}_{p0,q0} ↪ M^{s1}_{p1,q1}`, decided by the printed criterion.
///
/// When the variant with `q0 > q1` required in the strict branch differs, a
/// note is attached.
pub fn embeds(source: SpaceParams, target: SpaceParams) -> Result<Verdict> {
    if source.n != target.n {
        return Err(Error::DimensionMismatch(source.n, target.n));
    }
    let n = nr(source.n);
    let p_ok = source.p <= target.p;
    let gap = source.s - target.s;
    let rhs = n * (target.q.recip() - source.q.recip());
    let printed = p_ok && (gap > rhs || (gap.is_zero() && source.q == target.q));
    let variant = p_ok
        && ((source.q <= target.q && gap >= Rational::zero())
            || (source.q > target.q && gap > rhs));
    let mut v = if printed {
        let mut rules = vec![RuleRef::new("EMBED", EMBED_CITATION)];
        if source.s >= target.s && source.p <= target.p && source.q <= target.q {
            rules.push(RuleRef::new("MONO", MONO_CITATION));
        }
        Verdict::holds(rules)
    } else {
        Verdict::fails(vec![RuleRef::new("EMBED", EMBED_CITATION)])
    };
    if printed != variant {
        v.notes.push(format!(
            "positive-part variant (q0 <= q1 and s0 >= s1, or q0 > q1 and the strict gap) gives {}",
            if variant { "Holds" } else { "Fails" }
        ));
    }
    Ok(v)
}

/// `M^s_{p,q} ↪ L_∞` (equivalently `C_ub`, `M^0_{∞,1}`).
pub fn embeds_into_linfty(params: SpaceParams) -> Verdict {
    let rule = RuleRef::new(
        "LINF",
        "Corollary einbettung2: either s >= 0 and q = 1 or s > n/q'",
    );
    if linfty_condition(params.s, params.q, params.n) {
        Verdict::holds(vec![rule])
    } else {
        Verdict::fails(vec![rule])
    }
}

/// `M^s_{p,q}` is closed under pointwise multiplication.
pub fn is_algebra(params: SpaceParams) -> Verdict {
    let rule = RuleRef::new(
        "MULT2",
        "Theorem mult2: algebra iff either s >= 0 and q = 1 or s > n/q'",
    );
    if linfty_condition(params.s, params.q, params.n) {
        Verdict::holds(vec![rule])
    } else {
        Verdict::fails(vec![rule])
    }
}

/// Factors and target of a product embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProductQuery {
    pub f: SpaceParams,
    pub g: SpaceParams,
    pub target: SpaceParams,
}

impl ProductQuery {
    pub fn new(f: SpaceParams, g: SpaceParams, target: SpaceParams) -> Result<Self> {
        if f.n != g.n || f.n != target.n {
            return Err(Error::DimensionMismatch(f.n, if f.n != g.n { g.n } else { target.n }));
        }
        Ok(Self { f, g, target })
    }

    /// Same space for both factors and the target.
    pub fn algebra(params: SpaceParams) -> Self {
        Self {
            f: params,
            g: params,
            target: params,
        }
    }

    pub fn n(&self) -> usize {
        self.target.n
    }
}

mod cite {
    pub const ALG12: &str =
        "Theorem algebra12: q1 = q2 = q, 1 < q <= inf, 1/p <= 1/p1 + 1/p2, 0 <= s0 <= min(s1, s2), s1 + s2 - s0 > n/q'";
    pub const ALG20: &str =
        "Theorem algebra20 (first factor in the mixed space M^{s1}_{p1,q'}): q1 = q', q2 = q, 1 <= q < inf, 1/p <= 1/p1 + 1/p2, s0 <= s2 <= 0, s1 + s2 >= 0, s1 + s2 - s0 > n/q";
    pub const MULT2: &str = "Theorem mult2: equal spaces, algebra iff either s >= 0 and q = 1 or s > n/q'";
    pub const MULT6: &str =
        "Lemma mult6 with Corollary einbettung2: q1 = q2 = q, 1/p <= 1/p1 + 1/p2, 0 <= s0 <= min(s1, s2), each factor embeds into M^0_{p_i,1}";
    pub const MULT8: &str =
        "Lemma mult7 / Theorem mult8: s0 <= 0, f in M^{|s0|}_{p1,1}, g in M^{s0}_{p2,q}, 1/p <= 1/p1 + 1/p2";
    pub const CONI: &str =
        "Proposition coni (Cordero-Nicola): s = 0 throughout, iff 1/p <= 1/p1 + 1/p2 and 1 + 1/q <= 1/q1 + 1/q2";
    pub const IWA1: &str =
        "Proposition (Iwabuchi) (i): s1 = s2 = 0, s0 = -sigma, 0 < sigma < n/q, 1 < q, q1, q2 < inf, q >= q1, 1/p <= 1/p1 + 1/p2, 1 + 1/q - 1/q1 - 1/q2 = sigma/n";
    pub const IWA2: &str =
        "Proposition (Iwabuchi) (ii): s0 = s1 = s2 = sigma, 0 < sigma < n/q, 1 < q, q1, q2 < inf, q >= max(q1, q2), not q1 = q2 = q, 1/p <= 1/p1 + 1/p2, 1 + 1/q - 1/q1 - 1/q2 = sigma/n";
    pub const TOFT: &str = "Proposition toft (Toft et al.) (i): conditions (a)-(f)";
    pub const NEC1: &str =
        "Necessity lemma (i), q1 = q2 = q: s0 <= min(s1, s2), s1 + s2 >= 0, s1 + s2 - s0 >= n/q'";
    pub const NEC2: &str =
        "Necessity lemma (ii) via Lemma notw, q1 = q2 = q < inf, target equal to the second factor's space with p < inf: either q = 1 and s1 >= 0 or s1 > n/q'";
    pub const TOFT2: &str = "Proposition toft (Toft et al.) (ii): (c) s0 <= min(s1, s2), (d) s1 + s2 >= 0, (e) s1 + s2 - s0 >= n(1 + 1/q - 1/q1 - 1/q2)";
}

/// Ordered exact scalar the rules are evaluated over.
trait Scalar: Copy + Ord + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Neg<Output = Self> {
    fn nil() -> Self;
    fn times(self, k: i64) -> Self;
}

impl Scalar for i128 {
    fn nil() -> Self {
        0
    }
    fn times(self, k: i64) -> Self {
        self * k as i128
    }
}

impl Scalar for Rational {
    fn nil() -> Self {
        Zero::zero()
    }
    fn times(self, k: i64) -> Self {
        self * Rational::from_integer(k)
    }
}

/// Index 0 is the target, 1 and 2 the factors. Exponents are stored as
/// reciprocals, so `∞ ↦ 0` and larger exponents compare smaller.
struct Facts<T> {
    s: [T; 3],
    rp: [T; 3],
    rq: [T; 3],
    one: T,
    n: i64,
}

impl Facts<Rational> {
    fn exact(x: &ProductQuery) -> Self {
        let sp = [x.target, x.f, x.g];
        Facts {
            s: sp.map(|v| v.s),
            rp: sp.map(|v| v.p.recip()),
            rq: sp.map(|v| v.q.recip()),
            one: Rational::one(),
            n: x.n() as i64,
        }
    }

    /// Everything over one common denominator, when that fits in i64 with
    /// headroom; sums are then formed in i128 and cannot overflow.
    fn scaled(&self) -> Option<Facts<i128>> {
        const LIMIT: i64 = i64::MAX >> 8;
        let mut den: i64 = 1;
        for r in self.s.iter().chain(&self.rp).chain(&self.rq) {
            let d = *r.denom();
            if den % d != 0 {
                den = den.checked_mul(d / gcd(den, d))?;
            }
        }
        if den > LIMIT {
            return None;
        }
        let conv = |r: &Rational| -> Option<i128> {
            let v = r.numer().checked_mul(den / r.denom())?;
            (v.abs() <= LIMIT).then_some(v as i128)
        };
        let conv3 = |a: &[Rational; 3]| -> Option<[i128; 3]> { Some([conv(&a[0])?, conv(&a[1])?, conv(&a[2])?]) };
        Some(Facts {
            s: conv3(&self.s)?,
            rp: conv3(&self.rp)?,
            rq: conv3(&self.rq)?,
            one: den as i128,
            n: self.n,
        })
    }
}

fn gcd(mut a: i64, mut b: i64) -> i64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.abs()
}

impl<T: Scalar> Facts<T> {
    fn zero(&self) -> T {
        T::nil()
    }

    /// `n/q'` for the exponent with reciprocal `r`.
    fn n_qprime(&self, r: T) -> T {
        (self.one - r).times(self.n)
    }

    fn holder(&self) -> bool {
        self.rp[0] <= self.rp[1] + self.rp[2]
    }

    fn same_q(&self) -> bool {
        self.rq[1] == self.rq[0] && self.rq[2] == self.rq[0]
    }

    fn is_one(&self, r: T) -> bool {
        r == self.one
    }

    fn is_inf(&self, r: T) -> bool {
        r == self.zero()
    }

    /// `(s >= 0 and q = 1) or s > n/q'`.
    fn linfty(&self, s: T, rq: T) -> bool {
        (s >= self.zero() && self.is_one(rq)) || s > self.n_qprime(rq)
    }

    /// `1 + 1/q - 1/q1 - 1/q2`.
    fn defect(&self) -> T {
        self.one + self.rq[0] - self.rq[1] - self.rq[2]
    }

    fn min_factor_s(&self) -> T {
        self.s[1].min(self.s[2])
    }

    fn alg12(&self) -> bool {
        let s = &self.s;
        self.same_q()
            && !self.is_one(self.rq[0])
            && self.holder()
            && self.zero() <= s[0]
            && s[0] <= self.min_factor_s()
            && s[1] + s[2] - s[0] > self.n_qprime(self.rq[0])
    }

    /// Factor `a` in the mixed space `M_{p1,q'}`, factor `b` in `M_{p2,q}`.
    fn alg20(&self, a: usize, b: usize) -> bool {
        let (s, rq) = (&self.s, &self.rq);
        !self.is_inf(rq[0])
            && rq[a] == self.one - rq[0]
            && rq[b] == rq[0]
            && self.holder()
            && s[0] <= s[b]
            && s[b] <= self.zero()
            && s[a] + s[b] >= self.zero()
            && s[a] + s[b] - s[0] > rq[0].times(self.n)
    }

    fn mult6(&self) -> bool {
        let s = &self.s;
        self.same_q()
            && self.holder()
            && self.zero() <= s[0]
            && s[0] <= self.min_factor_s()
            && self.linfty(s[1], self.rq[0])
            && self.linfty(s[2], self.rq[0])
    }

    /// Factor `a` in `M^{|s0|}_{p1,1}`.
    fn mult8(&self, a: usize, b: usize) -> bool {
        let (s, rq) = (&self.s, &self.rq);
        s[0] <= self.zero()
            && self.is_one(rq[a])
            && s[a] >= -s[0]
            && rq[b] >= rq[0]
            && s[b] >= s[0]
            && self.holder()
    }

    fn all_zero_s(&self) -> bool {
        self.s.iter().all(|&v| v == self.zero())
    }

    fn coni_ok(&self) -> bool {
        self.holder() && self.one + self.rq[0] <= self.rq[1] + self.rq[2]
    }

    fn iwabuchi_ok(&self, sigma: T) -> bool {
        let inside = |r: T| !self.is_one(r) && !self.is_inf(r);
        self.rq.iter().all(|&r| inside(r))
            && sigma > self.zero()
            && sigma < self.rq[0].times(self.n)
            && self.holder()
            && self.defect().times(self.n) == sigma
    }

    fn iwabuchi1(&self, a: usize) -> bool {
        self.s[1] == self.zero() && self.s[2] == self.zero() && self.rq[0] <= self.rq[a] && self.iwabuchi_ok(-self.s[0])
    }

    fn iwabuchi2(&self) -> bool {
        let (s, rq) = (&self.s, &self.rq);
        s[1] == s[0]
            && s[2] == s[0]
            && rq[0] <= rq[1]
            && rq[0] <= rq[2]
            && !self.same_q()
            && self.iwabuchi_ok(s[0])
    }

    fn toft_cde(&self) -> (bool, bool, bool) {
        let s = &self.s;
        (
            s[0] <= self.min_factor_s(),
            s[1] + s[2] >= self.zero(),
            s[1] + s[2] - s[0] - self.defect().times(self.n) >= self.zero(),
        )
    }

    fn toft(&self) -> bool {
        let s = &self.s;
        let defect = self.defect();
        let b = defect >= self.zero() && defect.times(2) <= self.one;
        let (c, d, e) = self.toft_cde();
        let edge = defect.times(self.n);
        let slack = s[1] + s[2] - s[0] - edge;
        let f = !(defect > self.zero() && (s[1] == edge || s[2] == edge || -s[0] == edge)) || slack > self.zero();
        self.holder() && b && c && d && e && f
    }

    fn all_equal(&self) -> bool {
        (1..3).all(|i| self.s[i] == self.s[0] && self.rp[i] == self.rp[0] && self.rq[i] == self.rq[0])
    }

    fn nec1_violated(&self) -> bool {
        let (c, d, _) = self.toft_cde();
        let s = &self.s;
        self.same_q() && !(c && d && s[1] + s[2] - s[0] >= self.n_qprime(self.rq[0]))
    }

    /// Multiplier setting: factor `b` lives in the target space, `p, q < ∞`.
    fn nec2_violated(&self, a: usize, b: usize) -> bool {
        let rq = self.rq[0];
        if !self.same_q() || self.is_inf(rq) || self.is_inf(self.rp[0]) || self.rp[b] != self.rp[0] || self.s[b] != self.s[0] {
            return false;
        }
        !((self.is_one(rq) && self.s[a] >= self.zero()) || (!self.is_one(rq) && self.s[a] > self.n_qprime(rq)))
    }

    fn evaluate(&self) -> (RuleSet, RuleSet) {
        let mut sufficient = RuleSet::default();
        let mut violated = RuleSet::default();
        if self.alg12() {
            sufficient.push("ALG12", cite::ALG12);
        }
        if self.alg20(1, 2) || self.alg20(2, 1) {
            sufficient.push("ALG20", cite::ALG20);
        }
        let equal = self.all_equal();
        let algebra = self.linfty(self.s[0], self.rq[0]);
        if equal && algebra {
            sufficient.push("MULT2", cite::MULT2);
        }
        if self.mult6() {
            sufficient.push("MULT6", cite::MULT6);
        }
        if self.mult8(1, 2) || self.mult8(2, 1) {
            sufficient.push("MULT8", cite::MULT8);
        }
        let zero_s = self.all_zero_s();
        let coni_ok = self.coni_ok();
        if zero_s && coni_ok {
            sufficient.push("CONI", cite::CONI);
        }
        if self.iwabuchi1(1) || self.iwabuchi1(2) {
            sufficient.push("IWABUCHI-I", cite::IWA1);
        }
        if self.iwabuchi2() {
            sufficient.push("IWABUCHI-II", cite::IWA2);
        }
        if self.toft() {
            sufficient.push("TOFT", cite::TOFT);
        }

        if self.nec1_violated() {
            violated.push("NEC-I", cite::NEC1);
        }
        if self.nec2_violated(1, 2) || self.nec2_violated(2, 1) {
            violated.push("NEC-II", cite::NEC2);
        }
        let (c, d, e) = self.toft_cde();
        if !(c && d && e) {
            violated.push("TOFT-II", cite::TOFT2);
        }
        if zero_s && !coni_ok {
            violated.push("CONI", cite::CONI);
        }
        if equal && !algebra {
            violated.push("MULT2", cite::MULT2);
        }
        (sufficient, violated)
    }
}

type RuleId = (&'static str, &'static str);

/// Fixed-capacity rule list; evaluation allocates nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSet {
    items: [Option<RuleId>; 10],
    len: usize,
}

impl RuleSet {
    fn push(&mut self, id: &'static str, citation: &'static str) {
        self.items[self.len] = Some((id, citation));
        self.len += 1;
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ids(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.items[..self.len].iter().flatten().map(|r| r.0)
    }

    fn refs(&self) -> Vec<RuleRef> {
        self.items[..self.len].iter().flatten().map(|r| RuleRef::new(r.0, r.1)).collect()
    }
}

/// Sufficient rules that fire and necessary rules that are violated.
pub fn evaluate_rules(x: &ProductQuery) -> (RuleSet, RuleSet) {
    let exact = Facts::exact(x);
    match exact.scaled() {
        Some(fast) => fast.evaluate(),
        None => exact.evaluate(),
    }
}

/// Holds if a sufficient rule fires, Fails if a necessary rule is violated,
/// Unknown otherwise; both at once is an internal inconsistency.
pub fn product_verdict(query: &ProductQuery) -> Result<Verdict> {
    let (sufficient, violated) = evaluate_rules(query);
    match (sufficient.is_empty(), violated.is_empty()) {
        (false, false) => Err(Error::Inconsistent {
            sufficient: sufficient.ids().map(String::from).collect(),
            necessary: violated.ids().map(String::from).collect(),
        }),
        (false, true) => Ok(Verdict::holds(sufficient.refs())),
        (true, false) => Ok(Verdict::fails(violated.refs())),
        (true, true) => Ok(Verdict {
            status: Status::Unknown,
            rules: Vec::new(),
            notes: vec!["no sufficient rule fires and no necessary rule is violated".into()],
        }),
    }
}

/// `t_m(s) = s + (m - 1)(s - n/q')`.
pub fn t_m(s: Rational, m: u32, q: ExtendedExponent, n: usize) -> Result<Rational> {
    if m < 2 {
        return Err(Error::InvalidParameters(format!("m = {m} must be >= 2")));
    }
    Ok(s + Rational::from_integer(m as i64 - 1) * (s - n_over_qprime(n, q)))
}

/// Growth exponent `E` of `‖e^{iu} - 1‖` and the measure exponent `1 + E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperpositionExponent {
    #[serde(with = "crate::exponent::rational_str")]
    pub growth: Rational,
    #[serde(with = "crate::exponent::rational_str")]
    pub measure: Rational,
}

/// `E = (s + n/q)(1 + 1/(s - n/q'))`; undefined for `s <= n/q'`.
pub fn superposition_exponent(s: Rational, q: ExtendedExponent, n: usize) -> Result<SuperpositionExponent> {
    let gap = s - n_over_qprime(n, q);
    if gap <= Rational::zero() {
        return Err(Error::Pole);
    }
    let growth = (s + nr(n) * q.recip()) * (Rational::one() + gap.recip());
    Ok(SuperpositionExponent {
        growth,
        measure: Rational::one() + growth,
    })
}

/// Smoothness threshold `3/2 + E` on the Fourier side.
pub fn besov_threshold(s: Rational, q: ExtendedExponent, n: usize) -> Result<Rational> {
    Ok(Rational::new(3, 2) + superposition_exponent(s, q, n)?.growth)
}

/// `E < α` (strict).
pub fn power_alpha_ok(alpha: Rational, s: Rational, q: ExtendedExponent, n: usize) -> Result<Verdict> {
    let e = superposition_exponent(s, q, n)?.growth;
    let rule = RuleRef::new("BEISPIEL", "Corollary beispiel: (s + n/q)(1 + 1/(s - n/q')) < alpha");
    Ok(if e < alpha {
        Verdict::holds(vec![rule])
    } else {
        Verdict::fails(vec![rule])
    })
}

/// One multiplication `g^k · g` in the power chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub k: u32,
    pub query: ProductQuery,
    pub verdict: Verdict,
}

/// Builds `g^m` by `m - 1` multiplications with the split
/// `u_k = t_k(s) - (k - 1) δ/(m - 1)`, `δ = t_m(s) - t`, and checks each step.
pub fn algebra13_chain(
    s: Rational,
    p: ExtendedExponent,
    q: ExtendedExponent,
    n: usize,
    m: u32,
    t: Rational,
) -> Result<Vec<ChainStep>> {
    let zero = Rational::zero();
    let top = t_m(s, m, q, n)?;
    if q.is_one() || s <= zero || s > n_over_qprime(n, q) || top <= zero {
        return Err(Error::Precondition(format!(
            "need 1 < q, 0 < s <= n/q' and t_m(s) > 0 (s = {s}, q = {q}, m = {m})"
        )));
    }
    if t < zero || t >= top {
        return Err(Error::Precondition(format!("target {t} outside [0, t_m(s) = {top})")));
    }
    if p < ExtendedExponent::int(m as i64) {
        return Err(Error::Precondition(format!("p = {p} below m = {m}")));
    }
    let delta = top - t;
    let u = |k: u32| -> Result<Rational> {
        if k == 1 {
            return Ok(s);
        }
        Ok(t_m(s, k, q, n)? - delta * Rational::new(k as i64 - 1, m as i64 - 1))
    };
    let mut steps = Vec::new();
    for k in 1..m {
        let f = SpaceParams::new(u(k)?, p.div_int(k as i64)?, q, n);
        let g = SpaceParams::new(s, p, q, n);
        let target = SpaceParams::new(u(k + 1)?, p.div_int(k as i64 + 1)?, q, n);
        let query = ProductQuery::new(f, g, target)?;
        let verdict = product_verdict(&query)?;
        steps.push(ChainStep { k, query, verdict });
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponent::{rat, INF};

    fn e(v: i64) -> ExtendedExponent {
        ExtendedExponent::int(v)
    }

    fn sp(s: Rational, p: ExtendedExponent, q: ExtendedExponent, n: usize) -> SpaceParams {
        SpaceParams::new(s, p, q, n)
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate(e(2)), e(2));
        assert_eq!(conjugate(e(1)), INF);
        assert_eq!(conjugate(ExtendedExponent::ratio(4, 3)), e(4));
    }

    #[test]
    fn embedding_examples() {
        let v = embeds(sp(rat(1, 1), e(2), e(1), 1), sp(rat(0, 1), e(2), e(1), 1)).unwrap();
        assert!(v.is_holds());
        let a = sp(rat(-1, 2), ExtendedExponent::ratio(4, 3), e(4), 2);
        assert!(embeds(a, a).unwrap().is_holds());
        let v = embeds(sp(rat(0, 1), e(1), e(1), 1), sp(rat(0, 1), INF, INF, 1)).unwrap();
        assert!(v.is_holds());
        assert!(v.rule_ids().contains(&"MONO"));
        assert!(embeds(sp(rat(0, 1), e(1), e(1), 1), sp(rat(0, 1), e(1), e(1), 2)).is_err());
    }

    /// The printed criterion accepts `M^0_{2,1} ↪ M^{1/2}_{2,∞}` in n = 1,
    /// which the positive-part variant rejects.
    #[test]
    fn printed_embedding_form_is_pinned() {
        let v = embeds(sp(rat(0, 1), e(2), e(1), 1), sp(rat(1, 2), e(2), INF, 1)).unwrap();
        assert!(v.is_holds());
        assert_eq!(v.notes.len(), 1);
        let v = embeds(sp(rat(0, 1), e(2), e(2), 1), sp(rat(0, 1), e(2), e(1), 1)).unwrap();
        assert!(v.is_fails());
        assert!(v.notes.is_empty());
    }

    #[test]
    fn linfty_and_algebra() {
        for p in [e(1), e(3), INF] {
            assert!(embeds_into_linfty(sp(rat(0, 1), p, e(1), 1)).is_holds());
        }
        let q = e(3);
        assert!(embeds_into_linfty(sp(rat(2, 3), e(2), q, 1)).is_fails());
        assert!(embeds_into_linfty(sp(rat(1, 1), e(2), INF, 1)).is_fails());
        assert!(is_algebra(sp(rat(7, 10), e(2), e(2), 1)).is_holds());
        assert!(is_algebra(sp(rat(1, 2), e(2), e(2), 1)).is_fails());
        assert!(is_algebra(sp(rat(0, 1), e(2), e(1), 1)).is_holds());
    }

    #[test]
    fn product_examples() {
        let one = sp(rat(1, 1), e(2), e(2), 1);
        let v = product_verdict(&ProductQuery::algebra(one)).unwrap();
        assert!(v.is_holds() && v.rule_ids().contains(&"ALG12"));

        let zero = sp(rat(0, 1), e(2), e(2), 1);
        let v = product_verdict(&ProductQuery::algebra(zero)).unwrap();
        assert!(v.is_fails() && v.rule_ids().contains(&"CONI"));

        let q = e(3);
        let edge = sp(rat(2, 3), e(2), q, 1);
        let v = product_verdict(&ProductQuery::algebra(edge)).unwrap();
        assert!(v.is_fails() && v.rule_ids().contains(&"NEC-II"));
    }

    #[test]
    fn gap_is_unknown() {
        // s1 + s2 - s0 = n/q' exactly, p = ∞ so the multiplier argument is unavailable
        let f = sp(rat(1, 2), e(2), e(2), 1);
        let g = sp(rat(1, 2), e(2), e(2), 1);
        let t = sp(rat(1, 2), INF, e(2), 1);
        let v = product_verdict(&ProductQuery::new(f, g, t).unwrap()).unwrap();
        assert_eq!(v.status, Status::Unknown);
    }

    #[test]
    fn exponent_calculators() {
        assert_eq!(t_m(rat(3, 1), 3, e(2), 1).unwrap(), rat(8, 1));
        let s = rat(2, 3);
        assert_eq!(t_m(s, 5, e(3), 1).unwrap(), s);
        assert_eq!(t_m(rat(2, 5), 2, e(2), 1).unwrap(), rat(3, 10));
        assert!(t_m(s, 1, e(2), 1).is_err());
        let x = superposition_exponent(rat(1, 1), e(2), 1).unwrap();
        assert_eq!(x.growth, rat(9, 2));
        assert_eq!(x.measure, rat(11, 2));
        assert_eq!(superposition_exponent(rat(1, 2), e(2), 1), Err(Error::Pole));
        assert_eq!(besov_threshold(rat(1, 1), e(2), 1).unwrap(), rat(6, 1));
        assert!(power_alpha_ok(rat(9, 2), rat(1, 1), e(2), 1).unwrap().is_fails());
        assert!(power_alpha_ok(rat(5, 1), rat(1, 1), e(2), 1).unwrap().is_holds());
    }

    #[test]
    fn chain_holds_below_t_m() {
        let steps = algebra13_chain(rat(2, 5), e(4), e(2), 1, 2, rat(1, 4)).unwrap();
        assert_eq!(steps.len(), 1);
        assert!(steps[0].verdict.rule_ids().contains(&"ALG12"));
        assert!(algebra13_chain(rat(2, 5), e(4), e(2), 1, 2, rat(3, 10)).is_err());
    }

    #[test]
    fn rule_set_is_consistent_on_exhaustive_grid() {
        let ss: Vec<Rational> = [(-2, 1), (-1, 1), (-1, 2), (0, 1), (1, 2), (1, 1), (2, 1)]
            .iter()
            .map(|&(a, b)| rat(a, b))
            .collect();
        let ex = [e(1), ExtendedExponent::ratio(4, 3), e(2), e(4), INF];
        let start = std::time::Instant::now();
        let mut counts = [0usize; 3];
        for n in [1usize, 2] {
            for &s0 in &ss {
                for &s1 in &ss {
                    for &s2 in &ss {
                for &q0 in &ex {
                    for &q1 in &ex {
                        for &q2 in &ex {
                            for &p0 in &ex {
                                for &p1 in &ex {
                                    for &p2 in &ex {
                                        let x = ProductQuery {
                                            f: sp(s1, p1, q1, n),
                                            g: sp(s2, p2, q2, n),
                                            target: sp(s0, p0, q0, n),
                                        };
                                        let (suff, viol) = evaluate_rules(&x);
                                        match (suff.is_empty(), viol.is_empty()) {
                                            (false, false) => panic!(
                                                "inconsistent at {x:?}: {:?} vs {:?}",
                                                suff.ids().collect::<Vec<_>>(),
                                                viol.ids().collect::<Vec<_>>()
                                            ),
                                            (false, true) => counts[0] += 1,
                                            (true, false) => counts[1] += 1,
                                            (true, true) => counts[2] += 1,
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                    }
                }
            }
        }
        let elapsed = start.elapsed();
        eprintln!("holds/fails/unknown = {counts:?} in {elapsed:?}");
        assert_eq!(counts.iter().sum::<usize>(), 2 * 343 * 125 * 125);
        assert!(elapsed.as_secs_f64() < 5.0, "grid took {elapsed:?}");
    }

    #[test]
    fn scaled_and_exact_paths_agree() {
        let ex = [e(1), ExtendedExponent::ratio(3, 2), e(3), INF];
        let ss = [rat(-3, 7), rat(0, 1), rat(2, 5), rat(5, 3)];
        for &q in &ex {
            for &q1 in &ex {
                for &s0 in &ss {
                    for &s1 in &ss {
                        let x = ProductQuery {
                            f: sp(s1, e(2), q1, 2),
                            g: sp(s1, e(3), q, 2),
                            target: sp(s0, ExtendedExponent::ratio(6, 5), q, 2),
                        };
                        let exact = Facts::exact(&x);
                        let (a, b) = exact.evaluate();
                        let (c, d) = exact.scaled().unwrap().evaluate();
                        assert!(a.ids().eq(c.ids()) && b.ids().eq(d.ids()), "{x:?}");
                    }
                }
            }
        }
        let huge = rat(1, i64::MAX / 3);
        let x = ProductQuery::algebra(sp(huge, e(2), e(2), 1));
        assert!(Facts::exact(&x).scaled().is_none());
        assert!(product_verdict(&x).unwrap().is_fails());
    }
}
