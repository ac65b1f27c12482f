//! Exact-arithmetic order oracle for two-state members.
//!
//! A two-state generator relaxes along a single exponential, so the action
//! difference between two members reduces, after the substitution
//! `u = exp(-g t)` with a common rational rate `g`, to a polynomial in `u`
//! with rational coefficients. Whether the difference exceeds the order
//! tolerance anywhere on `t > 0` is then the question of whether that
//! polynomial takes positive (or negative) values on the open interval
//! `(0, 1)` — decidable exactly with Sturm root counts on the square-free
//! odd-multiplicity part. Every `f64` input lifts to a rational without
//! rounding, so the verdict carries no floating-point error at all.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Comparison;
use crate::generator::GeneratorMatrix;
use crate::state::{require_same_space, Functional};
use crate::{Error, Result};

/// Largest exponent admitted after commensurating the two relaxation rates.
/// Rate pairs whose ratio reduces to larger integers (typical for arbitrary
/// floating-point rates) are declined rather than ground through enormous
/// polynomials.
pub const EXPONENT_CAP: u32 = 256;

/// Dense polynomial, little-endian coefficients, no trailing zeros.
type Poly = Vec<BigRational>;

fn trim(p: &mut Poly) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn degree(p: &Poly) -> usize {
    p.len().saturating_sub(1)
}

fn eval(p: &Poly, u: &BigRational) -> BigRational {
    let mut acc = BigRational::zero();
    for c in p.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

fn derivative(p: &Poly) -> Poly {
    let mut d: Poly = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
        .collect();
    trim(&mut d);
    d
}

fn negate(p: &Poly) -> Poly {
    p.iter().map(|c| -c).collect()
}

/// Divides by the content so coefficients stay small through Euclid chains.
/// The scaling constant is positive, so sign patterns are untouched.
fn normalize(p: &mut Poly) {
    trim(p);
    if p.is_empty() {
        return;
    }
    let mut denom_lcm = BigInt::one();
    for c in p.iter() {
        denom_lcm = denom_lcm.lcm(c.denom());
    }
    let mut numer_gcd = BigInt::zero();
    for c in p.iter() {
        let scaled = c.numer() * (&denom_lcm / c.denom());
        numer_gcd = numer_gcd.gcd(&scaled);
    }
    if numer_gcd.is_zero() {
        return;
    }
    let scale = BigRational::new(denom_lcm, numer_gcd);
    for c in p.iter_mut() {
        *c *= &scale;
    }
}

/// Remainder of polynomial long division.
fn rem(num: &Poly, den: &Poly) -> Poly {
    let mut r = num.clone();
    trim(&mut r);
    let d = degree(den);
    let lead = &den[d];
    while !r.is_empty() && degree(&r) >= d {
        let shift = degree(&r) - d;
        let factor = &r[degree(&r)] / lead;
        for (i, c) in den.iter().enumerate() {
            let adj = &factor * c;
            r[shift + i] -= adj;
        }
        trim(&mut r);
    }
    r
}

/// Quotient of an exact division; errors if the division leaves a remainder.
fn div_exact(num: &Poly, den: &Poly) -> Result<Poly> {
    let mut r = num.clone();
    trim(&mut r);
    let d = degree(den);
    let lead = &den[d];
    let mut q: Poly = vec![BigRational::zero(); r.len().saturating_sub(d)];
    while !r.is_empty() && degree(&r) >= d {
        let shift = degree(&r) - d;
        let factor = &r[degree(&r)] / lead;
        q[shift] = factor.clone();
        for (i, c) in den.iter().enumerate() {
            let adj = &factor * c;
            r[shift + i] -= adj;
        }
        trim(&mut r);
    }
    if !r.is_empty() {
        return Err(Error::Numerical(
            "polynomial division expected to be exact left a remainder".into(),
        ));
    }
    trim(&mut q);
    Ok(q)
}

fn poly_gcd(a: &Poly, b: &Poly) -> Poly {
    let mut x = a.clone();
    let mut y = b.clone();
    normalize(&mut x);
    normalize(&mut y);
    while !y.is_empty() {
        let mut r = rem(&x, &y);
        normalize(&mut r);
        x = y;
        y = r;
    }
    x
}

fn multiply(a: &Poly, b: &Poly) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

fn subtract(a: &Poly, b: &Poly) -> Poly {
    let mut out = vec![BigRational::zero(); a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] -= c;
    }
    trim(&mut out);
    out
}

/// Square-free decomposition: returns `(i, a_i)` pairs with
/// `p = const * prod a_i^i` and each `a_i` square-free, pairwise coprime.
fn square_free_parts(p: &Poly) -> Result<Vec<(usize, Poly)>> {
    let dp = derivative(p);
    let mut g = poly_gcd(p, &dp);
    if g.is_empty() {
        return Err(Error::Numerical(
            "square-free decomposition of the zero polynomial".into(),
        ));
    }
    if degree(&g) == 0 {
        let mut only = p.clone();
        normalize(&mut only);
        return Ok(vec![(1, only)]);
    }
    normalize(&mut g);
    let mut parts = Vec::new();
    let mut v = div_exact(p, &g)?;
    let mut w = subtract(&div_exact(&dp, &g)?, &derivative(&v));
    let mut i = 1usize;
    while degree(&v) > 0 {
        let mut h = poly_gcd(&v, &w);
        normalize(&mut h);
        if degree(&h) > 0 {
            parts.push((i, h.clone()));
        }
        v = div_exact(&v, &h)?;
        w = subtract(&div_exact(&w, &h)?, &derivative(&v));
        i += 1;
        if i > p.len() + 1 {
            return Err(Error::Numerical(
                "square-free decomposition failed to terminate".into(),
            ));
        }
    }
    Ok(parts)
}

fn sturm_chain(p: &Poly) -> Vec<Poly> {
    let mut chain = Vec::new();
    let mut s0 = p.clone();
    normalize(&mut s0);
    let mut s1 = derivative(&s0);
    normalize(&mut s1);
    chain.push(s0);
    if s1.is_empty() {
        return chain;
    }
    chain.push(s1);
    loop {
        let k = chain.len();
        let mut r = rem(&chain[k - 2], &chain[k - 1]);
        if r.is_empty() {
            return chain;
        }
        r = negate(&r);
        normalize(&mut r);
        chain.push(r);
    }
}

fn sign_variations(chain: &[Poly], u: &BigRational) -> usize {
    let mut count = 0usize;
    let mut last: Option<bool> = None;
    for p in chain {
        let v = eval(p, u);
        if v.is_zero() {
            continue;
        }
        let positive = v.is_positive();
        if let Some(prev) = last {
            if prev != positive {
                count += 1;
            }
        }
        last = Some(positive);
    }
    count
}

/// Whether the polynomial takes positive and/or negative values on the open
/// interval `(0, 1)`.
///
/// The even-multiplicity factors never change the sign, so the question
/// reduces to the square-free product of odd-multiplicity factors, for which
/// signs strictly alternate across its roots: the answer needs only the sign
/// near `0` and a Sturm count of interior roots.
fn sign_presence_on_unit_interval(p: &Poly) -> Result<(bool, bool)> {
    let mut base = p.clone();
    trim(&mut base);
    if base.is_empty() {
        return Ok((false, false));
    }
    // Powers of u are positive on the interval; strip them.
    while base[0].is_zero() {
        base.remove(0);
    }
    if degree(&base) == 0 {
        return Ok((base[0].is_positive(), base[0].is_negative()));
    }

    let parts = square_free_parts(&base)?;
    let mut odd: Poly = vec![BigRational::one()];
    let mut full: Poly = vec![BigRational::one()];
    for (mult, factor) in &parts {
        if mult % 2 == 1 {
            odd = multiply(&odd, factor);
        }
        for _ in 0..*mult {
            full = multiply(&full, factor);
        }
    }
    // The decomposition recovers `base` up to a constant whose sign decides
    // the orientation of the odd part.
    let constant = &base[degree(&base)] / &full[degree(&full)];
    if constant.is_negative() {
        odd = negate(&odd);
    }

    let one = BigRational::one();
    if eval(&odd, &one).is_zero() {
        // Dividing by (u - 1), negative on the interval, flips the sign.
        let linear: Poly = vec![-one.clone(), BigRational::one()];
        odd = negate(&div_exact(&odd, &linear)?);
    }

    if odd.is_empty() || odd[0].is_zero() {
        return Err(Error::Numerical(
            "odd-multiplicity part lost its endpoint normalization".into(),
        ));
    }
    let sign_at_zero = odd[0].is_positive();
    let interior_roots = if degree(&odd) == 0 {
        0usize
    } else {
        let chain = sturm_chain(&odd);
        let v0 = sign_variations(&chain, &BigRational::zero());
        let v1 = sign_variations(&chain, &one);
        if v1 > v0 {
            return Err(Error::Numerical(
                "root count of the odd-multiplicity part is negative".into(),
            ));
        }
        v0 - v1
    };
    if interior_roots >= 1 {
        return Ok((true, true));
    }
    Ok((sign_at_zero, !sign_at_zero))
}

fn lift(value: f64, context: &'static str) -> Result<BigRational> {
    BigRational::from_float(value).ok_or(Error::OutOfDomain {
        context,
        value,
    })
}

struct TwoStateMember {
    /// Total relaxation rate (sum of the two jump rates).
    rate: BigRational,
    /// Expectation of the payoff under the invariant measure; for a frozen
    /// member (zero rates) the curve is constant and this field is unused.
    mean: Option<BigRational>,
}

fn lift_member(l: &GeneratorMatrix, f0: &BigRational, f1: &BigRational) -> Result<TwoStateMember> {
    let up = lift(l.rate(0, 1), "jump rate")?;
    let down = lift(l.rate(1, 0), "jump rate")?;
    let rate = &up + &down;
    let mean = if rate.is_zero() {
        None
    } else {
        Some((&down * f0 + &up * f1) / &rate)
    };
    Ok(TwoStateMember { rate, mean })
}

/// The action curve of one member at one state, as `(constant, u-term)`:
/// `value(t) = constant + coeff * u^exponent` under `u = exp(-g t)`.
fn curve_terms(
    member: &TwoStateMember,
    f_x: &BigRational,
    exponent: usize,
) -> (BigRational, Option<(BigRational, usize)>) {
    match &member.mean {
        None => (f_x.clone(), None),
        Some(mean) => (mean.clone(), Some((f_x - mean, exponent))),
    }
}

/// Compares two two-state members over every positive time in exact rational
/// arithmetic, at the same tolerance the grid comparison uses.
///
/// Returns `Ok(None)` when the two relaxation rates are incommensurate within
/// the exponent cap — arbitrary floating-point rates usually are — and the
/// conclusion must come from the sampled grid alone.
pub fn two_state_compare(
    li: &GeneratorMatrix,
    lj: &GeneratorMatrix,
    payoff: &Functional,
    eps: f64,
) -> Result<Option<Comparison>> {
    require_same_space(li.states(), lj.states(), "exact order oracle")?;
    require_same_space(li.states(), payoff.space(), "exact order oracle")?;
    if li.size() != 2 {
        return Err(Error::DimensionMismatch {
            context: "exact order oracle state count",
            expected: 2,
            got: li.size(),
        });
    }
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::OutOfDomain {
            context: "order tolerance",
            value: eps,
        });
    }

    let f0 = lift(payoff.value(0), "payoff value")?;
    let f1 = lift(payoff.value(1), "payoff value")?;
    let eps_exact = lift(eps, "order tolerance")?;
    let member_i = lift_member(li, &f0, &f1)?;
    let member_j = lift_member(lj, &f0, &f1)?;

    // Commensurate the relaxation rates: rate_i = p * g, rate_j = q * g.
    let (exp_i, exp_j) = match (member_i.rate.is_zero(), member_j.rate.is_zero()) {
        (true, true) => (0usize, 0usize),
        (true, false) => (0, 1),
        (false, true) => (1, 0),
        (false, false) => {
            let ratio = &member_i.rate / &member_j.rate;
            let p = ratio.numer().to_u32().filter(|&v| v <= EXPONENT_CAP);
            let q = ratio.denom().to_u32().filter(|&v| v <= EXPONENT_CAP);
            match (p, q) {
                (Some(p), Some(q)) => (p as usize, q as usize),
                _ => return Ok(None),
            }
        }
    };

    let mut exceeds_up = false;
    let mut exceeds_down = false;
    for f_x in [&f0, &f1] {
        let (const_i, term_i) = curve_terms(&member_i, f_x, exp_i);
        let (const_j, term_j) = curve_terms(&member_j, f_x, exp_j);
        let mut diff: Poly = vec![BigRational::zero(); exp_i.max(exp_j) + 1];
        diff[0] = &const_j - &const_i;
        if let Some((c, e)) = term_j {
            diff[e] += c;
        }
        if let Some((c, e)) = term_i {
            diff[e] -= c;
        }
        trim(&mut diff);

        let mut shifted_down: Poly = diff.clone();
        if shifted_down.is_empty() {
            shifted_down.push(-&eps_exact);
        } else {
            shifted_down[0] -= &eps_exact;
        }
        trim(&mut shifted_down);
        let (up, _) = sign_presence_on_unit_interval(&shifted_down)?;

        let mut shifted_up: Poly = diff;
        if shifted_up.is_empty() {
            shifted_up.push(eps_exact.clone());
        } else {
            shifted_up[0] += &eps_exact;
        }
        trim(&mut shifted_up);
        let (_, down) = sign_presence_on_unit_interval(&shifted_up)?;

        exceeds_up |= up;
        exceeds_down |= down;
    }

    Ok(Some(match (exceeds_up, exceeds_down) {
        (false, false) => Comparison::Equal,
        (true, false) => Comparison::Below,
        (false, true) => Comparison::Above,
        (true, true) => Comparison::Incomparable,
    }))
}
