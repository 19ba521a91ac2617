//! Truncated multivariate Taylor series ("jets") with complex coefficients.
//!
//! A [`JetSpec`] fixes which multi-indices are stored: every variable is
//! either absent (the quantity is exactly independent of it) or present
//! with a degree cap, and groups of variables may share a total-degree
//! cap. Coefficients are Taylor coefficients (partials divided by the
//! factorial of the multi-index) stored densely over the capped lattice.
//!
//! Binary operations between jets of different specs first project both
//! operands onto the meet spec: present caps take the minimum, an absent
//! variable defers to the other operand. This makes the order bookkeeping
//! of nested differentiation automatic.
//!
//! Elementary functions expand the univariate Taylor series of the function
//! around the point value in powers of the nilpotent remainder.

use std::borrow::Cow;
use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::kernel::{re, Scalar, C64};

/// Maximum number of independent variables.
pub const MAX_VARS: usize = 7;
const MAX_GROUPS: usize = 4;
const ABSENT: u8 = u8::MAX;
const NONE: u32 = u32::MAX;

/// Variable slots. The last four slots are the auxiliary block of the
/// correspondence cascade; `C2` also carries `c4` when the roles of the two
/// are exchanged.
pub const U: usize = 0;
pub const V: usize = 1;
pub const W: usize = 2;
pub const C1: usize = 3;
pub const C2: usize = 4;
pub const P: usize = 5;
pub const Q: usize = 6;

/// Display names of the slots.
pub const VAR_NAMES: [&str; MAX_VARS] = ["u", "v", "w", "c1", "c2", "p", "q"];

/// Relative threshold below which a value counts as zero for poles and
/// branch points.
pub const POLE_EPS: f64 = 1e-13;

pub type MultiIndex = [u8; MAX_VARS];

/// Canonical description of a capped lattice.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct SpecKey {
    caps: [u8; MAX_VARS],
    groups: [(u8, u8); MAX_GROUPS],
}

impl SpecKey {
    const CONSTANT: SpecKey = SpecKey { caps: [ABSENT; MAX_VARS], groups: [(0, 0); MAX_GROUPS] };

    fn build(caps: [u8; MAX_VARS], groups: &[(u8, u8)]) -> SpecKey {
        let mut caps = caps;
        let mut gs: Vec<(u8, u8)> = Vec::new();
        for &(mask, total) in groups {
            let present: Vec<usize> =
                (0..MAX_VARS).filter(|&i| mask & (1 << i) != 0 && caps[i] != ABSENT).collect();
            let live: u8 = present.iter().fold(0, |acc, &i| acc | (1 << i));
            if live == 0 {
                continue;
            }
            for i in present {
                caps[i] = caps[i].min(total);
            }
            match gs.iter_mut().find(|g| g.0 == live) {
                Some(g) => g.1 = g.1.min(total),
                None => gs.push((live, total)),
            }
        }
        // A group whose cap is implied by the member caps carries no information.
        gs.retain(|&(mask, total)| {
            let sum: u32 = (0..MAX_VARS)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| caps[i] as u32)
                .sum();
            sum > total as u32 && mask.count_ones() > 1
        });
        gs.sort_unstable_by(|a, b| b.cmp(a));
        assert!(gs.len() <= MAX_GROUPS, "too many total-degree groups in a jet spec");
        let mut groups = [(0u8, 0u8); MAX_GROUPS];
        for (slot, g) in groups.iter_mut().zip(gs) {
            *slot = g;
        }
        SpecKey { caps, groups }
    }

    fn live_groups(&self) -> impl Iterator<Item = (u8, u8)> + '_ {
        self.groups.iter().copied().filter(|g| g.0 != 0)
    }

    fn meet(a: SpecKey, b: SpecKey) -> SpecKey {
        let mut caps = [ABSENT; MAX_VARS];
        for (i, c) in caps.iter_mut().enumerate() {
            *c = match (a.caps[i], b.caps[i]) {
                (ABSENT, x) | (x, ABSENT) => x,
                (x, y) => x.min(y),
            };
        }
        let groups: Vec<(u8, u8)> = a.live_groups().chain(b.live_groups()).collect();
        SpecKey::build(caps, &groups)
    }

    fn admits(&self, m: &MultiIndex) -> bool {
        for i in 0..MAX_VARS {
            let cap = if self.caps[i] == ABSENT { 0 } else { self.caps[i] };
            if m[i] > cap {
                return false;
            }
        }
        self.live_groups().all(|(mask, total)| {
            let s: u32 = (0..MAX_VARS).filter(|&i| mask & (1 << i) != 0).map(|i| m[i] as u32).sum();
            s <= total as u32
        })
    }
}

/// A capped multi-index lattice with a dense coefficient layout.
#[derive(Debug)]
pub struct JetSpec {
    key: SpecKey,
    multis: Vec<MultiIndex>,
    dims: [usize; MAX_VARS],
    strides: [usize; MAX_VARS],
    dense: Vec<u32>,
    max_degree: usize,
    mul: OnceLock<Vec<(u32, u32, u32)>>,
}

thread_local! {
    static SPECS: RefCell<HashMap<SpecKey, Arc<JetSpec>>> = RefCell::new(HashMap::new());
    static MEETS: RefCell<HashMap<(SpecKey, SpecKey), Arc<JetSpec>>> = RefCell::new(HashMap::new());
    static PROJECTIONS: RefCell<HashMap<(SpecKey, SpecKey), Arc<Vec<u32>>>> =
        RefCell::new(HashMap::new());
}

fn degree(m: &MultiIndex) -> usize {
    m.iter().map(|&x| x as usize).sum()
}

impl JetSpec {
    fn intern(key: SpecKey) -> Arc<JetSpec> {
        SPECS.with(|s| {
            s.borrow_mut().entry(key).or_insert_with(|| Arc::new(JetSpec::layout(key))).clone()
        })
    }

    fn layout(key: SpecKey) -> JetSpec {
        let mut dims = [1usize; MAX_VARS];
        for i in 0..MAX_VARS {
            if key.caps[i] != ABSENT {
                dims[i] = key.caps[i] as usize + 1;
            }
        }
        let mut strides = [0usize; MAX_VARS];
        let mut total = 1usize;
        for i in 0..MAX_VARS {
            strides[i] = total;
            total *= dims[i];
        }
        let mut multis = Vec::new();
        for flat in 0..total {
            let mut m = [0u8; MAX_VARS];
            for i in 0..MAX_VARS {
                m[i] = ((flat / strides[i]) % dims[i]) as u8;
            }
            if key.admits(&m) {
                multis.push(m);
            }
        }
        multis.sort_by(|a, b| degree(a).cmp(&degree(b)).then(a.cmp(b)));
        let mut dense = vec![NONE; total];
        for (k, m) in multis.iter().enumerate() {
            let flat: usize = (0..MAX_VARS).map(|i| m[i] as usize * strides[i]).sum();
            dense[flat] = k as u32;
        }
        let max_degree = multis.iter().map(degree).max().unwrap_or(0);
        JetSpec { key, multis, dims, strides, dense, max_degree, mul: OnceLock::new() }
    }

    /// Spec with per-variable caps and shared total-degree caps.
    pub fn new(caps: &[(usize, u8)], groups: &[(&[usize], u8)]) -> Arc<JetSpec> {
        let mut c = [ABSENT; MAX_VARS];
        for &(i, cap) in caps {
            c[i] = cap;
        }
        let gs: Vec<(u8, u8)> = groups
            .iter()
            .map(|(vars, total)| (vars.iter().fold(0u8, |acc, &i| acc | (1 << i)), *total))
            .collect();
        JetSpec::intern(SpecKey::build(c, &gs))
    }

    /// The spec of exact constants.
    pub fn constant() -> Arc<JetSpec> {
        JetSpec::intern(SpecKey::CONSTANT)
    }

    /// Total order `order` in (u, v).
    pub fn uv(order: u8) -> Arc<JetSpec> {
        JetSpec::new(&[(U, order), (V, order)], &[(&[U, V], order)])
    }

    /// Total order `order` in (u, v, w).
    pub fn uvw(order: u8) -> Arc<JetSpec> {
        JetSpec::new(&[(U, order), (V, order), (W, order)], &[(&[U, V, W], order)])
    }

    /// Total order `o_uvw` in (u, v, w) and `o_c` in (c1, c2).
    pub fn uvw_c(o_uvw: u8, o_c: u8) -> Arc<JetSpec> {
        JetSpec::new(
            &[(U, o_uvw), (V, o_uvw), (W, o_uvw), (C1, o_c), (C2, o_c)],
            &[(&[U, V, W], o_uvw), (&[C1, C2], o_c)],
        )
    }

    /// Total order `o_uvw` in (u, v, w) and `o_c` in the whole auxiliary block.
    pub fn cascade(o_uvw: u8, o_c: u8) -> Arc<JetSpec> {
        JetSpec::new(
            &[(U, o_uvw), (V, o_uvw), (W, o_uvw), (C1, o_c), (C2, o_c), (P, o_c), (Q, o_c)],
            &[(&[U, V, W], o_uvw), (&[C1, C2, P, Q], o_c)],
        )
    }

    pub fn key(&self) -> SpecKey {
        self.key
    }

    pub fn len(&self) -> usize {
        self.multis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multis.is_empty()
    }

    pub fn multis(&self) -> &[MultiIndex] {
        &self.multis
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Cap of a variable, `None` when absent.
    pub fn cap(&self, var: usize) -> Option<u8> {
        (self.key.caps[var] != ABSENT).then_some(self.key.caps[var])
    }

    pub fn index_of(&self, m: &MultiIndex) -> Option<usize> {
        let mut flat = 0;
        for i in 0..MAX_VARS {
            let a = m[i] as usize;
            if a >= self.dims[i] {
                return None;
            }
            flat += a * self.strides[i];
        }
        let k = self.dense[flat];
        (k != NONE).then_some(k as usize)
    }

    fn mul_table(&self) -> &[(u32, u32, u32)] {
        self.mul.get_or_init(|| {
            let mut t = Vec::new();
            for (i, a) in self.multis.iter().enumerate() {
                for (j, b) in self.multis.iter().enumerate() {
                    if degree(a) + degree(b) > self.max_degree {
                        break;
                    }
                    let mut s = [0u8; MAX_VARS];
                    for v in 0..MAX_VARS {
                        s[v] = a[v] + b[v];
                    }
                    if let Some(k) = self.index_of(&s) {
                        t.push((i as u32, j as u32, k as u32));
                    }
                }
            }
            t
        })
    }
}

fn meet_spec(a: &Arc<JetSpec>, b: &Arc<JetSpec>) -> Arc<JetSpec> {
    let key = (a.key, b.key);
    MEETS.with(|m| {
        if let Some(s) = m.borrow().get(&key) {
            return s.clone();
        }
        let s = JetSpec::intern(SpecKey::meet(a.key, b.key));
        m.borrow_mut().insert(key, s.clone());
        s
    })
}

fn projection(from: &JetSpec, to: &JetSpec) -> Arc<Vec<u32>> {
    PROJECTIONS.with(|p| {
        p.borrow_mut()
            .entry((from.key, to.key))
            .or_insert_with(|| {
                Arc::new(
                    to.multis
                        .iter()
                        .map(|m| from.index_of(m).map_or(NONE, |k| k as u32))
                        .collect(),
                )
            })
            .clone()
    })
}

/// A truncated Taylor expansion at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    spec: Arc<JetSpec>,
    c: Vec<C64>,
}

impl Jet {
    /// An exact constant, compatible with every spec.
    pub fn constant(v: C64) -> Jet {
        Jet { spec: JetSpec::constant(), c: vec![v] }
    }

    /// A constant laid out in `spec`.
    pub fn constant_in(spec: &Arc<JetSpec>, v: C64) -> Jet {
        let mut c = vec![re(0.0); spec.len()];
        c[0] = v;
        Jet { spec: spec.clone(), c }
    }

    /// The coordinate function of `var` at `value`.
    pub fn seed(spec: &Arc<JetSpec>, var: usize, value: C64) -> Result<Jet> {
        match spec.cap(var) {
            Some(c) if c >= 1 => {}
            _ => return Err(Error::ZeroCap(var)),
        }
        let mut j = Jet::constant_in(spec, value);
        let mut m = [0u8; MAX_VARS];
        m[var] = 1;
        let k = spec.index_of(&m).ok_or(Error::ZeroCap(var))?;
        j.c[k] = re(1.0);
        Ok(j)
    }

    /// Build from Taylor coefficients in the spec's order.
    pub fn from_coeffs(spec: &Arc<JetSpec>, c: Vec<C64>) -> Jet {
        assert_eq!(c.len(), spec.len(), "coefficient count does not match the spec");
        Jet { spec: spec.clone(), c }
    }

    pub fn spec(&self) -> &Arc<JetSpec> {
        &self.spec
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    fn is_exact_constant(&self) -> bool {
        self.spec.key == SpecKey::CONSTANT
    }

    /// Taylor coefficient; zero for variables the jet does not depend on.
    pub fn coeff(&self, m: &MultiIndex) -> Result<C64> {
        if let Some(k) = self.spec.index_of(m) {
            return Ok(self.c[k]);
        }
        let only_absent = (0..MAX_VARS).all(|i| m[i] == 0 || self.spec.cap(i).is_some());
        if only_absent {
            Err(Error::OutOfCaps)
        } else {
            Ok(re(0.0))
        }
    }

    /// Partial derivative: Taylor coefficient times the multi-index factorial.
    pub fn extract_partial(&self, m: &[u8]) -> Result<C64> {
        let mut mi = [0u8; MAX_VARS];
        mi[..m.len()].copy_from_slice(m);
        let fact: f64 = mi.iter().map(|&a| (1..=a as u32).product::<u32>() as f64).product();
        Ok(self.coeff(&mi)? * fact)
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Exact partial derivative in `var`, one order lower.
    pub fn derivative(&self, var: usize) -> Result<Jet> {
        let cap = self.spec.key.caps[var];
        if cap == ABSENT {
            return Ok(Jet::constant(re(0.0)));
        }
        if cap == 0 {
            return Err(Error::InsufficientOrder(var));
        }
        let mut caps = self.spec.key.caps;
        caps[var] -= 1;
        let mut gs: Vec<(u8, u8)> = Vec::new();
        for (mask, total) in self.spec.key.live_groups() {
            if mask & (1 << var) != 0 {
                if total == 0 {
                    return Err(Error::InsufficientOrder(var));
                }
                gs.push((mask, total - 1));
            } else {
                gs.push((mask, total));
            }
        }
        let spec = JetSpec::intern(SpecKey::build(caps, &gs));
        let mut out = vec![re(0.0); spec.len()];
        for (k, m) in spec.multis.iter().enumerate() {
            let mut up = *m;
            up[var] += 1;
            if let Some(src) = self.spec.index_of(&up) {
                out[k] = self.c[src] * (up[var] as f64);
            }
        }
        Ok(Jet { spec, c: out })
    }

    /// Project onto another spec; coefficients outside `self` become zero.
    pub fn project(&self, to: &Arc<JetSpec>) -> Jet {
        if Arc::ptr_eq(&self.spec, to) || self.spec.key == to.key {
            return self.clone();
        }
        Jet { spec: to.clone(), c: self.projected(to).into_owned() }
    }

    fn projected(&self, to: &Arc<JetSpec>) -> Cow<'_, [C64]> {
        if self.spec.key == to.key {
            return Cow::Borrowed(&self.c);
        }
        let map = projection(&self.spec, to);
        Cow::Owned(map.iter().map(|&k| if k == NONE { re(0.0) } else { self.c[k as usize] }).collect())
    }

    fn zip(&self, o: &Jet, f: impl Fn(C64, C64) -> C64) -> Jet {
        if self.spec.key == o.spec.key {
            let c = self.c.iter().zip(&o.c).map(|(a, b)| f(*a, *b)).collect();
            return Jet { spec: self.spec.clone(), c };
        }
        let spec = meet_spec(&self.spec, &o.spec);
        let a = self.projected(&spec);
        let b = o.projected(&spec);
        let c = a.iter().zip(b.iter()).map(|(x, y)| f(*x, *y)).collect();
        Jet { spec, c }
    }

    pub fn add_j(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub_j(&self, o: &Jet) -> Jet {
        self.zip(o, |a, b| a - b)
    }

    pub fn mul_j(&self, o: &Jet) -> Jet {
        if o.is_exact_constant() {
            return self.scale_c(o.c[0]);
        }
        if self.is_exact_constant() {
            return o.scale_c(self.c[0]);
        }
        let (spec, a, b) = if self.spec.key == o.spec.key {
            (self.spec.clone(), Cow::Borrowed(&self.c[..]), Cow::Borrowed(&o.c[..]))
        } else {
            let s = meet_spec(&self.spec, &o.spec);
            let a = self.projected(&s).into_owned();
            let b = o.projected(&s).into_owned();
            (s, Cow::Owned(a), Cow::Owned(b))
        };
        let mut c = vec![re(0.0); spec.len()];
        for &(i, j, k) in spec.mul_table() {
            c[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet { spec, c }
    }

    pub fn scale_c(&self, s: C64) -> Jet {
        Jet { spec: self.spec.clone(), c: self.c.iter().map(|z| z * s).collect() }
    }

    pub fn shift_c(&self, s: C64) -> Jet {
        let mut j = self.clone();
        j.c[0] += s;
        j
    }

    pub fn neg_j(&self) -> Jet {
        self.scale_c(re(-1.0))
    }

    /// `sum_k f[k] (self - value)^k`, truncated to the spec.
    fn compose(&self, f: &[C64]) -> Jet {
        let d = self.spec.max_degree.min(f.len() - 1);
        let mut h = self.clone();
        h.c[0] = re(0.0);
        let mut acc = Jet::constant_in(&self.spec, f[d]);
        for k in (0..d).rev() {
            acc = acc.mul_j(&h);
            acc.c[0] += f[k];
        }
        acc
    }

    fn near_zero(&self) -> bool {
        let a0 = self.c[0].norm();
        a0 == 0.0 || a0 <= POLE_EPS * self.max_abs() || !a0.is_finite()
    }

    pub fn recip_j(&self) -> Result<Jet> {
        if self.near_zero() {
            return Err(Error::JetPole(self.c[0].norm()));
        }
        let a0 = self.c[0];
        let d = self.spec.max_degree;
        let inv = a0.inv();
        let mut f = Vec::with_capacity(d + 1);
        let mut t = inv;
        for _ in 0..=d {
            f.push(t);
            t = -t * inv;
        }
        Ok(self.compose(&f))
    }

    /// Principal-branch square root.
    pub fn sqrt_j(&self) -> Result<Jet> {
        if self.near_zero() {
            return Err(Error::JetBranchPoint(self.c[0].norm()));
        }
        let a0 = self.c[0];
        let d = self.spec.max_degree;
        let mut f = Vec::with_capacity(d + 1);
        let mut t = a0.sqrt();
        for k in 0..=d {
            f.push(t);
            t = t * (0.5 - k as f64) / ((k + 1) as f64 * a0);
        }
        Ok(self.compose(&f))
    }

    pub fn exp(&self) -> Jet {
        let d = self.spec.max_degree;
        let e = self.c[0].exp();
        let mut f = Vec::with_capacity(d + 1);
        let mut fact = 1.0;
        for k in 0..=d {
            if k > 0 {
                fact *= k as f64;
            }
            f.push(e / fact);
        }
        self.compose(&f)
    }

    fn cyclic(&self, cycle: [C64; 4]) -> Jet {
        let d = self.spec.max_degree;
        let mut f = Vec::with_capacity(d + 1);
        let mut fact = 1.0;
        for k in 0..=d {
            if k > 0 {
                fact *= k as f64;
            }
            f.push(cycle[k % 4] / fact);
        }
        self.compose(&f)
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = (self.c[0].sin(), self.c[0].cos());
        self.cyclic([s, c, -s, -c])
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = (self.c[0].sin(), self.c[0].cos());
        self.cyclic([c, -s, -c, s])
    }

    pub fn sinh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        self.cyclic([s, c, s, c])
    }

    pub fn cosh(&self) -> Jet {
        let (s, c) = (self.c[0].sinh(), self.c[0].cosh());
        self.cyclic([c, s, c, s])
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = Jet::constant(re(1.0));
        for _ in 0..n {
            acc = acc.mul_j(self);
        }
        acc
    }
}

impl Scalar for Jet {
    fn add(&self, o: &Self) -> Self {
        self.add_j(o)
    }
    fn sub(&self, o: &Self) -> Self {
        self.sub_j(o)
    }
    fn mul(&self, o: &Self) -> Self {
        self.mul_j(o)
    }
    fn neg(&self) -> Self {
        self.neg_j()
    }
    fn scale(&self, s: C64) -> Self {
        self.scale_c(s)
    }
    fn shift(&self, s: C64) -> Self {
        self.shift_c(s)
    }
    fn value(&self) -> C64 {
        self.c[0]
    }
    fn constant_like(&self, v: C64) -> Self {
        Jet::constant(v)
    }
    fn recip(&self) -> Result<Self> {
        self.recip_j()
    }
    fn sqrt(&self) -> Result<Self> {
        self.sqrt_j()
    }
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                self.$f(o)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$f(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                self.$f(o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$f(&o)
            }
        }
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, o: f64) -> Jet {
                self.$f(&Jet::constant(re(o)))
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, o: f64) -> Jet {
                self.$f(&Jet::constant(re(o)))
            }
        }
        impl $tr<C64> for &Jet {
            type Output = Jet;
            fn $m(self, o: C64) -> Jet {
                self.$f(&Jet::constant(o))
            }
        }
        impl $tr<C64> for Jet {
            type Output = Jet;
            fn $m(self, o: C64) -> Jet {
                self.$f(&Jet::constant(o))
            }
        }
    };
}

jet_binop!(Add, add, add_j);
jet_binop!(Sub, sub, sub_j);
jet_binop!(Mul, mul, mul_j);

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.neg_j()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.neg_j()
    }
}

/// Fourth-order central stencils for derivative orders 0..=3, as
/// (offset, weight) pairs before division by `h^order`.
fn stencil(order: u8) -> &'static [(i32, f64)] {
    const S0: [(i32, f64); 1] = [(0, 1.0)];
    const S1: [(i32, f64); 4] =
        [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
    const S2: [(i32, f64); 5] = [
        (-2, -1.0 / 12.0),
        (-1, 16.0 / 12.0),
        (0, -30.0 / 12.0),
        (1, 16.0 / 12.0),
        (2, -1.0 / 12.0),
    ];
    const S3: [(i32, f64); 6] =
        [(-3, 0.125), (-2, -1.0), (-1, 1.625), (1, -1.625), (2, 1.0), (3, -0.125)];
    match order {
        0 => &S0,
        1 => &S1,
        2 => &S2,
        3 => &S3,
        _ => panic!("finite-difference oracle supports orders up to 3"),
    }
}

/// Central finite-difference estimate of a partial derivative; test oracle
/// for the jet engine. The multi-index must have total order at most 3.
pub fn fd_oracle(f: &dyn Fn(&[f64]) -> C64, point: &[f64], multi: &[u8], step: f64) -> C64 {
    let dims: Vec<usize> = (0..point.len()).filter(|&i| multi.get(i).copied().unwrap_or(0) > 0).collect();
    let stencils: Vec<&[(i32, f64)]> = dims.iter().map(|&i| stencil(multi[i])).collect();
    let order: i32 = multi.iter().map(|&a| a as i32).sum();
    let mut acc = re(0.0);
    let mut idx = vec![0usize; dims.len()];
    'outer: loop {
        let mut x = point.to_vec();
        let mut w = 1.0;
        for (d, &var) in dims.iter().enumerate() {
            let (off, wt) = stencils[d][idx[d]];
            x[var] += off as f64 * step;
            w *= wt;
        }
        acc += f(&x) * w;
        for d in 0..dims.len() {
            idx[d] += 1;
            if idx[d] < stencils[d].len() {
                continue 'outer;
            }
            idx[d] = 0;
        }
        break;
    }
    acc / step.powi(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn random_jet(spec: &Arc<JetSpec>, rng: &mut ChaCha8Rng) -> Jet {
        let c = (0..spec.len()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let mut j = Jet::from_coeffs(spec, c);
        j.c[0] += re(2.0);
        j
    }

    #[test]
    fn coefficient_counts() {
        assert_eq!(JetSpec::uvw(6).len(), 84);
        assert_eq!(JetSpec::uv(3).len(), 10);
        assert_eq!(JetSpec::uvw_c(2, 2).len(), 60);
        assert_eq!(JetSpec::constant().len(), 1);
    }

    #[test]
    fn seed_and_square() {
        let s = JetSpec::uv(3);
        let u = Jet::seed(&s, U, re(2.0)).unwrap();
        assert_eq!(u.value(), re(2.0));
        assert_eq!(u.extract_partial(&[1]).unwrap(), re(1.0));
        let sq = &u * &u;
        assert_eq!(sq.value(), re(4.0));
        assert_eq!(sq.extract_partial(&[1]).unwrap(), re(4.0));
        assert_eq!(sq.coeff(&[2, 0, 0, 0, 0, 0, 0]).unwrap(), re(1.0));
        assert_eq!(sq.extract_partial(&[2]).unwrap(), re(2.0));
        let v = Jet::seed(&s, V, re(0.5)).unwrap();
        let uv = &u * &v;
        assert_eq!(uv.extract_partial(&[1, 1]).unwrap(), re(1.0));
        assert_eq!(uv.extract_partial(&[2, 0]).unwrap(), re(0.0));
        assert_eq!(uv.extract_partial(&[0, 2]).unwrap(), re(0.0));
    }

    #[test]
    fn seeding_a_capless_variable_fails() {
        let s = JetSpec::uv(2);
        assert_eq!(Jet::seed(&s, W, re(0.0)).unwrap_err(), Error::ZeroCap(W));
    }

    #[test]
    fn partial_extraction() {
        let s = JetSpec::uvw(3);
        let u = Jet::seed(&s, U, re(0.0)).unwrap();
        let cube = u.powi(3);
        assert_eq!(cube.extract_partial(&[3]).unwrap(), re(6.0));
        assert_eq!(cube.extract_partial(&[]).unwrap(), re(0.0));
        assert_eq!(cube.extract_partial(&[4]).unwrap_err(), Error::OutOfCaps);
    }

    #[test]
    fn sqrt_binomial_series() {
        let s = JetSpec::uv(2);
        let u = Jet::seed(&s, U, re(0.0)).unwrap();
        let r = (&u + 1.0).sqrt_j().unwrap();
        assert!(close(r.coeff(&[0; 7]).unwrap(), re(1.0), 1e-15));
        assert!(close(r.coeff(&[1, 0, 0, 0, 0, 0, 0]).unwrap(), re(0.5), 1e-15));
        assert!(close(r.coeff(&[2, 0, 0, 0, 0, 0, 0]).unwrap(), re(-0.125), 1e-15));
    }

    #[test]
    fn poles_and_branch_points() {
        let s = JetSpec::uv(2);
        let u = Jet::seed(&s, U, re(0.0)).unwrap();
        assert!(matches!(u.recip_j(), Err(Error::JetPole(_))));
        assert!(matches!(u.sqrt_j(), Err(Error::JetBranchPoint(_))));
    }

    #[test]
    fn elementary_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = JetSpec::uvw(4);
        for _ in 0..20 {
            let a = random_jet(&s, &mut rng);
            let rr = a.recip_j().unwrap().recip_j().unwrap();
            let d = &rr - &a;
            assert!(d.max_abs() < 1e-12 * a.max_abs().max(1.0));
            let one = &(&a.sin() * &a.sin()) + &(&a.cos() * &a.cos());
            assert!(close(one.value(), re(1.0), 1e-12));
            assert!(one.c[1..].iter().all(|z| z.norm() < 1e-12));
            let h = &(&a.cosh() * &a.cosh()) - &(&a.sinh() * &a.sinh());
            assert!(h.c[1..].iter().all(|z| z.norm() < 1e-10));
            let s2 = a.sqrt_j().unwrap();
            assert!((&(&s2 * &s2) - &a).max_abs() < 1e-12);
            let e = a.exp();
            let e2 = a.scale_c(re(2.0)).exp();
            assert!((&(&e * &e) - &e2).max_abs() < 1e-10 * e2.max_abs());
        }
    }

    #[test]
    fn ring_axioms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = JetSpec::uvw_c(3, 2);
        for _ in 0..10 {
            let a = random_jet(&s, &mut rng);
            let b = random_jet(&s, &mut rng);
            let c = random_jet(&s, &mut rng);
            let l = &(&a * &b) * &c;
            let r = &a * &(&b * &c);
            assert!((&l - &r).max_abs() < 1e-13 * l.max_abs());
            let l = &a * &(&b + &c);
            let r = &(&a * &b) + &(&a * &c);
            assert!((&l - &r).max_abs() < 1e-13 * l.max_abs());
            assert!((&(&a * &b) - &(&b * &a)).max_abs() < 1e-14 * l.max_abs());
        }
    }

    #[test]
    fn caps_are_respected() {
        let s = JetSpec::uvw_c(2, 1);
        let c1 = Jet::seed(&s, C1, re(0.3)).unwrap();
        let u = Jet::seed(&s, U, re(0.3)).unwrap();
        let p = &(&c1 * &c1) * &(&u * &u);
        assert_eq!(p.spec().len(), s.len());
        assert!(p.spec().multis().iter().all(|m| m[C1] + m[C2] <= 1 && m[U] + m[V] + m[W] <= 2));
    }

    #[test]
    fn absent_variables_defer_in_meets() {
        let big = JetSpec::uvw(4);
        let small = JetSpec::uvw_c(2, 2);
        let u = Jet::seed(&big, U, re(1.0)).unwrap();
        let c = Jet::seed(&small, C1, re(2.0)).unwrap();
        let p = &u * &c;
        assert_eq!(p.spec().cap(U), Some(2));
        assert_eq!(p.spec().cap(C1), Some(2));
        assert_eq!(p.extract_partial(&[1, 0, 0, 1]).unwrap(), re(1.0));
        // A jet independent of c has vanishing c-partials.
        assert_eq!(u.extract_partial(&[0, 0, 0, 1]).unwrap(), re(0.0));
    }

    #[test]
    fn derivative_lowers_caps() {
        let s = JetSpec::uvw(3);
        let u = Jet::seed(&s, U, re(0.5)).unwrap();
        let v = Jet::seed(&s, V, re(0.5)).unwrap();
        let f = &(&u * &u) * &v;
        let fu = f.derivative(U).unwrap();
        assert_eq!(fu.spec().max_degree(), 2);
        assert!(close(fu.value(), re(0.5), 1e-15));
        assert!(close(fu.extract_partial(&[1, 1]).unwrap(), re(2.0), 1e-15));
        assert_eq!(f.derivative(W).unwrap().spec().max_degree(), 2);
        let zero = Jet::constant(re(3.0)).derivative(U).unwrap();
        assert_eq!(zero.value(), re(0.0));
        let top = f.derivative(U).unwrap().derivative(U).unwrap().derivative(U).unwrap();
        assert!(matches!(top.derivative(U), Err(Error::InsufficientOrder(U))));
    }

    #[test]
    fn fd_examples() {
        let sq = |x: &[f64]| re(x[0] * x[0]);
        assert!(close(fd_oracle(&sq, &[1.0], &[1], 1e-5), re(2.0), 1e-9));
        let wfree = |x: &[f64]| re(x[0].sin() * x[1]);
        assert!(fd_oracle(&wfree, &[0.3, 0.2, 0.7], &[0, 0, 1], 1e-3).norm() < 1e-10);
    }

    #[test]
    fn fd_agrees_with_jets_on_polynomials() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = JetSpec::uv(4);
        for _ in 0..5 {
            let coeffs: Vec<C64> = (0..s.len()).map(|_| re(rng.gen_range(-1.0..1.0))).collect();
            let multis = s.multis().to_vec();
            let eval = |x: &[f64]| {
                multis
                    .iter()
                    .zip(&coeffs)
                    .map(|(m, c)| c * x[0].powi(m[0] as i32) * x[1].powi(m[1] as i32))
                    .sum::<C64>()
            };
            let p = [0.3, -0.4];
            let u = Jet::seed(&s, U, re(p[0])).unwrap();
            let v = Jet::seed(&s, V, re(p[1])).unwrap();
            let mut jet = Jet::constant(re(0.0));
            for (m, c) in multis.iter().zip(&coeffs) {
                jet = &jet + &(&(&u.powi(m[0] as u32) * &v.powi(m[1] as u32)) * *c);
            }
            for m in [[1u8, 0], [0, 1], [2, 0], [1, 1], [0, 2]] {
                let fd = fd_oracle(&eval, &p, &m, 1e-3);
                assert!(close(fd, jet.extract_partial(&m).unwrap(), 1e-6));
            }
        }
    }
}
